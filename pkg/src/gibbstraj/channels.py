"""Gibbs-sampling channels, detailed-balance certificates, gaps and mixing bounds."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .linalg import (
    ChannelValidityError,
    InvalidInputError,
    apply_superoperator,
    completeness_residual,
    kraus_from_superoperator,
    to_superoperator,
    trace_norm,
    unvec,
    vec,
    weighting_superoperator,
)
from .models import (
    ClassicalChain,
    GibbsState,
    LocalHamiltonian,
    ModelError,
    bohr_decompose,
    pauli_string,
)

KRAUS_PRODUCT_LIMIT = 4096


class QuantumChannel:
    """A CPTP map held as Kraus operators and/or a column-stacking superoperator.

    Either representation may be missing at construction; the other is
    derived lazily (Kraus operators through the Choi matrix).
    """

    def __init__(self, kraus: Optional[Sequence[np.ndarray]] = None,
                 superop: Optional[np.ndarray] = None, label: str = "",
                 tol: float = 1e-10):
        if kraus is None and superop is None:
            raise InvalidInputError("channel needs Kraus operators or a superoperator")
        self._kraus = None if kraus is None else [np.asarray(K, dtype=complex) for K in kraus]
        if self._kraus is not None:
            res = completeness_residual(self._kraus)
            if res > tol:
                raise ChannelValidityError(f"channel {label!r} is not trace preserving: residual {res:.3e}", res)
        self._superop = None if superop is None else np.asarray(superop, dtype=complex)
        self.label = label
        if self._superop is not None:
            self.dim = int(round(np.sqrt(self._superop.shape[0])))
        else:
            self.dim = self._kraus[0].shape[0]

    @property
    def superop(self) -> np.ndarray:
        if self._superop is None:
            self._superop = to_superoperator(self._kraus, check=False)
        return self._superop

    @property
    def kraus(self) -> list:
        if self._kraus is None:
            self._kraus = kraus_from_superoperator(self._superop)
        return self._kraus

    @property
    def has_kraus(self) -> bool:
        return self._kraus is not None

    def __call__(self, X) -> np.ndarray:
        return apply_superoperator(self.superop, X)

    def dual(self, X) -> np.ndarray:
        """Heisenberg-picture action ``T^dagger(X)``."""
        return apply_superoperator(self.superop.conj().T, X)

    def __repr__(self) -> str:
        return f"QuantumChannel(label={self.label!r}, dim={self.dim})"


def identity_channel(dim: int) -> QuantumChannel:
    return QuantumChannel([np.eye(dim)], label="identity")


def unitary_channel(U) -> QuantumChannel:
    return QuantumChannel([np.asarray(U)], label="unitary")


def hamiltonian_evolution_channel(H, t: float) -> QuantumChannel:
    Hm = H.dense if isinstance(H, LocalHamiltonian) else np.asarray(H)
    return QuantumChannel([expm(-1j * t * Hm)], label=f"exp(-iHt), t={t}")


def depolarizing_channel(p: float) -> QuantumChannel:
    """One-qubit channel ``rho -> (1-p) rho + p I/2``."""
    X = pauli_string(1, {0: "X"})
    Y = pauli_string(1, {0: "Y"})
    Z = pauli_string(1, {0: "Z"})
    return QuantumChannel([np.sqrt(1 - 3 * p / 4) * np.eye(2), np.sqrt(p / 4) * X,
                           np.sqrt(p / 4) * Y, np.sqrt(p / 4) * Z], label=f"depolarizing p={p}")


# ---------------------------------------------------------------------------
# Sampler constructions
# ---------------------------------------------------------------------------

def glauber_transition_matrix(energies: np.ndarray, n_sites: int, beta: float) -> np.ndarray:
    """Row-stochastic matrix of one single-site Metropolis step over ``2**n_sites`` configurations."""
    D = 2 ** n_sites
    P = np.zeros((D, D))
    for x in range(D):
        for site in range(n_sites):
            y = x ^ (1 << (n_sites - 1 - site))
            delta = energies[y] - energies[x]
            P[x, y] += np.exp(-beta * max(delta, 0.0)) / n_sites
        P[x, x] = 1.0 - P[x].sum()
    return P


def classical_channel(P: np.ndarray, label: str = "classical") -> QuantumChannel:
    """Embed a row-stochastic matrix as the channel with Kraus ``sqrt(P[x,y]) |y><x|``."""
    P = np.asarray(P, dtype=float)
    if np.any(P < -1e-15) or np.max(np.abs(P.sum(axis=1) - 1)) > 1e-12:
        raise InvalidInputError("transition matrix must be row stochastic")
    D = P.shape[0]
    kraus = []
    for x in range(D):
        for y in range(D):
            if P[x, y] > 0:
                K = np.zeros((D, D), dtype=complex)
                K[y, x] = np.sqrt(P[x, y])
                kraus.append(K)
    # Superoperator assembled directly: only diagonal-to-diagonal entries survive.
    S = np.zeros((D * D, D * D), dtype=complex)
    diag = np.arange(D) * (D + 1)
    S[np.ix_(diag, diag)] = P.T
    return QuantumChannel(kraus, superop=S, label=label)


def glauber_channel(H: LocalHamiltonian, beta: float) -> QuantumChannel:
    """One Glauber step (uniform site, Metropolis acceptance) as a quantum channel."""
    if not H.is_diagonal():
        raise ModelError("Glauber dynamics needs a Hamiltonian diagonal in the computational basis")
    energies = np.real(np.diag(H.dense))
    P = glauber_transition_matrix(energies, H.n_qubits, beta)
    return classical_channel(P, label=f"glauber beta={beta}")


def chain_channel(chain: ClassicalChain) -> QuantumChannel:
    return classical_channel(chain.transition, label="birth-death")


def glauber_rate(nu, beta: float):
    """Rate ``1/(1 + exp(beta nu))`` written to avoid overflow."""
    return 0.5 * (1.0 - np.tanh(0.5 * beta * np.asarray(nu)))


def davies_generator(H: LocalHamiltonian, beta: float, jumps: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """Superoperator of the Davies generator with Glauber rates and the given jump operators."""
    D = H.dim
    if jumps is None:
        jumps = [pauli_string(H.n_qubits, {q: "X"}) for q in range(H.n_qubits)]
    I = np.eye(D)
    L = np.zeros((D * D, D * D), dtype=complex)
    for A in jumps:
        bohr = bohr_decompose(A, H)
        for nu, A_nu in bohr.components.items():
            if np.max(np.abs(A_nu)) < 1e-14:
                continue
            rate = glauber_rate(nu, beta)
            AdA = A_nu.conj().T @ A_nu
            L += rate * (np.kron(A_nu.conj(), A_nu)
                         - 0.5 * np.kron(I, AdA) - 0.5 * np.kron(AdA.T, I))
    return L


def davies_channel(H: LocalHamiltonian, beta: float, t0: float = 1.0,
                   jumps: Optional[Sequence[np.ndarray]] = None, s: float = 0.5,
                   tol: float = 1e-9) -> QuantumChannel:
    """``exp(t0 L)`` for the Davies generator, Kraus-factorized and certified."""
    if not t0 > 0:
        raise InvalidInputError("t0 must be positive")
    L = davies_generator(H, beta, jumps)
    S = expm(t0 * L)
    kraus = kraus_from_superoperator(S)
    chan = QuantumChannel(kraus, superop=S, label=f"davies beta={beta} t0={t0}", tol=1e-9)
    report = check_detailed_balance(chan, GibbsState(H, beta), s, tol)
    if not report.passes:
        raise ChannelValidityError(
            f"Davies channel failed {s}-detailed balance: residual {report.residual:.3e}", report.residual)
    return chan


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------

def compose(parts: Sequence[QuantumChannel], prune: float = 1e-14, tol: float = 1e-9) -> QuantumChannel:
    """``parts[0] o parts[1] o ... o parts[-1]`` (the last part acts first)."""
    parts = list(parts)
    if not parts:
        raise InvalidInputError("nothing to compose")
    dims = {p.dim for p in parts}
    if len(dims) != 1:
        raise InvalidInputError(f"dimension mismatch in composition: {sorted(dims)}")
    S = parts[0].superop
    for p in parts[1:]:
        S = S @ p.superop
    label = " o ".join(p.label or "?" for p in parts)
    count = 1
    for p in parts:
        count *= len(p.kraus) if p.has_kraus else KRAUS_PRODUCT_LIMIT + 1
    if count > KRAUS_PRODUCT_LIMIT:
        return QuantumChannel(superop=S, label=label)
    kraus = [np.eye(parts[0].dim, dtype=complex)]
    for p in parts:
        kraus = [A @ B for A in kraus for B in p.kraus]
        kraus = [K for K in kraus if np.linalg.norm(K) > prune]
    res = completeness_residual(kraus)
    if res > tol:
        raise ChannelValidityError(f"composition lost completeness after pruning: {res:.3e}", res)
    return QuantumChannel(kraus, superop=S, label=label, tol=tol)


def power_channel(T: QuantumChannel, r: int) -> QuantumChannel:
    if r < 1:
        raise InvalidInputError("power must be at least 1")
    if r == 1:
        return T
    return QuantumChannel(superop=np.linalg.matrix_power(T.superop, r), label=f"({T.label})^{r}")


def superop_power(S: np.ndarray, t: int) -> np.ndarray:
    return np.linalg.matrix_power(S, int(t))


# ---------------------------------------------------------------------------
# Detailed balance, gaps, mixing
# ---------------------------------------------------------------------------

@dataclass
class DBReport:
    s: float
    residual: float
    basis_residual: float
    fixed_point_residual: float
    tol: float
    passes: bool


def symmetrized_superoperator(S: np.ndarray, rho, s: float) -> np.ndarray:
    """``F_s^{-1/2} S F_s^{1/2}``, Hermitian exactly when ``S`` is s-detailed balanced."""
    Fm = weighting_superoperator(rho, s, -0.5)
    Fp = weighting_superoperator(rho, s, 0.5)
    return Fm @ S @ Fp


def _rho_matrix(rho) -> np.ndarray:
    return rho.rho if isinstance(rho, GibbsState) else np.asarray(rho)


def check_detailed_balance(T, rho, s: float, tol: float = 1e-9) -> DBReport:
    """Certify ``T o F_s = F_s o T^dagger`` by two residuals and the fixed point.

    ``basis_residual`` is ``max_ij |<B_i, T^dag B_j>_s - <T^dag B_i, B_j>_s|`` over
    matrix units; ``residual`` is the operator norm of the symmetrized
    superoperator minus its adjoint.
    """
    S = T.superop if isinstance(T, QuantumChannel) else np.asarray(T)
    F = weighting_superoperator(rho, s)
    basis = float(np.max(np.abs(F @ S.conj().T - S @ F)))
    A = symmetrized_superoperator(S, rho, s)
    sym = float(np.linalg.norm(A - A.conj().T, 2))
    r = _rho_matrix(rho)
    fixed = trace_norm(apply_superoperator(S, r) - r)
    passes = sym <= tol and basis <= tol and fixed <= tol
    return DBReport(float(s), sym, basis, fixed, tol, bool(passes))


@dataclass
class GapReport:
    eigenvalues: np.ndarray
    gap: float
    spectrum_in_01: bool
    unique_fixed_point: bool
    db_certified: bool
    warning: Optional[str] = None
    s: float = 0.5


def spectral_gap(T, rho, s: float = 0.5, tol: float = 1e-9) -> GapReport:
    """Gap ``1 - lambda_2`` of the symmetrized superoperator (falls back to the raw spectrum without DB)."""
    S = T.superop if isinstance(T, QuantumChannel) else np.asarray(T)
    A = symmetrized_superoperator(S, rho, s)
    asym = float(np.linalg.norm(A - A.conj().T, 2))
    warning = None
    if asym <= tol:
        ev = np.sort(np.linalg.eigvalsh(0.5 * (A + A.conj().T)))[::-1]
        certified = True
    else:
        raw = np.linalg.eigvals(S)
        ev = raw[np.argsort(-raw.real)]
        certified = False
        warning = f"channel is not {s}-detailed balanced (asymmetry {asym:.3e}); raw spectrum used"
        warnings.warn(warning)
    lam = np.real(ev)
    gap = float(1.0 - lam[1]) if lam.size > 1 else 1.0
    unique = bool(np.sum(np.abs(lam - 1.0) < tol) == 1)
    in01 = bool(lam.min() >= -tol and lam.max() <= 1 + tol)
    return GapReport(ev, gap, in01, unique, certified, warning, float(s))


@dataclass
class MixingBounds:
    lower: float
    upper: float
    gap: float
    sigma_min: float
    eps: float
    divergent: bool = False


def mixing_time_bounds(T, rho: GibbsState, eps: float, gap: Optional[float] = None,
                       tol: float = 1e-12) -> MixingBounds:
    """Relaxation-time sandwich ``(1/gap - 1) ln(1/eps) <= t_mix <= (1/gap) ln(1/(eps sigma_min))``."""
    g = spectral_gap(T, rho).gap if gap is None else gap
    sig = rho.sigma_min
    if g <= tol:
        return MixingBounds(np.inf, np.inf, g, sig, eps, True)
    return MixingBounds((1.0 / g - 1.0) * np.log(1.0 / eps), (1.0 / g) * np.log(1.0 / (eps * sig)), g, sig, eps)


def mixing_bounds_from_values(gap: float, eps: float, sigma_min: float) -> tuple:
    return (1.0 / gap - 1.0) * np.log(1.0 / eps), (1.0 / gap) * np.log(1.0 / (eps * sigma_min))


@dataclass
class Witness:
    state: np.ndarray
    observable: np.ndarray
    eigenvalue: float


def mixing_witness(T, rho: GibbsState, s: float = 0.5) -> Witness:
    """Pure state saturating ``tr(rho Z_2) = ||Z_2||`` for the second eigenvector ``Z_2`` of ``T^dagger``."""
    S = T.superop if isinstance(T, QuantumChannel) else np.asarray(T)
    A = symmetrized_superoperator(S, rho, s)
    A = 0.5 * (A + A.conj().T)
    evals, evecs = np.linalg.eigh(A)
    order = np.argsort(evals)[::-1]
    lam2 = float(evals[order[1]])
    Fp = weighting_superoperator(rho, s, 0.5)
    D = int(round(np.sqrt(S.shape[0])))
    Z = unvec(Fp @ evecs[:, order[1]], D)
    # T^dagger preserves Hermiticity, so a Hermitian eigenvector exists.
    Zh = 0.5 * (Z + Z.conj().T)
    Za = 0.5j * (Z - Z.conj().T)
    Z = Zh if np.linalg.norm(Zh) >= np.linalg.norm(Za) else Za
    w, V = np.linalg.eigh(Z)
    k = int(np.argmax(np.abs(w)))
    if w[k] < 0:
        Z = -Z
    psi = V[:, k]
    return Witness(np.outer(psi, psi.conj()), Z / np.max(np.abs(w)), lam2)


def distance_after(T, rho0, rho_target, t: int) -> float:
    """``||T^t(rho0) - rho_target||_1``."""
    S = T.superop if isinstance(T, QuantumChannel) else np.asarray(T)
    St = superop_power(S, t)
    out = unvec(St @ vec(np.asarray(rho0, dtype=complex)))
    return trace_norm(out - _rho_matrix(rho_target))


def worst_distance(T, states, rho_target, t: int) -> float:
    S = T.superop if isinstance(T, QuantumChannel) else np.asarray(T)
    St = superop_power(S, t)
    target = _rho_matrix(rho_target)
    worst = 0.0
    for r0 in states:
        out = unvec(St @ vec(np.asarray(r0, dtype=complex)))
        worst = max(worst, trace_norm(out - target))
    return worst


def weighted_norm_sq(A, rho, s: float, star: bool = False) -> float:
    """``<A, A>_s`` (or the ``*s`` variant with inverse weights)."""
    F = weighting_superoperator(rho, s, -1.0 if star else 1.0)
    v = vec(np.asarray(A, dtype=complex))
    return float(np.real(v.conj() @ F @ v))
