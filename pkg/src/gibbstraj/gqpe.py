"""Gaussian-filtered phase estimation (GQPE) as a measurement instrument.

All Kraus operators are functions of the normalized observable ``Ot = O/kappa``,
so the instrument is stored as a table ``amplitudes[j, k] = o_j(E_k)`` of real
scalars over the distinct eigenvalues ``E_k`` of ``Ot`` together with its
eigenvectors.  With ``h = 2**-m``, ``N = 2**(2m)``, ``omega_j = (j - N/2) h`` and
``xi_l = (l - N/2) h``::

    o_j(E) = h**1.5 / C * sum_{l=1}^{N-1} exp(2 pi i xi_l (omega_j - E)) ghat(xi_l)

which is a discrete Fourier transform in ``j`` and is evaluated by FFT.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .linalg import (
    InvalidInputError,
    Spectrum,
    check_hermitian,
    eig_hermitian,
    operator_norm,
    trace_norm,
    vec,
)

MAX_M = 24
MAX_BUILD_M = 12
AMPLITUDE_CUTOFF = 1e-14


class ResourceError(RuntimeError):
    """Raised when the requested precision needs more register qubits than allowed."""


class NormalizationError(ValueError):
    """Raised when the observable violates ``||O|| <= kappa``."""


def g_filter(omega, gamma: float):
    """Time-domain filter ``(gamma sqrt(2 pi))**-1/2 exp(-omega**2 / (4 gamma**2))``."""
    return (gamma * np.sqrt(2 * np.pi)) ** -0.5 * np.exp(-np.asarray(omega) ** 2 / (4 * gamma ** 2))


def ghat_filter(xi, gamma: float):
    """Fourier pair of :func:`g_filter`: ``(2 sqrt(2 pi) gamma)**1/2 exp(-4 pi**2 gamma**2 xi**2)``."""
    return (2 * np.sqrt(2 * np.pi) * gamma) ** 0.5 * np.exp(-4 * np.pi ** 2 * gamma ** 2 * np.asarray(xi) ** 2)


def raw_readout(omega):
    """``Z = omega`` inside ``[-2, 2]`` and 0 outside."""
    omega = np.asarray(omega, dtype=float)
    return np.where(np.abs(omega) <= 2.0, omega, 0.0)


@dataclass(frozen=True)
class GqpeParams:
    kappa: float
    eps: float
    gamma: float
    m: int
    overridden: bool = False

    @property
    def h(self) -> float:
        return 2.0 ** (-self.m)

    @property
    def N(self) -> int:
        return 2 ** (2 * self.m)

    @property
    def eps_normalized(self) -> float:
        return self.eps / self.kappa

    def owg_regime(self) -> bool:
        """Whether ``gamma <= 1/(2 sqrt(2) pi)``, the regime of the closed-form Kraus bound."""
        return self.gamma <= 1.0 / (2 * math.sqrt(2) * math.pi)


def required_inverse_step(gamma: float, eps_t: float) -> float:
    """Smallest admissible ``1/h`` from the truncation and Kraus-approximation constraints."""

    def sqrt_log(x):
        return math.sqrt(math.log(x)) if x > 1 else 0.0

    candidates = [
        math.pi,
        sqrt_log(32 * math.pi * gamma ** 2 / eps_t) / (math.pi * gamma),
        math.sqrt(math.log(4.0)) / (math.sqrt(2) * math.pi * gamma),  # h <= sqrt2 pi gamma / sqrt(ln 4)
        4 * gamma * sqrt_log(4852 / (gamma * eps_t)),
        sqrt_log(20 / (gamma ** 2 * eps_t)) / (2 * math.pi * gamma),
    ]
    return max(candidates)


def choose_params(kappa: float, eps: float, gamma: Optional[float] = None,
                  m: Optional[int] = None) -> GqpeParams:
    """Explicit parameter choice for precision ``eps`` on an observable with ``||O|| <= kappa``.

    ``1/gamma = kappa sqrt(2) max(pi, sqrt(ln(4/eps_t)))`` with ``eps_t = eps/kappa``;
    ``m`` is the smallest integer (at least 2) with ``2**m >= 1/h`` for the
    largest step allowed by :func:`required_inverse_step`.  Either value can be overridden.
    """
    if not 0 < eps < 1:
        raise InvalidInputError(f"eps must lie in (0, 1), got {eps}")
    if kappa < 1:
        raise InvalidInputError(f"kappa must be at least 1, got {kappa}")
    eps_t = eps / kappa
    if gamma is None:
        gamma = 1.0 / (kappa * math.sqrt(2) * max(math.pi, math.sqrt(math.log(4.0 / eps_t))))
    if m is None:
        hinv = required_inverse_step(gamma, eps_t)
        m = max(2, math.ceil(math.log2(hinv) - 1e-12))
    if m > MAX_M:
        raise ResourceError(f"precision {eps} needs m = {m} > {MAX_M} register qubits per half")
    if m < 2:
        raise InvalidInputError("m must be at least 2 so the register covers [-2, 2]")
    params = GqpeParams(float(kappa), float(eps), float(gamma), int(m), overridden=False)
    return params


def override_params(kappa: float, eps: float, gamma: float, m: int) -> GqpeParams:
    return GqpeParams(float(kappa), float(eps), float(gamma), int(m), overridden=True)


def normalization_constant(params: GqpeParams) -> float:
    """``C = sqrt(h sum_{l=1}^{N-1} ghat(xi_l)**2)``, summed over the non-negligible range."""
    h, N = params.h, params.N
    kmax = min(N // 2 - 1, int(math.ceil(40.0 / (2 * math.pi * params.gamma * h))))
    k = np.arange(-kmax, kmax + 1)
    return float(np.sqrt(h * np.sum(ghat_filter(k * h, params.gamma) ** 2)))


def kraus_amplitudes(E: np.ndarray, params: GqpeParams) -> tuple:
    """Return ``(indices, amplitudes, C)`` with ``amplitudes[:, k] = o_j(E[k])`` on the support.

    ``indices`` lists the register outcomes ``j`` whose amplitude exceeds
    ``AMPLITUDE_CUTOFF`` for some eigenvalue.
    """
    if params.m > MAX_BUILD_M:
        raise ResourceError(f"building an instrument with m = {params.m} > {MAX_BUILD_M} is not supported")
    h, N, gamma = params.h, params.N, params.gamma
    C = normalization_constant(params)
    k = np.arange(N)
    k = np.where(k < N // 2, k, k - N)          # signed frequency index per FFT bin
    valid = k != -(N // 2)                      # l = 0 (k = -N/2) is excluded
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    ghat = np.where(valid, ghat_filter(k * h, gamma), 0.0)
    cols = []
    for Ek in np.atleast_1d(E):
        b = sign * ghat * np.exp(-2j * np.pi * k * h * Ek)
        col = np.fft.ifft(b) * N * h ** 1.5 / C
        if np.max(np.abs(col.imag)) > 1e-10:
            raise ArithmeticError("GQPE amplitudes are not real; index range is inconsistent")
        cols.append(col.real)
    amps = np.stack(cols, axis=1)
    keep = np.flatnonzero(np.max(np.abs(amps), axis=1) > AMPLITUDE_CUTOFF)
    return keep, amps[keep], C


class DiagonalInstrument:
    """Instrument whose Kraus operators are all diagonal in one eigenbasis of an observable.

    ``amplitudes[j, k]`` is the (real) value of the ``j``-th Kraus operator on
    the ``k``-th eigenspace and ``labels[j]`` the reported outcome.
    """

    def __init__(self, observable, spectrum: Spectrum, amplitudes: np.ndarray, labels: np.ndarray,
                 omegas: np.ndarray, label: str):
        self.observable = observable
        self.spectrum = spectrum
        self.amplitudes = amplitudes
        self.labels = labels
        self.omegas = omegas
        self.label = label
        self._superop = None

    @property
    def leak_mask(self) -> np.ndarray:
        """Outcomes whose raw label lies outside the readout window."""
        return np.zeros(self.n_outcomes, dtype=bool)

    # -- basic structure -------------------------------------------------
    @property
    def dim(self) -> int:
        return self.observable.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def probabilities_table(self) -> np.ndarray:
        """``|o_j(E_k)|**2`` with shape ``(outcomes, eigenspaces)``."""
        return self.amplitudes ** 2

    def kraus_operator(self, pos: int) -> np.ndarray:
        V = self.spectrum.vectors
        d = self.amplitudes[pos][self.spectrum.labels]
        return (V * d) @ V.conj().T

    @property
    def kraus(self) -> list:
        """List of ``(omega_j, O_j)`` over the outcomes kept after amplitude pruning."""
        return [(float(self.omegas[i]), self.kraus_operator(i)) for i in range(self.n_outcomes)]

    def completeness_residual(self) -> float:
        """``||sum_j O_j^dag O_j - I||``, evaluated per eigenspace."""
        return float(np.max(np.abs(np.sum(self.amplitudes ** 2, axis=0) - 1.0)))

    def to_eigenbasis(self, X) -> np.ndarray:
        V = self.spectrum.vectors
        return V.conj().T @ np.asarray(X) @ V

    def from_eigenbasis(self, X) -> np.ndarray:
        V = self.spectrum.vectors
        return V @ np.asarray(X) @ V.conj().T

    def eigenspace_weights(self, rho) -> np.ndarray:
        """``tr(Pi_k rho)`` for each eigenspace of ``Ot``."""
        d = np.real(np.diag(self.to_eigenbasis(rho)))
        return np.bincount(self.spectrum.labels, weights=d, minlength=self.spectrum.eigenvalues.size)

    def gram(self, weights: Optional[np.ndarray] = None) -> np.ndarray:
        """``G[k, l] = sum_j w_j o_j(E_k) o_j(E_l)``."""
        A = self.amplitudes
        if weights is None:
            return A.T @ A
        return A.T @ (A * weights[:, None])

    def schur_superoperator(self, G: np.ndarray) -> np.ndarray:
        """Superoperator of ``X -> V (G[labels, labels] * (V^dag X V)) V^dag``."""
        V = self.spectrum.vectors
        lab = self.spectrum.labels
        Gf = G[np.ix_(lab, lab)]
        left = np.kron(V.conj(), V)
        right = np.kron(V.T, V.conj().T)
        return (left * vec(Gf)) @ right

    @property
    def superop(self) -> np.ndarray:
        """Superoperator of the channel ``M(X) = sum_j O_j X O_j``."""
        if self._superop is None:
            self._superop = self.schur_superoperator(self.gram())
        return self._superop

    def apply(self, rho) -> np.ndarray:
        lab = self.spectrum.labels
        G = self.gram()[np.ix_(lab, lab)]
        return self.from_eigenbasis(G * self.to_eigenbasis(rho))

    def channel(self):
        from .channels import QuantumChannel
        return QuantumChannel(superop=self.superop, label=self.label)

    def outcome_probabilities(self, rho) -> np.ndarray:
        return self.probabilities_table @ self.eigenspace_weights(rho)


class ProjectiveInstrument(DiagonalInstrument):
    """Ideal projective measurement of ``O`` reporting its eigenvalues."""

    def __init__(self, O, label: str = "projective"):
        O = check_hermitian(O, 1e-10, "observable")
        spectrum = eig_hermitian(O)
        n = spectrum.eigenvalues.size
        super().__init__(O, spectrum, np.eye(n), spectrum.eigenvalues.copy(), spectrum.eigenvalues.copy(), label)


class GqpeInstrument(DiagonalInstrument):
    """Instrument ``{(omega_j, O_j)}`` with reported outcome ``W = kappa Z(omega_j)``."""

    def __init__(self, O, params: GqpeParams, label: str = "gqpe"):
        O = check_hermitian(O, 1e-10, "observable")
        norm = operator_norm(O)
        if norm > params.kappa * (1 + 1e-12):
            raise NormalizationError(f"||O|| = {norm:.6g} exceeds kappa = {params.kappa}")
        self.params = params
        self.normalized = O / params.kappa
        spectrum = eig_hermitian(self.normalized)
        idx, amps, C = kraus_amplitudes(spectrum.eigenvalues, params)
        self.indices = idx
        self.normalization = C
        omegas = (idx - params.N // 2) * params.h
        self.z_labels = raw_readout(omegas)
        super().__init__(O, spectrum, amps, params.kappa * self.z_labels, omegas, label)

    @property
    def leak_mask(self) -> np.ndarray:
        return np.abs(self.omegas) > 2

    # -- serialization -----------------------------------------------------
    def to_json(self, include_kraus: bool = False) -> str:
        doc = {
            "params": asdict(self.params),
            "observable": {"real": self.observable.real.tolist(), "imag": self.observable.imag.tolist()},
            "label": self.label,
        }
        if include_kraus:
            doc["kraus"] = [{"omega": w, "real": K.real.tolist(), "imag": K.imag.tolist()}
                            for w, K in self.kraus]
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "GqpeInstrument":
        doc = json.loads(text)
        O = np.array(doc["observable"]["real"]) + 1j * np.array(doc["observable"]["imag"])
        inst = cls(O, GqpeParams(**doc["params"]), doc.get("label", "gqpe"))
        if "kraus" in doc:
            stored = [np.array(k["real"]) + 1j * np.array(k["imag"]) for k in doc["kraus"]]
            rebuilt = [K for _, K in inst.kraus]
            if len(stored) != len(rebuilt) or any(np.max(np.abs(a - b)) > 1e-12 for a, b in zip(stored, rebuilt)):
                raise InvalidInputError("stored Kraus operators do not match the rebuilt instrument")
        return inst


def build_instrument(O, params: GqpeParams, label: str = "gqpe") -> GqpeInstrument:
    return GqpeInstrument(O, params, label)


def instrument_for(O, eps: float, kappa: Optional[float] = None, **overrides) -> GqpeInstrument:
    """Convenience: choose parameters for ``O`` (``kappa`` defaults to ``max(1, ||O||)``) and build."""
    k = max(1.0, operator_norm(O)) if kappa is None else kappa
    return GqpeInstrument(O, choose_params(k, eps, **overrides))


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

@dataclass
class OutcomeStats:
    expectation: float
    variance: float
    covariance: float
    leakage: float
    labels: np.ndarray
    probabilities: np.ndarray

    @property
    def per_outcome(self) -> list:
        return list(zip(self.labels.tolist(), self.probabilities.tolist()))


def outcome_distribution(inst: GqpeInstrument, rho) -> OutcomeStats:
    """Exact outcome statistics of ``W`` for state ``rho``.

    The covariance of two back-to-back applications is the double sum
    ``sum_{x,y} (x-E)(y-E) tr(O_y O_x rho O_x O_y)``; because every ``O_j`` is
    diagonal in the eigenbasis of ``Ot`` it factorizes over eigenspaces.
    """
    d = inst.eigenspace_weights(rho)
    P = inst.probabilities_table
    p = P @ d
    W = inst.labels
    E = float(p @ W)
    var = float(p @ (W - E) ** 2)
    mk = (W - E) @ P
    cov = float(d @ mk ** 2)
    leak = float(p[inst.leak_mask].sum())
    return OutcomeStats(E, var, cov, leak, W.copy(), p)


def covariance_double_sum(inst: GqpeInstrument, rho, max_outcomes: int = 400) -> float:
    """Brute-force covariance from explicit Kraus matrices (for small instruments)."""
    stats = outcome_distribution(inst, rho)
    E = stats.expectation
    keep = np.flatnonzero(stats.probabilities > 1e-16)
    if keep.size > max_outcomes:
        keep = keep[np.argsort(stats.probabilities[keep])[::-1][:max_outcomes]]
    ops = [inst.kraus_operator(i) for i in keep]
    labels = inst.labels[keep]
    total = 0.0
    rho = np.asarray(rho)
    for x, Ox in zip(labels, ops):
        inner = Ox @ rho @ Ox
        for y, Oy in zip(labels, ops):
            total += (x - E) * (y - E) * np.real(np.trace(Oy @ inner @ Oy))
    return float(total)


def leakage(inst: GqpeInstrument, rho) -> float:
    return outcome_distribution(inst, rho).leakage


def leakage_operator_norm(inst: GqpeInstrument) -> float:
    """``||sum_{|omega_j| > 2} O_j**2||``."""
    out = inst.leak_mask
    return float(np.max(np.sum(inst.probabilities_table[out], axis=0))) if np.any(out) else 0.0


def observable_variance(O, rho) -> float:
    rho = np.asarray(rho)
    O = np.asarray(O)
    m1 = np.real(np.trace(rho @ O))
    m2 = np.real(np.trace(rho @ O @ O))
    return float(m2 - m1 ** 2)


def hat_map(inst: GqpeInstrument, rho_beta) -> np.ndarray:
    """Superoperator of ``X -> sum_j (W_j - v) O_j X O_j`` with ``v = E_{rho_beta}(W)``."""
    r = rho_beta.rho if hasattr(rho_beta, "rho") else rho_beta
    v = outcome_distribution(inst, r).expectation
    return inst.schur_superoperator(inst.gram(inst.labels - v))


def hat_map_weighted(inst: GqpeInstrument, weights: np.ndarray) -> np.ndarray:
    return inst.schur_superoperator(inst.gram(np.asarray(weights, dtype=float)))


def disturbance(inst: GqpeInstrument, rho) -> float:
    """``||M(rho) - rho||_1``."""
    rho = np.asarray(rho)
    return trace_norm(inst.apply(rho) - rho)


def owg_delta(gamma: float, h: float) -> float:
    """Closed-form bound on ``||O_j - sqrt(h) g(omega_j - Ot)||`` for ``|omega_j| <= 2``."""
    return (12 * h ** 0.5 * gamma ** -0.5 * math.exp(-1.0 / (16 * gamma ** 2 * h ** 2))
            + h ** 1.5 / (2 * gamma ** 1.5) * math.exp(-2 * math.pi ** 2 * gamma ** 2 / h ** 2))


def owg_delta_full(gamma: float, h: float) -> float:
    """Kraus approximation bound keeping the ``exp(-pi**2 gamma**2 / h**2)`` truncation term.

    The ``xi`` sum stops at ``|xi| = 1/(2h)`` where ``ghat`` has decayed only to
    ``exp(-pi**2 gamma**2 / h**2)``; that term is larger than the
    ``exp(-2 pi**2 gamma**2 / h**2)`` term of :func:`owg_delta` and dominates
    when ``gamma/h`` is moderate.
    """
    a = 1.0 / math.sqrt(gamma * math.sqrt(2 * math.pi))
    quad = (6 * a * math.exp(-1.0 / (16 * gamma ** 2 * h ** 2))
            + h * math.sqrt(2 * math.sqrt(2 * math.pi)) / (math.pi ** 2 * gamma ** 1.5)
            * math.exp(-math.pi ** 2 * gamma ** 2 / h ** 2))
    norm = (3 * math.exp(-1.0 / (8 * gamma ** 2 * h ** 2))
            + h * math.sqrt(2) / (math.pi ** 1.5 * gamma) * math.exp(-2 * math.pi ** 2 * gamma ** 2 / h ** 2))
    return math.sqrt(h) * (2 * quad + 2 * a * norm)


def owg_errors(inst: GqpeInstrument) -> np.ndarray:
    """``||O_j - sqrt(h) g(omega_j - Ot)||`` for each kept outcome with ``|omega_j| <= 2``."""
    p = inst.params
    inside = np.abs(inst.omegas) <= 2
    E = inst.spectrum.eigenvalues
    ref = np.sqrt(p.h) * g_filter(inst.omegas[inside, None] - E[None, :], p.gamma)
    return np.max(np.abs(inst.amplitudes[inside] - ref), axis=1)


def disturbance_bound(inst: GqpeInstrument, rho) -> float:
    """Explicit upper bound on ``||M(rho) - rho||_1`` in terms of ``||[Ot, rho]||_1``.

    ``M(rho) - rho = sum_j O_j [rho, O_j]``.  Outcomes outside ``[-2, 2]``
    contribute at most ``2 ||sum_out O_j**2||``.  Inside, each
    ``||[O_j, rho]||_1`` is at most twice the Kraus approximation error plus
    ``||[sqrt(h) g(omega_j - Ot), rho]||_1``; writing the Gaussian as
    ``exp(A_j)`` with ``A_j <= 0``, Duhamel's formula gives
    ``||[exp(A_j), rho]||_1 <= ||[A_j, rho]||_1 <= (|omega_j| + ||Ot||)/(2 gamma**2) ||[Ot, rho]||_1``.
    """
    p = inst.params
    rho = np.asarray(rho)
    comm = trace_norm(inst.normalized @ rho - rho @ inst.normalized)
    inside = np.abs(inst.omegas) <= 2
    # outcomes pruned from the table have negligible amplitude but still count in the sum
    all_w = (np.arange(p.N) - p.N // 2) * p.h
    w_in = all_w[np.abs(all_w) <= 2]
    onorm = float(np.max(np.abs(inst.spectrum.eigenvalues)))
    pref = np.sqrt(p.h) * (p.gamma * np.sqrt(2 * np.pi)) ** -0.5
    gauss_part = pref * np.sum(np.abs(w_in) + onorm) / (2 * p.gamma ** 2) * comm
    approx = float(np.max(owg_errors(inst))) if np.any(inside) else 0.0
    approx = max(approx, owg_delta(p.gamma, p.h)) if p.owg_regime() else approx
    return float(2 * leakage_operator_norm(inst) + gauss_part + 2 * w_in.size * approx)


def moment_operator_errors(inst: GqpeInstrument) -> tuple:
    """``(||sum_in omega_j O_j**2 - Ot||, ||sum_in omega_j**2 O_j**2 - (Ot**2 + gamma**2)||)``."""
    inside = np.abs(inst.omegas) <= 2
    P = inst.probabilities_table[inside]
    w = inst.omegas[inside]
    E = inst.spectrum.eigenvalues
    first = np.max(np.abs(w @ P - E))
    second = np.max(np.abs((w ** 2) @ P - (E ** 2 + inst.params.gamma ** 2)))
    return float(first), float(second)


# ---------------------------------------------------------------------------
# Circuit-level cross-check
# ---------------------------------------------------------------------------

def circuit_outcome_distribution(inst: GqpeInstrument, rho) -> np.ndarray:
    """Outcome distribution over all ``N`` register values from a statevector simulation.

    The register is prepared in ``|Ghat> ~ sum_{l>=1} ghat(xi_l)|l>``; a
    controlled phase ``sum_l exp(-2 pi i xi_l Ot) (x) |l><l|`` acts, then the
    shifted DFT ``F_s|l> = N**-1/2 sum_j exp(2 pi i (l - N/2)(j - N/2)/N)|j>``.
    """
    p = inst.params
    if p.m > 5 or inst.dim > 4:
        raise ResourceError("circuit cross-check is limited to two system qubits and m <= 5")
    N, h = p.N, p.h
    ell = np.arange(N)
    xi = (ell - N // 2) * h
    amp = np.where(ell >= 1, ghat_filter(xi, p.gamma), 0.0)
    G = amp * np.sqrt(h) / inst.normalization
    G = G / np.linalg.norm(G)
    j = np.arange(N)
    Fs = np.exp(2j * np.pi * np.outer(j - N // 2, ell - N // 2) / N) / np.sqrt(N)
    w, V = np.linalg.eigh(inst.normalized)
    evals, evecs = np.linalg.eigh(np.asarray(rho))
    probs = np.zeros(N)
    for lam, psi in zip(evals, evecs.T):
        if lam <= 1e-15:
            continue
        c = V.conj().T @ psi                      # system amplitudes in eigenbasis of Ot
        # amplitude[a, l] = c_a exp(-2 pi i xi_l w_a) G_l
        state = c[:, None] * np.exp(-2j * np.pi * np.outer(w, xi)) * G[None, :]
        out = state @ Fs.T                          # apply F_s on the register
        probs += lam * np.sum(np.abs(out) ** 2, axis=0)
    return probs


def full_outcome_probabilities(inst: GqpeInstrument, rho) -> np.ndarray:
    """Outcome probabilities over all ``N`` register values (zero where pruned)."""
    out = np.zeros(inst.params.N)
    out[inst.indices] = inst.outcome_probabilities(rho)
    return out


# ---------------------------------------------------------------------------
# Quadrature error bounds
# ---------------------------------------------------------------------------

def gaussian_tail_bound(A: float, N: int) -> float:
    """``(1 + 1/(A N)) exp(-A N**2 / 4)``, an upper bound on ``sum_{k >= N/2} exp(-A k**2)``."""
    return (1 + 1 / (A * N)) * math.exp(-A * N ** 2 / 4)


def gaussian_tail_sum(A: float, N: int) -> float:
    k0 = int(math.ceil(N / 2))
    kmax = k0 + int(math.ceil(math.sqrt(800 / A))) + 10
    k = np.arange(k0, kmax)
    return float(np.sum(np.exp(-A * k.astype(float) ** 2)))


@dataclass
class RiemannResult:
    value: complex
    bound: float
    aliasing: float
    tail: float


def riemann_sum_error(phi: Callable, phi_hat: Callable, h: float, N: int,
                      gaussian_exponent: Optional[float] = None, gaussian_scale: float = 1.0) -> RiemannResult:
    """Truncated Riemann sum ``h sum_{k=-N/2}^{N/2-1} phi(kh)`` with its a-priori error bound.

    The bound is ``sum_{n != 0} |phi_hat(n/h)| + h sum_{|k| >= N/2} |phi(kh)|``
    where ``phi_hat(y) = int phi(x) exp(-2 pi i x y) dx``.  For a centered
    Gaussian ``|phi(x)| = gaussian_scale * exp(-a x**2)`` pass ``gaussian_exponent=a``
    and the tail uses the closed-form Gaussian tail bound.
    """
    k = np.arange(-(N // 2), N // 2)
    value = complex(h * np.sum(phi(k * h)))
    alias = 0.0
    n = 1
    while True:
        term = abs(phi_hat(n / h)) + abs(phi_hat(-n / h))
        alias += term
        if term < 1e-300 or n > 10000:
            break
        if n > 3 and term < 1e-18 * max(alias, 1e-300):
            break
        n += 1
    if gaussian_exponent is not None:
        A = gaussian_exponent * h * h
        # |k| >= N/2 covers k >= N/2 and k <= -N/2 (both the same tail by symmetry)
        tail = 2 * h * gaussian_scale * gaussian_tail_bound(A, N)
    else:
        kk = np.arange(N // 2, N // 2 + 200000)
        tail = float(h * (np.sum(np.abs(phi(kk * h))) + np.sum(np.abs(phi(-(kk + 0) * h)))))
    return RiemannResult(value, float(alias + tail), float(alias), float(tail))


def exp_commutator_sides(A, B) -> tuple:
    """``(||[e^A, B]||_1, e^{||A||} ||[A, B]||_1)``."""
    from scipy.linalg import expm
    A = np.asarray(A)
    B = np.asarray(B)
    eA = expm(A)
    return trace_norm(eA @ B - B @ eA), math.exp(operator_norm(A)) * trace_norm(A @ B - B @ A)
