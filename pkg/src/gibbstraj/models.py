"""Hamiltonians, Gibbs states, Bohr decompositions and the small example systems.

Qubit ordering: qubit 0 is the most significant bit of the computational
basis index, so for three qubits ``|110>`` is index 6 and has ``z_0 = z_1 = -1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Dict, Mapping, Optional

import numpy as np
from scipy.special import logsumexp

from .linalg import (
    InvalidInputError,
    Spectrum,
    check_hermitian,
    eig_hermitian,
    operator_norm,
)

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class ModelError(ValueError):
    """Raised for invalid model parameters or terms."""


class NumericRangeError(ArithmeticError):
    """Raised when a Gibbs weight cannot be represented in floating point."""


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    paulis: Mapping[int, str]

    def matrix(self, n: int) -> np.ndarray:
        for q, p in self.paulis.items():
            if not 0 <= q < n:
                raise ModelError(f"qubit index {q} out of range for {n} qubits")
            if p not in ("X", "Y", "Z"):
                raise ModelError(f"unknown Pauli label {p!r}")
        if not np.isfinite(self.coefficient):
            raise ModelError("term coefficient must be finite")
        factors = [PAULI[self.paulis.get(q, "I")] for q in range(n)]
        return self.coefficient * reduce(np.kron, factors)


def pauli_string(n: int, paulis: Mapping[int, str]) -> np.ndarray:
    return PauliTerm(1.0, paulis).matrix(n)


@dataclass
class LocalHamiltonian:
    n_qubits: int
    terms: list
    dense: np.ndarray
    _spectrum: Optional[Spectrum] = field(default=None, repr=False)

    @property
    def kappa(self) -> int:
        return len(self.terms)

    @property
    def dim(self) -> int:
        return self.dense.shape[0]

    @property
    def norm_bound(self) -> float:
        """``sum_i |c_i|``, an upper bound on ``||H||`` (equal to ``kappa`` for unit-norm terms)."""
        if not self.terms:
            return self.norm()
        return float(sum(abs(t.coefficient) for t in self.terms))

    @property
    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            self._spectrum = eig_hermitian(self.dense)
        return self._spectrum

    def is_diagonal(self, tol: float = 1e-12) -> bool:
        off = self.dense - np.diag(np.diag(self.dense))
        return bool(np.max(np.abs(off)) <= tol) if off.size else True

    def norm(self) -> float:
        return operator_norm(self.dense)


def build_hamiltonian(n: int, terms) -> LocalHamiltonian:
    """Materialize ``H = sum_i H_i`` from Pauli terms."""
    if n < 1:
        raise ModelError("need at least one qubit")
    terms = list(terms)
    dense = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for t in terms:
        dense += t.matrix(n)
    return LocalHamiltonian(n, terms, dense)


def hamiltonian_from_matrix(H) -> LocalHamiltonian:
    """Wrap a dense Hermitian matrix (for tests and non-Pauli models)."""
    H = check_hermitian(H)
    n = int(round(np.log2(H.shape[0])))
    n = n if 2 ** n == H.shape[0] else 0
    return LocalHamiltonian(n, [], H)


def ising3(alpha: float, h: float, gamma: float) -> LocalHamiltonian:
    """``H = -alpha Z1 Z2 - h (Z1 + Z2) - gamma Z3`` on three qubits."""
    terms = [
        PauliTerm(-alpha, {0: "Z", 1: "Z"}),
        PauliTerm(-h, {0: "Z"}),
        PauliTerm(-h, {1: "Z"}),
        PauliTerm(-gamma, {2: "Z"}),
    ]
    return build_hamiltonian(3, terms)


def ising_energy_table(alpha: float, h: float, gamma: float) -> np.ndarray:
    """Classical energies of ``ising3`` indexed by the basis index (qubit 0 = MSB)."""
    out = np.empty(8)
    for idx in range(8):
        z = [1 - 2 * ((idx >> (2 - q)) & 1) for q in range(3)]
        out[idx] = -alpha * z[0] * z[1] - h * (z[0] + z[1]) - gamma * z[2]
    return out


class GibbsState:
    """``rho_beta = exp(-beta H)/Z`` with cached fractional powers.

    Powers are evaluated from the eigendecomposition of ``H`` as
    ``exp(-s beta E)/Z^s`` rather than by taking powers of ``rho``.
    """

    def __init__(self, H, beta: float):
        if not np.isfinite(beta) or beta < 0:
            raise ModelError(f"beta must be finite and non-negative, got {beta}")
        Hm = H.dense if isinstance(H, LocalHamiltonian) else check_hermitian(H)
        self.spectrum = H.spectrum if isinstance(H, LocalHamiltonian) else eig_hermitian(Hm)
        self.beta = float(beta)
        E = self.spectrum.raw_eigenvalues
        self._energies = E
        self.log_partition = float(logsumexp(-self.beta * E))
        self._logp = -self.beta * E - self.log_partition
        if not np.all(np.isfinite(self._logp)):
            raise NumericRangeError("Gibbs weights overflow")
        self._powers: Dict[float, np.ndarray] = {}
        self.rho = self.power(1.0)

    @property
    def dim(self) -> int:
        return self._energies.size

    @property
    def probabilities(self) -> np.ndarray:
        """Eigenvalues of ``rho`` in the eigenbasis order of ``H``."""
        return np.exp(self._logp)

    @property
    def sigma_min(self) -> float:
        return float(np.exp(self._logp.min()))

    def power(self, s: float) -> np.ndarray:
        s = float(s)
        if s not in self._powers:
            if s == 0.0:
                self._powers[s] = np.eye(self.dim, dtype=complex)
            else:
                V = self.spectrum.vectors
                w = np.exp(s * self._logp)
                P = (V * w) @ V.conj().T
                self._powers[s] = 0.5 * (P + P.conj().T)
        return self._powers[s]

    def expectation(self, O) -> float:
        return float(np.real(np.trace(self.rho @ np.asarray(O))))


def gibbs_state(H, beta: float) -> GibbsState:
    return GibbsState(H, beta)


def ground_state_projector(H, tol: Optional[float] = None) -> np.ndarray:
    """Normalized projector onto the ground space (the zero-temperature state)."""
    Hm = H.dense if isinstance(H, LocalHamiltonian) else H
    spec = eig_hermitian(Hm, tol)
    return spec.projectors[0] / spec.multiplicities[0]


@dataclass
class BohrDecomposition:
    frequencies: np.ndarray
    components: Dict[float, np.ndarray]

    def total(self) -> np.ndarray:
        return sum(self.components.values())

    def component(self, nu: float, tol: float = 1e-9) -> np.ndarray:
        for f, C in self.components.items():
            if abs(f - nu) <= tol:
                return C
        raise KeyError(nu)


def bohr_decompose(O, H, tol: Optional[float] = None) -> BohrDecomposition:
    """Split ``O`` into components ``O_nu = sum_{E_i - E_j = nu} Pi_i O Pi_j``."""
    O = np.asarray(O, dtype=complex)
    spec = H.spectrum if isinstance(H, LocalHamiltonian) else eig_hermitian(H)
    E = spec.eigenvalues
    scale = max(1.0, float(np.max(np.abs(E))))
    ftol = 1e-9 * scale if tol is None else tol
    diffs = (E[:, None] - E[None, :]).ravel()
    order = np.argsort(diffs, kind="stable")
    clusters = []
    for idx in order:
        if clusters and diffs[idx] - diffs[clusters[-1][-1]] < ftol:
            clusters[-1].append(idx)
        else:
            clusters.append([idx])
    nE = E.size
    freqs = []
    comps = {}
    for cl in clusters:
        nu = float(np.mean(diffs[cl]))
        C = np.zeros_like(O)
        for idx in cl:
            i, j = divmod(int(idx), nE)
            C += spec.projectors[i] @ O @ spec.projectors[j]
        freqs.append(nu)
        comps[nu] = C
    return BohrDecomposition(np.array(freqs), comps)


@dataclass
class ClassicalChain:
    transition: np.ndarray
    stationary: np.ndarray
    energies: np.ndarray
    beta: float

    @property
    def size(self) -> int:
        return self.transition.shape[0]


def birth_death(m: int, beta: float) -> ClassicalChain:
    """Biased birth-death chain on ``0..m`` with ``log(p/q) = beta``."""
    if m < 2:
        raise ModelError("birth-death chain needs m >= 2")
    if not beta > 0:
        raise ModelError("birth-death chain needs beta > 0")
    p = 1.0 / (1.0 + np.exp(-beta))
    q = 1.0 / (1.0 + np.exp(beta))
    P = np.zeros((m + 1, m + 1))
    for k in range(m + 1):
        if k > 0:
            P[k, k - 1] = p
        else:
            P[k, k] += p
        if k < m:
            P[k, k + 1] = q
        else:
            P[k, k] += q
    k = np.arange(m + 1)
    logpi = -beta * k
    pi = np.exp(logpi - logsumexp(logpi))
    return ClassicalChain(P, pi, k.astype(float), float(beta))


# ---------------------------------------------------------------------------
# Config-driven construction
# ---------------------------------------------------------------------------

def model_from_config(cfg: Mapping) -> LocalHamiltonian:
    """Build a Hamiltonian from a plain mapping such as ``{"name": "ising3", "alpha": 2, ...}``.

    Keys besides the model parameters (``beta``, ``seed``...) are ignored here;
    callers validate the full document.
    """
    name = cfg.get("name")
    if name == "ising3":
        return ising3(float(cfg["alpha"]), float(cfg["h"]), float(cfg["gamma"]))
    if name == "pauli":
        terms = [PauliTerm(float(t["coefficient"]), {int(k): v for k, v in t["paulis"].items()})
                 for t in cfg["terms"]]
        return build_hamiltonian(int(cfg["n"]), terms)
    raise ModelError(f"unknown quantum model {name!r}")


def load_model_file(path) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"model file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidInputError("model file must contain a JSON object")
    return data
