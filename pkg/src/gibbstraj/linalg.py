"""Dense complex linear algebra used throughout the package.

Conventions
-----------
Operators are dense ``numpy`` arrays.  Vectorization is column stacking,
``vec(X)[r + c*D] = X[r, c]``, so that ``vec(A X B) = (B^T kron A) vec(X)``.
With this convention the superoperator of ``X -> sum_u K_u X K_u^dagger`` is
``sum_u conj(K_u) kron K_u`` and the superoperator of the dual map is the
conjugate transpose of that matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class InvalidInputError(ValueError):
    """Raised for malformed matrices (wrong shape, non-Hermitian, non-finite)."""


class DomainError(ValueError):
    """Raised when a matrix function is not finite on the spectrum."""


class RankError(ValueError):
    """Raised when a weighted inner product needs a full-rank state."""


class ChannelValidityError(ValueError):
    """Raised when Kraus operators fail the completeness relation."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


DEFAULT_HERMITICITY_TOL = 1e-12
DEFAULT_CHANNEL_TOL = 1e-10


def as_square(A, name: str = "matrix") -> np.ndarray:
    """Return ``A`` as a complex square array, or raise InvalidInputError."""
    arr = np.asarray(A)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr.astype(complex, copy=False)


def hermiticity_residual(A: np.ndarray) -> float:
    """Max-entry distance between ``A`` and its conjugate transpose."""
    A = np.asarray(A)
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


def check_hermitian(A, tol: float = DEFAULT_HERMITICITY_TOL, name: str = "operator") -> np.ndarray:
    """Validate Hermiticity up to ``tol`` (scaled by the largest entry) and return the symmetrized matrix."""
    arr = as_square(A, name)
    scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
    res = hermiticity_residual(arr)
    if res > tol * scale:
        raise InvalidInputError(f"{name} is not Hermitian: max|A - A^dag| = {res:.3e} > {tol:.1e}")
    return 0.5 * (arr + arr.conj().T)


def operator_norm(A) -> float:
    """Spectral norm (largest singular value)."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def trace_norm(A) -> float:
    """Trace norm, the sum of singular values."""
    A = as_square(A)
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a Hermitian matrix with degenerate eigenvalues grouped.

    ``eigenvalues[k]`` is the (averaged) eigenvalue of the k-th eigenspace in
    ascending order, ``projectors[k]`` its orthogonal projector, and
    ``labels[a]`` the eigenspace index of column ``a`` of ``vectors``.
    """

    eigenvalues: np.ndarray
    projectors: list
    multiplicities: np.ndarray
    vectors: np.ndarray
    labels: np.ndarray
    raw_eigenvalues: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def reconstruct(self) -> np.ndarray:
        return sum(E * P for E, P in zip(self.eigenvalues, self.projectors))


def eig_hermitian(A, degeneracy_tol: Optional[float] = None,
                  hermiticity_tol: float = DEFAULT_HERMITICITY_TOL) -> Spectrum:
    """Hermitian eigendecomposition with eigenvalues clustered into eigenspaces.

    Consecutive sorted eigenvalues closer than ``degeneracy_tol`` (default
    ``1e-9 * max(1, ||A||)``) are merged.
    """
    A = check_hermitian(A, hermiticity_tol)
    evals, evecs = np.linalg.eigh(A)
    scale = max(1.0, float(np.max(np.abs(evals)))) if evals.size else 1.0
    tol = 1e-9 * scale if degeneracy_tol is None else degeneracy_tol
    labels = np.zeros(evals.size, dtype=int)
    for a in range(1, evals.size):
        labels[a] = labels[a - 1] + (1 if evals[a] - evals[a - 1] >= tol else 0)
    n_groups = int(labels[-1]) + 1 if evals.size else 0
    eigenvalues = np.array([evals[labels == k].mean() for k in range(n_groups)])
    multiplicities = np.array([int(np.sum(labels == k)) for k in range(n_groups)])
    projectors = []
    for k in range(n_groups):
        V = evecs[:, labels == k]
        projectors.append(V @ V.conj().T)
    return Spectrum(eigenvalues, projectors, multiplicities, evecs, labels, evals)


def matrix_function(A, f: Callable[[np.ndarray], np.ndarray], spectrum: Optional[Spectrum] = None) -> np.ndarray:
    """Return ``sum_k f(E_k) Pi_k`` for Hermitian ``A``.

    ``f`` is applied to the array of distinct eigenvalues and must be finite there.
    """
    spec = eig_hermitian(A) if spectrum is None else spectrum
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        values = np.asarray(f(spec.eigenvalues), dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        E = spec.eigenvalues[np.argmax(bad)]
        raise DomainError(f"function is not finite at eigenvalue {E!r}")
    fa = values[spec.labels]
    V = spec.vectors
    out = (V * fa) @ V.conj().T
    return 0.5 * (out + out.conj().T)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """Random density matrix from the Ginibre ensemble."""
    r = dim if rank is None else rank
    G = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


# ---------------------------------------------------------------------------
# Weighted inner products
# ---------------------------------------------------------------------------

def state_power(rho, s: float) -> np.ndarray:
    """``rho**s`` for a state given either as an object with ``power(s)`` or as a matrix."""
    if hasattr(rho, "power"):
        return rho.power(s)
    rho = check_hermitian(rho, 1e-10, "state")
    if s == 0.0:
        return np.eye(rho.shape[0], dtype=complex)
    if s == 1.0:
        return rho
    evals = np.linalg.eigvalsh(rho)
    if evals.min() <= 0:
        raise RankError(f"state is singular (min eigenvalue {evals.min():.3e}); power {s} undefined")
    return matrix_function(rho, lambda x: x ** s)


def weighted_inner(A, B, rho, s: float) -> complex:
    """``<A, B>_s = tr(A^dag rho^(1-s) B rho^s)``."""
    if not 0.0 <= s <= 1.0:
        raise InvalidInputError(f"s must lie in [0, 1], got {s}")
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape:
        raise InvalidInputError(f"shape mismatch {A.shape} vs {B.shape}")
    left = state_power(rho, 1.0 - s)
    right = state_power(rho, s)
    return complex(np.trace(A.conj().T @ left @ B @ right))


def weighting_superoperator(rho, s: float, exponent: float = 1.0) -> np.ndarray:
    """Superoperator of ``X -> rho^(e(1-s)) X rho^(e s)`` (``F_s^e`` for ``e`` in {1, 1/2, -1/2})."""
    left = state_power(rho, exponent * (1.0 - s))
    right = state_power(rho, exponent * s)
    return np.kron(right.T, left)


# ---------------------------------------------------------------------------
# Superoperators
# ---------------------------------------------------------------------------

def vec(X) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(v, dim: Optional[int] = None) -> np.ndarray:
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size))) if dim is None else dim
    return v.reshape((d, d), order="F")


def sandwich_superoperator(L, R) -> np.ndarray:
    """Superoperator of ``X -> L X R``."""
    return np.kron(np.asarray(R).T, np.asarray(L))


def completeness_residual(kraus: Sequence[np.ndarray]) -> float:
    """Operator norm of ``sum_u K_u^dag K_u - I``."""
    ks = np.asarray(kraus)
    S = np.einsum("kji,kjl->il", ks.conj(), ks)
    return operator_norm(S - np.eye(S.shape[0]))


def to_superoperator(kraus: Sequence[np.ndarray], tol: float = DEFAULT_CHANNEL_TOL,
                     check: bool = True) -> np.ndarray:
    """Superoperator ``sum_u conj(K_u) kron K_u`` of a Kraus list."""
    ks = np.asarray(kraus, dtype=complex)
    if ks.ndim != 3 or ks.shape[1] != ks.shape[2]:
        raise InvalidInputError(f"Kraus operators must be square and equal size, got {ks.shape}")
    if check:
        res = completeness_residual(ks)
        if res > tol:
            raise ChannelValidityError(f"Kraus completeness violated: ||sum K^dag K - I|| = {res:.3e}", res)
    D = ks.shape[1]
    S = np.einsum("kab,kcd->acbd", ks.conj(), ks).reshape(D * D, D * D)
    return S


def apply_superoperator(S, X) -> np.ndarray:
    X = np.asarray(X)
    return unvec(np.asarray(S) @ vec(X), X.shape[0])


def apply_kraus(kraus: Sequence[np.ndarray], X) -> np.ndarray:
    ks = np.asarray(kraus)
    return np.einsum("kab,bc,kdc->ad", ks, np.asarray(X), ks.conj())


def choi_matrix(S) -> np.ndarray:
    """Choi matrix ``J = sum_ij |i><j| kron T(|i><j|)`` of a superoperator."""
    S = np.asarray(S)
    D = int(round(np.sqrt(S.shape[0])))
    # S[r + c D, i + j D] = T(E_ij)[r, c];  J[(i, r), (j, c)] = T(E_ij)[r, c]
    T = S.reshape(D, D, D, D, order="F")  # indices r, c, i, j
    return T.transpose(2, 0, 3, 1).reshape(D * D, D * D)


def kraus_from_superoperator(S, discard_below: float = 1e-12, negativity_tol: float = 1e-9) -> list:
    """Kraus operators from the eigendecomposition of the Choi matrix.

    Eigen-directions with eigenvalue below ``discard_below`` are dropped; an
    eigenvalue below ``-negativity_tol`` means the map is not completely positive.
    """
    J = choi_matrix(S)
    J = 0.5 * (J + J.conj().T)
    evals, evecs = np.linalg.eigh(J)
    if evals.min() < -negativity_tol:
        raise ChannelValidityError(f"Choi matrix has eigenvalue {evals.min():.3e} < 0", float(-evals.min()))
    D = int(round(np.sqrt(S.shape[0])))
    kraus = []
    for lam, v in zip(evals, evecs.T):
        if lam < discard_below:
            continue
        # v[(i, r)] with i the row-block index; K[r, i] = sqrt(lam) v[(i, r)]
        kraus.append(np.sqrt(lam) * v.reshape(D, D).T)
    return kraus
