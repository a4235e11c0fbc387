"""Autocorrelation analysis of measurement trajectories.

Notation: ``E = M N^r M`` is one round and ``Ehat = M N^r Mhat`` the same
round with the first measurement weighted by ``(u - v)``.  The correlation
between samples ``p`` rounds apart is::

    Cor(p - 1) = tr(Ehat E^(p-1) Ehat (rho_beta))

``C(t) = Cor(t) / V`` and ``t_aut,K = 1/2 + sum_{t=1}^K (1 - t/K) C(t-1)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .channels import (
    QuantumChannel,
    check_detailed_balance,
    compose,
    power_channel,
    spectral_gap,
)
from .estimator import TrajectoryConfig, TrajectoryRecord, plan_sample_size, planned_burn_in, run_repeated
from .gqpe import DiagonalInstrument, hat_map, outcome_distribution
from .linalg import InvalidInputError, vec, weighting_superoperator
from .models import ClassicalChain, GibbsState


class NonUniqueFixedPointError(RuntimeError):
    """The round channel has a degenerate eigenvalue 1."""


@dataclass
class RoundMaps:
    """Superoperators ``E``, ``Ehat`` and the stationary data they need."""

    S_E: np.ndarray
    S_Ehat: np.ndarray
    rho: np.ndarray
    v: float
    variance: float
    covariance: float

    @property
    def p(self) -> float:
        return self.covariance / self.variance if self.variance > 0 else 0.0


def round_maps(N: QuantumChannel, M: DiagonalInstrument, rho_beta: GibbsState, skip_r: int = 1) -> RoundMaps:
    SN = np.linalg.matrix_power(N.superop, skip_r)
    SM = M.superop
    SMhat = hat_map(M, rho_beta)
    stats = outcome_distribution(M, rho_beta.rho)
    return RoundMaps(SM @ SN @ SM, SM @ SN @ SMhat, rho_beta.rho, stats.expectation,
                     stats.variance, stats.covariance)


def correlations(maps: RoundMaps, n_lags: int) -> np.ndarray:
    """``Cor(0), ..., Cor(n_lags - 1)`` by repeated application of ``E``."""
    D = maps.rho.shape[0]
    row = vec(np.eye(D)).conj() @ maps.S_Ehat
    w = maps.S_Ehat @ vec(maps.rho)
    out = np.empty(n_lags)
    for t in range(n_lags):
        out[t] = np.real(row @ w)
        w = maps.S_E @ w
    return out


def t_aut_finite(C: np.ndarray, K: int) -> float:
    """``1/2 + sum_{t=1}^K (1 - t/K) C(t-1)`` (needs ``C`` up to index ``K-1``)."""
    t = np.arange(1, K + 1)
    return float(0.5 + np.sum((1 - t / K) * np.asarray(C)[:K]))


def t_aut_infinite(maps: RoundMaps) -> float:
    """``1/2 + sum_{t>=0} C(t)`` through one linear solve.

    ``Ehat(rho)`` is traceless, so the geometric series converges on it; the
    rank-one term ``vec(rho) vec(I)^dag`` shifts the fixed point away from 1.
    """
    D = maps.rho.shape[0]
    r = vec(maps.rho)
    one = vec(np.eye(D)).conj()
    A = np.eye(D * D) - maps.S_E + np.outer(r, one)
    x = np.linalg.solve(A, maps.S_Ehat @ r)
    total = float(np.real(one @ maps.S_Ehat @ x))
    return 0.5 + total / maps.variance


@dataclass
class AutocorrReport:
    curve: list
    t_aut_K: float
    t_aut_inf: float
    bound: float
    bound_satisfied: bool
    K: int
    p: float
    variance: float
    covariance: float
    gap: float
    empirical_tau: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def curve_csv(self) -> str:
        lines = ["t,C"] + [f"{t},{c!r}" for t, c in self.curve]
        return "\n".join(lines) + "\n"


def autocorr_exact(N: QuantumChannel, M: DiagonalInstrument, rho_beta: GibbsState, t_max: int,
                   skip_r: int = 1, s: float = 0.5, gap: Optional[float] = None) -> AutocorrReport:
    """Exact autocorrelation curve, ``t_aut,K`` with ``K = t_max``, and the gap bound ``p/gap + 1/2``."""
    if t_max < 1:
        raise InvalidInputError("t_max must be at least 1")
    maps = round_maps(N, M, rho_beta, skip_r)
    Cor = correlations(maps, t_max)
    C = Cor / maps.variance
    g = spectral_gap(power_channel(N, skip_r), rho_beta, s).gap if gap is None else gap
    t_k = t_aut_finite(C, t_max)
    bound = maps.p / g + 0.5 if g > 0 else math.inf
    return AutocorrReport([(int(t), float(c)) for t, c in enumerate(C)], t_k, t_aut_infinite(maps),
                          float(bound), bool(t_k <= bound + 1e-9), int(t_max), maps.p,
                          maps.variance, maps.covariance, float(g))


# ---------------------------------------------------------------------------
# Spectral covariance weight
# ---------------------------------------------------------------------------

@dataclass
class SpectralReport:
    lambdas: np.ndarray
    alpha_1j: np.ndarray
    alpha_j1: np.ndarray
    alpha: np.ndarray
    sc: float
    cov: float
    variance: float
    p: float

    def lag_correlation(self, p: int) -> float:
        """``sum_{j>=2} alpha_1j alpha_j1 lambda_j**(p-1)`` for lag ``p >= 1``."""
        lam = self.lambdas[1:]
        return float(np.real(np.sum(self.alpha_1j[1:] * self.alpha_j1[1:] * lam ** (p - 1))))


def spectral_covariance(maps: RoundMaps, rho_beta: GibbsState, s: float = 0.5,
                        tol: float = 1e-9) -> SpectralReport:
    """Orthonormal eigenbasis ``{Y_i}`` of ``E^dag`` under ``<.,.>_s`` and the coefficients
    ``alpha_ij = <Y_j, Ehat^dag(Y_i)>_s``.

    With ``Y_i = F^{-1/2} u_i`` the ``u_i`` are orthonormal eigenvectors of the
    Hermitian matrix ``F^{1/2} S_E^dag F^{-1/2}``; ``u_1 = vec(rho**(1/2))``
    corresponds to ``Y_1 = I`` and is fixed before diagonalizing the rest.
    """
    Fp = weighting_superoperator(rho_beta, s, 0.5)
    Fm = weighting_superoperator(rho_beta, s, -0.5)
    A = Fp @ maps.S_E.conj().T @ Fm
    A = 0.5 * (A + A.conj().T)
    u1 = Fp @ vec(np.eye(rho_beta.dim))
    u1 = u1 / np.linalg.norm(u1)
    Q = np.eye(A.shape[0]) - np.outer(u1, u1.conj())
    evals, evecs = np.linalg.eigh(Q @ A @ Q)
    overlap = np.abs(evecs.conj().T @ u1)
    drop = int(np.argmax(overlap))
    keep = [i for i in range(evals.size) if i != drop]
    order = sorted(keep, key=lambda i: -evals[i])
    lam = np.concatenate([[float(np.real(u1.conj() @ A @ u1))], evals[order]])
    if lam.size > 1 and lam[1] > 1 - tol:
        raise NonUniqueFixedPointError(f"second eigenvalue {lam[1]:.12f} is within {tol} of 1")
    U = np.column_stack([u1, evecs[:, order]])
    B = Fp @ maps.S_Ehat.conj().T @ Fm
    alpha = (U.conj().T @ B @ U).T
    sc = float(np.sum(np.abs(alpha[0, :] * alpha[:, 0])))
    return SpectralReport(lam, alpha[0, :].copy(), alpha[:, 0].copy(), alpha, sc,
                          maps.covariance, maps.variance, maps.p)


# ---------------------------------------------------------------------------
# Bound checks
# ---------------------------------------------------------------------------

@dataclass
class AutGapResult:
    t_aut_K: float
    bound: float
    ok: bool
    skipped: bool = False
    reason: str = ""


def hat_is_detailed_balanced(M: DiagonalInstrument, rho_beta: GibbsState, s: float, tol: float = 1e-9) -> float:
    """Symmetry residual of ``Mhat`` (it is not trace preserving, so only symmetry is meaningful)."""
    return check_detailed_balance(hat_map(M, rho_beta), rho_beta, s, tol).residual


def verify_aut_gap(N: QuantumChannel, M: DiagonalInstrument, rho_beta: GibbsState, K: int,
                   s: float = 0.5, tol: float = 1e-9) -> AutGapResult:
    nd = check_detailed_balance(N, rho_beta, s, tol)
    md = check_detailed_balance(M.channel(), rho_beta, s, tol)
    hat_res = hat_is_detailed_balanced(M, rho_beta, s, tol)
    if not (nd.passes and md.passes and hat_res <= tol):
        reason = (f"hypothesis not met: N residual {nd.residual:.2e}, M residual {md.residual:.2e}, "
                  f"Mhat residual {hat_res:.2e}")
        return AutGapResult(float("nan"), float("nan"), False, True, reason)
    rep = autocorr_exact(N, M, rho_beta, K, s=s)
    return AutGapResult(rep.t_aut_K, rep.bound, rep.bound_satisfied)


def sum_variance_recursion(N: QuantumChannel, M: DiagonalInstrument, rho_beta: GibbsState, K: int,
                           skip_r: int = 1) -> float:
    """``E[(sum_t e_t - K v)**2]`` for a stationary trajectory by forward moment recursion.

    Tracks ``rho_k = sum over histories of (S - t v)**k times the post-round state``
    for ``k = 0, 1, 2``; this never forms a correlation function, so it is an
    independent check of the variance identity.
    """
    from .gqpe import hat_map_weighted

    stats = outcome_distribution(M, rho_beta.rho)
    v = stats.expectation
    SN = np.linalg.matrix_power(N.superop, skip_r)
    SM = M.superop
    A0 = SM @ SN @ SM
    A1 = SM @ SN @ hat_map_weighted(M, M.labels - v)
    A2 = SM @ SN @ hat_map_weighted(M, (M.labels - v) ** 2)
    r0 = vec(rho_beta.rho).astype(complex)
    r1 = np.zeros_like(r0)
    r2 = np.zeros_like(r0)
    for _ in range(K):
        r0, r1, r2 = A0 @ r0, A0 @ r1 + A1 @ r0, A0 @ r2 + 2 * (A1 @ r1) + A2 @ r0
    D = rho_beta.dim
    return float(np.real(vec(np.eye(D)).conj() @ r2))


def time_average_var_bound(variance: float, sc: float, gap: float, K: int) -> float:
    """``K (V + 2 SC / gap(N))``."""
    return K * (variance + 2 * sc / gap)


def gap_monotonicity(N: QuantumChannel, M: DiagonalInstrument, rho_beta: GibbsState, s: float = 0.5) -> tuple:
    """``(gap(M N M), gap(N))``."""
    Mc = M.channel()
    E = compose([Mc, N, Mc])
    return spectral_gap(E, rho_beta, s).gap, spectral_gap(N, rho_beta, s).gap


# ---------------------------------------------------------------------------
# Empirical estimation
# ---------------------------------------------------------------------------

@dataclass
class AutocorrEstimate:
    tau: float
    window: int
    stderr: float
    reliable: bool

    def __float__(self) -> float:
        return self.tau


def autocorrelation_function(x) -> np.ndarray:
    """Normalized sample autocorrelation ``rho(t)`` for ``t = 0..n-1`` via FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    y = x - x.mean()
    size = 1 << int(math.ceil(math.log2(2 * n)))
    f = np.fft.rfft(y, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    if acov[0] <= 0:
        return np.zeros(n)
    return acov / acov[0]


def autocorr_empirical(record, window_c: float = 5.0) -> AutocorrEstimate:
    """Integrated autocorrelation time with the self-consistent window ``W >= c tau(W)``.

    ``tau(W) = 1/2 + sum_{t=1}^W rho(t)``, matching the exact ``t_aut,inf``.
    """
    x = record.outcomes if isinstance(record, TrajectoryRecord) else np.asarray(record, dtype=float)
    n = x.size
    if n < 100:
        raise InvalidInputError("need at least 100 samples for an autocorrelation estimate")
    rho = autocorrelation_function(x)
    taus = 0.5 + np.cumsum(rho[1:])
    W = np.arange(1, n)
    ok = np.flatnonzero(W >= window_c * taus)
    reliable = ok.size > 0 and W[ok[0]] < n / 10
    w = int(W[ok[0]]) if ok.size else n - 1
    tau = float(taus[w - 1])
    stderr = float(tau * math.sqrt(2 * (2 * w + 1) / n))
    return AutocorrEstimate(tau, w, stderr, bool(reliable))


@dataclass
class ChebyshevResult:
    failure_rate: float
    K: int
    t_burn: int
    threshold: float
    eta: float
    passes: bool
    errors: np.ndarray = field(repr=False, default=None)


def chebyshev_check(N: QuantumChannel, M: DiagonalInstrument, rho0, rho_beta: GibbsState, eps: float,
                    eta: float, repeats: int, seed: int, t_burn: Optional[int] = None,
                    K: Optional[int] = None, s: float = 0.5) -> ChebyshevResult:
    """Failure frequency of ``|X_K - E(M)| >= eps`` over seeded runs at the planned ``K`` and burn-in.

    Passing means the rate is at most ``2 eta`` plus three binomial standard errors.
    """
    stats = outcome_distribution(M, rho_beta.rho)
    gap = spectral_gap(N, rho_beta, s).gap
    p = stats.covariance / stats.variance
    K = plan_sample_size(stats.variance, eps, eta, gap, p) if K is None else K
    t_burn = planned_burn_in(gap, eta, rho_beta.sigma_min) if t_burn is None else t_burn
    cfg = TrajectoryConfig(t_burn=int(t_burn), K=int(K), seed=seed)
    X = run_repeated(N, M, rho0, cfg, repeats)
    err = np.abs(X - stats.expectation)
    rate = float(np.mean(err >= eps))
    q = min(2 * eta, 1.0)
    thr = q + 3 * math.sqrt(q * (1 - q) / repeats)
    return ChebyshevResult(rate, int(K), int(t_burn), thr, eta, rate <= thr, err)


# ---------------------------------------------------------------------------
# Classical chains
# ---------------------------------------------------------------------------

def chain_gap(chain: ClassicalChain) -> float:
    """``1 - lambda_2`` from the symmetrized transition matrix ``D^(1/2) P D^(-1/2)``."""
    s = np.sqrt(chain.stationary)
    A = (s[:, None] * chain.transition) / s[None, :]
    ev = np.sort(np.linalg.eigvalsh(0.5 * (A + A.T)))[::-1]
    return float(1 - ev[1])


def chain_correlations(chain: ClassicalChain, f, n_lags: int) -> np.ndarray:
    """Normalized stationary correlations ``C(t-1) = Cov(f(x_0), f(x_t)) / Var(f)`` for ``t = 1..n_lags``.

    For an ideal projective readout of ``f`` the recorded samples form the
    chain itself, so lag ``t`` involves ``P**t``.
    """
    pi = chain.stationary
    f = np.asarray(f, dtype=float)
    g = f - pi @ f
    var = float(pi @ g ** 2)
    out = np.empty(n_lags)
    w = g.copy()
    for t in range(n_lags):
        w = chain.transition @ w
        out[t] = pi @ (g * w) / var
    return out


def chain_hitting_profile(chain: ClassicalChain, start: int, eps: float, t_limit: int = 100000) -> int:
    """Smallest ``t`` with ``||P^t(start, .) - pi||_1 <= eps`` (a lower bound on the worst-case mixing time)."""
    x = np.zeros(chain.size)
    x[start] = 1.0
    for t in range(t_limit + 1):
        if np.sum(np.abs(x - chain.stationary)) <= eps:
            return t
        x = x @ chain.transition
    raise RuntimeError(f"state {start} did not mix within {t_limit} steps")


def mixing_lower_bound(gap: float, eps: float) -> float:
    return (1.0 / gap - 1.0) * math.log(1.0 / eps)
