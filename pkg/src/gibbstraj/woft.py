"""Weighted operator Fourier transform (WOFT) and measurements of non-commuting observables.

With the Gaussian ``f(t) = (tau/sqrt(pi)) exp(-tau**2 t**2)``::

    Ohat(tau) = int exp(iHt) O exp(-iHt) f(t) dt = sum_nu exp(-nu**2/(4 tau**2)) O_nu

The exact form is evaluated as a Schur product in the eigenbasis of ``H``; the
discretized form replaces the integral by the Riemann sum on
``t_j = -T + j/L``, ``j = 0..2TL-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import erfc

from .gqpe import (
    GqpeInstrument,
    build_instrument,
    choose_params,
    disturbance,
    disturbance_bound,
    outcome_distribution,
)
from .linalg import InvalidInputError, Spectrum, check_hermitian, eig_hermitian, operator_norm, trace_norm
from .models import GibbsState, LocalHamiltonian, ground_state_projector

TAU_SWEEP = tuple(2.0 ** -k for k in range(1, 13))


class WoftParamsError(ValueError):
    """Raised when the quadrature parameters cannot meet the requested accuracy."""


class InfeasibleTauError(RuntimeError):
    """No ``tau`` in the sweep brings the commutator below the requested threshold."""

    def __init__(self, message: str, curve):
        super().__init__(message)
        self.curve = curve


def _dense(H) -> np.ndarray:
    return H.dense if isinstance(H, LocalHamiltonian) else check_hermitian(H)


def _spectrum(H) -> Spectrum:
    return H.spectrum if isinstance(H, LocalHamiltonian) else eig_hermitian(H)


def _state(H, beta: float) -> np.ndarray:
    """Gibbs state, or the normalized ground-space projector when ``beta`` is infinite."""
    if math.isinf(beta):
        return ground_state_projector(H)
    return GibbsState(H, beta).rho


def _bohr_differences(spec: Spectrum) -> np.ndarray:
    """``E_a - E_b`` over eigenvector columns, using clustered eigenvalues."""
    E = spec.eigenvalues[spec.labels]
    return E[:, None] - E[None, :]


def _schur(O, spec: Spectrum, weights: np.ndarray) -> np.ndarray:
    V = spec.vectors
    Oe = V.conj().T @ np.asarray(O, dtype=complex) @ V
    out = V @ (weights * Oe) @ V.conj().T
    return 0.5 * (out + out.conj().T)


def gaussian_window(t, tau: float):
    return tau / math.sqrt(math.pi) * np.exp(-(tau * np.asarray(t)) ** 2)


def woft_exact(O, H, tau: float) -> np.ndarray:
    if not tau > 0:
        raise InvalidInputError("tau must be positive")
    O = check_hermitian(O, 1e-10, "observable")
    spec = _spectrum(H)
    nu = _bohr_differences(spec)
    return _schur(O, spec, np.exp(-nu ** 2 / (4 * tau ** 2)))


@dataclass(frozen=True)
class WoftParams:
    tau: float
    T: float
    L: int
    eps: float

    @property
    def n_points(self) -> int:
        return int(round(2 * self.T * self.L))

    def times(self) -> np.ndarray:
        return -self.T + np.arange(self.n_points) / self.L


def discrete_weights(nu: np.ndarray, params: WoftParams, chunk: int = 4096) -> np.ndarray:
    """``sum_j (1/L) f(t_j) exp(i nu t_j)`` for each entry of ``nu``."""
    nu = np.asarray(nu, dtype=float)
    flat = nu.ravel()
    uniq, inv = np.unique(np.round(flat, 12), return_inverse=True)
    acc = np.zeros(uniq.size, dtype=complex)
    t = params.times()
    for start in range(0, t.size, chunk):
        tt = t[start:start + chunk]
        fw = gaussian_window(tt, params.tau) / params.L
        acc += np.exp(1j * np.outer(uniq, tt)) @ fw
    return acc[inv].reshape(nu.shape)


def woft_discretized(O, H, params: WoftParams, check: bool = True) -> np.ndarray:
    """Time-quadrature WOFT, symmetrized; optionally certified against the exact form."""
    O = check_hermitian(O, 1e-10, "observable")
    spec = _spectrum(H)
    nu = _bohr_differences(spec)
    out = _schur(O, spec, discrete_weights(nu, params))
    if check:
        err = operator_norm(out - woft_exact(O, H, params.tau))
        if err > params.eps:
            raise WoftParamsError(f"||Ohat - Ohat_dis|| = {err:.3e} > eps = {params.eps:.1e}; "
                                  f"increase T (now {params.T}) or L (now {params.L})")
    return out


def choose_woft_params(H, tau: float, eps: float, O_norm: float = 1.0) -> WoftParams:
    """Quadrature parameters with a-priori control of both error sources.

    Truncation at ``|t| = T`` loses ``erfc(tau T)`` of the window mass, and
    sampling with step ``1/L`` aliases frequencies by ``2 pi L``; ``L`` is
    taken large enough that the nearest alias of every Bohr frequency sits
    ``2 tau sqrt(ln(4/eps'))`` beyond it.  ``2TL`` is rounded to an integer.
    """
    if not (tau > 0 and eps > 0):
        raise InvalidInputError("tau and eps must be positive")
    spec = _spectrum(H)
    nu_max = float(np.ptp(spec.eigenvalues)) if spec.eigenvalues.size > 1 else 0.0
    # the operator error is at most the number of frequencies times the weight error times ||O||
    n_freq = max(1, spec.eigenvalues.size ** 2)
    eps_w = eps / (2.0 * n_freq * max(O_norm, 1e-300))
    L = max(1, math.ceil((nu_max + 2 * tau * math.sqrt(math.log(4.0 / eps_w))) / (2 * math.pi)))
    T = 1.0 / tau
    while erfc(tau * T) > eps_w / 2:
        T *= 1.25
    T = math.ceil(2 * T * L) / (2 * L)
    return WoftParams(float(tau), float(T), int(L), float(eps))


@dataclass
class WoftOperator:
    exact: np.ndarray
    discretized: Optional[np.ndarray]
    tau: float
    commutator_trace_norm: float
    params: Optional[WoftParams] = None

    @property
    def discretization_error(self) -> float:
        if self.discretized is None:
            return float("nan")
        return operator_norm(self.exact - self.discretized)


def commutator_trace_norm(A, rho) -> float:
    A = np.asarray(A)
    rho = np.asarray(rho)
    return trace_norm(A @ rho - rho @ A)


def woft_operator(O, H, beta: float, tau: float, eps: Optional[float] = None) -> WoftOperator:
    exact = woft_exact(O, H, tau)
    rho = _state(H, beta)
    params = dis = None
    if eps is not None:
        params = choose_woft_params(H, tau, eps, operator_norm(O))
        dis = woft_discretized(O, H, params)
    return WoftOperator(exact, dis, float(tau), commutator_trace_norm(exact, rho), params)


# ---------------------------------------------------------------------------
# Commutator decay certificates
# ---------------------------------------------------------------------------

@dataclass
class JoWeight:
    value: float
    energies: np.ndarray
    populations: np.ndarray
    nu_min: np.ndarray

    def table(self) -> list:
        return [{"energy": float(E), "population": float(p), "nu": float(n)}
                for E, p, n in zip(self.energies, self.populations, self.nu_min)]


def minimal_transitions(O, H, threshold: Optional[float] = None) -> np.ndarray:
    """For each eigenspace ``k``, the smallest ``|E_i - E_k| > 0`` with ``Pi_i O Pi_k != 0`` (``inf`` if none)."""
    O = np.asarray(O, dtype=complex)
    spec = _spectrum(H)
    thr = 1e-10 * operator_norm(O) if threshold is None else threshold
    E = spec.eigenvalues
    nu = np.full(E.size, np.inf)
    for k, Pk in enumerate(spec.projectors):
        for i, Pi in enumerate(spec.projectors):
            if i == k:
                continue
            if operator_norm(Pi @ O @ Pk) > thr:
                nu[k] = min(nu[k], abs(E[i] - E[k]))
    return nu


def jo_weight(O, H, beta: float, tau: float, threshold: Optional[float] = None) -> JoWeight:
    """``J_O(tau) = sum_k p_k exp(-nu_k**2/(4 tau**2))`` with ``p_k`` the eigenspace populations.

    ``beta = inf`` puts all population on the ground space.
    """
    spec = _spectrum(H)
    E = spec.eigenvalues
    if math.isinf(beta):
        p = np.zeros(E.size)
        p[0] = 1.0
    else:
        logw = np.log(spec.multiplicities) - beta * E
        p = np.exp(logw - np.logaddexp.reduce(logw))
    nu = minimal_transitions(O, H, threshold)
    with np.errstate(over="ignore"):
        w = np.where(np.isinf(nu), 0.0, np.exp(-np.where(np.isinf(nu), 0.0, nu) ** 2 / (4 * tau ** 2)))
    return JoWeight(float(p @ w), E.copy(), p, nu)


def ground_commutator_bound(H, tau: float) -> float:
    """``2 exp(-c**2/(4 tau**2))`` with ``c`` the gap above the ground space."""
    E = _spectrum(H).eigenvalues
    if E.size < 2:
        return 0.0
    c = float(E[1] - E[0])
    return 2.0 * math.exp(-c ** 2 / (4 * tau ** 2))


def commutator_curve(O, H, beta: float, taus: Sequence[float] = TAU_SWEEP) -> list:
    rho = _state(H, beta)
    return [(float(t), commutator_trace_norm(woft_exact(O, H, t), rho)) for t in taus]


# ---------------------------------------------------------------------------
# GQPE on the transformed observable
# ---------------------------------------------------------------------------

@dataclass
class NoncommutingResult:
    instrument: GqpeInstrument
    tau: float
    woft: WoftOperator
    curve: list
    target: float
    expectation: float
    bias: float
    disturbance: float
    disturbance_bound: float
    db_residual: float
    eps: float
    extras: dict = field(default_factory=dict)

    @property
    def bias_ok(self) -> bool:
        return self.bias <= 2 * self.eps

    @property
    def disturbance_ok(self) -> bool:
        return self.disturbance <= self.disturbance_bound


def select_tau(O, H, beta: float, eps: float, taus: Sequence[float] = TAU_SWEEP) -> tuple:
    """Largest ``tau`` in the sweep with ``||[Ohat(tau), rho]||_1 <= eps**2``."""
    curve = commutator_curve(O, H, beta, taus)
    ok = [t for t, c in curve if c <= eps ** 2]
    if not ok:
        raise InfeasibleTauError(f"no tau in the sweep reaches ||[Ohat, rho]||_1 <= {eps ** 2:.3e}", curve)
    return max(ok), curve


def noncommuting_instrument(O, H, beta: float, tau: Optional[float] = None, eps: float = 0.1,
                            s: float = 0.5) -> NoncommutingResult:
    """GQPE instrument on the discretized WOFT of ``O`` together with its error report."""
    from .channels import check_detailed_balance

    O = check_hermitian(O, 1e-10, "observable")
    if operator_norm(O) > 1 + 1e-12:
        raise InvalidInputError("noncommuting_instrument expects ||O|| <= 1")
    if tau is None:
        tau, curve = select_tau(O, H, beta, eps)
    else:
        curve = commutator_curve(O, H, beta, [tau])
    wo = woft_operator(O, H, beta, tau, eps)
    Od = wo.discretized
    kappa = max(1.0, operator_norm(Od))
    inst = build_instrument(Od, choose_params(kappa, eps), label=f"gqpe-woft tau={tau}")
    rho = _state(H, beta)
    stats = outcome_distribution(inst, rho)
    target = float(np.real(np.trace(rho @ O)))
    db_res = float("nan")
    if not math.isinf(beta):
        db_res = check_detailed_balance(inst.channel(), GibbsState(H, beta), s).residual
    return NoncommutingResult(
        instrument=inst, tau=float(tau), woft=wo, curve=curve, target=target,
        expectation=stats.expectation, bias=abs(stats.expectation - target),
        disturbance=disturbance(inst, rho), disturbance_bound=disturbance_bound(inst, rho),
        db_residual=db_res, eps=float(eps),
    )
