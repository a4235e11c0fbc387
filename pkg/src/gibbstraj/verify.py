"""Check suites over a small built-in matrix of models, channels and instruments.

Every check records the measured quantity, the threshold it is compared with
and the outcome, so a summary can be serialized without re-running anything.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .channels import check_detailed_balance, davies_channel, glauber_channel, spectral_gap
from .diagnostics import (
    autocorr_exact,
    correlations,
    gap_monotonicity,
    round_maps,
    spectral_covariance,
    sum_variance_recursion,
    t_aut_finite,
    time_average_var_bound,
)
from .gqpe import (
    build_instrument,
    choose_params,
    disturbance,
    leakage_operator_norm,
    moment_operator_errors,
    observable_variance,
    outcome_distribution,
)
from .linalg import operator_norm, random_density_matrix
from .models import GibbsState, PauliTerm, build_hamiltonian, ising3, pauli_string
from .woft import choose_woft_params, commutator_trace_norm, jo_weight, woft_discretized, woft_exact

SUITES = ("db", "gap-monotone", "gqpe", "woft", "autocorr")
DB_S_VALUES = (0.0, 0.25, 0.5, 1.0)


@dataclass
class CheckResult:
    suite: str
    name: str
    value: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("value", "threshold"):
            if not math.isfinite(d[k]):
                d[k] = str(d[k])
        return d


def _le(suite, name, value, threshold) -> CheckResult:
    return CheckResult(suite, name, float(value), float(threshold), bool(value <= threshold))


def two_qubit_hamiltonian():
    """Gapped, non-diagonal two-qubit model ``-Z0 Z1 - 0.5 Z0 - 0.3 X1``."""
    return build_hamiltonian(2, [PauliTerm(-1.0, {0: "Z", 1: "Z"}), PauliTerm(-0.5, {0: "Z"}),
                                 PauliTerm(-0.3, {1: "X"})])


@lru_cache(maxsize=None)
def pipeline_matrix():
    """``(name, H, beta, N)`` entries used by the suites."""
    H1 = ising3(2.0, 0.5, 0.25)
    H2 = ising3(1.0, 0.5, 0.25)
    H3 = two_qubit_hamiltonian()
    return (
        ("glauber/ising3(2,0.5,0.25) beta=2", H1, 2.0, glauber_channel(H1, 2.0)),
        ("glauber/ising3(1,0.5,0.25) beta=2", H2, 2.0, glauber_channel(H2, 2.0)),
        ("davies/ising3(1,0.5,0.25) beta=1", H2, 1.0, davies_channel(H2, 1.0)),
        ("davies/two-qubit beta=1", H3, 1.0, davies_channel(H3, 1.0)),
    )


def observables(H, eps: float = 0.1):
    kH = max(1.0, H.norm_bound)
    return (
        ("H", build_instrument(H.dense, choose_params(kH, eps))),
        ("H^2", build_instrument(H.dense @ H.dense, choose_params(kH ** 2, eps))),
    )


def suite_db(tol: float) -> list:
    out = []
    for name, H, beta, N in pipeline_matrix():
        g = GibbsState(H, beta)
        for s in DB_S_VALUES:
            rep = check_detailed_balance(N, g, s, tol)
            out.append(_le("db", f"{name} s={s} symmetry", rep.residual, tol))
            out.append(_le("db", f"{name} s={s} fixed point", rep.fixed_point_residual, tol))
    return out


def suite_gap_monotone(tol: float) -> list:
    out = []
    for name, H, beta, N in pipeline_matrix():
        g = GibbsState(H, beta)
        for oname, inst in observables(H):
            gE, gN = gap_monotonicity(N, inst, g)
            out.append(_le("gap-monotone", f"{name} O={oname} gap(N) - gap(MNM)", gN - gE, tol))
    return out


def suite_gqpe(tol: float, seed: int = 0) -> list:
    out = []
    rng = np.random.default_rng(seed)
    for name, H, beta, N in pipeline_matrix()[1:]:
        g = GibbsState(H, beta)
        for oname, inst in observables(H):
            p = inst.params
            tag = f"{name} O={oname}"
            out.append(_le("gqpe", f"{tag} completeness", inst.completeness_residual(), 1e-11))
            bias = var_gap = cov_excess = 0.0
            for _ in range(10):
                r = random_density_matrix(H.dim, rng)
                st = outcome_distribution(inst, r)
                bias = max(bias, abs(st.expectation - np.real(np.trace(r @ inst.observable))))
                var_gap = max(var_gap, abs(st.variance - observable_variance(inst.observable, r)))
                cov_excess = max(cov_excess, abs(st.covariance) - st.variance)
            out.append(_le("gqpe", f"{tag} bias", bias, p.eps))
            out.append(_le("gqpe", f"{tag} variance inflation", var_gap, 3 * p.gamma ** 2 * p.kappa ** 2))
            out.append(_le("gqpe", f"{tag} |Cov| - V", cov_excess, tol))
            m1, m2 = moment_operator_errors(inst)
            out.append(_le("gqpe", f"{tag} first moment operator", m1, p.eps_normalized))
            out.append(_le("gqpe", f"{tag} second moment operator", m2, 2 * p.gamma ** 2))
            out.append(_le("gqpe", f"{tag} leakage", leakage_operator_norm(inst), 2 * p.eps))
            out.append(_le("gqpe", f"{tag} M(rho_beta) = rho_beta", disturbance(inst, g.rho), tol))
    return out


def suite_woft(tol: float) -> list:
    out = []
    H = two_qubit_hamiltonian()
    O = pauli_string(2, {0: "X"})
    for beta in (0.5, 2.0, 8.0):
        g = GibbsState(H, beta)
        base = g.expectation(O)
        for tau in (0.125, 0.5, 2.0):
            Oh = woft_exact(O, H, tau)
            tag = f"two-qubit O=X0 beta={beta} tau={tau}"
            out.append(_le("woft", f"{tag} expectation shift", abs(g.expectation(Oh) - base), 1e-10))
            out.append(_le("woft", f"{tag} norm increase", operator_norm(Oh) - operator_norm(O), 1e-10))
            out.append(_le("woft", f"{tag} commutator - 2 J_O",
                           commutator_trace_norm(Oh, g.rho) - 2 * jo_weight(O, H, beta, tau).value, tol))
    params = choose_woft_params(H, 0.5, 1e-6)
    err = operator_norm(woft_discretized(O, H, params, check=False) - woft_exact(O, H, 0.5))
    out.append(_le("woft", "two-qubit tau=0.5 discretization", err, 1e-6))
    return out


def suite_autocorr(tol: float, K: int = 200) -> list:
    out = []
    for name, H, beta, N in pipeline_matrix()[1:]:
        g = GibbsState(H, beta)
        _, inst = observables(H)[0]
        tag = f"{name} O=H"
        rep = autocorr_exact(N, inst, g, K)
        out.append(_le("autocorr", f"{tag} t_aut,K - bound", rep.t_aut_K - rep.bound, tol))
        maps = round_maps(N, inst, g)
        sr = spectral_covariance(maps, g)
        out.append(_le("autocorr", f"{tag} |alpha_11|", abs(sr.alpha[0, 0]), 1e-10))
        out.append(_le("autocorr", f"{tag} SC - Cov", sr.sc - sr.cov, tol))
        C = correlations(maps, 20)
        lag = max(abs(C[p - 1] - sr.lag_correlation(p)) for p in range(1, 21))
        out.append(_le("autocorr", f"{tag} lag identity", lag, 1e-9))
        k = 50
        direct = sum_variance_recursion(N, inst, g, k)
        ident = k * maps.variance * 2 * t_aut_finite(correlations(maps, k) / maps.variance, k)
        out.append(_le("autocorr", f"{tag} variance identity (relative)", abs(direct - ident) / abs(direct), 1e-8))
        bound = time_average_var_bound(maps.variance, sr.sc, spectral_gap(N, g).gap, k)
        out.append(_le("autocorr", f"{tag} sum variance - bound", direct - bound, tol))
    return out


def run_suite(name: str, tol: float = 1e-9, seed: int = 0) -> list:
    if name == "all":
        return [c for s in SUITES for c in run_suite(s, tol, seed)]
    if name == "db":
        return suite_db(tol)
    if name == "gap-monotone":
        return suite_gap_monotone(tol)
    if name == "gqpe":
        return suite_gqpe(tol, seed)
    if name == "woft":
        return suite_woft(tol)
    if name == "autocorr":
        return suite_autocorr(tol)
    raise KeyError(name)
