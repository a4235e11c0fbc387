"""Command-line interface.

Every command reads an optional JSON config (``--model``), writes its reports
into ``--out`` together with ``manifest.json`` and prints a short JSON summary.
Exit codes: 0 success, 1 a check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2

COMMANDS = ("db-check", "gap", "gqpe-stats", "woft", "trajectory", "autocorr", "verify", "example")

DEFAULT_CONFIG = {
    "model": {"name": "ising3", "alpha": 1.0, "h": 0.5, "gamma": 0.25},
    "beta": 2.0,
    "channel": {"kind": "glauber"},
    "observable": "H",
    "eps": 0.3,
    "eta": 0.2,
}

TOP_KEYS = {"model", "beta", "channel", "observable", "eps", "eta", "s", "K", "t_burn", "skip_r",
            "tau", "mix_eps", "n_traj", "ratio_threshold", "initial_state"}
MODEL_KEYS = {"ising3": {"name", "alpha", "h", "gamma"},
              "pauli": {"name", "n", "terms"},
              "birth_death": {"name", "m", "beta"}}
CHANNEL_KEYS = {"glauber": {"kind"}, "davies": {"kind", "t0"}, "birth_death": {"kind"}}


class ConfigError(ValueError):
    pass


def _version() -> str:
    from . import __version__
    return __version__


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    model = cfg.get("model", {})
    name = model.get("name")
    if name not in MODEL_KEYS:
        raise ConfigError(f"unknown model {name!r}; expected one of {sorted(MODEL_KEYS)}")
    bad = set(model) - MODEL_KEYS[name]
    if bad:
        raise ConfigError(f"unknown keys for model {name!r}: {sorted(bad)}")
    chan = cfg.get("channel", {"kind": "glauber"})
    kind = chan.get("kind")
    if kind not in CHANNEL_KEYS:
        raise ConfigError(f"unknown channel kind {kind!r}")
    bad = set(chan) - CHANNEL_KEYS[kind]
    if bad:
        raise ConfigError(f"unknown keys for channel {kind!r}: {sorted(bad)}")
    return cfg


def load_config(path) -> dict:
    if path is None:
        return json.loads(json.dumps(DEFAULT_CONFIG))
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    merged = json.loads(json.dumps(DEFAULT_CONFIG))
    if isinstance(doc, dict) and "model" in doc and doc["model"].get("name") != "ising3":
        merged.pop("model")
    if isinstance(doc, dict):
        merged.update(doc)
    return validate_config(merged)


def config_hash(command: str, cfg: dict, seed: int, extra: dict) -> str:
    doc = json.dumps({"command": command, "config": cfg, "seed": seed, "extra": extra}, sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()


class Outputs:
    def __init__(self, out_dir, fmt: str):
        self.dir = Path(out_dir)
        self.fmt = fmt
        self.files = []
        self.dir.mkdir(parents=True, exist_ok=True)

    def json(self, name: str, doc) -> None:
        (self.dir / name).write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
        self.files.append(name)

    def text(self, name: str, text: str) -> None:
        (self.dir / name).write_text(text)
        self.files.append(name)

    def curve(self, name: str, header, rows) -> None:
        """Curves go to CSV with ``--format csv`` and to JSON otherwise."""
        if self.fmt == "csv":
            lines = [",".join(header)] + [",".join(repr(float(v)) if not isinstance(v, int) else str(v)
                                                   for v in row) for row in rows]
            self.text(name + ".csv", "\n".join(lines) + "\n")
        else:
            self.json(name + ".json", {"columns": list(header), "rows": [list(r) for r in rows]})


def _jsonable(x):
    import numpy as np

    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return {"real": _jsonable(x.real), "imag": _jsonable(x.imag)}
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return {"real": x.real, "imag": x.imag}
    return x


# ---------------------------------------------------------------------------
# Building blocks from a config
# ---------------------------------------------------------------------------

def build_setting(cfg: dict):
    """Return ``(H, gibbs, channel)``; classical chains are embedded as diagonal channels."""
    import numpy as np

    from .channels import chain_channel, davies_channel, glauber_channel
    from .models import GibbsState, birth_death, hamiltonian_from_matrix, model_from_config

    model = cfg["model"]
    beta = float(cfg.get("beta", 1.0))
    if model["name"] == "birth_death":
        chain = birth_death(int(model["m"]), float(model.get("beta", beta)))
        H = hamiltonian_from_matrix(np.diag(chain.energies).astype(complex))
        return H, GibbsState(H, chain.beta), chain_channel(chain)
    H = model_from_config(model)
    kind = cfg.get("channel", {}).get("kind", "glauber")
    if kind == "glauber":
        N = glauber_channel(H, beta)
    elif kind == "davies":
        N = davies_channel(H, beta, float(cfg["channel"].get("t0", 1.0)))
    else:
        raise ConfigError(f"channel {kind!r} needs a birth_death model")
    return H, GibbsState(H, beta), N


def build_observable(cfg: dict, H):
    import numpy as np

    from .models import PauliTerm

    spec = cfg.get("observable", "H")
    if spec == "H":
        return H.dense, max(1.0, H.norm_bound)
    if spec == "H2":
        return H.dense @ H.dense, max(1.0, H.norm_bound) ** 2
    if isinstance(spec, dict):
        terms = spec.get("terms", [spec])
        O = sum(PauliTerm(float(t.get("coefficient", 1.0)), {int(k): v for k, v in t["paulis"].items()}).matrix(H.n_qubits)
                for t in terms)
        return np.asarray(O), max(1.0, sum(abs(float(t.get("coefficient", 1.0))) for t in terms))
    raise ConfigError(f"cannot interpret observable {spec!r}")


def build_instrument_from(cfg: dict, H):
    from .gqpe import build_instrument, choose_params

    O, kappa = build_observable(cfg, H)
    return build_instrument(O, choose_params(kappa, float(cfg.get("eps", 0.3))))


def initial_state(cfg: dict, dim: int, gibbs):
    import numpy as np

    spec = cfg.get("initial_state", "top")
    if spec == "gibbs":
        return gibbs.rho
    if spec == "top":
        idx = dim - 1
    elif isinstance(spec, int):
        idx = spec
    else:
        raise ConfigError(f"initial_state must be 'gibbs', 'top' or a basis index, got {spec!r}")
    if not 0 <= idx < dim:
        raise ConfigError(f"initial basis index {idx} out of range")
    rho = np.zeros((dim, dim), dtype=complex)
    rho[idx, idx] = 1.0
    return rho


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_db_check(cfg, args, out: Outputs) -> tuple:
    from .channels import check_detailed_balance

    H, g, N = build_setting(cfg)
    s_values = cfg.get("s", [0.0, 0.25, 0.5, 1.0])
    reports = [check_detailed_balance(N, g, float(s), args.tol).__dict__ for s in s_values]
    ok = all(r["passes"] for r in reports)
    out.json("db_report.json", {"channel": N.label, "reports": reports})
    return {"passes": ok, "passing_s": [r["s"] for r in reports if r["passes"]]}, ok


def cmd_gap(cfg, args, out: Outputs) -> tuple:
    from .channels import mixing_time_bounds, spectral_gap

    H, g, N = build_setting(cfg)
    rep = spectral_gap(N, g, float(cfg.get("s", 0.5)), args.tol)
    mb = mixing_time_bounds(N, g, float(cfg.get("mix_eps", 0.1)), gap=rep.gap)
    doc = {"gap": rep.gap, "spectrum_in_01": rep.spectrum_in_01, "unique_fixed_point": rep.unique_fixed_point,
           "db_certified": rep.db_certified, "warning": rep.warning,
           "mixing_bounds": {"lower": mb.lower, "upper": mb.upper, "eps": mb.eps, "sigma_min": mb.sigma_min}}
    out.json("gap_report.json", doc)
    out.curve("spectrum", ["index", "eigenvalue"], [(i, float(e.real)) for i, e in enumerate(rep.eigenvalues)])
    return {"gap": rep.gap, "t_mix_lower": mb.lower, "t_mix_upper": mb.upper}, True


def cmd_gqpe_stats(cfg, args, out: Outputs) -> tuple:
    import numpy as np

    from .gqpe import (disturbance, leakage_operator_norm, moment_operator_errors, observable_variance,
                       outcome_distribution)

    H, g, N = build_setting(cfg)
    inst = build_instrument_from(cfg, H)
    p = inst.params
    st = outcome_distribution(inst, g.rho)
    target = float(np.real(np.trace(g.rho @ inst.observable)))
    m1, m2 = moment_operator_errors(inst)
    checks = {
        "completeness": inst.completeness_residual() < 1e-11,
        "bias": abs(st.expectation - target) <= p.eps,
        "variance": abs(st.variance - observable_variance(inst.observable, g.rho)) <= 3 * p.gamma ** 2 * p.kappa ** 2,
        "covariance": abs(st.covariance) <= st.variance + 1e-9,
        "leakage": leakage_operator_norm(inst) <= 2 * p.eps,
    }
    doc = {"params": {"kappa": p.kappa, "eps": p.eps, "gamma": p.gamma, "m": p.m, "h": p.h, "N": p.N},
           "normalization": inst.normalization, "completeness_residual": inst.completeness_residual(),
           "expectation": st.expectation, "target": target, "variance": st.variance,
           "observable_variance": observable_variance(inst.observable, g.rho), "covariance": st.covariance,
           "leakage": st.leakage, "disturbance": disturbance(inst, g.rho),
           "moment_operator_errors": [m1, m2], "checks": checks}
    out.json("gqpe_stats.json", doc)
    out.curve("outcomes", ["W", "probability"], st.per_outcome)
    return {"expectation": st.expectation, "target": target, "checks": checks}, all(checks.values())


def cmd_woft(cfg, args, out: Outputs) -> tuple:
    from .woft import InfeasibleTauError, jo_weight, noncommuting_instrument

    H, g, N = build_setting(cfg)
    O, kappa = build_observable(cfg, H)
    if kappa > 1:
        O = O / kappa
    beta = float(cfg.get("beta", 1.0))
    eps = float(cfg.get("eps", 0.1))
    try:
        res = noncommuting_instrument(O, H, beta, cfg.get("tau"), eps)
    except InfeasibleTauError as exc:
        out.json("woft_report.json", {"feasible": False, "curve": exc.curve, "reason": str(exc)})
        return {"feasible": False}, False
    curve = [(t, c, 2 * jo_weight(O, H, beta, t).value) for t, c in res.curve]
    doc = {"feasible": True, "tau": res.tau, "bias": res.bias, "disturbance": res.disturbance,
           "disturbance_bound": res.disturbance_bound, "db_residual": res.db_residual,
           "discretization_error": res.woft.discretization_error,
           "quadrature": {"T": res.woft.params.T, "L": res.woft.params.L},
           "bias_ok": res.bias_ok, "disturbance_ok": res.disturbance_ok}
    out.json("woft_report.json", doc)
    out.curve("commutator_curve", ["tau", "commutator_trace_norm", "two_J_O"], curve)
    return {"tau": res.tau, "bias": res.bias, "bias_ok": res.bias_ok}, res.bias_ok and res.disturbance_ok


def cmd_trajectory(cfg, args, out: Outputs) -> tuple:
    from .channels import mixing_time_bounds, spectral_gap
    from .estimator import (TrajectoryConfig, cost_comparison, estimate_from_record, plan_sample_size,
                            planned_burn_in, run_single_trajectory, running_average)
    from .gqpe import outcome_distribution
    from .diagnostics import autocorr_exact

    H, g, N = build_setting(cfg)
    inst = build_instrument_from(cfg, H)
    eps, eta = float(cfg.get("eps", 0.3)), float(cfg.get("eta", 0.2))
    gap = spectral_gap(N, g).gap
    st = outcome_distribution(inst, g.rho)
    planned = plan_sample_size(st.variance, eps, eta, gap, st.covariance / st.variance)
    K = int(cfg.get("K") or planned)
    t_burn = cfg.get("t_burn")
    t_burn = planned_burn_in(gap, eta, g.sigma_min) if t_burn is None else int(t_burn)
    tcfg = TrajectoryConfig(t_burn=t_burn, K=K, skip_r=int(cfg.get("skip_r", 1)), seed=args.seed)
    rec = run_single_trajectory(N, inst, initial_state(cfg, H.dim, g), tcfg)
    rep = estimate_from_record(rec, g.expectation(inst.observable), planned)
    mb = mixing_time_bounds(N, g, eta, gap=gap)
    aut = autocorr_exact(N, inst, g, min(K, 2000), tcfg.skip_r, gap=gap)
    rep.extras.update({"t_mix_bounds": [mb.lower, mb.upper], "t_aut_K": aut.t_aut_K,
                      "cost": cost_comparison(mb.upper, 2 * aut.t_aut_K, K)})
    out.text("trajectory.csv", rec.to_csv())
    out.text("trajectory_header.json", rec.header_json() + "\n")
    avg = running_average(rec.outcomes)
    out.curve("running_average", ["round", "average"], [(i + 1, float(a)) for i, a in enumerate(avg)])
    out.json("estimate.json", rep.to_dict())
    return {"x_k": rep.x_k, "target": rep.target, "K": K, "t_burn": t_burn, "rng_trace": rec.rng_trace}, True


def cmd_autocorr(cfg, args, out: Outputs) -> tuple:
    from .diagnostics import autocorr_exact, round_maps, spectral_covariance

    H, g, N = build_setting(cfg)
    inst = build_instrument_from(cfg, H)
    K = int(cfg.get("K", 1000))
    rep = autocorr_exact(N, inst, g, K, int(cfg.get("skip_r", 1)))
    sr = spectral_covariance(round_maps(N, inst, g, int(cfg.get("skip_r", 1))), g)
    doc = rep.to_dict()
    doc.pop("curve")
    doc.update({"alpha_11": abs(sr.alpha[0, 0]), "sc": sr.sc, "lambdas": sr.lambdas[:10]})
    out.json("autocorr_report.json", doc)
    out.curve("autocorr_curve", ["t", "C"], rep.curve)
    return {"t_aut_K": rep.t_aut_K, "bound": rep.bound, "bound_satisfied": rep.bound_satisfied}, rep.bound_satisfied


def cmd_verify(cfg, args, out: Outputs) -> tuple:
    from .verify import run_suite

    results = run_suite(args.suite, args.tol, args.seed)
    failed = [r.name for r in results if not r.passed]
    out.json("verify_summary.json", {"suite": args.suite, "checks": [r.to_dict() for r in results],
                                     "failed": failed})
    return {"suite": args.suite, "checks": len(results), "failed": failed}, not failed


def cmd_example(cfg, args, out: Outputs) -> tuple:
    from .examples import run_example

    doc, curves = run_example(args.name, seed=args.seed, ratio_threshold=float(cfg.get("ratio_threshold", 10.0)))
    out.json(f"{args.name}.json", doc)
    for cname, (header, rows) in curves.items():
        out.curve(f"{args.name}_{cname}", header, rows)
    return doc["summary"], doc["summary"]["passes"]


HANDLERS = {"db-check": cmd_db_check, "gap": cmd_gap, "gqpe-stats": cmd_gqpe_stats, "woft": cmd_woft,
            "trajectory": cmd_trajectory, "autocorr": cmd_autocorr, "verify": cmd_verify, "example": cmd_example}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="JSON config file (model, beta, channel, observable, ...)")
    common.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed")
    common.add_argument("--out", default="gibbstraj-out", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="format for curve outputs")
    common.add_argument("--threads", type=int, default=None, help="cap on BLAS worker threads")
    common.add_argument("--tol", type=float, default=1e-9, help="tolerance for certificates")

    parser = argparse.ArgumentParser(prog="gibbstraj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "verify":
            p.add_argument("suite", choices=("db", "gap-monotone", "gqpe", "woft", "autocorr", "all"))
        if name == "example":
            p.add_argument("name", choices=("fig2a", "fig2b", "fig2c"))
    return parser


def _cap_threads(n) -> None:
    if n is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    _cap_threads(args.threads)
    from .linalg import InvalidInputError
    from .models import ModelError

    try:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be positive")
        cfg = load_config(args.model)
        out = Outputs(args.out, args.format)
        summary, ok = HANDLERS[args.command](cfg, args, out)
    except (ConfigError, InvalidInputError, ModelError, KeyError, TypeError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    extra = {"suite": getattr(args, "suite", None), "name": getattr(args, "name", None),
             "format": args.format, "tol": args.tol}
    manifest = {"command": args.command, "config": cfg, "seed": args.seed, "extra": extra,
                "config_hash": config_hash(args.command, cfg, args.seed, extra),
                "version": _version(), "files": sorted(out.files), "passed": bool(ok)}
    out.json("manifest.json", manifest)
    print(json.dumps(_jsonable(summary), sort_keys=True))
    return EXIT_OK if ok else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
