"""Single-trajectory estimation of thermal expectation values.

A trajectory evolves a density matrix: the channel ``N`` acts
deterministically and only the measurements are stochastic.  Each round applies
``M``, then ``N**r``, then ``M`` again; the outcome of the first measurement in
the round is the recorded sample ``e_t``.

All states are held in the eigenbasis of the measured observable, where every
Kraus operator is diagonal and a collapse is an entrywise product.

Randomness: trajectory ``i`` of a run with seed ``s`` draws from
``Generator(Philox(SeedSequence(s, spawn_key=(i,))))``.  A round consumes two
uniforms (one per measurement), drawn in blocks.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .channels import QuantumChannel
from .gqpe import DiagonalInstrument, outcome_distribution
from .linalg import InvalidInputError, vec

UNIFORM_BLOCK = 1024


class SimulationIntegrityError(RuntimeError):
    """Outcome probabilities drifted away from normalization."""


class DivergenceError(ValueError):
    """A planning formula diverges (zero spectral gap)."""


@dataclass(frozen=True)
class TrajectoryConfig:
    t_burn: int
    K: int
    skip_r: int = 1
    seed: int = 0
    record_states: bool = False
    single_measurement: bool = False
    stream: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise InvalidInputError("K must be at least 1")
        if self.skip_r < 1:
            raise InvalidInputError("skip_r must be at least 1")
        if self.t_burn < 0:
            raise InvalidInputError("t_burn must be non-negative")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidInputError("seed must be an unsigned 64-bit integer")

    @property
    def certified(self) -> bool:
        """Only the two-measurement round carries the autocorrelation guarantees."""
        return not self.single_measurement


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


@dataclass
class TrajectoryRecord:
    outcomes: np.ndarray
    secondary_outcomes: np.ndarray
    config: TrajectoryConfig
    final_state: Optional[np.ndarray] = None
    rng_trace: str = ""
    model_digest: str = ""

    @property
    def K(self) -> int:
        return self.outcomes.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "outcome", "secondary_outcome"])
        for t, (a, b) in enumerate(zip(self.outcomes, self.secondary_outcomes), start=1):
            w.writerow([t, repr(float(a)), repr(float(b))])
        return buf.getvalue()

    def header(self) -> dict:
        return {"config": asdict(self.config), "seed": int(self.config.seed),
                "rng_trace": self.rng_trace, "model_digest": self.model_digest,
                "certified": self.config.certified}

    def header_json(self) -> str:
        return json.dumps(self.header(), sort_keys=True)

    @classmethod
    def from_csv(cls, text: str, header_json: str) -> "TrajectoryRecord":
        head = json.loads(header_json)
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["round", "outcome", "secondary_outcome"]:
            raise InvalidInputError("trajectory CSV has an unexpected header")
        body = rows[1:]
        out = np.array([float(r[1]) for r in body])
        sec = np.array([float(r[2]) for r in body])
        return cls(out, sec, TrajectoryConfig(**head["config"]), None, head.get("rng_trace", ""),
                   head.get("model_digest", ""))


def outcome_digest(seed: int, stream: int, outcomes: np.ndarray, secondary: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(f"{int(seed)}:{int(stream)}:".encode())
    h.update(np.ascontiguousarray(outcomes, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(secondary, dtype="<f8").tobytes())
    return h.hexdigest()


def model_digest(channel: QuantumChannel, inst: DiagonalInstrument) -> str:
    h = hashlib.sha256()
    h.update(np.round(channel.superop, 12).astype("<c16").tobytes())
    h.update(np.round(inst.observable, 12).astype("<c16").tobytes())
    h.update(np.round(inst.labels, 12).astype("<f8").tobytes())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# Batched simulator
# ---------------------------------------------------------------------------

class _EigenbasisModel:
    """Channel and instrument rotated into the eigenbasis of the observable."""

    def __init__(self, channel: QuantumChannel, inst: DiagonalInstrument, skip_r: int):
        V = inst.spectrum.vectors
        D = V.shape[0]
        self.D = D
        self.inst = inst
        fwd = np.kron(V.T, V.conj().T)          # vec(X) -> vec(V^dag X V)
        back = np.kron(V.conj(), V)
        Se = fwd @ channel.superop @ back
        self.S1 = Se
        self.Sr = np.linalg.matrix_power(Se, skip_r)
        self.fwd = fwd
        self.back = back
        lab = inst.spectrum.labels
        self.amp_full = inst.amplitudes[:, lab]            # (outcomes, D)
        self.diag_idx = np.arange(D) * (D + 1)
        self.labels = inst.labels

    def to_eig(self, rho) -> np.ndarray:
        return self.fwd @ vec(np.asarray(rho, dtype=complex))

    def probabilities(self, states: np.ndarray) -> np.ndarray:
        d = np.real(states[:, self.diag_idx])              # (R, D)
        return d @ (self.amp_full ** 2).T                  # (R, outcomes)

    def collapse(self, states: np.ndarray, u: np.ndarray) -> tuple:
        p = self.probabilities(states)
        total = p.sum(axis=1)
        drift = float(np.max(np.abs(total - 1.0)))
        if drift > 1e-9:
            raise SimulationIntegrityError(f"outcome probabilities sum to 1 +- {drift:.3e}")
        cdf = np.cumsum(p, axis=1)
        j = np.minimum((cdf < (u * total)[:, None]).sum(axis=1), p.shape[1] - 1)
        a = self.amp_full[j]                                # (R, D)
        outer = (a[:, None, :] * a[:, :, None]).reshape(states.shape[0], -1)  # column stacking
        pj = p[np.arange(states.shape[0]), j]
        states = states * outer / pj[:, None]
        return states, self.labels[j]


def simulate_batch(channel: QuantumChannel, inst: DiagonalInstrument, rho0, cfg: TrajectoryConfig,
                   n_traj: int, first_stream: int = 0) -> tuple:
    """Run ``n_traj`` independent trajectories; returns ``(outcomes, secondary, final_states)``.

    Trajectory ``i`` uses stream ``first_stream + i``; the outcomes of a
    trajectory do not depend on how many others share the batch.
    """
    model = _EigenbasisModel(channel, inst, cfg.skip_r)
    s0 = model.to_eig(rho0)
    if cfg.t_burn:
        s0 = np.linalg.matrix_power(model.S1, cfg.t_burn) @ s0
    states = np.tile(s0, (n_traj, 1))
    rngs = [trajectory_rng(cfg.seed, first_stream + i) for i in range(n_traj)]
    K = cfg.K
    out = np.empty((n_traj, K))
    sec = np.full((n_traj, K), np.nan)
    SrT = model.Sr.T
    for start in range(0, K, UNIFORM_BLOCK):
        size = min(UNIFORM_BLOCK, K - start)
        U = np.stack([g.random((size, 2)) for g in rngs])   # (R, size, 2)
        for t in range(size):
            states, e = model.collapse(states, U[:, t, 0])
            out[:, start + t] = e
            states = states @ SrT
            if not cfg.single_measurement:
                states, e2 = model.collapse(states, U[:, t, 1])
                sec[:, start + t] = e2
    finals = [model.back @ s for s in states] if cfg.record_states else None
    return out, sec, finals


def run_single_trajectory(channel: QuantumChannel, inst: DiagonalInstrument, rho0,
                          cfg: TrajectoryConfig) -> TrajectoryRecord:
    out, sec, finals = simulate_batch(channel, inst, rho0, cfg, 1, cfg.stream)
    final = None
    if finals is not None:
        final = finals[0].reshape(inst.dim, inst.dim, order="F")
    return TrajectoryRecord(out[0], sec[0], cfg, final,
                            outcome_digest(cfg.seed, cfg.stream, out[0], sec[0]),
                            model_digest(channel, inst))


def run_repeated(channel: QuantumChannel, inst: DiagonalInstrument, rho0, cfg: TrajectoryConfig,
                 repeats: int) -> np.ndarray:
    """Sample means ``X_K`` of ``repeats`` independent trajectories (streams ``0..repeats-1``)."""
    out, _, _ = simulate_batch(channel, inst, rho0, cfg, repeats, 0)
    return out.mean(axis=1)


@dataclass
class EstimateReport:
    x_k: float
    target: Optional[float] = None
    chebyshev_k: Optional[int] = None
    achieved_error: Optional[float] = None
    channel_applications: int = 0
    samples: int = 0
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_from_record(record: TrajectoryRecord, target: Optional[float] = None,
                         planned_k: Optional[int] = None) -> EstimateReport:
    x = float(np.mean(record.outcomes))
    cfg = record.config
    apps = cfg.t_burn + cfg.K * cfg.skip_r
    return EstimateReport(x, target, planned_k, None if target is None else abs(x - target), apps, record.K,
                          {"certified": cfg.certified})


def run_multi_trajectory(channel: QuantumChannel, inst: DiagonalInstrument, rho0, t_mix_steps: int,
                         n_traj: int, seed: int, target: Optional[float] = None) -> EstimateReport:
    """``n_traj`` independent burn-ins of ``t_mix_steps`` followed by a single measurement each."""
    if n_traj < 1:
        raise InvalidInputError("n_traj must be at least 1")
    cfg = TrajectoryConfig(t_burn=int(t_mix_steps), K=1, seed=seed, single_measurement=True)
    out, _, _ = simulate_batch(channel, inst, rho0, cfg, n_traj)
    x = float(out[:, 0].mean())
    return EstimateReport(x, target, None, None if target is None else abs(x - target),
                          int(n_traj) * int(t_mix_steps), int(n_traj))


def cost_comparison(t_mix: float, t_aut: float, n_samples: int) -> dict:
    """Channel-application counts of the two strategies for ``n_samples`` effective samples."""
    multi = n_samples * t_mix
    single = t_mix + n_samples * t_aut
    return {"multi_trajectory": float(multi), "single_trajectory": float(single),
            "ratio": float(multi / single) if single > 0 else float("inf")}


def running_average(outcomes) -> np.ndarray:
    x = np.asarray(outcomes, dtype=float)
    return np.cumsum(x) / np.arange(1, x.size + 1)


# ---------------------------------------------------------------------------
# Planning
# ---------------------------------------------------------------------------

def _ceil(x: float) -> int:
    # guard against values such as 5000.000000000001 produced by rounding
    return int(math.ceil(x * (1 - 1e-12)))


def plan_sample_size(variance: float, eps: float, eta: float, gap: float, p: float) -> int:
    """Smallest ``K`` with ``K >= (2 V / (eps**2 eta)) (p / gap + 1/2)``."""
    if gap <= 0:
        raise DivergenceError("spectral gap must be positive to plan a sample size")
    if not (variance >= 0 and eps > 0 and eta > 0):
        raise InvalidInputError("variance must be non-negative and eps, eta positive")
    return max(1, _ceil(2 * variance / (eps ** 2 * eta) * (p / gap + 0.5)))


def skip_schedule(gap: float) -> int:
    """``r = ceil(1/gap)``, so that ``gap(N**r) >= 1 - 1/e``."""
    if not 0 < gap <= 1:
        raise InvalidInputError(f"gap must lie in (0, 1], got {gap}")
    return max(1, _ceil(1.0 / gap))


def planned_burn_in(gap: float, eta: float, sigma_min: float) -> int:
    """Burn-in from the upper mixing bound ``(1/gap) ln(1/(eta sigma_min))``."""
    if gap <= 0:
        raise DivergenceError("spectral gap must be positive to plan a burn-in")
    return int(math.ceil((1.0 / gap) * math.log(1.0 / (eta * sigma_min))))


def exact_first_marginal(inst: DiagonalInstrument, rho) -> np.ndarray:
    """Distribution of ``e_1`` when the trajectory starts at ``rho`` with no burn-in."""
    return outcome_distribution(inst, rho).probabilities
