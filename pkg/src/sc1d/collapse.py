"""Stochastic engine: Poisson-clocked localization events between unitary steps.

Per time step the state either advances one Cayley step (probability
1 - gamma0*dt) or suffers a localization event (probability gamma0*dt): the
optimizer proposes a split, one branch is sampled by its weight, and the
state is projected and renormalized.  An inadmissible scan yields a NoSplit
event, which advances the clock but leaves the state untouched.

Random-stream contract (one seeded 64-bit generator per trajectory, draws in
this exact order, making event logs replayable):
  1. one uniform per time step for the event clock;
  2. on an event with at least one admissible split, one uniform inside the
     optimizer for the tie-break;
  3. one uniform to sample the branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams, WaveFunction, observables, trapz
from .errors import EmptyBranch
from .localization import NoSplit, SplitBasis, optimize_split
from .propagator import PropagatorConfig, step_unitary

W_FLOOR = 1e-12


class CountingRNG:
    """numpy Generator wrapper that tracks how many draws were consumed."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(seed))
        self.cursor = 0

    def random(self) -> float:
        self.cursor += 1
        return float(self._gen.random())


@dataclass
class CollapseEvent:
    """One stochastic reduction; chosen is 'L', 'R' or 'NoSplit'."""

    t: float
    x0: float | None
    lam: float | None
    wL: float | None
    wR: float | None
    chosen: str
    dE: float
    dS: float
    seed_cursor: int = 0

    def to_json_dict(self) -> dict:
        """Wire format: exactly the fields {t, x0, lambda, wL, wR, chosen, dE, dS}."""
        return {
            "t": self.t,
            "x0": self.x0,
            "lambda": self.lam,
            "wL": self.wL,
            "wR": self.wR,
            "chosen": self.chosen,
            "dE": self.dE,
            "dS": self.dS,
        }


@dataclass
class TrajectoryRecord:
    """Everything one stochastic run produced."""

    params: ModelParams
    scenario_id: str
    seed: int
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)
    events: list[CollapseEvent] = field(default_factory=list)
    final: dict = field(default_factory=dict)
    final_amp: np.ndarray | None = None


def apply_branch(psi: WaveFunction, basis, side: str) -> WaveFunction:
    """Project onto one branch: psi -> P_side * psi / sqrt(w_side), renormalized.

    The phase field is untouched wherever the density survives; only the
    envelope is reshaped.
    """
    p = basis.pL if side == "L" else basis.pR
    raw = p * psi.amp
    w = float(trapz(np.abs(raw) ** 2, psi.grid.dx).real)
    if w < W_FLOOR:
        raise EmptyBranch(f"branch {side} carries weight {w:.3e}")
    return WaveFunction(psi.grid, raw / math.sqrt(w))


def maybe_collapse(psi: WaveFunction, params: ModelParams, dt: float,
                   rng: CountingRNG, optimizer, t: float = 0.0):
    """One clock draw; on a hit, run the optimizer and sample a branch.

    optimizer: callable (psi, rng) -> SplitBasis | NoSplit.
    Returns (psi', event_or_None).
    """
    if params.gamma0 * dt > 0.1:
        raise ValueError(f"gamma0*dt = {params.gamma0 * dt:.3g} > 0.1; clock unresolved")
    if rng.random() >= params.gamma0 * dt:
        return psi, None
    return force_collapse(psi, params, rng, optimizer, t)


def force_collapse(psi: WaveFunction, params: ModelParams, rng: CountingRNG,
                   optimizer, t: float = 0.0):
    """Run one localization event unconditionally."""
    result = optimizer(psi, rng)
    if isinstance(result, NoSplit):
        event = CollapseEvent(t=t, x0=None, lam=None, wL=None, wR=None,
                              chosen="NoSplit", dE=0.0, dS=0.0,
                              seed_cursor=rng.cursor)
        return psi.normalize(), event
    basis: SplitBasis = result
    side = "L" if rng.random() < basis.wL else "R"
    new_psi = apply_branch(psi, basis, side)
    event = CollapseEvent(t=t, x0=basis.x0, lam=basis.lam, wL=basis.wL, wR=basis.wR,
                          chosen=side, dE=basis.dE, dS=basis.dS,
                          seed_cursor=rng.cursor)
    return new_psi, event


def run_trajectory(config, params: ModelParams | None = None, seed: int = 0,
                   keep_final_amp: bool = False) -> TrajectoryRecord:
    """Interleave unitary steps with the stochastic clock; bit-reproducible per seed.

    config is a scenarios.ScenarioConfig; params overrides config.params when
    given.  Snapshots store the density at the configured stride (stride 0
    keeps only endpoints).
    """
    from .scenarios import build_initial_state  # local import to avoid a cycle

    params = params or config.model_params()
    grid = config.make_grid()
    potential = config.make_potential()
    psi = build_initial_state(config, grid, params)
    rng = CountingRNG(seed)
    cfg = PropagatorConfig(config.dt)

    mode = config.collapse_mode
    collapse_on = mode not in ("off",)
    optimizer = None
    if collapse_on and mode not in ("forced",):
        def optimizer(state, r):
            return optimize_split(state, params, mode,
                                  lam=config.lam_preset, x0=config.scan_x0_center, rng=r)

    record = TrajectoryRecord(params=params, scenario_id=config.scenario_id, seed=seed)
    stride = config.snapshot_stride
    n_steps = int(round(config.t_end / config.dt))

    def snap(t, state):
        if record.snapshots and record.snapshots[-1][0] == t:
            record.snapshots[-1] = (t, state.rho.copy())
        else:
            record.snapshots.append((t, state.rho.copy()))

    snap(0.0, psi)
    t = 0.0

    if mode == "forced":
        def forced_optimizer(state, r):
            return optimize_split(state, params, config.forced_scan_mode,
                                  lam=config.lam_preset, x0=config.scan_x0_center, rng=r)
        psi, event = force_collapse(psi, params, rng, forced_optimizer, t=0.0)
        record.events.append(event)
        snap(0.0, psi)

    for k in range(n_steps):
        if collapse_on and mode != "forced":
            new_psi, event = maybe_collapse(psi, params, config.dt, rng, optimizer,
                                            t=t + config.dt)
            if event is not None:
                record.events.append(event)
                psi = new_psi
            else:
                psi = step_unitary(psi, potential, t, config.dt, params)
        else:
            psi = step_unitary(psi, potential, t, config.dt, params)
        t = (k + 1) * config.dt
        if stride > 0 and (k + 1) % stride == 0:
            snap(t, psi)

    snap(t, psi)
    record.final = observables(psi, potential, t, params)
    record.final["t"] = t
    record.final["occupation_left"] = occupation_left(psi, config.partition_x)
    if keep_final_amp:
        record.final_amp = psi.amp.copy()
    return record


def occupation_left(psi: WaveFunction, x_split: float = 0.0) -> float:
    """Fraction of the density left of x_split."""
    x = psi.grid.x
    rho = psi.rho
    mask = x <= x_split
    if mask.sum() < 2:
        return 0.0
    return float(np.trapezoid(rho[mask], x[mask]))


@dataclass
class EnsembleStats:
    """Aggregates over a batch of trajectories."""

    n_runs: int
    branch_counts: dict
    first_event_times: list
    final_left_occupations: list
    survival_fraction_at_tau0: float

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "branch_counts": self.branch_counts,
            "first_event_times": self.first_event_times,
            "final_left_occupations": self.final_left_occupations,
            "survival_fraction_at_tau0": self.survival_fraction_at_tau0,
        }


def run_ensemble(config, params: ModelParams | None = None,
                 seeds=None, workers: int = 1) -> tuple[list[TrajectoryRecord], EnsembleStats]:
    """Run one trajectory per seed and merge summary statistics by seed order."""
    if seeds is None:
        seeds = list(range(2))
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ValueError("an ensemble needs at least 2 seeds")
    params = params or config.model_params()

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, [(config, params, s) for s in seeds]))
    else:
        records = [run_trajectory(config, params, s) for s in seeds]

    branch_counts = {"L": 0, "R": 0, "NoSplit": 0}
    first_times = []
    finals = []
    survived = 0
    tau0 = params.tau0
    for rec in records:
        for ev in rec.events:
            branch_counts[ev.chosen] += 1
        if rec.events:
            first_times.append(rec.events[0].t)
            if rec.events[0].t > tau0:
                survived += 1
        else:
            first_times.append(None)
            survived += 1
        finals.append(rec.final["occupation_left"])
    stats = EnsembleStats(
        n_runs=len(records),
        branch_counts=branch_counts,
        first_event_times=first_times,
        final_left_occupations=finals,
        survival_fraction_at_tau0=survived / len(records),
    )
    return records, stats


def _run_one(args):
    config, params, seed = args
    return run_trajectory(config, params, seed)
