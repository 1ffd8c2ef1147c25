"""Preset experiments, configuration, and on-disk artifacts.

A run writes four files into its output directory:
  density.csv -- header row of x values (leading cell "t"), then one row per
                 snapshot: t, rho(x_0), ..., rho(x_{n-1}), 9 significant digits;
  events.json -- array of event objects with exactly the fields
                 {t, x0, lambda, wL, wR, chosen, dE, dS};
  meta.json   -- fully resolved config + seed + code version (re-ingestable);
  stats.json  -- ensemble frequency tables (ensemble runs only).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import __version__
from .core import Grid1D, ModelParams, Potential, WaveFunction, gaussian_packet, make_grid
from .errors import UnknownPreset

PRESET_IDS = ("free", "tunnel", "double_well", "decay", "wall_insertion")

# Central-partition geometry shared by the well scenarios.  The dividing bump
# keeps the paper-style 0.1 width in the double well; its height is raised to
# 60 so the two wells form a genuine tunneling doublet at desk scale (the
# telltale slow coherent oscillation; see notes in the README).
DOUBLE_WELL_BUMP_HEIGHT = 60.0
DOUBLE_WELL_BUMP_WIDTH = 0.1
WALL_INSERTION_RATE = 2.0
WALL_INSERTION_WIDTH = 0.5


@dataclass
class ScenarioConfig:
    """Fully resolved description of one experiment."""

    scenario_id: str
    x_min: float
    x_max: float
    n: int
    potential: dict
    hbar: float = 1.0
    m: float = 1.0
    T0: float = 1.0
    gamma0: float = 1.0
    init_kind: str = "gaussian"          # gaussian | eigen_ground | eigen_doublet | well_ground
    x_c: float = 0.0
    delta: float = 1.0
    p0: float = 0.0
    collapse_mode: str = "scan_x0"       # scan_x0 | scan_lambda | scan_both | off | forced
    forced_scan_mode: str = "scan_x0"
    lam_preset: float | None = None
    scan_x0_center: float | None = None
    dt: float = 0.01
    t_end: float = 1.0
    snapshot_stride: int = 0
    partition_x: float = 0.0
    seed: int = 0

    def model_params(self) -> ModelParams:
        return ModelParams(hbar=self.hbar, m=self.m, T0=self.T0, gamma0=self.gamma0)

    def make_grid(self) -> Grid1D:
        return make_grid(self.x_min, self.x_max, self.n)

    def make_potential(self) -> Potential:
        return Potential.from_dict(self.potential)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "ScenarioConfig":
        d = dict(d)
        d.pop("code_version", None)
        return ScenarioConfig(**d)

    def replace(self, **kw) -> "ScenarioConfig":
        d = self.to_dict()
        d.update(kw)
        return ScenarioConfig.from_dict(d)


def preset(preset_id: str) -> ScenarioConfig:
    """Pinned configurations for the five stock experiments."""
    if preset_id == "free":
        params = ModelParams(m=0.5)  # 2m = 1
        return ScenarioConfig(
            scenario_id="free", x_min=-16.0, x_max=16.0, n=1024,
            potential=Potential.free().to_dict(),
            m=0.5, delta=params.lambda0 / 3.0, x_c=0.0, p0=0.0,
            collapse_mode="scan_x0", lam_preset=params.lambda0 / 8.0,
            dt=0.01, t_end=3.0, snapshot_stride=5,
        )
    if preset_id == "tunnel":
        params = ModelParams(m=1.0)
        return ScenarioConfig(
            scenario_id="tunnel", x_min=-16.0, x_max=16.0, n=1024,
            potential=Potential.gaussian_barrier(0.08, 0.5).to_dict(),
            m=1.0, delta=params.lambda0 / 2.0, x_c=-8.0, p0=8.0,
            collapse_mode="scan_x0", lam_preset=params.lambda0 / 8.0,
            dt=0.002, t_end=2.5, snapshot_stride=25,
        )
    if preset_id == "double_well":
        params = ModelParams(m=2.0)
        return ScenarioConfig(
            scenario_id="double_well", x_min=-1.0, x_max=1.0, n=257,
            potential=Potential.double_well(0.0, DOUBLE_WELL_BUMP_WIDTH,
                                            DOUBLE_WELL_BUMP_HEIGHT).to_dict(),
            m=2.0, init_kind="eigen_doublet",
            collapse_mode="scan_x0", lam_preset=params.lambda0 / 16.0,
            dt=0.005, t_end=40.0, snapshot_stride=40,
        )
    if preset_id == "decay":
        params = ModelParams(m=2.0)
        return ScenarioConfig(
            scenario_id="decay", x_min=-1.0, x_max=8.0, n=1155,
            potential=Potential.half_open_well(DOUBLE_WELL_BUMP_WIDTH,
                                               DOUBLE_WELL_BUMP_HEIGHT).to_dict(),
            m=2.0, init_kind="well_ground",
            collapse_mode="scan_x0", lam_preset=params.lambda0 / 16.0,
            dt=0.005, t_end=30.0, snapshot_stride=100,
        )
    if preset_id == "wall_insertion":
        return ScenarioConfig(
            scenario_id="wall_insertion", x_min=-1.0, x_max=1.0, n=257,
            potential=Potential.growing_bump(WALL_INSERTION_RATE,
                                             WALL_INSERTION_WIDTH).to_dict(),
            m=0.5, init_kind="eigen_ground",
            collapse_mode="scan_lambda", scan_x0_center=0.0,
            dt=0.005, t_end=55.0, snapshot_stride=100,
        )
    raise UnknownPreset(f"no preset named {preset_id!r}; known: {PRESET_IDS}")


# ---------------------------------------------------------------------------
# initial states
# ---------------------------------------------------------------------------


def _tridiagonal_eigenstates(grid: Grid1D, v: np.ndarray, params: ModelParams,
                             count: int) -> tuple[np.ndarray, np.ndarray]:
    """Lowest eigenpairs of the interior stencil Hamiltonian."""
    dx = grid.dx
    t = params.hbar**2 / (2.0 * params.m * dx**2)
    diag = 2.0 * t + v[1:-1]
    off = np.full(grid.n - 3, -t)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
    full = np.zeros((grid.n, count))
    full[1:-1, :] = vecs
    for j in range(count):
        nrm = math.sqrt(float(np.trapezoid(full[:, j] ** 2, dx=dx)))
        full[:, j] /= nrm
    return vals, full


def build_initial_state(config: ScenarioConfig, grid: Grid1D,
                        params: ModelParams) -> WaveFunction:
    if config.init_kind == "gaussian":
        return gaussian_packet(grid, config.x_c, config.delta, config.p0)
    potential = config.make_potential()
    v = potential(grid.x, 0.0)
    if config.init_kind == "eigen_ground":
        _, vecs = _tridiagonal_eigenstates(grid, v, params, 1)
        return WaveFunction(grid, vecs[:, 0].astype(np.complex128)).normalize()
    if config.init_kind == "eigen_doublet":
        # Left-leaning member of the lowest tunneling doublet.
        _, vecs = _tridiagonal_eigenstates(grid, v, params, 2)
        phi1, phi2 = vecs[:, 0], vecs[:, 1]
        cands = [WaveFunction(grid, (phi1 + s * phi2).astype(np.complex128)).normalize()
                 for s in (-1.0, 1.0)]

        def left_mass(p: WaveFunction) -> float:
            return float(np.trapezoid(p.rho[grid.x <= 0.0], dx=grid.dx))

        return max(cands, key=left_mass)
    if config.init_kind == "well_ground":
        # Ground state of the closed sub-well left of the partition bump.
        wall = config.potential.get("params", {}).get("wall_pos", 0.0)
        mask = grid.x <= wall
        n_sub = int(mask.sum())
        sub_grid = make_grid(grid.x_min, grid.x[n_sub - 1], n_sub)
        _, vecs = _tridiagonal_eigenstates(sub_grid, np.zeros(n_sub), params, 1)
        amp = np.zeros(grid.n, dtype=np.complex128)
        amp[:n_sub] = vecs[:, 0]
        return WaveFunction(grid, amp).normalize()
    raise ValueError(f"unknown init kind {config.init_kind!r}")


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def write_density_csv(path: str, grid: Grid1D, snapshots) -> None:
    with open(path, "w") as fh:
        fh.write("t," + ",".join(_fmt(x) for x in grid.x) + "\n")
        for t, rho in snapshots:
            fh.write(_fmt(t) + "," + ",".join(_fmt(r) for r in rho) + "\n")


def read_density_csv(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (x, t, rho[t_index, x_index]); raises on malformed rows."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty density file")
    header = lines[0].split(",")
    if header[0] != "t":
        raise ValueError(f"{path}:1: header must start with 't'")
    x = np.array([float(v) for v in header[1:]])
    times, rows = [], []
    for ln_no, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != len(x) + 1:
            raise ValueError(f"{path}:{ln_no}: expected {len(x)+1} columns, got {len(parts)}")
        try:
            vals = [float(v) for v in parts]
        except ValueError as exc:
            raise ValueError(f"{path}:{ln_no}: {exc}") from None
        times.append(vals[0])
        rows.append(vals[1:])
    return x, np.array(times), np.array(rows)


def write_events_json(path: str, events) -> None:
    with open(path, "w") as fh:
        json.dump([ev.to_json_dict() for ev in events], fh, indent=1)
        fh.write("\n")


def write_meta_json(path: str, config: ScenarioConfig, extra: dict | None = None) -> None:
    meta = config.to_dict()
    meta["code_version"] = __version__
    if extra:
        meta.update(extra)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_meta_json(path: str) -> ScenarioConfig:
    with open(path) as fh:
        meta = json.load(fh)
    meta.pop("n_seeds", None)
    return ScenarioConfig.from_dict(meta)


def run(config: ScenarioConfig, out_dir: str, seed: int | None = None):
    """Single-trajectory run: writes density.csv, events.json, meta.json."""
    from .collapse import run_trajectory

    seed = config.seed if seed is None else seed
    config = config.replace(seed=seed)
    os.makedirs(out_dir, exist_ok=True)
    record = run_trajectory(config, seed=seed)
    write_density_csv(os.path.join(out_dir, "density.csv"), config.make_grid(),
                      record.snapshots)
    write_events_json(os.path.join(out_dir, "events.json"), record.events)
    write_meta_json(os.path.join(out_dir, "meta.json"), config)
    return record


def run_ensemble_to_disk(config: ScenarioConfig, out_dir: str, n_seeds: int,
                         base_seed: int = 0, workers: int = 1):
    """Ensemble run: seeds base_seed..base_seed+n-1; writes stats.json + meta.json."""
    from .collapse import run_ensemble

    os.makedirs(out_dir, exist_ok=True)
    seeds = [base_seed + i for i in range(n_seeds)]
    records, stats = run_ensemble(config, seeds=seeds, workers=workers)
    with open(os.path.join(out_dir, "stats.json"), "w") as fh:
        json.dump(stats.to_dict(), fh, indent=1)
        fh.write("\n")
    write_meta_json(os.path.join(out_dir, "meta.json"), config.replace(seed=base_seed),
                    extra={"n_seeds": n_seeds})
    return records, stats
