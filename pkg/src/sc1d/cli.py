"""Command-line front end.

Subcommands:
  run       -- one trajectory of a preset (or replayed meta.json), artifacts to disk
  ensemble  -- many seeds of a preset, stats.json to disk
  master    -- density-matrix evolution of a preset's geometry
  selftest  -- quick invariant suite

Exit code 0 on success; on failure a machine-readable JSON error object is
printed to stderr and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import SimulationError
from .scenarios import (
    PRESET_IDS,
    ScenarioConfig,
    preset,
    read_meta_json,
    run as run_scenario,
    run_ensemble_to_disk,
)


def _apply_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    kw = {}
    if args.gamma0 is not None:
        kw["gamma0"] = args.gamma0
    if args.t_end is not None:
        kw["t_end"] = args.t_end
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    if getattr(args, "snapshot_stride", None) is not None:
        kw["snapshot_stride"] = args.snapshot_stride
    if getattr(args, "collapse", None) is not None:
        kw["collapse_mode"] = args.collapse
    return config.replace(**kw) if kw else config


def _load_config(args) -> ScenarioConfig:
    if getattr(args, "meta", None):
        return read_meta_json(args.meta)
    if args.preset is None:
        raise SimulationError("either --preset or --meta is required")
    return preset(args.preset)


def cmd_run(args) -> int:
    config = _apply_overrides(_load_config(args), args)
    record = run_scenario(config, args.out, seed=config.seed)
    print(f"wrote {args.out}: {len(record.events)} events, "
          f"final norm {record.final['norm']:.6f}")
    return 0


def cmd_ensemble(args) -> int:
    config = _apply_overrides(_load_config(args), args)
    _, stats = run_ensemble_to_disk(config, args.out, args.seeds,
                                    base_seed=config.seed, workers=args.workers)
    print(f"wrote {args.out}: {stats.n_runs} runs, branches {stats.branch_counts}")
    return 0


def cmd_master(args) -> int:
    from .densmat import evolve_master, kernel_from_arrays, pure_state_matrix
    from .localization import trial_pair
    from .scenarios import build_initial_state, write_meta_json

    config = _apply_overrides(_load_config(args), args)
    if config.n > 256:
        config = config.replace(n=129)
    grid = config.make_grid()
    params = config.model_params()
    psi = build_initial_state(config, grid, params)
    lam = config.lam_preset or params.lambda0 / 8.0
    lam = min(lam, (grid.x_max - grid.x_min) / 4.0)
    basis = trial_pair(grid, 0.5 * (grid.x_min + grid.x_max), lam, clip=True)
    kernel = kernel_from_arrays(grid, basis.pL, basis.pR)
    rho0 = pure_state_matrix(psi)
    rho1 = evolve_master(rho0, config.make_potential(), kernel, params,
                         config.dt, config.t_end)
    os.makedirs(args.out, exist_ok=True)
    np.savetxt(os.path.join(args.out, "rho_diag.csv"),
               np.column_stack([grid.x, np.real(np.diag(rho1.rho))]),
               delimiter=",", fmt="%.9g", header="x,rho_diag", comments="")
    write_meta_json(os.path.join(args.out, "meta.json"), config)
    print(f"wrote {args.out}: trace {rho1.trace():.8f}, purity {rho1.purity():.8f}")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    failures = run_selftest(verbose=True)
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sc1d", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"sc1d {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_seed=True):
        p.add_argument("--preset", choices=PRESET_IDS, default=None)
        p.add_argument("--meta", help="replay a meta.json instead of a preset")
        p.add_argument("--gamma0", type=float, default=None)
        p.add_argument("--t-end", dest="t_end", type=float, default=None)
        p.add_argument("--snapshot-stride", dest="snapshot_stride", type=int, default=None)
        p.add_argument("--collapse", choices=["scan_x0", "scan_lambda", "scan_both",
                                              "off", "forced"], default=None)
        if with_seed:
            p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default="out", help="output directory")

    p_run = sub.add_parser("run", help="single trajectory")
    common(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_ens = sub.add_parser("ensemble", help="many seeds")
    common(p_ens)
    p_ens.add_argument("--seeds", type=int, required=True, help="number of seeds")
    p_ens.add_argument("--workers", type=int, default=1)
    p_ens.set_defaults(fn=cmd_ensemble)

    p_master = sub.add_parser("master", help="density-matrix evolution")
    common(p_master, with_seed=False)
    p_master.set_defaults(fn=cmd_master)

    p_self = sub.add_parser("selftest", help="quick invariant suite")
    p_self.set_defaults(fn=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SimulationError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except OSError as exc:
        json.dump({"error": "io-error", "message": str(exc),
                   "path": getattr(exc, "filename", None)}, sys.stderr)
        sys.stderr.write("\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
