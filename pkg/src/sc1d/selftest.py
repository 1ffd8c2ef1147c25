"""Quick invariant suite behind `sc1d selftest`.

Each check is a cheap, deterministic assertion of a structural invariant;
the full acceptance suite lives in the test tree.
"""

from __future__ import annotations

import math

import numpy as np

from .core import ModelParams, Potential, ensemble_spread, gaussian_packet, make_grid, observables
from .collapse import CountingRNG, apply_branch
from .localization import (
    energy_cost_general,
    entropy_gain,
    optimize_split,
    pendulum_analytic,
    trial_pair,
    weights,
)
from .propagator import PropagatorConfig, step_unitary


def _checks():
    params = ModelParams(m=0.5)
    grid = make_grid(-16.0, 16.0, 512)
    psi = gaussian_packet(grid, 0.0, params.lambda0 / 3.0, 0.0)

    def check_norm():
        assert abs(psi.norm() - 1.0) < 1e-12

    def check_sum_rule():
        basis = trial_pair(grid, 0.5, params.lambda0 / 8.0)
        assert np.abs(basis.pL**2 + basis.pR**2 - 1.0).max() < 1e-12

    def check_weights():
        basis = trial_pair(grid, 0.0, params.lambda0 / 8.0)
        wl, wr = weights(psi, basis)
        assert abs(wl + wr - 1.0) < 1e-10
        assert abs(wl - 0.5) < 1e-9  # symmetric density, central split

    def check_energy_identity():
        basis = trial_pair(grid, 0.4, params.lambda0 / 8.0)
        wl, wr = weights(psi, basis)
        de = energy_cost_general(psi, basis.pL, basis.pR, params)
        v = Potential.free()
        e0 = observables(psi, v, 0.0, params)["energy"]
        e_mix = sum(w * observables(apply_branch(psi, basis, s), v, 0.0, params)["energy"]
                    for w, s in ((wl, "L"), (wr, "R")))
        assert de >= 0.0
        assert abs((e_mix - e0) - de) <= 1e-8 * max(de, 1.0)

    def check_entropy_limits():
        assert abs(entropy_gain(0.5, 0.5, 0.0) - math.log(2.0)) < 1e-12
        assert entropy_gain(1.0, 0.0, 0.0) == 0.0
        assert abs(entropy_gain(0.5, 0.5, 0.5)) < 1e-12

    def check_unitarity():
        state = psi
        for _ in range(20):
            state = step_unitary(state, Potential.free(), 0.0, 0.01, params)
        assert abs(state.norm() - 1.0) < 1e-11

    def check_reversibility():
        fwd = step_unitary(psi, Potential.free(), 0.0, 0.01, params)
        back = step_unitary(fwd, Potential.free(), 0.0, -0.01, params)
        assert np.abs(back.amp - psi.amp).max() < 1e-10

    def check_stable_packet():
        result = optimize_split(psi, params, "scan_x0", lam=params.lambda0 / 8.0,
                                rng=CountingRNG(0))
        from .localization import NoSplit
        assert isinstance(result, NoSplit)

    def check_spread_identity():
        d2, _ = ensemble_spread([(1.0, psi)])
        assert abs(d2 - observables(psi, None, 0.0, params)["var_x"]) < 1e-12

    def check_pendulum():
        g2 = make_grid(-8.0, 8.0, 2049)
        field = pendulum_analytic(g2, 0.0, 1.0)
        theta = field.theta
        assert abs(theta[g2.n // 2] - math.pi / 4.0) < 1e-9
        tp = 1.0 / (2.0 * np.cosh(g2.x))
        fi = 2.0 * tp**2 + 0.25 * np.cos(4.0 * theta)
        assert np.abs(fi - 0.25).max() < 1e-10

    return [
        ("norm", check_norm),
        ("envelope sum rule", check_sum_rule),
        ("branch weights", check_weights),
        ("energy bookkeeping", check_energy_identity),
        ("entropy limits", check_entropy_limits),
        ("unitarity", check_unitarity),
        ("reversibility", check_reversibility),
        ("stable packet", check_stable_packet),
        ("spread identity", check_spread_identity),
        ("pendulum profile", check_pendulum),
    ]


def run_selftest(verbose: bool = False) -> int:
    """Run all checks; returns the number of failures."""
    failures = 0
    for name, fn in _checks():
        try:
            fn()
            status = "ok"
        except AssertionError as exc:
            failures += 1
            status = f"FAIL ({exc})" if str(exc) else "FAIL"
        except Exception as exc:  # pragma: no cover - defensive
            failures += 1
            status = f"ERROR ({type(exc).__name__}: {exc})"
        if verbose:
            print(f"selftest {name:24s} {status}")
    return failures
