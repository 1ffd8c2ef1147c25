"""Unitary propagation: Cayley (implicit midpoint) steps on the tridiagonal H.

The scheme (1 + i*dt/(2*hbar) H) psi' = (1 - i*dt/(2*hbar) H) psi is exactly
norm preserving for Hermitian H and exactly energy conserving for static V,
and supports time-dependent potentials by sampling V at t + dt/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .core import Grid1D, ModelParams, Potential, WaveFunction, observables

_zgtsv = lapack.get_lapack_funcs(("gtsv",), dtype=np.complex128)[0]


@dataclass
class PropagatorConfig:
    """Time step for the Cayley scheme; dt is validated by a probe step."""

    dt: float
    scheme: str = "cayley"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.scheme != "cayley":
            raise ValueError("only the cayley scheme is implemented")

    def validate(self, grid: Grid1D, potential: Potential, params: ModelParams,
                 probe: WaveFunction | None = None) -> None:
        """One probe step on a reference packet; static-V energy must be stable."""
        from .core import gaussian_packet

        if potential.time_dependent:
            return
        if probe is None:
            width = 0.125 * (grid.x_max - grid.x_min)
            center = 0.5 * (grid.x_max + grid.x_min)
            probe = gaussian_packet(grid, center, width, 0.0)
        e0 = observables(probe, potential, 0.0, params)["energy"]
        stepped = step_unitary(probe, potential, 0.0, self.dt, params)
        e1 = observables(stepped, potential, 0.0, params)["energy"]
        scale = max(abs(e0), 1e-30)
        if abs(e1 - e0) / scale > 1e-8:
            raise ValueError(
                f"dt={self.dt} fails the energy-drift probe: |dE/E|={abs(e1-e0)/scale:.3e}"
            )


def hamiltonian_apply(amp: np.ndarray, v: np.ndarray, dx: float, hbar: float, m: float) -> np.ndarray:
    """H psi with the central 3-point kinetic stencil and Dirichlet walls."""
    t = hbar**2 / (2.0 * m * dx**2)
    out = (2.0 * t + v) * amp
    out[1:] -= t * amp[:-1]
    out[:-1] -= t * amp[1:]
    out[0] = 0.0
    out[-1] = 0.0
    return out


def step_unitary(psi: WaveFunction, potential: Potential, t: float, dt: float,
                 params: ModelParams) -> WaveFunction:
    """One Cayley step; time-dependent V is sampled at the interval midpoint."""
    grid = psi.grid
    dx = grid.dx
    hbar, m = params.hbar, params.m
    v = potential(grid.x, t + 0.5 * dt)
    kappa = 1j * dt / (2.0 * hbar)

    amp = psi.amp
    interior = slice(1, grid.n - 1)
    h_psi = hamiltonian_apply(amp, v, dx, hbar, m)
    rhs = (amp - kappa * h_psi)[interior]

    tt = hbar**2 / (2.0 * m * dx**2)
    n_in = grid.n - 2
    diag = 1.0 + kappa * (2.0 * tt + v[interior])
    off = np.full(n_in - 1, -kappa * tt, dtype=np.complex128)
    _, _, _, sol, info = _zgtsv(off.copy(), diag.astype(np.complex128), off.copy(), rhs)
    if info != 0:
        raise RuntimeError(f"tridiagonal solve failed (info={info})")

    out = np.zeros_like(amp)
    out[interior] = sol
    return WaveFunction(grid, out)


def evolve(psi: WaveFunction, potential: Potential, t0: float, t1: float,
           cfg: PropagatorConfig, params: ModelParams,
           callback=None, callback_stride: int = 0) -> WaveFunction:
    """Step from t0 to t1; invoke callback(t, psi) every callback_stride steps."""
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    n_steps = int(round((t1 - t0) / cfg.dt))
    state = psi
    t = t0
    if callback is not None and callback_stride > 0:
        callback(t, state)
    for k in range(n_steps):
        state = step_unitary(state, potential, t, cfg.dt, params)
        t = t0 + (k + 1) * cfg.dt
        if callback is not None and callback_stride > 0 and (k + 1) % callback_stride == 0:
            callback(t, state)
    return state
