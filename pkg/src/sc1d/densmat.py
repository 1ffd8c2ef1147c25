"""Statistical-level dynamics: the pairwise decoherence kernel and master equation.

A frozen localization pair defines Delta(x, x') = P_L(x)P_L(x') + P_R(x)P_R(x'),
which multiplies the density matrix at an event and drives off-diagonal decay
at rate gamma0*(1 - Delta) in the continuous description.  The kernel is held
fixed (state-independent); re-optimizing it per step would make the equation
nonlinear, which is exactly the regime this module does not model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve

from .core import Grid1D, ModelParams, Potential
from .errors import GridTooLarge

MAX_N = 256


@dataclass
class DensityMatrixGrid:
    """n x n density matrix with measure dx attached to each index."""

    grid: Grid1D
    rho: np.ndarray

    def __post_init__(self):
        if self.grid.n > MAX_N:
            raise GridTooLarge(f"density-matrix grid capped at {MAX_N} points")
        self.rho = np.asarray(self.rho, dtype=np.complex128)
        if self.rho.shape != (self.grid.n, self.grid.n):
            raise ValueError("matrix does not match grid")

    def trace(self) -> float:
        return float(np.real(np.sum(np.diag(self.rho))) * self.grid.dx)

    def purity(self) -> float:
        return float(np.real(np.sum(self.rho * self.rho.conj().T)) * self.grid.dx**2)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.rho - self.rho.conj().T).max())

    def copy(self) -> "DensityMatrixGrid":
        return DensityMatrixGrid(self.grid, self.rho.copy())


@dataclass
class DeltaKernel:
    """Symmetric collapse kernel; 1 on the diagonal, -> 0 across the split."""

    grid: Grid1D
    delta: np.ndarray


def pure_state_matrix(psi) -> DensityMatrixGrid:
    return DensityMatrixGrid(psi.grid, np.outer(psi.amp, psi.amp.conj()))


def thermal_state(grid: Grid1D, lambda_t: float) -> DensityMatrixGrid:
    """Free thermal matrix exp(-pi (x-x')^2 / lambda_t^2), 1D-normalized.

    The diagonal is uniform 1/(x_max - x_min) so the trace integral is one.
    """
    if grid.n > MAX_N:
        raise GridTooLarge(f"density-matrix grid capped at {MAX_N} points")
    x = grid.x
    diff = x[:, None] - x[None, :]
    rho = np.exp(-np.pi * diff**2 / lambda_t**2) / (grid.x_max - grid.x_min)
    return DensityMatrixGrid(grid, rho.astype(np.complex128))


def delta_kernel(basis) -> DeltaKernel:
    """Delta_ij = P_L(x_i)P_L(x_j) + P_R(x_i)P_R(x_j); a rank-2 Gram matrix."""
    pl, pr = np.asarray(basis.pL, float), np.asarray(basis.pR, float)
    delta = np.outer(pl, pl) + np.outer(pr, pr)
    grid = basis.grid if hasattr(basis, "grid") else None
    if grid is None:
        raise ValueError("basis must carry a grid")
    return DeltaKernel(grid, delta)


def kernel_from_arrays(grid: Grid1D, pL: np.ndarray, pR: np.ndarray) -> DeltaKernel:
    return DeltaKernel(grid, np.outer(pL, pL) + np.outer(pR, pR))


def collapse_map(rho_m: DensityMatrixGrid, kernel: DeltaKernel) -> DensityMatrixGrid:
    """One-shot event at the statistical level: elementwise rho -> Delta * rho.

    The diagonal is untouched (Delta_ii = 1); hermiticity and positivity
    survive because Delta is a Gram matrix.
    """
    return DensityMatrixGrid(rho_m.grid, rho_m.rho * kernel.delta)


def _cayley_step_matrix(grid: Grid1D, v: np.ndarray, dt: float, params: ModelParams) -> np.ndarray:
    """Dense one-step Cayley operator on the interior, embedded with wall rows."""
    n = grid.n
    dx = grid.dx
    t = params.hbar**2 / (2.0 * params.m * dx**2)
    n_in = n - 2
    h = np.zeros((n_in, n_in), dtype=np.complex128)
    idx = np.arange(n_in)
    h[idx, idx] = 2.0 * t + v[1:-1]
    h[idx[:-1], idx[:-1] + 1] = -t
    h[idx[:-1] + 1, idx[:-1]] = -t
    kappa = 1j * dt / (2.0 * params.hbar)
    a = np.eye(n_in, dtype=np.complex128) + kappa * h
    b = np.eye(n_in, dtype=np.complex128) - kappa * h
    u_in = solve(a, b)
    u = np.zeros((n, n), dtype=np.complex128)
    u[1:-1, 1:-1] = u_in
    return u


def evolve_master(rho_m: DensityMatrixGrid, potential: Potential | None,
                  kernel: DeltaKernel | None, params: ModelParams,
                  dt: float, t_total: float,
                  hamiltonian: bool = True) -> DensityMatrixGrid:
    """Strang-split evolution of d rho/dt = (i/hbar)[rho, H] - gamma0 (1-Delta) rho.

    Half-step elementwise decay, full unitary conjugation by the Cayley
    one-step operator, half-step decay.  With hamiltonian=False (H = 0) the
    decay factors compose exactly into the closed-form solution
    rho_ij(t) = exp(-gamma0 (1 - Delta_ij) t) rho_ij(0).
    """
    grid = rho_m.grid
    n_steps = int(round(t_total / dt))
    rho = rho_m.rho.copy()

    if kernel is not None:
        decay_half = np.exp(-params.gamma0 * (1.0 - kernel.delta) * dt / 2.0)
    else:
        decay_half = None

    u = None
    if hamiltonian:
        v = (potential or Potential.free())(grid.x, 0.0)
        if potential is not None and potential.time_dependent:
            raise ValueError("master equation supports static potentials only")
        u = _cayley_step_matrix(grid, v, dt, params)

    for _ in range(n_steps):
        if decay_half is not None:
            rho *= decay_half
        if u is not None:
            rho = u @ rho @ u.conj().T
        if decay_half is not None:
            rho *= decay_half
    return DensityMatrixGrid(grid, rho)
