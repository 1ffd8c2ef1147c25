"""State-dependent localization pairs and their free-energy optimization.

A binary split is a pair of envelopes (P_L, P_R) with P_L^2 + P_R^2 = 1
pointwise.  The trial family is a cosine ramp of half-width 2*lambda around
a split point x0; the variational solvers provide the tanh-profile analytic
solution and its entropy-functional variant.  A split is admissible when its
free-energy balance dF = dE - T0*dS is non-positive; `optimize_split` scans
candidates and returns the minimizer or `NoSplit`.

Discrete energy bookkeeping: the kinetic cost of a split evaluated on bonds,

    dE = (hbar^2 / 2m dx) * sum_bonds [(dP_L)^2 + (dP_R)^2] * |psi_i||psi_i+1|,

equals sum_n w_n <Phi_n|H|Phi_n> - <psi|H|psi> exactly (to roundoff) for
states with position-independent phase, for any envelope pair satisfying the
sum rule.  SplitBasis.dE stores this exact value; `energy_cost` returns the
closed-form ramp formula, which matches it to O((dx/lambda)^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .core import (
    Grid1D,
    ModelParams,
    WaveFunction,
    density_log_density,
    trapz,
)
from .errors import (
    GridTooLarge,
    NoRootInBracket,
    RampOutsideDomain,
    RampUnderresolved,
    SimulationError,
)

W_FLOOR = 1e-12  # branches lighter than this are never sampled


@dataclass
class SplitBasis:
    """Binary localization pair on a grid, with its costs.

    dE is the exact discrete kinetic cost of the split (bond form); dS the
    two-branch mixing entropy including the branch overlap.
    """

    grid: Grid1D
    x0: float
    lam: float
    pL: np.ndarray
    pR: np.ndarray
    clipped: bool = False
    wL: float = math.nan
    wR: float = math.nan
    dE: float = math.nan
    dS: float = math.nan
    p_overlap: float = math.nan


@dataclass
class NoSplit:
    """Optimizer outcome: no admissible split; the state is left unchanged."""

    best_dF: float = math.inf
    n_candidates: int = 0


@dataclass
class ThetaField:
    """Splitting angle theta(x) in [0, pi/2]; P_1 = cos(theta), P_2 = sin(theta)."""

    grid: Grid1D
    theta: np.ndarray
    lam: float
    x0: float
    support_width: float | None = None
    endpoint_slope: float | None = None

    @property
    def pL(self) -> np.ndarray:
        return np.cos(self.theta)

    @property
    def pR(self) -> np.ndarray:
        return np.sin(self.theta)


def _pair_arrays(grid: Grid1D, x0: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise cosine ramp pair; exact formulas, evaluated on the grid."""
    u = grid.x - x0
    phase = np.pi / (8.0 * lam) * (u + 2.0 * lam)
    phase = np.clip(phase, 0.0, np.pi / 2.0)
    pL = np.cos(phase)
    pR = np.sin(phase)
    return pL, pR


def trial_pair(grid: Grid1D, x0: float, lam: float, clip: bool = False) -> SplitBasis:
    """Cosine-ramp pair with P_L falling 1 -> 0 over [x0-2lam, x0+2lam].

    With clip=False the full ramp must fit inside the grid; clip=True lets
    the ramp run into the hard walls (used by wide-lambda scans, where the
    envelopes simply stop mid-ramp at the boundary).
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if 4.0 * lam < 3.0 * grid.dx:
        raise RampUnderresolved(f"4*lambda={4*lam:.3g} < 3*dx={3*grid.dx:.3g}")
    if not clip and (x0 - 2.0 * lam < grid.x_min or x0 + 2.0 * lam > grid.x_max):
        raise RampOutsideDomain(
            f"ramp [{x0-2*lam:.3g}, {x0+2*lam:.3g}] exceeds [{grid.x_min}, {grid.x_max}]"
        )
    if not (grid.x_min <= x0 <= grid.x_max):
        raise RampOutsideDomain(f"x0={x0} outside the grid")
    pL, pR = _pair_arrays(grid, x0, lam)
    was_clipped = x0 - 2.0 * lam < grid.x_min or x0 + 2.0 * lam > grid.x_max
    return SplitBasis(grid=grid, x0=float(x0), lam=float(lam), pL=pL, pR=pR,
                      clipped=was_clipped)


def weights(psi: WaveFunction, basis) -> tuple[float, float]:
    """Branch probabilities (wL, wR) = (int P_L^2 rho, int P_R^2 rho)."""
    dx = psi.grid.dx
    rho = psi.rho
    wl = float(trapz(basis.pL**2 * rho, dx).real)
    wr = float(trapz(basis.pR**2 * rho, dx).real)
    return wl, wr


def overlap_p(psi: WaveFunction, basis) -> float:
    """Overlap integral p = int rho P_L P_R dx, in [0, 1/2]."""
    p = float(trapz(psi.rho * basis.pL * basis.pR, psi.grid.dx).real)
    return min(max(p, 0.0), 0.5)


def entropy_gain(wL: float, wR: float, p_overlap: float = 0.0, exact: bool = True) -> float:
    """Mixing entropy of a binary collapse.

    exact=True diagonalizes the two-branch outcome mixture: its eigenvalues
    are 1/2 +- sqrt(((wL-wR)/2)^2 + p^2), which reduces to -sum w log w for
    orthogonal branches and to the overlap form at wL = wR = 1/2.  The
    maximum log 2 occurs at (1/2, 1/2, p=0); p = 1/2 gives zero.
    """
    if exact:
        gap = math.sqrt(((wL - wR) / 2.0) ** 2 + p_overlap**2)
        mu_hi = min(0.5 + gap, 1.0)
        mu_lo = max(0.5 - gap, 0.0)
    else:
        mu_hi, mu_lo = max(wL, wR), min(wL, wR)
        mu_lo = max(mu_lo, 0.0)
    s = 0.0
    for mu in (mu_hi, mu_lo):
        if mu > 0.0:
            s -= mu * math.log(mu)
    return s


def _entropy_vec(wL: np.ndarray, wR: np.ndarray, p: np.ndarray) -> np.ndarray:
    gap = np.sqrt(((wL - wR) / 2.0) ** 2 + p**2)
    mu_hi = np.minimum(0.5 + gap, 1.0)
    mu_lo = np.maximum(0.5 - gap, 0.0)
    out = np.zeros_like(mu_hi)
    for mu in (mu_hi, mu_lo):
        mask = mu > 0.0
        out[mask] -= mu[mask] * np.log(mu[mask])
    return out


def energy_cost_general(psi: WaveFunction, pL: np.ndarray, pR: np.ndarray,
                        params: ModelParams) -> float:
    """General-form split cost (hbar^2/2m) int rho sum (grad P_n)^2, on bonds.

    Uses only |psi|, so it is exactly phase invariant, and it reproduces the
    direct weighted post-collapse energy change to roundoff for real-phase
    states.
    """
    r = np.abs(psi.amp)
    rb = r[:-1] * r[1:]
    dL = np.diff(pL)
    dR = np.diff(pR)
    dx = psi.grid.dx
    return float(params.hbar**2 / (2.0 * params.m * dx) * np.sum((dL**2 + dR**2) * rb))


def _window_integral(x: np.ndarray, rho: np.ndarray, a: float, b: float) -> float:
    """Integral of the piecewise-linear interpolant of rho over [a, b]."""
    a = max(a, x[0])
    b = min(b, x[-1])
    if b <= a:
        return 0.0
    dx = x[1] - x[0]
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * dx)))

    def cum_at(pos: float) -> float:
        i = min(int((pos - x[0]) / dx), len(x) - 2)
        s = pos - x[i]
        slope = (rho[i + 1] - rho[i]) / dx
        return cum[i] + s * (rho[i] + 0.5 * slope * s)

    return cum_at(b) - cum_at(a)


def energy_cost(psi: WaveFunction, basis: SplitBasis, params: ModelParams) -> float:
    """Closed-form ramp cost (1/2m)(pi hbar/8 lambda)^2 * int_ramp rho dx.

    Cross-checked against the general bond form; the two agree to 1e-6 once
    the ramp resolves ~1e3 grid cells, and to O((pi dx/8 lambda)^2) otherwise.
    """
    lam = basis.lam
    grid = psi.grid
    q_win = _window_integral(grid.x, psi.rho, basis.x0 - 2.0 * lam, basis.x0 + 2.0 * lam)
    closed = (1.0 / (2.0 * params.m)) * (np.pi * params.hbar / (8.0 * lam)) ** 2 * q_win
    general = energy_cost_general(psi, basis.pL, basis.pR, params)
    h = np.pi * grid.dx / (8.0 * lam)
    tol = 1e-6 + h**2
    scale = max(abs(closed), abs(general), 1e-300)
    if abs(closed - general) / scale > tol:
        raise SimulationError(
            f"ramp energy formula disagrees with the gradient form: "
            f"{closed:.9e} vs {general:.9e} (tol {tol:.2e})"
        )
    return float(closed)


def complete_basis(psi: WaveFunction, basis: SplitBasis, params: ModelParams) -> SplitBasis:
    """Fill weights, overlap and costs of a bare envelope pair."""
    wl, wr = weights(psi, basis)
    basis.wL, basis.wR = wl, wr
    basis.p_overlap = overlap_p(psi, basis)
    basis.dE = energy_cost_general(psi, basis.pL, basis.pR, params)
    basis.dS = entropy_gain(wl, wr, basis.p_overlap)
    return basis


# ---------------------------------------------------------------------------
# free-energy scan
# ---------------------------------------------------------------------------


def _snap_lambda(lam: float, dx: float) -> tuple[float, int]:
    """Snap lambda so the ramp half-width 2*lambda is a whole number of cells."""
    k = max(int(round(2.0 * lam / dx)), 2)
    return 0.5 * k * dx, k


def _cumtrapz(values: np.ndarray, dx: float) -> np.ndarray:
    out = np.empty(len(values))
    out[0] = 0.0
    np.cumsum(0.5 * (values[1:] + values[:-1]) * dx, out=out[1:])
    return out


@dataclass
class _ScanTables:
    """Per-lambda prefix tables enabling O(1) candidate evaluation."""

    k: int
    lam: float
    pref: float            # bond-energy prefactor
    cum_rho: np.ndarray
    cum_sin: np.ndarray    # cumtrapz of rho*sin(g x)
    cum_cos: np.ndarray    # cumtrapz of rho*cos(g x)
    cum_bond: np.ndarray   # prefix sums of |psi_i||psi_i+1|
    g: float


def _build_tables(psi: WaveFunction, lam: float, params: ModelParams) -> _ScanTables:
    grid = psi.grid
    dx = grid.dx
    lam_s, k = _snap_lambda(lam, dx)
    x = grid.x
    rho = psi.rho
    g = np.pi / (4.0 * lam_s)
    h = np.pi * dx / (8.0 * lam_s)
    pref = params.hbar**2 / (2.0 * params.m * dx) * 4.0 * math.sin(h / 2.0) ** 2
    r = np.abs(psi.amp)
    cum_bond = np.empty(grid.n)
    cum_bond[0] = 0.0
    np.cumsum(r[:-1] * r[1:], out=cum_bond[1:])
    return _ScanTables(
        k=k,
        lam=lam_s,
        pref=pref,
        cum_rho=_cumtrapz(rho, dx),
        cum_sin=_cumtrapz(rho * np.sin(g * x), dx),
        cum_cos=_cumtrapz(rho * np.cos(g * x), dx),
        cum_bond=cum_bond,
        g=g,
    )


def _evaluate_candidates(psi: WaveFunction, tables: _ScanTables, idx: np.ndarray,
                         params: ModelParams):
    """Exact (wL, wR, p, dE, dF) for split points at grid indices idx."""
    grid = psi.grid
    n = grid.n
    k = tables.k
    lo = np.maximum(idx - k, 0)
    hi = np.minimum(idx + k, n - 1)
    x0 = grid.x[idx]

    d_rho = tables.cum_rho[hi] - tables.cum_rho[lo]
    d_sin = tables.cum_sin[hi] - tables.cum_sin[lo]
    d_cos = tables.cum_cos[hi] - tables.cum_cos[lo]
    cg, sg = np.cos(tables.g * x0), np.sin(tables.g * x0)
    sin_win = cg * d_sin - sg * d_cos          # int_win rho sin(g(x-x0))
    cos_win = cg * d_cos + sg * d_sin          # int_win rho cos(g(x-x0))

    total = tables.cum_rho[-1]
    wL = tables.cum_rho[lo] + 0.5 * d_rho - 0.5 * sin_win
    wR = total - wL
    p = np.clip(0.5 * cos_win, 0.0, 0.5)
    dE = tables.pref * (tables.cum_bond[hi] - tables.cum_bond[lo])
    dS = _entropy_vec(wL, wR, p)
    dF = dE - params.T0 * dS
    return wL, wR, p, dE, dS, dF


def _lambda_scan_values(dx: float, lam_max: float, per_decade: int = 16) -> list[float]:
    """Snapped geometric lambda ladder from the grid scale up to lam_max."""
    lam_min = dx  # snapped floor: ramp of 4 cells
    if lam_max < lam_min:
        return [lam_min]
    n_steps = int(math.floor(per_decade * math.log10(lam_max / lam_min))) + 1
    raw = [lam_min * 10.0 ** (j / per_decade) for j in range(n_steps)]
    raw.append(lam_max)
    seen: dict[int, float] = {}
    for lam in raw:
        lam_s, k = _snap_lambda(lam, dx)
        if lam_s <= lam_max + 0.25 * dx + 1e-12:
            seen.setdefault(k, lam_s)
    return sorted(seen.values())


def optimize_split(psi: WaveFunction, params: ModelParams, mode: str, *,
                   lam: float | None = None, x0: float | None = None,
                   rng: np.random.Generator | None = None,
                   tol_f: float | None = None,
                   density_cap: float = 0.9):
    """Scan split candidates and return the dF-minimizing admissible basis.

    mode:
      "scan_x0"     -- x0 runs over grid points below the density cap at the
                       caller's fixed lambda (ramp strictly inside the domain);
      "scan_lambda" -- lambda runs over a geometric ladder at fixed x0
                       (ramps may clip at the hard walls);
      "scan_both"   -- outer product of the two scans.

    A candidate is admissible when dF = dE - T0*dS <= 0 up to rounding slack;
    the slack scales with the candidate's own cost scale, tol_f*(dE + T0*dS)/T0
    with tol_f = 1e-9*T0 by default, so numerically empty far-tail splits are
    never admitted on tolerance alone.  Ties within tol_f of the minimum are
    broken uniformly at random, consuming one draw from rng; with no
    admissible candidate the result is NoSplit and rng is untouched.
    """
    if tol_f is None:
        tol_f = 1e-9 * params.T0
    grid = psi.grid
    n = grid.n
    rho = psi.rho

    jobs: list[tuple[_ScanTables, np.ndarray, bool]] = []
    if mode == "scan_x0":
        if lam is None:
            raise ValueError("scan_x0 requires lam")
        tables = _build_tables(psi, lam, params)
        k = tables.k
        idx = np.arange(k, n - k)
        idx = idx[rho[idx] < density_cap * rho.max()]
        jobs.append((tables, idx, False))
    elif mode == "scan_lambda":
        if x0 is None:
            raise ValueError("scan_lambda requires x0")
        i0 = int(round((x0 - grid.x_min) / grid.dx))
        i0 = min(max(i0, 1), n - 2)
        for lam_v in _lambda_scan_values(grid.dx, params.lambda0):
            tables = _build_tables(psi, lam_v, params)
            jobs.append((tables, np.array([i0]), True))
    elif mode == "scan_both":
        for lam_v in _lambda_scan_values(grid.dx, params.lambda0):
            tables = _build_tables(psi, lam_v, params)
            idx = np.arange(1, n - 1)
            idx = idx[rho[idx] < density_cap * rho.max()]
            jobs.append((tables, idx, True))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    best: list[tuple[float, float, int, float, float, float, float, float]] = []
    n_cand = 0
    for tables, idx, allow_clip in jobs:
        if len(idx) == 0:
            continue
        if not allow_clip:
            keep = (idx - tables.k >= 0) & (idx + tables.k <= n - 1)
            idx = idx[keep]
            if len(idx) == 0:
                continue
        wL, wR, p, dE, dS, dF = _evaluate_candidates(psi, tables, idx, params)
        ok = (wL >= W_FLOOR) & (wR >= W_FLOOR)
        n_cand += int(ok.sum())
        for j in np.nonzero(ok)[0]:
            best.append((float(dF[j]), tables.lam, int(idx[j]), float(wL[j]),
                         float(wR[j]), float(p[j]), float(dE[j]), float(dS[j])))

    if not best:
        return NoSplit(best_dF=math.inf, n_candidates=0)

    dfs = np.array([b[0] for b in best])
    scales = np.array([b[6] + params.T0 * b[7] for b in best])
    admissible = dfs <= tol_f * scales / params.T0
    if not admissible.any():
        return NoSplit(best_dF=float(dfs.min()), n_candidates=n_cand)

    df_min = float(dfs[admissible].min())
    tied = np.nonzero(admissible & (dfs <= df_min + tol_f))[0]
    if rng is not None:
        pick = int(tied[int(rng.random() * len(tied))])
    else:
        pick = int(tied[0])
    dF_v, lam_v, i0, wl, wr, p_v, de, ds = best[pick]
    x0_v = grid.x[i0]
    pL, pR = _pair_arrays(grid, x0_v, lam_v)
    was_clipped = x0_v - 2 * lam_v < grid.x_min or x0_v + 2 * lam_v > grid.x_max
    return SplitBasis(
        grid=grid, x0=float(x0_v), lam=float(lam_v), pL=pL, pR=pR, clipped=was_clipped,
        wL=wl, wR=wr, dE=de, dS=ds, p_overlap=p_v,
    )


# ---------------------------------------------------------------------------
# variational solutions for the splitting angle
# ---------------------------------------------------------------------------


def _theta_tanh(u: np.ndarray) -> np.ndarray:
    """theta with cos(2 theta) = -tanh(u), computed overflow-free."""
    out = np.empty_like(u)
    neg = u < 0
    out[neg] = np.arctan(np.exp(u[neg]))
    out[~neg] = np.pi / 2.0 - np.arctan(np.exp(-u[~neg]))
    return out


def pendulum_analytic(grid: Grid1D, x0: float, lam: float) -> ThetaField:
    """Analytic splitting angle solving 4 lam^2 theta'' = sin(4 theta).

    The profile is cos(2 theta) = -tanh((x - x0)/lam), with the first
    integral 2 lam^2 theta'^2 + cos(4 theta)/4 = 1/4 and the exact relation
    lam^2 theta'^2 = P_1^2 P_2^2.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    theta = _theta_tanh((grid.x - x0) / lam)
    return ThetaField(grid=grid, theta=theta, lam=lam, x0=x0)


def center_condition(grid: Grid1D, rho: np.ndarray, lam: float) -> float:
    """Split origin x0 with int tanh((x - x0)/lam) rho dx = 0 (equal weights)."""
    x = grid.x
    dx = grid.dx

    def f(x0: float) -> float:
        return float(trapz(np.tanh((x - x0) / lam) * rho, dx).real)

    a, b = grid.x_min, grid.x_max
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    # strictly decreasing in x0 for rho >= 0, so the bracket always works
    return float(brentq(f, a, b, xtol=1e-13, rtol=1e-15))


def ramp_weight_q(grid: Grid1D, rho: np.ndarray, x0: float, lam: float) -> float:
    """Density weight q = int sech^2((x - x0)/lam) rho dx on the transition region.

    This is 4 * int P_1^2 P_2^2 rho dx for the analytic profile, normalized so
    a uniform density rho_bar gives exactly q = 2 lam rho_bar.
    """
    u = (grid.x - x0) / lam
    return float(trapz(rho / np.cosh(u) ** 2, grid.dx).real)


@dataclass
class LambdaResult:
    lam: float
    q: float
    step_function_limit: bool = False


def lambda_from_constraint(grid: Grid1D, rho: np.ndarray, params: ModelParams,
                           x0: float | None = None,
                           lam_min: float | None = None,
                           lam_max: float | None = None) -> LambdaResult:
    """Transition width from the energy budget hbar^2 q(lam)/(8 m lam^2) = T0 log 2.

    For uniform density the solution is lam = hbar^2 rho_bar/(4 m T0 log 2).
    If even the smallest resolvable lam is below budget the density has a
    hard gap; the bracket floor is returned flagged as the step-function
    limit.  If no lam in the bracket fits the budget, NoRootInBracket is
    raised and callers fall back to NoSplit.
    """
    if x0 is None:
        x0 = center_condition(grid, rho, params.lambda0 / 8.0)
    lam_min = lam_min if lam_min is not None else grid.dx
    lam_max = lam_max if lam_max is not None else 2.0 * params.lambda0
    target = params.T0 * math.log(2.0)

    def f(lam: float) -> float:
        q = ramp_weight_q(grid, rho, x0, lam)
        return params.hbar**2 * q / (8.0 * params.m * lam**2) - target

    f_lo = f(lam_min)
    if f_lo < 0.0:
        return LambdaResult(lam=lam_min, q=ramp_weight_q(grid, rho, x0, lam_min),
                            step_function_limit=True)
    f_hi = f(lam_max)
    if f_hi > 0.0:
        raise NoRootInBracket(
            f"energy budget not reached for lam in [{lam_min:.3g}, {lam_max:.3g}]"
        )
    lam = float(brentq(f, lam_min, lam_max, xtol=1e-14, rtol=1e-13))
    return LambdaResult(lam=lam, q=ramp_weight_q(grid, rho, x0, lam))


# -- entropy-functional variant ---------------------------------------------

_EPS_THETA = 1e-7  # endpoint cutoff; theta'(eps) < 1e-6 there


def _entropy_potential(theta: np.ndarray) -> np.ndarray:
    """V(theta) = (log sin 2theta + cos 2theta log cot theta)/2; V(0+) = log(2)/2."""
    return 0.5 * (np.log(np.sin(2.0 * theta))
                  + np.cos(2.0 * theta) * np.log(1.0 / np.tan(theta)))


def pendulum_entropy(grid: Grid1D, x0: float, lam: float,
                     eps: float = _EPS_THETA, n_tau: int = 262145) -> ThetaField:
    """Splitting angle for 4 lam^2 theta'' = sin(2 theta) log cot(theta).

    Solved from the first integral 2 lam^2 theta'^2 = V(0) - V(theta) by
    quadrature in tau = log tan theta (the endpoint degeneracy theta' -> 0
    makes direct shooting in x stiff).  The transition is effectively
    compact: theta crosses [eps, pi/2 - eps] over a finite support width,
    with theta' below 1e-6 at the cut.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    v0 = 0.5 * math.log(2.0)
    tau_end = math.log(math.tan(math.pi / 2.0 - eps))
    tau = np.linspace(-tau_end, tau_end, n_tau)
    theta = _theta_tanh(tau)
    v = _entropy_potential(theta)
    # dx/dtau = (sin 2theta / 2) / theta'(theta), theta' from the first integral
    theta_prime = np.sqrt(np.maximum(v0 - v, 1e-300) / (2.0 * lam**2))
    integrand = 0.5 * np.sin(2.0 * theta) / theta_prime
    x_of_tau = np.empty(n_tau)
    x_of_tau[0] = 0.0
    np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(tau), out=x_of_tau[1:])
    x_of_tau += x0 - np.interp(0.0, tau, x_of_tau)  # center: theta(x0) = pi/4

    width = float(x_of_tau[-1] - x_of_tau[0])
    theta_grid = np.interp(grid.x, x_of_tau, theta, left=0.0, right=np.pi / 2.0)
    slope_end = float(theta_prime[-1])
    if not np.isfinite(width) or width <= 0:
        raise SimulationError("entropy-variant quadrature failed to produce a profile")
    return ThetaField(grid=grid, theta=theta_grid, lam=lam, x0=x0,
                      support_width=width, endpoint_slope=slope_end)


def entropy_support_width_oracle(lam: float, eps: float = _EPS_THETA) -> float:
    """Support width by adaptive quadrature of dx = d theta/theta'(theta).

    Independent of the tau-grid route used by pendulum_entropy: integrates
    sqrt(2) lam / sqrt(V(0) - V(theta)) adaptively over theta, with the
    near-endpoint piece taken in u = log(1/theta) where the integrand is
    mild.
    """
    v0 = 0.5 * math.log(2.0)

    def body(theta: float) -> float:
        return 1.0 / math.sqrt(v0 - float(_entropy_potential(np.array([theta]))[0]))

    delta = 1e-3
    mid, _ = quad(body, delta, math.pi / 4.0, limit=400)

    def tail(u: float) -> float:
        th = math.exp(-u)
        return th * body(th)

    tail_part, _ = quad(tail, math.log(1.0 / delta), math.log(1.0 / eps), limit=400)
    half = mid + tail_part
    return 2.0 * math.sqrt(2.0) * lam * half


# ---------------------------------------------------------------------------
# product-state factorization of the localization measure
# ---------------------------------------------------------------------------


def _axis_branches(psi: WaveFunction, basis) -> list[tuple[float, np.ndarray]]:
    """(weight, normalized branch amplitude) pairs; no basis means one branch."""
    if basis is None:
        return [(1.0, psi.amp.copy())]
    out = []
    for p in (basis.pL, basis.pR):
        raw = p * psi.amp
        w = float(trapz(np.abs(raw) ** 2, psi.grid.dx).real)
        if w < W_FLOOR:
            continue
        out.append((w, raw / math.sqrt(w)))
    return out


def s_prime_product_factorization(psiA: WaveFunction, psiB: WaveFunction,
                                  basisA=None, basisB=None) -> tuple[float, float]:
    """Localization measure of a product state vs the sum of its factors.

    Returns (S'_joint, S'_A + S'_B) computed by direct 2D quadrature with
    joint weights w_nm = w_n * w_m; the two agree to roundoff.
    """
    if psiA.grid.n > 64 or psiB.grid.n > 64:
        raise GridTooLarge("joint-grid check is limited to 64 points per axis")
    dxa, dxb = psiA.grid.dx, psiB.grid.dx

    def axis_weights(n: int, dx: float) -> np.ndarray:
        w = np.full(n, dx)
        w[0] = w[-1] = 0.5 * dx
        return w

    wa = axis_weights(psiA.grid.n, dxa)
    wb = axis_weights(psiB.grid.n, dxb)
    w2d = np.outer(wa, wb)

    s_joint = 0.0
    branchesA = _axis_branches(psiA, basisA)
    branchesB = _axis_branches(psiB, basisB)
    for w_n, amp_n in branchesA:
        for w_m, amp_m in branchesB:
            joint_rho = np.outer(np.abs(amp_n) ** 2, np.abs(amp_m) ** 2)
            safe = np.where(joint_rho > 1e-300, joint_rho, 1.0)
            s_joint += w_n * w_m * float(np.sum(w2d * joint_rho * np.log(safe)))

    s_sum = 0.0
    for psi, branches in ((psiA, branchesA), (psiB, branchesB)):
        for w_n, amp_n in branches:
            s_sum += w_n * density_log_density(np.abs(amp_n) ** 2, psi.grid.dx)
    return s_joint, s_sum
