"""Uniform 1D grid, wave-function storage, potentials and basic observables.

Everything downstream (propagation, localization, the stochastic engine)
consumes the types defined here.  All quadrature is trapezoidal and the
kinetic energy uses the central 3-point second difference, so that the
energy bookkeeping of the localization module holds to solver precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidRange, PacketClipped, TooFewPoints, WeightMismatch

# Densities below this are treated as exactly zero inside rho*log(rho).
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid with hard-wall (Dirichlet) endpoints."""

    x_min: float
    x_max: float
    n: int

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    def __len__(self) -> int:
        return self.n


def make_grid(x_min: float, x_max: float, n: int) -> Grid1D:
    """Build a uniform grid; walls sit exactly on the first/last sample."""
    if not x_min < x_max:
        raise InvalidRange(f"need x_min < x_max, got [{x_min}, {x_max}]")
    if n < 16:
        raise TooFewPoints(f"need n >= 16, got {n}")
    return Grid1D(float(x_min), float(x_max), int(n))


def trapz(values: np.ndarray, dx: float) -> float | complex:
    """Trapezoidal quadrature on grid samples."""
    if len(values) < 2:
        return 0.0
    return (values.sum() - 0.5 * (values[0] + values[-1])) * dx


@dataclass
class WaveFunction:
    """Complex amplitudes on a Grid1D; boundary samples stay pinned at zero."""

    grid: Grid1D
    amp: np.ndarray

    def __post_init__(self):
        self.amp = np.asarray(self.amp, dtype=np.complex128)
        if self.amp.shape != (self.grid.n,):
            raise ValueError("amplitude array does not match grid")

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amp.copy())

    @property
    def rho(self) -> np.ndarray:
        return np.abs(self.amp) ** 2

    def norm(self) -> float:
        return math.sqrt(float(trapz(self.rho, self.grid.dx).real))

    def normalize(self) -> "WaveFunction":
        nrm = self.norm()
        if nrm == 0.0:
            raise WeightMismatch("cannot normalize the zero state")
        return WaveFunction(self.grid, self.amp / nrm)


@dataclass(frozen=True)
class ModelParams:
    """Model constants; the localization length lambda0 is derived, not stored."""

    hbar: float = 1.0
    m: float = 1.0
    T0: float = 1.0
    gamma0: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "m", "T0", "gamma0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def lambda0(self) -> float:
        """Thermal wavelength hbar*sqrt(2*pi/(m*T0)) setting the stable packet size."""
        return self.hbar * math.sqrt(2.0 * math.pi / (self.m * self.T0))

    @property
    def tau0(self) -> float:
        return 1.0 / self.gamma0

    def to_dict(self) -> dict:
        return {"hbar": self.hbar, "m": self.m, "T0": self.T0, "gamma0": self.gamma0}


@dataclass(frozen=True)
class Potential:
    """External potential V(x, t); static kinds ignore t."""

    kind: str
    params: dict = field(default_factory=dict)
    time_dependent: bool = False

    def __call__(self, x: np.ndarray, t: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.kind == "free":
            return np.zeros_like(x)
        if self.kind == "gaussian_barrier":
            return p["height"] * np.exp(-((x / p["width"]) ** 2))
        if self.kind == "double_well":
            v = np.zeros_like(x)
            half = 0.5 * p["bump_width"]
            v[np.abs(x - p["wall_pos"]) < half] = p["bump_height"]
            return v
        if self.kind == "half_open_well":
            v = np.zeros_like(x)
            half = 0.5 * p["bump_width"]
            v[np.abs(x - p["wall_pos"]) < half] = p["bump_height"]
            return v
        if self.kind == "growing_bump":
            v = np.zeros_like(x)
            half = 0.5 * p["bump_width"]
            v[np.abs(x - p["wall_pos"]) < half] = p["rate"] * t
            return v
        raise ValueError(f"unknown potential kind {self.kind!r}")

    @staticmethod
    def free() -> "Potential":
        return Potential("free")

    @staticmethod
    def gaussian_barrier(height: float, width: float) -> "Potential":
        return Potential("gaussian_barrier", {"height": height, "width": width})

    @staticmethod
    def double_well(wall_pos: float, bump_width: float, bump_height: float) -> "Potential":
        return Potential(
            "double_well",
            {"wall_pos": wall_pos, "bump_width": bump_width, "bump_height": bump_height},
        )

    @staticmethod
    def half_open_well(bump_width: float, bump_height: float, wall_pos: float = 0.0) -> "Potential":
        return Potential(
            "half_open_well",
            {"wall_pos": wall_pos, "bump_width": bump_width, "bump_height": bump_height},
        )

    @staticmethod
    def growing_bump(rate: float, bump_width: float = 0.1, wall_pos: float = 0.0) -> "Potential":
        return Potential(
            "growing_bump",
            {"wall_pos": wall_pos, "bump_width": bump_width, "rate": rate},
            time_dependent=True,
        )

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @staticmethod
    def from_dict(d: dict) -> "Potential":
        kind = d["kind"]
        return Potential(kind, dict(d.get("params", {})), time_dependent=kind == "growing_bump")


def gaussian_packet(grid: Grid1D, x_c: float, delta: float, p0: float = 0.0) -> WaveFunction:
    """Normalized packet ~ exp(-((x-x_c)/delta)^2) * exp(i*p0*x).

    The density variance of this profile is delta^2/4.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    x = grid.x
    envelope = np.exp(-(((x - x_c) / delta) ** 2))
    peak = envelope.max()
    if envelope[0] > 1e-10 * peak or envelope[-1] > 1e-10 * peak:
        raise PacketClipped(
            f"packet (x_c={x_c}, delta={delta}) does not vanish at the grid walls"
        )
    amp = envelope * np.exp(1j * p0 * x)
    amp[0] = 0.0
    amp[-1] = 0.0
    return WaveFunction(grid, amp).normalize()


def kinetic_energy(psi: WaveFunction, hbar: float, m: float) -> float:
    """<T> for the 3-point stencil, via the bond (summation-by-parts) form.

    Equals -(hbar^2/2m) * sum psi* D2 psi with Dirichlet walls, but is
    manifestly real and nonnegative.
    """
    d = np.diff(psi.amp)
    return float(hbar**2 / (2.0 * m) * np.sum(np.abs(d) ** 2) / psi.grid.dx)


def potential_energy(psi: WaveFunction, v: np.ndarray) -> float:
    return float(trapz(v * psi.rho, psi.grid.dx).real)


def observables(psi: WaveFunction, potential: Potential | None = None, t: float = 0.0,
                params: ModelParams | None = None) -> dict:
    """Norm, energy and position moments of a normalized state."""
    params = params or ModelParams()
    grid = psi.grid
    rho = psi.rho
    dx = grid.dx
    x = grid.x
    nrm = psi.norm()
    mean_x = float(trapz(x * rho, dx).real)
    mean_x2 = float(trapz(x * x * rho, dx).real)
    v = potential(x, t) if potential is not None else np.zeros_like(x)
    energy = kinetic_energy(psi, params.hbar, params.m) + potential_energy(psi, v)
    return {
        "norm": nrm,
        "energy": energy,
        "mean_x": mean_x,
        "var_x": mean_x2 - mean_x**2,
    }


def density_log_density(rho: np.ndarray, dx: float) -> float:
    """Integral of rho*log(rho); the integrand is zero wherever rho underflows."""
    safe = np.where(rho > _LOG_FLOOR, rho, 1.0)
    integrand = np.where(rho > _LOG_FLOOR, rho * np.log(safe), 0.0)
    return float(trapz(integrand, dx).real)


def ensemble_spread(branches: list[tuple[float, WaveFunction]]) -> tuple[float, float]:
    """Weighted within-branch spread and the localization measure S'.

    branches: list of (w_n, Phi_n) with sum(w_n) == 1 and each Phi_n normalized.
    Returns (delta_r2, s_prime) where
      delta_r2 = sum_n w_n (<x^2>_n - <x>_n^2)
      s_prime  = sum_n w_n * int |Phi_n|^2 log |Phi_n|^2 dx
    """
    weights = np.array([w for w, _ in branches], dtype=float)
    if abs(weights.sum() - 1.0) > 1e-10:
        raise WeightMismatch(f"branch weights sum to {weights.sum()!r}, not 1")
    delta_r2 = 0.0
    s_prime = 0.0
    for w, phi in branches:
        if w == 0.0:
            continue
        dx = phi.grid.dx
        x = phi.grid.x
        rho = phi.rho
        mean_x = float(trapz(x * rho, dx).real)
        mean_x2 = float(trapz(x * x * rho, dx).real)
        delta_r2 += w * (mean_x2 - mean_x**2)
        s_prime += w * density_log_density(rho, dx)
    return delta_r2, s_prime
