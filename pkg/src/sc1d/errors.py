"""Exception types raised by the simulator."""


class SimulationError(Exception):
    """Base class for all sc1d errors."""


class InvalidRange(SimulationError):
    """Grid bounds are inverted or degenerate."""


class TooFewPoints(SimulationError):
    """Grid has fewer sample points than the schemes support."""


class PacketClipped(SimulationError):
    """Initial packet has non-negligible amplitude at a hard wall."""


class RampUnderresolved(SimulationError):
    """Localization ramp narrower than the grid can represent."""


class RampOutsideDomain(SimulationError):
    """Localization ramp extends past the grid boundaries."""


class WeightMismatch(SimulationError):
    """Branch weights do not sum to one."""


class EmptyBranch(SimulationError):
    """Attempted to project onto a branch with (numerically) zero weight."""


class SolverNonconvergence(SimulationError):
    """An iterative solver failed to converge; message carries diagnostics."""


class NoRootInBracket(SimulationError):
    """Bracketed root search found no sign change."""


class GridTooLarge(SimulationError):
    """Resource guard for dense (matrix) operations."""


class UnknownPreset(SimulationError):
    """Scenario preset id not recognized."""
