"""Exception types shared across the package.

Every analysis-level failure derives from ParimpError so callers (and the
CLI) can distinguish "the math said no" from genuine bugs.
"""


class ParimpError(Exception):
    """Base class for all analysis errors."""


# -- map evaluation / algebra -------------------------------------------------

class PoleHit(ParimpError):
    """Denominator vanished (within tolerance) at an evaluation point."""


class Overflow(ParimpError):
    """An intermediate iterate exceeded the overflow guard."""


class DegreeGuard(ParimpError):
    """Symbolic composition would exceed the degree guard."""


class NoConvergence(ParimpError):
    """Root finding failed to converge; carries the best residual seen."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class ParseError(ParimpError):
    """Expression parse error; ``column`` is 1-based."""

    def __init__(self, message, column):
        super().__init__(f"{message} (column {column})")
        self.column = column


# -- fixed point analysis -----------------------------------------------------

class AtParabolic(ParimpError):
    """Multiplier is too close to 1 for the horocyclic statistic."""


class FixedPointOnContour(ParimpError):
    """A quadrature node landed on (or numerically at) a fixed point."""


class NoQuadConvergence(ParimpError):
    """Contour quadrature did not settle below tolerance at max nodes."""


class BoundaryRoot(ParimpError):
    """A fixed point lies too close to the splitting disk boundary."""


class TrackMatchFailure(ParimpError):
    """Fixed points of consecutive reports could not be matched bijectively."""


class AmbiguousTrack(ParimpError):
    """A multiplier track is between the bounded and divergence thresholds."""

    def __init__(self, message, track=None):
        super().__init__(message)
        self.track = track


# -- vector field flow / gate detection ---------------------------------------

class Stalled(ParimpError):
    """Trajectory exhausted its arclength budget (or never moved)."""


class StepUnderflow(ParimpError):
    """The adaptive integrator could not take a step."""


class NotWellBehaved(ParimpError):
    """Gate detection failed; carries the offending seed (k, sign) if known."""

    def __init__(self, message, seed=None):
        super().__init__(message)
        self.seed = seed


class CoordinateMismatch(ParimpError):
    """Map is not normalized with the parabolic cluster at the origin."""


# -- gate tree / engine ---------------------------------------------------------

class ClosedGate(ParimpError):
    """Tree construction needs a bijective gate vector (no closed gates)."""


class NotAdmissible(ParimpError):
    """Gate vector fails admissibility."""


class IndeterminateSum(ParimpError):
    """A lifted-phase partial sum mixes diverging tendencies of both signs.

    The caller must refine (more data, or a numeric refiner); carries the
    starting gate and the offending gate prefix.
    """

    def __init__(self, message, gate=None, prefix=None):
        super().__init__(message)
        self.gate = gate
        self.prefix = tuple(prefix) if prefix else ()


class InvalidCenter(ParimpError):
    """mark_edges called with v0 inside V_star."""


# -- grids, clouds, rays --------------------------------------------------------

class EmptyWindow(ParimpError):
    """No boundary cell found in the grid window."""


class EmptyCloud(ParimpError):
    """Hausdorff distance of an empty point cloud."""


class NewtonDivergence(ParimpError):
    """Ray continuation failed before producing any sample."""

    def __init__(self, message, last_potential=None):
        super().__init__(message)
        self.last_potential = last_potential


class PotentialMismatch(ParimpError):
    """Ray tails have no overlapping potential range."""


# -- experiment runner ----------------------------------------------------------

class ConfigError(ParimpError):
    """Experiment config parse/validation error with position info."""

    def __init__(self, message, line=None, column=None):
        pos = ""
        if line is not None:
            pos = f" (line {line}" + (f", column {column})" if column else ")")
        super().__init__(message + pos)
        self.line = line
        self.column = column


class InconclusiveAnalysis(ParimpError):
    """An analysis block finished without a usable verdict (exit code 2)."""
