"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Point or operator value has the wrong length for its set."""


class BoundaryViolation(ValueError):
    """Point is invalid for the geometry (negative / non-finite entries)."""


class NonPositiveStep(ValueError):
    """Step-size must be strictly positive."""


class RootFindFailure(RuntimeError):
    """Scalar solve in the cube-norm prox did not converge."""


class UnboundedSet(ValueError):
    """Diameter requested for an unbounded feasible set."""


class EmptyMatrix(ValueError):
    """Matrix game payoff matrix has no rows or columns."""


class NotPSD(ValueError):
    """Quadratic piece is not positive semidefinite."""


class DimensionTooSmall(ValueError):
    """Problem requires a larger dimension."""


class CouplingTooLarge(ValueError):
    """N-player coupling must satisfy |kappa| < 1."""


class MissingConstant(ValueError):
    """A regularity constant needed for a bound check is unavailable."""


class UnknownProblem(ValueError):
    """Problem name not in the catalog."""


class IncompatibleGeometry(ValueError):
    """Requested geometry kind is not valid for the problem's feasible set."""


class IterationBudgetZero(ValueError):
    """Run requested with T < 1."""


class NonPositiveGap(ValueError):
    """Log-log slope fit encountered a gap <= 0."""


class TooShort(ValueError):
    """Trace too short for a slope fit."""


class TooLarge(ValueError):
    """Brute-force game oracle only handles tiny matrices."""
