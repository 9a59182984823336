"""Exception types shared across the package."""


class LxSplineError(Exception):
    """Base class for all package-specific errors."""


class DomainError(LxSplineError, ValueError):
    """Input outside the interval a function is defined on."""


class BasisIndexError(LxSplineError, IndexError):
    """Basis-function index out of range."""


class DegenerateAlphaError(LxSplineError, ValueError):
    """Change points closer than the minimum separation."""


class ConstraintViolationError(LxSplineError, ValueError):
    """Negative coefficient on a non-intercept basis function."""


class LabelError(LxSplineError, ValueError):
    """Malformed dyadic knot label."""


class MatrixError(LxSplineError, ValueError):
    """Covariance matrix not positive semidefinite after jitter."""


class InsufficientDataError(LxSplineError, ValueError):
    """Too few observations for the requested spline order."""


class HypothesisError(LxSplineError, ValueError):
    """Malformed or overlapping shape-hypothesis specification."""


class ScenarioError(LxSplineError, KeyError):
    """Unknown simulation scenario or true-function id."""
