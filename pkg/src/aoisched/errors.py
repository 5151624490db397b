"""Exception hierarchy for the aoisched package."""


class AoischedError(Exception):
    """Base class for all package errors."""


class InvalidRateError(AoischedError, ValueError):
    """A service rate is zero, negative, or non-finite."""


class InvalidProbabilityError(AoischedError, ValueError):
    """A probability lies outside [0, 1] or a pmf does not sum to 1."""


class DimensionMismatchError(AoischedError, ValueError):
    """Vector lengths disagree with the number of sources."""


class SingularChainError(AoischedError):
    """The transient sub-generator is singular; some state never absorbs."""


class DegenerateThetaError(AoischedError):
    """The transient indicator vector is all zeros, so the age ratio is 0/0."""


class ReducibleChainError(AoischedError):
    """The recurrent chain has more than one closed class."""


class PatternLengthError(AoischedError, ValueError):
    """A cyclic pattern exceeds the supported length."""


class ConvergenceError(AoischedError, RuntimeError):
    """An iterative solver hit its iteration cap without meeting tolerance."""


class ScenarioError(AoischedError, ValueError):
    """A scenario file or CLI configuration is malformed."""
