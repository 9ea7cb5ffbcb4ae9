"""Exception types shared across the package."""


class GatelabError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(GatelabError):
    """Run configuration is malformed (bad key, bad value, bad file)."""


class NonConvergence(GatelabError):
    """Iterative solver hit its iteration cap before reaching tolerance."""


class DegenerateSeed(GatelabError):
    """Two seed positions coincide; the Coulomb term is singular there."""


class InsufficientPoints(GatelabError):
    """Not enough (or invalid) data points for a fit."""


class CoincidentIons(GatelabError):
    """Two ions sit closer than the geometric sanity threshold."""


class EigenFailure(GatelabError):
    """Dense symmetric eigensolver failed to converge."""


class BracketFailure(GatelabError):
    """Bisection could not find a sign change inside the expanded bracket."""


class UnstableSpectrum(GatelabError):
    """An operation that needs a stable spectrum received an unstable one."""


class NegativeOccupation(GatelabError):
    """Thermal occupation numbers must be non-negative."""


class IndefiniteKernel(GatelabError):
    """The entangling-phase quadratic form has no positive direction."""


class CutoffInsufficient(GatelabError):
    """Number-state truncation leaks too much population at the top level."""


class StepFailure(GatelabError):
    """Adaptive integrator drove the step size below the useful floor."""
