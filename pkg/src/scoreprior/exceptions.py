"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`ScorePriorError`, which is itself a ``ValueError`` so callers that
only care about bad input can catch the builtin.
"""


class ScorePriorError(ValueError):
    """Base class for all package errors."""


class InvalidSpec(ScorePriorError):
    """A PriorSpec (or derived configuration) violates its invariants."""


class RadicandNegative(ScorePriorError):
    """``c*exp(u) - 2*(1+u)`` is negative beyond tolerance: no real u'."""


class DomainExit(ScorePriorError):
    """A parameter value lies outside the prior's domain or support."""


class DegenerateMass(ScorePriorError):
    """A table has no finite mass to normalise."""


class NearBoundary(ScorePriorError):
    """A finite-difference stencil does not fit at the requested point."""


class InitOutOfDomain(ScorePriorError):
    """An MCMC initial value has zero prior mass or zero likelihood."""


class SimplexViolation(ScorePriorError):
    """Mixture weights are not strictly inside the probability simplex."""


class EmptyChain(ScorePriorError):
    """A chain has no retained (post burn-in) draws."""


class NonPositiveParameter(ScorePriorError):
    """A rate, scale or variance parameter is not strictly positive."""


class ParameterOutOfRange(ScorePriorError):
    """A bounded parameter (probability, count) is outside its range."""


class DimensionMismatch(ScorePriorError):
    """Array shapes do not agree."""


class AllZeroIntegrand(ScorePriorError):
    """A marginal-likelihood integrand vanishes on the whole grid."""


class InvalidData(ScorePriorError):
    """Observations or a data file do not fit the model's sample space or schema."""


class ConfigError(ScorePriorError):
    """An experiment configuration is malformed."""


# aliases named after the model that raises them
NonPositiveTheta = NonPositiveParameter
NonPositiveSigma = NonPositiveParameter
NonPositiveVariance = NonPositiveParameter
PhiOutOfRange = ParameterOutOfRange
