"""Exception hierarchy.

Every error raised on bad input derives from :class:`UncertError`, which is
itself a ``ValueError`` so callers that only care about "bad input" can catch
the builtin.
"""


class UncertError(ValueError):
    """Base class for all input/contract errors in this package."""


class NotHermitian(UncertError):
    pass


class NotPSD(UncertError):
    pass


class NotState(UncertError):
    pass


class NotPure(UncertError):
    pass


class NotProjector(UncertError):
    pass


class SupportNotContained(NotProjector):
    """Projector does not contain the support of the reduced state."""


class DimMismatch(UncertError):
    pass


class BadDim(UncertError):
    pass


class NotDivisor(UncertError):
    pass


class BadRank(UncertError):
    pass


class NotDistribution(UncertError):
    pass


class NotMub(UncertError):
    pass


class ArityMismatch(UncertError):
    pass


class NotCoprime(UncertError):
    pass


class BadSpec(UncertError):
    pass


class NotOrthogonal(UncertError):
    pass


class RealityViolated(UncertError):
    pass


class NotMus(UncertError):
    pass


class UnsupportedRelation(UncertError):
    pass


class BadStep(UncertError):
    pass
