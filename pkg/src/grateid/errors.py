"""Exception hierarchy.

Errors derived from :class:`ValidationError` signal bad inputs or configuration
(CLI exit code 1); :class:`NumericalError` covers failures of the numerics
themselves (exit code 2).
"""


class GrateIdError(Exception):
    pass


class ValidationError(GrateIdError, ValueError):
    pass


class NumericalError(GrateIdError, RuntimeError):
    pass


# dataset
class ZeroRange(ValidationError):
    pass


class InvalidCounts(ValidationError):
    pass


class MissingSamples(ValidationError):
    pass


class NoChangesDetected(UserWarning):
    pass


# plant
class NoStrokeDetected(ValidationError):
    pass


class NonPositiveEnthalpyDrop(ValidationError):
    pass


class NonPhysicalComposition(ValidationError):
    pass


class UnknownVariable(ValidationError, KeyError):
    pass


# ltimodel
class MissingInput(ValidationError, KeyError):
    pass


class NonFiniteInput(ValidationError):
    pass


class NoCovariance(ValidationError):
    pass


class CyclicDependency(ValidationError):
    pass


class MissingLinkSignal(ValidationError, KeyError):
    pass


# estimator
class LengthMismatch(ValidationError):
    pass


class ConstantTarget(ValidationError):
    pass


class NoFreeParameters(ValidationError):
    pass


class EmptyStageOne(ValidationError):
    pass


class NonConvergence(UserWarning):
    pass


# hypertune
class NoFeasiblePoint(NumericalError):
    pass
