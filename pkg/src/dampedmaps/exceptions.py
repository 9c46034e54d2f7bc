"""Errors raised by the laboratory.

Every error carries a distinct ``code``; the two roots carry the exit status
used by the command line interface.
"""


class DampedMapsError(Exception):
    code = "E_GENERIC"
    exit_status = 1


class ValidationError(DampedMapsError, ValueError):
    """Precondition violated before any computation took place."""

    code = "E_VALIDATION"
    exit_status = 2


class NumericalError(DampedMapsError, RuntimeError):
    """A numerical stage could not certify its result."""

    code = "E_NUMERICAL"
    exit_status = 3


# classical dynamics
class NotUnimodular(ValidationError):
    code = "E_NOT_UNIMODULAR"


class NotHyperbolic(ValidationError):
    code = "E_NOT_HYPERBOLIC"


class OddWindow(ValidationError):
    code = "E_ODD_WINDOW"


# deviation statistics
class BadScaling(ValidationError):
    code = "E_BAD_SCALING"


class LagTooSmall(ValidationError):
    code = "E_LAG_TOO_SMALL"


class InsufficientData(ValidationError):
    code = "E_INSUFFICIENT_DATA"


# transfer operator
class BoxTooSmall(ValidationError):
    code = "E_BOX_TOO_SMALL"


class WeightOverflow(ValidationError):
    code = "E_WEIGHT_OVERFLOW"


class EtaOutOfRange(ValidationError):
    code = "E_ETA_OUT_OF_RANGE"


class NoGap(NumericalError):
    code = "E_NO_GAP"


# quantization
class Aliasing(ValidationError):
    code = "E_ALIASING"


class NotQuantizable(ValidationError):
    code = "E_NOT_QUANTIZABLE"


class SingularKernel(ValidationError):
    code = "E_SINGULAR_KERNEL"


class EigFailure(NumericalError):
    code = "E_EIG_FAILURE"


# spectral statistics
class DegenerateFit(NumericalError):
    code = "E_DEGENERATE_FIT"


# orchestration
class ConfigError(ValidationError):
    code = "E_CONFIG"


class StageFailure(NumericalError):
    code = "E_STAGE_FAILURE"


# generic range checks
class BadParameter(ValidationError):
    code = "E_BAD_PARAMETER"


class NotDamping(ValidationError):
    code = "E_NOT_DAMPING"
