"""Exception hierarchy shared by every wpmixer module."""


class WPMixerError(Exception):
    """Base class for all library errors."""


class DimensionError(WPMixerError, ValueError):
    """Operand shapes are incompatible."""


class ContractError(WPMixerError, ValueError):
    """A documented precondition of an operation was violated."""


class ConfigError(WPMixerError, ValueError):
    """A hyperparameter or configuration value is invalid."""


class DecompositionDepthError(ConfigError):
    """The requested wavelet level is too deep for the series length."""


class FilterBankError(WPMixerError):
    """A wavelet filter table failed its consistency checks."""


class UninitializedStatsError(WPMixerError, RuntimeError):
    """Batch-norm running statistics were read before any training pass."""


class NumericalError(WPMixerError, ArithmeticError):
    """NaN/inf encountered during training."""


class DataError(WPMixerError, ValueError):
    """Input data is malformed or too short."""


class CheckpointError(WPMixerError, ValueError):
    """A checkpoint file is unreadable, corrupt or incompatible with the config."""
