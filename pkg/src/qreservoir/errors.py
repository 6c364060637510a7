"""Exception types shared across the package."""


class QRCError(Exception):
    """Base class for all package errors."""


class CapacityError(QRCError, ValueError):
    """Requested register is larger than the simulator supports."""


class ValidationError(QRCError, ValueError):
    """Malformed input: non-unitary matrix, unnormalised amplitudes, bad value."""


class QubitIndexError(QRCError, IndexError):
    """Duplicate or out-of-range qubit / clbit index."""


class ContractError(QRCError, RuntimeError):
    """An object was used outside its contract (e.g. executing an invalid circuit)."""


class SchemeError(QRCError, ValueError):
    """Hooks are incompatible with the processing scheme."""


class DecodeError(QRCError, ValueError):
    """A model output could not be mapped back onto the series' value space."""


class ConfigError(QRCError, ValueError):
    """Experiment configuration is invalid; the message names the offending key."""


class ExperimentError(QRCError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
