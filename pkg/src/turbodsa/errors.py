"""Exception hierarchy shared across the toolkit."""


class TurboDSAError(Exception):
    pass


class ConfigurationError(TurboDSAError, ValueError):
    pass


class ContractViolation(TurboDSAError, ValueError):
    """A tensor or argument does not have the shape/width an operation requires."""


class CorpusError(TurboDSAError):
    pass


class InvalidTokenError(TurboDSAError, ValueError):
    pass


class DegenerateSignalError(TurboDSAError, ValueError):
    pass


class UnnormalizedSignalWarning(UserWarning):
    pass


class EmbedderUnavailable(TurboDSAError, RuntimeError):
    pass


class DivergenceError(TurboDSAError, RuntimeError):
    """Training produced a non-finite loss.

    ``checkpoint`` holds the last state whose loss was finite (or None if the
    very first step diverged).
    """

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class CheckpointError(TurboDSAError):
    pass


class CheckpointCorrupt(CheckpointError):
    pass


class UnsupportedCheckpointVersion(CheckpointError):
    pass


class FingerprintMismatch(CheckpointError):
    pass
