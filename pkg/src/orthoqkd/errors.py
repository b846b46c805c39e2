"""Exception types raised across the simulator."""


class QKDError(Exception):
    """Base class for simulator errors."""


class NormalizationError(QKDError, ValueError):
    pass


class UnitarityError(QKDError, ValueError):
    pass


class CausalityMaskError(QKDError, ValueError):
    """An operator couples path modes that are not inside Eve's domain together."""


class ConfigError(QKDError, ValueError):
    """Invalid configuration. ``line`` points into the source document when known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class InterlaceError(QKDError, ValueError):
    def __init__(self, message: str, pair=None):
        self.pair = pair
        super().__init__(message)


class ProtocolError(QKDError, RuntimeError):
    pass


class UnsupportedError(QKDError, NotImplementedError):
    pass


class InvariantError(QKDError, RuntimeError):
    """Internal consistency check failed."""
