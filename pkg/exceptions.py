"""
Error hierarchy shared by the tensor, nn, lgl and service layers.
"""
from typing import Optional


class EdgeViTError(Exception):
    """Base exception for engine errors"""
    pass


class DimensionError(EdgeViTError):
    """Shapes that do not agree"""
    pass


class ConfigError(EdgeViTError):
    """Invalid variant, block or run configuration"""
    pass


class UnsupportedConfigurationError(ConfigError):
    pass


class FormatError(EdgeViTError):
    """Malformed EVTS/EVWT/CSV payload"""
    pass


class DuplicateParameterError(FormatError):
    pass


class TraceFormatError(FormatError):
    pass


class MissingParameterError(EdgeViTError):
    def __init__(self, name: str):
        super().__init__(f"missing parameter '{name}'")
        self.name = name


class ArgumentError(EdgeViTError):
    pass


class DomainError(EdgeViTError):
    """Argument outside the mathematical domain of a metric"""
    pass


class InternalConsistencyError(EdgeViTError):
    pass


class DetectionError(EdgeViTError):
    def __init__(self, found: int, expected: int, detail: Optional[str] = None):
        message = f"detected {found} inference regions, expected {expected}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.found = found
        self.expected = expected


def with_context(exc: EdgeViTError, context: str) -> EdgeViTError:
    """Return a copy of `exc` whose message is prefixed with `context`."""
    if isinstance(exc, DetectionError):
        clone = DetectionError(exc.found, exc.expected)
        clone.args = (f"{context}: {exc}",)
        return clone
    if isinstance(exc, MissingParameterError):
        clone = MissingParameterError(exc.name)
        clone.args = (f"{context}: {exc}",)
        return clone
    return type(exc)(f"{context}: {exc}")
