"""Exception hierarchy shared by every module."""

from __future__ import annotations


class VLNError(Exception):
    """Base class for all errors raised by vlnloop."""


class EnvironmentLoadError(VLNError):
    """An environment file could not be turned into a valid Environment."""


class MalformedFile(EnvironmentLoadError):
    pass


class SchemaViolation(EnvironmentLoadError):
    pass


class InvariantViolation(EnvironmentLoadError):
    def __init__(self, entity: str, message: str = ""):
        self.entity = entity
        super().__init__(f"{entity}: {message}" if message else entity)


class UnknownViewpoint(VLNError):
    def __init__(self, viewpoint: str):
        self.viewpoint = viewpoint
        super().__init__(f"unknown viewpoint {viewpoint!r}")


class CoincidentPoints(VLNError):
    pass


class PerceptionError(VLNError):
    pass


class DimensionMismatch(PerceptionError):
    pass


class NoValidPixels(PerceptionError):
    pass


class InvalidCenterDepth(PerceptionError):
    pass


class GridIncomplete(PerceptionError):
    pass


class BackendFailure(VLNError):
    def __init__(self, message: str, status: int | None = None, attempts: int = 1):
        self.status = status
        self.attempts = attempts
        super().__init__(message)


class FixtureMiss(VLNError):
    """A scripted backend was asked for a key its fixture does not contain."""

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"no fixture entry for key {key!r}")


class ActionParseError(VLNError):
    """Raised by parse_action; ``reason`` is NoActionLine, OutOfRange or NotANumber."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class EmptyInput(VLNError, ValueError):
    pass
