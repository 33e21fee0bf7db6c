"""Exception hierarchy shared by all rfspec modules."""


class RFSpecError(Exception):
    """Base class for every error raised by rfspec."""


class DomainError(RFSpecError, ValueError):
    """A numeric argument is outside the domain of the formula."""


class ShapeError(RFSpecError, ValueError):
    """Array dimensions do not match what the operation requires."""


class SizeError(RFSpecError, ValueError):
    """Not enough items to satisfy a request (e.g. L larger than the pool)."""


class ModeError(RFSpecError, ValueError):
    """Voxel samples were passed to the aggregator of the other mode."""


class DegenerateGeometryError(RFSpecError, ValueError):
    """Transmitter and receiver coincide, or a similar degenerate layout."""


class PlacementError(RFSpecError):
    """Random transmitter placement could not satisfy the clearance rules."""


# dataset file format

class DatasetFormatError(RFSpecError):
    """Base class for malformed RFSS payloads."""


class BadMagicError(DatasetFormatError):
    pass


class VersionMismatchError(DatasetFormatError):
    pass


class TruncatedPayloadError(DatasetFormatError):
    def __init__(self, message, record_index=None):
        super().__init__(message)
        self.record_index = record_index


class NonFiniteValueError(DatasetFormatError):
    pass


# scene files

class SceneError(RFSpecError):
    """Base class for scene description problems; carries a 1-based line."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SceneSyntaxError(SceneError):
    pass


class MissingFieldError(SceneError):
    pass


class SceneInvariantError(SceneError):
    pass
