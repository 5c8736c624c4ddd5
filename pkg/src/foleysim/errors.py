"""Exception types shared across the package.

Every error raised on a documented contract path derives from FoleysimError,
so callers can catch one base type at module boundaries. Per-method failures
inside the acquisition pipeline are converted to job states, never raised
across the session boundary.
"""


class FoleysimError(Exception):
    """Base class for all package errors."""


class ParseError(FoleysimError):
    """A file or wire payload could not be parsed; message names the spot."""


class ValidationError(FoleysimError):
    """A value violates a model invariant; message names the field."""


class NotFound(FoleysimError):
    """A referenced entity does not exist."""


class UnknownId(NotFound):
    """A user action references an id missing from the scene."""


class OutOfBounds(FoleysimError):
    """A mask pixel lies outside the label image."""


class UnresolvedReference(FoleysimError):
    """An event references entities that cannot be resolved for rendering."""


class EmptyReply(FoleysimError):
    """The controller backend returned a zero-length reply."""


class UnknownFilename(FoleysimError):
    """A recommended filename does not resolve against the local library."""


class ServiceUnavailable(FoleysimError):
    """A remote service failed (timeout or 5xx) after its single retry."""


class EmptyResults(FoleysimError):
    """A retrieval query matched nothing."""


class InvalidAudio(FoleysimError):
    """Audio bytes were not decodable as supported PCM WAV."""


class NoDefault(FoleysimError):
    """No default transfer seed is configured for the event type."""


class NotACandidate(FoleysimError):
    """The selected asset is not among the event's candidates."""


class UnknownAsset(NotFound):
    """No asset with that id exists in the session."""


class UnknownEvent(NotFound):
    """No event record with that id exists in the session."""


class SchemaMismatch(FoleysimError):
    """A persisted session fails schema or content-address checks."""
