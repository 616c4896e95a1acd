"""Exception types shared across the package."""


class MeshParseError(ValueError):
    """Malformed OBJ record. Carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingUVError(MeshParseError):
    """A face corner has no texture-coordinate reference."""


class DegenerateMeshError(ValueError):
    """Mesh cannot be normalized (all vertices coincide)."""


class EmptyRenderError(RuntimeError):
    """The object covers zero pixels in the requested view."""


class SessionBusyError(RuntimeError):
    """Another mutating operation is in flight on this session."""


class BackendCallError(RuntimeError):
    """Base class for failures while calling an inpainting backend."""


class BackendTimeout(BackendCallError):
    """The backend did not answer within the allotted time."""


class BackendUnreachable(BackendCallError):
    """The backend endpoint could not be reached."""


class WireProtocolError(BackendCallError):
    """The backend answered with a malformed or mis-shaped payload."""


class RemoteBackendError(BackendCallError):
    """The backend reported a failure; message passed through."""
