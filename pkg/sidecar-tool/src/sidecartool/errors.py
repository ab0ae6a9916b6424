"""Error types for the sidecar exporter."""


class SidecarToolError(Exception):
    """Base class for everything this tool raises on purpose."""


class ModelLoadError(SidecarToolError):
    """A model provider could not be constructed or is unusable."""


class SchemaViolation(SidecarToolError):
    """An input file or record does not match its documented shape."""
