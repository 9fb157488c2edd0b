"""Error taxonomy shared across the renderer."""


class RenderError(Exception):
    """Base class for everything this package raises on purpose."""


class InvalidArgument(RenderError, ValueError):
    """Non-finite values, out-of-range parameters, malformed inputs."""


class EmptySceneError(RenderError):
    """An operation that needs geometry got a scene/mesh with none."""


class GraphCycleError(RenderError):
    """Parent chain of an object loops back on itself."""

    def __init__(self, names):
        self.names = list(names)
        super().__init__("parent cycle: " + " -> ".join(self.names))


class WrongPassError(RenderError):
    """A rasterization pass was fed an object the pass cannot draw."""


class PipelineAssemblyError(RenderError):
    """Render pass wiring is inconsistent (sizes, missing stages)."""


class SceneFormatError(RenderError):
    """Scene JSON failed validation. Carries a JSON-pointer-ish path."""

    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


class MeshLoadError(RenderError):
    """OBJ/PLY parse failure. Carries file context."""


class HdrFormatError(RenderError):
    """Radiance HDR stream is malformed."""
