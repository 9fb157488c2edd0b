"""Deterministic CPU renderer: physically based deferred shading for meshes,
point clouds and surfel splats, with baked image-based lighting, screen-space
effects, a headless CLI and an interactive render service.
"""

from .errors import (EmptySceneError, GraphCycleError, HdrFormatError,
                     InvalidArgument, MeshLoadError, PipelineAssemblyError,
                     RenderError, SceneFormatError, WrongPassError)
from .geom import Material, Mesh, Pose, VisualizationMode
from .scene import (Background, Camera, EffectSettings, PointLight, RenderMode,
                    Scene, interpolate_pose, select_render_mode)
from .shapes import (box, grid_point_cloud, icosphere, plane, surfelize,
                     uv_sphere, wire_box)
from .ibl import Cubemap, IblSet, bake_ibl, cached_brdf_lut, default_environment
from .assets import (load_ibl, load_mesh, parse_scene, read_hdr, read_png,
                     save_ibl, write_hdr, write_png)
from .pipeline import RenderCaches, render_frame, render_trajectory
from .post import hdr_to_ldr

__version__ = "0.1.0"

__all__ = [
    "Background", "Camera", "Cubemap", "EffectSettings", "EmptySceneError",
    "GraphCycleError", "HdrFormatError", "IblSet", "InvalidArgument",
    "Material", "Mesh", "MeshLoadError", "PipelineAssemblyError", "PointLight",
    "Pose", "RenderCaches", "RenderError", "RenderMode", "Scene",
    "SceneFormatError", "VisualizationMode", "WrongPassError", "bake_ibl",
    "box", "cached_brdf_lut", "default_environment", "grid_point_cloud",
    "hdr_to_ldr", "icosphere", "interpolate_pose", "load_ibl", "load_mesh",
    "parse_scene", "plane", "read_hdr", "read_png", "render_frame",
    "render_trajectory", "save_ibl", "select_render_mode", "surfelize",
    "uv_sphere", "wire_box", "write_hdr", "write_png",
]
