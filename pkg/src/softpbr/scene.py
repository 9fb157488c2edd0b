"""Scene model: camera, point lights, effect settings, auto parameter rules.

Auto rules fire once at scene finalize: a missing camera frames the bounding
sphere, a missing light list becomes a three-point studio setup whose
intensities solve the inverse-square law for a fixed target irradiance, and a
missing SSAO radius becomes 5% of the scene scale.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptySceneError, InvalidArgument, SceneFormatError
from .geom import Mesh, Pose, bounding_sphere, quat_rotate, quat_slerp, world_pose

DEFAULT_FOV_DEG = 50.0
FRAME_MARGIN = 1.1
TARGET_IRRADIANCE = 5.0
LIGHT_DISTANCE_FACTOR = 2.0
LIGHT_RATIOS = {"key": 1.0, "fill": 0.4, "rim": 0.8}
LIGHT_ANGLES_DEG = {"key": (45.0, 45.0), "fill": (-45.0, 0.0), "rim": (180.0, 60.0)}
SSAO_RADIUS_FRACTION = 0.05


class RenderMode:
    MESH_PBR = "mesh_pbr"
    POINT_CLOUD_EDL = "point_cloud_edl"
    SURFEL = "surfel"


class Background:
    ENV_MAP = "env_map"
    SOLID = "solid"


# ---------------------------------------------------------------------- camera


class Camera:
    """Pinhole camera. Pose maps camera space to world; view axis is -z, y up."""

    def __init__(self, pose, vertical_fov, near, far, width, height):
        if not (0.0 < vertical_fov < math.pi):
            raise InvalidArgument("vertical fov must lie in (0, pi)")
        if not (0.0 < near < far):
            raise InvalidArgument("need 0 < near < far")
        if width <= 0 or height <= 0:
            raise InvalidArgument("viewport must be positive")
        if abs(pose.scale - 1.0) > 1e-9:
            raise InvalidArgument("camera pose must not scale")
        self.pose = pose
        self.vertical_fov = float(vertical_fov)
        self.near = float(near)
        self.far = float(far)
        self.width = int(width)
        self.height = int(height)

    @classmethod
    def look_at(cls, eye, target, up=(0.0, 1.0, 0.0), vertical_fov=math.radians(DEFAULT_FOV_DEG),
                near=0.01, far=100.0, width=640, height=480):
        eye = np.asarray(eye, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        up = np.asarray(up, dtype=np.float64)
        z = eye - target
        zn = np.linalg.norm(z)
        if zn < 1e-12:
            raise InvalidArgument("eye and target coincide")
        z = z / zn
        x = np.cross(up, z)
        if np.linalg.norm(x) < 1e-8:
            x = np.cross(np.array([0.0, 0.0, 1.0]), z)
        x = x / np.linalg.norm(x)
        y = np.cross(z, x)
        # rotation matrix with columns x, y, z -> quaternion
        m = np.stack([x, y, z], axis=1)
        q = _quat_from_matrix(m)
        return cls(Pose(q, eye, 1.0), vertical_fov, near, far, width, height)

    # focal length in pixels; square pixels, so one value serves both axes
    @property
    def focal(self):
        return (self.height / 2.0) / math.tan(self.vertical_fov / 2.0)

    def camera_space(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        q = self.pose.rotation
        qc = np.array([q[0], -q[1], -q[2], -q[3]])
        return quat_rotate(qc, pts - self.pose.translation)

    def project(self, pts):
        """World points -> (pixel xy float, positive view depth)."""
        pc = np.atleast_2d(self.camera_space(pts))
        depth = -pc[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            px = self.width / 2.0 + self.focal * (pc[:, 0] / depth)
            py = self.height / 2.0 - self.focal * (pc[:, 1] / depth)
        return np.stack([px, py], axis=1), depth

    def pixel_rays(self, px, py):
        """World-space ray dirs scaled so position = origin + dir * view_depth."""
        px = np.asarray(px, dtype=np.float64)
        py = np.asarray(py, dtype=np.float64)
        f = self.focal
        d = np.stack(
            [(px - self.width / 2.0) / f, (self.height / 2.0 - py) / f, -np.ones_like(px)],
            axis=-1,
        )
        return quat_rotate(self.pose.rotation, d.reshape(-1, 3)).reshape(d.shape)

    @property
    def position(self):
        return self.pose.translation

    def to_dict(self):
        return {
            "pose": self.pose.to_dict(),
            "fov_deg": math.degrees(self.vertical_fov),
            "near": self.near,
            "far": self.far,
            "width": self.width,
            "height": self.height,
        }


def _quat_from_matrix(m):
    t = np.trace(m)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(max(1e-12, 1.0 + m[i, i] - m[j, j] - m[k, k])) * 2.0
        q = np.empty(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
    return q / np.linalg.norm(q)


# ---------------------------------------------------------------------- lights


@dataclass
class PointLight:
    position: np.ndarray
    color: np.ndarray = field(default_factory=lambda: np.ones(3))
    intensity: float = 1.0
    casts_shadow: bool = True
    role: str = "key"

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.color = np.asarray(self.color, dtype=np.float64)
        if self.position.shape != (3,) or self.color.shape != (3,):
            raise InvalidArgument("light position and color must be 3-vectors")
        if np.any(self.color < 0.0) or self.intensity < 0.0:
            raise InvalidArgument("light color and intensity must be non-negative")

    def irradiance_at(self, point):
        d2 = float(((self.position - np.asarray(point)) ** 2).sum())
        return self.intensity / max(d2, 1e-30)

    def to_dict(self):
        return {
            "position": [float(v) for v in self.position],
            "color": [float(v) for v in self.color],
            "intensity": self.intensity,
            "casts_shadow": self.casts_shadow,
            "role": self.role,
        }


def light_distance_for_irradiance(intensity, target_irradiance):
    """Inverse-square solve: distance at which a light delivers the target."""
    if intensity < 0 or target_irradiance <= 0:
        raise InvalidArgument("need intensity >= 0 and target > 0")
    return math.sqrt(intensity / target_irradiance)


# -------------------------------------------------------------------- settings


@dataclass
class EffectSettings:
    ssao_enabled: bool = True
    ssao_radius: float | None = None  # None -> auto at finalize
    ssao_samples: int = 16
    bloom_enabled: bool = False
    bloom_threshold: float = 1.0
    bloom_levels: int = 6
    edl_strength: float = 1.0
    tonemap: str = "aces"
    gamma: float = 2.2
    background: str = Background.ENV_MAP
    background_color: tuple = (0.08, 0.08, 0.09)
    shadow_map_size: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.tonemap not in ("aces", "reinhard", "none"):
            raise InvalidArgument(f"unknown tonemap '{self.tonemap}'")
        if self.gamma <= 0:
            raise InvalidArgument("gamma must be > 0")
        if not 1 <= self.bloom_levels <= 6:
            raise InvalidArgument("bloom pyramid depth must lie in [1, 6]")
        if self.ssao_samples < 1:
            raise InvalidArgument("ssao needs at least one sample")
        if self.edl_strength < 0:
            raise InvalidArgument("edl strength must be >= 0")
        if self.background not in (Background.ENV_MAP, Background.SOLID):
            raise InvalidArgument(f"unknown background '{self.background}'")


# ----------------------------------------------------------------- mode rules


def select_render_mode(mesh: Mesh) -> str:
    """Pure function of which matrices are non-empty; explicit override wins."""
    override = getattr(mesh, "render_mode_override", None)
    if override is not None:
        if override not in (RenderMode.MESH_PBR, RenderMode.POINT_CLOUD_EDL, RenderMode.SURFEL):
            raise InvalidArgument(f"unknown render mode '{override}'")
        if override == RenderMode.MESH_PBR and not mesh.has_faces:
            raise InvalidArgument(f"object '{mesh.name}': mesh mode needs faces")
        if override == RenderMode.SURFEL and not (
                mesh.has_normals and mesh.has_tangents and mesh.B.size):
            raise InvalidArgument(f"object '{mesh.name}': surfel mode needs N, T and B")
        return override
    if mesh.has_faces:
        return RenderMode.MESH_PBR
    if mesh.has_normals and mesh.has_tangents and mesh.B.size:
        return RenderMode.SURFEL
    return RenderMode.POINT_CLOUD_EDL


def has_line_overlay(mesh: Mesh) -> bool:
    return mesh.has_edges


# ------------------------------------------------------------------ auto rules


def scene_bounds(objects):
    """Bounding sphere over world-space vertices of all visible objects.

    An empty scene is legal (background-only render): center origin, radius 0.
    """
    pts = [world_pose(m).transform_points(m.V) for m in objects if m.visible and m.n_vertices]
    if not pts:
        return np.zeros(3), 0.0
    return bounding_sphere(np.concatenate(pts, axis=0))


AUTO_VIEW_DIR = np.array([0.35, 0.25, 1.0]) / np.linalg.norm([0.35, 0.25, 1.0])


def auto_frame_camera(center, radius, width, height, fov=math.radians(DEFAULT_FOV_DEG)):
    """Place the camera so the bounding sphere fits the tighter fov axis."""
    r = radius if radius > 0 else 1.0
    aspect = width / height
    fov_h = 2.0 * math.atan(math.tan(fov / 2.0) * aspect)
    d = FRAME_MARGIN * r / math.sin(min(fov, fov_h) / 2.0)
    eye = center + AUTO_VIEW_DIR * d
    near = max(d - 2.5 * r, r / 100.0)
    far = d + 2.5 * r
    return Camera.look_at(eye, center, vertical_fov=fov, near=near, far=far,
                          width=width, height=height)


def auto_setup_lights(center, radius, camera):
    """Three-point rig around the camera axis; key light alone casts shadows."""
    r = radius if radius > 0 else 1.0
    axis = np.asarray(center, dtype=np.float64) - camera.position
    axis = axis / np.linalg.norm(axis)
    right = quat_rotate(camera.pose.rotation, np.array([1.0, 0.0, 0.0]))
    up = quat_rotate(camera.pose.rotation, np.array([0.0, 1.0, 0.0]))
    d = LIGHT_DISTANCE_FACTOR * r
    lights = []
    for role in ("key", "fill", "rim"):
        az, el = (math.radians(a) for a in LIGHT_ANGLES_DEG[role])
        toward = math.cos(el) * (math.cos(az) * -axis + math.sin(az) * right) + math.sin(el) * up
        toward = toward / np.linalg.norm(toward)
        intensity = LIGHT_RATIOS[role] * TARGET_IRRADIANCE * d * d
        lights.append(
            PointLight(
                position=np.asarray(center) + toward * d,
                color=np.ones(3),
                intensity=intensity,
                casts_shadow=(role == "key"),
                role=role,
            )
        )
    return lights


def auto_ssao_radius(radius):
    return SSAO_RADIUS_FRACTION * radius


# ----------------------------------------------------------- pose interpolation


def interpolate_pose(p0: Pose, p1: Pose, t: float) -> Pose:
    """Slerp rotation, lerp translation and scale. t is clamped to [0, 1]."""
    if t < 0.0 or t > 1.0:
        warnings.warn(f"interpolation parameter {t} clamped to [0, 1]", stacklevel=2)
        t = min(max(t, 0.0), 1.0)
    if t == 0.0:
        return p0
    if t == 1.0:
        return p1
    return Pose(
        quat_slerp(p0.rotation, p1.rotation, t),
        (1.0 - t) * p0.translation + t * p1.translation,
        (1.0 - t) * p0.scale + t * p1.scale,
    )


# ----------------------------------------------------------------------- scene


class Scene:
    """Objects, lights, camera, environment and settings for one rendering.

    lights=None requests the auto rig at finalize; lights=[] means none.
    camera=None requests auto framing.  finalize() is idempotent.
    """

    def __init__(self, objects=None, lights=None, camera=None, environment=None,
                 settings=None, width=640, height=480):
        self.objects: list[Mesh] = list(objects or [])
        self.lights: list[PointLight] | None = lights
        self.camera: Camera | None = camera
        self.environment = environment  # IblSet, path str, or None
        self.settings = settings if settings is not None else EffectSettings()
        self.width = int(width)
        self.height = int(height)
        self.finalized = False
        self.auto_report: dict = {}
        self.center = None
        self.scale = None

    def add(self, mesh: Mesh):
        if any(o.name == mesh.name for o in self.objects):
            raise InvalidArgument(f"duplicate object name '{mesh.name}'")
        self.objects.append(mesh)
        self.finalized = False
        return mesh

    def object_by_name(self, name):
        for o in self.objects:
            if o.name == name:
                return o
        raise KeyError(name)

    def finalize(self, width=None, height=None):
        if width is not None:
            self.width = int(width)
        if height is not None:
            self.height = int(height)
        if self.finalized and width is None and height is None:
            return self
        self.center, self.scale = scene_bounds(self.objects)
        auto = {}
        if self.camera is None:
            self.camera = auto_frame_camera(self.center, self.scale, self.width, self.height)
            auto["camera"] = True
        else:
            self.camera = Camera(self.camera.pose, self.camera.vertical_fov,
                                 self.camera.near, self.camera.far, self.width, self.height)
        if self.lights is None:
            self.lights = auto_setup_lights(self.center, self.scale, self.camera)
            auto["lights"] = True
        if self.settings.ssao_radius is None:
            radius = auto_ssao_radius(self.scale)
            self.settings = replace(self.settings, ssao_radius=radius)
            auto["ssao_radius"] = radius
            if radius <= 0.0:
                self.settings = replace(self.settings, ssao_enabled=False)
                auto["ssao_disabled_degenerate"] = True
        self.auto_report = auto
        self.finalized = True
        return self

    # -- edit entry point (used by the service and anything scripted) -----
    def apply_patch(self, pointer: str, value):
        """Set one parameter addressed by a JSON pointer. Returns the value."""
        parts = [p for p in pointer.split("/") if p != ""]
        if not parts:
            raise KeyError(pointer)
        try:
            return self._apply_parts(parts, value)
        except (IndexError, ValueError, TypeError, InvalidArgument) as exc:
            if isinstance(exc, KeyError):
                raise
            raise SceneFormatError(pointer, str(exc)) from exc

    def _apply_parts(self, parts, value):
        head = parts[0]
        if head == "lights":
            if self.lights is None or len(parts) != 3:
                raise KeyError("/".join(parts))
            idx = int(parts[1])
            if not 0 <= idx < len(self.lights):
                raise KeyError("/".join(parts))
            light = self.lights[idx]
            fieldname = parts[2]
            if fieldname == "intensity":
                if float(value) < 0:
                    raise InvalidArgument("intensity must be >= 0")
                light.intensity = float(value)
            elif fieldname == "color":
                light.color = np.asarray(value, dtype=np.float64).reshape(3)
            elif fieldname == "position":
                light.position = np.asarray(value, dtype=np.float64).reshape(3)
            elif fieldname == "casts_shadow":
                light.casts_shadow = bool(value)
            else:
                raise KeyError("/".join(parts))
            return value
        if head == "effects":
            if len(parts) != 2 or parts[1] not in EffectSettings.__dataclass_fields__:
                raise KeyError("/".join(parts))
            self.settings = replace(self.settings, **{parts[1]: value})
            return value
        if head == "camera":
            if self.camera is None or len(parts) != 2:
                raise KeyError("/".join(parts))
            cam = self.camera
            fieldname = parts[1]
            if fieldname == "fov_deg":
                self.camera = Camera(cam.pose, math.radians(float(value)), cam.near,
                                     cam.far, cam.width, cam.height)
            elif fieldname == "pose":
                self.camera = Camera(Pose.from_dict(value), cam.vertical_fov, cam.near,
                                     cam.far, cam.width, cam.height)
            else:
                raise KeyError("/".join(parts))
            return value
        if head == "objects":
            if len(parts) < 3:
                raise KeyError("/".join(parts))
            try:
                obj = self.object_by_name(parts[1])
            except KeyError:
                try:
                    idx = int(parts[1])
                except ValueError:
                    raise KeyError("/".join(parts)) from None
                if not 0 <= idx < len(self.objects):
                    raise KeyError("/".join(parts)) from None
                obj = self.objects[idx]
            fieldname = parts[2]
            if fieldname == "pose":
                obj.local_pose = Pose.from_dict(value)
            elif fieldname == "visible":
                obj.visible = bool(value)
            elif fieldname == "material" and len(parts) == 4:
                mat = obj.material
                sub = parts[3]
                if sub == "albedo":
                    mat.albedo = np.clip(np.asarray(value, dtype=np.float64).reshape(3), 0, 1)
                elif sub == "metalness":
                    if not 0 <= float(value) <= 1:
                        raise InvalidArgument("metalness in [0,1]")
                    mat.metalness = float(value)
                elif sub == "roughness":
                    if not 0 <= float(value) <= 1:
                        raise InvalidArgument("roughness in [0,1]")
                    mat.roughness = float(value)
                else:
                    raise KeyError("/".join(parts))
            else:
                raise KeyError("/".join(parts))
            return value
        raise KeyError("/".join(parts))

    def state_dict(self):
        self.finalize()
        return {
            "camera": self.camera.to_dict(),
            "lights": [l.to_dict() for l in (self.lights or [])],
            "effects": {
                k: getattr(self.settings, k) for k in EffectSettings.__dataclass_fields__
            },
            "objects": [
                {"name": o.name, "mode": select_render_mode(o), "visible": o.visible,
                 "vertices": o.n_vertices, "lines": o.has_edges}
                for o in self.objects
            ],
            "bounds": {"center": [float(v) for v in self.center], "radius": self.scale},
            "auto": {k: (v if isinstance(v, bool) else float(v)) for k, v in self.auto_report.items()},
            "width": self.width,
            "height": self.height,
        }
