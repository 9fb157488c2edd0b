"""Geometry model: meshes as per-vertex matrices, poses, tangent frames, bounds.

An object is a set of row matrices over its n vertices: positions V, unit
normals N, colors C, tangents T (row magnitude doubles as the surfel tangent
radius), bitangent lengths B, triangle indices F and line indices E.  The full
bitangent is never stored; it is recovered as b_len * (n x t).
"""

from __future__ import annotations

import numpy as np

from .errors import EmptySceneError, GraphCycleError, InvalidArgument

# ------------------------------------------------------------------ quaternions
# Layout is (w, x, y, z) throughout.


def quat_normalize(q):
    q = np.asarray(q, dtype=np.float64)
    n = float(np.linalg.norm(q))
    if not np.isfinite(n) or n < 1e-8:
        raise InvalidArgument("quaternion has zero or non-finite norm")
    return q / n


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v):
    """Rotate vectors v (3,) or (n,3) by unit quaternion q."""
    v = np.asarray(v, dtype=np.float64)
    single = v.ndim == 1
    vv = np.atleast_2d(v)
    u = np.broadcast_to(np.asarray(q[1:], dtype=np.float64), vv.shape)
    t = 2.0 * np.cross(u, vv)
    out = vv + q[0] * t + np.cross(u, t)
    return out[0] if single else out


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise InvalidArgument("rotation axis has zero length")
    half = 0.5 * float(angle)
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / n])


def quat_slerp(q0, q1, t):
    """Shortest-arc spherical interpolation; falls back to nlerp near 0 angle."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    d = float(np.dot(q0, q1))
    if d < 0.0:
        q1 = -q1
        d = -d
    if d > 1.0 - 1e-10:
        return quat_normalize(q0 + t * (q1 - q0))
    theta = np.arccos(np.clip(d, -1.0, 1.0))
    s = np.sin(theta)
    return (np.sin((1.0 - t) * theta) / s) * q0 + (np.sin(t * theta) / s) * q1


# ------------------------------------------------------------------------ pose


class Pose:
    """Similarity transform: uniform scale, then rotation, then translation."""

    __slots__ = ("rotation", "translation", "scale")

    def __init__(self, rotation=(1.0, 0.0, 0.0, 0.0), translation=(0.0, 0.0, 0.0), scale=1.0):
        q = np.asarray(rotation, dtype=np.float64)
        t = np.asarray(translation, dtype=np.float64)
        if q.shape != (4,) or t.shape != (3,):
            raise InvalidArgument("pose expects rotation (4,) wxyz and translation (3,)")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(t)) and np.isfinite(scale)):
            raise InvalidArgument("pose has non-finite components")
        n = float(np.linalg.norm(q))
        if abs(n - 1.0) > 1e-3:
            raise InvalidArgument(f"quaternion norm {n:.6f} too far from 1")
        if scale <= 0.0:
            raise InvalidArgument("pose scale must be > 0 and uniform")
        self.rotation = q / n
        self.translation = t
        self.scale = float(scale)

    @classmethod
    def identity(cls):
        return cls()

    def compose(self, child: "Pose") -> "Pose":
        """world_from_a = self, a_from_b = child -> world_from_b."""
        q = quat_normalize(quat_mul(self.rotation, child.rotation))
        t = self.translation + self.scale * quat_rotate(self.rotation, child.translation)
        return Pose(q, t, self.scale * child.scale)

    def inverse(self) -> "Pose":
        qi = quat_conj(self.rotation)
        s = 1.0 / self.scale
        return Pose(qi, -s * quat_rotate(qi, self.translation), s)

    def transform_points(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        return self.scale * quat_rotate(self.rotation, pts) + self.translation

    def rotate(self, dirs):
        return quat_rotate(self.rotation, dirs)

    def is_identity(self):
        return (
            self.scale == 1.0
            and np.array_equal(self.translation, np.zeros(3))
            and np.array_equal(self.rotation, np.array([1.0, 0.0, 0.0, 0.0]))
        )

    def to_dict(self):
        return {
            "rotation_wxyz": [float(v) for v in self.rotation],
            "translation": [float(v) for v in self.translation],
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d.get("rotation_wxyz", (1.0, 0.0, 0.0, 0.0)),
            d.get("translation", (0.0, 0.0, 0.0)),
            d.get("scale", 1.0),
        )

    def __repr__(self):
        return f"Pose(q={self.rotation.round(4)}, t={self.translation.round(4)}, s={self.scale:g})"


# -------------------------------------------------------------------- material


class VisualizationMode:
    SOLID = "solid"
    PER_VERTEX = "per_vertex"
    TEXTURED = "textured"


class Material:
    """PBR surface parameters plus optional albedo texture with per-vertex UVs."""

    __slots__ = ("albedo", "metalness", "roughness", "mode", "texture", "uv", "line_color")

    def __init__(
        self,
        albedo=(0.75, 0.75, 0.75),
        metalness=0.0,
        roughness=0.5,
        mode=VisualizationMode.SOLID,
        texture=None,
        uv=None,
        line_color=(0.05, 0.05, 0.05),
    ):
        self.albedo = np.clip(np.asarray(albedo, dtype=np.float64), 0.0, 1.0)
        if self.albedo.shape != (3,):
            raise InvalidArgument("albedo must be rgb")
        if not (0.0 <= metalness <= 1.0) or not (0.0 <= roughness <= 1.0):
            raise InvalidArgument("metalness and roughness must lie in [0, 1]")
        self.metalness = float(metalness)
        self.roughness = float(roughness)
        self.mode = mode
        self.texture = None if texture is None else np.asarray(texture, dtype=np.float64)
        self.uv = None if uv is None else np.asarray(uv, dtype=np.float64)
        self.line_color = np.asarray(line_color, dtype=np.float64)
        if mode == VisualizationMode.TEXTURED and (self.texture is None or self.uv is None):
            raise InvalidArgument("textured mode needs both a texture and UVs")


# ------------------------------------------------------------------------ mesh


def _as_array(a, shape_tail, dtype=np.float64):
    if a is None:
        return np.zeros((0,) + shape_tail, dtype=dtype)
    out = np.asarray(a, dtype=dtype)
    if out.ndim == len(shape_tail):
        out = out[None] if out.size else out.reshape((0,) + shape_tail)
    if out.shape[1:] != shape_tail:
        raise InvalidArgument(f"expected trailing shape {shape_tail}, got {out.shape}")
    return out


class Mesh:
    """Container for one object's vertex matrices. Arrays are frozen on build."""

    def __init__(
        self,
        V,
        N=None,
        C=None,
        T=None,
        B=None,
        F=None,
        E=None,
        material=None,
        local_pose=None,
        parent=None,
        name="object",
        visible=True,
    ):
        self.V = _as_array(V, (3,))
        self.N = _as_array(N, (3,))
        self.C = _as_array(C, (3,))
        self.T = _as_array(T, (3,))
        self.B = np.zeros(0) if B is None else np.asarray(B, dtype=np.float64).reshape(-1)
        self.F = _as_array(F, (3,), dtype=np.int64)
        self.E = _as_array(E, (2,), dtype=np.int64)
        self.material = material if material is not None else Material()
        self.local_pose = local_pose if local_pose is not None else Pose.identity()
        self.parent = parent
        self.name = name
        self.visible = visible
        if self.N.shape[0] == 0 and self.F.shape[0] > 0:
            if self.F.min() < 0 or self.F.max() >= self.V.shape[0]:
                raise InvalidArgument(f"F indices out of range [0, {self.V.shape[0]})")
            self.N = compute_vertex_normals(self.V, self.F)
        self._validate()
        for arr in (self.V, self.N, self.C, self.T, self.B, self.F, self.E):
            arr.setflags(write=False)

    # -- invariants ------------------------------------------------------
    def _validate(self):
        n = self.V.shape[0]
        for label, arr in (("V", self.V), ("N", self.N), ("C", self.C), ("T", self.T), ("B", self.B)):
            if arr.size and not np.all(np.isfinite(arr)):
                raise InvalidArgument(f"{label} contains non-finite values")
            if arr.shape[0] not in (0, n):
                raise InvalidArgument(f"{label} row count {arr.shape[0]} != vertex count {n}")
        for label, idx, limit in (("F", self.F, n), ("E", self.E, n)):
            if idx.size and (idx.min() < 0 or idx.max() >= limit):
                raise InvalidArgument(f"{label} indices out of range [0, {limit})")
        if self.N.size:
            norms = np.linalg.norm(self.N, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-4):
                raise InvalidArgument("N rows must be unit length within 1e-4")
        if self.T.size:
            if not self.N.size:
                raise InvalidArgument("T requires N")
            tn = np.linalg.norm(self.T, axis=1)
            if np.any(tn < 1e-12):
                raise InvalidArgument("T rows must be non-zero")
            cosang = np.abs(np.sum(self.N * (self.T / tn[:, None]), axis=1))
            if np.any(cosang > 1e-3):
                raise InvalidArgument("T rows must be orthogonal to N within 1e-3")
        if self.B.size and not self.T.size:
            raise InvalidArgument("B without T is meaningless")

    # -- capability queries ----------------------------------------------
    @property
    def n_vertices(self):
        return self.V.shape[0]

    @property
    def has_faces(self):
        return self.F.shape[0] > 0

    @property
    def has_edges(self):
        return self.E.shape[0] > 0

    @property
    def has_normals(self):
        return self.N.shape[0] > 0

    @property
    def has_tangents(self):
        return self.T.shape[0] > 0

    @property
    def has_colors(self):
        return self.C.shape[0] > 0

    def replace(self, **kw):
        fields = dict(
            V=self.V, N=self.N, C=self.C, T=self.T, B=self.B, F=self.F, E=self.E,
            material=self.material, local_pose=self.local_pose, parent=self.parent,
            name=self.name, visible=self.visible,
        )
        if "N" in kw and kw["N"] is None:
            # bypass the auto-normal recompute for explicitly dropped normals
            fields.update(kw)
            mesh = Mesh.__new__(Mesh)
            Mesh.__init__(mesh, **fields)
            return mesh
        fields.update(kw)
        return Mesh(**fields)


def compute_vertex_normals(V, F):
    """Area-weighted vertex normals; vertices outside F fall back to +z."""
    V = np.asarray(V, dtype=np.float64)
    F = np.asarray(F, dtype=np.int64)
    acc = np.zeros_like(V)
    fn = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
    for k in range(3):
        np.add.at(acc, F[:, k], fn)
    norms = np.linalg.norm(acc, axis=1)
    out = np.zeros_like(acc)
    ok = norms > 1e-12
    out[ok] = acc[ok] / norms[ok, None]
    out[~ok] = (0.0, 0.0, 1.0)
    return out


def recover_bitangent(n, t, b_len):
    """Bitangent rows, b_len * (n x t). Accepts (3,) or (k,3) inputs."""
    n = np.asarray(n, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    b = np.asarray(b_len, dtype=np.float64)
    if not (np.all(np.isfinite(n)) and np.all(np.isfinite(t)) and np.all(np.isfinite(b))):
        raise InvalidArgument("non-finite inputs to bitangent recovery")
    cr = np.cross(n, t)
    return cr * (b[..., None] if cr.ndim > 1 else b)


def apply_transform(mesh: Mesh, pose: Pose) -> Mesh:
    """Bake a pose into vertex data. Directions rotate; B picks up the scale."""
    if pose.is_identity():
        return mesh
    return mesh.replace(
        V=pose.transform_points(mesh.V),
        N=pose.rotate(mesh.N) if mesh.N.size else mesh.N,
        T=pose.rotate(mesh.T) if mesh.T.size else mesh.T,
        B=mesh.B * pose.scale if mesh.B.size else mesh.B,
    )


def bounding_sphere(points):
    """(center, radius): center is the AABB midpoint, radius the max distance."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise EmptySceneError("bounding sphere of zero vertices")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    center = 0.5 * (lo + hi)
    radius = float(np.sqrt(((pts - center) ** 2).sum(axis=1).max()))
    return center, radius


def world_pose(mesh: Mesh) -> Pose:
    """Compose the parent chain. Cycles raise with the names on the loop."""
    chain = []
    seen = set()
    node = mesh
    while node is not None:
        if id(node) in seen:
            raise GraphCycleError([m.name for m in chain] + [node.name])
        seen.add(id(node))
        chain.append(node)
        node = node.parent
    pose = Pose.identity()
    for node in reversed(chain):
        pose = pose.compose(node.local_pose)
    return pose
