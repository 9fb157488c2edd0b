"""Image-based lighting assets.

An environment is an HDR cubemap.  From it we bake, offline and
deterministically: a cosine-convolved irradiance cubemap (stores E/pi, so
shading multiplies by albedo directly), a chain of GGX-prefiltered specular
cubemaps indexed by roughness, and the split-sum BRDF lookup table (A, B)
so that specular response = F0*A + B.  Multiple-scatter energy compensation
follows the single-lut decomposition: the energy a single-scatter lobe loses
is recycled through an average-Fresnel geometric series.

Cubemap face order is +x, -x, +y, -y, +z, -z.  A texel at row j, column i of
face f has in-face coordinates a = 2*(i+0.5)/res - 1, b = 2*(j+0.5)/res - 1
and direction (before normalization):

    +x: ( 1, -b, -a)    -x: (-1, -b,  a)
    +y: ( a,  1,  b)    -y: ( a, -1, -b)
    +z: ( a, -b,  1)    -z: (-a, -b, -1)

Equirectangular images use u = 0.5 + atan2(x, z)/2pi, v = acos(y)/pi, so the
+z axis lands at the image center and +y at the top row.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .common import hash01
from .errors import InvalidArgument

DEFAULT_FACE_SIZE = 128
DEFAULT_NUM_MIPS = 5
DEFAULT_IRRADIANCE_SIZE = 32
DEFAULT_LUT_SIZE = 64
IRRADIANCE_SAMPLES = 4096
SPECULAR_SAMPLES = 1024
LUT_SAMPLES = 4096

_TEXEL_CHUNK = 256  # texels filtered per vectorized batch, bounds peak memory


# ------------------------------------------------------------------ cubemaps


class Cubemap:
    """Six square HDR faces, shape (6, res, res, 3), linear rgb >= 0."""

    __slots__ = ("faces",)

    def __init__(self, faces):
        faces = np.asarray(faces, dtype=np.float64)
        if faces.ndim != 4 or faces.shape[0] != 6 or faces.shape[3] != 3 \
                or faces.shape[1] != faces.shape[2]:
            raise InvalidArgument(f"cubemap faces must be (6, s, s, 3), got {faces.shape}")
        if not np.isfinite(faces).all():
            raise InvalidArgument("cubemap contains non-finite values")
        self.faces = np.maximum(faces, 0.0)

    @property
    def res(self):
        return self.faces.shape[1]

    @classmethod
    def constant(cls, color, res=16):
        color = np.asarray(color, dtype=np.float64).reshape(3)
        return cls(np.broadcast_to(color, (6, res, res, 3)).copy())

    def sample(self, dirs):
        """Bilinear lookup, clamped within the selected face."""
        d = np.asarray(dirs, dtype=np.float64)
        shape = d.shape[:-1]
        d = d.reshape(-1, 3)
        x, y, z = d[:, 0], d[:, 1], d[:, 2]
        ax, ay, az = np.abs(x), np.abs(y), np.abs(z)
        on_x = (ax >= ay) & (ax >= az)
        on_y = (~on_x) & (ay >= az)
        face = np.where(on_x, np.where(x >= 0, 0, 1),
                        np.where(on_y, np.where(y >= 0, 2, 3),
                                 np.where(z >= 0, 4, 5)))
        s = np.maximum(np.where(on_x, ax, np.where(on_y, ay, az)), 1e-300)
        a = np.empty(len(d))
        b = np.empty(len(d))
        for f, (fa, fb) in enumerate((
            (lambda: -z, lambda: -y),   # +x
            (lambda: z, lambda: -y),    # -x
            (lambda: x, lambda: z),     # +y
            (lambda: x, lambda: -z),    # -y
            (lambda: x, lambda: -y),    # +z
            (lambda: -x, lambda: -y),   # -z
        )):
            m = face == f
            if m.any():
                a[m] = fa()[m] / s[m]
                b[m] = fb()[m] / s[m]
        res = self.res
        u = np.clip((a + 1.0) * 0.5 * res - 0.5, 0.0, res - 1.0)
        v = np.clip((b + 1.0) * 0.5 * res - 0.5, 0.0, res - 1.0)
        u0 = np.floor(u).astype(np.int64)
        v0 = np.floor(v).astype(np.int64)
        u1 = np.minimum(u0 + 1, res - 1)
        v1 = np.minimum(v0 + 1, res - 1)
        fu = (u - u0)[:, None]
        fv = (v - v0)[:, None]
        fc = self.faces
        out = (
            fc[face, v0, u0] * (1 - fu) * (1 - fv)
            + fc[face, v0, u1] * fu * (1 - fv)
            + fc[face, v1, u0] * (1 - fu) * fv
            + fc[face, v1, u1] * fu * fv
        )
        return out.reshape(shape + (3,))


def face_directions(res):
    """Unit direction of every texel center: shape (6, res, res, 3)."""
    g = (np.arange(res) + 0.5) / res * 2.0 - 1.0
    a, b = np.meshgrid(g, g)  # a varies along columns, b along rows
    one = np.ones_like(a)
    dirs = np.stack(
        [
            np.stack([one, -b, -a], axis=-1),
            np.stack([-one, -b, a], axis=-1),
            np.stack([a, one, b], axis=-1),
            np.stack([a, -one, -b], axis=-1),
            np.stack([a, -b, one], axis=-1),
            np.stack([-a, -b, -one], axis=-1),
        ],
        axis=0,
    )
    return dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)


def texel_solid_angles(res):
    """Exact solid angle of each texel of one face, shape (res, res)."""

    def area(x, y):
        return np.arctan2(x * y, np.sqrt(x * x + y * y + 1.0))

    e = np.arange(res + 1) / res * 2.0 - 1.0
    x, y = np.meshgrid(e, e)
    a = area(x, y)
    return a[1:, 1:] - a[:-1, 1:] - a[1:, :-1] + a[:-1, :-1]


def dir_to_equirect_uv(dirs):
    d = np.asarray(dirs, dtype=np.float64)
    u = 0.5 + np.arctan2(d[..., 0], d[..., 2]) / (2.0 * np.pi)
    v = np.arccos(np.clip(d[..., 1], -1.0, 1.0)) / np.pi
    return u, v


def equirect_uv_to_dir(u, v):
    phi = (np.asarray(u) - 0.5) * 2.0 * np.pi
    theta = np.asarray(v) * np.pi
    st = np.sin(theta)
    return np.stack([st * np.sin(phi), np.cos(theta), st * np.cos(phi)], axis=-1)


def sample_equirect(img, dirs):
    """Bilinear lookup with horizontal wrap and vertical clamp."""
    h, w = img.shape[:2]
    u, v = dir_to_equirect_uv(dirs)
    x = u * w - 0.5
    y = np.clip(v * h - 0.5, 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    x0m = x0 % w
    x1m = (x0 + 1) % w
    y1 = np.minimum(y0 + 1, h - 1)
    return (
        img[y0, x0m] * (1 - fx) * (1 - fy)
        + img[y0, x1m] * fx * (1 - fy)
        + img[y1, x0m] * (1 - fx) * fy
        + img[y1, x1m] * fx * fy
    )


def equirect_to_cubemap(equirect, face_size):
    img = np.asarray(equirect, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InvalidArgument(f"equirect must be (h, w, 3), got {img.shape}")
    h, w = img.shape[:2]
    if not 1.5 <= w / h <= 2.5:
        raise InvalidArgument(f"equirect aspect {w}x{h} is not close to 2:1")
    bad = ~np.isfinite(img)
    if bad.any():
        warnings.warn(f"environment map: sanitized {int(bad.sum())} non-finite samples to 0")
        img = np.where(bad, 0.0, img)
    img = np.maximum(img, 0.0)
    dirs = face_directions(face_size)
    return Cubemap(sample_equirect(img, dirs))


# ------------------------------------------------------- quasi-random points


def hammersley(n):
    """First n points of the Hammersley set: (i/n, radical_inverse_2(i))."""
    i = np.arange(n, dtype=np.uint32)
    bits = i.copy()
    bits = ((bits << np.uint32(16)) | (bits >> np.uint32(16))) & np.uint32(0xFFFFFFFF)
    bits = ((bits & np.uint32(0x55555555)) << np.uint32(1)) | ((bits & np.uint32(0xAAAAAAAA)) >> np.uint32(1))
    bits = ((bits & np.uint32(0x33333333)) << np.uint32(2)) | ((bits & np.uint32(0xCCCCCCCC)) >> np.uint32(2))
    bits = ((bits & np.uint32(0x0F0F0F0F)) << np.uint32(4)) | ((bits & np.uint32(0xF0F0F0F0)) >> np.uint32(4))
    bits = ((bits & np.uint32(0x00FF00FF)) << np.uint32(8)) | ((bits & np.uint32(0xFF00FF00)) >> np.uint32(8))
    return np.stack([i.astype(np.float64) / n, bits.astype(np.float64) * 2.3283064365386963e-10], axis=1)


def _rotated_points(n, seed):
    """Hammersley set with a seed-dependent Cranley-Patterson rotation."""
    pts = hammersley(n)
    off = np.array([hash01(0x51, seed), hash01(0x52, seed)])
    return (pts + off) % 1.0


def tangent_frames(n):
    """Any orthonormal (t, b) pair per unit normal row of n."""
    n = np.asarray(n, dtype=np.float64)
    helper = np.where(np.abs(n[..., 1:2]) < 0.999,
                      np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 0.0]))
    t = np.cross(helper, n)
    t /= np.maximum(np.linalg.norm(t, axis=-1, keepdims=True), 1e-12)
    b = np.cross(n, t)
    return t, b


def cosine_hemisphere(u):
    """Cosine-weighted dirs about +z from 2d points in [0,1)^2."""
    phi = 2.0 * np.pi * u[:, 0]
    r = np.sqrt(u[:, 1])
    z = np.sqrt(np.maximum(1.0 - u[:, 1], 0.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def ggx_half_vectors(u, alpha):
    """GGX importance-sampled half vectors about +z. alpha may broadcast."""
    phi = 2.0 * np.pi * u[..., 0]
    a2 = np.asarray(alpha, dtype=np.float64) ** 2
    ct2 = (1.0 - u[..., 1]) / (1.0 + (a2 - 1.0) * u[..., 1])
    ct = np.sqrt(np.clip(ct2, 0.0, 1.0))
    st = np.sqrt(np.clip(1.0 - ct2, 0.0, 1.0))
    return np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1)


# ----------------------------------------------------------------- prefilter


def prefilter_irradiance(env: Cubemap, res=DEFAULT_IRRADIANCE_SIZE,
                         samples=IRRADIANCE_SAMPLES, seed=0) -> Cubemap:
    """Cosine-convolved radiance per texel normal; stores E/pi."""
    local = cosine_hemisphere(_rotated_points(samples, seed))
    dirs = face_directions(res).reshape(6, -1, 3)
    out = np.empty((6, res * res, 3))
    for f in range(6):
        for lo in range(0, res * res, _TEXEL_CHUNK):
            n = dirs[f, lo:lo + _TEXEL_CHUNK]
            t, b = tangent_frames(n)
            world = (
                local[None, :, 0:1] * t[:, None, :]
                + local[None, :, 1:2] * b[:, None, :]
                + local[None, :, 2:3] * n[:, None, :]
            )
            out[f, lo:lo + _TEXEL_CHUNK] = env.sample(world).mean(axis=1)
    return Cubemap(out.reshape(6, res, res, 3))


def prefilter_specular(env: Cubemap, num_mips=DEFAULT_NUM_MIPS,
                       samples=SPECULAR_SAMPLES, seed=0) -> list:
    """GGX-prefiltered mip chain; mip m targets roughness m/(num_mips-1).

    Mip 0 is the identity (delta lobe); the rest integrate radiance over the
    importance-sampled lobe with N = V = R, weighted by n . l and normalized
    by the weight sum so a constant environment stays exactly constant.
    """
    if num_mips < 2:
        raise InvalidArgument(f"specular prefilter needs >= 2 mips, got {num_mips}")
    mips = [Cubemap(env.faces.copy())]
    pts = _rotated_points(samples, seed)
    for m in range(1, num_mips):
        rough = m / (num_mips - 1)
        alpha = rough * rough
        h_local = ggx_half_vectors(pts, alpha)
        res_m = max(env.res >> m, 1)
        dirs = face_directions(res_m).reshape(6, -1, 3)
        out = np.empty((6, res_m * res_m, 3))
        for f in range(6):
            for lo in range(0, res_m * res_m, _TEXEL_CHUNK):
                n = dirs[f, lo:lo + _TEXEL_CHUNK]
                t, b = tangent_frames(n)
                h = (
                    h_local[None, :, 0:1] * t[:, None, :]
                    + h_local[None, :, 1:2] * b[:, None, :]
                    + h_local[None, :, 2:3] * n[:, None, :]
                )
                # v = n, so l = 2(n.h)h - n
                ndoth = np.einsum("ks,kjs->kj", n, h)[:, :, None]
                light = 2.0 * ndoth * h - n[:, None, :]
                w = np.maximum(np.einsum("ks,kjs->kj", n, light), 0.0)
                rad = env.sample(light)
                wsum = w.sum(axis=1)
                acc = (rad * w[:, :, None]).sum(axis=1)
                fallback = env.sample(n)
                ok = wsum > 1e-12
                vals = np.where(ok[:, None], acc / np.maximum(wsum, 1e-12)[:, None], fallback)
                out[f, lo:lo + _TEXEL_CHUNK] = vals
        mips.append(Cubemap(out.reshape(6, res_m, res_m, 3)))
    return mips


def _g1_ibl(x, k):
    return x / (x * (1.0 - k) + k)


def compute_brdf_lut(resolution=DEFAULT_LUT_SIZE, samples=LUT_SAMPLES):
    """Split-sum environment BRDF table: lut[i, j] = (A, B).

    Axis 0 indexes NdotV = (i+0.5)/res, axis 1 roughness = (j+0.5)/res.
    Specular response for Fresnel F0 is then F0*A + B.
    """
    if resolution < 16:
        raise InvalidArgument(f"lut resolution must be >= 16, got {resolution}")
    grid = (np.arange(resolution) + 0.5) / resolution
    pts = hammersley(samples)
    lut = np.empty((resolution, resolution, 2))
    for j, rough in enumerate(grid):
        alpha = rough * rough
        k = alpha / 2.0
        h = ggx_half_vectors(pts, alpha)  # (s, 3), z-up frame with n = +z
        for i_lo in range(0, resolution, 16):
            nv = grid[i_lo:i_lo + 16][:, None]  # (c, 1)
            v = np.stack([np.sqrt(1.0 - nv**2), np.zeros_like(nv), nv], axis=-1)  # (c,1,3)
            vdoth = np.einsum("cks,js->cj", v, h)
            light = 2.0 * vdoth[:, :, None] * h[None, :, :] - v
            ndotl = light[:, :, 2]
            ndoth = h[:, 2][None, :]
            ok = ndotl > 0.0
            g = _g1_ibl(nv, k) * _g1_ibl(np.maximum(ndotl, 1e-12), k)
            g_vis = g * np.maximum(vdoth, 0.0) / np.maximum(ndoth * nv, 1e-12)
            g_vis = np.where(ok, g_vis, 0.0)
            fc = (1.0 - np.clip(vdoth, 0.0, 1.0)) ** 5
            a = ((1.0 - fc) * g_vis).mean(axis=1)
            b = (fc * g_vis).mean(axis=1)
            lut[i_lo:i_lo + 16, j, 0] = a
            lut[i_lo:i_lo + 16, j, 1] = b
    return np.clip(lut, 0.0, 1.0)


def lut_lookup(lut, ndotv, roughness):
    """Bilinear, edge-clamped lookup. Returns (A, B) arrays."""
    res = lut.shape[0]
    x = np.clip(np.asarray(ndotv, dtype=np.float64) * res - 0.5, 0.0, res - 1.0)
    y = np.clip(np.asarray(roughness, dtype=np.float64) * res - 0.5, 0.0, res - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, res - 1)
    y1 = np.minimum(y0 + 1, res - 1)
    fx = x - x0
    fy = y - y0
    v = (
        lut[x0, y0] * ((1 - fx) * (1 - fy))[..., None]
        + lut[x1, y0] * (fx * (1 - fy))[..., None]
        + lut[x0, y1] * ((1 - fx) * fy)[..., None]
        + lut[x1, y1] * (fx * fy)[..., None]
    )
    return v[..., 0], v[..., 1]


def multiscatter_terms(f0, ndotv, roughness, lut, enabled=True):
    """Energy terms for split-sum shading.

    Returns (single_scatter, multi_scatter, diffuse_weight), each (..., 3):
      ambient = single_scatter * prefiltered(R)
              + multi_scatter * irradiance(n)
              + diffuse_weight * c_diff * irradiance(n)
    with c_diff = albedo * (1 - metalness) applied by the caller exactly once.
    With multiscatter disabled the deficit energy is simply dropped.
    """
    f0 = np.asarray(f0, dtype=np.float64)
    a, b = lut_lookup(lut, ndotv, roughness)
    a = a[..., None]
    b = b[..., None]
    fss_ess = f0 * a + b
    if not enabled:
        return fss_ess, np.zeros_like(fss_ess), np.clip(1.0 - fss_ess, 0.0, None)
    ems = 1.0 - (a + b)
    favg = f0 + (1.0 - f0) / 21.0
    denom = np.maximum(1.0 - ems * favg, 1e-4)
    fms = fss_ess * favg / denom
    fms_ems = fms * ems
    diffuse_weight = np.clip(1.0 - fss_ess - fms_ems, 0.0, None)
    return fss_ess, fms_ems, diffuse_weight


# -------------------------------------------------------------------- assets


@dataclass
class IblSet:
    """Baked environment: irradiance cube, specular mips, split-sum lut."""

    irradiance: Cubemap
    specular: list = field(default_factory=list)  # mip 0 = sharpest
    lut: np.ndarray = None
    multiscatter_enabled: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.specular:
            raise InvalidArgument("IblSet needs at least one specular mip")
        if self.lut is None or self.lut.ndim != 3 or self.lut.shape[2] != 2:
            raise InvalidArgument("IblSet lut must be (res, res, 2)")

    @property
    def num_mips(self):
        return len(self.specular)

    def sample_irradiance(self, normals):
        return self.irradiance.sample(normals)

    def sample_specular(self, dirs, roughness):
        """Trilinear: bilinear in-face, linear between the two roughness mips."""
        dirs = np.asarray(dirs, dtype=np.float64)
        flat = dirs.reshape(-1, 3)
        m = len(self.specular)
        r = np.broadcast_to(np.asarray(roughness, dtype=np.float64), flat.shape[:1]).copy()
        mf = np.clip(r, 0.0, 1.0) * (m - 1)
        m0 = np.floor(mf).astype(np.int64)
        t = mf - m0
        m1 = np.minimum(m0 + 1, m - 1)
        out = np.zeros_like(flat)
        for level in range(m):
            lo = m0 == level
            hi = (m1 == level) & (t > 0.0)
            if lo.any():
                out[lo] += self.specular[level].sample(flat[lo]) * (1.0 - t[lo, None])
            if hi.any():
                out[hi] += self.specular[level].sample(flat[hi]) * t[hi, None]
        return out.reshape(dirs.shape)

    def background(self, dirs):
        return self.specular[0].sample(dirs)


_LUT_CACHE = {}


def cached_brdf_lut(resolution=DEFAULT_LUT_SIZE, samples=LUT_SAMPLES):
    key = (resolution, samples)
    if key not in _LUT_CACHE:
        _LUT_CACHE[key] = compute_brdf_lut(resolution, samples)
        _LUT_CACHE[key].setflags(write=False)
    return _LUT_CACHE[key]


def bake_ibl(env, face_size=DEFAULT_FACE_SIZE, num_mips=DEFAULT_NUM_MIPS,
             irradiance_size=DEFAULT_IRRADIANCE_SIZE, lut_size=DEFAULT_LUT_SIZE,
             seed=0, irradiance_samples=IRRADIANCE_SAMPLES,
             specular_samples=SPECULAR_SAMPLES, multiscatter=True) -> IblSet:
    """Bake the full asset set from an equirect HDR image or a Cubemap."""
    if isinstance(env, Cubemap):
        cube = env
    else:
        cube = equirect_to_cubemap(env, face_size)
    return IblSet(
        irradiance=prefilter_irradiance(cube, irradiance_size, irradiance_samples, seed),
        specular=prefilter_specular(cube, num_mips, specular_samples, seed),
        lut=np.array(cached_brdf_lut(lut_size)),
        multiscatter_enabled=multiscatter,
        seed=seed,
    )


_DEFAULT_ENV = None


def default_environment() -> IblSet:
    """Neutral gray surroundings used when a scene specifies no environment."""
    global _DEFAULT_ENV
    if _DEFAULT_ENV is None:
        cube = Cubemap.constant((0.5, 0.5, 0.5), res=16)
        _DEFAULT_ENV = bake_ibl(cube, num_mips=DEFAULT_NUM_MIPS, irradiance_size=8,
                                irradiance_samples=512, specular_samples=256)
    return _DEFAULT_ENV
