"""Deferred G-Buffer: four render targets, positions reconstructed from depth.

Layout (per pixel):
  rt0  albedo rgb + coverage/accumulation weight in alpha
  rt1  encoded world normal (all-zero bytes mark pixels without normals)
  rt2  metalness, roughness
  rt3  linear view-space depth, 32-bit, +inf for background

Byte8 stores channels as uint8; Half16 stores float16 and is used for surfel
splatting where albedo/normal/material sums accumulate weighted by the splat
kernel until normalize_accumulated divides them out.
"""

from __future__ import annotations

import enum
import os

import numpy as np

from .common import round_half_up, to_byte
from .errors import InvalidArgument, PipelineAssemblyError

BACKGROUND_DEPTH = np.float32(np.inf)
WEIGHT_EPS = 1e-4


class Precision(enum.Enum):
    BYTE8 = "byte8"
    HALF16 = "half16"


# ------------------------------------------------------------- normal codec


def encode_normal(n):
    """Unit vectors -> bytes, round-half-up. (0,0,1) -> (128,128,255)."""
    n = np.asarray(n, dtype=np.float64)
    b = round_half_up((n + 1.0) * 0.5 * 255.0)
    return np.clip(b, 0, 255).astype(np.uint8)


def decode_normal(b):
    """Bytes -> renormalized unit vectors plus a validity mask.

    All-zero byte triples cannot arise from any unit vector and mark pixels
    rasterized without normals; those decode to +z with mask False.
    """
    b = np.asarray(b)
    v = b.astype(np.float64) / 255.0 * 2.0 - 1.0
    norm = np.linalg.norm(v, axis=-1)
    sentinel = np.all(b == 0, axis=-1) | (norm < 0.01)
    safe = np.where(sentinel[..., None], 1.0, norm[..., None])
    out = v / safe
    out = np.where(sentinel[..., None], np.array([0.0, 0.0, 1.0]), out)
    return out, ~sentinel


# -------------------------------------------------------- depth -> position


def reconstruct_position(camera, px, py, depth):
    """Pixel indices + linear view depth -> world positions.

    px/py are integer pixel coordinates; rays go through pixel centers.
    """
    px = np.asarray(px, dtype=np.float64) + 0.5
    py = np.asarray(py, dtype=np.float64) + 0.5
    rays = camera.pixel_rays(px, py)
    return camera.position + rays * np.asarray(depth, dtype=np.float64)[..., None]


# ------------------------------------------------------------------ buffer


class GBuffer:
    def __init__(self, width, height, precision=Precision.BYTE8):
        if width <= 0 or height <= 0:
            raise InvalidArgument("gbuffer needs a positive size")
        self.width = int(width)
        self.height = int(height)
        self.precision = precision
        shape = (self.height, self.width)
        if precision == Precision.BYTE8:
            self.rt0 = np.zeros(shape + (4,), dtype=np.uint8)
            self.rt1 = np.zeros(shape + (3,), dtype=np.uint8)
            self.rt2 = np.zeros(shape + (2,), dtype=np.uint8)
        else:
            self.rt0 = np.zeros(shape + (4,), dtype=np.float16)
            self.rt1 = np.zeros(shape + (3,), dtype=np.float16)
            self.rt2 = np.zeros(shape + (2,), dtype=np.float16)
        self.rt3 = np.full(shape, BACKGROUND_DEPTH, dtype=np.float32)
        self.normalized = precision == Precision.BYTE8

    # -- write paths -------------------------------------------------------
    def write_fragments(self, pix, depth, albedo, normal, metalness, roughness):
        """Scatter shaded-surface fragments (Byte8). pix are linear indices."""
        if self.precision != Precision.BYTE8:
            raise PipelineAssemblyError("fragment writes target Byte8 buffers")
        y, x = np.divmod(np.asarray(pix, dtype=np.int64), self.width)
        self.rt0[y, x, :3] = to_byte(albedo)
        self.rt0[y, x, 3] = 255
        if normal is None:
            self.rt1[y, x] = 0
        else:
            self.rt1[y, x] = encode_normal(normal)
        self.rt2[y, x, 0] = to_byte(metalness)
        self.rt2[y, x, 1] = to_byte(roughness)
        self.rt3[y, x] = np.asarray(depth, dtype=np.float32)

    def accumulate(self, pix, weights, albedo, normal, metalness, roughness):
        """Weighted additive splat accumulation (Half16).

        Sums are kept in float64 scratch and quantized to float16 once per
        call; callers present fragments in a deterministic order.
        """
        if self.precision != Precision.HALF16:
            raise PipelineAssemblyError("accumulation targets Half16 buffers")
        y, x = np.divmod(np.asarray(pix, dtype=np.int64), self.width)
        w = np.asarray(weights, dtype=np.float64)
        acc0 = self.rt0.astype(np.float64)
        acc1 = self.rt1.astype(np.float64)
        acc2 = self.rt2.astype(np.float64)
        np.add.at(acc0, (y, x, slice(0, 3)), albedo * w[:, None])
        np.add.at(acc0, (y, x, 3), w)
        np.add.at(acc1, (y, x), normal * w[:, None])
        np.add.at(acc2, (y, x, 0), metalness * w)
        np.add.at(acc2, (y, x, 1), roughness * w)
        self.rt0 = acc0.astype(np.float16)
        self.rt1 = acc1.astype(np.float16)
        self.rt2 = acc2.astype(np.float16)
        self.normalized = False

    def update_min_depth(self, pix, depth):
        y, x = np.divmod(np.asarray(pix, dtype=np.int64), self.width)
        np.minimum.at(self.rt3, (y, x), np.asarray(depth, dtype=np.float32))

    # -- conversions --------------------------------------------------------
    def promote(self):
        """Byte8 -> Half16 with unit weights; Half16 passes through unchanged."""
        if self.precision == Precision.HALF16:
            return self
        out = GBuffer(self.width, self.height, Precision.HALF16)
        covered = self.rt0[..., 3] > 0
        w = covered.astype(np.float64)
        out.rt0[..., :3] = (self.rt0[..., :3] / 255.0 * w[..., None]).astype(np.float16)
        out.rt0[..., 3] = w.astype(np.float16)
        normals, valid = decode_normal(self.rt1)
        normals = np.where((covered & valid)[..., None], normals, 0.0)
        out.rt1 = normals.astype(np.float16)
        out.rt2 = (self.rt2 / 255.0 * w[..., None]).astype(np.float16)
        out.rt3 = self.rt3.copy()
        out.normalized = True
        return out

    def normalize_accumulated(self, eps=WEIGHT_EPS):
        """Divide accumulated channels by weight; weights become 1.

        Idempotent: normals within 1e-3 of unit length are left untouched, so
        a second application reproduces the buffer bit for bit.
        """
        if self.precision != Precision.HALF16:
            raise PipelineAssemblyError("normalize applies to Half16 buffers")
        w = self.rt0[..., 3].astype(np.float64)
        covered = w > eps
        inv = np.where(covered, 1.0 / np.maximum(w, eps), 0.0)
        rt0 = self.rt0.astype(np.float64)
        rt0[..., :3] *= inv[..., None]
        rt0[..., 3] = covered.astype(np.float64)
        rt1 = self.rt1.astype(np.float64) * inv[..., None]
        norms = np.linalg.norm(rt1, axis=-1)
        renorm = covered & (np.abs(norms - 1.0) >= 1e-3) & (norms > 1e-6)
        rt1[renorm] /= norms[renorm][:, None]
        rt2 = self.rt2.astype(np.float64) * inv[..., None]
        self.rt0 = rt0.astype(np.float16)
        self.rt1 = rt1.astype(np.float16)
        self.rt2 = rt2.astype(np.float16)
        self.rt3 = np.where(covered, self.rt3, BACKGROUND_DEPTH).astype(np.float32)
        self.normalized = True
        return self

    # -- read path -----------------------------------------------------------
    def covered_mask(self):
        return np.asarray(self.rt0[..., 3], dtype=np.float64) > 0

    def decode_maps(self):
        """Dense float maps used by shading and effects.

        Returns dict with albedo (H,W,3), normal (H,W,3), has_normal (H,W),
        metalness, roughness, depth, covered.
        """
        if self.precision == Precision.BYTE8:
            albedo = self.rt0[..., :3].astype(np.float64) / 255.0
            normal, has_normal = decode_normal(self.rt1)
            metal = self.rt2[..., 0].astype(np.float64) / 255.0
            rough = self.rt2[..., 1].astype(np.float64) / 255.0
        else:
            if not self.normalized:
                raise PipelineAssemblyError("normalize accumulation before decoding")
            albedo = np.clip(self.rt0[..., :3].astype(np.float64), 0.0, 1.0)
            n = self.rt1.astype(np.float64)
            norms = np.linalg.norm(n, axis=-1)
            has_normal = norms > 0.01
            normal = np.where(has_normal[..., None], n / np.maximum(norms, 1e-12)[..., None],
                              np.array([0.0, 0.0, 1.0]))
            metal = np.clip(self.rt2[..., 0].astype(np.float64), 0.0, 1.0)
            rough = np.clip(self.rt2[..., 1].astype(np.float64), 0.0, 1.0)
        covered = self.covered_mask()
        has_normal = has_normal & covered
        return {
            "albedo": albedo,
            "normal": normal,
            "has_normal": has_normal,
            "metalness": metal,
            "roughness": rough,
            "depth": self.rt3.astype(np.float64),
            "covered": covered,
        }

    def channel_report(self):
        """Structural check data: (target, channels) pairs as stored."""
        return [("rt0", self.rt0.shape[-1]), ("rt1", self.rt1.shape[-1]),
                ("rt2", self.rt2.shape[-1]), ("rt3", 1)]

    def dump_pngs(self, out_dir):
        """Write one PNG per render target for inspection."""
        from .assets import write_png

        os.makedirs(out_dir, exist_ok=True)
        maps = self.decode_maps()
        write_png(to_byte(maps["albedo"]), os.path.join(out_dir, "albedo.png"))
        nvis = to_byte((maps["normal"] + 1.0) * 0.5 * maps["covered"][..., None])
        write_png(nvis, os.path.join(out_dir, "normals.png"))
        mr = np.zeros(maps["albedo"].shape, dtype=np.float64)
        mr[..., 0] = maps["metalness"]
        mr[..., 1] = maps["roughness"]
        write_png(to_byte(mr), os.path.join(out_dir, "metal_rough.png"))
        d = maps["depth"].copy()
        cov = maps["covered"]
        if cov.any():
            lo, hi = d[cov].min(), d[cov].max()
            vis = np.where(cov, 1.0 - (d - lo) / max(hi - lo, 1e-12), 0.0)
        else:
            vis = np.zeros_like(d)
        write_png(to_byte(np.repeat(vis[..., None], 3, axis=-1)), os.path.join(out_dir, "depth.png"))
        return out_dir
