"""Screen-space effect passes.

SSAO runs at half the frame resolution on a normal-oriented sample
hemisphere, is cleaned with a depth-aware bilateral blur, and is upsampled
bilinearly at compose time.  EDL darkens pixels whose neighbors are closer
in log depth, which is what makes bare point clouds readable.  Bloom
extracts a soft-knee bright map, blurs it across a halved-resolution
pyramid, and returns an additive HDR layer.
"""

from __future__ import annotations

import numpy as np

from .common import bilinear_resize, box_down2, gaussian_blur_9, hash01, luminance
from .ibl import cosine_hemisphere, hammersley, tangent_frames

SSAO_DEFAULT_SAMPLES = 16
SSAO_BIAS_FRACTION = 0.01  # of the sample radius
BILATERAL_SIGMA_FRACTION = 0.02  # of the scene scale
BLOOM_KNEE = 0.5


def ssao(maps, camera, radius, sample_count=SSAO_DEFAULT_SAMPLES, seed=0):
    """Ambient occlusion at half resolution. Returns (ao, half_depth).

    Per half-res pixel: reconstruct the world position, take sample_count
    cosine-biased points inside the normal-oriented hemisphere of the given
    radius (rotated per pixel by a seeded hash), and count samples whose
    projected depth lands behind nearer stored geometry within the radius.
    Pixels without geometry, and samples leaving the viewport, stay
    unoccluded.  Point-cloud pixels have no stored normal and use a
    camera-facing one.
    """
    depth_full = maps["depth"]
    h, w = depth_full.shape
    hh, hw = (h + 1) // 2, (w + 1) // 2
    half_depth = depth_full[::2, ::2]
    ao = np.ones((hh, hw))
    if radius is None or radius <= 0:
        return ao, half_depth
    covered = maps["covered"][::2, ::2]
    if not covered.any():
        return ao, half_depth

    iy, ix = np.nonzero(covered)
    fy, fx = iy * 2, ix * 2  # full-res pixel the half-res cell samples
    rays = camera.pixel_rays(fx + 0.5, fy + 0.5)
    d = half_depth[iy, ix].astype(np.float64)
    pos = camera.position + rays * d[:, None]

    normals = maps["normal"][::2, ::2][iy, ix].astype(np.float64)
    has_n = maps["has_normal"][::2, ::2][iy, ix]
    facing = -rays / np.linalg.norm(rays, axis=-1, keepdims=True)
    normals = np.where(has_n[:, None], normals, facing)

    local = cosine_hemisphere(hammersley(sample_count))  # (s, 3)
    reach = radius * (np.arange(1, sample_count + 1) / sample_count)
    angle = 2.0 * np.pi * hash01(iy, ix, seed=seed)
    ca, sa = np.cos(angle)[:, None], np.sin(angle)[:, None]
    lx = ca * local[None, :, 0] - sa * local[None, :, 1]
    ly = sa * local[None, :, 0] + ca * local[None, :, 1]
    lz = np.broadcast_to(local[None, :, 2], lx.shape)

    t, b = tangent_frames(normals)
    offset = (
        lx[:, :, None] * t[:, None, :]
        + ly[:, :, None] * b[:, None, :]
        + lz[:, :, None] * normals[:, None, :]
    ) * reach[None, :, None]
    q = pos[:, None, :] + offset

    xy, qd = camera.project(q.reshape(-1, 3))
    qd = qd.reshape(len(iy), sample_count)
    sx = np.floor(xy[:, 0]).astype(np.int64).reshape(qd.shape)
    sy = np.floor(xy[:, 1]).astype(np.int64).reshape(qd.shape)
    inside = (qd >= camera.near) & (sx >= 0) & (sx < w) & (sy >= 0) & (sy < h)
    stored = np.where(inside,
                      depth_full[np.clip(sy, 0, h - 1), np.clip(sx, 0, w - 1)].astype(np.float64),
                      np.inf)
    bias = SSAO_BIAS_FRACTION * radius
    occluded = inside & (stored < qd - bias) & (qd - stored < radius)
    ao[iy, ix] = 1.0 - occluded.sum(axis=1) / sample_count
    return ao, half_depth


def bilateral_blur(ao, depth, scene_scale):
    """5x5 Gaussian blur weighted by depth similarity; edges preserved.

    Neighbors whose depth differs by much more than 0.02 * scene scale get
    negligible weight, so occlusion does not bleed across silhouettes.
    Background cells pass through unchanged.
    """
    h, w = ao.shape
    sigma = max(BILATERAL_SIGMA_FRACTION * scene_scale, 1e-12)
    spatial = np.array([1.0, 4.0, 6.0, 4.0, 1.0])
    d = np.asarray(depth, dtype=np.float64)
    finite = np.isfinite(d)
    d0 = np.where(finite, d, 0.0)  # background never contributes; value moot
    acc = np.zeros_like(ao)
    wsum = np.zeros_like(ao)
    ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    for dy in range(-2, 3):
        for dx in range(-2, 3):
            ny = np.clip(ys + dy, 0, h - 1)
            nx = np.clip(xs + dx, 0, w - 1)
            dd = d0[ny, nx] - d0
            wd = np.exp(-dd ** 2 / (2.0 * sigma * sigma))
            wgt = spatial[dy + 2] * spatial[dx + 2] * np.where(finite[ny, nx], wd, 0.0)
            acc += wgt * ao[ny, nx]
            wsum += wgt
    out = np.where(finite & (wsum > 0), acc / np.maximum(wsum, 1e-12), ao)
    return np.clip(out, 0.0, 1.0)


def edl(depth, strength):
    """Eye-dome factor in (0, 1]: exp(-strength * sum of positive log-depth
    drops to the 8 neighbors).  Background neighbors are skipped."""
    h, w = depth.shape
    finite = np.isfinite(depth)
    factor = np.ones((h, w))
    if strength <= 0 or not finite.any():
        return factor
    logd = np.where(finite, np.log(np.maximum(depth, 1e-300)), 0.0)
    padded = np.pad(logd, 1, mode="edge")
    pmask = np.pad(finite, 1, mode="constant", constant_values=False)
    response = np.zeros((h, w))
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            nb = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
            nm = pmask[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
            response += np.where(finite & nm, np.maximum(logd - nb, 0.0), 0.0)
    factor = np.where(finite, np.exp(-strength * response), 1.0)
    return factor


def bloom(hdr, threshold, levels):
    """Additive glow layer from the bright parts of the HDR frame.

    The bright map keeps pixels whose luminance exceeds the threshold, with
    a smoothstep knee of half a stop on either side so the cut is not hard;
    above threshold + 0.5 the map equals the input exactly, which keeps the
    layer linear in superbright content.  The map is halved up to `levels`
    times, each coarser level blurred with a 9-tap Gaussian, and all levels
    are upsampled, summed and averaged.
    """
    lum = luminance(hdr)
    s = np.clip((lum - threshold + BLOOM_KNEE) / (2.0 * BLOOM_KNEE), 0.0, 1.0)
    gate = s * s * (3.0 - 2.0 * s)
    bright = hdr * gate[..., None]
    h, w = lum.shape
    pyramid = [bright]
    for _ in range(1, levels):
        pyramid.append(box_down2(pyramid[-1]))
    layer = pyramid[0].astype(np.float64).copy()
    for lvl in pyramid[1:]:
        layer += bilinear_resize(gaussian_blur_9(lvl), h, w)
    return layer / levels
