"""Per-pixel lighting and the compositing pass.

Direct light uses Cook-Torrance (GGX distribution, Smith-Schlick geometry
with k = alpha/2, Schlick Fresnel) with inverse-square point-light falloff
and 3x3 PCF shadow lookups.  Ambient light comes from the baked environment
set via the split-sum lookup plus multiple-scatter compensation.  compose()
assembles background, PBR and depth-darkened point-cloud pixels into one
linear HDR image; bloom and line overlays are added by the pipeline
afterwards.

All math is float64 and strictly per-pixel, so evaluating a subset of
fragments standalone reproduces the composed values bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PipelineAssemblyError
from .ibl import IblSet, multiscatter_terms
from .scene import Background

ROUGHNESS_FLOOR = 0.045  # keeps the GGX denominator away from its singularity
SPECULAR_EPS = 1e-4
F0_DIELECTRIC = 0.04
SHADOW_BIAS_BASE = 5e-3
SHADOW_BIAS_SLOPE = 2e-2
SHADOW_TAN_CLAMP = 10.0


@dataclass
class BrdfSample:
    f_r: np.ndarray  # (..., 3) reflectance, 1/sr
    d: np.ndarray
    g: np.ndarray
    f: np.ndarray  # (..., 3) Fresnel


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def brdf_cook_torrance(n, wo, wi, albedo, metalness, roughness) -> BrdfSample:
    """Cook-Torrance reflectance for unit vectors n, wo, wi (row-stacked).

    Reciprocity in (wi, wo) holds bitwise: every term is built from
    expressions symmetric under the swap (products are computed as a single
    multiplication, and cos of the half angle comes from sqrt((1+wi.wo)/2)
    rather than from the normalized half vector).
    """
    n = np.asarray(n, dtype=np.float64)
    wo = np.asarray(wo, dtype=np.float64)
    wi = np.asarray(wi, dtype=np.float64)
    albedo = np.asarray(albedo, dtype=np.float64)
    rough = np.clip(np.asarray(roughness, dtype=np.float64), ROUGHNESS_FLOOR, 1.0)
    metal = np.asarray(metalness, dtype=np.float64)
    alpha = rough * rough
    a2 = alpha * alpha

    ndotl = _dot(n, wi)
    ndotv = _dot(n, wo)
    valid = (ndotl > 0.0) & (ndotv > 0.0)
    ndotl_s = np.maximum(ndotl, 1e-12)
    ndotv_s = np.maximum(ndotv, 1e-12)

    # cos between either direction and the half vector, symmetric form
    cos_d = np.sqrt(np.clip((1.0 + _dot(wi, wo)) / 2.0, 0.0, 1.0))
    h = wi + wo
    hn = np.linalg.norm(h, axis=-1)
    h_ok = hn > 1e-9
    h = h / np.maximum(hn, 1e-9)[..., None]
    ndoth = np.clip(_dot(n, h), 0.0, 1.0)

    denom_d = ndoth * ndoth * (a2 - 1.0) + 1.0
    d_term = a2 / (np.pi * denom_d * denom_d)

    k = alpha / 2.0
    g_term = (ndotv_s / (ndotv_s * (1.0 - k) + k)) * (ndotl_s / (ndotl_s * (1.0 - k) + k))

    f0 = F0_DIELECTRIC * (1.0 - metal[..., None]) + albedo * metal[..., None]
    f_term = f0 + (1.0 - f0) * (1.0 - cos_d[..., None]) ** 5

    spec = (d_term * g_term)[..., None] * f_term / (4.0 * (ndotv_s * ndotl_s) + SPECULAR_EPS)[..., None]
    diff = (1.0 - f_term) * (1.0 - metal[..., None]) * albedo / np.pi
    f_r = diff + spec

    live = (valid & h_ok)[..., None]
    zero = np.zeros_like(f_r)
    return BrdfSample(
        f_r=np.where(live, f_r, zero),
        d=np.where(valid & h_ok, d_term, 0.0),
        g=np.where(valid & h_ok, g_term, 0.0),
        f=np.where(live, f_term, zero),
    )


def visibility_pcf(points, normals, light_position, depth_map, scene_scale):
    """Lit fraction in {0, 1/9, ..., 1} from a 3x3 shadow-map neighborhood.

    Fragments outside the light frustum count as fully lit.  The depth bias
    grows with the slope of the surface relative to the light ray so lit
    surfaces do not self-shadow.
    """
    cam = depth_map.camera
    pts = np.asarray(points, dtype=np.float64)
    xy, d = cam.project(pts)
    h, w = depth_map.depth.shape
    tx = np.floor(xy[:, 0]).astype(np.int64)
    ty = np.floor(xy[:, 1]).astype(np.int64)
    in_frustum = (d >= cam.near) & (d <= cam.far) & \
        (tx >= 0) & (tx < w) & (ty >= 0) & (ty < h)

    to_light = light_position - pts
    to_light = to_light / np.maximum(np.linalg.norm(to_light, axis=1), 1e-12)[:, None]
    cos_t = np.clip(_dot(np.asarray(normals, dtype=np.float64), to_light), 1e-3, 1.0)
    tan_t = np.minimum(np.sqrt(np.clip(1.0 - cos_t**2, 0.0, 1.0)) / cos_t, SHADOW_TAN_CLAMP)
    bias = (SHADOW_BIAS_BASE + SHADOW_BIAS_SLOPE * tan_t) * scene_scale

    lit = np.zeros(len(pts))
    txc = np.clip(tx, 0, w - 1)
    tyc = np.clip(ty, 0, h - 1)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            ux = txc + dx
            uy = tyc + dy
            inb = (ux >= 0) & (ux < w) & (uy >= 0) & (uy < h)
            stored = np.where(inb, depth_map.depth[np.clip(uy, 0, h - 1), np.clip(ux, 0, w - 1)], np.inf)
            lit += np.where(d <= stored + bias, 1.0, 0.0)
    vis = lit / 9.0
    return np.where(in_frustum, vis, 1.0)


def direct_lighting(positions, normals, wo, albedo, metalness, roughness,
                    lights, shadow_maps, scene_scale):
    """Sum of Cook-Torrance contributions over all point lights.

    shadow_maps maps a light's index to its DepthMap (or None when the light
    casts no shadow).
    """
    out = np.zeros_like(np.asarray(albedo, dtype=np.float64))
    pts = np.asarray(positions, dtype=np.float64)
    for li, light in enumerate(lights):
        delta = light.position - pts
        dist2 = np.maximum(np.sum(delta * delta, axis=1), 1e-24)
        wi = delta / np.sqrt(dist2)[:, None]
        sample = brdf_cook_torrance(normals, wo, wi, albedo, metalness, roughness)
        irr = (light.intensity / dist2)[:, None] * np.asarray(light.color, dtype=np.float64)
        ndotl = np.maximum(_dot(normals, wi), 0.0)
        contrib = sample.f_r * irr * ndotl[:, None]
        dm = shadow_maps.get(li)
        if dm is not None:
            vis = visibility_pcf(pts, normals, light.position, dm, scene_scale)
            contrib = contrib * vis[:, None]
        out += contrib
    return out


def ambient_ibl(normals, wo, albedo, metalness, roughness, ibl: IblSet, ao):
    """Split-sum environment lighting, multiplied by ambient occlusion."""
    if ibl is None:
        return np.zeros_like(np.asarray(albedo, dtype=np.float64))
    n = np.asarray(normals, dtype=np.float64)
    wo = np.asarray(wo, dtype=np.float64)
    albedo = np.asarray(albedo, dtype=np.float64)
    metal = np.asarray(metalness, dtype=np.float64)
    rough = np.clip(np.asarray(roughness, dtype=np.float64), 0.0, 1.0)
    ndotv = np.clip(_dot(n, wo), 1e-4, 1.0)
    r_dir = 2.0 * ndotv[..., None] * n - wo
    f0 = F0_DIELECTRIC * (1.0 - metal[..., None]) + albedo * metal[..., None]
    single, multi, diffuse_w = multiscatter_terms(f0, ndotv, rough, ibl.lut,
                                                  ibl.multiscatter_enabled)
    prefiltered = ibl.sample_specular(r_dir, rough)
    irradiance = ibl.sample_irradiance(n)
    c_diff = albedo * (1.0 - metal[..., None])
    ambient = single * prefiltered + multi * irradiance + diffuse_w * c_diff * irradiance
    return ambient * np.asarray(ao, dtype=np.float64)[..., None]


def compose(maps, camera, lights, shadow_maps, ibl, settings, ao_full,
            edl_factor, scene_scale):
    """Assemble the linear HDR frame from the decoded G-Buffer maps.

    maps: dict from GBuffer.decode_maps (full resolution).  ao_full: (H, W)
    ambient occlusion already upsampled (all ones when disabled).  edl_factor:
    (H, W) depth-darkening factor (all ones when unused).  Background pixels
    sample the environment along their camera ray, or the solid color.
    """
    depth = maps["depth"]
    h, w = depth.shape
    if ao_full.shape != (h, w) or edl_factor.shape != (h, w):
        raise PipelineAssemblyError(
            f"effect maps {ao_full.shape}/{edl_factor.shape} do not match frame {(h, w)}")
    hdr = np.zeros((h, w, 3))

    px, py = np.meshgrid(np.arange(w), np.arange(h))
    rays = camera.pixel_rays(px + 0.5, py + 0.5)

    covered = maps["covered"]
    background = ~covered
    if background.any():
        if settings.background == Background.ENV_MAP and ibl is not None:
            dirs = rays[background]
            dirs = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)
            hdr[background] = ibl.background(dirs)
        else:
            hdr[background] = np.asarray(settings.background_color, dtype=np.float64)

    pbr = covered & maps["has_normal"]
    if pbr.any():
        pos = camera.position + rays[pbr] * depth[pbr][:, None]
        wo = -rays[pbr]
        wo = wo / np.linalg.norm(wo, axis=-1, keepdims=True)
        normals = maps["normal"][pbr]
        albedo = maps["albedo"][pbr]
        metal = maps["metalness"][pbr]
        rough = maps["roughness"][pbr]
        direct = direct_lighting(pos, normals, wo, albedo, metal, rough,
                                 lights, shadow_maps, scene_scale)
        ambient = ambient_ibl(normals, wo, albedo, metal, rough, ibl, ao_full[pbr])
        hdr[pbr] = direct + ambient

    flat = covered & ~maps["has_normal"]
    if flat.any():
        shading = edl_factor[flat] * ao_full[flat]
        hdr[flat] = maps["albedo"][flat] * shading[:, None]

    return np.maximum(np.nan_to_num(hdr, nan=0.0, posinf=1e12, neginf=0.0), 0.0)
