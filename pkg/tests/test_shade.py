"""Reflectance model, shadow lookups, light accumulation, HDR compositing."""

import numpy as np
import pytest

from softpbr import EffectSettings, PointLight
from softpbr.errors import PipelineAssemblyError
from softpbr.gbuffer import GBuffer
from softpbr.geom import Pose
from softpbr.raster import DepthMap
from softpbr.scene import Background, Camera
from softpbr.shade import (
    F0_DIELECTRIC,
    ROUGHNESS_FLOOR,
    ambient_ibl,
    brdf_cook_torrance,
    compose,
    direct_lighting,
    visibility_pcf,
)

Z = np.array([0.0, 0.0, 1.0])


def unit_rows(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]


def hemisphere_rows(n, seed):
    v = unit_rows(n, seed)
    v[:, 2] = np.abs(v[:, 2]) + 1e-6
    return v / np.linalg.norm(v, axis=1)[:, None]


# --------------------------------------------------------------------- brdf


def test_brdf_nonnegative_and_bounded_terms():
    n = 10000
    rng = np.random.default_rng(41)
    normals = np.tile(Z, (n, 1))
    wo = hemisphere_rows(n, 42)
    wi = hemisphere_rows(n, 43)
    s = brdf_cook_torrance(normals, wo, wi, rng.uniform(0, 1, (n, 3)),
                           rng.uniform(0, 1, n), rng.uniform(0, 1, n))
    assert s.f_r.min() >= 0.0
    assert s.d.min() >= 0.0
    assert s.g.min() >= 0.0 and s.g.max() <= 1.0 + 1e-12
    assert s.f.min() >= 0.0 and s.f.max() <= 1.0 + 1e-12
    assert np.isfinite(s.f_r).all()


def test_brdf_reciprocity_is_bitwise():
    n = 10000
    rng = np.random.default_rng(44)
    normals = unit_rows(n, 45)
    wo = unit_rows(n, 46)
    wi = unit_rows(n, 47)
    albedo = rng.uniform(0, 1, (n, 3))
    metal = rng.uniform(0, 1, n)
    rough = rng.uniform(0, 1, n)
    a = brdf_cook_torrance(normals, wo, wi, albedo, metal, rough)
    b = brdf_cook_torrance(normals, wi, wo, albedo, metal, rough)
    assert np.array_equal(a.f_r, b.f_r)
    assert np.array_equal(a.f, b.f)


def test_brdf_zero_below_horizon():
    wi = np.array([[0.0, 0.6, -0.8]])  # light under the surface
    s = brdf_cook_torrance(Z[None], Z[None], wi, np.ones((1, 3)), [0.0], [0.5])
    assert np.array_equal(s.f_r, np.zeros((1, 3)))
    assert s.d[0] == 0.0 and s.g[0] == 0.0


def test_ndf_integrates_to_one():
    # 2*pi * int D(theta) cos sin dtheta == 1; probe D via wi == wo
    theta = np.linspace(0.0, np.pi / 2 - 1e-6, 4001)
    dirs = np.stack([np.sin(theta), np.zeros_like(theta), np.cos(theta)], axis=1)
    normals = np.tile(Z, (len(theta), 1))
    for rough in (0.1, 0.5, 1.0):
        s = brdf_cook_torrance(normals, dirs, dirs, np.ones((len(theta), 3)),
                               np.zeros(len(theta)), np.full(len(theta), rough))
        integrand = 2.0 * np.pi * s.d * np.cos(theta) * np.sin(theta)
        assert np.trapezoid(integrand, theta) == pytest.approx(1.0, rel=0.01)


def test_fresnel_anchors():
    s = brdf_cook_torrance(Z[None], Z[None], Z[None], np.array([[0.9, 0.6, 0.3]]),
                           [0.0], [0.5])
    assert s.f[0] == pytest.approx(np.full(3, F0_DIELECTRIC))  # head-on dielectric
    s = brdf_cook_torrance(Z[None], Z[None], Z[None], np.array([[0.9, 0.6, 0.3]]),
                           [1.0], [0.5])
    assert s.f[0] == pytest.approx([0.9, 0.6, 0.3])  # head-on metal reflects albedo
    th = np.radians(89.9)
    wo = np.array([[np.sin(th), 0.0, np.cos(th)]])
    wi = np.array([[-np.sin(th), 0.0, np.cos(th)]])
    s = brdf_cook_torrance(Z[None], wo, wi, np.array([[0.9, 0.6, 0.3]]), [0.0], [0.5])
    assert np.all(s.f[0] > 0.95)  # grazing Fresnel approaches one


def test_rough_diffuse_dominates_for_dielectric():
    s = brdf_cook_torrance(Z[None], Z[None], Z[None], np.array([[0.5, 0.5, 0.5]]),
                           [0.0], [1.0])
    diff = (1.0 - F0_DIELECTRIC) * 0.5 / np.pi
    assert s.f_r[0] == pytest.approx(np.full(3, diff), rel=0.25)  # spec is a small add-on
    assert np.all(s.f_r[0] >= diff)


def test_roughness_floor_applies():
    a = brdf_cook_torrance(Z[None], Z[None], Z[None], np.ones((1, 3)), [0.0], [0.0])
    b = brdf_cook_torrance(Z[None], Z[None], Z[None], np.ones((1, 3)), [0.0],
                           [ROUGHNESS_FLOOR])
    assert np.array_equal(a.d, b.d)


# ------------------------------------------------------------------ shadows


def light_cam(size=32):
    # looks down -z from the origin
    return Camera(Pose.identity(), np.radians(60.0), 0.5, 50.0, size, size)


def test_visibility_full_and_blocked():
    cam = light_cam()
    dm = DepthMap(depth=np.full((32, 32), 5.0, dtype=np.float32), camera=cam)
    pts = np.array([[0.0, 0.0, -4.0], [0.0, 0.0, -6.0]])
    normals = np.tile(Z, (2, 1))
    vis = visibility_pcf(pts, normals, np.zeros(3), dm, scene_scale=1.0)
    assert vis[0] == 1.0  # nearer than every stored depth
    assert vis[1] == 0.0  # behind the stored surface everywhere


def test_visibility_outside_frustum_is_lit():
    cam = light_cam()
    dm = DepthMap(depth=np.zeros((32, 32), dtype=np.float32), camera=cam)
    pts = np.array([[0.0, 0.0, 4.0], [100.0, 0.0, -4.0]])  # behind cam, off screen
    vis = visibility_pcf(pts, np.tile(Z, (2, 1)), np.zeros(3), dm, scene_scale=1.0)
    assert np.all(vis == 1.0)


def test_visibility_penumbra_is_ninths():
    cam = light_cam()
    depth = np.full((32, 32), 10.0, dtype=np.float32)
    depth[:, :16] = 1.0  # occluder covering the left half of the map
    dm = DepthMap(depth=depth, camera=cam)
    xs = np.linspace(-0.6, 0.6, 41)
    pts = np.stack([xs, np.zeros_like(xs), np.full_like(xs, -3.0)], axis=1)
    vis = visibility_pcf(pts, np.tile(Z, (len(xs), 1)), np.zeros(3), dm, scene_scale=1.0)
    assert set(np.round(vis * 9).astype(int)) >= {0, 9}  # both extremes present
    assert np.all(np.isin(np.round(vis * 9).astype(int), np.arange(10)))
    assert ((vis > 0) & (vis < 1)).any()  # fractional taps along the edge


def test_visibility_slope_bias_prevents_acne():
    cam = light_cam()
    # stored depth equals the fragment depth: only the bias keeps it lit
    dm = DepthMap(depth=np.full((32, 32), 4.0, dtype=np.float32), camera=cam)
    pts = np.array([[0.0, 0.0, -4.0]])
    steep = np.array([[0.0, 0.9995, 0.0312]])  # nearly perpendicular to the light ray
    vis = visibility_pcf(pts, steep / np.linalg.norm(steep), np.zeros(3), dm, 1.0)
    assert vis[0] == 1.0


# ------------------------------------------------------------------- lights


def test_direct_lighting_inverse_square():
    pts = np.zeros((1, 3))
    normals = Z[None]
    wo = Z[None]
    albedo = np.full((1, 3), 0.5)

    def run(dist, intensity=8.0):
        light = PointLight(position=(0.0, 0.0, dist), intensity=intensity)
        return direct_lighting(pts, normals, wo, albedo, [0.0], [0.6], [light], {}, 1.0)

    near, far = run(2.0), run(4.0)
    assert near[0] == pytest.approx(far[0] * 4.0)  # same geometry, quarter falloff
    assert run(2.0, 16.0)[0] == pytest.approx(near[0] * 2.0)  # linear in intensity


def test_direct_lighting_sums_lights():
    pts = np.zeros((2, 3))
    normals = np.tile(Z, (2, 1))
    wo = np.tile(Z, (2, 1))
    albedo = np.full((2, 3), 0.7)
    la = PointLight(position=(0.0, 1.0, 2.0), intensity=3.0, color=(1.0, 0.5, 0.2))
    lb = PointLight(position=(1.0, -1.0, 3.0), intensity=5.0)
    both = direct_lighting(pts, normals, wo, albedo, [0.0, 1.0], [0.4, 0.4],
                           [la, lb], {}, 1.0)
    one = direct_lighting(pts, normals, wo, albedo, [0.0, 1.0], [0.4, 0.4], [la], {}, 1.0)
    two = direct_lighting(pts, normals, wo, albedo, [0.0, 1.0], [0.4, 0.4], [lb], {}, 1.0)
    assert both == pytest.approx(one + two)


def test_direct_lighting_respects_shadow_map():
    cam = light_cam()
    block = DepthMap(depth=np.full((32, 32), 0.6, dtype=np.float32), camera=cam)
    pts = np.array([[0.0, 0.0, -4.0]])
    light = PointLight(position=(0.0, 0.0, 0.0), intensity=4.0)
    lit = direct_lighting(pts, Z[None], Z[None], np.ones((1, 3)), [0.0], [0.5],
                          [light], {}, 1.0)
    dark = direct_lighting(pts, Z[None], Z[None], np.ones((1, 3)), [0.0], [0.5],
                           [light], {0: block}, 1.0)
    assert lit[0].sum() > 0
    assert dark[0] == pytest.approx([0, 0, 0])


# ------------------------------------------------------------------ ambient


def test_ambient_none_ibl_is_black():
    out = ambient_ibl(Z[None], Z[None], np.ones((1, 3)), [0.0], [0.5], None, [1.0])
    assert np.array_equal(out, np.zeros((1, 3)))


def test_ambient_furnace_returns_unit_radiance(white_furnace_ibl):
    n = 64
    normals = unit_rows(n, 48)
    wo = normals  # view along the normal
    for metal in (0.0, 1.0):
        out = ambient_ibl(normals, wo, np.ones((n, 3)), np.full(n, metal),
                          np.full(n, 0.5), white_furnace_ibl, np.ones(n))
        assert out == pytest.approx(np.ones((n, 3)), abs=0.02)


def test_ambient_scales_with_ao(small_ibl):
    normals = Z[None]
    args = (normals, normals, np.full((1, 3), 0.8), [0.0], [0.3], small_ibl)
    full = ambient_ibl(*args, [1.0])
    half = ambient_ibl(*args, [0.5])
    assert half == pytest.approx(full * 0.5)


# ------------------------------------------------------------------ compose


def make_maps(w=4, h=3):
    gb = GBuffer(w, h)
    return gb.decode_maps()


def default_settings(**kw):
    return EffectSettings(**kw)


def view_cam(w=4, h=3):
    return Camera(Pose.identity(), np.radians(60.0), 0.1, 100.0, w, h)


def test_compose_env_background(small_ibl):
    maps = make_maps()
    hdr = compose(maps, view_cam(), [], {}, small_ibl, default_settings(),
                  np.ones((3, 4)), np.ones((3, 4)), 1.0)
    assert hdr == pytest.approx(np.full((3, 4, 3), 0.5))


def test_compose_solid_background():
    maps = make_maps()
    settings = default_settings(background=Background.SOLID,
                                background_color=(0.1, 0.2, 0.3))
    hdr = compose(maps, view_cam(), [], {}, None, settings,
                  np.ones((3, 4)), np.ones((3, 4)), 1.0)
    assert hdr == pytest.approx(np.broadcast_to([0.1, 0.2, 0.3], (3, 4, 3)))


def test_compose_flat_pixels_use_edl_and_ao():
    gb = GBuffer(4, 3)
    gb.write_fragments([5], [2.0], np.array([[1.0, 0.5, 0.25]]), None, [0.0], [1.0])
    maps = gb.decode_maps()
    edl = np.ones((3, 4))
    edl[1, 1] = 0.5
    ao = np.ones((3, 4))
    ao[1, 1] = 0.8
    settings = default_settings(background=Background.SOLID, background_color=(0, 0, 0))
    hdr = compose(maps, view_cam(), [], {}, None, settings, ao, edl, 1.0)
    assert hdr[1, 1] == pytest.approx(maps["albedo"][1, 1] * 0.5 * 0.8)


def test_compose_matches_standalone_shading(small_ibl):
    w, h = 5, 4
    gb = GBuffer(w, h)
    gb.write_fragments([7, 12], [2.0, 3.0],
                       np.array([[0.8, 0.2, 0.1], [0.3, 0.6, 0.9]]),
                       np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),
                       [0.0, 1.0], [0.4, 0.7])
    maps = gb.decode_maps()
    cam = view_cam(w, h)
    light = PointLight(position=(1.0, 2.0, 3.0), intensity=6.0)
    ao = np.full((h, w), 0.9)
    hdr = compose(maps, cam, [light], {}, small_ibl, default_settings(),
                  ao, np.ones((h, w)), 1.0)

    pbr = maps["covered"] & maps["has_normal"]
    py, px = np.nonzero(pbr)
    rays = cam.pixel_rays(px + 0.5, py + 0.5)
    pos = cam.position + rays * maps["depth"][pbr][:, None]
    wo = -rays / np.linalg.norm(rays, axis=-1, keepdims=True)
    expect = direct_lighting(pos, maps["normal"][pbr], wo, maps["albedo"][pbr],
                             maps["metalness"][pbr], maps["roughness"][pbr],
                             [light], {}, 1.0)
    expect += ambient_ibl(maps["normal"][pbr], wo, maps["albedo"][pbr],
                          maps["metalness"][pbr], maps["roughness"][pbr],
                          small_ibl, ao[pbr])
    assert np.array_equal(hdr[pbr], expect)  # masked eval is bit-identical


def test_compose_rejects_mismatched_effect_maps():
    with pytest.raises(PipelineAssemblyError):
        compose(make_maps(), view_cam(), [], {}, None, default_settings(),
                np.ones((2, 2)), np.ones((3, 4)), 1.0)
