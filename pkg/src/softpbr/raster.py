"""Software rasterization passes feeding the G-Buffer.

Triangles are rasterized with integer edge functions on a 1/256 subpixel
grid (top-left fill rule, so triangles sharing an edge neither gap nor
double-write), perspective-correct barycentrics, and a keep-nearest depth
test.  Points land on the pixel nearest their projection.  Surfels splat as
camera-facing-ish rectangles whose fragments are discarded outside the
inscribed ellipse and accumulated additively within a depth tolerance band.
Lines are drawn forward into the composed image after shading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, WrongPassError
from .gbuffer import GBuffer, Precision
from .geom import Mesh, Pose, VisualizationMode, bounding_sphere, world_pose
from .scene import Camera

SUBPIXEL = 256  # subpixel grid resolution for snapped vertex coordinates
COORD_LIMIT = 1 << 28  # clamp for snapped coords; keeps edge products in int64
SURFEL_MIN_WEIGHT = 0.05
SURFEL_DEPTH_BAND = 1e-3  # times scene scale
CHUNK_CANDIDATES = 1 << 22


@dataclass
class DepthMap:
    depth: np.ndarray  # (H, W) float32 linear view depth, +inf background
    camera: Camera


# ----------------------------------------------------------- shared plumbing


def _snap(camera, pts_cam):
    """Camera-space points -> snapped subpixel int coords + positive depth."""
    d = -pts_cam[..., 2]
    f = camera.focal
    sx = camera.width / 2.0 + f * (pts_cam[..., 0] / d)
    sy = camera.height / 2.0 - f * (pts_cam[..., 1] / d)
    sub_x = np.clip(np.floor(sx * SUBPIXEL + 0.5), -COORD_LIMIT, COORD_LIMIT).astype(np.int64)
    sub_y = np.clip(np.floor(sy * SUBPIXEL + 0.5), -COORD_LIMIT, COORD_LIMIT).astype(np.int64)
    return sub_x, sub_y, d


def _clip_triangles_near(tris, attrs, near):
    """Sutherland-Hodgman clip against the near plane (view depth >= near).

    tris: (T,3,3) camera-space positions; attrs: (T,3,A).  Returns clipped
    (T',3,3), (T',3,A).  Fully inside triangles pass through untouched.
    """
    d = -tris[:, :, 2]
    inside = d >= near
    count = inside.sum(axis=1)
    keep = count == 3
    cross = (count == 1) | (count == 2)
    out_t = [tris[keep]]
    out_a = [attrs[keep]]
    for ti in np.nonzero(cross)[0]:
        poly_p, poly_a = [], []
        for i in range(3):
            j = (i + 1) % 3
            pi, pj = tris[ti, i], tris[ti, j]
            ai, aj = attrs[ti, i], attrs[ti, j]
            di, dj = d[ti, i], d[ti, j]
            if di >= near:
                poly_p.append(pi)
                poly_a.append(ai)
            if (di >= near) != (dj >= near):
                t = (near - di) / (dj - di)
                poly_p.append(pi + t * (pj - pi))
                poly_a.append(ai + t * (aj - ai))
        for k in range(1, len(poly_p) - 1):
            out_t.append(np.array([poly_p[0], poly_p[k], poly_p[k + 1]])[None])
            out_a.append(np.array([poly_a[0], poly_a[k], poly_a[k + 1]])[None])
    return np.concatenate(out_t, axis=0), np.concatenate(out_a, axis=0)


def _edge_claims(ax, ay, bx, by):
    """Top-left rule for directed edge a->b of a positively oriented triangle."""
    return ((ay == by) & (bx > ax)) | (by < ay)


def _triangle_fragments(camera, tri_cam, tri_attrs, keep_all=False):
    """Rasterize camera-space triangles.

    Returns (pix, depth, attrs, order) where pix are linear pixel indices.
    keep_all=False resolves the nearest fragment per pixel (ties go to the
    earlier triangle); keep_all=True returns every covered fragment in
    deterministic triangle-then-scanline order for splat accumulation.
    """
    W, H = camera.width, camera.height
    A = tri_attrs.shape[-1]
    empty = (np.zeros(0, np.int64), np.zeros(0), np.zeros((0, A)), np.zeros(0, np.int64))
    if tri_cam.shape[0] == 0:
        return empty
    tri_cam, tri_attrs = _clip_triangles_near(tri_cam, tri_attrs, camera.near)
    if tri_cam.shape[0] == 0:
        return empty

    sx, sy, depth = _snap(camera, tri_cam)

    # winding: make orient2d(v0, v1, v2) positive by swapping v1/v2
    area2 = (sx[:, 1] - sx[:, 0]) * (sy[:, 2] - sy[:, 0]) - (sy[:, 1] - sy[:, 0]) * (sx[:, 2] - sx[:, 0])
    flip = area2 < 0
    if flip.any():
        sx[flip] = sx[flip][:, [0, 2, 1]]
        sy[flip] = sy[flip][:, [0, 2, 1]]
        depth[flip] = depth[flip][:, [0, 2, 1]]
        tri_attrs = tri_attrs.copy()
        tri_attrs[flip] = tri_attrs[flip][:, [0, 2, 1]]
        area2 = np.abs(area2)
    ok = area2 > 0
    if not ok.all():
        sx, sy, depth, tri_attrs, area2 = sx[ok], sy[ok], depth[ok], tri_attrs[ok], area2[ok]
    if sx.shape[0] == 0:
        return empty

    # pixel bbox: centers at SUBPIXEL*i + SUBPIXEL/2
    half = SUBPIXEL // 2
    lo_x = sx.min(axis=1) - half
    hi_x = sx.max(axis=1) - half
    lo_y = sy.min(axis=1) - half
    hi_y = sy.max(axis=1) - half
    x0 = np.maximum(-(-lo_x // SUBPIXEL), 0)
    x1 = np.minimum(hi_x // SUBPIXEL, W - 1)
    y0 = np.maximum(-(-lo_y // SUBPIXEL), 0)
    y1 = np.minimum(hi_y // SUBPIXEL, H - 1)
    bw = x1 - x0 + 1
    bh = y1 - y0 + 1
    nonempty = (bw > 0) & (bh > 0)
    if not nonempty.all():
        sel = np.nonzero(nonempty)[0]
        sx, sy, depth, tri_attrs, area2 = sx[sel], sy[sel], depth[sel], tri_attrs[sel], area2[sel]
        x0, y0, bw, bh = x0[sel], y0[sel], bw[sel], bh[sel]
    if sx.shape[0] == 0:
        return empty

    # per-edge top-left bias, edges (v1->v2), (v2->v0), (v0->v1)
    bias = np.stack(
        [
            np.where(_edge_claims(sx[:, 1], sy[:, 1], sx[:, 2], sy[:, 2]), 0, -1),
            np.where(_edge_claims(sx[:, 2], sy[:, 2], sx[:, 0], sy[:, 0]), 0, -1),
            np.where(_edge_claims(sx[:, 0], sy[:, 0], sx[:, 1], sy[:, 1]), 0, -1),
        ],
        axis=1,
    ).astype(np.int64)

    areas = (bw * bh).astype(np.int64)
    results = []
    start = 0
    n_tri = sx.shape[0]
    csum = np.concatenate([[0], np.cumsum(areas)])
    while start < n_tri:
        stop = int(np.searchsorted(csum, csum[start] + CHUNK_CANDIDATES, side="left"))
        stop = max(stop, start + 1)
        stop = min(stop, n_tri)
        sl = slice(start, stop)
        results.append(
            _raster_chunk(sx[sl], sy[sl], depth[sl], tri_attrs[sl], area2[sl], bias[sl],
                          x0[sl], y0[sl], bw[sl], bh[sl], W, start)
        )
        start = stop
    pix = np.concatenate([r[0] for r in results])
    dep = np.concatenate([r[1] for r in results])
    att = np.concatenate([r[2] for r in results]) if A else np.zeros((len(pix), 0))
    src = np.concatenate([r[3] for r in results])
    if keep_all or len(pix) == 0:
        return pix, dep, att, src

    order = np.lexsort((np.arange(len(pix)), dep, pix))
    spix = pix[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = spix[1:] != spix[:-1]
    sel = order[first]
    return pix[sel], dep[sel], att[sel] if A else att, src[sel]


def _raster_chunk(sx, sy, depth, attrs, area2, bias, x0, y0, bw, bh, W, tri_base):
    A = attrs.shape[-1]
    areas = (bw * bh).astype(np.int64)
    total = int(areas.sum())
    if total == 0:
        return (np.zeros(0, np.int64), np.zeros(0), np.zeros((0, A)), np.zeros(0, np.int64))
    tri_of = np.repeat(np.arange(len(areas), dtype=np.int64), areas)
    starts = np.concatenate([[0], np.cumsum(areas)[:-1]])
    offs = np.arange(total, dtype=np.int64) - np.repeat(starts, areas)
    px = x0[tri_of] + offs % bw[tri_of]
    py = y0[tri_of] + offs // bw[tri_of]
    cx = px * SUBPIXEL + SUBPIXEL // 2
    cy = py * SUBPIXEL + SUBPIXEL // 2

    ax, ay = sx[tri_of, 0], sy[tri_of, 0]
    bx, by = sx[tri_of, 1], sy[tri_of, 1]
    qx, qy = sx[tri_of, 2], sy[tri_of, 2]
    e0 = (qx - bx) * (cy - by) - (qy - by) * (cx - bx)
    e1 = (ax - qx) * (cy - qy) - (ay - qy) * (cx - qx)
    e2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    inside = (
        (e0 + bias[tri_of, 0] >= 0)
        & (e1 + bias[tri_of, 1] >= 0)
        & (e2 + bias[tri_of, 2] >= 0)
    )
    if not inside.any():
        return (np.zeros(0, np.int64), np.zeros(0), np.zeros((0, A)), np.zeros(0, np.int64))
    idx = np.nonzero(inside)[0]
    tri_of = tri_of[idx]
    a2 = area2[tri_of].astype(np.float64)
    b0 = e0[idx].astype(np.float64) / a2
    b1 = e1[idx].astype(np.float64) / a2
    b2 = e2[idx].astype(np.float64) / a2
    d0, d1, d2 = depth[tri_of, 0], depth[tri_of, 1], depth[tri_of, 2]
    inv_d = b0 / d0 + b1 / d1 + b2 / d2
    frag_d = 1.0 / inv_d
    if A:
        w0 = (b0 / d0) * frag_d
        w1 = (b1 / d1) * frag_d
        w2 = (b2 / d2) * frag_d
        frag_a = (
            attrs[tri_of, 0] * w0[:, None]
            + attrs[tri_of, 1] * w1[:, None]
            + attrs[tri_of, 2] * w2[:, None]
        )
    else:
        frag_a = np.zeros((len(idx), 0))
    pix = py[idx] * W + px[idx]
    return pix, frag_d, frag_a, tri_of + tri_base


def sample_texture(tex, uv):
    """Bilinear texture lookup; v=0 is the bottom row, coords clamp at edges."""
    h, w = tex.shape[:2]
    u = np.asarray(uv[:, 0], dtype=np.float64)
    v = np.asarray(uv[:, 1], dtype=np.float64)
    x = np.clip(u * w - 0.5, 0.0, w - 1.0)
    y = np.clip((1.0 - v) * h - 0.5, 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[:, None]
    fy = (y - y0)[:, None]
    return (
        tex[y0, x0] * (1 - fx) * (1 - fy)
        + tex[y0, x1] * fx * (1 - fy)
        + tex[y1, x0] * (1 - fx) * fy
        + tex[y1, x1] * fx * fy
    )


# ------------------------------------------------------------------- passes


def _world_triangles(mesh, pose, attrs_per_vertex):
    V = pose.transform_points(mesh.V)
    tri = V[mesh.F]
    att = attrs_per_vertex[mesh.F]
    return tri, att


def rasterize_mesh(mesh: Mesh, pose: Pose, camera: Camera, gbuf: GBuffer):
    """Triangle pass: albedo/normal/material into a Byte8 G-Buffer."""
    if not mesh.has_faces:
        raise WrongPassError(f"object '{mesh.name}' has no triangles")
    if gbuf.precision != Precision.BYTE8:
        raise WrongPassError("mesh pass writes Byte8 buffers")
    mat = mesh.material
    normals = pose.rotate(mesh.N)
    mode = mat.mode
    if mode == VisualizationMode.PER_VERTEX and not mesh.has_colors:
        mode = VisualizationMode.SOLID
    if mode == VisualizationMode.PER_VERTEX:
        attrs = np.concatenate([normals, mesh.C], axis=1)
    elif mode == VisualizationMode.TEXTURED:
        attrs = np.concatenate([normals, mat.uv], axis=1)
    else:
        attrs = normals
    tri_w, tri_a = _world_triangles(mesh, pose, attrs)
    tri_cam = camera.camera_space(tri_w.reshape(-1, 3)).reshape(tri_w.shape)
    pix, depth, att, _ = _triangle_fragments(camera, tri_cam, tri_a)
    if len(pix) == 0:
        return 0
    y, x = np.divmod(pix, gbuf.width)
    closer = depth.astype(np.float32) < gbuf.rt3[y, x]
    pix, depth, att = pix[closer], depth[closer], att[closer]
    if len(pix) == 0:
        return 0
    n = att[:, 0:3]
    norms = np.linalg.norm(n, axis=1)
    n = np.where(norms[:, None] > 1e-9, n / np.maximum(norms, 1e-9)[:, None],
                 np.array([0.0, 0.0, 1.0]))
    if mode == VisualizationMode.PER_VERTEX:
        albedo = np.clip(att[:, 3:6], 0.0, 1.0)
    elif mode == VisualizationMode.TEXTURED:
        albedo = np.clip(sample_texture(mat.texture, att[:, 3:5]), 0.0, 1.0)
    else:
        albedo = np.broadcast_to(mat.albedo, (len(pix), 3))
    gbuf.write_fragments(pix, depth, albedo, n, mat.metalness, mat.roughness)
    return len(pix)


def rasterize_points(mesh: Mesh, pose: Pose, camera: Camera, gbuf: GBuffer):
    """Point pass: one pixel per vertex, nearest-center, normals left zero."""
    if gbuf.precision != Precision.BYTE8:
        raise WrongPassError("point pass writes Byte8 buffers")
    if mesh.n_vertices == 0:
        return 0
    V = pose.transform_points(mesh.V)
    xy, depth = camera.project(V)
    ok = (depth >= camera.near) & np.isfinite(xy).all(axis=1)
    px = np.floor(xy[:, 0]).astype(np.int64)
    py = np.floor(xy[:, 1]).astype(np.int64)
    ok &= (px >= 0) & (px < camera.width) & (py >= 0) & (py < camera.height)
    if not ok.any():
        return 0
    idx = np.nonzero(ok)[0]
    pix = py[idx] * gbuf.width + px[idx]
    d = depth[idx]
    order = np.lexsort((idx, d, pix))
    spix = pix[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = spix[1:] != spix[:-1]
    sel = order[first]
    pix, d, vid = pix[sel], d[sel], idx[sel]
    y, x = np.divmod(pix, gbuf.width)
    closer = d.astype(np.float32) < gbuf.rt3[y, x]
    pix, d, vid = pix[closer], d[closer], vid[closer]
    if len(pix) == 0:
        return 0
    if mesh.has_colors:
        albedo = np.clip(mesh.C[vid], 0.0, 1.0)
    else:
        albedo = np.broadcast_to(mesh.material.albedo, (len(pix), 3))
    gbuf.write_fragments(pix, d, albedo, None, mesh.material.metalness,
                         mesh.material.roughness)
    return len(pix)


def _surfel_quads(mesh: Mesh, pose: Pose):
    tn = np.linalg.norm(mesh.T, axis=1)
    r_t = tn * pose.scale
    r_b = mesh.B * pose.scale
    centers = pose.transform_points(mesh.V)
    n_dir = pose.rotate(mesh.N)
    t_dir = pose.rotate(mesh.T / tn[:, None])
    b_dir = np.cross(n_dir, t_dir)
    b_dir /= np.maximum(np.linalg.norm(b_dir, axis=1), 1e-12)[:, None]
    # corners in (u, v) order (-1,-1), (1,-1), (1,1), (-1,1)
    us = np.array([-1.0, 1.0, 1.0, -1.0])
    vs = np.array([-1.0, -1.0, 1.0, 1.0])
    corners = (
        centers[:, None, :]
        + us[None, :, None] * r_t[:, None, None] * t_dir[:, None, :]
        + vs[None, :, None] * r_b[:, None, None] * b_dir[:, None, :]
    )
    return corners, n_dir, us, vs


def rasterize_surfels(mesh: Mesh, pose: Pose, camera: Camera, gbuf: GBuffer,
                      scene_scale=None, phase="both"):
    """Surfel splat pass into a Half16 buffer.

    Each vertex becomes a world-space rectangle spanned by its tangent frame;
    fragments outside the inscribed ellipse are discarded, the rest accumulate
    additively with kernel weight w = max(1 - (u^2+v^2), 0.05) when their depth
    sits within a tolerance band of the nearest splat at that pixel.  phase
    selects the depth prepass, the accumulation pass, or both (single object).
    """
    if not (mesh.has_normals and mesh.has_tangents and mesh.B.size):
        raise WrongPassError(f"object '{mesh.name}' lacks N/T/B for surfel splatting")
    if mesh.has_faces:
        raise WrongPassError(f"object '{mesh.name}' has faces; surfel pass is for splats")
    if gbuf.precision != Precision.HALF16:
        raise WrongPassError("surfel pass accumulates into Half16 buffers")
    if phase not in ("both", "depth", "accumulate"):
        raise InvalidArgument(f"unknown surfel phase '{phase}'")

    corners, n_dir, us, vs = _surfel_quads(mesh, pose)
    n_srf = corners.shape[0]
    if mesh.has_colors:
        alb = np.clip(mesh.C, 0.0, 1.0)
    else:
        alb = np.broadcast_to(mesh.material.albedo, (n_srf, 3))
    # per-corner attrs: u, v, albedo rgb, normal xyz
    attrs = np.empty((n_srf, 4, 8))
    attrs[:, :, 0] = us[None, :]
    attrs[:, :, 1] = vs[None, :]
    attrs[:, :, 2:5] = alb[:, None, :]
    attrs[:, :, 5:8] = n_dir[:, None, :]
    tri_idx = np.array([[0, 1, 2], [0, 2, 3]])
    tris = corners[:, tri_idx, :].reshape(-1, 3, 3)
    tri_attrs = attrs[:, tri_idx, :].reshape(-1, 3, 8)
    tri_cam = camera.camera_space(tris.reshape(-1, 3)).reshape(tris.shape)
    pix, depth, att, _ = _triangle_fragments(camera, tri_cam, tri_attrs, keep_all=True)
    if len(pix) == 0:
        return 0
    r2 = att[:, 0] ** 2 + att[:, 1] ** 2
    keep = r2 <= 1.0
    pix, depth, att, r2 = pix[keep], depth[keep], att[keep], r2[keep]
    if len(pix) == 0:
        return 0
    if scene_scale is None:
        _, scene_scale = bounding_sphere(corners.reshape(-1, 3))
        scene_scale = max(scene_scale, 1e-12)
    if phase in ("both", "depth"):
        gbuf.update_min_depth(pix, depth)
    written = 0
    if phase in ("both", "accumulate"):
        y, x = np.divmod(pix, gbuf.width)
        band = SURFEL_DEPTH_BAND * scene_scale
        accept = depth.astype(np.float32) <= gbuf.rt3[y, x] + np.float32(band)
        if accept.any():
            w = np.maximum(1.0 - r2[accept], SURFEL_MIN_WEIGHT)
            mat = mesh.material
            gbuf.accumulate(pix[accept], w, att[accept, 2:5], att[accept, 5:8],
                            mat.metalness, mat.roughness)
            written = int(accept.sum())
    return written


def render_depth_only(scene, light) -> DepthMap:
    """Depth pass from a light's point of view over all visible geometry."""
    size = scene.settings.shadow_map_size
    center, radius = scene.center, scene.scale
    r = radius if radius > 0 else 1.0
    dist = float(np.linalg.norm(light.position - center))
    dist = max(dist, 1e-6 * r)
    fov = 2.0 * np.arcsin(min(r / dist, 0.99)) * 1.15
    fov = float(np.clip(fov, 0.02, 2.9))
    near = max(dist - 1.5 * r, r / 1000.0)
    far = dist + 2.5 * r
    cam = Camera.look_at(light.position, center, vertical_fov=fov, near=near, far=far,
                         width=size, height=size)
    depth = np.full((size, size), np.inf, dtype=np.float32)

    def splat_depth(pix, d):
        if len(pix) == 0:
            return
        y, x = np.divmod(pix, size)
        np.minimum.at(depth, (y, x), d.astype(np.float32))

    for mesh in scene.objects:
        if not mesh.visible or mesh.n_vertices == 0:
            continue
        pose = world_pose(mesh)
        if mesh.has_faces:
            tri_w, _ = _world_triangles(mesh, pose, np.zeros((mesh.n_vertices, 0)))
            tri_cam = cam.camera_space(tri_w.reshape(-1, 3)).reshape(tri_w.shape)
            pix, d, _, _ = _triangle_fragments(cam, tri_cam, np.zeros(tri_w.shape[:2] + (0,)),
                                               keep_all=True)
            splat_depth(pix, d)
        elif mesh.has_tangents and mesh.B.size:
            corners, _, _, _ = _surfel_quads(mesh, pose)
            tri_idx = np.array([[0, 1, 2], [0, 2, 3]])
            tris = corners[:, tri_idx, :].reshape(-1, 3, 3)
            uv = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
            tri_attrs = np.broadcast_to(uv[tri_idx], (corners.shape[0], 2, 3, 2)).reshape(-1, 3, 2)
            tri_cam = cam.camera_space(tris.reshape(-1, 3)).reshape(tris.shape)
            pix, d, att, _ = _triangle_fragments(cam, tri_cam, np.ascontiguousarray(tri_attrs),
                                                 keep_all=True)
            if len(pix):
                keep = att[:, 0] ** 2 + att[:, 1] ** 2 <= 1.0
                splat_depth(pix[keep], d[keep])
        else:
            V = pose.transform_points(mesh.V)
            xy, d = cam.project(V)
            ok = (d >= cam.near) & np.isfinite(xy).all(axis=1)
            px = np.floor(xy[:, 0]).astype(np.int64)
            py = np.floor(xy[:, 1]).astype(np.int64)
            ok &= (px >= 0) & (px < size) & (py >= 0) & (py < size)
            splat_depth(py[ok] * size + px[ok], d[ok])
    return DepthMap(depth=depth, camera=cam)


# --------------------------------------------------------------------- lines


def _clip_segment_near(p0, p1, near):
    d0, d1 = -p0[2], -p1[2]
    if d0 < near and d1 < near:
        return None
    if d0 < near:
        t = (near - d0) / (d1 - d0)
        p0 = p0 + t * (p1 - p0)
    elif d1 < near:
        t = (near - d1) / (d0 - d1)
        p1 = p1 + t * (p0 - p1)
    return p0, p1


def _clip_segment_rect(x0, y0, x1, y1, w, h):
    """Liang-Barsky clip to [0, w-1] x [0, h-1]. Returns (t0, t1) or None."""
    t0, t1 = 0.0, 1.0
    dx, dy = x1 - x0, y1 - y0
    for p, q in ((-dx, x0 - 0.0), (dx, (w - 1.0) - x0), (-dy, y0 - 0.0), (dy, (h - 1.0) - y0)):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        r = q / p
        if p < 0.0:
            if r > t1:
                return None
            t0 = max(t0, r)
        else:
            if r < t0:
                return None
            t1 = min(t1, r)
    return t0, t1


def rasterize_lines(mesh: Mesh, pose: Pose, camera: Camera, hdr, rt3, scene_scale):
    """Draw line segments into the composed HDR image with a biased depth test."""
    if not mesh.has_edges:
        raise WrongPassError(f"object '{mesh.name}' has no line segments")
    color = mesh.material.line_color
    V_cam = camera.camera_space(pose.transform_points(mesh.V))
    f = camera.focal
    drawn = 0
    for a, b in mesh.E:
        seg = _clip_segment_near(V_cam[a], V_cam[b], camera.near)
        if seg is None:
            continue
        p0, p1 = seg
        d0, d1 = -p0[2], -p1[2]
        x0 = camera.width / 2.0 + f * (p0[0] / d0)
        y0 = camera.height / 2.0 - f * (p0[1] / d0)
        x1 = camera.width / 2.0 + f * (p1[0] / d1)
        y1 = camera.height / 2.0 - f * (p1[1] / d1)
        if not np.all(np.isfinite([x0, y0, x1, y1])):
            continue
        span = _clip_segment_rect(x0, y0, x1, y1, camera.width, camera.height)
        if span is None:
            continue
        t0, t1 = span
        xa, ya = x0 + t0 * (x1 - x0), y0 + t0 * (y1 - y0)
        xb, yb = x0 + t1 * (x1 - x0), y0 + t1 * (y1 - y0)
        ia, ja = int(np.floor(xa + 0.5)), int(np.floor(ya + 0.5))
        ib, jb = int(np.floor(xb + 0.5)), int(np.floor(yb + 0.5))
        steps = max(abs(ib - ia), abs(jb - ja))
        ts = np.linspace(0.0, 1.0, steps + 1)
        px = np.clip(np.floor(ia + ts * (ib - ia) + 0.5).astype(np.int64), 0, camera.width - 1)
        py = np.clip(np.floor(ja + ts * (jb - ja) + 0.5).astype(np.int64), 0, camera.height - 1)
        # inverse depth interpolates linearly in screen space
        tt = t0 + ts * (t1 - t0)
        inv_d = (1.0 - tt) / d0 + tt / d1
        d = 1.0 / inv_d
        buf = rt3[py, px].astype(np.float64)
        vis = d <= buf * 1.002 + 1e-3 * scene_scale
        hdr[py[vis], px[vis]] = color
        drawn += int(vis.sum())
    return drawn
