"""Procedural geometry used by demos, benchmarks and the test suite."""

from __future__ import annotations

import numpy as np

from .geom import Material, Mesh, compute_vertex_normals


def uv_sphere(n_lat=32, n_lon=48, radius=1.0, center=(0.0, 0.0, 0.0), **mesh_kw):
    """Watertight UV sphere with exact analytic normals."""
    lats = np.linspace(0.0, np.pi, n_lat + 1)
    lons = np.linspace(0.0, 2.0 * np.pi, n_lon, endpoint=False)
    ring_lats = lats[1:-1]
    lon_g, lat_g = np.meshgrid(lons, ring_lats)
    x = np.sin(lat_g) * np.cos(lon_g)
    y = np.cos(lat_g)
    z = np.sin(lat_g) * np.sin(lon_g)
    pts = np.stack([x, y, z], axis=-1).reshape(-1, 3)
    pts = np.concatenate([[[0.0, 1.0, 0.0]], pts, [[0.0, -1.0, 0.0]]], axis=0)

    faces = []
    top = 0
    bottom = len(pts) - 1

    def ring(i, j):
        return 1 + i * n_lon + (j % n_lon)

    for j in range(n_lon):
        faces.append((top, ring(0, j + 1), ring(0, j)))
        faces.append((bottom, ring(len(ring_lats) - 1, j), ring(len(ring_lats) - 1, j + 1)))
    for i in range(len(ring_lats) - 1):
        for j in range(n_lon):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            faces.append((a, b, d))
            faces.append((a, d, c))
    V = pts * radius + np.asarray(center, dtype=np.float64)
    return Mesh(V=V, N=pts.copy(), F=np.asarray(faces, dtype=np.int64), **mesh_kw)


def icosphere(subdivisions=3, radius=1.0, center=(0.0, 0.0, 0.0), **mesh_kw):
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
            (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
            (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = np.asarray(verts[a]) + np.asarray(verts[b])
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(tuple(m))
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    unit = np.asarray(verts, dtype=np.float64)
    V = unit * radius + np.asarray(center, dtype=np.float64)
    return Mesh(V=V, N=unit.copy(), F=np.asarray(faces, dtype=np.int64), **mesh_kw)


def box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0), **mesh_kw):
    """Axis-aligned box with faceted normals (vertices duplicated per face)."""
    sx, sy, sz = (s / 2.0 for s in np.broadcast_to(np.asarray(size, dtype=np.float64), (3,)))
    c = np.asarray(center, dtype=np.float64)
    quads = [
        ([+1, 0, 0], [(+sx, -sy, -sz), (+sx, +sy, -sz), (+sx, +sy, +sz), (+sx, -sy, +sz)]),
        ([-1, 0, 0], [(-sx, -sy, +sz), (-sx, +sy, +sz), (-sx, +sy, -sz), (-sx, -sy, -sz)]),
        ([0, +1, 0], [(-sx, +sy, -sz), (-sx, +sy, +sz), (+sx, +sy, +sz), (+sx, +sy, -sz)]),
        ([0, -1, 0], [(-sx, -sy, +sz), (-sx, -sy, -sz), (+sx, -sy, -sz), (+sx, -sy, +sz)]),
        ([0, 0, +1], [(-sx, -sy, +sz), (+sx, -sy, +sz), (+sx, +sy, +sz), (-sx, +sy, +sz)]),
        ([0, 0, -1], [(+sx, -sy, -sz), (-sx, -sy, -sz), (-sx, +sy, -sz), (+sx, +sy, -sz)]),
    ]
    V, N, F = [], [], []
    for normal, corners in quads:
        base = len(V)
        V += [c + np.asarray(p) for p in corners]
        N += [np.asarray(normal, dtype=np.float64)] * 4
        F += [(base, base + 1, base + 2), (base, base + 2, base + 3)]
    return Mesh(V=np.asarray(V), N=np.asarray(N), F=np.asarray(F, dtype=np.int64), **mesh_kw)


def plane(size=2.0, resolution=1, center=(0.0, 0.0, 0.0), normal_axis="z", **mesh_kw):
    """Square grid plane facing +axis."""
    lin = np.linspace(-size / 2.0, size / 2.0, resolution + 1)
    a, b = np.meshgrid(lin, lin)
    flat = np.zeros_like(a)
    if normal_axis == "z":
        pts = np.stack([a, b, flat], axis=-1)
        n = (0.0, 0.0, 1.0)
    elif normal_axis == "y":
        pts = np.stack([a, flat, b], axis=-1)
        n = (0.0, 1.0, 0.0)
    else:
        pts = np.stack([flat, a, b], axis=-1)
        n = (1.0, 0.0, 0.0)
    V = pts.reshape(-1, 3) + np.asarray(center, dtype=np.float64)
    F = []
    stride = resolution + 1
    for i in range(resolution):
        for j in range(resolution):
            v0 = i * stride + j
            F += [(v0, v0 + 1, v0 + stride), (v0 + 1, v0 + stride + 1, v0 + stride)]
    N = np.tile(np.asarray(n, dtype=np.float64), (V.shape[0], 1))
    return Mesh(V=V, N=N, F=np.asarray(F, dtype=np.int64), **mesh_kw)


def surfelize(mesh: Mesh, radius_scale=0.8, **mesh_kw):
    """Strip faces and attach tangent frames sized to the local vertex spacing.

    Tangent rows carry the splat radius in their magnitude; B holds the
    bitangent radius.  Radii default to radius_scale times the mean incident
    edge length so neighboring splats overlap.
    """
    if not mesh.has_faces:
        raise ValueError("surfelize needs faces to estimate spacing")
    V, F = mesh.V, mesh.F
    N = mesh.N if mesh.has_normals else compute_vertex_normals(V, F)
    edges = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]], axis=0)
    lengths = np.linalg.norm(V[edges[:, 0]] - V[edges[:, 1]], axis=1)
    acc = np.zeros(V.shape[0])
    cnt = np.zeros(V.shape[0])
    for k in range(2):
        np.add.at(acc, edges[:, k], lengths)
        np.add.at(cnt, edges[:, k], 1.0)
    spacing = acc / np.maximum(cnt, 1.0)
    radius = radius_scale * spacing

    helper = np.where(np.abs(N[:, 1:2]) < 0.9, [[0.0, 1.0, 0.0]], [[1.0, 0.0, 0.0]])
    t = np.cross(N, helper)
    t /= np.linalg.norm(t, axis=1)[:, None]
    kw = dict(material=mesh.material, name=mesh.name + "_surfels")
    kw.update(mesh_kw)
    return Mesh(V=V.copy(), N=N.copy(), C=mesh.C.copy() if mesh.has_colors else None,
                T=t * radius[:, None], B=radius.copy(), **kw)


def grid_point_cloud(n=24, size=1.0, center=(0.0, 0.0, 0.0), colored=True, **mesh_kw):
    lin = np.linspace(-size / 2.0, size / 2.0, n)
    x, y, z = np.meshgrid(lin, lin, lin)
    V = np.stack([x, y, z], axis=-1).reshape(-1, 3) + np.asarray(center, dtype=np.float64)
    C = None
    if colored:
        C = (V - V.min(axis=0)) / max(float(np.ptp(V, axis=0).max()), 1e-12)
    return Mesh(V=V, C=C, **mesh_kw)


def wire_box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0), **mesh_kw):
    """Twelve-edge box outline as a line set."""
    sx, sy, sz = (s / 2.0 for s in np.broadcast_to(np.asarray(size, dtype=np.float64), (3,)))
    c = np.asarray(center, dtype=np.float64)
    corners = np.array(
        [(x, y, z) for x in (-sx, sx) for y in (-sy, sy) for z in (-sz, sz)]
    ) + c
    E = [
        (0, 1), (2, 3), (4, 5), (6, 7),
        (0, 2), (1, 3), (4, 6), (5, 7),
        (0, 4), (1, 5), (2, 6), (3, 7),
    ]
    return Mesh(V=corners, E=np.asarray(E, dtype=np.int64), **mesh_kw)
