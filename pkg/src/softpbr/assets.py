"""File I/O: meshes (OBJ, PLY), Radiance HDR environments, PNG images,
baked environment sets, and the JSON scene description.

Bit-exact format contracts live in docs/formats.md.  Loaders sanitize
rather than crash: non-finite vertices are dropped (with a warning that
counts them) and every parse error carries file/line or JSON-pointer
context.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
import warnings

import numpy as np
from PIL import Image

from .errors import HdrFormatError, InvalidArgument, MeshLoadError, SceneFormatError
from .geom import Material, Mesh, Pose, VisualizationMode
from .ibl import Cubemap, IblSet, bake_ibl, cached_brdf_lut
from .scene import Camera, EffectSettings, PointLight, Scene
from . import shapes

DEFAULT_OUTPUT_SIZE = (640, 480)

# inline environment bakes (scene file pointing straight at an .hdr) trade
# sample counts for load time; use the bake command + {"baked": dir} for quality
INLINE_BAKE = dict(face_size=64, num_mips=5, irradiance_size=16,
                   irradiance_samples=1024, specular_samples=256)


# ---------------------------------------------------------------------- PNG


def write_png(img, path):
    """Write uint8 image atomically (temp file + rename)."""
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise InvalidArgument("write_png expects uint8")
    mode = "RGB" if img.ndim == 3 and img.shape[2] == 3 else "L"
    pil = Image.fromarray(img, mode=mode)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(suffix=".png", dir=d)
    try:
        with os.fdopen(fd, "wb") as fh:
            pil.save(fh, format="PNG")
        os.replace(tmp, path)
    except OSError as e:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"writing '{path}': {e}") from e


def read_png(path):
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except OSError as e:
        raise OSError(f"reading '{path}': {e}") from e


def read_texture(path):
    """PNG -> linear float rgb in [0,1] (display-gamma 2.2 decode)."""
    return (read_png(path).astype(np.float64) / 255.0) ** 2.2


# ------------------------------------------------------------- Radiance HDR


def _float_to_rgbe(img):
    img = np.maximum(np.asarray(img, dtype=np.float64), 0.0)
    v = img.max(axis=-1)
    man, exp = np.frexp(v)
    scale = np.where(v > 1e-32, np.ldexp(256.0, -exp), 0.0)
    rgbe = np.zeros(img.shape[:-1] + (4,), dtype=np.uint8)
    bytes_ = np.clip(np.floor(img * scale[..., None] + 0.5), 0, 255).astype(np.uint8)
    e = np.clip(exp + 128, 0, 255).astype(np.uint8)
    live = v > 1e-32
    rgbe[..., :3] = np.where(live[..., None], bytes_, 0)
    rgbe[..., 3] = np.where(live, e, 0)
    return rgbe


def _rgbe_to_float(rgbe):
    rgbe = np.asarray(rgbe, dtype=np.uint8)
    e = rgbe[..., 3].astype(np.int32)
    scale = np.where(e > 0, np.ldexp(np.ones_like(e, dtype=np.float64), e - 136), 0.0)
    return rgbe[..., :3].astype(np.float64) * scale[..., None]


def _rle_encode_channel(ch):
    """New-style Radiance RLE for one scanline channel (bytes object)."""
    out = bytearray()
    i = 0
    n = len(ch)
    while i < n:
        # find a run of >= 4 equal bytes starting at or after i
        run_start = i
        while run_start < n:
            run_len = 1
            while run_start + run_len < n and run_len < 127 \
                    and ch[run_start + run_len] == ch[run_start]:
                run_len += 1
            if run_len >= 4:
                break
            run_start += run_len
        else:
            run_start = n
        # literals up to the run
        lit = run_start if run_start < n else n
        j = i
        while j < lit:
            k = min(128, lit - j)
            out.append(k)
            out.extend(ch[j:j + k])
            j += k
        if run_start < n:
            run_len = 1
            while run_start + run_len < n and run_len < 127 \
                    and ch[run_start + run_len] == ch[run_start]:
                run_len += 1
            out.append(128 + run_len)
            out.append(ch[run_start])
            i = run_start + run_len
        else:
            break
    return bytes(out)


def write_hdr(img, path):
    """Radiance RGBE with new-style RLE scanlines; -Y +X orientation."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InvalidArgument(f"write_hdr expects (h, w, 3), got {img.shape}")
    h, w = img.shape[:2]
    rgbe = _float_to_rgbe(img)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(suffix=".hdr", dir=d)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(b"#?RADIANCE\n")
            fh.write(b"FORMAT=32-bit_rle_rgbe\n\n")
            fh.write(f"-Y {h} +X {w}\n".encode())
            use_rle = 8 <= w <= 32767
            for row in rgbe:
                if use_rle:
                    fh.write(bytes([2, 2, (w >> 8) & 0xFF, w & 0xFF]))
                    for c in range(4):
                        fh.write(_rle_encode_channel(row[:, c].tobytes()))
                else:
                    fh.write(row.tobytes())
        os.replace(tmp, path)
    except OSError as e:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"writing '{path}': {e}") from e


def read_hdr(path):
    """Radiance RGBE -> linear float rgb. Supports flat and RLE scanlines."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise OSError(f"reading '{path}': {e}") from e
    if not (data.startswith(b"#?RADIANCE") or data.startswith(b"#?RGBE")):
        raise HdrFormatError(f"'{path}': missing Radiance signature")
    pos = 0
    fmt_ok = False
    while True:
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise HdrFormatError(f"'{path}': truncated header")
        line = data[pos:nl]
        pos = nl + 1
        if line.startswith(b"FORMAT="):
            fmt_ok = line.strip() == b"FORMAT=32-bit_rle_rgbe"
        if line == b"":
            break
    if not fmt_ok:
        raise HdrFormatError(f"'{path}': FORMAT is not 32-bit_rle_rgbe")
    nl = data.find(b"\n", pos)
    res = data[pos:nl].split()
    pos = nl + 1
    if len(res) != 4 or res[0] != b"-Y" or res[2] != b"+X":
        raise HdrFormatError(f"'{path}': unsupported orientation {res}")
    h, w = int(res[1]), int(res[3])
    rgbe = np.zeros((h, w, 4), dtype=np.uint8)
    for y in range(h):
        if pos + 4 > len(data):
            raise HdrFormatError(f"'{path}': truncated at scanline {y}")
        b0, b1, b2, b3 = data[pos:pos + 4]
        if b0 == 2 and b1 == 2 and ((b2 << 8) | b3) == w and w >= 8:
            pos += 4
            row = np.empty((4, w), dtype=np.uint8)
            for c in range(4):
                x = 0
                while x < w:
                    if pos >= len(data):
                        raise HdrFormatError(f"'{path}': truncated RLE at scanline {y}")
                    count = data[pos]
                    pos += 1
                    if count > 128:
                        row[c, x:x + count - 128] = data[pos]
                        pos += 1
                        x += count - 128
                    elif count > 0:
                        row[c, x:x + count] = np.frombuffer(data[pos:pos + count], np.uint8)
                        pos += count
                        x += count
                    else:
                        raise HdrFormatError(f"'{path}': zero RLE count at scanline {y}")
                if x != w:
                    raise HdrFormatError(f"'{path}': RLE overrun at scanline {y}")
            rgbe[y] = row.T
        else:
            # flat scanline, with old-style (1,1,1,n) repeat codes
            x = 0
            shift = 0
            while x < w:
                if pos + 4 > len(data):
                    raise HdrFormatError(f"'{path}': truncated at scanline {y}")
                px = data[pos:pos + 4]
                pos += 4
                if px[0] == 1 and px[1] == 1 and px[2] == 1:
                    if x == 0:
                        raise HdrFormatError(f"'{path}': repeat code with no prior pixel")
                    n = px[3] << shift
                    rgbe[y, x:x + n] = rgbe[y, x - 1]
                    x += n
                    shift += 8
                else:
                    rgbe[y, x] = np.frombuffer(px, np.uint8)
                    x += 1
                    shift = 0
            if x != w:
                raise HdrFormatError(f"'{path}': scanline {y} overruns width")
    return _rgbe_to_float(rgbe)


# --------------------------------------------------------------------- OBJ


def _sanitize_vertices(V, arrays, faces, path, edges=None):
    """Drop non-finite vertex rows, remap faces/edges, warn with a count."""
    V = np.asarray(V, dtype=np.float64)
    good = np.isfinite(V).all(axis=1)
    for a in arrays.values():
        if a is not None and len(a) == len(V):
            good &= np.isfinite(np.asarray(a, dtype=np.float64)).reshape(len(V), -1).all(axis=1)
    if good.all():
        return V, arrays, faces, edges
    n_bad = int((~good).sum())
    warnings.warn(f"{path}: dropped {n_bad} vertices with non-finite values")
    remap = np.full(len(V), -1, dtype=np.int64)
    remap[good] = np.arange(int(good.sum()))
    V = V[good]
    arrays = {k: (None if a is None else np.asarray(a)[good]) for k, a in arrays.items()}
    if faces is not None and len(faces):
        faces = np.asarray(faces)
        keep = good[faces].all(axis=1)
        faces = remap[faces[keep]]
    if edges is not None and len(edges):
        edges = np.asarray(edges)
        keep = good[edges].all(axis=1)
        edges = remap[edges[keep]]
    return V, arrays, faces, edges


def _load_obj(path):
    verts, norms, uvs = [], [], []
    face_corners = []  # list of triangles of (vi, ti, ni)
    polylines = []  # raw 1-based "l" statements
    texture_path = None
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "r", errors="replace") as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            try:
                if tok[0] == "v":
                    verts.append([float(tok[i]) for i in (1, 2, 3)])
                elif tok[0] == "vn":
                    norms.append([float(tok[i]) for i in (1, 2, 3)])
                elif tok[0] == "vt":
                    uvs.append([float(tok[1]), float(tok[2]) if len(tok) > 2 else 0.0])
                elif tok[0] == "f":
                    corners = []
                    for part in tok[1:]:
                        comp = part.split("/")
                        vi = int(comp[0])
                        ti = int(comp[1]) if len(comp) > 1 and comp[1] else 0
                        ni = int(comp[2]) if len(comp) > 2 and comp[2] else 0
                        corners.append((vi, ti, ni))
                    for k in range(1, len(corners) - 1):
                        face_corners.append((corners[0], corners[k], corners[k + 1]))
                elif tok[0] == "l":
                    polylines.append([int(p.split("/")[0]) for p in tok[1:]])
                elif tok[0] == "mtllib" and texture_path is None:
                    texture_path = _obj_texture_from_mtl(os.path.join(base, tok[1]))
            except (ValueError, IndexError) as e:
                raise MeshLoadError(f"{path}:{ln}: cannot parse '{line}': {e}") from e
    nv = len(verts)

    def resolve(idx, count):
        if idx == 0:
            return -1
        out = idx - 1 if idx > 0 else count + idx
        if not 0 <= out < count:
            raise MeshLoadError(f"{path}: face index {idx} out of range (have {count})")
        return out

    faces = []
    v_normal = np.zeros((nv, 3)) if norms else None
    v_uv = np.zeros((nv, 2)) if uvs else None
    n_seen = np.zeros(nv, dtype=bool)
    t_seen = np.zeros(nv, dtype=bool)
    for tri in face_corners:
        idxs = []
        for vi, ti, ni in tri:
            v = resolve(vi, nv)
            idxs.append(v)
            if v_normal is not None and ni:
                v_normal[v] = norms[resolve(ni, len(norms))]
                n_seen[v] = True
            if v_uv is not None and ti:
                v_uv[v] = uvs[resolve(ti, len(uvs))]
                t_seen[v] = True
        faces.append(idxs)
    faces = np.asarray(faces, dtype=np.int64) if faces else None
    edges = []
    for poly in polylines:
        idxs = [resolve(i, nv) for i in poly]
        edges += [(a, b) for a, b in zip(idxs, idxs[1:])]
    edges = np.asarray(edges, dtype=np.int64) if edges else None
    if v_normal is not None and not n_seen.all():
        v_normal = None  # partial normals: recompute from faces instead
    if v_uv is not None and not t_seen.all():
        v_uv = None
    V = np.asarray(verts, dtype=np.float64).reshape(-1, 3)
    arrays = {"N": v_normal, "uv": v_uv}
    V, arrays, faces, edges = _sanitize_vertices(V, arrays, faces, path, edges)
    material = None
    if texture_path and arrays["uv"] is not None and os.path.exists(texture_path):
        material = Material(mode=VisualizationMode.TEXTURED,
                            texture=read_texture(texture_path), uv=arrays["uv"])
    return Mesh(V=V, N=arrays["N"], F=faces, E=edges, material=material,
                name=os.path.splitext(os.path.basename(path))[0])


def _obj_texture_from_mtl(mtl_path):
    if not os.path.exists(mtl_path):
        return None
    base = os.path.dirname(mtl_path)
    with open(mtl_path, "r", errors="replace") as fh:
        for raw in fh:
            tok = raw.split("#", 1)[0].split()
            if len(tok) >= 2 and tok[0] == "map_Kd":
                return os.path.join(base, tok[-1])
    return None


# --------------------------------------------------------------------- PLY


_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def _load_ply(path):
    with open(path, "rb") as fh:
        data = fh.read()
    pos = data.find(b"end_header\n")
    if not data.startswith(b"ply") or pos < 0:
        raise MeshLoadError(f"{path}: not a PLY file")
    header = data[:pos].decode("ascii", errors="replace").splitlines()
    body = data[pos + len(b"end_header\n"):]
    fmt = None
    elements = []  # (name, count, [(prop_name, dtype, is_list, count_type)])
    for ln, line in enumerate(header[1:], 2):
        tok = line.split()
        if not tok or tok[0] == "comment":
            continue
        if tok[0] == "format":
            fmt = tok[1]
        elif tok[0] == "element":
            elements.append((tok[1], int(tok[2]), []))
        elif tok[0] == "property":
            if not elements:
                raise MeshLoadError(f"{path}:{ln}: property before element")
            if tok[1] == "list":
                elements[-1][2].append((tok[4], _PLY_TYPES[tok[3]], True, _PLY_TYPES[tok[2]]))
            else:
                elements[-1][2].append((tok[2], _PLY_TYPES[tok[1]], False, None))
    if fmt not in ("ascii", "binary_little_endian"):
        raise MeshLoadError(f"{path}: unsupported PLY format '{fmt}'")

    parsed = {}
    if fmt == "ascii":
        rows = body.decode("ascii", errors="replace").split()
        cursor = 0
        for name, count, props in elements:
            cols = {p[0]: [] for p in props}
            lists = {p[0]: [] for p in props if p[2]}
            for _ in range(count):
                for pname, dtype, is_list, _ctype in props:
                    if is_list:
                        k = int(rows[cursor]); cursor += 1
                        lists[pname].append([float(rows[cursor + i]) for i in range(k)])
                        cursor += k
                    else:
                        cols[pname].append(float(rows[cursor])); cursor += 1
            parsed[name] = (cols, lists, props)
    else:
        offset = 0
        for name, count, props in elements:
            if any(p[2] for p in props):
                cols = {p[0]: [] for p in props}
                lists = {p[0]: [] for p in props if p[2]}
                for _ in range(count):
                    for pname, dtype, is_list, ctype in props:
                        if is_list:
                            csz = np.dtype(ctype).itemsize
                            k = int(np.frombuffer(body, "<" + ctype, 1, offset)[0])
                            offset += csz
                            vals = np.frombuffer(body, "<" + dtype, k, offset)
                            offset += k * np.dtype(dtype).itemsize
                            lists[pname].append(vals.astype(np.float64))
                        else:
                            cols[pname].append(float(np.frombuffer(body, "<" + dtype, 1, offset)[0]))
                            offset += np.dtype(dtype).itemsize
                parsed[name] = (cols, lists, props)
            else:
                dt = np.dtype([(p[0], "<" + p[1]) for p in props])
                arr = np.frombuffer(body, dt, count, offset)
                offset += count * dt.itemsize
                parsed[name] = ({p[0]: arr[p[0]] for p in props}, {}, props)

    if "vertex" not in parsed:
        raise MeshLoadError(f"{path}: PLY has no vertex element")
    vcols, _, vprops = parsed["vertex"]
    names = [p[0] for p in vprops]

    def col(*want):
        if all(n in names for n in want):
            return np.stack([np.asarray(vcols[n], dtype=np.float64) for n in want], axis=1)
        return None

    V = col("x", "y", "z")
    if V is None:
        raise MeshLoadError(f"{path}: vertex element lacks x/y/z")
    N = col("nx", "ny", "nz")
    C = col("red", "green", "blue")
    if C is not None and any(p[0] == "red" and p[1] == "u1" for p in vprops):
        C = C / 255.0
    T = col("tx", "ty", "tz")
    B = np.asarray(vcols["blen"], dtype=np.float64) if "blen" in names else None

    F = None
    if "face" in parsed:
        _, flists, fprops = parsed["face"]
        key = next((p[0] for p in fprops if p[0] in ("vertex_indices", "vertex_index")), None)
        if key is not None:
            tris = []
            for poly in flists[key]:
                poly = [int(i) for i in poly]
                for k in range(1, len(poly) - 1):
                    tris.append((poly[0], poly[k], poly[k + 1]))
            F = np.asarray(tris, dtype=np.int64) if tris else None
    E = None
    if "edge" in parsed:
        ecols, _, _ = parsed["edge"]
        if "vertex1" in ecols and "vertex2" in ecols:
            E = np.stack([np.asarray(ecols["vertex1"], dtype=np.int64),
                          np.asarray(ecols["vertex2"], dtype=np.int64)], axis=1)

    arrays = {"N": N, "C": C, "T": T, "B": B}
    V, arrays, F, E = _sanitize_vertices(V, arrays, F, path, E)
    material = None
    if arrays["C"] is not None:
        material = Material(mode=VisualizationMode.PER_VERTEX)
    return Mesh(V=V, N=arrays["N"], C=arrays["C"], T=arrays["T"], B=arrays["B"],
                F=F, E=E, material=material,
                name=os.path.splitext(os.path.basename(path))[0])


def load_mesh(path) -> Mesh:
    if not os.path.exists(path):
        raise MeshLoadError(f"mesh file not found: {path}")
    ext = os.path.splitext(path)[1].lower()
    if ext == ".obj":
        return _load_obj(path)
    if ext == ".ply":
        return _load_ply(path)
    raise MeshLoadError(f"unsupported mesh extension '{ext}' (want .obj or .ply)")


# ----------------------------------------------------------- baked IBL sets


def save_ibl(ibl: IblSet, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for f in range(6):
        write_hdr(ibl.irradiance.faces[f], os.path.join(out_dir, f"irr_f{f}.hdr"))
    for m, cube in enumerate(ibl.specular):
        for f in range(6):
            write_hdr(cube.faces[f], os.path.join(out_dir, f"spec_m{m}_f{f}.hdr"))
    np.save(os.path.join(out_dir, "lut.npy"), ibl.lut)
    manifest = {
        "version": 1,
        "face_size": ibl.specular[0].res,
        "num_mips": ibl.num_mips,
        "irradiance_size": ibl.irradiance.res,
        "lut_size": int(ibl.lut.shape[0]),
        "multiscatter_enabled": bool(ibl.multiscatter_enabled),
        "seed": int(ibl.seed),
    }
    tmp = os.path.join(out_dir, ".manifest.tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, os.path.join(out_dir, "manifest.json"))


def load_ibl(in_dir) -> IblSet:
    man_path = os.path.join(in_dir, "manifest.json")
    if not os.path.exists(man_path):
        raise HdrFormatError(f"no manifest.json in '{in_dir}'")
    with open(man_path) as fh:
        man = json.load(fh)
    irr = Cubemap(np.stack([read_hdr(os.path.join(in_dir, f"irr_f{f}.hdr"))
                            for f in range(6)]))
    spec = []
    for m in range(man["num_mips"]):
        spec.append(Cubemap(np.stack([read_hdr(os.path.join(in_dir, f"spec_m{m}_f{f}.hdr"))
                                      for f in range(6)])))
    lut = np.load(os.path.join(in_dir, "lut.npy"))
    return IblSet(irradiance=irr, specular=spec, lut=lut,
                  multiscatter_enabled=bool(man.get("multiscatter_enabled", True)),
                  seed=int(man.get("seed", 0)))


# -------------------------------------------------------------- scene files


_PRIMITIVES = {
    "sphere": shapes.uv_sphere,
    "icosphere": shapes.icosphere,
    "box": shapes.box,
    "plane": shapes.plane,
    "point_cloud": shapes.grid_point_cloud,
    "wire_box": shapes.wire_box,
}

_KNOWN_TOP = {"environment", "objects", "camera", "lights", "effects", "output"}
_KNOWN_OBJECT = {"name", "mesh", "primitive", "primitive_params", "pose", "parent",
                 "material", "render_mode", "visible", "surfelize", "surfel_radius_scale"}
_KNOWN_MATERIAL = {"albedo", "metalness", "roughness", "mode", "line_color"}


def _fail(pointer, msg):
    raise SceneFormatError(pointer, msg)


def _parse_pose(d, pointer):
    if not isinstance(d, dict):
        _fail(pointer, "pose must be an object")
    rot = d.get("rotation_wxyz", d.get("rotation_quat_wxyz", (1.0, 0.0, 0.0, 0.0)))
    try:
        return Pose(rotation=rot, translation=d.get("translation", (0.0, 0.0, 0.0)),
                    scale=d.get("scale", 1.0))
    except (InvalidArgument, TypeError, ValueError) as e:
        _fail(pointer, str(e))


def _parse_material(d, pointer):
    if not isinstance(d, dict):
        _fail(pointer, "material must be an object")
    unknown = set(d) - _KNOWN_MATERIAL
    if unknown:
        warnings.warn(f"{pointer}: ignoring unknown material keys {sorted(unknown)}")
    kw = {}
    for key in ("albedo", "metalness", "roughness", "mode", "line_color"):
        if key in d:
            kw[key] = d[key]
    try:
        return Material(**kw)
    except (InvalidArgument, TypeError, ValueError) as e:
        _fail(pointer, str(e))


def _parse_object(obj, idx, base_dir):
    ptr = f"/objects/{idx}"
    if not isinstance(obj, dict):
        _fail(ptr, "object entry must be an object")
    unknown = set(obj) - _KNOWN_OBJECT
    if unknown:
        warnings.warn(f"{ptr}: ignoring unknown keys {sorted(unknown)}")
    if ("mesh" in obj) == ("primitive" in obj):
        _fail(ptr, "object needs exactly one of 'mesh' or 'primitive'")
    if "mesh" in obj:
        path = obj["mesh"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        try:
            mesh = load_mesh(path)
        except MeshLoadError as e:
            _fail(ptr + "/mesh", str(e))
    else:
        kind = obj["primitive"]
        if kind not in _PRIMITIVES:
            _fail(ptr + "/primitive", f"unknown primitive '{kind}' "
                  f"(have {sorted(_PRIMITIVES)})")
        params = obj.get("primitive_params", {})
        try:
            mesh = _PRIMITIVES[kind](**params)
        except (InvalidArgument, TypeError, ValueError) as e:
            _fail(ptr + "/primitive_params", str(e))
    if obj.get("surfelize"):
        mesh = shapes.surfelize(mesh, radius_scale=obj.get("surfel_radius_scale", 0.8))
    kw = {}
    if "material" in obj:
        kw["material"] = _parse_material(obj["material"], ptr + "/material")
    if "pose" in obj:
        kw["local_pose"] = _parse_pose(obj["pose"], ptr + "/pose")
    if kw:
        mesh = mesh.replace(**kw)
    if "name" in obj:
        mesh.name = str(obj["name"])
    mesh.visible = bool(obj.get("visible", True))
    if "render_mode" in obj:
        mesh.render_mode_override = obj["render_mode"]
    return mesh, obj.get("parent")


def _parse_light(d, idx):
    ptr = f"/lights/{idx}"
    if not isinstance(d, dict):
        _fail(ptr, "light must be an object")
    try:
        return PointLight(
            position=np.asarray(d["position"], dtype=np.float64),
            color=tuple(d.get("color", (1.0, 1.0, 1.0))),
            intensity=float(d.get("intensity", 1.0)),
            casts_shadow=bool(d.get("casts_shadow", True)),
            role=d.get("role", "custom"),
        )
    except KeyError as e:
        _fail(ptr, f"missing key {e}")
    except (InvalidArgument, TypeError, ValueError) as e:
        _fail(ptr, str(e))


def _parse_camera(d, width, height):
    ptr = "/camera"
    if not isinstance(d, dict):
        _fail(ptr, "camera must be an object")
    fov = math.radians(float(d.get("fov_deg", 50.0)))
    near = float(d.get("near", 1e-2))
    far = float(d.get("far", 1e4))
    try:
        if "eye" in d or "target" in d:
            return Camera.look_at(
                eye=np.asarray(d["eye"], dtype=np.float64),
                target=np.asarray(d.get("target", (0.0, 0.0, 0.0)), dtype=np.float64),
                up=np.asarray(d.get("up", (0.0, 1.0, 0.0)), dtype=np.float64),
                vertical_fov=fov, near=near, far=far, width=width, height=height)
        pose = _parse_pose(d.get("pose", {}), ptr + "/pose")
        return Camera(pose=pose, vertical_fov=fov, near=near, far=far,
                      width=width, height=height)
    except (InvalidArgument, KeyError, TypeError, ValueError) as e:
        _fail(ptr, str(e))


def _parse_environment(d, base_dir):
    ptr = "/environment"
    if isinstance(d, str):
        d = {"hdr": d}
    if not isinstance(d, dict):
        _fail(ptr, "environment must be a path or an object")
    if "baked" in d:
        path = d["baked"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        try:
            return load_ibl(path)
        except (OSError, HdrFormatError) as e:
            _fail(ptr + "/baked", str(e))
    seed = int(d.get("seed", 0))
    multiscatter = bool(d.get("multiscatter", True))
    if "constant" in d:
        c = np.asarray(d["constant"], dtype=np.float64)
        if c.ndim == 0:
            c = np.full(3, float(c))
        try:
            cube = Cubemap.constant(c, res=16)
        except (InvalidArgument, TypeError, ValueError) as e:
            _fail(ptr + "/constant", str(e))
        return bake_ibl(cube, num_mips=INLINE_BAKE["num_mips"],
                        irradiance_size=8, irradiance_samples=512,
                        specular_samples=128, seed=seed, multiscatter=multiscatter)
    if "hdr" not in d:
        _fail(ptr, "environment needs one of 'hdr', 'baked' or 'constant'")
    path = d["hdr"]
    if not os.path.isabs(path):
        path = os.path.join(base_dir, path)
    try:
        equirect = read_hdr(path)
    except (OSError, HdrFormatError) as e:
        _fail(ptr + "/hdr", str(e))
    return bake_ibl(
        equirect,
        face_size=int(d.get("face_size", INLINE_BAKE["face_size"])),
        num_mips=int(d.get("mips", INLINE_BAKE["num_mips"])),
        irradiance_size=int(d.get("irradiance_size", INLINE_BAKE["irradiance_size"])),
        irradiance_samples=INLINE_BAKE["irradiance_samples"],
        specular_samples=INLINE_BAKE["specular_samples"],
        seed=seed, multiscatter=multiscatter)


def parse_scene(source, base_dir=None) -> Scene:
    """Build a Scene from a JSON file path or an already-parsed dict.

    The returned scene is not finalized; scene.output_path carries the
    requested output file (None if unset).  Unknown keys warn, schema
    violations raise with a JSON-pointer path.
    """
    if isinstance(source, (str, os.PathLike)):
        base_dir = base_dir if base_dir is not None else os.path.dirname(os.path.abspath(source))
        try:
            with open(source) as fh:
                doc = json.load(fh)
        except OSError as e:
            raise SceneFormatError("/", f"cannot read scene file: {e}") from e
        except json.JSONDecodeError as e:
            raise SceneFormatError("/", f"invalid JSON: {e}") from e
    else:
        doc = source
        base_dir = base_dir if base_dir is not None else os.getcwd()
    if not isinstance(doc, dict):
        _fail("/", "scene document must be a JSON object")
    unknown = set(doc) - _KNOWN_TOP
    if unknown:
        warnings.warn(f"scene: ignoring unknown top-level keys {sorted(unknown)}")

    out = doc.get("output", {})
    if not isinstance(out, dict):
        _fail("/output", "output must be an object")
    width = int(out.get("width", DEFAULT_OUTPUT_SIZE[0]))
    height = int(out.get("height", DEFAULT_OUTPUT_SIZE[1]))
    if width < 2 or height < 2:
        _fail("/output", f"output size {width}x{height} is too small")

    objs = doc.get("objects", [])
    if not isinstance(objs, list):
        _fail("/objects", "objects must be a list")
    meshes, parents = [], []
    for i, entry in enumerate(objs):
        mesh, parent = _parse_object(entry, i, base_dir)
        meshes.append(mesh)
        parents.append(parent)
    by_name = {}
    for mesh in meshes:
        if mesh.name in by_name:
            _fail("/objects", f"duplicate object name '{mesh.name}'")
        by_name[mesh.name] = mesh
    for mesh, parent in zip(meshes, parents):
        if parent is not None:
            if parent not in by_name:
                _fail("/objects", f"unknown parent '{parent}' for object '{mesh.name}'")
            mesh.parent = by_name[parent]

    lights = None
    if "lights" in doc:
        if not isinstance(doc["lights"], list):
            _fail("/lights", "lights must be a list")
        lights = [_parse_light(d, i) for i, d in enumerate(doc["lights"])]

    camera = None
    if "camera" in doc:
        camera = _parse_camera(doc["camera"], width, height)

    effects = EffectSettings()
    if "effects" in doc:
        eff = doc["effects"]
        if not isinstance(eff, dict):
            _fail("/effects", "effects must be an object")
        known = {f.name for f in EffectSettings.__dataclass_fields__.values()}
        unknown = set(eff) - known
        if unknown:
            warnings.warn(f"/effects: ignoring unknown keys {sorted(unknown)}")
        kw = {k: v for k, v in eff.items() if k in known}
        if "background_color" in kw:
            kw["background_color"] = tuple(kw["background_color"])
        try:
            effects = EffectSettings(**kw)
        except (InvalidArgument, TypeError, ValueError) as e:
            _fail("/effects", str(e))

    environment = None
    if "environment" in doc:
        environment = _parse_environment(doc["environment"], base_dir)

    scene = Scene(objects=meshes, lights=lights, camera=camera,
                  environment=environment, settings=effects,
                  width=width, height=height)
    scene.output_path = out.get("path")
    if scene.output_path is not None and not os.path.isabs(scene.output_path):
        scene.output_path = os.path.join(base_dir, scene.output_path)
    return scene
