import json
import struct

import numpy as np
import pytest

from softpbr.assets import (
    _float_to_rgbe,
    _rgbe_to_float,
    load_ibl,
    load_mesh,
    parse_scene,
    read_hdr,
    read_png,
    read_texture,
    save_ibl,
    write_hdr,
    write_png,
)
from softpbr.errors import (
    HdrFormatError,
    InvalidArgument,
    MeshLoadError,
    SceneFormatError,
)
from softpbr.geom import VisualizationMode


# ------------------------------------------------------------------- PNG


def test_png_round_trip_bit_exact(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, size=(7, 5, 3), dtype=np.uint8)
    p = str(tmp_path / "x.png")
    write_png(img, p)
    assert np.array_equal(read_png(p), img)


def test_png_rejects_float(tmp_path):
    with pytest.raises(InvalidArgument):
        write_png(np.zeros((2, 2, 3)), str(tmp_path / "x.png"))


def test_png_grayscale_reads_back_as_rgb(tmp_path):
    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    p = str(tmp_path / "g.png")
    write_png(img, p)
    back = read_png(p)
    assert back.shape == (3, 4, 3)
    assert np.array_equal(back[..., 0], img)


def test_texture_decodes_display_gamma(tmp_path):
    img = np.full((2, 2, 3), 128, dtype=np.uint8)
    p = str(tmp_path / "t.png")
    write_png(img, p)
    tex = read_texture(p)
    assert tex == pytest.approx((128 / 255) ** 2.2)
    assert read_texture.__doc__  # linear output contract is documented


# ------------------------------------------------------------------ RGBE


def test_rgbe_unit_white_is_exact():
    # 1.0 -> mantissa byte 128, exponent byte 129; decode 128 * 2^(129-136) = 1.0
    rgbe = _float_to_rgbe(np.ones((1, 1, 3)))
    assert rgbe[0, 0].tolist() == [128, 128, 128, 129]
    assert np.array_equal(_rgbe_to_float(rgbe), np.ones((1, 1, 3)))


def test_rgbe_decode_formula_anchor():
    # component * 2^(e - 136)
    px = np.array([[[128, 64, 32, 136]]], dtype=np.uint8)
    assert np.array_equal(_rgbe_to_float(px)[0, 0], [128.0, 64.0, 32.0])
    assert np.array_equal(_rgbe_to_float(np.array([[[90, 3, 200, 0]]], np.uint8)),
                          np.zeros((1, 1, 3)))


def test_rgbe_tiny_and_negative_flush_to_zero():
    img = np.array([[[1e-40, -3.0, 0.0]]])
    rgbe = _float_to_rgbe(img)
    assert rgbe[0, 0].tolist() == [0, 0, 0, 0]


def test_rgbe_round_trip_error_bound():
    rng = np.random.default_rng(7)
    img = rng.uniform(0.0, 4.0, size=(32, 32, 3))
    img[0, 0] = (1000.0, 0.25, 1e-4)  # wide dynamic range in one pixel
    back = _rgbe_to_float(_float_to_rgbe(img))
    maxv = img.max(axis=-1, keepdims=True)
    assert np.all(np.abs(back - img) <= maxv / 128.0 + 1e-12)


def test_rgbe_powers_of_two_exact():
    img = 2.0 ** np.arange(-8, 9, dtype=np.float64)
    img = np.stack([img] * 3, axis=-1)[None]
    assert np.array_equal(_rgbe_to_float(_float_to_rgbe(img)), img)


@pytest.mark.parametrize("w", [4, 33])  # below and above the RLE width cutoff
def test_hdr_file_preserves_quantized_values(tmp_path, w):
    rng = np.random.default_rng(w)
    img = rng.uniform(0.0, 10.0, size=(5, w, 3))
    p = str(tmp_path / "e.hdr")
    write_hdr(img, p)
    assert np.array_equal(read_hdr(p), _rgbe_to_float(_float_to_rgbe(img)))


def test_hdr_rle_handles_runs_and_literals(tmp_path):
    # constant rows force long runs, noise rows force long literal spans
    img = np.empty((4, 300, 3))
    img[0] = 0.5
    img[1] = np.random.default_rng(1).uniform(0, 2, size=(300, 3))
    img[2] = 0.0
    img[3, :150] = 1.0
    img[3, 150:] = np.random.default_rng(2).uniform(0, 2, size=(150, 3))
    p = str(tmp_path / "rle.hdr")
    write_hdr(img, p)
    assert np.array_equal(read_hdr(p), _rgbe_to_float(_float_to_rgbe(img)))


def test_hdr_old_style_repeat_codes(tmp_path):
    p = tmp_path / "old.hdr"
    body = bytes([128, 128, 128, 129]) + bytes([1, 1, 1, 3])  # pixel, repeat x3
    p.write_bytes(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 4\n" + body)
    img = read_hdr(str(p))
    assert img.shape == (1, 4, 3)
    assert np.array_equal(img, np.ones((1, 4, 3)))


def test_hdr_accepts_rgbe_signature(tmp_path):
    p = tmp_path / "sig.hdr"
    body = bytes([128, 128, 128, 129]) * 4
    p.write_bytes(b"#?RGBE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 4\n" + body)
    assert np.array_equal(read_hdr(str(p)), np.ones((1, 4, 3)))


def test_hdr_header_validation(tmp_path):
    cases = [
        (b"JUNK\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X 1\n", "signature"),
        (b"#?RADIANCE\nFORMAT=wat\n\n-Y 1 +X 1\n", "FORMAT"),
        (b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n+Y 1 +X 1\n", "orientation"),
    ]
    for raw, why in cases:
        p = tmp_path / f"{why}.hdr"
        p.write_bytes(raw + bytes([128, 128, 128, 129]))
        with pytest.raises(HdrFormatError):
            read_hdr(str(p))


def test_hdr_truncated_scanline(tmp_path):
    p = tmp_path / "trunc.hdr"
    p.write_bytes(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 2 +X 4\n"
                  + bytes([128, 128, 128, 129]) * 4)  # one of two rows
    with pytest.raises(HdrFormatError):
        read_hdr(str(p))


def test_hdr_rejects_bad_shape():
    with pytest.raises(InvalidArgument):
        write_hdr(np.zeros((4, 4)), "nope.hdr")


# ------------------------------------------------------------------- OBJ


def obj_file(tmp_path, text, name="m.obj"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_obj_triangle(tmp_path):
    mesh = load_mesh(obj_file(tmp_path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"))
    assert np.array_equal(mesh.V, [[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert np.array_equal(mesh.F, [[0, 1, 2]])
    assert mesh.name == "m"
    assert np.allclose(mesh.N, [[0, 0, 1]] * 3)  # auto normals


def test_obj_quad_becomes_fan(tmp_path):
    text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
    mesh = load_mesh(obj_file(tmp_path, text))
    assert np.array_equal(mesh.F, [[0, 1, 2], [0, 2, 3]])


def test_obj_negative_indices_count_from_end(tmp_path):
    text = "v 5 5 5\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n"
    mesh = load_mesh(obj_file(tmp_path, text))
    assert np.array_equal(mesh.F, [[1, 2, 3]])


def test_obj_explicit_normals_survive(tmp_path):
    text = ("v 0 0 0\nv 1 0 0\nv 0 1 0\n"
            "vn 1 0 0\nvn 1 0 0\nvn 1 0 0\n"
            "f 1//1 2//2 3//3\n")
    mesh = load_mesh(obj_file(tmp_path, text))
    assert np.array_equal(mesh.N, [[1, 0, 0]] * 3)  # not the geometric +z


def test_obj_partial_normals_fall_back_to_computed(tmp_path):
    text = ("v 0 0 0\nv 1 0 0\nv 0 1 0\n"
            "vn 1 0 0\n"
            "f 1//1 2 3\n")
    mesh = load_mesh(obj_file(tmp_path, text))
    assert np.allclose(mesh.N, [[0, 0, 1]] * 3)


def test_obj_line_statements(tmp_path):
    text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nl 1 2 3\nl 3 1\n"
    mesh = load_mesh(obj_file(tmp_path, text))
    assert np.array_equal(mesh.E, [[0, 1], [1, 2], [2, 0]])
    assert mesh.F.shape == (0, 3)


def test_obj_comments_and_blanks(tmp_path):
    text = "# header\n\nv 0 0 0  # inline\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"
    mesh = load_mesh(obj_file(tmp_path, text))
    assert mesh.V.shape == (3, 3)


def test_obj_index_out_of_range(tmp_path):
    with pytest.raises(MeshLoadError, match="out of range"):
        load_mesh(obj_file(tmp_path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n"))


def test_obj_malformed_lines_carry_line_numbers(tmp_path):
    with pytest.raises(MeshLoadError, match=r":2:"):
        load_mesh(obj_file(tmp_path, "v 0 0 0\nv 1 nope 0\n"))
    with pytest.raises(MeshLoadError, match=r":1:"):
        load_mesh(obj_file(tmp_path, "v 1 2\n"))  # too few coordinates


def test_obj_nonfinite_vertices_dropped_and_remapped(tmp_path):
    text = ("v 0 0 0\nv nan 0 0\nv 1 0 0\nv 0 1 0\n"
            "f 1 3 4\nf 1 2 3\n")
    with pytest.warns(UserWarning, match="dropped 1"):
        mesh = load_mesh(obj_file(tmp_path, text))
    assert mesh.V.shape == (3, 3)
    assert np.array_equal(mesh.F, [[0, 1, 2]])  # face touching the bad vertex is gone


def test_obj_texture_via_mtl(tmp_path):
    tex = np.zeros((4, 4, 3), dtype=np.uint8)
    tex[..., 1] = 128
    write_png(tex, str(tmp_path / "grid.png"))
    (tmp_path / "m.mtl").write_text("newmtl mat\nmap_Kd grid.png\n")
    text = ("mtllib m.mtl\n"
            "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
            "vt 0 0\nvt 1 0\nvt 0 1\n"
            "f 1/1 2/2 3/3\n")
    mesh = load_mesh(obj_file(tmp_path, text))
    assert mesh.material.mode == VisualizationMode.TEXTURED
    assert mesh.material.texture.shape == (4, 4, 3)
    assert mesh.material.texture[0, 0, 1] == pytest.approx((128 / 255) ** 2.2)
    assert mesh.material.uv.shape == (3, 2)


def test_obj_missing_mtl_is_ignored(tmp_path):
    text = "mtllib gone.mtl\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"
    mesh = load_mesh(obj_file(tmp_path, text))
    assert mesh.material.texture is None
    assert mesh.material.mode != VisualizationMode.TEXTURED


# ------------------------------------------------------------------- PLY


def ply_file(tmp_path, text, name="m.ply"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


ASCII_COLORED = """ply
format ascii 1.0
element vertex 3
property float x
property float y
property float z
property uchar red
property uchar green
property uchar blue
element face 1
property list uchar int vertex_indices
end_header
0 0 0 255 0 0
1 0 0 0 255 0
0 1 0 0 0 255
3 0 1 2
"""


def test_ply_ascii_with_byte_colors(tmp_path):
    mesh = load_mesh(ply_file(tmp_path, ASCII_COLORED))
    assert np.array_equal(mesh.V, [[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert np.array_equal(mesh.C, np.eye(3))  # uchar scaled to [0, 1]
    assert np.array_equal(mesh.F, [[0, 1, 2]])
    assert mesh.material.mode == VisualizationMode.PER_VERTEX


def test_ply_float_colors_not_rescaled(tmp_path):
    text = ("ply\nformat ascii 1.0\nelement vertex 1\n"
            "property float x\nproperty float y\nproperty float z\n"
            "property float red\nproperty float green\nproperty float blue\n"
            "end_header\n0 0 0 0.5 0.25 1.0\n")
    mesh = load_mesh(ply_file(tmp_path, text))
    assert np.array_equal(mesh.C, [[0.5, 0.25, 1.0]])


def test_ply_binary_matches_ascii(tmp_path):
    header = ("ply\nformat binary_little_endian 1.0\n"
              "element vertex 3\n"
              "property float x\nproperty float y\nproperty float z\n"
              "property uchar red\nproperty uchar green\nproperty uchar blue\n"
              "element face 1\n"
              "property list uchar int vertex_indices\n"
              "end_header\n")
    body = b""
    for v, c in [((0, 0, 0), (255, 0, 0)), ((1, 0, 0), (0, 255, 0)), ((0, 1, 0), (0, 0, 255))]:
        body += struct.pack("<fffBBB", *v, *c)
    body += struct.pack("<Biii", 3, 0, 1, 2)
    p = tmp_path / "b.ply"
    p.write_bytes(header.encode() + body)
    a = load_mesh(ply_file(tmp_path, ASCII_COLORED))
    b = load_mesh(str(p))
    assert np.array_equal(a.V, b.V)
    assert np.array_equal(a.C, b.C)
    assert np.array_equal(a.F, b.F)


def test_ply_surfel_fields(tmp_path):
    text = ("ply\nformat ascii 1.0\nelement vertex 2\n"
            "property float x\nproperty float y\nproperty float z\n"
            "property float nx\nproperty float ny\nproperty float nz\n"
            "property float tx\nproperty float ty\nproperty float tz\n"
            "property float blen\n"
            "end_header\n"
            "0 0 0 0 0 1 0.25 0 0 0.125\n"
            "1 0 0 0 1 0 0 0 0.5 0.5\n")
    mesh = load_mesh(ply_file(tmp_path, text))
    assert np.array_equal(mesh.N, [[0, 0, 1], [0, 1, 0]])
    assert np.array_equal(mesh.T, [[0.25, 0, 0], [0, 0, 0.5]])
    assert np.array_equal(mesh.B, [0.125, 0.5])


def test_ply_edge_element(tmp_path):
    text = ("ply\nformat ascii 1.0\nelement vertex 2\n"
            "property float x\nproperty float y\nproperty float z\n"
            "element edge 1\nproperty int vertex1\nproperty int vertex2\n"
            "end_header\n0 0 0\n1 1 1\n0 1\n")
    mesh = load_mesh(ply_file(tmp_path, text))
    assert np.array_equal(mesh.E, [[0, 1]])


def test_ply_quad_faces_fan(tmp_path):
    text = ("ply\nformat ascii 1.0\nelement vertex 4\n"
            "property float x\nproperty float y\nproperty float z\n"
            "element face 1\nproperty list uchar int vertex_indices\n"
            "end_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
    mesh = load_mesh(ply_file(tmp_path, text))
    assert np.array_equal(mesh.F, [[0, 1, 2], [0, 2, 3]])


def test_ply_binary_list_faces(tmp_path):
    header = ("ply\nformat binary_little_endian 1.0\n"
              "element vertex 4\n"
              "property float x\nproperty float y\nproperty float z\n"
              "element face 1\nproperty list uchar int vertex_indices\n"
              "end_header\n")
    body = b"".join(struct.pack("<fff", *v)
                    for v in [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)])
    body += struct.pack("<Biiii", 4, 0, 1, 2, 3)
    p = tmp_path / "q.ply"
    p.write_bytes(header.encode() + body)
    mesh = load_mesh(str(p))
    assert np.array_equal(mesh.F, [[0, 1, 2], [0, 2, 3]])


def test_ply_nonfinite_vertex_dropped(tmp_path):
    text = ("ply\nformat ascii 1.0\nelement vertex 3\n"
            "property float x\nproperty float y\nproperty float z\n"
            "end_header\n0 0 0\nnan 0 0\n1 0 0\n")
    with pytest.warns(UserWarning, match="dropped 1"):
        mesh = load_mesh(ply_file(tmp_path, text))
    assert mesh.V.shape == (2, 3)


def test_ply_structural_errors(tmp_path):
    with pytest.raises(MeshLoadError, match="not a PLY"):
        load_mesh(ply_file(tmp_path, "junk\n", name="a.ply"))
    big = "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n"
    with pytest.raises(MeshLoadError, match="format"):
        load_mesh(ply_file(tmp_path, big, name="b.ply"))
    noprop = "ply\nformat ascii 1.0\nproperty float x\nend_header\n"
    with pytest.raises(MeshLoadError, match="property before element"):
        load_mesh(ply_file(tmp_path, noprop, name="c.ply"))
    novert = ("ply\nformat ascii 1.0\nelement face 0\n"
              "property list uchar int vertex_indices\nend_header\n")
    with pytest.raises(MeshLoadError, match="no vertex"):
        load_mesh(ply_file(tmp_path, novert, name="d.ply"))
    noz = ("ply\nformat ascii 1.0\nelement vertex 1\n"
           "property float x\nproperty float y\nend_header\n0 0\n")
    with pytest.raises(MeshLoadError, match="x/y/z"):
        load_mesh(ply_file(tmp_path, noz, name="e.ply"))


def test_load_mesh_dispatch_errors(tmp_path):
    with pytest.raises(MeshLoadError, match="not found"):
        load_mesh(str(tmp_path / "missing.obj"))
    p = tmp_path / "m.stl"
    p.write_text("solid\n")
    with pytest.raises(MeshLoadError, match="extension"):
        load_mesh(str(p))


# ------------------------------------------------------------- baked sets


def test_ibl_save_load_round_trip(tmp_path, small_ibl):
    d = str(tmp_path / "baked")
    save_ibl(small_ibl, d)
    back = load_ibl(d)
    assert np.array_equal(back.lut, small_ibl.lut)  # npy is lossless
    assert back.num_mips == small_ibl.num_mips
    assert back.multiscatter_enabled == small_ibl.multiscatter_enabled
    assert back.seed == small_ibl.seed
    # hdr faces quantize to < 1% of the per-pixel max
    for orig, got in [(small_ibl.irradiance, back.irradiance)] + list(
            zip(small_ibl.specular, back.specular)):
        maxv = np.maximum(orig.faces.max(axis=-1, keepdims=True), 1e-30)
        assert np.all(np.abs(got.faces - orig.faces) / maxv < 0.01)


def test_ibl_manifest_contents(tmp_path, small_ibl):
    d = str(tmp_path / "baked")
    save_ibl(small_ibl, d)
    man = json.load(open(f"{d}/manifest.json"))
    assert man["num_mips"] == small_ibl.num_mips
    assert man["face_size"] == small_ibl.specular[0].res
    assert man["lut_size"] == small_ibl.lut.shape[0]


def test_ibl_load_requires_manifest(tmp_path):
    with pytest.raises(HdrFormatError, match="manifest"):
        load_ibl(str(tmp_path))


# ------------------------------------------------------------ scene files


def test_scene_minimal_primitive():
    scene = parse_scene({"objects": [{"primitive": "sphere"}]})
    assert len(scene.objects) == 1
    assert scene.width == 640 and scene.height == 480
    assert scene.camera is None and scene.lights is None
    assert scene.output_path is None


def test_scene_object_fields():
    doc = {"objects": [{
        "primitive": "box",
        "primitive_params": {"size": 2.0},
        "name": "crate",
        "pose": {"translation": [1, 2, 3], "scale": 0.5},
        "material": {"albedo": [1, 0, 0], "roughness": 0.2},
        "visible": False,
        "render_mode": "wireframe",
    }]}
    scene = parse_scene(doc)
    obj = scene.objects[0]
    assert obj.name == "crate"
    assert np.array_equal(obj.local_pose.translation, [1, 2, 3])
    assert obj.local_pose.scale == 0.5
    assert np.array_equal(obj.material.albedo, [1, 0, 0])
    assert obj.visible is False
    assert obj.render_mode_override == "wireframe"


def test_scene_parent_wiring():
    doc = {"objects": [
        {"primitive": "sphere", "name": "a"},
        {"primitive": "sphere", "name": "b", "parent": "a"},
    ]}
    scene = parse_scene(doc)
    assert scene.objects[1].parent is scene.objects[0]


def test_scene_surfelize_flag():
    scene = parse_scene({"objects": [{"primitive": "sphere", "surfelize": True}]})
    obj = scene.objects[0]
    assert obj.T is not None and obj.B is not None


def test_scene_mesh_path_relative_to_file(tmp_path):
    (tmp_path / "tri.obj").write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    doc = {"objects": [{"mesh": "tri.obj"}], "output": {"path": "out.png"}}
    p = tmp_path / "scene.json"
    p.write_text(json.dumps(doc))
    scene = parse_scene(str(p))
    assert scene.objects[0].V.shape == (3, 3)
    assert scene.output_path == str(tmp_path / "out.png")


def test_scene_lights_and_camera():
    doc = {
        "objects": [{"primitive": "sphere"}],
        "lights": [{"position": [0, 5, 0], "intensity": 3.0, "casts_shadow": False}],
        "camera": {"eye": [0, 0, 4], "target": [0, 0, 0], "fov_deg": 90},
        "output": {"width": 64, "height": 48},
    }
    scene = parse_scene(doc)
    (light,) = scene.lights
    assert np.array_equal(light.position, [0, 5, 0])
    assert light.intensity == 3.0 and light.casts_shadow is False
    assert np.array_equal(light.color, [1, 1, 1])
    cam = scene.camera
    assert cam.width == 64 and cam.height == 48
    assert cam.vertical_fov == pytest.approx(np.pi / 2)
    assert np.allclose(cam.pose.translation, [0, 0, 4])


def test_scene_camera_from_pose():
    doc = {"objects": [{"primitive": "sphere"}],
           "camera": {"pose": {"translation": [0, 0, 9]}}}
    cam = parse_scene(doc).camera
    assert np.array_equal(cam.pose.translation, [0, 0, 9])
    assert cam.vertical_fov == pytest.approx(np.radians(50.0))


def test_scene_effects_block():
    doc = {"objects": [{"primitive": "sphere"}],
           "effects": {"bloom_enabled": True, "ssao_samples": 8,
                       "background_color": [0, 0, 0], "tonemap": "reinhard"}}
    s = parse_scene(doc).settings
    assert s.bloom_enabled is True
    assert s.ssao_samples == 8
    assert s.background_color == (0, 0, 0)
    assert s.tonemap == "reinhard"


def test_scene_environment_constant():
    doc = {"objects": [{"primitive": "sphere"}],
           "environment": {"constant": 0.5, "multiscatter": False}}
    scene = parse_scene(doc)
    assert scene.environment is not None
    assert scene.environment.multiscatter_enabled is False
    assert np.allclose(scene.environment.irradiance.faces, 0.5, atol=0.01)


def test_scene_environment_from_hdr_file(tmp_path):
    write_hdr(np.full((8, 16, 3), 0.25), str(tmp_path / "env.hdr"))
    doc = {"objects": [{"primitive": "sphere"}],
           "environment": {"hdr": "env.hdr", "face_size": 8, "mips": 2,
                           "irradiance_size": 8}}
    p = tmp_path / "scene.json"
    p.write_text(json.dumps(doc))
    scene = parse_scene(str(p))
    assert scene.environment.num_mips == 2
    assert np.allclose(scene.environment.irradiance.faces, 0.25, atol=0.02)


def test_scene_environment_string_shorthand(tmp_path):
    write_hdr(np.full((4, 8, 3), 0.1), str(tmp_path / "env.hdr"))
    doc = {"objects": [{"primitive": "sphere"}], "environment": "env.hdr"}
    p = tmp_path / "scene.json"
    p.write_text(json.dumps(doc))
    assert parse_scene(str(p)).environment is not None


def test_scene_environment_baked_dir(tmp_path, small_ibl):
    d = str(tmp_path / "baked")
    save_ibl(small_ibl, d)
    doc = {"objects": [{"primitive": "sphere"}], "environment": {"baked": "baked"}}
    p = tmp_path / "scene.json"
    p.write_text(json.dumps(doc))
    env = parse_scene(str(p)).environment
    assert env.num_mips == small_ibl.num_mips
    assert np.array_equal(env.lut, small_ibl.lut)


def scene_error(doc, pointer):
    with pytest.raises(SceneFormatError) as e:
        parse_scene(doc)
    assert e.value.pointer == pointer


def test_scene_validation_pointers():
    scene_error([], "/")
    scene_error({"objects": {}}, "/objects")
    scene_error({"objects": [{"primitive": "sphere", "mesh": "x.obj"}], }, "/objects/0")
    scene_error({"objects": [{"name": "x"}]}, "/objects/0")
    scene_error({"objects": [{"primitive": "dodecahedron"}]}, "/objects/0/primitive")
    scene_error({"objects": [{"primitive": "sphere", "primitive_params": {"bogus": 1}}]},
                "/objects/0/primitive_params")
    scene_error({"objects": [{"mesh": "/no/such/file.obj"}]}, "/objects/0/mesh")
    scene_error({"objects": [{"primitive": "sphere"}, {"primitive": "sphere"}]},
                "/objects")  # duplicate default names
    scene_error({"objects": [{"primitive": "sphere", "parent": "ghost"}]}, "/objects")
    scene_error({"objects": [], "lights": [{"intensity": 1.0}]}, "/lights/0")
    scene_error({"objects": [], "lights": {}}, "/lights")
    scene_error({"objects": [], "camera": {"fov_deg": 300}}, "/camera")
    scene_error({"objects": [], "output": {"width": 1, "height": 1}}, "/output")
    scene_error({"objects": [], "environment": {}}, "/environment")
    scene_error({"objects": [], "environment": {"hdr": "/no/file.hdr"}},
                "/environment/hdr")
    scene_error({"objects": [], "effects": {"tonemap": "nope"}}, "/effects")


def test_scene_bad_json_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{nope")
    with pytest.raises(SceneFormatError, match="invalid JSON"):
        parse_scene(str(p))
    with pytest.raises(SceneFormatError, match="cannot read"):
        parse_scene(str(tmp_path / "missing.json"))


def test_scene_unknown_keys_warn():
    with pytest.warns(UserWarning, match="unknown top-level"):
        parse_scene({"objects": [], "fog": True})
    with pytest.warns(UserWarning, match="unknown keys"):
        parse_scene({"objects": [{"primitive": "sphere", "wobble": 2}]})
    with pytest.warns(UserWarning, match="unknown material"):
        parse_scene({"objects": [{"primitive": "sphere", "material": {"shiny": 1}}]})
