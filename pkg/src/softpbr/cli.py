"""Headless command line: render a scene, bake environment assets, render a
camera trajectory, or start the interactive render service.

Exit codes: 0 success, 2 scene/validation errors, 3 I/O errors.  All
commands are deterministic given --seed.  --threads caps intra-frame
parallelism; output never depends on it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import replace

from .errors import (EmptySceneError, GraphCycleError, HdrFormatError,
                     InvalidArgument, MeshLoadError, RenderError, SceneFormatError)

EXIT_OK = 0
EXIT_SCENE = 2
EXIT_IO = 3

_SCENE_ERRORS = (SceneFormatError, InvalidArgument, MeshLoadError,
                 EmptySceneError, GraphCycleError)


def _build_parser():
    p = argparse.ArgumentParser(
        prog="softpbr",
        description="Deterministic CPU renderer: physically based shading, "
                    "point clouds and surfel splats, baked environment lighting.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render a scene file to a PNG")
    r.add_argument("--scene", required=True, help="scene JSON path")
    r.add_argument("--out", help="output PNG (default: scene's output.path or out.png)")
    r.add_argument("--width", type=int, help="override output width")
    r.add_argument("--height", type=int, help="override output height")
    r.add_argument("--dump-gbuffer", metavar="DIR",
                   help="also write albedo/normals/metal_rough/ssao/final channel PNGs")
    r.add_argument("--seed", type=int, help="override the effect sampling seed")
    r.add_argument("--threads", type=int, default=1,
                   help="max worker threads (output is identical for any value)")

    b = sub.add_parser("bake", help="bake an equirect HDR into an environment set")
    b.add_argument("--hdr", required=True, help="equirectangular Radiance .hdr")
    b.add_argument("--out", required=True, help="output directory")
    b.add_argument("--face-size", type=int, default=128)
    b.add_argument("--mips", type=int, default=5)
    b.add_argument("--irradiance", type=int, default=32)
    b.add_argument("--lut", type=int, default=64)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--no-multiscatter", action="store_true")

    t = sub.add_parser("trajectory", help="render a camera path to numbered PNGs")
    t.add_argument("--scene", required=True)
    t.add_argument("--poses", required=True,
                   help="JSON list of {pose, duration}; duration = seconds from the previous pose")
    t.add_argument("--fps", type=float, default=30.0)
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--seed", type=int)
    t.add_argument("--threads", type=int, default=1)

    s = sub.add_parser("serve", help="start the interactive HTTP render service")
    s.add_argument("--scene", help="scene JSON to load at startup")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8008)
    return p


def _load_scene(args):
    from .assets import parse_scene
    scene = parse_scene(args.scene)
    if getattr(args, "seed", None) is not None:
        scene.settings = replace(scene.settings, seed=args.seed)
    return scene


def cmd_render(args):
    from .assets import write_png
    from .pipeline import render_frame

    scene = _load_scene(args)
    scene.finalize(width=args.width, height=args.height)
    sink = {} if args.dump_gbuffer else None
    _, ldr, _ = render_frame(scene, debug_sink=sink)
    out = args.out or getattr(scene, "output_path", None) or "out.png"
    write_png(ldr, out)
    if sink is not None:
        os.makedirs(args.dump_gbuffer, exist_ok=True)
        for name in ("albedo", "normals", "metal_rough", "ssao", "final"):
            write_png(sink[name], os.path.join(args.dump_gbuffer, f"{name}.png"))
    digest = hashlib.sha256(ldr.tobytes()).hexdigest()
    print(f"{out} {scene.width}x{scene.height} sha256:{digest[:16]}")
    return EXIT_OK


def cmd_bake(args):
    from .assets import read_hdr, save_ibl
    from .ibl import bake_ibl

    if args.mips < 2:
        print("bake: --mips must be >= 2 (mip 0 is roughness 0, the last is roughness 1)",
              file=sys.stderr)
        return EXIT_SCENE
    if args.lut < 16 or args.face_size < 4 or args.irradiance < 2:
        print("bake: sizes too small (--lut >= 16, --face-size >= 4, --irradiance >= 2)",
              file=sys.stderr)
        return EXIT_SCENE
    try:
        equirect = read_hdr(args.hdr)
    except (OSError, HdrFormatError) as e:
        print(f"bake: {e}", file=sys.stderr)
        return EXIT_IO
    ibl = bake_ibl(equirect, face_size=args.face_size, num_mips=args.mips,
                   irradiance_size=args.irradiance, lut_size=args.lut,
                   seed=args.seed, multiscatter=not args.no_multiscatter)
    save_ibl(ibl, args.out)
    print(f"{args.out}: {args.mips} specular mips at {args.face_size}^2, "
          f"irradiance {args.irradiance}^2, lut {args.lut}^2")
    return EXIT_OK


def cmd_trajectory(args):
    from .geom import Pose
    from .pipeline import render_trajectory

    scene = _load_scene(args)
    try:
        with open(args.poses) as fh:
            entries = json.load(fh)
    except OSError as e:
        print(f"trajectory: {e}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as e:
        print(f"trajectory: invalid JSON in {args.poses}: {e}", file=sys.stderr)
        return EXIT_SCENE
    if not isinstance(entries, list) or len(entries) < 2:
        print("trajectory: need a JSON list of at least 2 {pose, duration} entries",
              file=sys.stderr)
        return EXIT_SCENE
    poses, durations = [], []
    for i, entry in enumerate(entries):
        d = entry.get("pose", entry) if isinstance(entry, dict) else None
        if d is None:
            print(f"trajectory: entry {i} is not an object", file=sys.stderr)
            return EXIT_SCENE
        rot = d.get("rotation_wxyz", d.get("rotation_quat_wxyz", (1.0, 0.0, 0.0, 0.0)))
        poses.append(Pose(rotation=rot, translation=d.get("translation", (0.0, 0.0, 0.0)),
                          scale=d.get("scale", 1.0)))
        if i > 0:
            durations.append(float(entry.get("duration", 1.0)))
    os.makedirs(args.out, exist_ok=True)
    frames = render_trajectory(scene, poses, durations, args.fps, out_dir=args.out)
    print(f"{args.out}: {len(frames)} frames at {args.fps} fps")
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    from .serve import create_app

    app = create_app(scene_path=args.scene)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {
        "render": cmd_render,
        "bake": cmd_bake,
        "trajectory": cmd_trajectory,
        "serve": cmd_serve,
    }[args.command]
    try:
        return handler(args)
    except _SCENE_ERRORS as e:
        print(f"{args.command}: {e}", file=sys.stderr)
        return EXIT_SCENE
    except (OSError, HdrFormatError) as e:
        print(f"{args.command}: {e}", file=sys.stderr)
        return EXIT_IO
    except RenderError as e:
        print(f"{args.command}: {e}", file=sys.stderr)
        return EXIT_SCENE


if __name__ == "__main__":
    sys.exit(main())
