"""Bake an environment set (irradiance + specular mips + BRDF table).

With --hdr, bakes the given equirectangular Radiance probe.  Without it,
synthesizes a simple outdoor sky (horizon gradient plus a warm sun disc),
writes it as sky.hdr next to the output, and bakes that.  The output
directory is loadable by scene files via {"environment": {"baked": ...}}.
"""

import argparse
import os

import numpy as np

from softpbr.assets import read_hdr, save_ibl, write_hdr
from softpbr.ibl import bake_ibl, equirect_uv_to_dir


def procedural_sky(height=128):
    width = 2 * height
    u = (np.arange(width) + 0.5) / width
    v = (np.arange(height) + 0.5) / height
    uu, vv = np.meshgrid(u, v)
    d = equirect_uv_to_dir(uu, vv)
    up = np.clip(d[..., 1], -1.0, 1.0)
    zenith = np.array([0.35, 0.55, 0.95])
    horizon = np.array([0.85, 0.8, 0.75])
    ground = np.array([0.25, 0.22, 0.2])
    t = np.clip(up, 0.0, 1.0)[..., None] ** 0.6
    sky = horizon + (zenith - horizon) * t
    img = np.where(up[..., None] >= 0.0, sky, ground)
    sun_dir = np.array([0.5, 0.6, 0.3])
    sun_dir = sun_dir / np.linalg.norm(sun_dir)
    cos = np.sum(d * sun_dir, axis=-1)
    sun = np.clip(cos - 0.995, 0.0, 1.0)[..., None] / 0.005
    img = img + np.array([40.0, 36.0, 30.0]) * sun
    return img.astype(np.float64)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hdr", help="equirectangular .hdr probe (else synthesize)")
    ap.add_argument("--out", default="baked_env")
    ap.add_argument("--face-size", type=int, default=128)
    ap.add_argument("--mips", type=int, default=5)
    ap.add_argument("--irradiance", type=int, default=32)
    ap.add_argument("--lut", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if args.hdr:
        equirect = read_hdr(args.hdr)
        source = args.hdr
    else:
        equirect = procedural_sky()
        os.makedirs(args.out, exist_ok=True)
        source = os.path.join(args.out, "sky.hdr")
        write_hdr(equirect, source)

    ibl = bake_ibl(equirect, face_size=args.face_size, num_mips=args.mips,
                   irradiance_size=args.irradiance, lut_size=args.lut,
                   seed=args.seed)
    save_ibl(ibl, args.out)
    print(f"{source} -> {args.out}: {args.mips} mips at {args.face_size}^2, "
          f"irradiance {args.irradiance}^2, lut {args.lut}^2")


if __name__ == "__main__":
    main()
