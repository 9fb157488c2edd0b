"""Small shared numeric helpers: quantization, resampling, luminance."""

from __future__ import annotations

import numpy as np

# Rec.709 luma weights, used for bloom thresholding and debug summaries.
LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])


def round_half_up(x):
    """Round to nearest integer, halves away from the floor side (0.5 -> 1)."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def to_byte(x):
    """Quantize [0, 1] floats to uint8 with round-half-up."""
    return np.clip(round_half_up(np.asarray(x) * 255.0), 0, 255).astype(np.uint8)


def luminance(rgb):
    return np.asarray(rgb, dtype=np.float64) @ LUMA_WEIGHTS


def hash01(*ints, seed=0):
    """Deterministic integer hash -> float in [0, 1). Arrays broadcast."""
    with np.errstate(over="ignore"):  # uint64 wrap-around is the whole point
        h = np.uint64(seed) * np.uint64(0x9E3779B97F4A7C15)
        for term, mult in zip(ints, (0x85EBCA6B, 0xC2B2AE35, 0x27D4EB2F, 0x165667B1)):
            h = h ^ (np.asarray(term, dtype=np.uint64) * np.uint64(mult))
            h = (h ^ (h >> np.uint64(33))) * np.uint64(0xFF51AFD7ED558CCD)
        h = h ^ (h >> np.uint64(33))
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def box_down2(img):
    """2x box downsample. Odd dims are edge-padded to even first."""
    a = np.asarray(img, dtype=np.float64)
    h, w = a.shape[:2]
    ph, pw = h % 2, w % 2
    if ph or pw:
        pad = ((0, ph), (0, pw)) + ((0, 0),) * (a.ndim - 2)
        a = np.pad(a, pad, mode="edge")
    return 0.25 * (a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2])


def bilinear_resize(img, out_h, out_w):
    """Bilinear resample with pixel-center alignment. Works on (H,W) or (H,W,C)."""
    a = np.asarray(img, dtype=np.float64)
    h, w = a.shape[:2]
    if (h, w) == (out_h, out_w):
        return a.copy()
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0)
    fx = np.clip(xs - x0, 0.0, 1.0)
    if a.ndim == 3:
        fy = fy[:, None, None]
        fx = fx[None, :, None]
    else:
        fy = fy[:, None]
        fx = fx[None, :]
    top = a[y0][:, x0] * (1 - fx) + a[y0][:, x1] * fx
    bot = a[y1][:, x0] * (1 - fx) + a[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy


def gaussian_blur_9(img):
    """Separable 9-tap binomial blur with edge-replicated borders."""
    kernel = np.array([1, 8, 28, 56, 70, 56, 28, 8, 1], dtype=np.float64) / 256.0
    a = np.asarray(img, dtype=np.float64)
    pad = ((4, 4), (0, 0)) + ((0, 0),) * (a.ndim - 2)
    tmp = np.pad(a, pad, mode="edge")
    out = np.zeros_like(a)
    for i, k in enumerate(kernel):
        out += k * tmp[i : i + a.shape[0]]
    pad = ((0, 0), (4, 4)) + ((0, 0),) * (a.ndim - 2)
    tmp = np.pad(out, pad, mode="edge")
    out = np.zeros_like(a)
    for i, k in enumerate(kernel):
        out += k * tmp[:, i : i + a.shape[1]]
    return out
