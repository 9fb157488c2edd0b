"""HDR to LDR: tone mapping curves and gamma quantization."""

from __future__ import annotations

import numpy as np

from .common import to_byte
from .errors import InvalidArgument

DEFAULT_GAMMA = 2.2


def tonemap_aces(hdr):
    """Filmic rational fit x(2.51x+0.03) / (x(2.43x+0.59)+0.14), clamped."""
    x = np.asarray(hdr, dtype=np.float64)
    out = x * (2.51 * x + 0.03) / (x * (2.43 * x + 0.59) + 0.14)
    return np.clip(out, 0.0, 1.0)


def tonemap_reinhard(hdr):
    """Global operator x / (1 + x)."""
    x = np.asarray(hdr, dtype=np.float64)
    return x / (1.0 + x)


def tonemap_none(hdr):
    return np.clip(np.asarray(hdr, dtype=np.float64), 0.0, 1.0)


TONEMAPPERS = {
    "aces": tonemap_aces,
    "reinhard": tonemap_reinhard,
    "none": tonemap_none,
}


def gamma_correct(linear, gamma=DEFAULT_GAMMA):
    """Linear [0,1] -> gamma-encoded uint8, byte = round(255 * x^(1/gamma))."""
    if gamma <= 0:
        raise InvalidArgument("gamma must be > 0")
    x = np.clip(np.asarray(linear, dtype=np.float64), 0.0, 1.0)
    return to_byte(x ** (1.0 / gamma))


def hdr_to_ldr(hdr, tonemap="aces", gamma=DEFAULT_GAMMA):
    try:
        mapper = TONEMAPPERS[tonemap]
    except KeyError:
        raise InvalidArgument(f"unknown tonemap '{tonemap}'") from None
    return gamma_correct(mapper(hdr), gamma)
