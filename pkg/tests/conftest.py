"""Shared helpers: deterministic synthetic raster images."""
import math

import numpy as np
import pytest

from spheremark import RasterImage
from spheremark.streams import stream

_IMG_DOMAIN = 0x53594E54


def make_image(seed: int, height: int = 256, width: int = 256,
               color: bool = True) -> RasterImage:
    """Smooth low-frequency content plus mild texture noise.

    Stays inside [8, 247] so a 42 dB embedding never clips.
    """
    rng = stream(seed, _IMG_DOMAIN, height, width)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    base = (
        128.0
        + 40.0 * np.sin(2.0 * math.pi * yy / 97.0)
        + 35.0 * np.cos(2.0 * math.pi * xx / 61.0)
        + 20.0 * np.sin(2.0 * math.pi * (xx + yy) / 143.0)
    )
    if color:
        px = base[:, :, None] + rng.uniform(-15.0, 15.0, size=3)[None, None, :]
    else:
        px = base[:, :, None]
    px = px + rng.normal(0.0, 4.0, size=px.shape)
    return RasterImage(np.clip(np.rint(px), 8, 247).astype(np.uint8))


@pytest.fixture
def synth_image():
    return make_image
