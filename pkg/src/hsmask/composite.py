"""Three-band false-color composite generation.

The composite is the 8-bit RGB image that downstream segmenters and
detectors consume; its pixel grid is exactly the cube's spatial grid, so
masks drawn on it project back onto the cube one-to-one.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .envi import HyperCube
from .errors import BandOutOfRange, EmptyCube


@dataclass(frozen=True)
class BandTriple:
    r_band: int
    g_band: int
    b_band: int

    def indices(self) -> tuple[int, int, int]:
        return (self.r_band, self.g_band, self.b_band)


def _stretch_channel(band: np.ndarray, p_low: float, p_high: float) -> np.ndarray:
    lo, hi = np.percentile(band, [p_low, p_high])
    if hi <= lo:
        # Degenerate percentile range (constant band): map to 0 by convention.
        return np.zeros(band.shape, dtype=np.uint8)
    scaled = np.clip((band - lo) / (hi - lo), 0.0, 1.0) * 255.0
    return np.rint(scaled).astype(np.uint8)


def compose(cube: HyperCube, triple: BandTriple,
            stretch: tuple[float, float] = (2.0, 98.0)) -> np.ndarray:
    """Build an (lines, samples, 3) uint8 raster from three cube bands.

    Each channel is independently stretched from its [p_low, p_high]
    percentile range (linear interpolation between order statistics) to
    [0, 255], clamping outside the range.
    """
    if cube.n_pixels == 0:
        raise EmptyCube("cube has no pixels")
    p_low, p_high = stretch
    if not (0.0 <= p_low < p_high <= 100.0):
        raise ValueError(f"invalid stretch percentiles ({p_low}, {p_high})")
    channels = []
    for index in triple.indices():
        if not 0 <= index < cube.bands:
            raise BandOutOfRange(index, cube.bands)
        channels.append(_stretch_channel(cube.data[index].astype(np.float64),
                                         p_low, p_high))
    return np.stack(channels, axis=-1)


def write_png(pixels: np.ndarray, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels, mode="RGB").save(path, format="PNG")
    return path


def read_png(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))
