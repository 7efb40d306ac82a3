"""Projection of a region-of-interest mask onto a cube, plus vector counts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .envi import HyperCube, Interleave, write_cube_files
from .errors import DimensionMismatch
from .masks import BinaryMask


@dataclass
class MaskedCube:
    """A cube restricted to the mask's on-pixels.

    ``coords`` holds (line, sample) pairs in row-major scan order and
    ``spectra`` the matching (n, bands) reflectance rows. ``filled_data`` is
    a copy of the cube with every off-pixel set to the fill value in every
    band, for raster-style export.
    """

    cube: HyperCube
    mask: BinaryMask
    fill: float
    coords: np.ndarray
    spectra: np.ndarray
    filled_data: np.ndarray

    @property
    def n_vectors(self) -> int:
        return self.coords.shape[0]

    def iter_vectors(self):
        for (line, sample), spectrum in zip(self.coords, self.spectra):
            yield int(line), int(sample), spectrum


@dataclass(frozen=True)
class MaskStats:
    total_vectors: int
    kept_vectors: int

    @property
    def reduction_ratio(self) -> float:
        return 1.0 - self.kept_vectors / self.total_vectors

    def to_json(self) -> dict:
        return {"total_vectors": self.total_vectors,
                "kept_vectors": self.kept_vectors,
                "reduction_ratio": self.reduction_ratio}


def _check_mask(cube: HyperCube, mask: BinaryMask) -> None:
    if (mask.width, mask.height) != (cube.samples, cube.lines):
        raise DimensionMismatch(
            f"mask is {mask.width}x{mask.height}, cube spatial grid is "
            f"{cube.samples}x{cube.lines}")


def apply_mask(cube: HyperCube, mask: BinaryMask, fill: float = math.nan) -> MaskedCube:
    """Extract masked-in vectors (row-major) and build the filled raster copy."""
    _check_mask(cube, mask)
    bitmap = mask.to_bitmap()
    lines_idx, samples_idx = np.nonzero(bitmap)
    coords = np.stack([lines_idx, samples_idx], axis=1).astype(np.int64)
    spectra = cube.data[:, lines_idx, samples_idx].T.copy()
    filled = cube.data.copy()
    filled[:, ~bitmap] = fill
    return MaskedCube(cube=cube, mask=mask, fill=float(fill),
                      coords=coords, spectra=spectra, filled_data=filled)


def mask_stats(cube: HyperCube, mask: BinaryMask) -> MaskStats:
    _check_mask(cube, mask)
    return MaskStats(total_vectors=cube.n_pixels, kept_vectors=mask.popcount)


def export_masked_cube(masked: MaskedCube, stem,
                       interleave: Interleave = Interleave.BSQ,
                       data_type: int | None = None, quantize: bool = False):
    """Write the filled cube as an ENVI pair, tagging the no-data value.

    NaN has no integer representation, so integer exports substitute 0 for
    the fill (the on-pixel values themselves must still narrow cleanly).
    """
    data = masked.filled_data
    fill = masked.fill
    if data_type in (1, 2, 12) and math.isnan(fill):
        fill = 0.0
        data = data.copy()
        data[:, ~masked.mask.to_bitmap()] = fill
    out = HyperCube(samples=masked.cube.samples, lines=masked.cube.lines,
                    bands=masked.cube.bands, wavelengths=masked.cube.wavelengths,
                    data=data)
    ignore = "nan" if math.isnan(fill) else repr(fill)
    return write_cube_files(out, stem, interleave=interleave,
                            data_type=data_type, quantize=quantize,
                            extra={"data ignore value": ignore})
