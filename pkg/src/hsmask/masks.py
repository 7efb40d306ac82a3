"""Binary raster masks as canonical run-length encodings, plus boolean algebra.

The encoding is row-major, alternating runs of 0s then 1s, always starting
with the 0-run (which may be zero-length). Only the leading run may be zero,
so every bitmap has exactly one encoding.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import BadRunSum, DimensionMismatch, InvalidRle


@dataclass(frozen=True)
class BBox:
    """Half-open integer pixel box: x in [x0, x1), y in [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate box {self}")
        if min(self.x0, self.y0) < 0:
            raise ValueError(f"negative coordinates in {self}")

    def within_raster(self, width: int, height: int) -> bool:
        return self.x1 <= width and self.y1 <= height


@dataclass(frozen=True)
class BinaryMask:
    width: int
    height: int
    rle: tuple[int, ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidRle(f"non-positive raster dimensions {self.width}x{self.height}")
        object.__setattr__(self, "rle", tuple(int(r) for r in self.rle))
        if any(r < 0 for r in self.rle):
            raise InvalidRle("negative run length")
        if any(r == 0 for r in self.rle[1:]):
            raise InvalidRle("zero-length run after the leading run")
        total = sum(self.rle)
        if total != self.width * self.height:
            raise BadRunSum(self.width * self.height, total)

    @cached_property
    def popcount(self) -> int:
        return int(sum(self.rle[1::2]))

    @classmethod
    def from_bitmap(cls, bitmap: np.ndarray) -> "BinaryMask":
        """Canonical encoding of a (height, width) boolean bitmap."""
        bitmap = np.asarray(bitmap, dtype=bool)
        if bitmap.ndim != 2:
            raise InvalidRle(f"bitmap must be 2-D, got shape {bitmap.shape}")
        height, width = bitmap.shape
        flat = bitmap.ravel()
        if flat.size == 0:
            raise InvalidRle("empty bitmap")
        boundaries = np.flatnonzero(flat[1:] != flat[:-1]) + 1
        edges = np.concatenate(([0], boundaries, [flat.size]))
        runs = np.diff(edges).tolist()
        if flat[0]:
            runs = [0] + runs
        return cls(width=width, height=height, rle=tuple(runs))

    def to_bitmap(self) -> np.ndarray:
        values = (np.arange(len(self.rle)) % 2).astype(bool)
        flat = np.repeat(values, np.asarray(self.rle, dtype=np.int64))
        return flat.reshape(self.height, self.width)

    @classmethod
    def all_off(cls, width: int, height: int) -> "BinaryMask":
        return cls(width, height, (width * height,))

    @classmethod
    def all_on(cls, width: int, height: int) -> "BinaryMask":
        return cls(width, height, (0, width * height))

    def to_json(self) -> dict:
        return {"width": self.width, "height": self.height, "rle": list(self.rle)}

    @classmethod
    def from_json(cls, obj: dict) -> "BinaryMask":
        for key in ("width", "height", "rle"):
            if key not in obj:
                raise InvalidRle(f"mask object missing '{key}'")
        width, height, rle = obj["width"], obj["height"], obj["rle"]
        if not isinstance(width, int) or not isinstance(height, int):
            raise InvalidRle("mask dimensions must be integers")
        if not isinstance(rle, list) or not all(isinstance(r, int) for r in rle):
            raise InvalidRle("rle must be a list of integers")
        return cls(width=width, height=height, rle=tuple(rle))


def _check_dims(a: BinaryMask, b: BinaryMask) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}")


def mask_union(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    _check_dims(a, b)
    return BinaryMask.from_bitmap(a.to_bitmap() | b.to_bitmap())


def mask_intersection(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    _check_dims(a, b)
    return BinaryMask.from_bitmap(a.to_bitmap() & b.to_bitmap())


def mask_difference(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    _check_dims(a, b)
    return BinaryMask.from_bitmap(a.to_bitmap() & ~b.to_bitmap())


def mask_xor(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    _check_dims(a, b)
    return BinaryMask.from_bitmap(a.to_bitmap() ^ b.to_bitmap())


def union_all(masks, width: int, height: int) -> BinaryMask:
    """Union of any number of same-raster masks; empty input gives all-off."""
    acc = np.zeros((height, width), dtype=bool)
    for mask in masks:
        if (mask.width, mask.height) != (width, height):
            raise DimensionMismatch(
                f"mask {mask.width}x{mask.height} on {width}x{height} raster")
        acc |= mask.to_bitmap()
    return BinaryMask.from_bitmap(acc)


def tight_bbox(mask: BinaryMask) -> BBox | None:
    """Minimal half-open box covering all on-pixels; None for an empty mask."""
    bitmap = mask.to_bitmap()
    rows = np.flatnonzero(bitmap.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(bitmap.any(axis=0))
    return BBox(x0=int(cols[0]), y0=int(rows[0]),
                x1=int(cols[-1]) + 1, y1=int(rows[-1]) + 1)
