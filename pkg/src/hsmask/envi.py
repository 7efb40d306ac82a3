"""ENVI-style header + raw binary cube I/O.

Headers are ``key = value`` text files with case-insensitive keys and
brace-delimited lists that may span lines. Raw payloads are dense arrays in
one of three interleaves (BSQ, BIL, BIP). In memory the cube is always
band-sequential, shape ``(bands, lines, samples)``; interleave is an
I/O-only concept.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    InputMissing,
    LossyNarrowing,
    MalformedValue,
    MissingKey,
    NonFiniteData,
    TruncatedPayload,
    UnsupportedDataType,
)

# ENVI data type codes supported by this package. Other codes are rejected.
DTYPE_CODES: dict[int, np.dtype] = {
    1: np.dtype("u1"),
    2: np.dtype("i2"),
    4: np.dtype("f4"),
    5: np.dtype("f8"),
    12: np.dtype("u2"),
}

_MANDATORY_KEYS = ("samples", "lines", "bands", "data type", "interleave")


class Interleave(str, Enum):
    BSQ = "bsq"
    BIL = "bil"
    BIP = "bip"

    @classmethod
    def parse(cls, text: str) -> "Interleave":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise MalformedValue("interleave", f"unknown interleave {text!r}") from None


@dataclass
class EnviHeader:
    samples: int
    lines: int
    bands: int
    data_type: int
    interleave: Interleave
    byte_order: str = "little"
    header_offset: int = 0
    wavelength: list[float] | None = None
    extra: dict[str, str] = field(default_factory=dict)

    @property
    def dtype(self) -> np.dtype:
        base = DTYPE_CODES[self.data_type]
        return base.newbyteorder("<" if self.byte_order == "little" else ">")

    @property
    def payload_bytes(self) -> int:
        return self.samples * self.lines * self.bands * self.dtype.itemsize


@dataclass
class HyperCube:
    """Dense reflectance cube, canonical band-sequential layout.

    ``data`` has shape (bands, lines, samples). ``wavelengths`` is optional;
    analytics that need physical units refuse to run when it is absent.
    """

    samples: int
    lines: int
    bands: int
    wavelengths: tuple[float, ...] | None
    data: np.ndarray

    def __post_init__(self):
        if min(self.samples, self.lines, self.bands) <= 0:
            raise ValueError("cube dimensions must be positive")
        if self.data.shape != (self.bands, self.lines, self.samples):
            raise ValueError(
                f"data shape {self.data.shape} != (bands, lines, samples) "
                f"({self.bands}, {self.lines}, {self.samples})")
        if self.wavelengths is not None:
            wl = tuple(float(w) for w in self.wavelengths)
            if len(wl) != self.bands:
                raise ValueError(f"{len(wl)} wavelengths for {self.bands} bands")
            if any(b <= a for a, b in zip(wl, wl[1:])):
                raise ValueError("wavelengths must be strictly increasing")
            self.wavelengths = wl

    @classmethod
    def from_array(cls, data: np.ndarray, wavelengths=None) -> "HyperCube":
        b, l, s = data.shape
        wl = tuple(float(w) for w in wavelengths) if wavelengths is not None else None
        return cls(samples=s, lines=l, bands=b, wavelengths=wl, data=data)

    @property
    def spatial_shape(self) -> tuple[int, int]:
        return (self.lines, self.samples)

    @property
    def n_pixels(self) -> int:
        return self.lines * self.samples


# --- header text -------------------------------------------------------------

def _normalize_key(raw: str) -> str:
    return re.sub(r"\s+", " ", raw.strip().lower())


def _tokenize(text: str) -> dict[str, str]:
    """Split header text into raw key -> value strings.

    Brace blocks are joined into a single line. Later duplicates win.
    """
    entries: dict[str, str] = {}
    pending_key: str | None = None
    pending: list[str] = []
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if pending_key is not None:
            pending.append(line)
            if "}" in line:
                entries[pending_key] = " ".join(pending)
                pending_key, pending = None, []
            continue
        if not line or line.upper() == "ENVI":
            continue
        if "=" not in line:
            raise MalformedValue(line[:40], "expected 'key = value'")
        key_part, value_part = line.split("=", 1)
        key = _normalize_key(key_part)
        if not key:
            raise MalformedValue(line[:40], "empty key")
        value = value_part.strip()
        if value.startswith("{") and "}" not in value:
            pending_key, pending = key, [value]
            continue
        entries[key] = value
    if pending_key is not None:
        raise MalformedValue(pending_key, "unterminated '{' list")
    return entries


def _parse_int(entries: dict[str, str], key: str, minimum: int) -> int:
    try:
        value = int(entries[key].strip())
    except ValueError:
        raise MalformedValue(key, f"not an integer: {entries[key]!r}") from None
    if value < minimum:
        raise MalformedValue(key, f"must be >= {minimum}, got {value}")
    return value


def _parse_float_list(key: str, raw: str) -> list[float]:
    inner = raw.strip()
    if inner.startswith("{"):
        inner = inner[1:]
    if inner.endswith("}"):
        inner = inner[:-1]
    tokens = [t for t in re.split(r"[,\s]+", inner) if t]
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise MalformedValue(key, f"non-numeric list entry: {exc}") from None


def parse_header(text: str) -> EnviHeader:
    """Parse ENVI header text into a typed header.

    All failures are raised as typed schema errors; arbitrary input never
    escapes as an untyped exception.
    """
    entries = _tokenize(text)
    for key in _MANDATORY_KEYS:
        if key not in entries:
            raise MissingKey(key)

    samples = _parse_int(entries, "samples", 1)
    lines = _parse_int(entries, "lines", 1)
    bands = _parse_int(entries, "bands", 1)
    data_type = _parse_int(entries, "data type", 0)
    if data_type not in DTYPE_CODES:
        raise UnsupportedDataType(data_type)
    interleave = Interleave.parse(entries["interleave"])

    byte_order = "little"
    if "byte order" in entries:
        token = entries["byte order"].strip().lower()
        if token in ("0", "little"):
            byte_order = "little"
        elif token in ("1", "big"):
            byte_order = "big"
        else:
            raise MalformedValue("byte order", f"expected 0 or 1, got {token!r}")

    header_offset = 0
    if "header offset" in entries:
        header_offset = _parse_int(entries, "header offset", 0)

    wavelength = None
    if "wavelength" in entries:
        wavelength = _parse_float_list("wavelength", entries["wavelength"])

    handled = set(_MANDATORY_KEYS) | {"byte order", "header offset", "wavelength"}
    extra = {k: v for k, v in entries.items() if k not in handled}
    return EnviHeader(samples, lines, bands, data_type, interleave,
                      byte_order, header_offset, wavelength, extra)


def format_header(header: EnviHeader) -> str:
    lines = [
        "ENVI",
        f"samples = {header.samples}",
        f"lines = {header.lines}",
        f"bands = {header.bands}",
        f"header offset = {header.header_offset}",
        f"data type = {header.data_type}",
        f"interleave = {header.interleave.value}",
        f"byte order = {0 if header.byte_order == 'little' else 1}",
    ]
    if header.wavelength is not None:
        lines.append("wavelength = {" + ", ".join(repr(w) for w in header.wavelength) + "}")
    for key, value in header.extra.items():
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


# --- raw payload -------------------------------------------------------------

def read_cube(header: EnviHeader, raw: bytes, wavelengths=None,
              allow_nan: bool = False) -> HyperCube:
    """Decode a raw payload into the canonical band-sequential cube.

    Integer payloads are promoted to float32 (lossless for the supported
    types). A wrong byte order is only detectable through the size check;
    values are not second-guessed.
    """
    dtype = header.dtype
    count = header.samples * header.lines * header.bands
    needed = header.header_offset + count * dtype.itemsize
    if len(raw) < needed:
        raise TruncatedPayload(needed, len(raw))
    flat = np.frombuffer(raw, dtype=dtype, count=count, offset=header.header_offset)

    b, l, s = header.bands, header.lines, header.samples
    if header.interleave is Interleave.BSQ:
        arr = flat.reshape(b, l, s)
    elif header.interleave is Interleave.BIL:
        arr = flat.reshape(l, b, s).transpose(1, 0, 2)
    else:
        arr = flat.reshape(l, s, b).transpose(2, 0, 1)

    if dtype.kind in "ui":
        data = arr.astype(np.float32)
    else:
        data = np.ascontiguousarray(arr).astype(dtype.newbyteorder("="), copy=False)

    if np.isinf(data).any():
        raise NonFiniteData("payload contains infinite values")
    if not allow_nan and np.isnan(data).any():
        raise NonFiniteData("payload contains NaN and no no-data fill was declared")

    wl = wavelengths if wavelengths is not None else header.wavelength
    if wl is not None:
        if len(wl) != b:
            raise MalformedValue("wavelength", f"{len(wl)} values for {b} bands")
        if any(y <= x for x, y in zip(wl, wl[1:])):
            raise MalformedValue("wavelength", "not strictly increasing")
    return HyperCube(samples=s, lines=l, bands=b,
                     wavelengths=tuple(wl) if wl is not None else None,
                     data=data)


def _narrow_to_int(data: np.ndarray, dtype: np.dtype, quantize: bool) -> np.ndarray:
    info = np.iinfo(dtype)
    if quantize:
        if not np.isfinite(data).all():
            raise LossyNarrowing("cannot quantize non-finite values to an integer type")
        return np.clip(np.rint(data), info.min, info.max).astype(dtype)
    if not np.isfinite(data).all():
        raise LossyNarrowing("non-finite values cannot be written to an integer type")
    if not np.array_equal(data, np.rint(data)):
        raise LossyNarrowing("float data is not integral; pass quantize=True to round")
    if data.min() < info.min or data.max() > info.max:
        raise LossyNarrowing(f"values outside [{info.min}, {info.max}] for type code")
    return data.astype(dtype)


def write_cube(cube: HyperCube, interleave: Interleave = Interleave.BSQ,
               data_type: int | None = None, byte_order: str = "little",
               quantize: bool = False, extra: dict[str, str] | None = None
               ) -> tuple[str, bytes]:
    """Serialize a cube to (header text, raw bytes).

    Float payloads round-trip bit-exactly through read_cube/parse_header.
    Writing float data to an integer type raises LossyNarrowing unless
    quantize=True is passed, in which case values are rounded and clipped.
    """
    if data_type is None:
        data_type = 5 if cube.data.dtype == np.float64 else 4
    if data_type not in DTYPE_CODES:
        raise UnsupportedDataType(data_type)
    base = DTYPE_CODES[data_type]
    out_dtype = base.newbyteorder("<" if byte_order == "little" else ">")

    if base.kind in "ui":
        data = _narrow_to_int(cube.data, out_dtype, quantize)
    else:
        data = cube.data.astype(out_dtype, copy=False)

    if interleave is Interleave.BSQ:
        disk = data
    elif interleave is Interleave.BIL:
        disk = data.transpose(1, 0, 2)
    else:
        disk = data.transpose(1, 2, 0)
    raw = np.ascontiguousarray(disk).tobytes()

    header = EnviHeader(
        samples=cube.samples, lines=cube.lines, bands=cube.bands,
        data_type=data_type, interleave=interleave, byte_order=byte_order,
        header_offset=0,
        wavelength=list(cube.wavelengths) if cube.wavelengths is not None else None,
        extra=dict(extra) if extra else {},
    )
    return format_header(header), raw


# --- file helpers ------------------------------------------------------------

_RAW_SUFFIXES = (".raw", ".img", ".dat", ".bsq", ".bil", ".bip", "")


def locate_raw(hdr_path: Path) -> Path:
    """Find the raw payload next to a header file.

    Handles both 'cube.hdr' + 'cube.raw' and 'cube.raw.hdr' + 'cube.raw'.
    """
    hdr_path = Path(hdr_path)
    sibling = hdr_path.with_suffix("")
    if sibling.suffix and sibling.exists():
        return sibling
    stem = hdr_path.with_suffix("")
    for suffix in _RAW_SUFFIXES:
        candidate = stem.with_suffix(suffix) if suffix else stem
        if candidate != hdr_path and candidate.exists():
            return candidate
    raise InputMissing(f"{stem}.raw (no raw payload found for {hdr_path})")


def read_cube_file(hdr_path, wavelengths=None) -> HyperCube:
    hdr_path = Path(hdr_path)
    if not hdr_path.exists():
        raise InputMissing(hdr_path)
    header = parse_header(hdr_path.read_text(encoding="utf-8"))
    raw = locate_raw(hdr_path).read_bytes()
    # A declared no-data value marks a masked export; NaN is then legitimate.
    allow_nan = "data ignore value" in header.extra
    return read_cube(header, raw, wavelengths=wavelengths, allow_nan=allow_nan)


def write_cube_files(cube: HyperCube, stem, interleave: Interleave = Interleave.BSQ,
                     data_type: int | None = None, quantize: bool = False,
                     extra: dict[str, str] | None = None) -> tuple[Path, Path]:
    stem = Path(stem)
    text, raw = write_cube(cube, interleave=interleave, data_type=data_type,
                           quantize=quantize, extra=extra)
    hdr_path = stem.with_suffix(".hdr")
    raw_path = stem.with_suffix(".raw")
    stem.parent.mkdir(parents=True, exist_ok=True)
    hdr_path.write_text(text, encoding="utf-8")
    raw_path.write_bytes(raw)
    return hdr_path, raw_path
