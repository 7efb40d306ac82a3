"""Exception taxonomy shared by the library, the HTTP service and the CLI.

Three broad classes map onto process exit codes (and HTTP statuses):
domain errors exit 2 (HTTP 400), schema/format errors exit 3 (HTTP 422),
sidecar failures exit 4 (HTTP 502).
"""

from __future__ import annotations


class HsmaskError(Exception):
    """Base class for all typed failures raised by this package."""

    exit_code = 1


class DomainError(HsmaskError):
    """A valid request that cannot be honoured by the data at hand."""

    exit_code = 2


class SchemaError(HsmaskError):
    """Malformed or contract-violating file content or configuration."""

    exit_code = 3


class SidecarError(HsmaskError):
    """The external proposal-generator process failed or misbehaved."""

    exit_code = 4


# --- ENVI container ---------------------------------------------------------

class MissingKey(SchemaError):
    def __init__(self, name: str):
        super().__init__(f"header is missing mandatory key '{name}'")
        self.name = name


class MalformedValue(SchemaError):
    def __init__(self, key: str, reason: str):
        super().__init__(f"bad value for '{key}': {reason}")
        self.key = key
        self.reason = reason


class UnsupportedDataType(SchemaError):
    def __init__(self, code):
        super().__init__(f"unsupported ENVI data type code {code!r}; "
                         "supported codes are 1, 2, 4, 5, 12")
        self.code = code


class TruncatedPayload(SchemaError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"raw payload too short: need {expected} bytes, have {actual}")
        self.expected = expected
        self.actual = actual


class LossyNarrowing(DomainError):
    """Float data written to an integer type without explicit quantization."""


class NonFiniteData(DomainError):
    """Cube payload contains NaN/inf where finite values are required."""


# --- masks and interchange ---------------------------------------------------

class BadRunSum(SchemaError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"run lengths sum to {actual}, expected width*height = {expected}")
        self.expected = expected
        self.actual = actual


class InvalidRle(SchemaError):
    """Non-canonical run-length encoding (negative or interior zero runs)."""


class DimensionMismatch(DomainError):
    """Two rasters that must share dimensions do not."""


class RasterMismatch(DomainError):
    """Proposals/detections/masks do not live on the same pixel raster."""


# --- composite ---------------------------------------------------------------

class BandOutOfRange(DomainError):
    def __init__(self, index: int, bands: int):
        super().__init__(f"band index {index} out of range for cube with {bands} bands")
        self.index = index
        self.bands = bands


class EmptyCube(DomainError):
    """Cube has no pixels to operate on."""


# --- analytics ---------------------------------------------------------------

class TooFewVectors(DomainError):
    """Masked-in vector count below the minimum required by the operation."""


class BandMismatch(DomainError):
    """Model and cube disagree on the number of spectral bands."""


class NonPositiveReflectance(DomainError):
    """Continuum removal requires strictly positive reflectance values."""


class MissingWavelengths(DomainError):
    """Operation needs per-band wavelengths and the cube has none."""


# --- orchestration -----------------------------------------------------------

class InputMissing(DomainError):
    def __init__(self, path):
        super().__init__(f"input file not found: {path}")
        self.path = str(path)
