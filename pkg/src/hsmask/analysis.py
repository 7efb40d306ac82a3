"""Masked analytics: band-wise PCA over masked-in vectors and
minimum-wavelength mapping via convex-hull continuum removal.

Everything here consumes only the masked-in spectra, so values outside the
region of interest cannot influence any statistic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BandMismatch,
    MissingWavelengths,
    NonPositiveReflectance,
    TooFewVectors,
)
from .maskproj import MaskedCube

# An eigenvalue at or below this fraction of the covariance trace marks the
# covariance as (numerically) rank deficient.
DEGENERACY_RTOL = 1e-12


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    degenerate: bool = False

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def bands(self) -> int:
        return self.components.shape[1]

    def to_json(self) -> dict:
        return {
            "bands": self.bands,
            "n_components": self.n_components,
            "mean": self.mean.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "components": self.components.tolist(),
            "degenerate": self.degenerate,
        }


def _sign_normalize(components: np.ndarray) -> np.ndarray:
    out = components.copy()
    for row in out:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return out


def masked_pca(masked: MaskedCube, n_components: int) -> PcaModel:
    """Sample-covariance PCA over the masked-in spectra only.

    Divisor is n-1; components are sign-normalized so the largest-magnitude
    entry of each is positive, making the decomposition deterministic.
    """
    vectors = np.asarray(masked.spectra, dtype=np.float64)
    n, bands = vectors.shape
    if n < 2:
        raise TooFewVectors(f"need at least 2 masked-in vectors, have {n}")
    if not 1 <= n_components <= bands:
        raise ValueError(f"n_components must be in [1, {bands}], got {n_components}")

    mean = vectors.mean(axis=0)
    centered = vectors - mean
    cov = centered.T @ centered / (n - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.maximum(eigenvalues[order], 0.0)
    components = _sign_normalize(eigenvectors[:, order].T)

    trace = float(np.trace(cov))
    degenerate = bool(np.any(eigenvalues <= DEGENERACY_RTOL * trace))
    return PcaModel(mean=mean,
                    components=components[:n_components],
                    eigenvalues=eigenvalues[:n_components],
                    degenerate=degenerate)


def project(model: PcaModel, masked: MaskedCube) -> np.ndarray:
    """Score vectors (n, n_components) for every masked-in spectrum."""
    if masked.cube.bands != model.bands:
        raise BandMismatch(f"model has {model.bands} bands, cube has "
                           f"{masked.cube.bands}")
    centered = np.asarray(masked.spectra, dtype=np.float64) - model.mean
    return centered @ model.components.T


def continuum_removal(spectrum: np.ndarray, wavelengths: np.ndarray) -> np.ndarray:
    """Divide a spectrum by its upper convex hull over (wavelength, value).

    Output lies in (0, 1], reaching 1 exactly at hull contact points.
    """
    spectrum = np.asarray(spectrum, dtype=np.float64)
    wavelengths = np.asarray(wavelengths, dtype=np.float64)
    if spectrum.ndim != 1 or spectrum.shape != wavelengths.shape:
        raise ValueError("spectrum and wavelengths must be 1-D and equal length")
    if spectrum.size < 3:
        raise ValueError("continuum removal needs at least 3 bands")
    if np.any(np.diff(wavelengths) <= 0):
        raise ValueError("wavelengths must be strictly increasing")
    if np.any(spectrum <= 0):
        raise NonPositiveReflectance("spectrum has non-positive values")

    hull: list[int] = []
    for i in range(spectrum.size):
        while len(hull) >= 2:
            x0, y0 = wavelengths[hull[-2]], spectrum[hull[-2]]
            x1, y1 = wavelengths[hull[-1]], spectrum[hull[-1]]
            cross = (x1 - x0) * (spectrum[i] - y0) - (y1 - y0) * (wavelengths[i] - x0)
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    envelope = np.interp(wavelengths, wavelengths[hull], spectrum[hull])
    return np.minimum(spectrum / envelope, 1.0)


def min_wavelength(spectrum: np.ndarray, wavelengths: np.ndarray,
                   depth_threshold: float = 0.0) -> tuple[float, float] | None:
    """Locate the deepest absorption feature of a continuum-removed spectrum.

    The deepest sample is refined to sub-band precision with a parabola
    through it and its two neighbours; returns (wavelength_nm, depth) or
    None when the minimum sits on a spectral edge or the depth falls below
    the threshold. Depth is 1 minus the interpolated minimum value.
    """
    values = np.asarray(spectrum, dtype=np.float64)
    wavelengths = np.asarray(wavelengths, dtype=np.float64)
    i = int(np.argmin(values))
    if i == 0 or i == values.size - 1:
        return None
    x0, x1, x2 = wavelengths[i - 1:i + 2]
    y0, y1, y2 = values[i - 1:i + 2]
    d1 = (y1 - y0) / (x1 - x0)
    d2 = (y2 - y1) / (x2 - x1)
    a = (d2 - d1) / (x2 - x0)
    if a <= 0.0:
        # Flat 3-point window: no curvature to interpolate, keep the sample.
        vertex_x, vertex_y = float(x1), float(y1)
    else:
        vertex_x = 0.5 * (x0 + x1) - d1 / (2.0 * a)
        vertex_y = float(y0 + d1 * (vertex_x - x0) + a * (vertex_x - x0) * (vertex_x - x1))
        vertex_x = float(min(max(vertex_x, x0), x2))
    depth = min(max(1.0 - vertex_y, 0.0), 1.0)
    if depth < depth_threshold:
        return None
    return vertex_x, depth


def mwm_map(masked: MaskedCube, depth_threshold: float = 0.0
            ) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel minimum-wavelength and depth maps over the masked-in pixels.

    Pixels outside the mask, and masked-in pixels without a resolvable
    feature, are NaN in both maps.
    """
    cube = masked.cube
    if cube.wavelengths is None:
        raise MissingWavelengths("minimum wavelength mapping needs per-band "
                                 "wavelengths; the cube has none")
    wavelengths = np.asarray(cube.wavelengths, dtype=np.float64)
    wl_map = np.full(cube.spatial_shape, np.nan, dtype=np.float64)
    depth_map = np.full(cube.spatial_shape, np.nan, dtype=np.float64)
    for line, sample, spectrum in masked.iter_vectors():
        removed = continuum_removal(spectrum, wavelengths)
        feature = min_wavelength(removed, wavelengths, depth_threshold)
        if feature is not None:
            wl_map[line, sample] = feature[0]
            depth_map[line, sample] = feature[1]
    return wl_map, depth_map
