import numpy as np
import pytest

import oracles
from hsmask import composite
from hsmask.composite import BandTriple
from hsmask.envi import HyperCube
from hsmask.errors import BandOutOfRange


def cube_with_band(values_2d, extra_bands=0):
    band = np.array(values_2d, dtype=np.float64)
    data = np.stack([band] * (1 + extra_bands))
    return HyperCube.from_array(data)


class TestCompose:
    def test_full_range_spans_exactly_0_255(self):
        values = np.linspace(0.0, 1.0, 64).reshape(8, 8)
        cube = cube_with_band(values)
        out = composite.compose(cube, BandTriple(0, 0, 0), stretch=(0.0, 100.0))
        assert out.dtype == np.uint8
        assert out[..., 0].min() == 0
        assert out[..., 0].max() == 255

    def test_constant_band_maps_to_zero(self):
        cube = cube_with_band(np.full((4, 4), 0.5))
        out = composite.compose(cube, BandTriple(0, 0, 0))
        assert not out.any()

    def test_midpoint_value_frozen_oracle(self):
        # values 0..99, stretch (2, 98): percentiles by linear interpolation
        # are (1.98, 97.02); the direct-formula oracle maps 50 -> 129.
        values = np.arange(100, dtype=np.float64).reshape(10, 10)
        assert oracles.stretch_value(50.0, values.ravel().tolist(), 2.0, 98.0) == 129
        cube = cube_with_band(values)
        out = composite.compose(cube, BandTriple(0, 0, 0), stretch=(2.0, 98.0))
        assert out[5, 0, 0] == 129  # cell holding value 50

    def test_whole_channel_matches_oracle(self, rng):
        values = rng.random((6, 7)) * 10.0
        cube = cube_with_band(values)
        out = composite.compose(cube, BandTriple(0, 0, 0), stretch=(5.0, 95.0))
        flat = values.ravel().tolist()
        for y in range(6):
            for x in range(7):
                assert out[y, x, 0] == oracles.stretch_value(
                    values[y, x], flat, 5.0, 95.0)

    def test_spatial_alignment(self, rng):
        data = rng.random((3, 11, 5))
        cube = HyperCube.from_array(data)
        out = composite.compose(cube, BandTriple(2, 1, 0))
        assert out.shape == (11, 5, 3)

    def test_monotonicity_within_channel(self, rng):
        values = rng.random((8, 8))
        cube = cube_with_band(values)
        out = composite.compose(cube, BandTriple(0, 0, 0), stretch=(10.0, 90.0))
        order = np.argsort(values.ravel())
        mapped = out[..., 0].ravel()[order]
        assert np.all(np.diff(mapped.astype(int)) >= 0)

    def test_determinism(self, rng):
        data = rng.random((3, 9, 9))
        cube = HyperCube.from_array(data)
        a = composite.compose(cube, BandTriple(0, 1, 2))
        b = composite.compose(cube, BandTriple(0, 1, 2))
        assert np.array_equal(a, b)

    def test_band_out_of_range(self):
        cube = cube_with_band(np.zeros((2, 2)) + 1.0)
        with pytest.raises(BandOutOfRange):
            composite.compose(cube, BandTriple(0, 0, 1))

    def test_channels_independent(self, rng):
        data = np.stack([rng.random((5, 5)), rng.random((5, 5)) * 100.0])
        cube = HyperCube.from_array(data)
        out = composite.compose(cube, BandTriple(0, 1, 0))
        assert np.array_equal(out[..., 0], out[..., 2])


class TestPng:
    def test_png_round_trip_and_determinism(self, tmp_path, rng):
        pixels = (rng.random((7, 9, 3)) * 255).astype(np.uint8)
        path_a = composite.write_png(pixels, tmp_path / "a.png")
        path_b = composite.write_png(pixels, tmp_path / "b.png")
        assert path_a.read_bytes() == path_b.read_bytes()
        assert np.array_equal(composite.read_png(path_a), pixels)
