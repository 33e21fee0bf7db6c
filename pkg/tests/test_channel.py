import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import naive_spectrum_cell
from rfspec.channel import (ArrayGeometry, Direction, RFParams, add_noise, check_spectrum,
                            received_matrix, spatial_spectrum, spectrum_argmax, steering_phase)
from rfspec.errors import DomainError, ShapeError

RF = RFParams(2.412e9)
GEOM = ArrayGeometry()

on_grid = st.builds(Direction, st.integers(0, 359).map(float), st.integers(1, 89).map(float))


def plane_wave(direction, amplitude=1.0, phase=0.0, geom=GEOM):
    return received_matrix([(amplitude, phase, direction)], geom, RF)


def test_wavelength():
    assert RF.wavelength_m == pytest.approx(0.12429, abs=1e-5)


def test_steering_phase_examples():
    assert steering_phase(0, 0, Direction(123.0, 45.0), RF, GEOM) == 0.0
    assert steering_phase(3, 2, Direction(77.0, 0.0), RF, GEOM) == 0.0
    assert steering_phase(1, 0, Direction(0.0, 90.0), RF, GEOM) == pytest.approx(math.pi, rel=1e-15)


def test_steering_phase_index_error():
    with pytest.raises(IndexError):
        steering_phase(4, 0, Direction(0.0, 10.0), RF, GEOM)
    with pytest.raises(IndexError):
        steering_phase(0, -1, Direction(0.0, 10.0), RF, GEOM)


def test_direction_ranges():
    for bad in [(360.0, 0.0), (-1.0, 0.0), (0.0, 91.0), (0.0, -0.5), (math.nan, 0.0)]:
        with pytest.raises(DomainError):
            Direction(*bad)


def test_received_matrix_examples():
    assert np.all(received_matrix([], GEOM, RF) == 0)
    y = plane_wave(Direction(200.0, 0.0))
    assert np.allclose(y, 1.0, rtol=0, atol=1e-15)
    d = Direction(30.0, 40.0)
    y = received_matrix([(1.0, 0.0, d), (1.0, math.pi, d)], GEOM, RF)
    assert np.max(np.abs(y)) < 1e-14


def test_spectrum_examples():
    assert np.all(spatial_spectrum(np.zeros((4, 4), complex), GEOM, RF) == 0)
    ss = spatial_spectrum(plane_wave(Direction(45.0, 30.0)), GEOM, RF)
    assert spectrum_argmax(ss) == Direction(45.0, 30.0)
    assert ss[45, 30] == pytest.approx(256.0, rel=1e-9)
    ss = spatial_spectrum(plane_wave(Direction(120.0, 0.0)), GEOM, RF)
    assert np.allclose(ss[:, 0], ss[0, 0], rtol=1e-12)


def test_spectrum_shape_error():
    with pytest.raises(ShapeError):
        spatial_spectrum(np.zeros((3, 4), complex), GEOM, RF)


def test_argmax_examples():
    assert spectrum_argmax(np.ones((360, 90))) == Direction(0.0, 0.0)
    ss = np.zeros((360, 90))
    ss[10, 5] = 1.0
    assert spectrum_argmax(ss) == Direction(10.0, 5.0)


def test_check_spectrum_rejects_bad_values():
    with pytest.raises(ShapeError):
        check_spectrum(np.zeros((90, 360)))
    bad = np.zeros((360, 90))
    bad[0, 0] = -1.0
    with pytest.raises(DomainError):
        check_spectrum(bad)


def test_spectrum_matches_naive_beamformer():
    rng = np.random.default_rng(3)
    y = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    ss = spatial_spectrum(y, GEOM, RF)
    d = GEOM.spacing(RF)
    for p, q in [(0, 0), (17, 33), (200, 89), (359, 1), (90, 45)]:
        assert ss[p, q] == pytest.approx(naive_spectrum_cell(y, p, q, d, RF.wavelength_m), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(on_grid)
def test_peak_recovery(direction):
    ss = spatial_spectrum(plane_wave(direction), GEOM, RF)
    assert spectrum_argmax(ss) == direction
    assert ss[int(direction.azimuth_deg), int(direction.elevation_deg)] == pytest.approx(256.0, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(on_grid, on_grid, st.floats(0.1, 3.0), st.floats(-math.pi, math.pi))
def test_received_matrix_linear(d1, d2, amp, phase):
    a = [(amp, phase, d1)]
    b = [(1.0, 0.0, d2)]
    assert np.allclose(received_matrix(a + b, GEOM, RF),
                       received_matrix(a, GEOM, RF) + received_matrix(b, GEOM, RF), rtol=0, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(on_grid, on_grid, st.floats(0.01, 100.0))
def test_amplitude_scaling_and_nonnegativity(d1, d2, r):
    arrivals = [(1.0, 0.3, d1), (0.5, -1.0, d2)]
    base = spatial_spectrum(received_matrix(arrivals, GEOM, RF), GEOM, RF)
    scaled = spatial_spectrum(received_matrix([(r * a, p, d) for a, p, d in arrivals], GEOM, RF), GEOM, RF)
    assert np.all(base >= 0)
    mask = base > 1e-9 * base.max()
    assert np.allclose(scaled[mask], r * r * base[mask], rtol=1e-9, atol=0)


def test_direction_vector_roundtrip_in_rotated_frame():
    geom = ArrayGeometry(origin=(1.0, 2.0, 3.0), normal=(1.0, 0.0, 0.0), row_axis=(0.0, 1.0, 0.0))
    d = Direction(33.0, 61.0)
    back = Direction.from_vector(d.world_vector(geom), geom)
    assert back.azimuth_deg == pytest.approx(33.0, abs=1e-9)
    assert back.elevation_deg == pytest.approx(61.0, abs=1e-9)
    assert Direction.from_vector((-1.0, 0.0, 0.0), geom) is None


def test_geometry_is_hashable_and_validated():
    assert hash(ArrayGeometry()) == hash(ArrayGeometry(origin=(0, 0, 0)))
    with pytest.raises(DomainError):
        ArrayGeometry(row_axis=(0.0, 0.0, 1.0))
    with pytest.raises(DomainError):
        ArrayGeometry(rows=0)


def test_noise_is_seeded_and_scaled():
    y = plane_wave(Direction(10.0, 20.0))
    a = add_noise(y, 10.0, np.random.default_rng([5, 1]))
    b = add_noise(y, 10.0, np.random.default_rng([5, 1]))
    assert np.array_equal(a, b)
    big = add_noise(np.ones((400, 400), complex), 10.0, np.random.default_rng(0)) - 1.0
    assert np.mean(np.abs(big) ** 2) == pytest.approx(0.1, rel=0.02)
