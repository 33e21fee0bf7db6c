"""Antenna-array channel model and beamformed spatial spectra.

Angles follow the array phase model literally: ``beta`` is measured from
the array boresight normal and ``alpha`` counter-clockwise from the array's
row axis inside the array plane, so a unit arrival vector is

    k = sin(beta) cos(alpha) * row_axis
      + sin(beta) sin(alpha) * col_axis
      + cos(beta) * normal

and the per-element phase is (2 pi / lambda) * d * (m k.row + n k.col).
Only the front hemisphere (k.normal >= 0) is representable.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ShapeError

SPEED_OF_LIGHT = 299_792_458.0

N_AZ = 360
N_EL = 90
AZIMUTH_DEG = np.arange(N_AZ, dtype=float)
ELEVATION_DEG = np.arange(N_EL, dtype=float)


def _unit(v, name, tol):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise DomainError(f"{name} must be a finite 3-vector")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise DomainError(f"{name} must have unit norm (got {norm!r})")
    return v


@dataclass(frozen=True)
class RFParams:
    frequency_hz: float
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not (math.isfinite(self.frequency_hz) and self.frequency_hz > 0):
            raise DomainError("frequency_hz must be positive and finite")

    @property
    def wavelength_m(self) -> float:
        return self.speed_of_light / self.frequency_hz

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength_m


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar ``rows x cols`` array.

    ``spacing_m=None`` means half a wavelength at whatever :class:`RFParams`
    the array is used with. ``row_axis`` must be orthogonal to ``normal``;
    the column axis is ``normal x row_axis``.
    """

    rows: int = 4
    cols: int = 4
    spacing_m: float | None = None
    origin: tuple = (0.0, 0.0, 0.0)
    normal: tuple = (0.0, 0.0, 1.0)
    row_axis: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if int(self.rows) != self.rows or self.rows < 1:
            raise DomainError("rows must be a positive integer")
        if int(self.cols) != self.cols or self.cols < 1:
            raise DomainError("cols must be a positive integer")
        if self.spacing_m is not None and not self.spacing_m > 0:
            raise DomainError("spacing_m must be positive")
        origin = np.asarray(self.origin, dtype=float)
        if origin.shape != (3,) or not np.all(np.isfinite(origin)):
            raise DomainError("origin must be a finite 3-vector")
        n = _unit(self.normal, "normal", 1e-12)
        u = _unit(self.row_axis, "row_axis", 1e-12)
        if abs(float(n @ u)) > 1e-9:
            raise DomainError("row_axis must be orthogonal to normal")
        # normalise storage so instances hash consistently
        object.__setattr__(self, "origin", tuple(float(x) for x in origin))
        object.__setattr__(self, "normal", tuple(float(x) for x in n))
        object.__setattr__(self, "row_axis", tuple(float(x) for x in u))

    def spacing(self, rf: RFParams) -> float:
        return rf.wavelength_m / 2.0 if self.spacing_m is None else float(self.spacing_m)

    @property
    def col_axis(self) -> np.ndarray:
        return np.cross(np.asarray(self.normal), np.asarray(self.row_axis))

    def frame(self) -> np.ndarray:
        """3x3 matrix whose rows are (row_axis, col_axis, normal)."""
        return np.vstack([np.asarray(self.row_axis), self.col_axis, np.asarray(self.normal)])


@dataclass(frozen=True)
class Direction:
    azimuth_deg: float
    elevation_deg: float

    def __post_init__(self):
        a, b = self.azimuth_deg, self.elevation_deg
        if not (math.isfinite(a) and 0.0 <= a < 360.0):
            raise DomainError(f"azimuth must lie in [0, 360), got {a!r}")
        if not (math.isfinite(b) and 0.0 <= b <= 90.0):
            raise DomainError(f"elevation must lie in [0, 90], got {b!r}")

    def local_vector(self) -> np.ndarray:
        """Unit vector in the array frame (row, col, normal components)."""
        a = math.radians(self.azimuth_deg)
        b = math.radians(self.elevation_deg)
        return np.array([math.sin(b) * math.cos(a), math.sin(b) * math.sin(a), math.cos(b)])

    def world_vector(self, geom: ArrayGeometry) -> np.ndarray:
        return self.local_vector() @ geom.frame()

    @classmethod
    def from_vector(cls, vec, geom: ArrayGeometry) -> "Direction | None":
        """Arrival direction of world vector ``vec``; None if behind the array."""
        v = np.asarray(vec, dtype=float)
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise DomainError("cannot take the direction of a zero vector")
        x, y, z = geom.frame() @ (v / norm)
        if z < 0.0:
            return None
        beta = math.degrees(math.acos(min(1.0, z)))
        alpha = math.degrees(math.atan2(y, x)) % 360.0
        if alpha >= 360.0:
            alpha = 0.0
        return cls(alpha, min(beta, 90.0))


def steering_phase(m: int, n: int, direction: Direction, rf: RFParams,
                   geom: ArrayGeometry) -> float:
    """Geometric phase (radians) of element ``(m, n)`` for a plane wave."""
    if not (0 <= m < geom.rows and 0 <= n < geom.cols):
        raise IndexError(f"element ({m}, {n}) outside a {geom.rows}x{geom.cols} array")
    d = geom.spacing(rf)
    a = math.radians(direction.azimuth_deg)
    b = math.radians(direction.elevation_deg)
    sb = math.sin(b)
    return (2.0 * math.pi / rf.wavelength_m) * (m * d * sb * math.cos(a) + n * d * sb * math.sin(a))


def _phase_matrix(direction: Direction, rf: RFParams, geom: ArrayGeometry) -> np.ndarray:
    return np.array([[steering_phase(m, n, direction, rf, geom) for n in range(geom.cols)]
                     for m in range(geom.rows)])


def received_matrix(arrivals: Iterable[tuple], geom: ArrayGeometry, rf: RFParams) -> np.ndarray:
    """Superpose plane-wave arrivals on the array.

    Each arrival is ``(amplitude, phase, Direction)`` where ``phase`` is the
    total carrier phase (transmit phase plus channel shift). Returns a
    complex ``(rows, cols)`` matrix.
    """
    y = np.zeros((geom.rows, geom.cols), dtype=complex)
    for amplitude, phase, direction in arrivals:
        if not (math.isfinite(amplitude) and math.isfinite(phase)):
            raise DomainError("arrival amplitude and phase must be finite")
        y += amplitude * np.exp(1j * (phase + _phase_matrix(direction, rf, geom)))
    return y


def add_noise(y: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise at ``snr_db`` relative to mean element power."""
    signal_power = float(np.mean(np.abs(y) ** 2))
    if signal_power == 0.0:
        return y.copy()
    noise_power = signal_power / 10.0 ** (snr_db / 10.0)
    noise = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
    return y + noise * math.sqrt(noise_power / 2.0)


@functools.lru_cache(maxsize=16)
def _conj_steering(geom: ArrayGeometry, rf: RFParams) -> np.ndarray:
    # (N_AZ * N_EL, rows * cols) of exp(-j dsigma), same formula as steering_phase
    d = geom.spacing(rf)
    a = np.deg2rad(AZIMUTH_DEG)[:, None]
    b = np.deg2rad(ELEVATION_DEG)[None, :]
    u = (np.sin(b) * np.cos(a)).reshape(-1, 1)
    v = (np.sin(b) * np.sin(a)).reshape(-1, 1)
    m = np.repeat(np.arange(geom.rows), geom.cols)[None, :]
    n = np.tile(np.arange(geom.cols), geom.rows)[None, :]
    k = 2.0 * math.pi / rf.wavelength_m
    w = np.exp(-1j * k * (m * d * u + n * d * v))
    w.setflags(write=False)
    return w


def spatial_spectrum(y: np.ndarray, geom: ArrayGeometry, rf: RFParams) -> np.ndarray:
    """Bartlett power on the 1 degree (azimuth, elevation) grid, shape (360, 90)."""
    y = np.asarray(y)
    if y.shape != (geom.rows, geom.cols):
        raise ShapeError(f"received matrix is {y.shape}, array is {(geom.rows, geom.cols)}")
    beam = np.sum(_conj_steering(geom, rf) * y.reshape(1, -1), axis=1)
    power = beam.real ** 2 + beam.imag ** 2
    return power.reshape(N_AZ, N_EL)


def spectrum_argmax(ss: np.ndarray) -> Direction:
    """Grid direction of maximum power; ties go to the smallest (azimuth, elevation)."""
    check_spectrum(ss)
    p, q = np.unravel_index(int(np.argmax(ss)), ss.shape)
    return Direction(float(p), float(q))


def check_spectrum(ss: np.ndarray, shape: Sequence[int] = (N_AZ, N_EL)) -> np.ndarray:
    ss = np.asarray(ss)
    if ss.shape != tuple(shape):
        raise ShapeError(f"spectrum has shape {ss.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(ss)):
        raise DomainError("spectrum contains non-finite values")
    if np.any(ss < 0):
        raise DomainError("spectrum contains negative power")
    return ss
