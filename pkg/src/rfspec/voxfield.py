"""Per-ray aggregation of voxel attributes.

Two accumulation rules over samples ordered from the receiver outward:

* real mode: ``sum_i exp(sum_{j<i} delta_j) * xi_i`` (attenuation exponents
  ``delta <= 0`` and emissions ``xi``);
* complex mode: ``sum_s (prod_{j<s} a_j) * s_s * lambda / (4 pi d_s)
  * exp(-j 2 pi f d_s / c)``.

Both run a single front-to-back pass with Neumaier-compensated sums so
results do not depend on how rays are batched.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .channel import Direction, RFParams
from .errors import DomainError, ModeError


class _Neumaier:
    """Compensated running sum of floats (or complex, component-wise)."""

    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float) -> None:
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t

    @property
    def value(self) -> float:
        return self.s + self.c


@dataclass(frozen=True)
class VoxelSamples:
    """Attributes of ``S`` samples along one ray.

    Build with :meth:`real` or :meth:`complex`. In complex mode the last
    attenuation ``a[S-1]`` is kept for symmetry but never used.
    """

    mode: str
    delta: np.ndarray | None = None
    xi: np.ndarray | None = None
    s: np.ndarray | None = None
    a: np.ndarray | None = None
    d: np.ndarray | None = None

    @property
    def count(self) -> int:
        return len(self.xi) if self.mode == "real" else len(self.s)

    @classmethod
    def real(cls, delta, xi) -> "VoxelSamples":
        xi = np.asarray(xi, dtype=float).ravel()
        delta = np.asarray(delta, dtype=float).ravel()
        S = len(xi)
        if S < 1:
            raise DomainError("need at least one sample")
        # delta[S-1] is optional: only delta_1..delta_{S-1} enter the sum
        if len(delta) == S - 1:
            delta = np.append(delta, 0.0)
        if len(delta) != S:
            raise DomainError(f"delta must have {S - 1} or {S} entries, got {len(delta)}")
        if not (np.all(np.isfinite(delta)) and np.all(np.isfinite(xi))):
            raise DomainError("voxel attributes must be finite")
        if np.any(delta > 0):
            raise DomainError("attenuation exponents must be <= 0")
        return cls("real", delta=delta, xi=xi)

    @classmethod
    def complex(cls, s, a, d) -> "VoxelSamples":
        s = np.asarray(s, dtype=complex).ravel()
        a = np.asarray(a, dtype=complex).ravel()
        d = np.asarray(d, dtype=float).ravel()
        S = len(s)
        if S < 1:
            raise DomainError("need at least one sample")
        if len(a) == S - 1:
            a = np.append(a, 1.0 + 0j)
        if len(a) != S or len(d) != S:
            raise DomainError("s, a and d must all have S entries")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(a)) and np.all(np.isfinite(d))):
            raise DomainError("voxel attributes must be finite")
        if np.any(d <= 0):
            raise DomainError("sample distances must be positive")
        return cls("complex", s=s, a=a, d=d)


def aggregate_real(v: VoxelSamples) -> float:
    if v.mode != "real":
        raise ModeError("aggregate_real needs real-mode samples")
    exponent = _Neumaier()
    total = _Neumaier()
    for delta_i, xi_i in zip(v.delta.tolist(), v.xi.tolist()):
        total.add(math.exp(exponent.value) * xi_i)
        exponent.add(delta_i)
    return total.value


def aggregate_complex(v: VoxelSamples, rf: RFParams, zero_phase: bool = False) -> complex:
    """Received complex amplitude for one ray.

    ``zero_phase`` drops the propagation phase term, leaving only the
    ``lambda / (4 pi d)`` spreading; used to check amplitude scaling.
    """
    if v.mode != "complex":
        raise ModeError("aggregate_complex needs complex-mode samples")
    if np.any(v.d <= 0):
        raise DomainError("sample distances must be positive")
    lam = rf.wavelength_m
    k = 2.0 * math.pi * rf.frequency_hz / rf.speed_of_light
    re, im = _Neumaier(), _Neumaier()
    through = 1.0 + 0j
    for s_s, a_s, d_s in zip(v.s.tolist(), v.a.tolist(), v.d.tolist()):
        term = through * s_s * (lam / (4.0 * math.pi * d_s))
        if not zero_phase:
            term *= cmath.exp(-1j * k * d_s)
        re.add(term.real)
        im.add(term.imag)
        through *= a_s
    return complex(re.value, im.value)


def received_power(v: VoxelSamples, rf: RFParams) -> float:
    return abs(aggregate_complex(v, rf)) ** 2


@dataclass(frozen=True)
class RaySampling:
    origin: tuple
    direction: Direction
    count: int
    t_max: float

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise DomainError("sample count must be a positive integer")
        if not self.t_max > 0:
            raise DomainError("t_max must be positive")


def sample_ray(r: RaySampling, frame: np.ndarray | None = None) -> list[tuple[np.ndarray, float]]:
    """Midpoint samples ``t = t_max (s - 1/2) / S`` along the ray.

    ``frame`` is an optional 3x3 (row, col, normal) basis, e.g. from
    :meth:`ArrayGeometry.frame`; without it the direction is taken in
    world coordinates with the normal along +z.
    """
    unit = r.direction.local_vector()
    if frame is not None:
        unit = unit @ np.asarray(frame, dtype=float)
    origin = np.asarray(r.origin, dtype=float)
    out = []
    for s in range(1, r.count + 1):
        t = r.t_max * (s - 0.5) / r.count
        p = origin + t * unit
        out.append((p, float(np.linalg.norm(p - origin))))
    return out
