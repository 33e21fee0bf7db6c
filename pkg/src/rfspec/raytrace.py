"""Image-method specular multipath for scenes made of planar rectangles.

Reflectors are zero-thickness rectangles. They block any segment that
crosses their interior and reflect only on the side their normal points
to. Paths run transmitter -> reflection points -> receiver.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, Direction, RFParams, add_noise, received_matrix, spatial_spectrum
from .errors import DegenerateGeometryError, DomainError, PlacementError

GRAZE_TOL = 1e-9


def plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """In-plane (u, v) axes of a reflector.

    Vertical planes get a horizontal ``u`` and ``v`` pointing up; planes
    within ~25 degrees of horizontal take ``u`` from the projected x axis.
    """
    n = np.asarray(normal, dtype=float)
    if abs(n[2]) < 0.9:
        u = np.cross([0.0, 0.0, 1.0], n)
    else:
        u = np.array([1.0, 0.0, 0.0]) - n[0] * n
    u = u / np.linalg.norm(u)
    return u, np.cross(n, u)


@dataclass(frozen=True)
class Reflector:
    point: tuple
    normal: tuple
    gamma: complex
    half_widths: tuple = (math.inf, math.inf)
    name: str = ""

    def __post_init__(self):
        p = np.asarray(self.point, dtype=float)
        n = np.asarray(self.normal, dtype=float)
        if p.shape != (3,) or n.shape != (3,) or not (np.all(np.isfinite(p)) and np.all(np.isfinite(n))):
            raise DomainError("reflector point and normal must be finite 3-vectors")
        if abs(float(np.linalg.norm(n)) - 1.0) > 1e-12:
            raise DomainError("reflector normal must have unit norm")
        if not abs(complex(self.gamma)) <= 1.0:
            raise DomainError("reflection coefficient magnitude must not exceed 1")
        hw = tuple(float(h) for h in self.half_widths)
        if len(hw) != 2 or not all(h > 0 for h in hw):
            raise DomainError("half_widths must be two positive numbers")
        object.__setattr__(self, "point", tuple(float(x) for x in p))
        object.__setattr__(self, "normal", tuple(float(x) for x in n))
        object.__setattr__(self, "gamma", complex(self.gamma))
        object.__setattr__(self, "half_widths", hw)

    @property
    def _q(self):
        return np.asarray(self.point)

    @property
    def _n(self):
        return np.asarray(self.normal)

    def signed_distance(self, x) -> float:
        return float((np.asarray(x) - self._q) @ self._n)

    def mirror(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x - 2.0 * self.signed_distance(x) * self._n

    def in_plane(self, x) -> tuple[float, float]:
        u, v = plane_basis(self.normal)
        r = np.asarray(x) - self._q
        return float(r @ u), float(r @ v)

    def contains(self, x) -> bool:
        """Whether in-plane point ``x`` lies on the rectangle (edges included)."""
        cu, cv = self.in_plane(x)
        hu, hv = self.half_widths
        return abs(cu) <= hu + GRAZE_TOL and abs(cv) <= hv + GRAZE_TOL

    def blocks(self, a, b) -> bool:
        """Whether segment a-b crosses the rectangle's interior."""
        da, db = self.signed_distance(a), self.signed_distance(b)
        if (da > 0 and db > 0) or (da < 0 and db < 0) or da == db:
            return False
        t = da / (da - db)
        seg = float(np.linalg.norm(np.asarray(b) - np.asarray(a)))
        if t * seg <= GRAZE_TOL or (1.0 - t) * seg <= GRAZE_TOL:
            return False
        x = np.asarray(a) + t * (np.asarray(b) - np.asarray(a))
        cu, cv = self.in_plane(x)
        hu, hv = self.half_widths
        return abs(cu) < hu - GRAZE_TOL and abs(cv) < hv - GRAZE_TOL


@dataclass(frozen=True)
class Scene:
    reflectors: tuple
    array: ArrayGeometry
    rf: RFParams
    box_min: tuple
    box_max: tuple
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "reflectors", tuple(self.reflectors))
        lo = np.asarray(self.box_min, dtype=float)
        hi = np.asarray(self.box_max, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,) or not np.all(hi > lo):
            raise DomainError("bounding box needs min < max on every axis")
        object.__setattr__(self, "box_min", tuple(float(x) for x in lo))
        object.__setattr__(self, "box_max", tuple(float(x) for x in hi))
        if not (0 <= int(self.seed) < 2 ** 64):
            raise DomainError("seed must be an unsigned 64-bit integer")
        if not self.inside(self.receiver):
            raise DomainError("receiver lies outside the bounding box")
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        for i, r in enumerate(self.reflectors):
            s = (corners - r._q) @ r._n
            if s.min() > 0 or s.max() < 0:
                raise DomainError(f"reflector {i} does not intersect the bounding box")

    @property
    def receiver(self) -> np.ndarray:
        return np.asarray(self.array.origin)

    def inside(self, x, clearance: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= np.asarray(self.box_min) + clearance)
                    and np.all(x <= np.asarray(self.box_max) - clearance))


@dataclass(frozen=True)
class PropagationPath:
    tx: tuple
    rx: tuple
    points: tuple = ()
    reflector_ids: tuple = ()
    length: float = 0.0
    gain: complex = 0j

    @property
    def order(self) -> int:
        return len(self.points)

    @property
    def vertices(self) -> list:
        return [np.asarray(self.tx)] + [np.asarray(p) for p in self.points] + [np.asarray(self.rx)]

    def arrival_vector(self) -> np.ndarray:
        """Vector from the receiver toward the last interaction (or the transmitter)."""
        last = self.points[-1] if self.points else self.tx
        return np.asarray(last) - np.asarray(self.rx)


def path_gain(length: float, gammas, rf: RFParams) -> complex:
    """Complex gain: product of reflection coefficients times the free-space Green's term."""
    if not length > 0:
        raise DomainError("path length must be positive")
    g = complex(1.0)
    for gamma in gammas:
        g *= complex(gamma)
    lam = rf.wavelength_m
    return g * (lam / (4.0 * math.pi * length)) * cmath.exp(
        -1j * 2.0 * math.pi * rf.frequency_hz * length / rf.speed_of_light)


def _unoccluded(scene, a, b, skip) -> bool:
    return not any(r.blocks(a, b) for i, r in enumerate(scene.reflectors) if i not in skip)


def _trace_sequence(scene, tx, rx, seq):
    refl = [scene.reflectors[i] for i in seq]
    images = [tx]
    for r in refl:
        images.append(r.mirror(images[-1]))
    points = []
    prev = rx
    for k in range(len(seq), 0, -1):
        r = refl[k - 1]
        d_prev = r.signed_distance(prev)
        d_img = r.signed_distance(images[k])
        if d_prev == d_img:
            return None
        t = d_prev / (d_prev - d_img)
        if not 0.0 < t < 1.0:
            return None
        x = prev + t * (images[k] - prev)
        if not r.contains(x):
            return None
        points.append(x)
        prev = x
    points.reverse()
    verts = [tx] + points + [rx]
    for k, r in enumerate(refl, start=1):
        if r.signed_distance(verts[k - 1]) <= 0 or r.signed_distance(verts[k + 1]) <= 0:
            return None
    for k in range(len(verts) - 1):
        skip = set()
        if k >= 1:
            skip.add(seq[k - 1])
        if k < len(seq):
            skip.add(seq[k])
        if not _unoccluded(scene, verts[k], verts[k + 1], skip):
            return None
    return points


def enumerate_paths(scene: Scene, tx, max_order: int = 2) -> list[PropagationPath]:
    """LoS plus all specular paths with up to ``max_order`` bounces, sorted by (order, length)."""
    tx = np.asarray(tx, dtype=float)
    rx = scene.receiver
    if float(np.linalg.norm(tx - rx)) == 0.0:
        raise DegenerateGeometryError("transmitter coincides with the receiver")
    if not scene.inside(tx):
        raise DomainError("transmitter lies outside the bounding box")
    if max_order < 0:
        raise DomainError("max_order must be non-negative")
    txt, rxt = tuple(tx), tuple(rx)
    paths = []
    if _unoccluded(scene, tx, rx, set()):
        d = float(np.linalg.norm(tx - rx))
        paths.append(PropagationPath(txt, rxt, (), (), d, path_gain(d, (), scene.rf)))
    n = len(scene.reflectors)
    for order in range(1, max_order + 1):
        for seq in itertools.product(range(n), repeat=order):
            if any(seq[i] == seq[i + 1] for i in range(order - 1)):
                continue
            points = _trace_sequence(scene, tx, rx, seq)
            if points is None:
                continue
            verts = [tx] + points + [rx]
            d = float(sum(np.linalg.norm(verts[i + 1] - verts[i]) for i in range(len(verts) - 1)))
            g = path_gain(d, [scene.reflectors[i].gamma for i in seq], scene.rf)
            paths.append(PropagationPath(txt, rxt, tuple(tuple(p) for p in points), seq, d, g))
    paths.sort(key=lambda p: (p.order, p.length, p.reflector_ids))
    return paths


def arrivals_from_paths(paths, geom: ArrayGeometry) -> list[tuple]:
    """(amplitude, phase, Direction) per path; paths from behind the array are dropped."""
    out = []
    for p in paths:
        direction = Direction.from_vector(p.arrival_vector(), geom)
        if direction is None:
            continue
        out.append((abs(p.gain), cmath.phase(p.gain), direction))
    return out


def simulate_spectrum(scene: Scene, tx, max_order: int = 2, snr_db: float | None = None,
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """Ground-truth spatial spectrum for a unit-amplitude, zero-phase transmitter at ``tx``."""
    paths = enumerate_paths(scene, tx, max_order)
    y = received_matrix(arrivals_from_paths(paths, scene.array), scene.array, scene.rf)
    if snr_db is not None:
        if rng is None:
            raise DomainError("noise requested without a random generator")
        y = add_noise(y, snr_db, rng)
    return spatial_spectrum(y, scene.array, scene.rf)


def reflection_point_distance(path_a: PropagationPath, path_b: PropagationPath) -> float:
    """Largest distance between corresponding interaction points of two matched paths."""
    if path_a.order != path_b.order or path_a.order < 1:
        raise DomainError("paths must share an order of at least 1")
    if path_a.reflector_ids != path_b.reflector_ids:
        raise DomainError("paths bounce off different reflectors")
    return max(float(np.linalg.norm(np.subtract(a, b))) for a, b in zip(path_a.points, path_b.points))


def match_paths(paths_a, paths_b, order: int | None = None) -> list[tuple]:
    """Pair paths with identical reflector sequences."""
    index = {p.reflector_ids: p for p in paths_b if p.order >= 1}
    pairs = []
    for p in paths_a:
        if p.order < 1 or (order is not None and p.order != order):
            continue
        q = index.get(p.reflector_ids)
        if q is not None:
            pairs.append((p, q))
    return pairs


def sample_transmitters(scene: Scene, count: int, rng: np.random.Generator,
                        clearance: float = 0.1, max_tries: int = 10_000) -> np.ndarray:
    """Uniform positions in the box keeping ``clearance`` from walls and the receiver."""
    lo = np.asarray(scene.box_min) + clearance
    hi = np.asarray(scene.box_max) - clearance
    if np.any(hi <= lo):
        raise PlacementError("box is too small for the requested clearance")
    out = np.empty((count, 3))
    for i in range(count):
        for _ in range(max_tries):
            x = rng.uniform(lo, hi)
            if np.linalg.norm(x - scene.receiver) >= clearance:
                out[i] = x
                break
        else:
            raise PlacementError(f"no valid position for transmitter {i} after {max_tries} samples")
    return out


def transmitter_pairs(scene: Scene, n_pairs: int, separation: float, rng: np.random.Generator,
                      clearance: float = 0.1, max_tries: int = 10_000) -> list[tuple]:
    """Closely spaced (tx1, tx2) pairs exactly ``separation`` apart."""
    if not separation > 0:
        raise DomainError("separation must be positive")
    pairs = []
    for i in range(n_pairs):
        for _ in range(max_tries):
            a = sample_transmitters(scene, 1, rng, clearance, max_tries)[0]
            step = rng.standard_normal(3)
            b = a + separation * step / np.linalg.norm(step)
            if scene.inside(b, clearance) and np.linalg.norm(b - scene.receiver) >= clearance:
                pairs.append((a, b))
                break
        else:
            raise PlacementError(f"no valid pair {i} after {max_tries} samples")
    return pairs


def order1_distances(scene: Scene, pairs, max_order: int = 1) -> list[float]:
    """Matched first-order reflection-point distances over transmitter pairs."""
    out = []
    for a, b in pairs:
        pa = enumerate_paths(scene, a, max_order)
        pb = enumerate_paths(scene, b, max_order)
        out.extend(reflection_point_distance(p, q) for p, q in match_paths(pa, pb, order=1))
    return out


def box_scene(size=(3.0, 3.0, 2.5), gamma: complex = -0.6, receiver=None,
              frequency_hz: float = 2.412e9, rows: int = 4, cols: int = 4,
              seed: int = 0) -> Scene:
    """Closed rectangular room whose six walls face inward.

    The receiver array defaults to the floor-plan centre, 0.5 m up, facing
    the ceiling.
    """
    lx, ly, lz = (float(s) for s in size)
    if receiver is None:
        receiver = (lx / 2, ly / 2, 0.5)
    walls = [
        ("x_min", (0.0, ly / 2, lz / 2), (1.0, 0.0, 0.0), (ly / 2, lz / 2)),
        ("x_max", (lx, ly / 2, lz / 2), (-1.0, 0.0, 0.0), (ly / 2, lz / 2)),
        ("y_min", (lx / 2, 0.0, lz / 2), (0.0, 1.0, 0.0), (lx / 2, lz / 2)),
        ("y_max", (lx / 2, ly, lz / 2), (0.0, -1.0, 0.0), (lx / 2, lz / 2)),
        ("floor", (lx / 2, ly / 2, 0.0), (0.0, 0.0, 1.0), (lx / 2, ly / 2)),
        ("ceiling", (lx / 2, ly / 2, lz), (0.0, 0.0, -1.0), (lx / 2, ly / 2)),
    ]
    reflectors = tuple(Reflector(p, n, gamma, hw, name) for name, p, n, hw in walls)
    return Scene(reflectors, ArrayGeometry(rows, cols, origin=tuple(receiver)),
                 RFParams(frequency_hz), (0.0, 0.0, 0.0), (lx, ly, lz), seed)


def free_space_scene(receiver=(0.0, 0.0, 0.0), extent: float = 10.0,
                     frequency_hz: float = 2.412e9, rows: int = 4, cols: int = 4,
                     seed: int = 0) -> Scene:
    r = np.asarray(receiver, dtype=float)
    return Scene((), ArrayGeometry(rows, cols, origin=tuple(r)), RFParams(frequency_hz),
                 tuple(r - extent), tuple(r + extent), seed)
