"""Neighbour-based spectrum interpolation and its quadratic error bound.

The target spectrum is approximated by a weighted sum of the spectra of
its L nearest transmitters. With barycentric weights the first-order Taylor
terms cancel, so the error is bounded by ``K * delta**2`` where ``delta`` is
the neighbourhood radius and ``K`` half the largest Hessian operator norm
of the position -> spectrum map over the neighbours' hull.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import N_AZ, N_EL, RFParams
from .errors import ShapeError, SizeError

SIMPLEX_NEG_TOL = 1e-9
DET_TOL = 1e-12


def knn(positions, target, L: int, exclude_target: bool = False) -> np.ndarray:
    """Indices of the ``L`` positions closest to ``target``; ties go to the lower index."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    target = np.asarray(target, dtype=float)
    dist = np.linalg.norm(positions - target, axis=1)
    order = np.argsort(dist, kind="stable")
    if exclude_target:
        order = order[dist[order] > 0.0]
    if L < 1 or L > len(order):
        raise SizeError(f"asked for {L} neighbours, only {len(order)} available")
    return order[:L]


@dataclass(frozen=True)
class NeighborSet:
    target: np.ndarray
    positions: np.ndarray
    spectra: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.target, dtype=float)
        p = np.asarray(self.positions, dtype=float)
        s = np.asarray(self.spectra)
        if t.shape != (3,) or p.ndim != 2 or p.shape[1] != 3 or len(p) < 1:
            raise ShapeError("need a 3-vector target and an (L, 3) position array")
        if len(s) != len(p):
            raise ShapeError("one spectrum per neighbour position is required")
        if len({tuple(row) for row in p.tolist()}) != len(p):
            raise ShapeError("neighbour positions must be distinct")
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "spectra", s)

    @property
    def size(self) -> int:
        return len(self.positions)

    @property
    def radius(self) -> float:
        return float(np.max(np.linalg.norm(self.positions - self.target, axis=1)))

    @classmethod
    def select(cls, positions, spectra, target, L: int, exclude_target: bool = False) -> "NeighborSet":
        idx = knn(positions, target, L, exclude_target)
        return cls(np.asarray(target, dtype=float), np.asarray(positions)[idx], np.asarray(spectra)[idx])


@dataclass(frozen=True)
class BarycentricWeights:
    w: np.ndarray
    method: str  # "exact-simplex" or "shepard-fallback"

    @property
    def exact(self) -> bool:
        return self.method == "exact-simplex"


def _shepard(offsets):
    inv = 1.0 / np.sum(offsets ** 2, axis=1)
    return inv / inv.sum()


def barycentric_weights(positions, target) -> BarycentricWeights:
    """Barycentric weights when four neighbours enclose the target, else Shepard weights.

    A neighbour sitting exactly on the target takes the whole weight.
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    target = np.asarray(target, dtype=float)
    L = len(positions)
    if L < 1:
        raise SizeError("need at least one neighbour")
    offsets = positions - target
    dist = np.linalg.norm(offsets, axis=1)
    hit = np.flatnonzero(dist == 0.0)
    if hit.size:
        w = np.zeros(L)
        w[hit[0]] = 1.0
        return BarycentricWeights(w, "exact-simplex")
    if L == 4:
        scaled = np.vstack([(offsets / dist.max()).T, np.ones(4)])
        if abs(np.linalg.det(scaled)) >= DET_TOL:
            w = np.linalg.solve(scaled, np.array([0.0, 0.0, 0.0, 1.0]))
            if np.all(w >= -SIMPLEX_NEG_TOL):
                return BarycentricWeights(w, "exact-simplex")
    return BarycentricWeights(_shepard(offsets), "shepard-fallback")


def weighted_sum(weights, spectra) -> np.ndarray:
    """Front-to-back sum ``w_0 S_0 + w_1 S_1 + ...``, no clamping."""
    spectra = np.asarray(spectra, dtype=float)
    out = weights[0] * spectra[0]
    for i in range(1, len(spectra)):
        out = out + weights[i] * spectra[i]
    return np.asarray(out, dtype=float)


def interpolate_spectrum(ns: NeighborSet, w: BarycentricWeights | np.ndarray) -> np.ndarray:
    weights = w.w if isinstance(w, BarycentricWeights) else np.asarray(w, dtype=float)
    if len(weights) != ns.size:
        raise ShapeError(f"{len(weights)} weights for {ns.size} neighbours")
    return np.maximum(weighted_sum(weights, ns.spectra), 0.0)


def knn_average(ns: NeighborSet) -> np.ndarray:
    return interpolate_spectrum(ns, np.full(ns.size, 1.0 / ns.size))


# --- fields and the error bound -------------------------------------------

@dataclass(frozen=True)
class FieldOracle:
    """Deterministic position -> spectrum map used to probe the theorem.

    ``analytic_hessian`` marks fields whose Hessian is known in closed
    form (so the estimated ``K`` can be compared against it).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    analytic_hessian: bool = False
    name: str = "field"
    wavelength_m: float | None = None

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(p, dtype=float)), dtype=float)


def constant_field(value: float = 1.0, shape=(N_AZ, N_EL)) -> FieldOracle:
    grid = np.full(shape, float(value))
    return FieldOracle(lambda p: grid, analytic_hessian=True, name="constant")


def affine_field(rng: np.random.Generator, shape=(N_AZ, N_EL)) -> FieldOracle:
    offset = rng.uniform(1.0, 2.0, size=shape)
    slope = rng.uniform(-1.0, 1.0, size=(3,) + tuple(shape))
    return FieldOracle(lambda p: offset + np.tensordot(p, slope, axes=1),
                       analytic_hessian=True, name="affine")


def quadratic_field(rng: np.random.Generator | None = None, shape=(N_AZ, N_EL)) -> FieldOracle:
    """Every cell is ``||P - c_cell||^2``; the Hessian is 2I everywhere, so K = 1."""
    if rng is None:
        centres = np.zeros((3,) + tuple(shape))
    else:
        centres = rng.uniform(-1.0, 1.0, size=(3,) + tuple(shape))

    def fn(p):
        diff = p.reshape((3,) + (1,) * len(shape)) - centres
        return np.sum(diff * diff, axis=0)

    return FieldOracle(fn, analytic_hessian=True, name="quadratic")


def freespace_field(rf: RFParams | None = None, receiver=(0.0, 0.0, 0.0),
                    rows: int = 4, cols: int = 4, scale: float = 1.0) -> FieldOracle:
    """Simulated line-of-sight spectrum as a function of transmitter position."""
    from .raytrace import free_space_scene, simulate_spectrum

    rf = rf or RFParams(2.412e9)
    scene = free_space_scene(receiver, extent=50.0, frequency_hz=rf.frequency_hz, rows=rows, cols=cols)
    return FieldOracle(lambda p: scale * simulate_spectrum(scene, p, 0),
                       name="freespace", wavelength_m=rf.wavelength_m)


def fd_hessian_norm(oracle: FieldOracle, p, h: float) -> float:
    """Largest per-cell spectral norm of the central-difference Hessian at ``p``."""
    p = np.asarray(p, dtype=float)
    e = np.eye(3) * h
    f0 = oracle(p)
    H = np.empty(f0.shape + (3, 3))
    for i in range(3):
        H[..., i, i] = (oracle(p + e[i]) - 2.0 * f0 + oracle(p - e[i])) / (h * h)
    for i, j in itertools.combinations(range(3), 2):
        hij = (oracle(p + e[i] + e[j]) - oracle(p + e[i] - e[j])
               - oracle(p - e[i] + e[j]) + oracle(p - e[i] - e[j])) / (4.0 * h * h)
        H[..., i, j] = hij
        H[..., j, i] = hij
    eig = np.linalg.eigvalsh(H.reshape(-1, 3, 3))
    return float(np.max(np.abs(eig)))


def estimate_curvature_K(oracle: FieldOracle, region_min, region_max, h: float | None = None,
                         max_points_per_axis: int = 3) -> float:
    """``K = 1/2 max ||Hessian||`` over a grid covering the box ``[region_min, region_max]``.

    Grid points are ``h`` apart (capped at ``max_points_per_axis`` per axis)
    and the Hessian uses central differences with the same step. ``h``
    defaults to a quarter wavelength.
    """
    lo = np.asarray(region_min, dtype=float)
    hi = np.asarray(region_max, dtype=float)
    if np.any(hi < lo):
        raise ShapeError("region_max must dominate region_min")
    if h is None:
        h = (oracle.wavelength_m or RFParams(2.412e9).wavelength_m) / 4.0
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    axes = []
    for a, b in zip(lo, hi):
        if b == a:
            axes.append(np.array([a]))
        else:
            n = int(min(max_points_per_axis, max(2, math.floor((b - a) / h) + 1)))
            axes.append(np.linspace(a, b, n))
    worst = 0.0
    for p in itertools.product(*axes):
        worst = max(worst, fd_hessian_norm(oracle, np.array(p), h))
    return 0.5 * worst


@dataclass(frozen=True)
class ErrorBoundReport:
    epsilon: float
    K: float | None
    delta: float
    method: str

    @property
    def bound(self) -> float | None:
        return None if self.K is None else self.K * self.delta ** 2

    @property
    def satisfied(self) -> bool | None:
        """None when the weights are not exact barycentric ones or K is unknown."""
        if self.method != "exact-simplex" or self.K is None:
            return None
        return self.epsilon <= self.bound + 1e-9


def interpolation_error(truth, estimate) -> float:
    """Per-cell RMS of ``truth - estimate``."""
    r = np.asarray(truth, dtype=float) - np.asarray(estimate, dtype=float)
    return float(np.linalg.norm(r.ravel()) / math.sqrt(r.size))


def error_bound_check(oracle: FieldOracle, target, L: int, positions, K: float | None = None,
                      estimate_K: bool = True, h: float | None = None) -> ErrorBoundReport:
    """Interpolate ``oracle(target)`` from its ``L`` nearest positions and compare with ``K delta^2``."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    target = np.asarray(target, dtype=float)
    idx = knn(positions, target, L)
    nb = positions[idx]
    w = barycentric_weights(nb, target)
    estimate = weighted_sum(w.w, [oracle(p) for p in nb])
    eps = interpolation_error(oracle(target), estimate)
    delta = float(np.max(np.linalg.norm(nb - target, axis=1)))
    if K is None and estimate_K:
        K = estimate_curvature_K(oracle, nb.min(axis=0), nb.max(axis=0), h)
    return ErrorBoundReport(eps, K, delta, w.method)


def random_simplex(target, radius: float, rng: np.random.Generator,
                   min_weight: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Four vertices enclosing ``target`` with known barycentric weights.

    Returns ``(vertices, weights)``; the vertices lie within roughly
    ``2 * radius`` of the target.
    """
    target = np.asarray(target, dtype=float)
    while True:
        w = rng.dirichlet(np.ones(4))
        if w.min() < min_weight:
            continue
        dirs = rng.standard_normal((4, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        off = dirs * radius * rng.uniform(0.5, 1.0, size=(4, 1))
        off -= w @ off
        vol = abs(np.linalg.det(off[1:] - off[0])) / 6.0
        # skip slivers: compare with a regular tetrahedron of the same size
        if vol < 0.02 * np.max(np.linalg.norm(off, axis=1)) ** 3:
            continue
        return target + off, w


def scaling_trial(oracle: FieldOracle, target, radius: float, rng: np.random.Generator,
                  K: float | None = None, estimate_K: bool = False,
                  h: float | None = None) -> tuple[ErrorBoundReport, ErrorBoundReport]:
    """Error reports for one simplex and for the same simplex shrunk by half."""
    target = np.asarray(target, dtype=float)
    verts, _ = random_simplex(target, radius, rng)
    half = target + 0.5 * (verts - target)
    full_r = error_bound_check(oracle, target, 4, verts, K=K, estimate_K=estimate_K, h=h)
    half_r = error_bound_check(oracle, target, 4, half, K=K, estimate_K=estimate_K, h=h)
    return full_r, half_r
