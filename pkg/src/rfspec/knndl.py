"""KNN-DL baseline: one learnable per-pixel weight map per neighbour.

The prediction for cell (p, q) is ``sum_i W_i[p, q] * S_i[p, q]``, fitted
to a target spectrum by plain gradient descent on the summed squared
error. The objective is a separable convex quadratic, so a fixed step with
halving on any increase always makes the loss trace non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import N_AZ, N_EL
from .errors import ShapeError, SizeError
from .interp import NeighborSet


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 200
    learning_rate: float = 0.05
    seed: int = 0
    max_halvings: int = 30

    def __post_init__(self):
        if self.iterations < 1 or not self.learning_rate > 0:
            raise ValueError("iterations and learning_rate must be positive")


def _spectra(ns) -> np.ndarray:
    return np.asarray(ns.spectra if isinstance(ns, NeighborSet) else ns, dtype=float)


def init_weights(L: int, n_az: int = N_AZ, n_el: int = N_EL) -> np.ndarray:
    if L < 1 or n_az < 1 or n_el < 1:
        raise ShapeError("weight dimensions must be positive")
    return np.full((L, n_az, n_el), 1.0 / L)


def predict(W: np.ndarray, ns) -> np.ndarray:
    S = _spectra(ns)
    W = np.asarray(W, dtype=float)
    if W.shape != S.shape:
        raise ShapeError(f"weights {W.shape} do not match neighbour spectra {S.shape}")
    out = W[0] * S[0]
    for i in range(1, len(S)):
        out = out + W[i] * S[i]
    return out


def loss_and_grad(W: np.ndarray, ns, target: np.ndarray) -> tuple[float, np.ndarray]:
    S = _spectra(ns)
    target = np.asarray(target, dtype=float)
    if target.shape != S.shape[1:]:
        raise ShapeError(f"target {target.shape} does not match spectra {S.shape[1:]}")
    r = predict(W, S) - target
    return float(np.sum(r * r)), 2.0 * r[None] * S


def _loss(W, S, target):
    r = predict(W, S) - target
    return float(np.sum(r * r))


def train(ns, target: np.ndarray, cfg: TrainConfig = TrainConfig()) -> tuple[np.ndarray, list[float]]:
    """Fit weight maps to ``target``.

    Spectra are divided by one common scale (the largest value among the
    target and neighbours) so the default step is meaningful; the weights
    are scale free and apply to the raw spectra. Returns ``(W, trace)``
    where ``trace[0]`` is the initial loss and ``trace[k]`` the loss after
    iteration ``k``, both on the normalised scale.
    """
    S = _spectra(ns)
    target = np.asarray(target, dtype=float)
    scale = max(float(S.max()), float(target.max()))
    if scale > 0:
        S = S / scale
        target = target / scale
    W = init_weights(*S.shape)
    loss, grad = loss_and_grad(W, S, target)
    trace = [loss]
    lr = cfg.learning_rate
    for _ in range(cfg.iterations):
        if loss == 0.0:
            trace.append(loss)
            continue
        for _ in range(cfg.max_halvings + 1):
            trial = W - lr * grad
            trial_loss = _loss(trial, S, target)
            if trial_loss <= loss:
                W = trial
                loss, grad = loss_and_grad(W, S, target)
                break
            lr *= 0.5
        trace.append(loss)
    return W, trace


@dataclass(frozen=True)
class WeightStats:
    mean: np.ndarray
    std: np.ndarray
    min: float
    max: float


def normalize_weights(W: np.ndarray) -> np.ndarray:
    peak = float(np.max(np.abs(W)))
    return W / peak if peak > 0 else np.array(W, dtype=float)


def weight_stats(all_W) -> WeightStats:
    """Per-neighbour mean and std after scaling each target's maps by their max |w|."""
    all_W = list(all_W)
    if not all_W:
        raise SizeError("no weight matrices given")
    stack = np.stack([normalize_weights(np.asarray(W, dtype=float)) for W in all_W])
    per_neighbour = np.moveaxis(stack, 1, 0).reshape(stack.shape[1], -1)
    return WeightStats(per_neighbour.mean(axis=1), per_neighbour.std(axis=1),
                       float(stack.min()), float(stack.max()))
