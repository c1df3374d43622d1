"""Privatized gradient pipeline: per-example clipping, Gaussian noising
of the summed gradient, and the plain SGD update."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class NonFiniteInputError(ValueError):
    """A gradient contained NaN or Inf."""


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ClipPolicy:
    """How per-example gradients are bounded before summation.

    kind "abadi" rescales to norm at most clip_norm; "auto_s" rescales by
    clip_norm / (norm + gamma), which is strictly below clip_norm and needs
    no tuning of the threshold.
    """

    kind: str = "abadi"
    clip_norm: float = 1.0
    gamma: float = 0.01

    def __post_init__(self):
        if self.kind not in ("abadi", "auto_s"):
            raise ValueError(f"unknown clip kind {self.kind!r}")
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be > 0")
        if self.kind == "auto_s" and self.gamma <= 0:
            raise ValueError("gamma must be > 0 for auto_s")


@dataclass(frozen=True)
class NoisePolicy:
    sigma: float
    lot_size: int

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.lot_size < 1:
            raise ValueError("lot_size must be >= 1")


def clip(grad: np.ndarray, policy: ClipPolicy) -> np.ndarray:
    """Bound one per-example gradient in l2 norm."""
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteInputError("gradient has non-finite entries")
    norm = float(np.linalg.norm(grad))
    if policy.kind == "abadi":
        return grad / max(1.0, norm / policy.clip_norm)
    # auto_s: zero maps to zero since the scale is finite
    return grad * (policy.clip_norm / (norm + policy.gamma))


def clip_batch(grads: np.ndarray, policy: ClipPolicy) -> np.ndarray:
    """clip() applied to every row of an (n, dim) gradient matrix."""
    grads = np.asarray(grads, dtype=np.float64)
    if not np.all(np.isfinite(grads)):
        raise NonFiniteInputError("gradient batch has non-finite entries")
    norms = np.linalg.norm(grads, axis=1)
    if policy.kind == "abadi":
        scale = 1.0 / np.maximum(1.0, norms / policy.clip_norm)
    else:
        scale = policy.clip_norm / (norms + policy.gamma)
    return grads * scale[:, None]


def noisy_average(
    clipped_grads: Sequence[np.ndarray],
    noise: NoisePolicy,
    clip_norm: float,
    rng: np.random.Generator,
    dim: int | None = None,
) -> np.ndarray:
    """(sum of clipped gradients + N(0, sigma^2 C^2 I)) / lot_size.

    The divisor is the nominal lot size, not the realized batch cardinality.
    Summation is in input order, so results are deterministic per seed.
    `dim` is required when the batch is empty. A 2-D array is treated as
    one gradient per row.
    """
    if isinstance(clipped_grads, np.ndarray) and clipped_grads.ndim == 2:
        dim = clipped_grads.shape[1]
        total = clipped_grads.sum(axis=0)
    else:
        if len(clipped_grads):
            dim = len(clipped_grads[0])
        elif dim is None:
            raise ValueError("dim is required for an empty batch")
        total = np.zeros(dim, dtype=np.float64)
        for g in clipped_grads:
            if len(g) != dim:
                raise DimensionMismatchError("gradient dimensions disagree")
            total += g
    z = rng.normal(0.0, noise.sigma * clip_norm, size=dim)
    return (total + z) / noise.lot_size


def sgd_step(w: np.ndarray, g_tilde: np.ndarray, eta: float) -> np.ndarray:
    """One descent step w - eta * g."""
    w = np.asarray(w, dtype=np.float64)
    g_tilde = np.asarray(g_tilde, dtype=np.float64)
    if w.shape != g_tilde.shape:
        raise DimensionMismatchError(
            f"parameter shape {w.shape} != gradient shape {g_tilde.shape}"
        )
    if eta <= 0:
        raise ValueError("eta must be > 0")
    return w - eta * g_tilde
