"""Per-position foreground classifier.

A single affine map from descriptor space to one logit, squashed by a
sigmoid. Equivalent to a 1x1 convolution with one output channel applied
across the grid. Trained with binary cross entropy against binary target
masks using minibatch SGD with classical momentum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BinaryMask, FeatureMap, ProbMask
from .errors import InvalidInputError

# Open-interval clamp for forward outputs: strictly inside (0, 1) even when
# the logit saturates past the float range of exp.
_P_LO = float(np.finfo(np.float64).tiny)
_P_HI = float(np.nextafter(1.0, 0.0))

# Probability floor used when a loss is computed from probabilities alone.
_LOG_EPS = 1e-12

Batch = Sequence[tuple[FeatureMap, BinaryMask]]


@dataclass(frozen=True)
class PixelHead:
    """Affine scorer: probability = sigmoid(weights . descriptor + bias)."""

    weights: np.ndarray
    bias: float

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] < 1:
            raise InvalidInputError(f"weights must be a non-empty vector, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or not np.isfinite(self.bias):
            raise InvalidInputError("head parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings.

    The learning rate is multiplied by decay_factor after every decay_period
    epochs, so epoch e runs at learning_rate * decay_factor ** (e // decay_period).
    A zero learning rate is allowed and leaves the head untouched, which is
    useful as a null-update check.
    """

    batch_size: int = 256
    learning_rate: float = 1e-3
    momentum: float = 0.9
    weight_decay: float = 1e-4
    epochs: int = 12
    decay_period: int = 4
    decay_factor: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise InvalidInputError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (np.isfinite(self.learning_rate) and self.learning_rate >= 0.0):
            raise InvalidInputError(f"learning_rate must be finite and >= 0, got {self.learning_rate}")
        if not (0.0 <= self.momentum < 1.0):
            raise InvalidInputError(f"momentum must lie in [0, 1), got {self.momentum}")
        if not (np.isfinite(self.weight_decay) and self.weight_decay >= 0.0):
            raise InvalidInputError(f"weight_decay must be finite and >= 0, got {self.weight_decay}")
        if self.epochs < 1:
            raise InvalidInputError(f"epochs must be >= 1, got {self.epochs}")
        if self.decay_period < 1:
            raise InvalidInputError(f"decay_period must be >= 1, got {self.decay_period}")
        if not (0.0 < self.decay_factor <= 1.0):
            raise InvalidInputError(f"decay_factor must lie in (0, 1], got {self.decay_factor}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Piecewise form: never exponentiates a large positive argument.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def head_forward(head: PixelHead, features: FeatureMap) -> ProbMask:
    """Per-position probabilities, shape (h, w), strictly inside (0, 1)."""
    if features.d != head.dim:
        raise InvalidInputError(f"feature depth {features.d} does not match head dim {head.dim}")
    z = features.values.astype(np.float64) @ head.weights + head.bias
    p = _sigmoid(z)
    np.clip(p, _P_LO, _P_HI, out=p)
    return ProbMask(p)


def bce_loss(pred: ProbMask, target: BinaryMask) -> float:
    """Mean binary cross entropy over all positions.

    Probabilities are floored away from exact 0 and 1 before the logs, so
    the result is always finite and no exponential is ever evaluated.
    """
    if (pred.h, pred.w) != (target.h, target.w):
        raise InvalidInputError(
            f"prediction {pred.h}x{pred.w} and target {target.h}x{target.w} dims differ"
        )
    p = np.clip(pred.values, _LOG_EPS, 1.0 - _LOG_EPS)
    y = target.values.astype(np.float64)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def _bce_from_logits(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    # max(z, 0) - z*y + log1p(exp(-|z|)): the exp argument is never positive.
    return np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))


def _check_batch(head_dim: int, batch: Batch) -> None:
    if len(batch) == 0:
        raise InvalidInputError("batch must contain at least one image")
    for i, (fm, target) in enumerate(batch):
        if fm.d != head_dim:
            raise InvalidInputError(f"batch image {i}: feature depth {fm.d} does not match head dim {head_dim}")
        if (fm.h, fm.w) != (target.h, target.w):
            raise InvalidInputError(
                f"batch image {i}: feature grid {fm.h}x{fm.w} and target {target.h}x{target.w} dims differ"
            )


def _grad_and_loss(theta: np.ndarray, batch: Batch, weight_decay: float) -> tuple[np.ndarray, float, int]:
    """Gradient of mean BCE + (wd/2)*|w|^2 at theta = (w, b), plus summed BCE."""
    d = theta.shape[0] - 1
    w, b = theta[:d], theta[d]
    grad_w = np.zeros(d, dtype=np.float64)
    grad_b = 0.0
    loss_sum = 0.0
    n = 0
    for fm, target in batch:
        x = fm.values.reshape(-1, d).astype(np.float64)
        y = target.values.ravel().astype(np.float64)
        z = x @ w + b
        resid = _sigmoid(z) - y
        grad_w += x.T @ resid
        grad_b += float(resid.sum())
        loss_sum += float(_bce_from_logits(z, y).sum())
        n += y.size
    grad_w = grad_w / n + weight_decay * w
    grad_b /= n
    return np.concatenate([grad_w, [grad_b]]), loss_sum, n


def bce_grad(head: PixelHead, batch: Batch, weight_decay: float = 0.0) -> np.ndarray:
    """Analytic gradient of mean BCE plus L2 weight penalty.

    Returns d+1 floats: the weight gradient followed by the bias gradient.
    With N total positions, grad_w = sum((p - y) * x) / N + weight_decay * w
    and grad_b = sum(p - y) / N; the decay never touches the bias.
    """
    _check_batch(head.dim, batch)
    theta = np.concatenate([head.weights, [head.bias]])
    grad, _, _ = _grad_and_loss(theta, batch, weight_decay)
    return grad


def init_head(d: int, seed: int) -> PixelHead:
    """Fresh head: weights uniform in [-1/sqrt(d), +1/sqrt(d)], bias zero."""
    if d < 1:
        raise InvalidInputError(f"descriptor depth must be >= 1, got {d}")
    bound = 1.0 / math.sqrt(d)
    w = np.random.default_rng(seed).uniform(-bound, bound, size=d)
    return PixelHead(weights=w, bias=0.0)


def train_head(
    dataset: Sequence[tuple[FeatureMap, BinaryMask]],
    config: TrainConfig,
    init: PixelHead | None = None,
) -> tuple[PixelHead, list[float]]:
    """Minibatch SGD with classical momentum over (features, target) pairs.

    Each epoch shuffles the image order with a generator seeded from
    config.seed and walks it in batch_size chunks. Updates follow
    v <- momentum * v - lr * g; theta <- theta + v. Returns the final head
    and the per-epoch mean BCE over all positions, each batch evaluated at
    the parameters it was trained on (before its own update). The run is
    deterministic given the dataset order and config; the initial head
    defaults to init_head(d, config.seed).
    """
    if len(dataset) == 0:
        raise InvalidInputError("train_head needs a non-empty dataset")
    d = dataset[0][0].d
    _check_batch(d, dataset)

    head = init if init is not None else init_head(d, config.seed)
    if head.dim != d:
        raise InvalidInputError(f"init head dim {head.dim} does not match dataset depth {d}")

    theta = np.concatenate([head.weights, [head.bias]])
    velocity = np.zeros_like(theta)
    shuffle_rng = np.random.default_rng(config.seed)
    trace: list[float] = []

    for epoch in range(config.epochs):
        lr = config.learning_rate * config.decay_factor ** (epoch // config.decay_period)
        order = shuffle_rng.permutation(len(dataset))
        loss_sum = 0.0
        positions = 0
        for start in range(0, len(dataset), config.batch_size):
            batch = [dataset[i] for i in order[start:start + config.batch_size]]
            grad, batch_loss, batch_n = _grad_and_loss(theta, batch, config.weight_decay)
            velocity = config.momentum * velocity - lr * grad
            theta = theta + velocity
            loss_sum += batch_loss
            positions += batch_n
        trace.append(loss_sum / positions)

    return PixelHead(weights=theta[:d], bias=float(theta[d])), trace
