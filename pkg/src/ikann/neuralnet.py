"""From-scratch shallow ReLU regressor for the IK map: 3 inputs, one hidden
layer, 3 linear outputs. Mini-batch Adam, seeded splits and shuffles, optional
early stopping on validation loss.

All arithmetic is float64. Given identical dataset, config, and seed the
trained parameters are bitwise reproducible (per kernel backend).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NonFiniteLoss
from .sampler import TrainingSet, normalize_input

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class NetworkParams:
    """Weights and biases; w1 is (hidden, 3), w2 is (3, hidden)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        h = self.w1.shape[0]
        if self.w1.shape != (h, 3) or self.b1.shape != (h,) \
                or self.w2.shape != (3, h) or self.b2.shape != (3,):
            raise ValueError("inconsistent parameter shapes")
        for a in (self.w1, self.b1, self.w2, self.b2):
            if not np.all(np.isfinite(a)):
                raise ValueError("parameters must be finite")

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


@dataclass(frozen=True)
class TrainingConfig:
    hidden: int = 16
    learning_rate: float = 0.001
    batch_size: int = 8
    max_epochs: int = 500
    patience: int = 10
    min_delta: float = 1e-5
    val_fraction: float = 0.05
    test_fraction: float = 0.05
    seed: int = 0
    early_stopping: bool = True

    def __post_init__(self):
        if self.hidden < 1 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("hidden, batch_size, and max_epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not (0 <= self.val_fraction < 0.5 and 0 <= self.test_fraction < 0.5):
            raise ValueError("val/test fractions must lie in [0, 0.5)")


@dataclass
class TrainingTrace:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    epochs_run: int = 0
    stopped_early: bool = False


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def sizes(self):
        return len(self.train), len(self.val), len(self.test)


@dataclass
class Gradients:
    """Loss gradients, same layout as NetworkParams."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass
class AdamState:
    m: Gradients
    v: Gradients
    t: int = 0


def init_params(hidden: int, seed: int) -> NetworkParams:
    """Uniform Glorot-style init, zero biases, deterministic per seed."""
    if hidden < 1:
        raise ValueError("hidden must be >= 1")
    rng = np.random.default_rng(seed)
    limit = math.sqrt(6.0 / (3 + hidden))
    w1 = rng.uniform(-limit, limit, size=(hidden, 3))
    w2 = rng.uniform(-limit, limit, size=(3, hidden))
    return NetworkParams(w1=w1, b1=np.zeros(hidden), w2=w2, b2=np.zeros(3))


def _kernel_layout(p: NetworkParams):
    return (np.ascontiguousarray(p.w1.T), p.b1.copy(),
            np.ascontiguousarray(p.w2.T), p.b2.copy())


def _from_kernel_layout(a1, b1, a2, b2) -> NetworkParams:
    return NetworkParams(w1=np.ascontiguousarray(a1.T), b1=b1.copy(),
                         w2=np.ascontiguousarray(a2.T), b2=b2.copy())


def forward(p: NetworkParams, x_norm) -> np.ndarray:
    """Single-point network output: w2 @ relu(w1 @ x + b1) + b2."""
    x = np.asarray(x_norm, dtype=float)
    return p.w2 @ np.maximum(p.w1 @ x + p.b1, 0.0) + p.b2


def predict(p: NetworkParams, x_norm: np.ndarray) -> np.ndarray:
    """Batched network output for an (N, 3) array of normalized inputs."""
    a1, b1, a2, b2 = _kernel_layout(p)
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(x_norm, dtype=float)))
    return _kernels.forward_batch(a1, b1, a2, b2, x)


def loss(p: NetworkParams, x_norm: np.ndarray, q_target: np.ndarray) -> float:
    """MSE over the batch and over the 3 output components, in rad^2."""
    a1, b1, a2, b2 = _kernel_layout(p)
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(x_norm, dtype=float)))
    y = np.ascontiguousarray(np.atleast_2d(np.asarray(q_target, dtype=float)))
    return float(_kernels.mse_batch(a1, b1, a2, b2, x, y))


def backward(p: NetworkParams, x_norm: np.ndarray, q_target: np.ndarray) -> Gradients:
    """Exact gradient of :func:`loss` for the batch (ReLU subgradient at 0 is 0)."""
    a1, b1, a2, b2 = _kernel_layout(p)
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(x_norm, dtype=float)))
    y = np.ascontiguousarray(np.atleast_2d(np.asarray(q_target, dtype=float)))
    ga1, gb1, ga2, gb2 = _kernels.batch_gradients(a1, b1, a2, b2, x, y)
    return Gradients(w1=np.ascontiguousarray(ga1.T), b1=gb1,
                     w2=np.ascontiguousarray(ga2.T), b2=gb2)


def init_adam_state(p: NetworkParams) -> AdamState:
    zeros = lambda: Gradients(np.zeros_like(p.w1), np.zeros_like(p.b1),
                              np.zeros_like(p.w2), np.zeros_like(p.b2))
    return AdamState(m=zeros(), v=zeros(), t=0)


def adam_step(p: NetworkParams, grads: Gradients, state: AdamState,
              lr: float, beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
              eps: float = ADAM_EPS):
    """One Adam update with bias correction; returns (params, state)."""
    t = state.t + 1
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    new_p, new_m, new_v = {}, {}, {}
    for name in ("w1", "b1", "w2", "b2"):
        g = getattr(grads, name)
        m = beta1 * getattr(state.m, name) + (1.0 - beta1) * g
        v = beta2 * getattr(state.v, name) + (1.0 - beta2) * (g * g)
        new_m[name], new_v[name] = m, v
        new_p[name] = getattr(p, name) - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return NetworkParams(**new_p), AdamState(m=Gradients(**new_m), v=Gradients(**new_v), t=t)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


SPLIT_ROUNDING = "half-up, floor of 1 sample each for val/test"


def split_dataset(ds: TrainingSet, cfg: TrainingConfig, seed: int) -> SplitIndices:
    """Seeded shuffle split into train/val/test index sets.

    Val and test sizes are round-half-up of fraction*n with a floor of one
    sample whenever the fraction is nonzero.
    """
    n = ds.n

    def size(frac):
        return max(1, _round_half_up(frac * n)) if frac > 0 else 0

    n_val, n_test = size(cfg.val_fraction), size(cfg.test_fraction)
    if n_val + n_test >= n:
        raise ValueError("val/test split leaves no training samples")
    perm = np.random.default_rng([seed, 1]).permutation(n)
    return SplitIndices(train=np.sort(perm[n_val + n_test:]),
                        val=np.sort(perm[:n_val]),
                        test=np.sort(perm[n_val:n_val + n_test]))


def train(ds: TrainingSet, cfg: TrainingConfig):
    """Train on the grid dataset per the configured recipe.

    Returns (NetworkParams, TrainingTrace). Inputs are normalized by the
    dataset box; targets stay in radians. With early stopping on, an epoch
    counts as non-improving when it fails to beat the previous epoch's
    validation loss by min_delta; after ``patience`` consecutive non-improving
    epochs training halts. The best-validation parameters are restored at the
    end either way.

    Raises NonFiniteLoss if either loss leaves the finite range.
    """
    split = split_dataset(ds, cfg, cfg.seed)
    x = np.ascontiguousarray(normalize_input(ds.points, ds.box))
    y = np.ascontiguousarray(ds.angles)
    x_val, y_val = x[split.val], y[split.val]

    p0 = init_params(cfg.hidden, cfg.seed)
    a1, b1, a2, b2 = _kernel_layout(p0)
    m_a1, v_a1 = np.zeros_like(a1), np.zeros_like(a1)
    m_b1, v_b1 = np.zeros_like(b1), np.zeros_like(b1)
    m_a2, v_a2 = np.zeros_like(a2), np.zeros_like(a2)
    m_b2, v_b2 = np.zeros_like(b2), np.zeros_like(b2)

    shuffle_rng = np.random.default_rng([cfg.seed, 2])
    trace = TrainingTrace()
    best_val = math.inf
    prev_val = math.inf
    best = (a1.copy(), b1.copy(), a2.copy(), b2.copy())
    bad_epochs = 0
    step = 0

    for epoch in range(cfg.max_epochs):
        order = shuffle_rng.permutation(split.train)
        # divergence surfaces as NonFiniteLoss below; keep the overflow quiet
        with np.errstate(over="ignore", invalid="ignore"):
            step, train_loss = _kernels.epoch_step(
                a1, b1, a2, b2, m_a1, v_a1, m_b1, v_b1, m_a2, v_a2, m_b2, v_b2,
                x, y, order, cfg.batch_size, cfg.learning_rate,
                ADAM_BETA1, ADAM_BETA2, ADAM_EPS, step)
            if len(x_val):
                val_loss = float(_kernels.mse_batch(a1, b1, a2, b2, x_val, y_val))
            else:
                val_loss = train_loss
        trace.train_loss.append(float(train_loss))
        trace.val_loss.append(val_loss)
        trace.epochs_run = epoch + 1
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            raise NonFiniteLoss(f"loss diverged at epoch {epoch + 1} "
                                f"(train={train_loss}, val={val_loss})")

        if val_loss < best_val:
            best_val = val_loss
            best = (a1.copy(), b1.copy(), a2.copy(), b2.copy())
        if val_loss < prev_val - cfg.min_delta:
            bad_epochs = 0
        else:
            bad_epochs += 1
            if cfg.early_stopping and bad_epochs >= cfg.patience:
                trace.stopped_early = True
                break
        prev_val = val_loss

    if cfg.early_stopping:
        a1, b1, a2, b2 = best
    return _from_kernel_layout(a1, b1, a2, b2), trace
