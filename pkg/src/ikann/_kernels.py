"""Hot numeric kernels: batched forward pass, backprop, and the per-epoch
mini-batch Adam loop.

Each kernel is written in a numba-compatible numpy subset and compiled with
``@njit`` on import. Set ``IKANN_DISABLE_NUMBA=1`` to force the plain numpy
implementations (the ``*_numpy`` functions below, which stay importable either
way for benchmarking). ``BACKEND`` reports which path is active.

Weight layout inside kernels is transposed relative to the public
``NetworkParams`` so every matmul runs on C-contiguous operands:

    a1: (3, hidden)   input-to-hidden weights
    a2: (hidden, 3)   hidden-to-output weights
"""

import os

import numpy as np


def forward_batch_numpy(a1, b1, a2, b2, x):
    """Network output for a batch of normalized inputs x (B, 3) -> (B, 3)."""
    h = np.maximum(np.dot(x, a1) + b1, 0.0)
    return np.dot(h, a2) + b2


def mse_batch_numpy(a1, b1, a2, b2, x, y):
    """MSE over batch rows and the 3 output components."""
    h = np.maximum(np.dot(x, a1) + b1, 0.0)
    err = np.dot(h, a2) + b2 - y
    return np.sum(err * err) / (err.shape[0] * 3.0)


def batch_gradients_numpy(a1, b1, a2, b2, x, y):
    """Exact MSE gradients for one batch; ReLU subgradient at 0 is 0.

    Returns (ga1, gb1, ga2, gb2) in kernel layout.
    """
    pre = np.dot(x, a1) + b1
    h = np.maximum(pre, 0.0)
    out = np.dot(h, a2) + b2
    dout = (out - y) * (2.0 / (x.shape[0] * 3.0))
    ga2 = np.dot(np.ascontiguousarray(h.T), dout)
    gb2 = dout.sum(axis=0)
    dh = np.dot(dout, np.ascontiguousarray(a2.T))
    dh = np.where(pre > 0.0, dh, 0.0)
    ga1 = np.dot(np.ascontiguousarray(x.T), dh)
    gb1 = dh.sum(axis=0)
    return ga1, gb1, ga2, gb2


def epoch_step_numpy(a1, b1, a2, b2,
                     m_a1, v_a1, m_b1, v_b1, m_a2, v_a2, m_b2, v_b2,
                     x, y, order, batch_size, lr, beta1, beta2, eps, step0):
    """One epoch of mini-batch Adam, mutating params and moments in place.

    ``order`` is the shuffled index array for this epoch; ``step0`` the Adam
    step counter so far. Returns (step, epoch_loss) where epoch_loss is the
    sample-weighted mean of the pre-update batch losses.
    """
    n = order.shape[0]
    sse = 0.0
    step = step0
    start = 0
    while start < n:
        stop = min(start + batch_size, n)
        xb = x[order[start:stop]]
        yb = y[order[start:stop]]
        bs = stop - start

        pre = np.dot(xb, a1) + b1
        h = np.maximum(pre, 0.0)
        out = np.dot(h, a2) + b2
        err = out - yb
        sse += np.sum(err * err)

        dout = err * (2.0 / (bs * 3.0))
        ga2 = np.dot(np.ascontiguousarray(h.T), dout)
        gb2 = dout.sum(axis=0)
        dh = np.dot(dout, np.ascontiguousarray(a2.T))
        dh = np.where(pre > 0.0, dh, 0.0)
        ga1 = np.dot(np.ascontiguousarray(xb.T), dh)
        gb1 = dh.sum(axis=0)

        step += 1
        bc1 = 1.0 - beta1 ** step
        bc2 = 1.0 - beta2 ** step

        m_a1[:] = beta1 * m_a1 + (1.0 - beta1) * ga1
        v_a1[:] = beta2 * v_a1 + (1.0 - beta2) * (ga1 * ga1)
        a1 -= lr * (m_a1 / bc1) / (np.sqrt(v_a1 / bc2) + eps)

        m_b1[:] = beta1 * m_b1 + (1.0 - beta1) * gb1
        v_b1[:] = beta2 * v_b1 + (1.0 - beta2) * (gb1 * gb1)
        b1 -= lr * (m_b1 / bc1) / (np.sqrt(v_b1 / bc2) + eps)

        m_a2[:] = beta1 * m_a2 + (1.0 - beta1) * ga2
        v_a2[:] = beta2 * v_a2 + (1.0 - beta2) * (ga2 * ga2)
        a2 -= lr * (m_a2 / bc1) / (np.sqrt(v_a2 / bc2) + eps)

        m_b2[:] = beta1 * m_b2 + (1.0 - beta1) * gb2
        v_b2[:] = beta2 * v_b2 + (1.0 - beta2) * (gb2 * gb2)
        b2 -= lr * (m_b2 / bc1) / (np.sqrt(v_b2 / bc2) + eps)

        start = stop
    return step, sse / (n * 3.0)


def _numba_disabled() -> bool:
    return os.environ.get("IKANN_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


if not _numba_disabled():
    try:
        from numba import njit
    except ImportError:
        njit = None
    if njit is not None:
        _jit = njit(cache=True, nogil=True)
        forward_batch = _jit(forward_batch_numpy)
        mse_batch = _jit(mse_batch_numpy)
        batch_gradients = _jit(batch_gradients_numpy)
        epoch_step = _jit(epoch_step_numpy)
        BACKEND = "numba"
    else:
        forward_batch = forward_batch_numpy
        mse_batch = mse_batch_numpy
        batch_gradients = batch_gradients_numpy
        epoch_step = epoch_step_numpy
        BACKEND = "numpy"
else:
    forward_batch = forward_batch_numpy
    mse_batch = mse_batch_numpy
    batch_gradients = batch_gradients_numpy
    epoch_step = epoch_step_numpy
    BACKEND = "numpy"
