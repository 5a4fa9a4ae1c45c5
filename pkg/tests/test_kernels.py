"""Backend selection and numba/numpy agreement checks."""

import os
import subprocess
import sys

import numpy as np
import pytest

from ikann import _kernels
from ikann.neuralnet import init_params


def kernel_args(seed=11, batch=32):
    p = init_params(16, seed)
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, (batch, 3))
    y = rng.normal(0, 1, (batch, 3))
    return (np.ascontiguousarray(p.w1.T), p.b1.copy(),
            np.ascontiguousarray(p.w2.T), p.b2.copy(), x, y)


def test_active_backend_matches_env():
    expected = "numpy" if os.environ.get("IKANN_DISABLE_NUMBA") else "numba"
    assert _kernels.BACKEND == expected


def test_jitted_matches_numpy_reference():
    a1, b1, a2, b2, x, y = kernel_args()
    out_active = _kernels.forward_batch(a1, b1, a2, b2, x)
    out_ref = _kernels.forward_batch_numpy(a1, b1, a2, b2, x)
    np.testing.assert_allclose(out_active, out_ref, rtol=1e-13, atol=1e-15)

    mse_active = _kernels.mse_batch(a1, b1, a2, b2, x, y)
    mse_ref = _kernels.mse_batch_numpy(a1, b1, a2, b2, x, y)
    assert mse_active == pytest.approx(mse_ref, rel=1e-12)

    g_active = _kernels.batch_gradients(a1, b1, a2, b2, x, y)
    g_ref = _kernels.batch_gradients_numpy(a1, b1, a2, b2, x, y)
    for ga, gr in zip(g_active, g_ref):
        np.testing.assert_allclose(ga, gr, rtol=1e-12, atol=1e-15)


def test_epoch_step_agrees_across_backends():
    a1, b1, a2, b2, x, y = kernel_args()
    order = np.arange(len(x))

    def run(fn):
        args = [a1.copy(), b1.copy(), a2.copy(), b2.copy()]
        args += [np.zeros_like(a) for a in (a1, a1, b1, b1, a2, a2, b2, b2)]
        step, loss = fn(*args, x, y, order, 8, 0.001, 0.9, 0.999, 1e-8, 0)
        return step, loss, args[:4]

    s1, l1, p1 = run(_kernels.epoch_step)
    s2, l2, p2 = run(_kernels.epoch_step_numpy)
    assert s1 == s2 == 4
    assert abs(l1 - l2) < 1e-12
    for u, v in zip(p1, p2):
        np.testing.assert_allclose(u, v, rtol=1e-10, atol=1e-14)


def test_disable_flag_selects_numpy_backend():
    env = dict(os.environ, IKANN_DISABLE_NUMBA="1")
    code = ("import ikann._kernels as k; "
            "print(k.BACKEND); "
            "print(k.forward_batch is k.forward_batch_numpy)")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]
