#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-numpy fallback.

Run from the repo root:

    python3 benchmarks/bench_kernels.py

With numba available (and IKANN_DISABLE_NUMBA unset) both paths are timed in
one process; otherwise only the numpy path runs.
"""

import time

import numpy as np

from ikann import _kernels
from ikann.neuralnet import init_params
from ikann.sampler import DEFAULT_BOX, generate_grid, normalize_input

HIDDEN = 16
K = 6
BATCH = 8
EPOCHS = 50
# path evaluation calls are ~200 points; bulk property checks use ~100k
FORWARD_SMALL = 200
FORWARD_BULK = 100_000
REPEATS = 5


def fresh_state(seed=0):
    p = init_params(HIDDEN, seed)
    a1 = np.ascontiguousarray(p.w1.T)
    a2 = np.ascontiguousarray(p.w2.T)
    b1, b2 = p.b1.copy(), p.b2.copy()
    moments = [np.zeros_like(a) for a in (a1, a1, b1, b1, a2, a2, b2, b2)]
    return [a1, b1, a2, b2] + moments


def time_epochs(epoch_fn, x, y, order):
    best = np.inf
    for _ in range(REPEATS):
        state = fresh_state()
        step = 0
        t0 = time.perf_counter()
        for _ in range(EPOCHS):
            step, _loss = epoch_fn(*state, x, y, order, BATCH, 0.001,
                                   0.9, 0.999, 1e-8, step)
        best = min(best, time.perf_counter() - t0)
    return best


def time_forward(forward_fn, params, x, calls=100):
    a1, b1, a2, b2 = params
    forward_fn(a1, b1, a2, b2, x)  # warm up (JIT compile on first call)
    best = np.inf
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        for _ in range(calls):
            forward_fn(a1, b1, a2, b2, x)
        best = min(best, time.perf_counter() - t0)
    return best / calls


def main():
    ds = generate_grid(DEFAULT_BOX, K)
    x = np.ascontiguousarray(normalize_input(ds.points, ds.box))
    y = np.ascontiguousarray(ds.angles)
    order = np.arange(ds.n)
    rng = np.random.default_rng(0)
    x_small = rng.uniform(0.0, 1.0, (FORWARD_SMALL, 3))
    x_bulk = rng.uniform(0.0, 1.0, (FORWARD_BULK, 3))
    params = fresh_state()[:4]

    print(f"dataset: n={ds.n}, hidden={HIDDEN}, batch={BATCH}, {EPOCHS} epochs")
    print(f"active backend: {_kernels.BACKEND}")

    cases = [
        (f"epoch_step x{EPOCHS}", lambda fn: time_epochs(fn, x, y, order),
         (_kernels.epoch_step_numpy, _kernels.epoch_step)),
        (f"forward {FORWARD_SMALL} pts", lambda fn: time_forward(fn, params, x_small),
         (_kernels.forward_batch_numpy, _kernels.forward_batch)),
        (f"forward {FORWARD_BULK} pts", lambda fn: time_forward(fn, params, x_bulk, calls=5),
         (_kernels.forward_batch_numpy, _kernels.forward_batch)),
    ]

    if _kernels.BACKEND == "numba":
        print(f"\n{'kernel':<22}{'numpy':>14}{'numba':>14}{'speedup':>10}")
        for label, timer, (np_fn, nb_fn) in cases:
            t_np, t_nb = timer(np_fn), timer(nb_fn)
            print(f"{label:<22}{t_np * 1e3:>12.3f}ms{t_nb * 1e3:>12.3f}ms"
                  f"{t_np / t_nb:>9.1f}x")
    else:
        print(f"\n{'kernel':<22}{'numpy':>14}")
        for label, timer, (np_fn, _nb_fn) in cases:
            print(f"{label:<22}{timer(np_fn) * 1e3:>12.3f}ms")
        print("\nnumba backend inactive (IKANN_DISABLE_NUMBA set or numba missing); "
              "nothing to compare")


if __name__ == "__main__":
    main()
