import math

import numpy as np
import pytest

from ikann.errors import NonFiniteLoss
from ikann.neuralnet import (Gradients, NetworkParams,
                             TrainingConfig, adam_step, backward, forward,
                             init_adam_state, init_params, loss, predict,
                             split_dataset, train)
from ikann.sampler import generate_grid, normalize_input


def one_unit_net():
    """hidden=1, w1 row (1,0,0), w2 column (2,0,0)^T, zero biases."""
    return NetworkParams(w1=np.array([[1.0, 0.0, 0.0]]), b1=np.zeros(1),
                         w2=np.array([[2.0], [0.0], [0.0]]), b2=np.zeros(3))


# --- init -------------------------------------------------------------------

def test_init_deterministic():
    a = init_params(16, 42)
    b = init_params(16, 42)
    assert np.array_equal(a.w1, b.w1) and np.array_equal(a.w2, b.w2)
    c = init_params(16, 43)
    assert not np.array_equal(a.w1, c.w1)


def test_init_zero_biases_and_bounds():
    p = init_params(16, 1)
    assert np.all(p.b1 == 0.0) and np.all(p.b2 == 0.0)
    limit = math.sqrt(6.0 / 19.0)
    assert np.all(np.abs(p.w1) <= limit) and np.all(np.abs(p.w2) <= limit)


def test_params_validation():
    with pytest.raises(ValueError):
        NetworkParams(w1=np.zeros((4, 3)), b1=np.zeros(3), w2=np.zeros((3, 4)), b2=np.zeros(3))
    with pytest.raises(ValueError):
        NetworkParams(w1=np.full((1, 3), np.nan), b1=np.zeros(1), w2=np.zeros((3, 1)), b2=np.zeros(3))


# --- forward ----------------------------------------------------------------

def test_forward_dead_network_passes_bias():
    p = NetworkParams(w1=np.zeros((4, 3)), b1=np.zeros(4),
                      w2=np.zeros((3, 4)), b2=np.array([1.0, -2.0, 3.0]))
    np.testing.assert_array_equal(forward(p, [0.3, 0.5, 0.7]), [1.0, -2.0, 3.0])


def test_forward_relu_clamps():
    p = one_unit_net()
    np.testing.assert_array_equal(forward(p, [-1.0, 0.0, 0.0]), [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(forward(p, [0.5, 0.0, 0.0]), [1.0, 0.0, 0.0])


def test_predict_matches_forward():
    p = init_params(8, 9)
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, (40, 3))
    batch = predict(p, x)
    single = np.array([forward(p, xi) for xi in x])
    np.testing.assert_allclose(batch, single, atol=1e-12)


# --- loss -------------------------------------------------------------------

def test_loss_examples():
    p = one_unit_net()
    # perfect prediction
    assert loss(p, [[0.5, 0.0, 0.0]], [[1.0, 0.0, 0.0]]) == 0.0
    # off by (1,0,0): mean over 3 components
    assert loss(p, [[0.5, 0.0, 0.0]], [[0.0, 0.0, 0.0]]) == pytest.approx(1.0 / 3.0)
    # two samples, all component errors equal 2
    p0 = NetworkParams(w1=np.zeros((2, 3)), b1=np.zeros(2), w2=np.zeros((3, 2)), b2=np.zeros(3))
    x = [[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]]
    y = [[2.0, 2.0, 2.0], [2.0, 2.0, 2.0]]
    assert loss(p0, x, y) == pytest.approx(4.0)


# --- backward ---------------------------------------------------------------

def test_backward_zero_error_zero_gradient():
    p = one_unit_net()
    g = backward(p, [[0.5, 0.0, 0.0]], [[1.0, 0.0, 0.0]])
    for name in ("w1", "b1", "w2", "b2"):
        assert np.all(getattr(g, name) == 0.0)


def test_backward_dead_unit_zero_gradient():
    p = one_unit_net()
    # negative pre-activation on every batch point
    g = backward(p, [[-1.0, 0.0, 0.0], [-0.5, 0.2, 0.2]], [[1.0, 0.0, 0.0]] * 2)
    assert np.all(g.w1[0] == 0.0) and g.b1[0] == 0.0


def test_gradient_check_vs_finite_differences():
    from conftest import fd_gradient
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(1000 + seed)
        p0 = init_params(6, seed)
        p = NetworkParams(w1=p0.w1, b1=rng.normal(0, 0.2, 6),
                          w2=p0.w2, b2=rng.normal(0, 0.2, 3))
        x = rng.uniform(0, 1, (8, 3))
        y = rng.normal(0, 1, (8, 3))
        bp = backward(p, x, y)
        fd = fd_gradient(p, x, y)
        for name in ("w1", "b1", "w2", "b2"):
            a, b = getattr(bp, name), getattr(fd, name)
            denom = np.maximum(1e-6, np.maximum(np.abs(a), np.abs(b)))
            worst = max(worst, float(np.max(np.abs(a - b) / denom)))
    assert worst < 1e-5


# --- adam -------------------------------------------------------------------

def _scalar_net(value=0.0):
    return NetworkParams(w1=np.array([[value, 0.0, 0.0]]), b1=np.zeros(1),
                         w2=np.zeros((3, 1)), b2=np.zeros(3))


def _scalar_grad(g):
    return Gradients(w1=np.array([[g, 0.0, 0.0]]), b1=np.zeros(1),
                     w2=np.zeros((3, 1)), b2=np.zeros(3))


def test_adam_first_step_magnitude():
    p = _scalar_net(0.0)
    state = init_adam_state(p)
    p2, state2 = adam_step(p, _scalar_grad(4.0), state, lr=0.001)
    delta = p2.w1[0, 0] - p.w1[0, 0]
    assert delta == pytest.approx(-0.001, rel=1e-6)
    assert state2.t == 1


def test_adam_zero_gradient_no_change():
    p = _scalar_net(0.7)
    state = init_adam_state(p)
    for _ in range(5):
        p, state = adam_step(p, _scalar_grad(0.0), state, lr=0.001)
    assert p.w1[0, 0] == 0.7


def test_adam_constant_gradient_nonincreasing_step():
    p = _scalar_net(0.0)
    state = init_adam_state(p)
    p1, state = adam_step(p, _scalar_grad(4.0), state, lr=0.001)
    p2, state = adam_step(p1, _scalar_grad(4.0), state, lr=0.001)
    d1 = abs(p1.w1[0, 0] - p.w1[0, 0])
    d2 = abs(p2.w1[0, 0] - p1.w1[0, 0])
    assert d2 <= d1 * 1.01


def test_adam_epoch_matches_kernel(k3_dataset):
    """One epoch through the public ops equals the fused kernel epoch."""
    from ikann import _kernels
    ds = k3_dataset
    cfg = TrainingConfig(seed=3)
    x = normalize_input(ds.points, ds.box)
    y = ds.angles.copy()
    order = np.arange(ds.n)

    p = init_params(4, 3)
    state = init_adam_state(p)
    for start in range(0, ds.n, cfg.batch_size):
        sl = order[start:start + cfg.batch_size]
        g = backward(p, x[sl], y[sl])
        p, state = adam_step(p, g, state, lr=cfg.learning_rate)

    p2 = init_params(4, 3)
    a1, b1, a2, b2 = (np.ascontiguousarray(p2.w1.T), p2.b1.copy(),
                      np.ascontiguousarray(p2.w2.T), p2.b2.copy())
    zeros = lambda a: np.zeros_like(a)
    _kernels.epoch_step(a1, b1, a2, b2, zeros(a1), zeros(a1), zeros(b1), zeros(b1),
                        zeros(a2), zeros(a2), zeros(b2), zeros(b2),
                        np.ascontiguousarray(x), np.ascontiguousarray(y), order,
                        cfg.batch_size, cfg.learning_rate, 0.9, 0.999, 1e-8, 0)
    np.testing.assert_allclose(a1.T, p.w1, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(b1, p.b1, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(a2.T, p.w2, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(b2, p.b2, rtol=1e-12, atol=1e-15)


# --- split ------------------------------------------------------------------

def test_split_sizes_n125(box):
    ds = generate_grid(box, 5)
    cfg = TrainingConfig(seed=1)
    split = split_dataset(ds, cfg, 1)
    # round-half-up of 6.25 is 6
    assert split.sizes() == (113, 6, 6)


def test_split_sizes_n8(box):
    ds = generate_grid(box, 2)
    split = split_dataset(ds, TrainingConfig(seed=1), 1)
    assert split.sizes() == (6, 1, 1)


def test_split_deterministic_and_disjoint(box):
    ds = generate_grid(box, 3)
    cfg = TrainingConfig(seed=9)
    s1 = split_dataset(ds, cfg, 9)
    s2 = split_dataset(ds, cfg, 9)
    assert np.array_equal(s1.train, s2.train) and np.array_equal(s1.val, s2.val)
    all_idx = np.concatenate([s1.train, s1.val, s1.test])
    assert len(np.unique(all_idx)) == ds.n


# --- train ------------------------------------------------------------------

def test_train_k5_reaches_low_loss(box):
    ds = generate_grid(box, 5)
    params, trace = train(ds, TrainingConfig(seed=42))
    assert trace.train_loss[-1] < 1e-2
    assert trace.epochs_run == len(trace.train_loss) == len(trace.val_loss)


def test_train_no_early_stop_runs_full_length(box):
    ds = generate_grid(box, 2)
    params, trace = train(ds, TrainingConfig(seed=1, max_epochs=40, early_stopping=False))
    assert trace.epochs_run == 40
    assert not trace.stopped_early


def test_train_deterministic(box):
    ds = generate_grid(box, 3)
    cfg = TrainingConfig(seed=5, max_epochs=30)
    pa, _ = train(ds, cfg)
    pb, _ = train(ds, cfg)
    assert np.array_equal(pa.w1, pb.w1) and np.array_equal(pa.b1, pb.b1)
    assert np.array_equal(pa.w2, pb.w2) and np.array_equal(pa.b2, pb.b2)


def test_train_small_dataset_val_loss_order_one(box):
    ds = generate_grid(box, 2)
    params, trace = train(ds, TrainingConfig(seed=1))
    assert 0.01 < trace.val_loss[-1] < 20.0


def test_train_divergence_raises(box):
    ds = generate_grid(box, 2)
    with pytest.raises(NonFiniteLoss):
        train(ds, TrainingConfig(seed=1, learning_rate=1e150))


def test_best_val_not_worse_than_first_epoch(box):
    for k in (4, 5):
        ds = generate_grid(box, k)
        _, trace = train(ds, TrainingConfig(seed=2))
        assert min(trace.val_loss) <= trace.val_loss[0]


def test_piecewise_linearity(trained_k3):
    params, _ = trained_k3
    rng = np.random.default_rng(77)
    checked = 0
    while checked < 200:
        a = rng.uniform(0, 1, 3)
        b = a + rng.normal(size=3) * 1e-3
        mid = 0.5 * (a + b)
        masks = [(params.w1 @ v + params.b1) > 0 for v in (a, mid, b)]
        if not (np.array_equal(masks[0], masks[1]) and np.array_equal(masks[1], masks[2])):
            continue
        interp = 0.5 * (forward(params, a) + forward(params, b))
        assert np.max(np.abs(forward(params, mid) - interp)) < 1e-12
        checked += 1


def test_config_validation():
    with pytest.raises(ValueError):
        TrainingConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainingConfig(val_fraction=0.6)
    with pytest.raises(ValueError):
        TrainingConfig(batch_size=0)
