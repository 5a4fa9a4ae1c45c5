import numpy as np
import pytest

from ikann.kinematics import DEFAULT_GEOMETRY
from ikann.neuralnet import Gradients, NetworkParams, TrainingConfig, loss, train
from ikann.sampler import DEFAULT_BOX, generate_grid


def fd_gradient(p, x, y, h=1e-6):
    """Central finite-difference gradient of the loss; the independent oracle
    for backprop checks."""
    out = {}
    for name in ("w1", "b1", "w2", "b2"):
        arr = getattr(p, name)
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            fields = {n: getattr(p, n).copy() for n in ("w1", "b1", "w2", "b2")}
            fields[name][idx] += h
            lp = loss(NetworkParams(**fields), x, y)
            fields[name][idx] -= 2 * h
            lm = loss(NetworkParams(**fields), x, y)
            g[idx] = (lp - lm) / (2 * h)
        out[name] = g
    return Gradients(**out)


@pytest.fixture(scope="session")
def box():
    return DEFAULT_BOX


@pytest.fixture(scope="session")
def geom():
    return DEFAULT_GEOMETRY


@pytest.fixture(scope="session")
def k3_dataset():
    return generate_grid(DEFAULT_BOX, 3)


@pytest.fixture(scope="session")
def trained_k3(k3_dataset):
    """One quickly trained model shared by property tests."""
    cfg = TrainingConfig(seed=7, max_epochs=150, early_stopping=False)
    params, trace = train(k3_dataset, cfg)
    return params, trace
