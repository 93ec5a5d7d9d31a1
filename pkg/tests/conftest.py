import pathlib

import numpy as np
import pytest

from liprate.data import Task, load_csv

REPO = pathlib.Path(__file__).resolve().parents[1]
DATA = REPO / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def iris():
    return load_csv(DATA / "iris.csv", Task.MULTICLASS, "species")


@pytest.fixture(scope="session")
def digits():
    return load_csv(DATA / "digits.csv", Task.MULTICLASS, "digit")


@pytest.fixture(scope="session")
def breast_cancer():
    return load_csv(DATA / "breast_cancer.csv", Task.BINARY, "diagnosis")


@pytest.fixture(scope="session")
def two_moons():
    return load_csv(DATA / "two_moons.csv", Task.BINARY, "label")


@pytest.fixture(scope="session")
def synth_linreg():
    return load_csv(DATA / "synth_linreg.csv", Task.REGRESSION, "target")


def central_difference_grads(value_fn, params, step=1e-6):
    """Finite-difference gradient of a scalar function of ModelParams,
    one tensor list per weight/bias tensor."""
    gw, gb = [], []
    for group, out in ((params.weights, gw), (params.biases, gb)):
        for tensor in group:
            g = np.zeros_like(tensor)
            it = np.nditer(tensor, flags=["multi_index"])
            while not it.finished:
                ix = it.multi_index
                orig = tensor[ix]
                tensor[ix] = orig + step
                up = value_fn(params)
                tensor[ix] = orig - step
                down = value_fn(params)
                tensor[ix] = orig
                g[ix] = (up - down) / (2.0 * step)
                it.iternext()
            out.append(g)
    return gw, gb


def assert_grads_close(analytic, numeric, rtol=1e-5, floor=1e-8):
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        rel = np.abs(a - n) / denom
        assert rel.max() <= rtol, f"max relative error {rel.max():.3g}"
