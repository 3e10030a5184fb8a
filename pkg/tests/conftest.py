import numpy as np
import pytest

from sidechannel.dataset import Dataset


def make_dataset(X, y, classes=("A", "B"), names=None, relation="t"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    names = names or tuple(f"a{i}" for i in range(X.shape[1]))
    return Dataset(relation, tuple(names), tuple(classes), X, np.asarray(y))


def noisy_dataset(seed, n=200, m=4, noise=0.5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, m))
    y = (X[:, 0] + noise * rng.normal(size=n) > 0).astype(int)
    return make_dataset(X, y)


@pytest.fixture
def small_ds():
    return noisy_dataset(0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
