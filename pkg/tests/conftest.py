import warnings

import numpy as np
import pytest

from rashomon_audit.data import dataset_from_arrays
from rashomon_audit.synthetic import make_planted


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_planted():
    return make_planted(n=400, k=6, informative=3, noise=0.1, seed=5)


@pytest.fixture(autouse=True)
def _quiet_numerics():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", category=RuntimeWarning)
        yield


def tiny_dataset(n=60, k=4, seed=0):
    r = np.random.default_rng(seed)
    X = r.normal(size=(n, k))
    y = (X[:, 0] + 0.5 * X[:, 1] + 0.3 * r.normal(size=n) > 0).astype(int)
    return dataset_from_arrays(X, y)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
