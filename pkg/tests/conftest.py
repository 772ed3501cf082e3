import numpy as np
import pytest

from gaussdag.data import Dataset


def random_spd(n, rng, jitter=0.5):
    a = rng.standard_normal((n, n))
    return a @ a.T + jitter * np.eye(n)


def random_dataset(n, N, seed, correlated=True):
    rng = np.random.default_rng(seed)
    if correlated and n > 1:
        L = np.linalg.cholesky(random_spd(n, rng))
        x = rng.standard_normal((N, n)) @ L.T + rng.standard_normal(n)
    else:
        x = rng.standard_normal((N, n))
    names = tuple(f"X{i}" for i in range(n))
    return Dataset(names, tuple(tuple(float(v) for v in row) for row in x))


def rel_close(a, b, rtol):
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
