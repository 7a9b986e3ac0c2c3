import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_stats(rng, m, k, t=20, scale=1.0):
    """Stats from t random (x, alpha) pairs, with the direct sums for checking."""
    from onlinecvxmf.core import SufficientStats

    X = rng.uniform(0, scale, size=(m, t))
    alphas = rng.uniform(0, 1, size=(k, t))
    return SufficientStats(alphas @ alphas.T / t, X @ alphas.T / t, t, 0.0), X, alphas


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
