import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tmkernel.dynamics import BurstEnsemble

# jitted kernels make the first example slow; deadlines would only measure compilation
settings.register_profile("tmkernel", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("tmkernel")


def random_bursts(N, M, n, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    points = rng.uniform(-1, 1, (N, n))
    samples = points[:, None, :] + scale * rng.standard_normal((N, M, n))
    return BurstEnsemble(points, samples, 1.0, {"seed": seed, "potential": "external"})


@pytest.fixture
def bursts():
    return random_bursts(20, 30, 3, seed=0)


# one line per acceptance criterion, repeated after the pytest summary
ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    def emit(criterion, ok, detail):
        ACCEPTANCE_LINES.append(f"criterion {criterion:>3}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
