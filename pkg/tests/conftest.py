import time

import numpy as np
import pytest

from tblmi.benchmark import benchmark_system, benchmark_weights
from tblmi.harmonic_control import lqr_synthesize

from _util import ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def bench():
    return benchmark_system(40)


@pytest.fixture(scope="session")
def bench_weights():
    return benchmark_weights()


@pytest.fixture(scope="session")
def bench_lqr(bench, bench_weights):
    """LQR solutions at m = 10, 15, 20 with p = q = 2m, solved once per session."""
    Q, R = bench_weights
    out = {}
    for m in (10, 15, 20):
        t0 = time.perf_counter()
        res = lqr_synthesize(bench, Q, R, m)
        out[m] = (res, time.perf_counter() - t0)
    return out
