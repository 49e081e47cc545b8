import numpy as np
import pytest
from hypothesis import settings

from slipfeedback import DetectorConfig, ForceTrace
from slipfeedback.harness import bench_config

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def make_trace(f_n, f_t, fs=1000.0, t0=0.0):
    f_n = np.asarray(f_n, dtype=float)
    f_t = np.broadcast_to(np.asarray(f_t, dtype=float), f_n.shape)
    t = t0 + np.arange(f_n.size) / fs
    return ForceTrace(t, f_n, f_t, fs)


@pytest.fixture
def bench():
    return bench_config()


@pytest.fixture
def default_cfg():
    return DetectorConfig()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
