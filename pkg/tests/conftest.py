import numpy as np
import pytest

from pifeat.states import ImuStream, PoseState
from pifeat.lie import so3_exp

ACCEPTANCE_LINES = []


def random_stream(rng, n, dt=0.01, gyro_scale=1.0, accel_scale=3.0, t0=0.0):
    return ImuStream(t0 + np.arange(n) * dt,
                     rng.normal(0.0, gyro_scale, (n, 3)),
                     rng.normal(0.0, accel_scale, (n, 3)) + [0.0, 0.0, 9.8])


def random_state(rng, t=0.0):
    return PoseState(t, so3_exp(rng.normal(size=3)), rng.normal(0.0, 2.0, 3),
                     rng.normal(0.0, 10.0, 3))


def constant_stream(gyro, accel, n, dt, t0=0.0):
    return ImuStream(t0 + np.arange(n) * dt, np.tile(gyro, (n, 1)), np.tile(accel, (n, 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record_criterion():
    def record(number, name, passed, detail):
        status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number:>2}: {name} -- {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
