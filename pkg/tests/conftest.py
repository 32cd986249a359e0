import math

import numpy as np
import pytest

from gesthmm.geometry import Quat
from gesthmm.hmm import HmmPointParams


def rotation_matrix(q):
    """Independent quaternion -> rotation matrix conversion used as an oracle."""
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_quat(rng):
    v = rng.normal(size=4)
    return Quat.from_any(*v)


def random_stochastic(rng, rows, cols):
    m = rng.random((rows, cols)) + 1e-3
    return m / m.sum(axis=0)


def random_params(rng, M, N):
    return HmmPointParams(
        random_stochastic(rng, M, M), random_stochastic(rng, N, M), random_stochastic(rng, M, 1)[:, 0]
    )


def single_state_params():
    return HmmPointParams([[1.0]], [[0.7], [0.3]], [1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


QUARTER = math.pi / 2


# filled by the acceptance checks, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
