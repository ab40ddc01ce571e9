import math

import numpy as np
import pytest
from hypothesis import strategies as st

from bodyschema import Pose, Rotation, load_body_file

DEG90 = math.pi / 2


@pytest.fixture(scope="session")
def arm():
    return load_body_file("planar_arm")


@pytest.fixture(scope="session")
def hand():
    return load_body_file("hand")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_rotation(rng):
    q = rng.normal(size=4)
    return Rotation(*q)


def random_pose(rng, scale=500.0):
    return Pose(random_rotation(rng), rng.uniform(-scale, scale, size=3))


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
quats = st.tuples(finite, finite, finite, finite).filter(
    lambda q: math.sqrt(sum(c * c for c in q)) > 1e-3)
poses = st.builds(lambda q, t: Pose(Rotation(*q), t), quats, st.tuples(finite, finite, finite))


# -- acceptance summary -------------------------------------------------------

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    ok = rep.passed and _CRITERIA.get(number, (True,))[0]
    _CRITERIA[number] = (ok, title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, title = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}  {'PASS' if ok else 'FAIL'}  {title}")
