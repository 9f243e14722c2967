import numpy as np
import pytest

from quadvs.model import KinematicModel


@pytest.fixture(scope="session")
def model():
    return KinematicModel()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(model, rng, with_velocity=True, tilt=0.3):
    """Random robot state with moderate attitude and joint angles."""
    from quadvs.kinematics import RobotState

    q = np.zeros(18)
    for leg in range(4):
        q[3 * leg : 3 * leg + 3] = np.asarray(model.nominal_leg_angles) + rng.uniform(-0.2, 0.2, 3)
    q[12:] = rng.uniform(-1.0, 1.0, 6)
    s = RobotState(
        p_B=rng.normal(size=3),
        euler=np.array([rng.uniform(-np.pi, np.pi), *rng.uniform(-tilt, tilt, 2)]),
        q_j=q,
    )
    if with_velocity:
        s.v_B = rng.normal(size=3)
        s.omega_B = rng.normal(size=3)
        s.qd_j = rng.normal(size=18)
    return s


# ------------------------------------------------------------------ acceptance report

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "details": []})
    if rep.failed:
        entry["ok"] = False
    if rep.when == "call":
        entry["details"] += [str(v) for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        line = f"criterion {n:2d} {'PASS' if e['ok'] else 'FAIL'}  {e['title']}"
        if e["details"]:
            line += "  [" + "; ".join(e["details"]) + "]"
        terminalreporter.write_line(line)
