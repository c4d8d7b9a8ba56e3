import numpy as np
import pytest

from hierlab.dynamics import Nonlinearity, VectorField
from hierlab.scenarios import default_measure
from hierlab.space import ModelSpace


@pytest.fixture(scope="session")
def space():
    return ModelSpace.truncated(2)


@pytest.fixture(scope="session")
def cubic():
    return Nonlinearity.cubic(1.0)


@pytest.fixture(scope="session")
def field(space, cubic):
    return VectorField.nls(space, cubic)


@pytest.fixture(scope="session")
def mu0(space):
    return default_measure(space)


def unit(v):
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


def random_ball_point(rng, m, radius=1.0):
    z = rng.normal(size=m) + 1j * rng.normal(size=m)
    return radius * rng.uniform(0, 1) * z / np.linalg.norm(z)


# one PASS/FAIL line per acceptance criterion in the terminal summary
_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::test_criterion_")[1]
        detail = dict(report.user_properties).get("detail", "")
        _ACCEPTANCE[name] = ("PASS" if report.outcome == "passed" else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    def order(s):
        num = s.split("_")[0]
        return int(num.rstrip("ab")), num
    for name in sorted(_ACCEPTANCE, key=order):
        verdict, detail = _ACCEPTANCE[name]
        label = name.replace("_", " ", 1)
        terminalreporter.write_line(f"criterion {label}: {verdict}  {detail}")
