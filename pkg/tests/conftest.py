import numpy as np
import pytest

from crosskit.model import REFERENCE_DEVICE, DeviceParams


@pytest.fixture
def ref_device():
    return REFERENCE_DEVICE


@pytest.fixture
def uncoupled():
    return DeviceParams(omega1=4271.0, omega2=4349.0, anh1=-347.0, anh2=-360.0, coupling_j=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" and not report.failed:
        return
    number, title = mark.args
    prev = _CRITERIA.get(number, (title, True, ""))
    ok = prev[1] and not report.failed
    detail = prev[2]
    if report.failed and call.excinfo is not None:
        detail = call.excinfo.exconly().splitlines()[0][:160]
    _CRITERIA[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}"
        if not ok and detail:
            line += f"  [{detail}]"
        tr.write_line(line)
