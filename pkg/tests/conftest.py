import numpy as np
import pytest

from voiceind import VoiceprintDatabase

_criteria = {}
_notes = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = getattr(report, "criterion", None)
    if crit is not None:
        ok = report.passed
        prev = _criteria.get(crit)
        _criteria[crit] = (prev[0] and ok if prev else ok, report.duration + (prev[1] if prev else 0.0))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_criteria):
        ok, secs = _criteria[crit]
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'} ({secs:.1f} s)")
    if _notes:
        terminalreporter.section("acceptance measurements")
        for crit, line in _notes:
            terminalreporter.write_line(f"[{crit}] {line}")


@pytest.fixture
def note(request):
    """Record a measured value for the acceptance summary."""
    marker = request.node.get_closest_marker("acceptance")
    crit = marker.args[0] if marker else "-"
    return lambda line: _notes.append((crit, line))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_db(rng, n, dim, prefix="r"):
    return VoiceprintDatabase.from_array([f"{prefix}{i}" for i in range(n)], rng.standard_normal((n, dim)))


def basis_db(n):
    return VoiceprintDatabase.from_array([f"e{i}" for i in range(n)], np.eye(n))
