import pytest

from aggplan.multizeno import ZenoSpec, build_task

ZENO3_FRONT = [(8, 12), (12, 10), (16, 8), (20, 6), (24, 4)]


@pytest.fixture(scope="session")
def zeno3():
    return build_task(ZenoSpec(3))


@pytest.fixture(scope="session")
def zeno6():
    return build_task(ZenoSpec(6))


@pytest.fixture(scope="session")
def zeno3_space(zeno3):
    from aggplan.dae import GenomeSpace

    return GenomeSpace(zeno3)


# one summary line per acceptance criterion --------------------------------

_CRITERIA: dict[int, list] = {}
_FINDINGS: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    n, title = crit
    _CRITERIA.setdefault(n, [title, True])
    if report.outcome != "passed":
        _CRITERIA[n][1] = False
    for key, value in report.user_properties:
        if key == "finding":
            _FINDINGS.append(f"criterion {n}: {value}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")
    for f in _FINDINGS:
        terminalreporter.write_line(f"finding   {f}")


@pytest.fixture
def criterion(request, record_property):
    marker = request.node.get_closest_marker("criterion")
    record_property("criterion", marker.args)
    return marker.args
