from __future__ import annotations

import pytest

_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def _criterion(item):
    mark = item.get_closest_marker("criterion")
    return mark.args if mark else None


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    crit = _criterion(item)
    if crit is None:
        return
    number, title = crit
    failed = report.failed or (report.when == "setup" and report.skipped)
    if failed:
        _RESULTS[number] = ("FAIL", title)
    elif report.when == "call" and number not in _RESULTS:
        _RESULTS[number] = ("PASS", title)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status, title = _RESULTS[number]
        terminalreporter.write_line(f"{status} criterion {number:2d}: {title}")
