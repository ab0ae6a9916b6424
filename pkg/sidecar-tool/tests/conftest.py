"""Suite-wide hooks: the acceptance marker and its PASS/FAIL echo."""

import sys

import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): a named acceptance criterion; "
        "its outcome is echoed as one PASS/FAIL line"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.args[0] if marker.args else item.name
    status = "PASS" if report.passed else "FAIL"
    # bypass capture so the gate summary always reaches the terminal
    print(f"acceptance: {status}  {name}", file=sys.__stderr__)
