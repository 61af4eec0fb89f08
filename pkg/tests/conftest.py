"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

import pytest

_LINES = []


class Criterion:
    def __init__(self):
        self.number = None
        self.title = ""
        self.details = []

    def __call__(self, number, title):
        self.number, self.title = number, title

    def note(self, text):
        self.details.append(text)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item._call_passed = rep.passed


@pytest.fixture
def criterion(request):
    c = Criterion()
    yield c
    if c.number is None:
        return
    status = "PASS" if getattr(request.node, "_call_passed", False) else "FAIL"
    detail = "; ".join(c.details)
    line = f"criterion {c.number:2d} [{status}] {c.title}" + (f" -- {detail}" if detail else "")
    _LINES.append((c.number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_LINES):
        terminalreporter.write_line(line)
