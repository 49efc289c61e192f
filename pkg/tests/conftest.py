"""Shared fixtures and the acceptance-criteria summary lines."""
from __future__ import annotations

import pytest

VERDICTS: dict[int, tuple[bool, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def record_verdict(n: int, ok: bool, detail: str) -> None:
    VERDICTS[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    n = mark.args[0]
    if rep.failed and (n not in VERDICTS or VERDICTS[n][0]):
        msg = str(call.excinfo.value).splitlines()[0] if call.excinfo else "failed"
        VERDICTS[n] = (False, f"error: {msg}")


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture
def verdict():
    def _verdict(n: int, ok: bool, detail: str) -> None:
        record_verdict(n, ok, detail)
        assert ok, f"criterion {n}: {detail}"

    return _verdict
