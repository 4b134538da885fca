"""Shared fixtures and the one-line-per-criterion acceptance report."""

import pytest

# criterion id -> (passed, summary); filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    def record(cid: int, passed: bool, summary: str) -> None:
        ACCEPTANCE[cid] = (passed, summary)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        ok, summary = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid:2d}: {'PASS' if ok else 'FAIL'}  {summary}")
