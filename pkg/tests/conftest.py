from __future__ import annotations

import pytest

# criterion id -> list of (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}
# informational lines that do not gate anything
NOTES: list[str] = []


@pytest.fixture
def record():
    def _record(criterion: int, passed: bool, detail: str) -> None:
        ACCEPTANCE.setdefault(criterion, []).append((bool(passed), detail))

    return _record


@pytest.fixture
def note():
    return NOTES.append


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        tr.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    for line in NOTES:
        tr.write_line(f"note: {line}")
