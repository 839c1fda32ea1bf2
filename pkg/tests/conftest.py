import time
from contextlib import contextmanager

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

# (label, passed, seconds, detail) for every acceptance criterion that ran
CRITERIA: list[tuple[str, bool, float, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion; the summary prints a line per record."""

    @contextmanager
    def record(label: str, detail: str = ""):
        notes: list[str] = []
        t = time.perf_counter()
        try:
            yield notes
        except BaseException as e:
            msg = str(e).splitlines()[0] if str(e) else type(e).__name__
            CRITERIA.append((label, False, time.perf_counter() - t, "; ".join([detail, *notes, msg])))
            raise
        CRITERIA.append((label, True, time.perf_counter() - t, "; ".join([detail, *notes])))

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, dt, detail in CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {label:6} {dt:8.1f}s  {detail}")
