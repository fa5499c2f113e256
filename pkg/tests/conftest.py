import pytest
from hypothesis import settings

from fractal_tops.catalog import builtin
from fractal_tops.verify import Session

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_SESSIONS: dict = {}


def session_for(name: str, order=None) -> Session:
    """One Session (reference raster + cached fields) per system for the whole run."""
    key = (name, str(order))
    if key not in _SESSIONS:
        _SESSIONS[key] = Session(builtin(name), order=order)
    return _SESSIONS[key]


@pytest.fixture(scope="session")
def sessions():
    return session_for


# acceptance criteria: number -> (ok, detail), filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(n: int, ok: bool, detail: str) -> str:
    ACCEPTANCE[n] = (ok, detail)
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
