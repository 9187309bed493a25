import numpy as np
import pytest

from trissm.channel import REFERENCE_H_2X2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fig7_h():
    return REFERENCE_H_2X2.copy()


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion; all lines are echoed at the end of the run."""

    def _report(criterion: str, ok: bool, detail: str) -> bool:
        line = f"criterion {criterion:>3s}  {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: (int("".join(c for c in s.split()[1] if c.isdigit())), s)):
            terminalreporter.write_line(line)
