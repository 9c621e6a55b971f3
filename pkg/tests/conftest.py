import numpy as np
import pytest

from symgap.catalog import builtin_pairs

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(label: str, passed: bool, detail: str = "") -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {label}" + (f" :: {detail}" if detail else "")
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


BUILTIN_PAIRS = builtin_pairs()


@pytest.fixture(params=BUILTIN_PAIRS, ids=[p[0] for p in BUILTIN_PAIRS])
def builtin_pair(request):
    return request.param[1], request.param[2]
