import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: trains a small model")


# criterion code -> list of (part, passed, detail), filled by the acceptance suite
ACCEPTANCE: dict[str, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def verdict():
    def record(code: str, part: str, passed: bool, detail: str) -> bool:
        ACCEPTANCE.setdefault(code, []).append((part, bool(passed), detail))
        return bool(passed)

    return record


def _order(code: str) -> int:
    return int(code[1:])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for code in sorted(ACCEPTANCE, key=_order):
        parts = ACCEPTANCE[code]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{part}: {text}" + ("" if ok else " [not met]") for part, ok, text in parts)
        terminalreporter.write_line(f"{code} {status} | {detail}")
