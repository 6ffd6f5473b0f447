import time

import numpy as np
import pytest

ACCEPTANCE: dict[int, tuple[bool, float, str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


class _Recorder:
    def __init__(self, number: int):
        self.number = number
        self.start = time.perf_counter()

    def __call__(self, ok: bool, detail: str = "") -> bool:
        elapsed = time.perf_counter() - self.start
        ACCEPTANCE[self.number] = (bool(ok), elapsed, detail)
        print(f"criterion {self.number}: {'PASS' if ok else 'FAIL'} ({elapsed:.2f} s) {detail}")
        return bool(ok)


@pytest.fixture
def criterion(request):
    number = request.node.get_closest_marker("criterion").args[0]
    return _Recorder(number)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, elapsed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {elapsed:7.2f} s  {detail}")
