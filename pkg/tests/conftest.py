import time

import pytest

_RESULTS: dict[int, str] = {}


class Criterion:
    """Times one acceptance criterion and records a PASS/FAIL line."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.details: list[str] = []
        self.ok = True

    def check(self, condition: bool, detail: str):
        self.details.append(detail)
        if not condition:
            self.ok = False
        return condition

    def within(self, seconds: float):
        elapsed = time.perf_counter() - self.start
        return self.check(elapsed < seconds, f"runtime {elapsed:.2f} s < {seconds:g} s")

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self.start
        ok = self.ok and exc_type is None
        line = (f"criterion {self.number:2d} {'PASS' if ok else 'FAIL'}  {self.title}"
                "  " + "; ".join(self.details))
        if exc_type is not None:
            line += f"; raised {exc_type.__name__}: {exc}"
        _RESULTS[self.number] = line
        print(line)
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_RESULTS):
            terminalreporter.write_line(_RESULTS[key])
