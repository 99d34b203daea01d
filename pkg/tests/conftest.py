import pytest

from nsga_ojzj.genome import BitString, RandomSource


@pytest.fixture
def rng():
    return RandomSource(12345)


def bits(text: str) -> BitString:
    return BitString.from_str(text)


def with_ones(n: int, ones: int) -> BitString:
    return BitString.from_str("1" * ones + "0" * (n - ones))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
