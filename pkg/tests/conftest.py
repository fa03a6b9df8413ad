import numpy as np
import pytest

from wickflow.chaos import ChaosExpansion
from wickflow.multiindex import MultiIndex, Truncation
from wickflow.operators import LinearOp, WickFamily


def random_scalar(rng, t: Truncation, density: float = 0.7) -> ChaosExpansion:
    return ChaosExpansion({a: rng.normal() for a in t if rng.random() < density})


def random_vector(rng, t: Truncation, d: int, density: float = 0.7) -> ChaosExpansion:
    return ChaosExpansion({a: rng.normal(size=d) for a in t if rng.random() < density}, kind="vector", dim=d)


def random_wick(rng, t: Truncation, d: int, density: float = 0.5, scale: float = 1.0) -> WickFamily:
    ops = {a: LinearOp(scale * rng.normal(size=(d, d))) for a in t if rng.random() < density}
    return WickFamily(ops, dim=d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


E1, E2, E3 = MultiIndex.unit(1), MultiIndex.unit(2), MultiIndex.unit(3)
ZERO = MultiIndex.zero()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
