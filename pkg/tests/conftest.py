import numpy as np
import pytest

from gan_rebalance.dataset import Dataset
from gan_rebalance.rng import Rng


def make_imbalanced(n_major, n_minor, n_features=3, seed=0, shift=2.0):
    rng = Rng(seed)
    x = rng.normal((n_major + n_minor) * n_features).reshape(-1, n_features)
    x[n_major:] += shift
    y = np.r_[np.zeros(n_major), np.ones(n_minor)]
    return Dataset(x, y, [f"f{i}" for i in range(n_features)])


@pytest.fixture
def small_imbalanced():
    return make_imbalanced(90, 10)


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def record(number, title, ok, detail=""):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
