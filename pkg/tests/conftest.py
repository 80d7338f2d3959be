import numpy as np
import pytest

from truthdisc.core import Claim, index_dataset

# Four sources, four items: the worked example used throughout.
AFFILIATION_ROWS = [
    ("S1", "d1", "MIT"), ("S2", "d1", "UWisc"), ("S4", "d1", "MIT"),
    ("S1", "d2", "MSR"), ("S3", "d2", "AT&T"),
    ("S1", "d3", "UCI"), ("S3", "d3", "BEA"), ("S4", "d3", "BEA"),
    ("S1", "d4", "Google"), ("S3", "d4", "UWisc"), ("S4", "d4", "MSR"),
]
AFFILIATION_TRUTH = {"d1": {"MIT"}, "d2": {"MSR"}, "d3": {"UCI"}, "d4": {"Google"}}


def claims_from_rows(rows):
    return [Claim(f"c{i + 1}", s, d, v) for i, (s, d, v) in enumerate(rows)]


@pytest.fixture
def affiliation():
    return index_dataset(claims_from_rows(AFFILIATION_ROWS))


@pytest.fixture
def affiliation_truth():
    return {d: {v.lower() for v in vals} for d, vals in AFFILIATION_TRUTH.items()}


def random_rows(rng, n_sources=5, n_items=10, n_values=3, p_claim=0.7):
    """Small random instance: each source claims one value on a random subset of items."""
    rows = []
    for d in range(n_items):
        for s in range(n_sources):
            if rng.random() < p_claim:
                rows.append((f"s{s}", f"d{d}", f"v{rng.integers(n_values)}"))
    if not rows:
        rows.append(("s0", "d0", "v0"))
    return rows


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance summary: one line per criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
