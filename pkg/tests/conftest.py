import itertools
from fractions import Fraction

import pytest
from hypothesis import settings

settings.register_profile("repeaterlab", deadline=None, max_examples=60)
settings.load_profile("repeaterlab")


def brute_structures(n):
    """Every admissible set of links, found by filtering all subsets of node pairs."""
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    for r in range(len(pairs) + 1):
        for sub in itertools.combinations(pairs, r):
            lefts = [i for i, _ in sub]
            rights = [j for _, j in sub]
            if len(set(lefts)) < len(lefts) or len(set(rights)) < len(rights):
                continue
            crossing = any(i < k < j < l for (i, j) in sub for (k, l) in sub)
            if not crossing:
                yield sub


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)


def sa_three_node_waiting(p, ps):
    """Hand-built chain for swap-asap on three nodes with cutoff 1, solved in exact arithmetic.

    States between counted steps: nothing, one link of age 0, one link of age 1.
    """
    p, ps = Fraction(p), Fraction(ps)
    q = 1 - p
    # W0 = 1 + (p^2 (1-ps) + q^2) W0 + 2 p q W1
    # W1 = 1 + p (1-ps) W0 + q W2
    # W2 = 1 + p W1 + q W0
    a = [[1 - p * p * (1 - ps) - q * q, -2 * p * q, 0],
         [-p * (1 - ps), 1, -q],
         [-q, -p, 1]]
    b = [1, 1, 1]
    # Gaussian elimination on Fractions
    for col in range(3):
        piv = next(r for r in range(col, 3) if a[r][col] != 0)
        a[col], a[piv], b[col], b[piv] = a[piv], a[col], b[piv], b[col]
        for r in range(3):
            if r != col and a[r][col] != 0:
                f = a[r][col] / a[col][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] -= f * b[col]
    return b[0] / a[0][0]


ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number, ok, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
