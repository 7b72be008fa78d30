import math

import numpy as np
import pytest

from cgdms import (Interval, Perturbed1D, Similarity, StateSpace, assemble, build_graph)
from cgdms.fixtures import fixture_system

LOG2_LOG3 = math.log(2) / math.log(3)
GOLDEN = (1 + math.sqrt(5)) / 2

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE_RESULTS = {}


def unit_space(v=0):
    return StateSpace(v, Interval(0.0, 1.0))


def similarity_full_shift(ratios, require_separation=False):
    """Full-shift similarity system on [0, 1] with evenly spaced images."""
    p = len(ratios)
    total = sum(ratios)
    if p == 1:
        offsets = [0.0]
    else:
        gap = (1.0 - total) / (p - 1) if total <= 1 else 0.0
        offsets = [sum(ratios[:k]) + k * gap if total <= 1 else (k / (p - 1)) * (1 - r)
                   for k, r in enumerate(ratios)]
    maps = [Similarity.on_line(r, min(o, 1 - r)) for r, o in zip(ratios, offsets)]
    return assemble(build_graph(1, [(0, 0)] * p), [unit_space()], maps,
                    require_separation=require_separation)


def perturbed_ternary_direct(eps=0.05):
    dom = Interval(0.0, 1.0)
    maps = [Perturbed1D(1 / 3, 0.0, eps, dom), Perturbed1D(1 / 3, 2 / 3, eps, dom)]
    return assemble(build_graph(1, [(0, 0), (0, 0)]), [unit_space()], maps)


@pytest.fixture(scope="session")
def ternary():
    return fixture_system("ternary")


@pytest.fixture(scope="session")
def perturbed():
    return fixture_system("perturbed_ternary")


@pytest.fixture(scope="session")
def golden():
    return fixture_system("golden_mean")


@pytest.fixture(scope="session")
def conjugate():
    return fixture_system("ternary_conjugate")


@pytest.fixture(scope="session")
def half():
    return fixture_system("half_ratio")


@pytest.fixture(scope="session")
def half_quarter():
    return fixture_system("ratios_half_quarter")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def rng(seed):
    return np.random.default_rng(seed)
