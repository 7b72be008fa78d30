import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgdms import (BudgetExceeded, InvalidDepth, InvalidParameter, MissingAssumption,
                   partition_pressure, pressure_curve, scaling_pressure)
from cgdms.pressure import BUDGET_ENV, word_weights
from cgdms.symbolic import count_words

from conftest import GOLDEN, LOG2_LOG3, similarity_full_shift

T_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


def fib(k):
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a


# examples -----------------------------------------------------------------------

@pytest.mark.parametrize("t", [0.0, 0.5, 1.0, LOG2_LOG3])
def test_ternary_closed_form(ternary, t):
    expect = math.log(2) - t * math.log(3)
    for fn in (partition_pressure, scaling_pressure):
        est = fn(ternary, t, n=8)
        assert est.value == pytest.approx(expect, abs=1e-13)
        assert est.lower <= est.value <= est.upper


def test_ternary_root_is_zero(ternary):
    assert abs(partition_pressure(ternary, LOG2_LOG3, n=10).value) < 1e-13


@pytest.mark.parametrize("n", [4, 7, 12])
def test_golden_counts_at_t_zero(golden, n):
    # golden-mean words of length n are counted by F_{n+2}
    assert count_words(golden.graph, n) == fib(n + 2)
    est = partition_pressure(golden, 0.0, n=n)
    assert est.value == pytest.approx(math.log(fib(n + 2)) / n, rel=1e-14)
    assert est.lower <= math.log(GOLDEN) <= est.upper


@pytest.mark.parametrize("t", [0.3, 1.0])
def test_golden_uniform_ratios(golden, t):
    n = 10
    est = scaling_pressure(golden, t, n=n)
    assert est.value == pytest.approx(math.log(fib(n + 2)) / n - t * math.log(2), abs=1e-13)


def test_similarity_methods_byte_identical(half_quarter, golden):
    for sys_ in (half_quarter, golden):
        for t in T_GRID:
            a = partition_pressure(sys_, t, n=9)
            b = scaling_pressure(sys_, t, n=9)
            assert a.value == b.value


def test_perturbed_cross_method_at_half(perturbed):
    a = partition_pressure(perturbed, 0.5, n=10)
    b = scaling_pressure(perturbed, 0.5, n=10)
    assert abs(a.value - b.value) <= a.envelope + b.envelope
    assert max(a.lower, b.lower) <= min(a.upper, b.upper)


def test_perturbed_bounds_straddle_root_region(perturbed):
    # P(0) = log 2 for any system on the full 2-shift
    for fn in (partition_pressure, scaling_pressure):
        est = fn(perturbed, 0.0, n=8)
        assert est.value == pytest.approx(math.log(2), abs=1e-14)


def test_errors(ternary, perturbed):
    with pytest.raises(InvalidDepth):
        partition_pressure(ternary, 0.5, n=0)
    with pytest.raises(InvalidParameter):
        partition_pressure(ternary, -0.5, n=3)
    with pytest.raises(InvalidParameter):
        partition_pressure(perturbed, 0.5, n=3, strategy="matrix")
    with pytest.raises(InvalidParameter):
        word_weights(ternary, 3, method="bogus")


def test_not_primitive_rejected():
    from cgdms import Affine1D, Interval, StateSpace, build_graph, make_system
    g = build_graph(2, [(0, 1), (1, 0)])
    spaces = [StateSpace(0, Interval(0.0, 1.0)), StateSpace(1, Interval(0.0, 1.0))]
    sys_ = make_system(g, spaces, [Affine1D(0.5, 0.0), Affine1D(0.5, 0.5)])
    with pytest.raises(MissingAssumption):
        partition_pressure(sys_, 0.5, n=4)


def test_budget_from_environment(ternary, monkeypatch):
    monkeypatch.setenv(BUDGET_ENV, "100")
    with pytest.raises(BudgetExceeded):
        partition_pressure(ternary, 0.5, n=10)
    assert partition_pressure(ternary, 0.5, n=6).depth == 6
    # an explicit budget wins over the environment
    assert partition_pressure(ternary, 0.5, n=10, budget=2000).depth == 10


def test_matrix_strategy_agrees_with_enumeration(ternary, golden, half_quarter):
    for sys_ in (ternary, golden, half_quarter):
        for n in (1, 2, 5, 11):
            for t in (0.0, 0.4, 1.0):
                a = partition_pressure(sys_, t, n=n)
                b = partition_pressure(sys_, t, n=n, strategy="matrix")
                assert b.value == pytest.approx(a.value, abs=1e-13)


def test_matrix_strategy_reaches_deep_depths(golden):
    est = partition_pressure(golden, 0.0, n=2 ** 24, strategy="matrix")
    assert est.value == pytest.approx(math.log(GOLDEN), abs=1e-7)


def test_workers_are_deterministic(perturbed):
    a = word_weights(perturbed, 8, "partition", workers=1)
    b = word_weights(perturbed, 8, "partition", workers=2)
    assert a.weights.tobytes() == b.weights.tobytes()
    a = word_weights(perturbed, 6, "scaling", workers=1)
    b = word_weights(perturbed, 6, "scaling", workers=2)
    assert a.weights.tobytes() == b.weights.tobytes()


def test_estimates_pickle(ternary):
    est = partition_pressure(ternary, 0.5, n=4)
    assert pickle.loads(pickle.dumps(est)) == est


# curves and invariants --------------------------------------------------------------

@pytest.mark.parametrize("name", ["ternary", "perturbed", "golden", "conjugate"])
@pytest.mark.parametrize("method", ["partition", "scaling"])
def test_curve_monotone_and_convex(name, method, request):
    sys_ = request.getfixturevalue(name)
    curve = pressure_curve(sys_, T_GRID, n=8, method=method)
    assert curve.monotone and curve.convex
    assert curve.theta == 0.0
    assert len(curve.estimates) == len(T_GRID)


def test_curve_rejects_unsorted_grid(ternary):
    with pytest.raises(InvalidParameter):
        pressure_curve(ternary, [0.5, 0.0])


@pytest.mark.parametrize("name", ["perturbed", "conjugate", "golden", "ternary"])
def test_method_agreement(name, request):
    sys_ = request.getfixturevalue(name)
    for n in (6, 8, 10):
        pc = pressure_curve(sys_, T_GRID, n=n, method="partition")
        sc = pressure_curve(sys_, T_GRID, n=n, method="scaling")
        for a, b in zip(pc.estimates, sc.estimates):
            assert abs(a.value - b.value) <= a.envelope + b.envelope


@pytest.mark.parametrize("method", ["partition", "scaling"])
def test_depth_sequence_is_cauchy_within_envelopes(perturbed, method):
    curves = [pressure_curve(perturbed, T_GRID, n=n, method=method) for n in (6, 8, 10)]
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            for a, b in zip(curves[i].estimates, curves[j].estimates):
                assert abs(a.value - b.value) <= a.envelope + b.envelope


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([0.1, 0.2, 0.25, 1 / 3]), min_size=1, max_size=3),
       st.floats(0, 2), st.integers(1, 8))
def test_similarity_closed_form_property(ratios, t, n):
    sys_ = similarity_full_shift(ratios)
    expect = math.log(math.fsum(r ** t for r in ratios))
    assert partition_pressure(sys_, t, n=n).value == pytest.approx(expect, abs=1e-12)
