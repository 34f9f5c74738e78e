from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import HALF, same_step, sequences, step_functions
from radinterp.core import (
    UNIT,
    ConcaveFn,
    StepFunction,
    dyadic_average,
    head_integral,
    head_integrals,
    is_nonincreasing,
    phi_gaussian,
    power_fn,
    rearrange_sequence,
    rearrange_step,
    seq_dilation,
    sequence_as_step,
    sup_head_ratio,
    unit_average,
)
from radinterp.norms import seq_l1log_norm

F = Fraction


# --- sequences ------------------------------------------------------------------


@pytest.mark.parametrize(
    "a, expected",
    [((3, -1, 2), (3, 2, 1)), ((), ()), ((1, 1, 1), (1, 1, 1))],
)
def test_rearrange_sequence_examples(a, expected):
    assert list(rearrange_sequence(a)) == list(expected)


def test_rearrange_sequence_rejects_non_finite():
    with pytest.raises(ValueError):
        rearrange_sequence([1.0, np.inf])


def test_seq_dilation_examples():
    assert list(seq_dilation([1, 2], 2)) == [1, 1, 2, 2]
    a = np.array([0.5, -2.0, 3.0])
    assert np.array_equal(seq_dilation(a, 1), a)
    e1 = np.array([1.0])
    assert seq_l1log_norm(seq_dilation(e1, 4)) / seq_l1log_norm(e1) == pytest.approx(4 / 3, rel=1e-15)


@pytest.mark.parametrize("n", [0, -1, 1.5])
def test_seq_dilation_rejects_bad_factor(n):
    with pytest.raises(ValueError):
        seq_dilation([1, 2], n)


@given(sequences(max_size=10), st.integers(1, 5))
def test_seq_dilation_repeats_in_order(a, n):
    out = seq_dilation(a, n)
    assert len(out) == n * len(a)
    assert np.array_equal(out.reshape(len(a), n) if len(a) else out, np.repeat(a, n).reshape(len(a), n) if len(a) else out)


# --- step functions ---------------------------------------------------------------


def test_canonical_form_merges_equal_neighbours():
    x = StepFunction([0.25, 0.5, 1.0], [2.0, 2.0, 1.0])
    assert list(x.breaks) == [0.5, 1.0]
    assert list(x.values) == [2.0, 1.0]


def test_canonical_form_trims_half_line_zeros():
    x = StepFunction([1.0, 2.0, 3.0], [1.0, 0.0, 0.0], HALF)
    assert list(x.breaks) == [1.0]


@pytest.mark.parametrize(
    "breaks, values, domain",
    [([0.5, 0.5, 1.0], [1, 2, 3], UNIT), ([0.5], [1.0], UNIT), ([1.0], [np.nan], UNIT), ([1.0, 2.0], [1.0], HALF)],
)
def test_step_function_rejects_invalid(breaks, values, domain):
    with pytest.raises(ValueError):
        StepFunction(np.array(breaks, float), np.array(values, float), domain)


def test_no_fuzzy_merge_of_float_values():
    x = StepFunction(np.array([0.5, 1.0]), np.array([1.0, 1.0 + 1e-15]))
    assert len(x) == 2


def test_step_function_evaluates_left_continuous():
    x = StepFunction([F(1, 2), 1], [3, 1])
    assert x(0.5) == 3.0 and x(0.50001) == 1.0 and x(1.0) == 1.0


@pytest.mark.parametrize(
    "x, expected",
    [
        (StepFunction([0.5, 1.0], [1.0, 3.0]), StepFunction([0.5, 1.0], [3.0, 1.0])),
        (StepFunction([0.25, 1.0], [-2.0, 2.0]), StepFunction.constant(2.0)),
        (StepFunction.constant(-1.5), StepFunction.constant(1.5)),
    ],
)
def test_rearrange_step_examples(x, expected):
    assert same_step(rearrange_step(x), expected)


@given(step_functions(exact=True))
def test_rearrange_step_preserves_integral_exactly(x):
    xs = rearrange_step(x)
    assert xs.integral() == x.integral()
    assert is_nonincreasing(xs)


@given(step_functions(domain=HALF))
def test_rearrange_step_equimeasurable(x):
    xs = rearrange_step(x)
    levels = np.unique(np.abs(x.values))
    for lv in levels[levels > 0]:  # the zero level has infinite measure on the half-line
        m_x = float(np.sum(x.widths[np.abs(x.values) == lv]))
        m_s = float(np.sum(xs.widths[xs.values == lv]))
        assert m_s == pytest.approx(m_x, rel=1e-12, abs=1e-12)


@given(step_functions(exact=True))
def test_rearrange_is_idempotent(x):
    once = rearrange_step(x)
    assert same_step(rearrange_step(once), once)


# --- head integrals -------------------------------------------------------------


def test_head_integral_examples():
    assert head_integral(StepFunction.indicator(F(1, 2)), F(3, 4)) == F(1, 2)
    assert head_integral(StepFunction.constant(F(5, 2)), F(1, 3)) == F(5, 6)
    assert head_integral(StepFunction([F(1, 2), 1], [2, 0]), F(1, 4)) == F(1, 2)
    assert head_integral(StepFunction.constant(3.0), 0.3) == pytest.approx(0.9, rel=1e-15)


@pytest.mark.parametrize("u", [0, -0.5])
def test_head_integral_rejects_nonpositive(u):
    with pytest.raises(ValueError):
        head_integral(StepFunction.constant(1.0), u)


@given(step_functions())
def test_head_integral_concave_and_nondecreasing(x):
    xs = rearrange_step(x)
    mids = (xs.edges[1:] + xs.edges[:-1]) / 2
    u = np.sort(np.concatenate([xs.breaks, mids]))
    h = head_integrals(xs, u)
    assert np.all(np.diff(h) >= -1e-12)
    slopes = np.diff(h) / np.diff(u)
    assert np.all(np.diff(slopes) <= 1e-9 * (1 + np.abs(slopes[:-1])))


# --- dyadic averaging -------------------------------------------------------------


def test_dyadic_average_of_constant():
    y = StepFunction.constant(F(7, 3))
    assert same_step(dyadic_average(y), y)


def test_dyadic_average_of_half_indicator():
    u1 = dyadic_average(StepFunction.indicator(F(1, 2)))
    assert same_step(u1, StepFunction.constant(1))


def test_dyadic_average_depth_follows_first_piece():
    y = StepFunction([F(1, 2**30), 1], [5, 1])
    u1 = dyadic_average(y)
    # the head (0, 2^-30] and the next piece both average 5
    assert u1.breaks[0] == F(1, 2**29)
    assert u1.values[0] == 5
    assert u1(2.0**-28) == 3.0  # 2^29 (5 + 1) 2^-30


@given(step_functions(exact=True))
def test_dyadic_average_dominates_nonincreasing(y):
    ys = rearrange_step(y)
    u1 = dyadic_average(ys)
    pts = list(ys.breaks) + [F(1, 2**k) for k in range(25)]
    for p in pts:
        assert u1(float(p)) >= ys(float(p)) - 1e-12


# --- unit averaging ---------------------------------------------------------------


def test_unit_average_examples():
    assert list(unit_average(StepFunction.indicator(1.5, HALF))) == [1.0, 0.5]
    assert len(unit_average(StepFunction(np.zeros(0), np.zeros(0), HALF))) == 0
    assert list(unit_average(StepFunction([2], [3], HALF))) == [3, 3]


@given(step_functions(domain=HALF, exact=True))
def test_unit_average_preserves_integer_interval_integrals(x):
    a = unit_average(x)
    back = sequence_as_step(a)
    for k in range(1, len(a) + 1):
        lhs = head_integral(x, F(k)) - (head_integral(x, F(k - 1)) if k > 1 else 0)
        rhs = head_integral(back, F(k)) - (head_integral(back, F(k - 1)) if k > 1 else 0)
        assert lhs == rhs


# --- parameter functions ----------------------------------------------------------


def test_concave_fn_checks():
    assert power_fn(0.5).violations() == []
    assert phi_gaussian().violations() == []
    convex = ConcaveFn(lambda t: t**2)
    assert "midpoint concavity fails" in convex.violations()
    decreasing = ConcaveFn(lambda t: 1 - t, claims_concave=False)
    assert "not nondecreasing" in decreasing.violations()


def test_sup_head_ratio_identity_denominator():
    x = StepFunction([0.5, 1.0], [2.0, 0.0])
    val, arg = sup_head_ratio(x, lambda u: u)
    assert val == pytest.approx(2.0, rel=1e-12)
    assert arg <= 0.5
