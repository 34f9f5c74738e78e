import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import sequences, step_functions
from radinterp.core import HALF_LINE, UNIT, ConcaveFn, StepFunction, identity_fn, phi_gaussian, power_fn, rearrange_step
from radinterp.kfunc import (
    KCurve,
    endpoint_norms,
    engine,
    holmstedt_head,
    k_l1_l2_fun,
    k_l1_l2_seq,
    k_l1_linf_fun,
    k_linf_G,
    k_linf_lq,
    k_marcinkiewicz_pair,
    k_oracle,
    kcurve,
)
from radinterp.norms import marcinkiewicz_norm, seq_lp_norm
from radinterp.rademacher import holmstedt_phi

T_GRID = np.geomspace(2.0**-4, 2.0**6, 64)
half = StepFunction.indicator(0.5)


def soft_threshold_scan(a, t, points=10_001):
    """Grid oracle: min over lam in [0, max|a|] of the soft-threshold split."""
    a = np.abs(np.asarray(a, float))
    scale = a.max()
    a = a / scale
    lam = np.linspace(0.0, 1.0, points)[:, None]
    return scale * float(np.min(np.sum(np.maximum(a - lam, 0), axis=1) + t * np.sqrt(np.sum(np.minimum(a, lam) ** 2, axis=1))))


def linf_G_scan(x, t, points=100_000):
    """Grid oracle for the (L_inf, G) sup over u in (0, 1]."""
    u = np.linspace(1.0 / points, 1.0, points)
    xs = rearrange_step(x).to_float()
    from radinterp.core import head_integrals

    avg = head_integrals(xs, u) / u
    return float(np.max(avg * np.minimum(1.0, t / np.sqrt(np.log2(2.0 / u)))))


# --- k_l1_l2_seq -------------------------------------------------------------


@pytest.mark.parametrize("c", [0.5, 3.0, -2.0])
@pytest.mark.parametrize("t", [0.1, 1.0, 7.0])
def test_l1_l2_single_atom(c, t):
    assert k_l1_l2_seq([c, 0, 0], t) == pytest.approx(abs(c) * min(1, t), rel=1e-14)


def test_l1_l2_examples_against_grid():
    assert soft_threshold_scan([1, 1], 1.0) == pytest.approx(math.sqrt(2), rel=1e-6)
    assert k_l1_l2_seq([1, 1], 1.0) == pytest.approx(math.sqrt(2), rel=1e-12)
    assert soft_threshold_scan([1, 1], 2.0) == pytest.approx(2.0, rel=1e-9)
    assert k_l1_l2_seq([1, 1], 2.0) == pytest.approx(2.0, rel=1e-12)


def test_l1_l2_vectorized_matches_scalar():
    a = [3, -1, 0.5, 2]
    t = np.array([0.2, 1.0, 1.7, 3.0])
    vec = k_l1_l2_seq(a, t)
    assert vec.shape == t.shape
    assert np.allclose(vec, [k_l1_l2_seq(a, float(s)) for s in t], rtol=1e-14)


@given(sequences(min_size=1, max_size=8, nonzero=True), st.floats(2.0**-4, 2.0**4))
def test_l1_l2_between_grid_oracle_and_endpoints(a, t):
    k = k_l1_l2_seq(a, t)
    assert k <= soft_threshold_scan(a, t, 2001) * (1 + 1e-12)
    assert k <= min(seq_lp_norm(a, 1), t * seq_lp_norm(a, 2)) * (1 + 1e-12)


@given(sequences(min_size=1, max_size=6, nonzero=True), st.floats(2.0**-4, 2.0**4))
@settings(max_examples=25)
def test_l1_l2_matches_oracle(a, t):
    assert k_l1_l2_seq(a, t) == pytest.approx(k_oracle(a, t, "l1_l2"), rel=1e-3)


@given(sequences(min_size=1, max_size=8, nonzero=True), st.floats(0.05, 20))
def test_holmstedt_sandwich(a, t):
    k = k_l1_l2_seq(a, t)
    h = holmstedt_phi(a, t)
    assert h >= k * (1 - 1e-9)
    assert h <= 8 * k


def test_holmstedt_head_uses_floor():
    assert holmstedt_head(math.sqrt(3)) == 3
    assert holmstedt_head(2.0) == 4
    assert holmstedt_head(2.2) == 4
    assert holmstedt_head(0.5) == 0


# --- k_l1_linf_fun -----------------------------------------------------------


def test_l1_linf_examples():
    assert k_l1_linf_fun(half, 0.75) == pytest.approx(0.5)
    assert k_l1_linf_fun(StepFunction.constant(2.0), 0.3) == pytest.approx(0.6)
    x = StepFunction([1.0, 3.0], [2.0, -1.0], HALF_LINE)
    assert k_l1_linf_fun(x, 1e6) == pytest.approx(4.0)


@given(step_functions(nonzero=True), st.floats(0.01, 5))
@settings(max_examples=15)
def test_l1_linf_matches_oracle(x, u):
    assert k_l1_linf_fun(x, u) == pytest.approx(k_oracle(x, u, "l1_linf"), rel=1e-3, abs=1e-12)


# --- k_linf_G and the Marcinkiewicz pair -------------------------------------


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 3.0])
def test_linf_G_constant(t):
    assert k_linf_G(StepFunction.constant(2.5), t) == pytest.approx(2.5 * min(1, t), rel=1e-8)


def test_linf_G_half_indicator():
    scan = linf_G_scan(half, 1.0)
    assert scan == pytest.approx(1 / math.sqrt(2), rel=1e-4)
    assert k_linf_G(half, 1.0) == pytest.approx(1 / math.sqrt(2), rel=1e-8)


@given(step_functions(nonzero=True), st.floats(0.05, 8))
@settings(max_examples=30)
def test_linf_G_not_below_grid_scan(x, t):
    assert k_linf_G(x, t) >= linf_G_scan(x, t, 20_000) * (1 - 1e-9)


@given(step_functions(nonzero=True), st.floats(1.0, 8.0))
def test_linf_G_lower_bound(x, t):
    kt = math.floor(t * t) - 1
    xs = rearrange_step(x).to_float()
    assert k_linf_G(x, t) >= float(xs(2.0**-kt)) * (1 - 1e-12)


@given(step_functions(nonzero=True), st.floats(0.05, 20))
def test_pair_matches_linf_G(x, t):
    pair = k_marcinkiewicz_pair(x, t, identity_fn(), phi_gaussian())
    assert pair == pytest.approx(k_linf_G(x, t), rel=1e-8)


@given(step_functions(nonzero=True), st.floats(0.05, 20))
@settings(max_examples=20)
def test_pair_with_equal_functions(x, t):
    phi = power_fn(0.5)
    got = k_marcinkiewicz_pair(x, t, phi, phi)
    assert got == pytest.approx(min(1, t) * marcinkiewicz_norm(x, phi), rel=1e-8)


def test_pair_large_t_limit():
    one = StepFunction.constant(1.0)
    vals = [k_marcinkiewicz_pair(one, t, identity_fn(), phi_gaussian()) for t in (1e2, 1e4, 1e8)]
    assert vals[-1] == pytest.approx(1.0, rel=1e-8)


# --- k_l1_l2_fun and k_linf_lq ------------------------------------------------


def test_l1_l2_fun_examples():
    box = StepFunction.indicator(1.0, HALF_LINE)
    assert k_l1_l2_fun(box, 1.0) == pytest.approx(1.0)
    assert k_l1_l2_fun(box, 3.0) == pytest.approx(1.0)
    assert k_l1_l2_fun(box, 0.5) == pytest.approx(0.5 * math.sqrt(0.75), rel=1e-12)
    assert k_l1_l2_fun(StepFunction.constant(0.0, HALF_LINE), 2.0) == 0.0


@pytest.mark.parametrize("q", [1.0, 2.0, 4.0])
def test_linf_lq_constant(q):
    c = StepFunction.constant(3.0)
    # t * (int_0^{min(1, t^-q)} c^q)^{1/q} = min(t, 1) c
    assert k_linf_lq(c, 0.25, q) == pytest.approx(0.75, rel=1e-12)
    assert k_linf_lq(c, 4.0, q) == pytest.approx(3.0, rel=1e-12)
    assert k_linf_lq(StepFunction.constant(0.0), 2.0, q) == 0.0


@given(step_functions(nonzero=True), st.floats(0.1, 10))
@settings(max_examples=10)
def test_linf_lq_close_to_oracle(x, t):
    k = k_linf_lq(x, t, 2.0)
    o = k_oracle(x, t, "linf_lq", q=2.0)
    assert k <= o * (1 + 1e-9)
    assert o <= 2 * k


# --- oracle ------------------------------------------------------------------


def test_oracle_example():
    assert k_oracle([1, 1], 1.0) == pytest.approx(math.sqrt(2), rel=1e-3)


def test_oracle_cap_and_couple_checks():
    with pytest.raises(ValueError, match="capped"):
        k_oracle(np.ones(9), 1.0)
    with pytest.raises(ValueError):
        k_oracle(half, 1.0, "l1_l2")
    with pytest.raises(ValueError):
        k_oracle([1.0], 1.0, "l1_linf")


@pytest.mark.parametrize("couple", ["l1_l2", "l1_linf", "linf_G", "l1_l2_fun", "linf_lq"])
def test_oracle_extreme_decompositions(couple):
    subject = [2.0, -1.0, 0.5] if couple == "l1_l2" else StepFunction([0.25, 0.5, 1.0], [2.0, -1.0, 0.5])
    q = 3.0 if couple == "linf_lq" else None
    n0, n1 = endpoint_norms(subject, couple, q)
    for t in (1e-3, 0.5, 2.0):
        o = k_oracle(subject, t, couple, q=q)
        assert o <= min(n0, t * n1) * (1 + 1e-12)
    assert k_oracle(subject, 1e-6, couple, q=q) == pytest.approx(1e-6 * n1, rel=2e-2)


# --- curves ------------------------------------------------------------------


def test_kcurve_detects_each_violation():
    t = np.array([1.0, 2.0, 3.0, 4.0])
    assert KCurve(t, np.array([1.0, 1.5, 1.8, 2.0]), "x").violations() == []
    assert "not nondecreasing" in KCurve(t, np.array([1.0, 0.5, 0.6, 0.7]), "x").violations()
    assert "not concave" in KCurve(t, np.array([1.0, 1.1, 1.5, 1.6]), "x").violations()
    assert "K(t)/t not nonincreasing" in KCurve(t, np.array([1.0, 2.5, 3.0, 3.2]), "x").violations()


@given(sequences(min_size=1, max_size=10, nonzero=True))
def test_exact_sequence_engine_curve(a):
    assert kcurve(k_l1_l2_seq, a, T_GRID, "l1_l2").violations() == []


@given(step_functions(nonzero=True))
def test_exact_function_engine_curve(x):
    assert kcurve(k_l1_linf_fun, x, T_GRID, "l1_linf").violations() == []


@given(step_functions(nonzero=True))
@settings(max_examples=30)
def test_sup_formula_engines_monotone(x):
    curves = [
        kcurve(k_linf_G, x, T_GRID, "linf_G"),
        kcurve(k_linf_lq, x, T_GRID, "linf_lq", q=4.0),
        KCurve(T_GRID, k_marcinkiewicz_pair(x, T_GRID, power_fn(1.0), power_fn(0.5)), "pair"),
    ]
    for c in curves:
        bad = [v for v in c.violations() if v != "not concave"]
        assert bad == [], c.couple_tag


def test_sup_formula_engine_can_fail_concavity():
    # a sup over u of concave pieces in t need not be concave
    x = StepFunction([0.5, 1.0], [2.0, 1.0])
    assert "not concave" in kcurve(k_linf_G, x, T_GRID, "linf_G").violations()


def test_engine_lookup():
    assert engine("l1_l2") is k_l1_l2_seq
    with pytest.raises(ValueError):
        engine("linf_lq")
    with pytest.raises(ValueError):
        engine("nope")
