import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kfl import space as S, weights as W
from kfl.weights import Weight, WeightError

from . import oracles


def two_points():
    return S.from_matrix(np.array([[0, 1.0], [1.0, 0]]))


def rh_oracle(sp, w, q):
    return max((np.mean(w[list(m)] ** q) ** (1 / q)) / np.mean(w[list(m)])
               for m in oracles.ball_sets(sp.distance))


# ---------------------------------------------------------------- constants

@pytest.mark.parametrize("q", [1.5, 2.0, 7.0])
def test_rh_constant_weight(q):
    g = S.build_grid(1, [-1, 1], 0.25)
    assert W.rh_constant(g, Weight(np.full(g.n, 3.0)), q)[0] == pytest.approx(1.0, abs=1e-14)


def test_rh_two_points():
    C, _ = W.rh_constant(two_points(), Weight(np.array([1.0, 3.0])), 2)
    assert C == pytest.approx(np.sqrt(5) / 2, rel=1e-14)
    assert C == pytest.approx(rh_oracle(two_points(), np.array([1.0, 3.0]), 2), rel=1e-14)


def test_rh_power_weight_finite_and_stable():
    base = S.build_grid(1, [-1, 1], 1 / 8)
    w = W.make_weight("power", base, alpha=0.25)
    consts = [W.rh_constant(base.refine(k), W.resample(w, base.refine(k)), 2)[0] for k in range(4)]
    assert np.all(np.isfinite(consts))
    assert abs(consts[-1] - consts[-2]) / consts[-2] < W.STABILITY_WINDOW


def test_rh_infinity():
    g = S.build_grid(1, [-1, 1], 0.25)
    assert W.rh_infinity_constant(g, Weight(np.full(g.n, 2.0)))[0] == pytest.approx(1.0)
    assert W.rh_infinity_constant(two_points(), Weight(np.array([1.0, 3.0])))[0] == 1.5


def test_rh_infinity_polynomial_stable():
    base = S.build_grid(1, [-1, 1], 1 / 8)
    w = W.make_weight("polynomial", base, coeffs=[1, 0, 1])
    c = [W.rh_infinity_constant(base.refine(k), W.resample(w, base.refine(k)))[0] for k in range(4)]
    assert np.all(np.isfinite(c))
    assert abs(c[-1] - c[-2]) / c[-2] < 0.05


def test_ap_examples():
    g = S.build_grid(1, [-1, 1], 0.25)
    assert W.ap_constant(g, Weight(np.full(g.n, 5.0)), 2) == pytest.approx(1.0)
    assert W.ap_constant(two_points(), Weight(np.array([1.0, 4.0])), 2) == 25 / 16


def test_ap_diverges_as_weight_degenerates():
    vals = [W.ap_constant(two_points(), Weight(np.array([1.0, eps])), 2) for eps in 0.5 ** np.arange(1, 12)]
    assert np.all(np.diff(vals) > 0)
    eps = 0.5**11
    assert vals[-1] == pytest.approx((1 + eps) * (1 + 1 / eps) / 4, rel=1e-12)


def test_ap_rejects_zero():
    with pytest.raises(WeightError):
        W.ap_constant(two_points(), Weight(np.array([1.0, 0.0])), 2)


def test_rh_power_law_check():
    g = S.build_grid(1, [-1, 1], 0.25)
    assert W.rh_power_law_check(g, Weight(np.ones(g.n)), 0.5).constants["C"] == pytest.approx(1.0)
    rep = W.rh_power_law_check(two_points(), Weight(np.array([1.0, 3.0])), 0.5)
    assert rep.constants["C"] == pytest.approx(np.sqrt(2) / ((1 + np.sqrt(3)) / 2), rel=1e-14)
    rep = W.rh_power_law_check(g, W.make_weight("power", g, alpha=0.25), 0.5)
    assert rep.passed and np.isfinite(rep.constants["C"])


# ---------------------------------------------------------------- scans

def test_scan_constant_weight_all_in_class():
    g = S.build_grid(1, [-1, 1], 1 / 8)
    rep = W.rh_exponent_scan(g, W.make_weight("constant", g), [1.5, 2, 3])
    assert all(rep.constants["in_class"].values())
    assert rep.constants["q0"] == 3


def test_scan_half_power():
    g = S.build_grid(1, [-1, 1], 1 / 8)
    rep = W.rh_exponent_scan(g, W.make_weight("power", g, alpha=0.5), [1.5, 2, 3])
    assert rep.constants["in_class"][1.5] and not rep.constants["in_class"][3.0]


@pytest.mark.parametrize("alpha,expected", [(0.25, True), (0.6, False)])
def test_scan_classification(alpha, expected):
    g = S.build_grid(1, [-1, 1], 1 / 8)
    rep = W.rh_exponent_scan(g, W.make_weight("power", g, alpha=alpha), [2], refinement_levels=6)
    assert rep.constants["in_class"][2.0] is expected


# ---------------------------------------------------------------- construction

def test_make_weight_polynomial():
    g = S.build_grid(1, [-1, 1], 1.0)
    np.testing.assert_array_equal(W.make_weight("polynomial", g, coeffs=[1, 0, 1]).values, [2, 1, 2])


def test_make_weight_maximal():
    sp = S.line(3)
    np.testing.assert_allclose(W.make_weight("maximal", sp, f=[0, 0, 3], exponent=1).values, [1, 1.5, 3])


def test_make_weight_power_zero_is_constant():
    g = S.build_grid(1, [-1, 1], 0.5)
    np.testing.assert_array_equal(W.make_weight("power", g, alpha=0).values, np.ones(g.n))


def test_power_weight_origin_substitution():
    g = S.build_grid(1, [-1, 1], 0.5)
    w = W.make_weight("power", g, alpha=0.25).values
    assert w[2] == pytest.approx(0.25 ** -0.25)


def test_weight_validation():
    with pytest.raises(WeightError):
        Weight(np.zeros(3))
    with pytest.raises(WeightError):
        Weight(np.array([1.0, -1.0]))


# ---------------------------------------------------------------- properties

weights_st = st.lists(st.floats(0.05, 20.0), min_size=5, max_size=5)


@settings(max_examples=40, deadline=None)
@given(weights_st, st.floats(1.1, 3.0), st.floats(0.0, 3.0))
def test_rh_inclusion_chain(w, q, dq):
    g = S.build_grid(1, [0, 4], 1.0)
    w = Weight(np.array(w))
    a = W.rh_constant(g, w, q)[0]
    b = W.rh_constant(g, w, q + dq)[0]
    assert 1 - 1e-12 <= a <= b * (1 + 1e-12)
    assert b <= W.rh_infinity_constant(g, w)[0] * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(weights_st, st.floats(1e-3, 1e3))
def test_rh_scale_invariant(w, lam):
    g = S.build_grid(1, [0, 4], 1.0)
    w = Weight(np.array(w))
    assert W.rh_constant(g, lam * w, 2)[0] == pytest.approx(W.rh_constant(g, w, 2)[0], rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(weights_st)
def test_rh_matches_oracle(w):
    g = S.build_grid(1, [0, 4], 1.0)
    w = np.array(w)
    assert W.rh_constant(g, Weight(w), 2)[0] == pytest.approx(rh_oracle(g, w, 2), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(weights_st)
def test_power_law_passes_when_ap_finite(w):
    g = S.build_grid(1, [0, 4], 1.0)
    w = Weight(np.array(w))
    assert np.isfinite(W.ap_constant(g, w, 2))
    assert W.rh_power_law_check(g, w, 0.5).passed
