import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kfl import calculus as C, space as S
from kfl.calculus import SobolevFunction
from kfl.space import Ball

from . import oracles


def two_points():
    return S.from_matrix(np.array([[0, 1.0], [1.0, 0]]))


# ---------------------------------------------------------------- gradient

def test_gradient_constant_is_zero():
    for sp in (S.build_grid(2, [0, 1], 0.25), S.line(5)):
        np.testing.assert_array_equal(C.gradient(sp, np.full(sp.n, 4.0)), 0)


def test_gradient_linear_grid():
    g = S.build_grid(1, [0, 7], 1.0)
    np.testing.assert_allclose(C.gradient(g, g.coords[:, 0])[1:-1], 1.0)


def test_gradient_upper_graph():
    np.testing.assert_array_equal(C.gradient(S.line(3), [0, 0, 3]), [0, 3, 3])


def test_gradient_recompute_idempotent():
    g = S.build_grid(2, [0, 1], 0.25)
    u = C.sobolev_function(g, np.sin(g.coords.sum(axis=1)))
    np.testing.assert_array_equal(C.sobolev_function(g, u.values).gradient, u.gradient)


# ---------------------------------------------------------------- norms

def test_sobolev_norm_zero():
    sp = two_points()
    assert C.sobolev_norm(sp, np.ones(2), SobolevFunction(np.zeros(2), np.zeros(2)), 2) == 0


def test_sobolev_norm_hand_values():
    sp = two_points()
    u = SobolevFunction(np.ones(2), np.zeros(2))
    assert C.sobolev_norm(sp, np.ones(2), u, 1) == 4
    assert C.sobolev_norm(sp, np.ones(2), u, 1, homogeneous=True) == 2


def test_sobolev_norm_infinity():
    sp = two_points()
    u = SobolevFunction(np.array([1.0, -3.0]), np.array([4.0, 4.0]))
    assert C.sobolev_norm(sp, np.array([1.0, 2.0]), u, np.inf) == 3 + 4 + 6


def test_t_r_examples():
    one = S.from_matrix(np.zeros((1, 1)))
    assert C.t_r(one, np.ones(1), SobolevFunction(np.array([2.0]), np.zeros(1)), 2)[0] == 8
    u = SobolevFunction(np.array([1.0, 2.0]), np.array([1.0, 0.0]))
    np.testing.assert_allclose(C.t_r(two_points(), np.full(2, 0.5), u, 1), [2.5, 3])
    np.testing.assert_array_equal(C.t_r(two_points(), np.ones(2), 0 * u, 1), 0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5).filter(lambda x: x == 0 or abs(x) > 1e-100), min_size=6, max_size=6))
def test_homogeneous_norm_positive(vals):
    sp = S.line(6)
    u = C.sobolev_function(sp, np.array(vals))
    n = C.sobolev_norm(sp, np.full(6, 0.5), u, 2, homogeneous=True)
    assert (n == 0) == (not np.any(u.values))


# ---------------------------------------------------------------- maximal

def test_maximal_constant():
    g = S.build_grid(2, [0, 1], 0.25)
    np.testing.assert_allclose(C.maximal(g, np.full(g.n, 1.5)), 1.5)


def test_maximal_line3():
    sp = S.line(3)
    np.testing.assert_allclose(oracles.maximal(sp.distance, sp.measure, [0, 0, 3]), [1, 1.5, 3])
    np.testing.assert_allclose(C.maximal(sp, [0, 0, 3]), [1, 1.5, 3])


def test_maximal_line3_capped():
    sp = S.line(3)
    np.testing.assert_allclose(oracles.maximal(sp.distance, sp.measure, [0, 0, 3], 1.1), [0, 1.5, 3])
    np.testing.assert_allclose(C.maximal(sp, [0, 0, 3], 1.1), [0, 1.5, 3])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 9), st.sampled_from([None, 0.7, 1.5]))
def test_maximal_matches_oracle(seed, n, cap):
    rng = np.random.default_rng(seed)
    sp = S.from_points(rng.normal(size=(n, 2)), rng.uniform(0.1, 2, n))
    f = rng.normal(size=n)
    np.testing.assert_allclose(C.maximal(sp, f, cap), oracles.maximal(sp.distance, sp.measure, f, cap),
                               rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=9, max_size=9))
def test_maximal_dominates_field(vals):
    g = S.build_grid(1, [0, 8], 1.0)
    f = np.array(vals)
    assert np.all(f <= C.maximal(g, f))


@pytest.mark.parametrize("p", [2.0, 4.0, np.inf])
def test_maximal_lp_ratio_stable(p):
    rng = np.random.default_rng(3)
    amp, ph = rng.normal(size=4), rng.uniform(0, 2 * np.pi, 4)
    ratios = []
    for k in range(4):
        g = S.build_grid(1, [-1, 1], 2.0 ** -(3 + k))
        x = g.coords[:, 0]
        f = np.abs(sum(a * np.cos((j + 1) * np.pi * x + b) for j, (a, b) in enumerate(zip(amp, ph))))
        ratios.append(C.norm_ratio_maximal(g, f, p))
    assert max(ratios) / min(ratios) < 2


def test_weak_11_bounded():
    g = S.build_grid(1, [-1, 1], 1 / 16)
    f = np.exp(-20 * g.coords[:, 0] ** 2)
    c = C.weak_11_constant(g, f)
    assert 0 < c < 10


# ---------------------------------------------------------------- Poincare / Fefferman-Phong

def test_poincare_constants_only_is_vacuous():
    g = S.build_grid(1, [0, 4], 1.0)
    Cp, rep = C.poincare_constant(g, 1, [C.sobolev_function(g, np.full(g.n, 2.0))])
    assert Cp == 0 and "vacuous" in rep.notes


def test_poincare_two_point_ratio():
    sp = two_points()
    u = SobolevFunction(np.array([1.0, -1.0]), np.array([2.0, 2.0]))
    assert C.poincare_ratio(sp, 2, u, Ball(0, 1.5, (0, 1), 2.0)) == pytest.approx(1 / 9)
    assert C.poincare_constant(sp, 2, [u])[0] == pytest.approx(1 / 9)


def test_poincare_grid_refinement_finite():
    vals = []
    for h in (1 / 8, 1 / 16):
        g = S.build_grid(1, [-1, 1], h)
        vals.append(C.poincare_constant(g, 1, C.default_bank(g)[:-1])[0])
    assert np.all(np.isfinite(vals))
    assert max(vals) / min(vals) < 2


def test_poincare_flags_checkerboard_on_grid():
    g = S.build_grid(1, [-1, 1], 1 / 8)
    Cp, rep = C.poincare_constant(g, 1, C.default_bank(g)[-1:])
    assert Cp == np.inf and not rep.passed


def test_fp_ratio_examples():
    sp = two_points()
    ball = Ball(0, 1.5, (0, 1), 2.0)
    u = SobolevFunction(np.array([1.0, -1.0]), np.array([2.0, 2.0]))
    assert C.fp_ratio(sp, np.ones(2), 2, u, ball) == pytest.approx(11.25)
    one = SobolevFunction(np.ones(2), np.zeros(2))
    assert C.fp_ratio(sp, np.ones(2), 2, one, ball) == pytest.approx(9 / 4)


def test_fp_skips_zero_function():
    sp = two_points()
    Cf, rep = C.fp_constant(sp, np.ones(2), 2, [SobolevFunction(np.zeros(2), np.zeros(2))])
    assert Cf == np.inf and "vacuous" in rep.notes


def test_fp_positive_on_standard_bank():
    g = S.build_grid(2, [-1, 1], 0.25)
    w = 1 + (g.coords**2).sum(axis=1)
    Cf, rep = C.fp_constant(g, w, 2, C.default_bank(g))
    assert Cf > 0 and rep.passed
