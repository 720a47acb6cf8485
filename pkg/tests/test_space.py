import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kfl import space as S
from kfl.space import SpaceError

from . import oracles


def line3():
    return S.from_points(np.array([[0.0], [1.0], [2.0]]))


def random_space(seed, n):
    rng = np.random.default_rng(seed)
    return S.from_points(rng.normal(size=(n, 2)), rng.uniform(0.1, 2.0, n))


# ---------------------------------------------------------------- builders

def test_grid_1d_counting():
    g = S.build_grid(1, [0, 7], 1.0)
    i = np.arange(8)
    assert g.n == 8
    np.testing.assert_array_equal(g.distance, np.abs(i[:, None] - i[None, :]))
    np.testing.assert_array_equal(g.measure, np.ones(8))


def test_grid_2d_cell_volume():
    g = S.build_grid(2, [[0, 1], [0, 1]], 0.5, "cell-volume")
    assert g.n == 9
    np.testing.assert_allclose(g.measure, 0.25)


def test_grid_rejects_zero_spacing():
    with pytest.raises(SpaceError):
        S.build_grid(1, [0, 1], 0.0)


@pytest.mark.parametrize("radius,count", [(0, 1), (1, 5), (2, 13)])
def test_cayley_sizes(radius, count):
    assert S.build_cayley_z2(radius).n == count


def test_cayley_radius_one_distances():
    d = S.build_cayley_z2(1).distance
    off = d[~np.eye(5, dtype=bool)]
    assert set(np.unique(off)) == {1.0, 2.0}


def test_polar_measure_is_disc_area():
    sp = S.build_polar(12, 8, 1e-3)
    assert sp.total_measure == pytest.approx(np.pi, rel=1e-12)
    sp.validate()


# ---------------------------------------------------------------- validation

def test_rejects_asymmetric_matrix():
    d = np.array([[0, 1.0], [2.0, 0]])
    with pytest.raises(SpaceError):
        S.from_matrix(d)


def test_rejects_triangle_violation():
    d = np.array([[0, 1, 5.0], [1, 0, 1.0], [5, 1, 0.0]])
    with pytest.raises(SpaceError):
        S.from_matrix(d)


def test_rejects_nonpositive_measure():
    with pytest.raises(SpaceError):
        S.from_matrix(np.array([[0, 1.0], [1.0, 0]]), np.array([1.0, 0.0]))


# ---------------------------------------------------------------- balls

def member_sets(balls):
    return {b.members for b in balls}


def test_one_point_space_has_one_ball():
    sp = S.from_matrix(np.zeros((1, 1)))
    assert member_sets(S.enumerate_balls(sp)) == {(0,)}


def test_line3_balls_match_oracle():
    sp = line3()
    expected = {(0,), (1,), (2,), (0, 1), (1, 2), (0, 1, 2)}
    assert oracles.ball_sets(sp.distance) == expected
    assert member_sets(S.enumerate_balls(sp)) == expected
    assert (0, 2) not in member_sets(S.enumerate_balls(sp))


def test_line3_capped_balls():
    sp = line3()
    expected = {(0,), (1,), (2,), (0, 1), (1, 2)}
    assert oracles.ball_sets(sp.distance, 1.1) == expected
    assert member_sets(S.enumerate_balls(sp, 1.1)) == expected


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 9))
def test_ball_enumeration_matches_oracle(seed, n):
    sp = random_space(seed, n)
    assert member_sets(S.enumerate_balls(sp)) == oracles.ball_sets(sp.distance)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_ball_monotone_in_radius(seed, n):
    sp = random_space(seed, n)
    for c in range(n):
        radii = np.sort(oracles.candidate_radii(sp.distance))
        sets = [set(sp.open_ball(c, r).members) for r in radii]
        assert all(a <= b for a, b in zip(sets, sets[1:]))


# ---------------------------------------------------------------- doubling

def test_doubling_one_point():
    assert S.doubling_constant(S.from_matrix(np.zeros((1, 1))))[0] == 1


def test_doubling_line8():
    g = S.build_grid(1, [0, 7], 1.0)
    C, rep = S.doubling_constant(g)
    assert oracles.doubling(g.distance, g.measure) == 3
    assert C == 3
    lo, hi = rep.radius_interval
    assert (lo, hi) == (0.5, 1.0)
    assert 0 < rep.center < 7


def test_doubling_two_points():
    sp = S.from_matrix(np.array([[0, 1.0], [1.0, 0]]))
    assert S.doubling_constant(sp)[0] == 2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_doubling_matches_oracle(seed, n):
    sp = random_space(seed, n)
    assert S.doubling_constant(sp)[0] == pytest.approx(oracles.doubling(sp.distance, sp.measure), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.2, 3.0), st.floats(0.0, 2.0))
def test_doubling_nondecreasing_in_cap(seed, cap, extra):
    sp = random_space(seed, 7)
    assert S.doubling_constant(sp, cap)[0] <= S.doubling_constant(sp, cap + extra)[0] + 1e-12


def test_doubling_2d_cell_refinement_stable():
    a = S.doubling_constant(S.build_grid(2, [0, 1], 1 / 8, "cell"))[0]
    b = S.doubling_constant(S.build_grid(2, [0, 1], 1 / 16, "cell"))[0]
    assert abs(b - a) / a < 0.10


# ---------------------------------------------------------------- averages

def test_ball_average_constant():
    sp = line3()
    b = sp.open_ball(1, 5.0)
    assert S.ball_average(sp, b, np.full(3, 2.5)) == 2.5


def test_ball_average_counting():
    sp = line3()
    assert S.ball_average(sp, sp.open_ball(1, 5.0), [0, 0, 3]) == 1


def test_ball_average_weighted():
    sp = S.from_matrix(np.array([[0, 1.0], [1.0, 0]]), np.array([1.0, 3.0]))
    assert S.ball_average(sp, sp.open_ball(0, 2.0), [2, 4]) == 3.5
