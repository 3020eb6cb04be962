import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mincontrast.errors import EmptyErosion, GridMismatch, ValidationError, ZeroIntensity
from mincontrast.geometry import PointPattern, RectWindow, all_pairs
from mincontrast.kfunc import (DistanceGrid, PairTable, isotropic_fraction, k_border,
                               k_isotropic, k_matrix, k_naive, q_hat)

from conftest import random_pattern
from oracles import arc_fraction, brute_k, circle_sampling_fraction


def test_grid_nodes():
    g = DistanceGrid(2.5, 5)
    assert np.allclose(g.nodes, [0.5, 1.0, 1.5, 2.0, 2.5])
    assert g.dh == 0.5
    with pytest.raises(ValidationError):
        DistanceGrid(0, 3)
    with pytest.raises(ValidationError):
        DistanceGrid(1, 0)


def test_toy_naive(toy):
    g = DistanceGrid(1.0, 1)
    k = k_matrix(toy, g, "none")
    # K11: two ordered pairs at distance 1, / (100 * 0.02^2)
    assert k.entry(1, 1)[0] == pytest.approx(2 / (100 * 0.02 * 0.02))
    assert k.entry(1, 2)[0] == pytest.approx(1 / (100 * 0.02 * 0.01))
    assert k.entry(2, 2)[0] == 0.0


def test_toy_isotropic_interior(toy):
    # circles of radius 1 about (1,1), (2,1) stay inside [0,10]^2, weights are 1
    k_iso = k_isotropic(toy, 1, 1, DistanceGrid(1.0, 1))
    assert k_iso[0] == pytest.approx(k_naive(toy, 1, 1, DistanceGrid(1.0, 1))[0])


def test_toy_border(toy):
    # both type-1 points have y = 1, outside the eroded window [1.5, 8.5]^2
    k = k_border(toy, 1, 1, DistanceGrid(1.5, 3))
    assert np.all(k == 0)


def test_border_erosion_failure():
    w = RectWindow.square(0, 2)
    p = PointPattern([0.5, 1.5], [0.5, 1.5], [1, 2], w, 2)
    with pytest.raises(EmptyErosion):
        k_border(p, 1, 2, DistanceGrid(1.0, 4))


def test_zero_intensity():
    w = RectWindow.square(0, 2)
    p = PointPattern([0.5, 1.5], [0.5, 1.5], [1, 1], w, 2)
    with pytest.raises(ZeroIntensity):
        k_matrix(p, DistanceGrid(0.5, 4))


@pytest.mark.parametrize("x,y,t", [(5, 5, 1), (0.3, 5, 1), (0.3, 0.4, 1), (0.3, 0.4, 0.3),
                                    (0.5, 0.5, 0.9), (1, 9.2, 2.5), (5, 5, 6), (0.0, 0.0, 0.5)])
def test_isotropic_fraction_oracles(x, y, t):
    w = RectWindow.square(0, 10)
    p = float(isotropic_fraction(x, y, t, w))
    assert p == pytest.approx(arc_fraction(x, y, t, w), abs=1e-12)
    assert p == pytest.approx(circle_sampling_fraction(x, y, t, w), abs=1e-4)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 6), st.floats(0, 4), st.floats(0.01, 2.9))
def test_isotropic_fraction_matches_arc_oracle(x, y, t):
    w = RectWindow(0, 6, 0, 4)
    assert float(isotropic_fraction(x, y, t, w)) == pytest.approx(arc_fraction(x, y, t, w), abs=1e-12)


def test_against_brute_force(rng):
    grid = DistanceGrid(1.5, 7)
    for _ in range(15):
        pat = random_pattern(rng, 50)
        for corr in ("none", "border", "isotropic"):
            km = k_matrix(pat, grid, corr)
            for i in (1, 2):
                for j in (1, 2):
                    ref = brute_k(pat, i, j, grid.nodes, corr, grid.R)
                    np.testing.assert_allclose(km.entry(i, j), ref, rtol=1e-12, atol=0)


def test_pair_table_reuse(rng):
    pat = random_pattern(rng, 50)
    pairs = all_pairs(pat, 3.0)
    table = PairTable(pat, 3.0, "isotropic", pairs)
    for R in (0.5, 1.25, 3.0):
        g = DistanceGrid(R, 16)
        assert np.array_equal(table.curves(g).values, k_matrix(pat, g).values)
    with pytest.raises(ValidationError):
        table.curves(DistanceGrid(4.0, 4))


def test_q_hat_scaling_and_symmetry(rng):
    pat = random_pattern(rng, 50)
    g = DistanceGrid(2.0, 10)
    k = k_matrix(pat, g)
    q = q_hat(pat, g)
    lam = pat.counts() / pat.window.area()
    np.testing.assert_allclose(q.entry(1, 2), lam[0] * lam[1] * k.entry(1, 2))
    qs = q_hat(pat, g, symmetric=True)
    np.testing.assert_allclose(qs.values, qs.values.transpose(1, 0, 2))


def test_naive_cross_symmetric(rng):
    pat = random_pattern(rng, 50)
    k = k_matrix(pat, DistanceGrid(2.0, 10), "none")
    # same pair counts; normalizations differ only by multiplication order
    np.testing.assert_allclose(k.entry(1, 2), k.entry(2, 1), rtol=1e-15)


def test_check_grid(rng):
    k = k_matrix(random_pattern(rng), DistanceGrid(1.0, 4))
    with pytest.raises(GridMismatch):
        k.check_grid(DistanceGrid(1.0, 5))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["none", "border", "isotropic"]))
def test_curves_monotone_nonnegative(seed, corr):
    pat = random_pattern(np.random.default_rng(seed), 50)
    v = k_matrix(pat, DistanceGrid(1.5, 20), corr).values
    assert np.all(v >= 0)
    assert np.all(np.diff(v, axis=2) >= 0)
