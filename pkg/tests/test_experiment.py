import numpy as np
import pytest

from twinslit import experiment as ex
from twinslit import sampling


def test_constrained_initial_conditions_sum_to_zero(state):
    y0 = ex.draw_initial_conditions(state, ex.MODE_CONSTRAINED, 2000, seed=1)
    np.testing.assert_array_equal(y0[:, 0], -y0[:, 1])


def test_constrained_initial_marginal_histogram(state):
    n = 20000
    y0 = ex.draw_initial_conditions(state, ex.MODE_CONSTRAINED, n, seed=2)
    edges = np.linspace(-8, 8, 17)
    probs = sampling.marginal_bin_probability(state, edges, 0.0)
    counts, _ = np.histogram(y0[:, 0], bins=edges)
    sigma = np.sqrt(n * probs * (1 - probs))
    dev = np.abs(counts - n * probs) / np.maximum(sigma, 1.0)
    assert np.all(dev < 4.0)
    assert np.mean(dev < 3.0) > 0.9


def test_unconstrained_com_moment(state):
    n = 50000
    y0 = ex.draw_initial_conditions(state, ex.MODE_UNCONSTRAINED, n, seed=3)
    com = 0.5 * y0.sum(axis=1)
    assert com.var() > 0
    # quadrature second moment of the center of mass at t=0
    lim = state.domain_halfwidth(0.0)
    x, w = np.polynomial.legendre.leggauss(200)
    y, wy = lim * x, lim * w
    dens = state.density(y[:, None], y[None, :], 0.0)
    m2 = float(np.sum(dens * 0.25 * (y[:, None] + y[None, :]) ** 2
                      * wy[:, None] * wy[None, :]))
    se = np.sqrt(2.0 / n) * m2  # ~chi-square variance of a second moment
    assert abs(np.mean(com**2) - m2) < 3 * se


def test_constrained_ensemble_no_same_side(state, settings, cfg):
    arr = ex.run_bqm_ensemble(state, ex.MODE_CONSTRAINED, 2000, settings, seed=4)
    assert arr.n_aborted == 0 and not arr.flagged
    assert arr.same_side_count() == 0
    assert np.max(np.abs(arr.pairs.sum(axis=1))) < 1e-6 * cfg.sigma0


def test_sqm_ensemble_same_side_matches_quadrature(state):
    n = 50000
    arr = ex.run_sqm_ensemble(state, n, seed=5)
    p = sampling.same_side_probability(state, state.detection_time)
    assert abs(arr.same_side_fraction() - p) < 3 * np.sqrt(p * (1 - p) / n)


def test_sqm_single_screen_histogram(state, cfg):
    n = 50000
    arr = ex.run_sqm_ensemble(state, n, seed=6)
    edges = np.linspace(-20, 20, 21)
    probs = sampling.marginal_bin_probability(state, edges, state.detection_time)
    counts, _ = np.histogram(arr.right, bins=edges)
    sigma = np.sqrt(n * probs * (1 - probs))
    dev = np.abs(counts - n * probs) / np.maximum(sigma, 1.0)
    assert np.all(dev < 4.0)


def test_sqm_mirror_histograms(state, cfg):
    arr = ex.run_sqm_ensemble(state, 20000, seed=7)
    hr = ex.screen_histogram(arr.right, cfg.deltaQ)
    hl = ex.screen_histogram(arr.left, cfg.deltaQ)
    assert ex.mirrored_histogram_tv(hr, hl) < 0.05  # ~0.02 at n=1e5


def test_selective_constrained(state, settings, cfg):
    arr = ex.run_bqm_ensemble(state, ex.MODE_CONSTRAINED, 5000, settings, seed=8)
    rep = ex.selective_detection(arr, cfg.deltaQ)
    assert rep.left_upper_fraction == 0.0
    assert rep.n_selected > 0
    assert ex.mirrored_histogram_tv(rep.left_histogram, rep.right_histogram) == 0.0


def test_selective_sqm_populates_both_halves(state, cfg):
    arr = ex.run_sqm_ensemble(state, 20000, seed=9)
    rep = ex.selective_detection(arr, cfg.deltaQ)
    assert rep.left_upper_fraction > 0.0


def test_selective_empty_input(state, cfg):
    empty = ex.ArrivalSet(pairs=np.empty((0, 2)), theory="sqm", source_mode=None,
                          n_aborted=0, seed=0)
    rep = ex.selective_detection(empty, cfg.deltaQ)
    assert rep.n_selected == 0
    assert rep.left_histogram.n == 0


def test_compare_self_is_zero(state):
    arr = ex.run_sqm_ensemble(state, 5000, seed=10)
    rep = ex.compare_theories(state, arr, arr)
    assert rep.tv_distance == 0.0
    assert rep.chi_square == 0.0


def test_compare_constrained_vs_sqm(state, settings):
    bqm = ex.run_bqm_ensemble(state, ex.MODE_CONSTRAINED, 5000, settings, seed=11)
    sqm = ex.run_sqm_ensemble(state, 5000, seed=12)
    rep = ex.compare_theories(state, bqm, sqm)
    probs = rep.same_side_prob
    assert probs["bqm:constrained_com"] == 0.0
    assert probs["sqm"] > 0.2
    assert rep.com_residual_max < 1e-6
    assert rep.tv_distance > 0.5  # the joint distributions are very different


def test_tv_distance_properties():
    assert ex.tv_distance([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert ex.tv_distance([1.0, 0.0], [0.0, 1.0]) == 1.0
    # mass missing from the grid counts via the remainder bin
    assert ex.tv_distance([0.5], [1.0]) == pytest.approx(0.5)


def test_chi_square_gof_uniform():
    rng = np.random.default_rng(0)
    counts = rng.multinomial(10000, np.full(20, 0.05))
    stat, dof, p = ex.chi_square_vs_probs(counts, np.full(20, 0.05), n_total=10000)
    assert p > 0.001
    assert dof <= 19


def test_screen_histogram_tie_break(cfg):
    h = ex.screen_histogram(np.array([0.0, 0.1, -0.1]), cfg.deltaQ)
    assert h.side_split == (1, 2)  # exact zero counts as lower half


def test_right_pattern_tv_is_finite_and_reported(state, settings):
    arr = ex.run_bqm_ensemble(state, ex.MODE_CONSTRAINED, 3000, settings, seed=13)
    tv = ex.right_pattern_vs_born_tv(state, arr)
    assert 0.0 <= tv <= 1.0
