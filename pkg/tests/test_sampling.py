import numpy as np
import pytest

from twinslit import sampling
from twinslit.errors import EnvelopeTooTight


def test_full_domain_probability_is_one(state):
    for t in (0.0, state.detection_time):
        assert sampling.total_probability(state, t) == pytest.approx(1.0, abs=1e-4)


def test_bin_probability_mirror(state, cfg):
    t0 = state.detection_time
    dq = cfg.deltaQ
    for Q1, Q2 in ((3.0, -4.5), (0.5, 1.0)):
        p = sampling.bin_probability(state, Q1, Q2, t0)
        q = sampling.bin_probability(state, -Q1 - dq, -Q2 - dq, t0)
        assert q == pytest.approx(p, rel=1e-6, abs=1e-12)


def test_grid_partition_sums_to_one(state):
    t0 = state.detection_time
    lim = state.domain_halfwidth(t0)
    edges = np.linspace(-lim, lim, 41)
    P = sampling.bin_probability_grid(state, edges, edges, t0)
    assert P.sum() == pytest.approx(1.0, abs=1e-4)


def test_grid_matches_adaptive_quadrature(state):
    t0 = state.detection_time
    edges = np.linspace(-20, 20, 11)
    P = sampling.bin_probability_grid(state, edges, edges, t0)
    for i, j in ((4, 5), (2, 7), (5, 5)):
        direct = sampling.bin_probability(state, edges[i], edges[j], t0, deltaQ=4.0)
        assert P[i, j] == pytest.approx(direct, rel=1e-8, abs=1e-12)


def test_sampler_matches_quadrature_bins(state):
    t0 = state.detection_time
    n = 20000
    batch = sampling.sample_joint(state, t0, n, seed=101)
    edges = np.linspace(-20, 20, 11)
    P = sampling.bin_probability_grid(state, edges, edges, t0)
    h, _, _ = np.histogram2d(batch.pairs[:, 0], batch.pairs[:, 1], bins=[edges, edges])
    sigma = np.sqrt(n * P * (1 - P))
    dev = np.abs(h - n * P) / np.maximum(sigma, 1.0)
    assert np.all(dev < 4.0)
    assert np.mean(dev < 3.0) > 0.98


def test_sampler_mean_pair_sum_zero(state):
    batch = sampling.sample_joint(state, state.detection_time, 50000, seed=7)
    s = batch.pairs.sum(axis=1)
    se = s.std() / np.sqrt(len(s))
    assert abs(s.mean()) < 3 * se


def test_sampler_determinism(state):
    t0 = state.detection_time
    a = sampling.sample_joint(state, t0, 5000, seed=3)
    b = sampling.sample_joint(state, t0, 5000, seed=3)
    np.testing.assert_array_equal(a.pairs, b.pairs)
    c = sampling.sample_joint(state, t0, 5000, seed=4)
    assert not np.array_equal(a.pairs, c.pairs)


def test_sampler_chunk_merge_is_prefix_stable(state):
    # a longer run extends a shorter one: chunk substreams are independent
    t0 = state.detection_time
    small = sampling.sample_joint(state, t0, sampling.CHUNK, seed=9)
    big = sampling.sample_joint(state, t0, sampling.CHUNK + 100, seed=9)
    np.testing.assert_array_equal(big.pairs[: sampling.CHUNK], small.pairs)


def test_marginal_density_normalized_and_symmetric(state):
    t0 = state.detection_time
    lim = state.domain_halfwidth(t0)
    ys = np.linspace(-lim, lim, 801)
    m = sampling.marginal_density(state, ys, t0)
    total = np.trapezoid(m, ys)
    assert total == pytest.approx(1.0, abs=1e-4)
    np.testing.assert_allclose(m, m[::-1], rtol=1e-8, atol=1e-12)


def test_marginal_two_peaks_at_t0_zero(state, cfg):
    ys = np.linspace(-10, 10, 1001)
    m = sampling.marginal_density(state, ys, 0.0)
    upper = ys[np.argmax(np.where(ys > 0, m, -1.0))]
    lower = ys[np.argmax(np.where(ys < 0, m, -1.0))]
    assert upper == pytest.approx(cfg.Y, abs=0.1)
    assert lower == pytest.approx(-cfg.Y, abs=0.1)


def test_same_side_probability_complement(state):
    t0 = state.detection_time
    same = sampling.same_side_probability(state, t0)
    lim = state.domain_halfwidth(t0)
    from scipy.integrate import dblquad

    opposite, _ = dblquad(lambda y2, y1: state.density(y1, y2, t0),
                          0.0, lim, -lim, 0.0, epsabs=1e-10, epsrel=1e-8)
    assert 0.0 < same < 1.0
    assert same + 2 * opposite == pytest.approx(1.0, abs=1e-4)


def test_same_side_probability_small_at_early_time(state):
    # packets barely overlap at t=0: tiny but strictly positive weight
    p = sampling.same_side_probability(state, 0.0)
    assert 0.0 < p < 1e-4


def test_same_side_matches_monte_carlo(state):
    t0 = state.detection_time
    p = sampling.same_side_probability(state, t0)
    n = 50000
    batch = sampling.sample_joint(state, t0, n, seed=11)
    frac = np.mean(batch.pairs[:, 0] * batch.pairs[:, 1] > 0)
    assert abs(frac - p) < 3 * np.sqrt(p * (1 - p) / n)


def test_envelope_too_tight(state):
    t0 = state.detection_time
    env = sampling._Envelope(state, t0)
    env.bound *= 1e6  # acceptance collapses below the rate floor
    with pytest.raises(EnvelopeTooTight):
        sampling.sample_joint(state, t0, 2000, seed=1, envelope=env)
