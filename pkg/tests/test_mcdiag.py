import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from gou_ergo.fixtures import fixture
from gou_ergo.mcdiag import (FitRefused, bin_counts, decay_curve, default_bins, equal_mass_edges, fit_rate,
                             histogram_l1, l1_raw, noise_floor, recurrence_probe, select_family)
from gou_ergo.pathsim import sample_stationary
from gou_ergo.rng import stream

from conftest import ou

T = np.arange(1.0, 21.0)


def noisy(d, seed=0, rel=0.03):
    return d * np.exp(rel * stream(seed, 1).standard_normal(d.size))


def test_synthetic_power_law_exponent():
    fit = fit_rate(T, noisy(5 * T ** -1.5), "poly")
    assert fit.params["exponent"] == pytest.approx(-1.5, abs=0.1)


def test_synthetic_families_are_told_apart():
    assert select_family(T, noisy(5 * T ** -1.5)).best == "poly"
    sel = select_family(T, noisy(0.9 * np.exp(-0.4 * T)))
    assert sel.best == "exp" and "poly" in sel.rejected
    assert sel.fits["exp"].params["rate"] == pytest.approx(0.4, abs=0.02)


def test_fit_refusals():
    with pytest.raises(FitRefused, match="does not decay"):
        fit_rate(T, 0.01 * T / T.max(), "exp")
    with pytest.raises(FitRefused, match="three points"):
        fit_rate(T, np.full(T.size, 1e-3), "exp", floor=0.01)
    with pytest.raises(ValueError):
        fit_rate(T, 0.5 * np.exp(-T), "cosine")


def test_saturated_and_noise_points_are_dropped():
    d = 0.5 * np.exp(-0.3 * T)
    d[:2] = 1.9
    d[d < 0.01] = 0.009
    fit = fit_rate(T, d, "exp", floor=0.005)
    assert fit.params["rate"] == pytest.approx(0.3, rel=1e-9)


@given(st.integers(0, 2 ** 31), st.integers(2, 6))
def test_plugin_distance_grows_under_nested_refinement(seed, k):
    rng = stream(seed, 2)
    x, y = rng.standard_normal(2000), rng.standard_t(3, 1500)
    fine = equal_mass_edges(np.concatenate([x, y]), 8 * k)
    coarse = fine[1::2]
    raw = lambda e: l1_raw(bin_counts(x, e) / x.size, bin_counts(y, e) / y.size)
    assert raw(coarse) <= raw(fine) + 1e-12


def test_point_mass_gets_its_own_bin():
    pi = stream(0, 3).standard_normal(5000)
    start = np.full(5000, 10.0)
    edges = equal_mass_edges(np.concatenate([start, pi]), default_bins(10_000))
    d = histogram_l1(start, pi, edges).dist
    assert d == pytest.approx(2.0, abs=0.01)


def test_noise_floor_matches_simulation():
    rng = stream(1, 4)
    n, m = 5000, 8000
    dists, floors = [], []
    for _ in range(200):
        x, y = rng.standard_normal(n), rng.standard_normal(m)
        pooled = np.concatenate([x, y])
        edges = equal_mass_edges(pooled, default_bins(n + m))
        dists.append(histogram_l1(x, y, edges).dist)
        floors.append(noise_floor(pooled, edges, n, m))
    assert np.mean(dists) == pytest.approx(np.mean(floors), rel=0.1)


def test_bootstrap_interval_covers_binned_truth():
    edges = np.linspace(-2.5, 3.0, 12)
    cdf = lambda mu: np.diff(np.concatenate([[0.0], stats.norm(mu).cdf(edges), [1.0]]))
    truth = np.abs(cdf(0.0) - cdf(0.4)).sum()
    rng = stream(2, 5)
    hits = 0
    for _ in range(100):
        r = histogram_l1(rng.normal(0, 1, 4000), rng.normal(0.4, 1, 4000), edges, rng)
        hits += r.lo <= truth <= r.hi
    assert hits >= 85


def test_interval_width_shrinks_like_root_n():
    s = ou()
    grid = [1.0, 2.0, 3.0]
    small = decay_curve(s, 10.0, grid, 4000, 1, n_bins=20)
    big = decay_curve(s, 10.0, grid, 16000, 1, n_bins=20)
    ratio = small.halfwidth / big.halfwidth
    assert np.all((ratio > 1.4) & (ratio < 2.9))


def test_curve_range_and_determinism():
    s = fixture("bivariate-atom-mix")
    a = decay_curve(s, 5.0, [0.0, 1.0, 4.0], 5000, 3)
    b = decay_curve(s, 5.0, [0.0, 1.0, 4.0], 5000, 3)
    assert np.array_equal(a.dist, b.dist) and np.array_equal(a.lo, b.lo)
    assert np.all((a.dist >= 0) & (a.dist <= 2)) and np.all(a.lo <= a.dist) and np.all(a.dist <= a.hi)
    assert a.dist[0] > 1.9 and a.dist[-1] < a.dist[1]


def test_stationary_start_stays_stationary():
    s = fixture("bivariate-atom-mix")
    start = sample_stationary(s, 20_000, 11).values
    c = decay_curve(s, start, [0.0, 1.0, 3.0], start.size, 12)
    assert np.all(c.lo <= 2 * c.floor)
    assert np.all(c.dist <= 3 * c.floor)


def test_weighted_distance_reported_with_beta():
    c = decay_curve(ou(), 10.0, [1.0], 4000, 1, beta=0.5)
    assert c.weighted is not None and c.weighted[0] >= c.raw[0]


def test_nonrecurrent_curve_is_flagged():
    c = decay_curve(fixture("diffusion-nonrecurrent"), 10.0, [0.0, 1.0], 2000, 1, n_boot=0)
    assert "Nonrecurrent" in c.flag


def test_recurrence_controls():
    inside = recurrence_probe(fixture("diffusion-recurrent"), 0.5, 10.0, 100, 1)
    assert inside.return_fraction == 1.0 and inside.mean_return_time == 0.0
    rec = [recurrence_probe(fixture("diffusion-recurrent"), 10.0, T, 4000, 1).return_fraction
           for T in (20.0, 80.0)]
    assert rec[1] > rec[0] and rec[1] > 0.8
    non = [recurrence_probe(fixture("diffusion-nonrecurrent"), 10.0, T, 4000, 1).return_fraction
           for T in (20.0, 40.0)]
    assert non[1] < 0.9 and non[1] - non[0] < 0.03
    with pytest.raises(ValueError):
        recurrence_probe(fixture("bivariate-atom-mix"), 10.0, 1.0, 10, 1)
