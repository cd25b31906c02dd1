"""Statistics oracles: scipy is the reference implementation."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import special, stats

from ctrlaug.evalstats import WelchResult, betai, mean_ci95, student_sf, t_quantile, welch_one_sided


def test_betai_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = float(rng.uniform(0.1, 50.0))
        b = float(rng.uniform(0.1, 50.0))
        x = float(rng.uniform(0.0, 1.0))
        assert betai(a, b, x) == pytest.approx(float(special.betainc(a, b, x)), abs=1e-9)


def test_betai_edges():
    assert betai(2.0, 3.0, 0.0) == 0.0
    assert betai(2.0, 3.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        betai(0.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        betai(1.0, 1.0, 1.5)


def test_student_sf_matches_scipy():
    rng = np.random.default_rng(1)
    for _ in range(100):
        t = float(rng.uniform(-8.0, 8.0))
        df = float(rng.uniform(1.0, 60.0))
        assert student_sf(t, df) == pytest.approx(float(stats.t.sf(t, df)), abs=1e-9)


def test_welch_matches_scipy_on_twenty_pairs():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        na = int(rng.integers(2, 30))
        nb = int(rng.integers(2, 30))
        a = list(rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2.0), na))
        b = list(rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2.0), nb))
        ours = welch_one_sided(a, b)
        ref = stats.ttest_ind(a, b, equal_var=False, alternative="greater")
        worst = max(worst, abs(ours.p_value - float(ref.pvalue)))
        assert ours.t == pytest.approx(float(ref.statistic), abs=1e-9)
    assert worst < 1e-6


def test_welch_zero_t_is_exactly_half():
    r = welch_one_sided([1.0, 2.0, 3.0], [3.0, 2.0, 1.0])
    assert r.t == 0.0
    assert r.p_value == 0.5


def test_welch_symmetry():
    rng = np.random.default_rng(3)
    a = list(rng.normal(0.3, 1.0, 12))
    b = list(rng.normal(0.0, 2.0, 9))
    assert welch_one_sided(a, b).p_value + welch_one_sided(b, a).p_value == pytest.approx(1.0, abs=1e-12)


def test_welch_degenerate_zero_variance():
    equal = welch_one_sided([2.0, 2.0], [2.0, 2.0])
    assert equal.p_value == 0.5
    higher = welch_one_sided([3.0, 3.0], [2.0, 2.0])
    assert higher.p_value == 0.0
    lower = welch_one_sided([1.0, 1.0], [2.0, 2.0])
    assert lower.p_value == 1.0


def test_welch_sample_size_validation():
    with pytest.raises(ValueError):
        welch_one_sided([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        welch_one_sided([1.0, 2.0], [])


def test_t_quantile_matches_scipy():
    for p in (0.6, 0.8, 0.95, 0.975, 0.995):
        for df in (1, 2, 4, 10, 30, 100):
            assert t_quantile(p, df) == pytest.approx(float(stats.t.ppf(p, df)), abs=1e-7)
    assert t_quantile(0.5, 7) == 0.0
    assert t_quantile(0.025, 9) == pytest.approx(float(stats.t.ppf(0.025, 9)), abs=1e-7)


def test_mean_ci95_matches_manual():
    xs = [1.0, 2.0, 3.0, 4.0, 5.0]
    mean, half = mean_ci95(xs)
    assert mean == 3.0
    sem = np.std(xs, ddof=1) / math.sqrt(5)
    assert half == pytest.approx(float(stats.t.ppf(0.975, 4)) * sem, abs=1e-9)


def test_mean_ci95_single_observation():
    assert mean_ci95([7.0]) == (7.0, 0.0)
    with pytest.raises(ValueError):
        mean_ci95([])


def test_result_type():
    r = welch_one_sided([1.0, 2.0, 4.0], [0.0, 1.0])
    assert isinstance(r, WelchResult)
    assert r.df > 0
