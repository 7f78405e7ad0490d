import math
from itertools import combinations

import numpy as np
import pytest

from pssmp.errors import DomainError
from pssmp.stats import ecdf, ecdf_summary, ks_statistic, ks_two_sample


def test_identical_samples():
    a = np.array([0.3, 1.2, 2.0, 5.0])
    d, p = ks_two_sample(a, a)
    assert d == 0.0 and p == 1.0


def test_disjoint_supports():
    d, _ = ks_two_sample([1.0, 2.0, 2.5], [4.0, 5.0])
    assert d == 1.0


def test_exact_permutation_pvalue():
    # brute-force oracle: enumerate the C(4,2)=6 label splits of {1,2,3,4}
    a, b = np.array([1.0, 2.0]), np.array([3.0, 4.0])
    d_obs = ks_statistic(a, b)
    pooled = np.concatenate([a, b])
    hits = total = 0
    for pick in combinations(range(4), 2):
        mask = np.zeros(4, dtype=bool)
        mask[list(pick)] = True
        total += 1
        if ks_statistic(pooled[mask], pooled[~mask]) >= d_obs - 1e-12:
            hits += 1
    assert hits / total == pytest.approx(1.0 / 3.0)
    d, p = ks_two_sample(a, b, method="exact")
    assert d == 1.0
    assert p == pytest.approx(1.0 / 3.0)


def test_exact_refuses_large_samples():
    with pytest.raises(DomainError):
        ks_two_sample(np.arange(12.0), np.arange(12.0), method="exact")


def test_empty_input_rejected():
    with pytest.raises(DomainError):
        ks_two_sample([], [1.0])


def test_null_calibration():
    # rejection rate at level 0.01 over many same-distribution trials
    rng = np.random.default_rng(2718)
    trials, n = 10_000, 100
    a = rng.standard_normal((trials, n))
    b = rng.standard_normal((trials, n))
    rejections = sum(ks_two_sample(a[i], b[i])[1] < 0.01 for i in range(trials))
    rate = rejections / trials
    assert 0.003 <= rate <= 0.03


def test_ks_statistic_matches_scipy():
    from scipy import stats as sps

    rng = np.random.default_rng(7)
    a = rng.standard_normal(257)
    b = rng.standard_normal(311) * 1.2
    d, _ = ks_two_sample(a, b)
    assert d == pytest.approx(sps.ks_2samp(a, b).statistic, abs=1e-12)


def test_ecdf_step_function():
    F = ecdf([1.0, 2.0, 2.0, 5.0])
    assert F(0.5) == 0.0
    assert F(1.0) == 0.25
    assert F(2.0) == 0.75
    assert F(10.0) == 1.0


def test_ecdf_summary_quantiles_monotone():
    rng = np.random.default_rng(11)
    s = ecdf_summary(rng.exponential(1.0, 500))
    qs = [s.quantiles[q] for q in sorted(s.quantiles)]
    assert all(x <= y for x, y in zip(qs, qs[1:]))
    assert s.n == 500
