import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latemetrics import conventional as cm
from oracles import full_sort_p98, moment, moment_kurt, moment_skew, naive_mean, pop_std, scan_max, sorted_median

samples = st.lists(st.floats(0.001, 100.0, allow_nan=False), min_size=4, max_size=60)


def test_mean_examples():
    assert cm.mean([1, 2, 3]) == 2.0
    assert cm.mean([0.1] * 7) == 0.1


def test_mean_vs_naive_summation():
    rng = random.Random(1)
    xs = [rng.random() for _ in range(1000)]
    assert cm.mean(xs) == pytest.approx(naive_mean(xs), rel=0, abs=1e-12)


def test_median_examples():
    assert cm.median([1, 2, 100]) == 2
    assert cm.median([1, 2, 3, 4]) == 2.5


def test_median_vs_sort_and_index():
    rng = random.Random(2)
    for n in range(1, 60):
        xs = [rng.uniform(0, 5) for _ in range(n)]
        assert cm.median(xs) == sorted_median(xs)


def test_stddev_examples():
    assert cm.stddev([2, 4, 4, 4, 5, 5, 7, 9]) == 2.0
    assert cm.stddev([3.3] * 5) == 0.0
    assert cm.stddev([7.0]) == 0.0


def test_max_examples():
    assert cm.maximum([1, 5, 3]) == 5
    assert cm.maximum([2.5] * 4) == 2.5
    rng = random.Random(3)
    xs = [rng.gauss(0, 1) for _ in range(500)]
    assert cm.maximum(xs) == scan_max(xs)


def test_skewness_examples():
    assert cm.skewness([1, 2, 3]) == 0.0
    s = [1.0, 2.0, 7.0, 3.0, 1.5]
    m = cm.mean(s)
    mirrored = [2 * m - x for x in s]
    assert cm.skewness(s) > 0 > cm.skewness(mirrored)
    assert cm.skewness(mirrored) == pytest.approx(-cm.skewness(s))


def test_skewness_direct_moments():
    xs = [1, 1, 1, 10]
    mu = 13 / 4
    m2 = sum((x - mu) ** 2 for x in xs) / 4
    m3 = sum((x - mu) ** 3 for x in xs) / 4
    assert m2 == 243 / 16 and m3 == 2187 / 32
    assert cm.skewness(xs) == pytest.approx(m3 / m2**1.5, rel=1e-12)
    assert cm.skewness(xs) == pytest.approx(1.1547005383792515, rel=1e-12)


def test_kurtosis_examples():
    # symmetric two-point distribution {-1, +1}: m2 = 1, m4 = 1
    assert cm.kurtosis([-1, 1, -1, 1]) == 1.0
    outlier = [1.0] * 30 + [10.0]
    assert cm.kurtosis(outlier) > 3
    assert cm.kurtosis(outlier) == pytest.approx(moment_kurt(outlier), rel=1e-12)
    s = [0.3, 0.9, 1.4, 2.2, 5.0]
    assert cm.kurtosis([4.5 * x for x in s]) == pytest.approx(cm.kurtosis(s), rel=1e-12)


def test_degenerate_and_empty():
    for fn in (cm.mean, cm.median, cm.stddev, cm.maximum, cm.tail_latency_p98, cm.skewness, cm.kurtosis):
        with pytest.raises(cm.EmptySample):
            fn([])
    with pytest.raises(cm.DegenerateSample):
        cm.skewness([1, 2])
    with pytest.raises(cm.DegenerateSample):
        cm.skewness([4, 4, 4])
    with pytest.raises(cm.DegenerateSample):
        cm.kurtosis([1, 2, 3])


def test_p98_examples():
    assert cm.tail_latency_p98(list(range(1, 101))) == 98
    assert cm.tail_latency_p98([4.2]) == 4.2
    rng = random.Random(5)
    for n in (1, 2, 49, 50, 51, 99, 100, 101, 997):
        xs = [rng.expovariate(1) for _ in range(n)]
        assert cm.tail_latency_p98(xs) == full_sort_p98(xs)


def test_p98_equals_max_for_small_n():
    # ceil(0.98 n) == n only for n < 50; at n = 50 the rank is 49
    rng = random.Random(6)
    xs50 = list(range(1, 51))
    assert cm.tail_latency_p98(xs50) == 49
    for n in range(1, 50):
        xs = [rng.random() for _ in range(n)]
        assert cm.tail_latency_p98(xs) == max(xs)


def test_report_handles_degenerate_fields():
    rep = cm.conventional_report([0.5, 0.5])
    assert rep.mean_s == 0.5 and rep.stddev_s == 0.0
    assert rep.skewness is None and rep.undefined["skewness"] == "degenerate-sample"
    empty = cm.conventional_report([])
    assert all(getattr(empty, f) is None for f in cm.ConventionalReport.FIELDS)
    assert set(empty.undefined.values()) == {"empty-sample"}


@given(samples, st.floats(0.1, 10), st.floats(-5, 5))
def test_affine_covariance(xs, a, b):
    if max(xs) - min(xs) < 1e-3:
        return
    ys = [a * x + b for x in xs]
    for fn in (cm.mean, cm.median, cm.maximum, cm.tail_latency_p98):
        assert fn(ys) == pytest.approx(a * fn(xs) + b, rel=1e-9, abs=1e-9)
    assert cm.stddev(ys) == pytest.approx(a * cm.stddev(xs), rel=1e-9)
    assert cm.skewness(ys) == pytest.approx(cm.skewness(xs), rel=1e-6, abs=1e-6)
    assert cm.kurtosis(ys) == pytest.approx(cm.kurtosis(xs), rel=1e-6)


@given(samples)
def test_ordering_invariants(xs):
    assert cm.tail_latency_p98(xs) <= cm.maximum(xs)
    assert cm.stddev(xs) >= 0
    if len(xs) >= 50:
        assert cm.tail_latency_p98(xs) >= cm.median(xs)


def test_oracle_agreement_random_samples():
    rng = np.random.default_rng(8)
    for n in (4, 10, 57, 300, 1000):
        xs = list(rng.lognormal(0, 1, n))
        pairs = [
            (cm.mean(xs), naive_mean(xs)),
            (cm.median(xs), sorted_median(xs)),
            (cm.stddev(xs), pop_std(xs)),
            (cm.maximum(xs), scan_max(xs)),
            (cm.skewness(xs), moment_skew(xs)),
            (cm.kurtosis(xs), moment_kurt(xs)),
            (cm.tail_latency_p98(xs), full_sort_p98(xs)),
        ]
        for got, want in pairs:
            assert math.isclose(got, want, rel_tol=1e-9)
    assert moment([1, 3], 2) == 1.0
