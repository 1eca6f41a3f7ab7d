"""The seven conventional latency metrics over an execution-time sample.

Conventions: population moments, raw (non-excess) kurtosis where a normal
distribution scores 3, nearest-rank percentile.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Trace

CONVENTIONS = {
    "moments": "population",
    "kurtosis": "raw (normal=3)",
    "percentile_rule": "nearest-rank",
    "latency": "finish-submit",
}


class EmptySample(ValueError):
    pass


class DegenerateSample(ValueError):
    pass


def _array(sample: Sequence[float]) -> np.ndarray:
    arr = np.asarray(sample, dtype=float)
    if arr.size == 0:
        raise EmptySample("metric needs at least one observation")
    return arr


def _is_constant(arr: np.ndarray) -> bool:
    return bool(arr.min() == arr.max())


def mean(sample: Sequence[float]) -> float:
    arr = _array(sample)
    if _is_constant(arr):
        return float(arr[0])
    return math.fsum(arr) / arr.size


def median(sample: Sequence[float]) -> float:
    arr = np.sort(_array(sample))
    n = arr.size
    mid = n // 2
    if n % 2:
        return float(arr[mid])
    return float((arr[mid - 1] + arr[mid]) / 2)


def _central_moment(arr: np.ndarray, order: int) -> float:
    dev = arr - mean(arr)
    return math.fsum(dev**order) / arr.size


def stddev(sample: Sequence[float]) -> float:
    arr = _array(sample)
    if _is_constant(arr):
        return 0.0
    return math.sqrt(_central_moment(arr, 2))


def maximum(sample: Sequence[float]) -> float:
    return float(_array(sample).max())


def skewness(sample: Sequence[float]) -> float:
    """Moment coefficient of skewness, m3 / m2**1.5."""
    arr = _array(sample)
    if arr.size < 3 or _is_constant(arr):
        raise DegenerateSample("skewness needs n >= 3 and nonzero spread")
    m2 = _central_moment(arr, 2)
    return _central_moment(arr, 3) / m2**1.5


def kurtosis(sample: Sequence[float]) -> float:
    """Raw kurtosis m4 / m2**2 (normal distribution gives 3)."""
    arr = _array(sample)
    if arr.size < 4 or _is_constant(arr):
        raise DegenerateSample("kurtosis needs n >= 4 and nonzero spread")
    m2 = _central_moment(arr, 2)
    return _central_moment(arr, 4) / m2**2


def percentile_nearest_rank(sample: Sequence[float], pct: int) -> float:
    arr = np.sort(_array(sample))
    rank = max(1, -(-pct * arr.size // 100))  # ceil without float error
    return float(arr[rank - 1])


def tail_latency_p98(sample: Sequence[float]) -> float:
    return percentile_nearest_rank(sample, 98)


@dataclass
class ConventionalReport:
    mean_s: float | None
    median_s: float | None
    stddev_s: float | None
    max_s: float | None
    skewness: float | None
    kurtosis: float | None
    tail_p98_s: float | None
    undefined: dict[str, str] = field(default_factory=dict)

    FIELDS = ("mean_s", "median_s", "stddev_s", "max_s", "skewness", "kurtosis", "tail_p98_s")


_METRICS = {
    "mean_s": mean,
    "median_s": median,
    "stddev_s": stddev,
    "max_s": maximum,
    "skewness": skewness,
    "kurtosis": kurtosis,
    "tail_p98_s": tail_latency_p98,
}


def conventional_report(sample: Trace | Sequence[float]) -> ConventionalReport:
    """All seven metrics; an undefined metric becomes None with a reason code."""
    if isinstance(sample, Trace):
        sample = sample.exec_times()
    values = {}
    undefined = {}
    for name, fn in _METRICS.items():
        try:
            values[name] = fn(sample)
        except EmptySample:
            values[name] = None
            undefined[name] = "empty-sample"
        except DegenerateSample:
            values[name] = None
            undefined[name] = "degenerate-sample"
    return ConventionalReport(**values, undefined=undefined)
