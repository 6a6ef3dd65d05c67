"""Small statistical helpers shared by the harness and the test suite."""

from __future__ import annotations

import math

import numpy as np


def ks_distance(samples, cdf):
    """Kolmogorov-Smirnov distance sup |F_emp - F| against a model CDF.

    `cdf` is a vectorized callable; the two one-sided gaps around each order
    statistic are both checked.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if n == 0:
        raise ValueError("need at least one sample")
    f = np.asarray(cdf(x), dtype=np.float64)
    grid = np.arange(1, n + 1) / n
    return float(np.maximum(grid - f, f - (grid - 1.0 / n)).max())


def binomial_stderr(p, n):
    if n <= 0:
        return math.nan
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def mean_stderr(values):
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        return float(v.mean()) if v.size else math.nan, math.nan
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
