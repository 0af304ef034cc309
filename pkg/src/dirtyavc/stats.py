"""Interval estimates and bootstrap trend tests for Monte Carlo output."""
import math

import numpy as np


def wilson_interval(successes, trials, level=0.95):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    from scipy.special import ndtri  # deferred: scipy import dominates CLI startup

    z = float(ndtri(0.5 + level / 2))
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def paired_bootstrap_ci(a, b, stat=None, level=0.95, n_boot=2000, seed=0):
    """Percentile CI for ``stat(b) - stat(a)``.

    ``a`` and ``b`` have the trial index on their last axis and the same
    number of trials; both are resampled with the same indices. ``stat`` maps
    such an array to a scalar and defaults to the mean.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError("paired samples need equal trial counts")
    if stat is None:
        stat = np.mean
    T = a.shape[-1]
    rng = np.random.default_rng(seed)
    diffs = np.empty(n_boot)
    for i in range(n_boot):
        idx = rng.integers(T, size=T)
        diffs[i] = stat(b[..., idx]) - stat(a[..., idx])
    tail = 100 * (1 - level) / 2
    lo, hi = np.percentile(diffs, [tail, 100 - tail])
    return float(lo), float(hi)


def worst_row_mean(x):
    """Largest per-row mean; the bootstrap statistic for maximal error."""
    return float(np.max(np.mean(x, axis=-1)))


_DIRECTIONS = ("nonincreasing", "nondecreasing", "decreasing", "increasing")


def trend_test(samples, direction, stat=None, level=0.95, n_boot=2000, seed=0):
    """Check a monotone trend across an ordered list of sample arrays.

    ``nonincreasing`` passes unless some consecutive pair shows a significant
    increase (CI of the difference entirely above 0); ``decreasing`` requires
    every consecutive pair to show a significant decrease. The mirrored
    directions are analogous. Returns ``(passed, [(lo, hi), ...])``.
    """
    if direction not in _DIRECTIONS:
        raise ValueError(f"direction must be one of {_DIRECTIONS}")
    cis = [paired_bootstrap_ci(a, b, stat=stat, level=level, n_boot=n_boot, seed=seed + i)
           for i, (a, b) in enumerate(zip(samples[:-1], samples[1:]))]
    if direction == "nonincreasing":
        ok = all(lo <= 0 for lo, _ in cis)
    elif direction == "nondecreasing":
        ok = all(hi >= 0 for _, hi in cis)
    elif direction == "decreasing":
        ok = all(hi < 0 for _, hi in cis)
    else:
        ok = all(lo > 0 for lo, _ in cis)
    return ok, cis
