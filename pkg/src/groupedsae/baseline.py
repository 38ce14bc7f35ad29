"""Naive midpoint estimator of the areal mean, and the Gini coefficient.

The naive estimator averages class midpoints weighted by observed counts.
The top class is unbounded, so its midpoint is an arbitrary choice; the
default extrapolates half the width of the class below it, and an override is
exposed to study the sensitivity to that choice.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["Midpoints", "naive_mean", "gini"]


@dataclass(frozen=True)
class Midpoints:
    """Class midpoints: (c_{g-1}+c_g)/2, top class c_{G-1} + (c_{G-1}-c_{G-2})/2."""

    cbar: np.ndarray
    cG_override: float | None = None

    def __post_init__(self):
        cbar = np.asarray(self.cbar, dtype=float)
        if self.cG_override is not None:
            cbar = cbar.copy()
            cbar[-1] = float(self.cG_override)
        cbar.setflags(write=False)
        object.__setattr__(self, "cbar", cbar)
        if np.any(np.diff(cbar) <= 0):
            raise ValueError("midpoints must be strictly increasing")

    @classmethod
    def from_thresholds(cls, thresholds, cG_override=None):
        cuts = np.concatenate([[0.0], thresholds.cuts])
        cbar = 0.5 * (cuts[:-1] + cuts[1:])
        top = cuts[-1] + 0.5 * (cuts[-1] - cuts[-2])
        return cls(np.append(cbar, top), cG_override)


def naive_mean(sample, midpoints):
    """Count-weighted average of class midpoints.

    Raises
    ------
    ValueError
        If the sample is empty.
    """
    n = sample.n
    if n < 1:
        raise ValueError("naive mean needs at least one sampled unit")
    if sample.n_groups != midpoints.cbar.size:
        raise ValueError("midpoint vector length does not match the grouping")
    return float(sample.counts @ midpoints.cbar) / n


def gini(values):
    """Gini coefficient of a value vector.

    Computed from the sorted values z_(1) <= ... <= z_(N) as

        (1/N) * { N + 1 - 2 * sum_j (N + 1 - j) z_(j) / (N * mean) }

    which is 0 at perfect equality and below 1 for nonnegative data.
    """
    z = np.sort(np.asarray(values, dtype=float))
    n = z.size
    if n < 1:
        raise ValueError("gini needs at least one value")
    mean = z.mean()
    if not mean > 0:
        raise ValueError("gini requires a positive mean")
    ranks = np.arange(1, n + 1)
    weighted = np.sum((n + 1 - ranks) * z)
    return float((n + 1 - 2.0 * weighted / (n * mean)) / n)
