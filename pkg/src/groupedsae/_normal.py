"""Numerically stable normal-distribution utilities.

The fitting code needs log probabilities of normal intervals that stay finite
far into the tails (importance weights are formed in the log domain), and the
posterior sampler needs truncated-normal draws from intervals that may sit
many standard deviations from the mean.
"""

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

__all__ = [
    "log1mexp",
    "log_norm_cdf_diff",
    "norm_logpdf",
    "invgamma_logpdf",
    "sample_invgamma",
    "sample_truncnorm",
    "TruncationError",
]

# beyond this |z| the central inverse-CDF route loses resolution; switch to
# tail rejection sampling
_TAIL_Z = 5.0


class TruncationError(RuntimeError):
    """Truncated-normal interval carries no representable probability mass."""


def log1mexp(x):
    """log(1 - exp(x)) for x <= 0, stable near both ends."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -np.inf)
    small = x < -0.6931471805599453  # log(2)
    big = ~small & (x < 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[small] = np.log1p(-np.exp(x[small]))
        out[big] = np.log(-np.expm1(x[big]))
    out[x == -np.inf] = 0.0
    return out


def _log_norm_cdf_diff_stable(lo, hi):
    """Tail-stable log(Phi(hi) - Phi(lo)) via whichever of CDF/SF cancels less."""
    out = np.empty(lo.shape, dtype=float)
    same = lo >= hi
    neg = (hi <= 0.0) & ~same
    pos = ~neg & ~same
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if np.any(neg):
            lh = log_ndtr(hi[neg])
            ll = log_ndtr(lo[neg])
            out[neg] = lh + log1mexp(ll - lh)
        if np.any(pos):
            # Phi(hi)-Phi(lo) = Phibar(lo)-Phibar(hi), Phibar(x)=Phi(-x)
            ll = log_ndtr(-lo[pos])
            lh = log_ndtr(-hi[pos])
            out[pos] = ll + log1mexp(lh - ll)
    out[same] = -np.inf
    return out


# below this interval mass the linear-domain difference of CDFs loses relative
# precision to cancellation and the log-domain formulas take over
_LINEAR_DIFF_MIN = 1e-5


def log_norm_cdf_diff(lo, hi):
    """log(Phi(hi) - Phi(lo)) elementwise, lo <= hi, tolerating +-inf.

    Bulk evaluation happens in the linear domain; elements whose interval mass
    falls below ``_LINEAR_DIFF_MIN`` are recomputed with tail-stable formulas,
    so the result is finite whenever the mass is a normal double.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    shape = lo.shape
    lo, hi = np.atleast_1d(lo), np.atleast_1d(hi)
    diff = ndtr(hi) - ndtr(lo)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(diff)
    small = diff < _LINEAR_DIFF_MIN
    if np.any(small):
        out[small] = _log_norm_cdf_diff_stable(lo[small], hi[small])
    return out.reshape(shape)


def norm_logpdf(x, mean, var):
    x = np.asarray(x, dtype=float)
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


def invgamma_logpdf(x, shape, scale):
    """log density of IG(shape, scale): scale^shape/Gamma(shape) x^-(shape+1) e^(-scale/x)."""
    from scipy.special import gammaln

    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (
            shape * np.log(scale)
            - gammaln(shape)
            - (shape + 1.0) * np.log(x)
            - scale / x
        )
    return np.where(x > 0, out, -np.inf)


def sample_invgamma(rng, shape, scale, size=None):
    """IG(shape, scale) draws via reciprocal gamma variates.

    Gamma variates that underflow to zero (tiny shape) map to +inf; importance
    weights treat such draws as carrying zero mass.
    """
    with np.errstate(divide="ignore"):
        return np.asarray(scale) / rng.gamma(shape, 1.0, size=size)


def _tail_reject(rng, a, b, size):
    """Draws from standard normal truncated to [a, b), a >= _TAIL_Z.

    Robert-style translated-exponential rejection, falling back to uniform
    rejection when the interval is too narrow for the exponential proposal.
    """
    alpha = 0.5 * (a + np.sqrt(a * a + 4.0))
    out = np.empty(size)
    filled = 0
    for _ in range(100):
        m = max(2 * (size - filled), 64)
        z = a + rng.exponential(1.0 / alpha, size=m)
        u = rng.uniform(size=m)
        acc = (u <= np.exp(-0.5 * (z - alpha) ** 2)) & (z < b)
        zacc = z[acc]
        take = min(zacc.size, size - filled)
        out[filled : filled + take] = zacc[:take]
        filled += take
        if filled == size:
            return out
    # narrow interval: uniform proposal, accept prob exp((a^2 - z^2)/2)
    for _ in range(1000):
        m = max(2 * (size - filled), 64)
        z = rng.uniform(a, b, size=m)
        u = rng.uniform(size=m)
        acc = u <= np.exp(0.5 * (a * a - z * z))
        zacc = z[acc]
        take = min(zacc.size, size - filled)
        out[filled : filled + take] = zacc[:take]
        filled += take
        if filled == size:
            return out
    raise TruncationError(f"tail rejection failed on standardized interval [{a}, {b})")


def sample_truncnorm(rng, mean, sd, lo, hi, size):
    """Draws from N(mean, sd^2) truncated to [lo, hi).

    All draws in one call share the same interval.  Central intervals use the
    inverse CDF; intervals starting beyond ``_TAIL_Z`` standard deviations use
    exponential rejection sampling.

    Raises
    ------
    TruncationError
        If the interval mass underflows double precision.
    """
    if not lo < hi:
        raise TruncationError(f"empty truncation interval [{lo}, {hi})")
    a = -np.inf if lo == -np.inf else (lo - mean) / sd
    b = np.inf if hi == np.inf else (hi - mean) / sd

    if a > _TAIL_Z:
        z = _tail_reject(rng, a, b, size)
    elif b < -_TAIL_Z:
        z = -_tail_reject(rng, -b, -a, size)
    else:
        pa = ndtr(a) if np.isfinite(a) else (0.0 if a < 0 else 1.0)
        pb = ndtr(b) if np.isfinite(b) else (1.0 if b > 0 else 0.0)
        if not pb > pa:
            raise TruncationError(
                f"interval mass underflow on standardized interval [{a}, {b})"
            )
        z = ndtri(rng.uniform(pa, pb, size=size))
    z = np.clip(z, a, np.nextafter(b, -np.inf))
    return mean + sd * z
