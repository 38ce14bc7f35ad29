"""Group membership probabilities, grouped-data likelihood and priors.

A unit's latent value is normal on the transformed scale, so the probability
of landing in class g is a difference of normal CDFs evaluated at the
transformed thresholds.  Counts are multinomial given the area effects.  For
a nonzero transform power the latent normal carries some mass outside the
transformed range, so the class probabilities can sum to less than one; the
likelihood uses them as-is unless ``renormalize`` is set.
"""

import numpy as np
from scipy.special import gammaln, ndtr

from ._normal import (
    _LINEAR_DIFF_MIN,
    _log_norm_cdf_diff_stable,
    invgamma_logpdf,
    log_norm_cdf_diff,
    norm_logpdf,
)
from .transform import BoxCox

__all__ = [
    "group_probs",
    "log_group_probs",
    "log_pmf",
    "log_prior_u",
    "complete_loglik",
]


def _zscores(mu, sigma2, kappa, thresholds, shift):
    mu = np.asarray(mu, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    if not np.all(np.isfinite(mu)):
        raise ValueError("mu must be finite")
    if np.any(sigma2 <= 0) or not np.all(np.isfinite(sigma2)):
        raise ValueError("sigma2 must be positive and finite")
    tcuts = BoxCox(kappa, shift).transformed_cuts(thresholds)
    sd = np.sqrt(sigma2)
    # broadcast to (..., G+1)
    z = (tcuts - mu[..., None]) / sd[..., None]
    return z


def log_group_probs(mu, sigma2, kappa, thresholds, shift=0.0, renormalize=False):
    """Log class probabilities, stable far into the tails.

    Broadcasts over ``mu`` and ``sigma2``; the last axis of the result indexes
    the G classes.  One CDF pass over the G+1 cuts covers the bulk; classes
    whose mass underflows the linear domain are recomputed with tail-stable
    formulas.
    """
    z = _zscores(mu, sigma2, kappa, thresholds, shift)
    cdf = ndtr(z)
    diff = cdf[..., 1:] - cdf[..., :-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.log(diff)
    small = diff < _LINEAR_DIFF_MIN
    if np.any(small):
        lo = np.broadcast_to(z[..., :-1], small.shape)
        hi = np.broadcast_to(z[..., 1:], small.shape)
        logp[small] = _log_norm_cdf_diff_stable(lo[small], hi[small])
    if renormalize:
        total = log_norm_cdf_diff(z[..., 0], z[..., -1])
        logp = logp - total[..., None]
    return logp


def group_probs(mu, sigma2, kappa, thresholds, shift=0.0, renormalize=False):
    """Class membership probabilities for a unit with the given area effects.

    ``probs[..., g]`` is Phi((h(c_{g+1}) - mu)/sigma) - Phi((h(c_g) - mu)/sigma).
    """
    return np.exp(log_group_probs(mu, sigma2, kappa, thresholds, shift, renormalize))


def log_pmf(counts, mu, sigma2, kappa, thresholds, shift=0.0, renormalize=False):
    """Multinomial log mass of a count vector given the area effects.

    Broadcasts over ``mu``/``sigma2``.  Returns -inf when an observed class
    has zero probability; that is a legal value, not an error.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.shape[-1] != thresholds.n_groups:
        raise ValueError("count vector length does not match the grouping")
    logp = log_group_probs(mu, sigma2, kappa, thresholds, shift, renormalize)
    coef = gammaln(counts.sum() + 1.0) - gammaln(counts + 1.0).sum()
    # 0 * -inf must contribute 0 (classes with no observations)
    terms = counts * np.where(counts > 0, logp, 0.0)
    return coef + terms.sum(axis=-1)


def log_prior_u(b, sigma2, psi, x):
    """Log prior density of the random effects (b, sigma2) for one area.

    b is N(0, tau2); sigma2 is inverse-gamma with shape lambda/2 + 1 and scale
    lambda*phi/2, so its prior mean is phi = exp(x' gamma).  Broadcasts over
    ``b``/``sigma2``.
    """
    phi = float(psi.phi(x))
    return norm_logpdf(b, 0.0, psi.tau2) + invgamma_logpdf(
        sigma2, psi.lam / 2.0 + 1.0, psi.lam * phi / 2.0
    )


def complete_loglik(samples, effects, psi, xs, thresholds, shift=0.0, renormalize=False):
    """Joint log density of counts and random effects, summed over areas.

    Parameters
    ----------
    samples : sequence of GroupedSample
    effects : sequence of RandomEffects, one per sample
    psi : Hyperparameters
    xs : sequence of covariate vectors, one per sample
    """
    if not (len(samples) == len(effects) == len(xs)):
        raise ValueError("need one random-effect vector and one x per sample")
    total = 0.0
    for y, u, x in zip(samples, effects, xs):
        mu = float(np.asarray(x) @ psi.beta) + u.b
        total += float(
            log_pmf(y.counts, mu, u.sigma2, psi.kappa, thresholds, shift, renormalize)
        )
        total += float(log_prior_u(u.b, u.sigma2, psi, x))
    return total
