"""Independent reference implementations used to check the library.

Everything here is deliberately brute force: quadrature instead of closed
forms, exhaustive enumeration instead of vectorized algebra, pairwise sums
instead of sorted-rank identities.  None of it shares code paths with the
implementations under test.
"""

import itertools
import math

import numpy as np
from scipy.integrate import quad


def transformed_normal_class_probs(mu, sigma, kappa, cuts, shift=0.0):
    """Class probabilities by quadrature of the original-scale density.

    The latent value has density phi((h(z)-mu)/sigma)/sigma * h'(z) on
    z > shift, with h the power transform; integrate it over each class.
    """

    def density(z):
        w = z - shift
        if kappa == 0.0:
            v = math.log(w)
            jac = 1.0 / w
        else:
            v = (w**kappa - 1.0) / kappa
            jac = w ** (kappa - 1.0)
        u = (v - mu) / sigma
        return math.exp(-0.5 * u * u) / (sigma * math.sqrt(2.0 * math.pi)) * jac

    edges = [shift] + list(cuts) + [np.inf]
    probs = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = quad(density, lo, hi, epsabs=1e-12, epsrel=1e-10, limit=200)
        probs.append(val)
    return np.asarray(probs)


def multinomial_log_pmf(counts, probs):
    """Log multinomial mass from factorials and plain powers."""
    n = sum(counts)
    coef = math.factorial(n)
    for c in counts:
        coef //= math.factorial(c)
    mass = float(coef)
    for c, p in zip(counts, probs):
        if c > 0:
            if p == 0.0:
                return -np.inf
            mass *= p**c
    if mass == 0.0:
        return -np.inf
    return math.log(mass)


def all_count_vectors(n, G):
    """Every outcome of n trials over G classes."""
    for combo in itertools.combinations_with_replacement(range(G), n):
        counts = [0] * G
        for g in combo:
            counts[g] += 1
        yield counts


def gini_pairwise(values):
    """Mean absolute difference over all ordered pairs, scaled by 2*mean."""
    z = np.asarray(values, dtype=float)
    n = z.size
    total = np.abs(z[:, None] - z[None, :]).sum()
    return float(total / (2.0 * n * n * z.mean()))


def normal_invgamma_posterior_moments(
    counts, x, psi, thresholds, kappa, b_span=6.0, s2_lo=1e-4, s2_hi=50.0, nodes=400
):
    """Posterior moments of (b, sigma2) given grouped counts, by 2-D quadrature.

    Gauss-Legendre product grid; sigma2 integrated on the log scale.  Returns
    dict with means and variances of b and sigma2.
    """
    from groupedsae.likelihood import log_pmf, log_prior_u

    bg, bw = np.polynomial.legendre.leggauss(nodes)
    tau = np.sqrt(psi.tau2)
    blo, bhi = -b_span * tau, b_span * tau
    b = 0.5 * (bg + 1.0) * (bhi - blo) + blo
    wb = bw * 0.5 * (bhi - blo)
    sg, sw = np.polynomial.legendre.leggauss(nodes)
    llo, lhi = np.log(s2_lo), np.log(s2_hi)
    ls = 0.5 * (sg + 1.0) * (lhi - llo) + llo
    s2 = np.exp(ls)
    ws = sw * 0.5 * (lhi - llo) * s2
    B, S2 = np.meshgrid(b, s2, indexing="ij")
    mu = float(np.asarray(x) @ psi.beta) + B
    logpost = log_pmf(np.asarray(counts), mu, S2, kappa, thresholds) + log_prior_u(
        B, S2, psi, x
    )
    W = np.exp(logpost - logpost.max()) * wb[:, None] * ws[None, :]
    Z = W.sum()
    eb = (W * B).sum() / Z
    es2 = (W * S2).sum() / Z
    eb2 = (W * B**2).sum() / Z
    es4 = (W * S2**2).sum() / Z
    return {
        "mean_b": eb,
        "var_b": eb2 - eb**2,
        "mean_sigma2": es2,
        "var_sigma2": es4 - es2**2,
    }
