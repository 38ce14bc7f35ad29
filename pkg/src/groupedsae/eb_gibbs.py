"""Empirical Bayes prediction of areal means and Gini coefficients.

For an in-sample area, a Gibbs sampler augments the latent transformed unit
values of the whole finite population: sampled units are truncated normals
confined to their observed class intervals, unsampled units are plain
normals, and the area mean and variance have conjugate updates.  Functions of
the population (mean, Gini) are averaged over the kept sweeps after mapping
the latent values back through the inverse transform.

Out-of-sample areas have no data to condition on, so their estimates are
plain Monte Carlo averages over populations generated from the fitted model.
"""

from dataclasses import dataclass

import numpy as np

from ._normal import sample_invgamma, sample_truncnorm
from .baseline import gini
from .transform import BoxCox

__all__ = [
    "PosteriorDraw",
    "EbEstimate",
    "gibbs_step",
    "eb_estimate",
    "predict_out_of_sample",
    "resample_into_range",
]

_RANGE_MARGIN = 1e-8
_REDRAW_ROUNDS = 100


@dataclass(frozen=True)
class PosteriorDraw:
    """One Gibbs state: area effects plus latent unit values.

    ``v_in`` is ordered by class block (all class-1 units first, and so on);
    ``v_out`` holds the unsampled units.
    """

    mu: float
    sigma2: float
    v_in: np.ndarray
    v_out: np.ndarray


@dataclass(frozen=True)
class EbEstimate:
    area_id: str
    mean_eb: float
    gini_eb: float
    draws_used: int
    clamped_draws: int = 0
    in_sample: bool = True


def resample_into_range(rng, v, mean, sd, bc):
    """Replace draws outside the transformed range, preserving the rest.

    Invalid entries are redrawn from the same normal up to 100 rounds; any
    still invalid are clamped just inside the boundary.  Returns the repaired
    array and the number of clamped entries.
    """
    lo, hi = bc.range_low, bc.range_high
    if lo == -np.inf and hi == np.inf:
        return v, 0
    v = np.asarray(v, dtype=float).copy()
    bad = (v <= lo) | (v >= hi)
    for _ in range(_REDRAW_ROUNDS):
        k = int(bad.sum())
        if k == 0:
            return v, 0
        v[bad] = rng.normal(mean, sd, size=k)
        bad = (v <= lo) | (v >= hi)
    n_clamped = int(bad.sum())
    if n_clamped:
        v[bad & (v <= lo)] = lo + _RANGE_MARGIN
        v[bad & (v >= hi)] = hi - _RANGE_MARGIN
    return v, n_clamped


def _initial_state(counts, x, N_pop, psi, tcuts):
    mu0 = float(np.asarray(x) @ psi.beta)
    sigma2_0 = float(psi.phi(x))
    sd0 = np.sqrt(sigma2_0)
    v_in = np.empty(int(counts.sum()))
    pos = 0
    for g, y_g in enumerate(counts):
        if y_g == 0:
            continue
        lo, hi = tcuts[g], tcuts[g + 1]
        if hi == np.inf:
            start = lo + sd0
        elif lo == -np.inf:
            start = hi - sd0
        else:
            start = 0.5 * (lo + hi)
        v_in[pos : pos + y_g] = start
        pos += y_g
    v_out = np.full(N_pop - int(counts.sum()), mu0)
    return PosteriorDraw(mu=mu0, sigma2=sigma2_0, v_in=v_in, v_out=v_out)


def gibbs_step(state, counts, x, N_pop, psi, tcuts, bc, rng):
    """One full sweep of the conditional updates: mu, sampled units,
    unsampled units, then the variance.

    Returns the new state and the number of range-clamped unsampled draws.
    """
    tau2 = psi.tau2
    xb = float(np.asarray(x) @ psi.beta)
    phi = float(psi.phi(x))
    n = state.v_in.size
    sigma2 = state.sigma2
    sd = np.sqrt(sigma2)

    vbar = (state.v_in.sum() + state.v_out.sum()) / N_pop
    denom = sigma2 + N_pop * tau2
    mu = rng.normal((sigma2 * xb + N_pop * tau2 * vbar) / denom, np.sqrt(tau2 * sigma2 / denom))

    v_in = np.empty(n)
    pos = 0
    for g, y_g in enumerate(counts):
        if y_g == 0:
            continue
        v_in[pos : pos + y_g] = sample_truncnorm(rng, mu, sd, tcuts[g], tcuts[g + 1], int(y_g))
        assert np.all(v_in[pos : pos + y_g] >= tcuts[g])
        assert np.all(v_in[pos : pos + y_g] < tcuts[g + 1])
        pos += y_g

    v_out = rng.normal(mu, sd, size=N_pop - n)
    v_out, n_clamped = resample_into_range(rng, v_out, mu, sd, bc)

    rss = float(np.sum((v_in - mu) ** 2) + np.sum((v_out - mu) ** 2))
    sigma2_new = float(
        sample_invgamma(rng, (N_pop + psi.lam) / 2.0 + 1.0, 0.5 * (psi.lam * phi + rss))
    )
    return PosteriorDraw(mu=float(mu), sigma2=sigma2_new, v_in=v_in, v_out=v_out), n_clamped


def eb_estimate(area, psi, thresholds, rng, s3=500, burnin=50, shift=0.0):
    """Empirical Bayes estimates of the areal mean and Gini coefficient.

    Runs the Gibbs sampler ``burnin + s3`` sweeps from a deterministic start
    and averages the population mean and Gini of the back-transformed latent
    values over the kept sweeps.
    """
    if not area.in_sample:
        raise ValueError(f"area {area.id} has no sample; use predict_out_of_sample")
    if not s3 > burnin >= 0:
        raise ValueError("need s3 > burnin >= 0")
    bc = BoxCox(psi.kappa, shift)
    tcuts = bc.transformed_cuts(thresholds)
    counts = area.sample.counts
    state = _initial_state(counts, area.x, area.N_pop, psi, tcuts)
    mean_acc = 0.0
    gini_acc = 0.0
    clamped = 0
    for sweep in range(burnin + s3):
        state, n_clamped = gibbs_step(state, counts, area.x, area.N_pop, psi, tcuts, bc, rng)
        clamped += n_clamped
        if sweep < burnin:
            continue
        z = bc._inverse_unchecked(np.concatenate([state.v_in, state.v_out]))
        mean_acc += z.mean()
        gini_acc += gini(z)
    return EbEstimate(
        area_id=area.id,
        mean_eb=mean_acc / s3,
        gini_eb=gini_acc / s3,
        draws_used=s3,
        clamped_draws=clamped,
        in_sample=True,
    )


def predict_out_of_sample(area, psi, rng, s=500, shift=0.0):
    """Model-based prediction for an area without sample data.

    Each Monte Carlo draw generates the area's full population from the
    fitted model (fresh random intercept and dispersion, then unit values)
    and evaluates the mean and Gini; estimates average over draws.
    """
    bc = BoxCox(psi.kappa, shift)
    xb = float(np.asarray(area.x) @ psi.beta)
    phi = float(psi.phi(area.x))
    mean_acc = 0.0
    gini_acc = 0.0
    clamped = 0
    for _ in range(s):
        b = rng.normal(0.0, np.sqrt(psi.tau2))
        sigma2 = float(sample_invgamma(rng, psi.lam / 2.0 + 1.0, psi.lam * phi / 2.0))
        sd = np.sqrt(sigma2)
        v = rng.normal(xb + b, sd, size=area.N_pop)
        v, n_clamped = resample_into_range(rng, v, xb + b, sd, bc)
        clamped += n_clamped
        z = bc._inverse_unchecked(v)
        mean_acc += z.mean()
        gini_acc += gini(z)
    return EbEstimate(
        area_id=area.id,
        mean_eb=mean_acc / s,
        gini_eb=gini_acc / s,
        draws_used=s,
        clamped_draws=clamped,
        in_sample=False,
    )
