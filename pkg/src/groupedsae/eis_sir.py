"""Per-area efficient importance sampling and sampling importance resampling.

The posterior of one area's random effects (b, sigma2) given its counts is
approximated by a normal x inverse-gamma proposal.  The proposal parameters
are tuned by iterated weighted least squares: regress the log target on the
proposal family's sufficient statistics [1, b, b^2, log sigma2, 1/sigma2]
with the current importance weights, map the fitted natural parameters back
to (mean, variance, shape, scale), and repeat until the relative change drops
below 1e-3.  Draws from the tuned proposal are then resampled in proportion
to their importance weights.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincinv

from ._normal import invgamma_logpdf, norm_logpdf, sample_invgamma
from .likelihood import log_pmf, log_prior_u

__all__ = ["ProposalParams", "WeightedDraws", "WeightCollapseError", "eis_fit", "sir"]

logger = logging.getLogger(__name__)

EIS_TOL = 1e-3
EIS_MAX_ITER = 50
_DAMP_TRIES = 10


class WeightCollapseError(RuntimeError):
    """Every importance weight vanished; the proposal misses the target."""


@dataclass(frozen=True)
class ProposalParams:
    """Normal x inverse-gamma proposal: b ~ N(theta1, theta2), sigma2 ~ IG(theta3, theta4)."""

    theta1: float
    theta2: float
    theta3: float
    theta4: float

    @property
    def is_valid(self):
        return self.theta2 > 0 and self.theta3 > 0 and self.theta4 > 0

    def natural(self):
        """Natural parameters (a1, a2, a3, a4) of the exponential-family kernel."""
        return np.array(
            [
                self.theta1 / self.theta2,
                -1.0 / (2.0 * self.theta2),
                -(self.theta3 + 1.0),
                -self.theta4,
            ]
        )

    @classmethod
    def from_natural(cls, a):
        a1, a2, a3, a4 = (float(v) for v in a)
        return cls(
            theta1=-a1 / (2.0 * a2),
            theta2=-1.0 / (2.0 * a2),
            theta3=-a3 - 1.0,
            theta4=-a4,
        )

    @classmethod
    def prior(cls, psi, x):
        """Proposal equal to the random-effects prior; always a valid start.

        The intercept prior is centered at zero (the regression mean enters
        the likelihood, not the random effect).
        """
        phi = float(psi.phi(x))
        return cls(
            theta1=0.0,
            theta2=psi.tau2,
            theta3=psi.lam / 2.0 + 1.0,
            theta4=psi.lam * phi / 2.0,
        )

    def sample(self, rng, size):
        """Draw (b, sigma2); b first, then sigma2, so streams replay exactly."""
        b = rng.normal(self.theta1, np.sqrt(self.theta2), size=size)
        sigma2 = sample_invgamma(rng, self.theta3, self.theta4, size=size)
        return b, sigma2

    def sample_crn(self, z, u):
        """Map fixed standard-normal/uniform variates through this proposal.

        Reusing one (z, u) set across tuning iterations (common random
        numbers) turns the iteration into a deterministic fixed point, which
        is what lets the relative-change stopping rule engage.
        """
        b = self.theta1 + np.sqrt(self.theta2) * z
        with np.errstate(divide="ignore"):
            sigma2 = self.theta4 / gammaincinv(self.theta3, u)
        return b, sigma2

    def logpdf(self, b, sigma2):
        return norm_logpdf(b, self.theta1, self.theta2) + invgamma_logpdf(
            sigma2, self.theta3, self.theta4
        )


@dataclass(frozen=True)
class WeightedDraws:
    """Importance draws with raw log weights and the Kish effective sample size."""

    b: np.ndarray
    sigma2: np.ndarray
    log_weights: np.ndarray
    ess: float

    @property
    def probabilities(self):
        return normalized_probs(self.log_weights)

    @property
    def size(self):
        return self.b.size


def normalized_probs(log_weights):
    """Self-normalized resampling probabilities via max subtraction.

    Adding any constant to all log weights leaves the result unchanged.
    """
    lw = np.asarray(log_weights, dtype=float)
    finite = lw > -np.inf
    if not np.any(finite):
        raise WeightCollapseError("all importance weights are zero")
    w = np.zeros_like(lw)
    w[finite] = np.exp(lw[finite] - lw[finite].max())
    return w / w.sum()


def effective_sample_size(log_weights):
    """Kish effective size (sum w)^2 / sum w^2 of the normalized weights."""
    p = normalized_probs(log_weights)
    return float(1.0 / np.sum(p * p))


def weighted_design_solve(design, weights, response):
    """Minimize sum_s w_s (f_s - Z_s @ coef)^2; rank-deficient systems signal failure.

    Returns (coef, ok).  Solved by QR on the sqrt-weight-scaled system rather
    than by forming the normal equations.
    """
    sw = np.sqrt(weights)
    coef, _, rank, _ = np.linalg.lstsq(design * sw[:, None], response * sw, rcond=None)
    return coef, rank == design.shape[1]


# a weight set whose effective size falls below this cannot support the
# 5-parameter regression; the tuning step then reverts to uniform weights
_MIN_GLS_ESS = 10.0

# posterior intercept variance cannot exceed the prior variance (log-concave
# likelihood); allow a wide margin before calling the fit divergent
_THETA2_CAP = 10.0


def _trusted(candidate, tau2, b, sigma2):
    """Reject mapped proposals that extrapolate away from their own draws.

    A near-singular weighted fit can return a nearly flat quadratic whose
    implied mean sits far outside the sampled region; such a proposal makes
    every importance weight astronomically small without tripping any -inf
    check.  The fitted normal mean must stay within the draw range (widened by
    one range width), its variance below ``_THETA2_CAP`` times the prior
    variance, and the inverse-gamma mode within a factor of 4 of the drawn
    dispersion range.
    """
    if not candidate.is_valid:
        return False
    b_lo, b_hi = b.min(), b.max()
    span = max(b_hi - b_lo, 1e-8)
    if not (b_lo - span <= candidate.theta1 <= b_hi + span):
        return False
    if candidate.theta2 > _THETA2_CAP * tau2:
        return False
    mode = candidate.theta4 / (candidate.theta3 + 1.0)
    if not (sigma2.min() / 4.0 <= mode <= sigma2.max() * 4.0):
        return False
    return True


def _gls_weights(logw):
    """Regression weights for one tuning step, with a degeneracy rescue.

    Early iterations start from a proposal far from the target, so the
    importance weights can concentrate on a handful of draws and starve the
    regression.  When the Kish effective size of the weight set drops below
    ``_MIN_GLS_ESS`` the step falls back to uniform weights, which is the
    classic unweighted variant of the same tuning regression.
    """
    w = np.exp(logw - logw.max())
    ess = w.sum() ** 2 / np.sum(w * w)
    if ess < _MIN_GLS_ESS:
        return np.ones_like(w)
    return w


def _log_target(counts, x, psi, thresholds, b, sigma2, shift, renormalize):
    """log f(y|u) + log pi(u) per draw; draws with non-finite dispersion get -inf."""
    out = np.full(np.shape(b), -np.inf)
    ok = np.isfinite(sigma2) & (sigma2 > 0)
    if np.any(ok):
        mu = float(np.asarray(x) @ psi.beta) + b[ok]
        out[ok] = log_pmf(
            counts, mu, sigma2[ok], psi.kappa, thresholds, shift, renormalize
        ) + log_prior_u(b[ok], sigma2[ok], psi, x)
    return out


def eis_fit(
    y,
    x,
    psi,
    thresholds,
    s0,
    rng,
    shift=0.0,
    renormalize=False,
    max_iter=EIS_MAX_ITER,
    tol=EIS_TOL,
):
    """Tune the proposal for one area by iterated weighted least squares.

    Parameters
    ----------
    y : GroupedSample
    x : covariate vector
    psi : Hyperparameters
    s0 : draws per tuning iteration (>= 10)
    rng : numpy Generator

    Returns
    -------
    ProposalParams
    """
    if s0 < 10:
        raise ValueError("eis_fit needs at least 10 draws per iteration")
    # common random numbers across tuning iterations: z first, then u
    z_crn = rng.standard_normal(s0)
    u_crn = rng.uniform(size=s0)
    theta = ProposalParams.prior(psi, x)
    for _ in range(max_iter):
        b, sigma2 = theta.sample_crn(z_crn, u_crn)
        f = _log_target(y.counts, x, psi, thresholds, b, sigma2, shift, renormalize)
        with np.errstate(invalid="ignore"):
            logw = f - theta.logpdf(b, sigma2)
        keep = np.isfinite(f)
        if keep.sum() < 6:
            logger.warning("EIS: fewer than 6 draws with positive mass; keeping previous proposal")
            return theta
        w = _gls_weights(logw[keep])
        design = np.column_stack(
            [
                np.ones(keep.sum()),
                b[keep],
                b[keep] ** 2,
                np.log(sigma2[keep]),
                1.0 / sigma2[keep],
            ]
        )
        coef, ok = weighted_design_solve(design, w, f[keep])
        if not ok:
            logger.warning("EIS: singular weighted system; keeping previous proposal")
            return theta
        a_prev = theta.natural()
        a_new = coef[1:]
        candidate = ProposalParams.from_natural(a_new)
        tries = 0
        while not _trusted(candidate, psi.tau2, b[keep], sigma2[keep]) and tries < _DAMP_TRIES:
            a_new = 0.5 * (a_new + a_prev)
            candidate = ProposalParams.from_natural(a_new)
            tries += 1
        if not _trusted(candidate, psi.tau2, b[keep], sigma2[keep]):
            logger.warning("EIS: update left the trusted region; keeping previous proposal")
            return theta
        old = np.array([theta.theta1, theta.theta2, theta.theta3, theta.theta4])
        new = np.array(
            [candidate.theta1, candidate.theta2, candidate.theta3, candidate.theta4]
        )
        rel = np.max(np.abs(new - old) / np.maximum(np.abs(old), 1e-12))
        theta = candidate
        if rel < tol:
            break
    return theta


def sir(y, x, psi, thresholds, proposal, s1, s2, rng, shift=0.0, renormalize=False, label=None):
    """Sampling importance resampling for one area.

    Draws ``s1`` proposals, weights them by target/proposal in the log domain,
    and resamples ``s2`` of them with replacement.

    Returns
    -------
    (b, sigma2) : resampled arrays of length s2
    diagnostics : WeightedDraws over the full s1 draw set
    """
    if not s1 >= s2 >= 1:
        raise ValueError("need s1 >= s2 >= 1")
    b, sigma2 = proposal.sample(rng, s1)
    f = _log_target(y.counts, x, psi, thresholds, b, sigma2, shift, renormalize)
    with np.errstate(invalid="ignore"):
        logw = np.where(np.isfinite(f), f - proposal.logpdf(b, sigma2), -np.inf)
    try:
        probs = normalized_probs(logw)
    except WeightCollapseError:
        raise WeightCollapseError(
            f"importance weights collapsed for area {label!r}"
        ) from None
    ess = float(1.0 / np.sum(probs * probs))
    idx = rng.choice(s1, size=s2, replace=True, p=probs)
    diagnostics = WeightedDraws(b=b, sigma2=sigma2, log_weights=logw, ess=ess)
    return (b[idx], sigma2[idx]), diagnostics
