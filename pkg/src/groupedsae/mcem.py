"""Monte Carlo EM estimation of the model hyperparameters.

Each iteration tunes a per-area importance-sampling proposal, resamples the
area's random effects (the E-step), and maximizes the Monte Carlo average of
the complete-data log likelihood (the M-step).  Convergence is monitored on
windowed means of the iterate sequence so that Monte Carlo noise does not
terminate the loop prematurely, and the windowed mean is also the reported
estimate.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from .baseline import Midpoints
from .datamodel import FittedModel, Hyperparameters
from .eis_sir import eis_fit, sir
from .likelihood import log_group_probs, log_pmf
from .rng import stream

__all__ = [
    "EmConfig",
    "EStepDraws",
    "FitResult",
    "pseudo_values",
    "local_model_mle",
    "initial_values",
    "e_step",
    "m_step",
    "check_convergence",
    "fit",
    "marginal_loglik_is",
]

logger = logging.getLogger(__name__)

# degenerate-data guards for the moment-based initial values
_TAU2_FLOOR = 1e-4
_LAMBDA_FALLBACK = 1e3


@dataclass(frozen=True)
class EmConfig:
    """Monte Carlo sizes, convergence windows and optimizer knobs."""

    s0: int = 100
    s1: int = 10000
    s2: int = 500
    window_h: int = 30
    window_d: int = 5
    delta: float = 1e-3
    epsilon: float = 1e-3
    max_em_iter: int = 100
    seed: int = 0
    shift: float = 0.0
    renormalize: bool = False
    init_gamma_log: bool = False
    threads: int = 1
    nm_ftol: float = 1e-8
    nm_maxfev: int = 500

    def __post_init__(self):
        if self.window_h < 1 or self.window_d < 1:
            raise ValueError("window sizes must be >= 1")
        if not (self.epsilon > 0 and self.delta > 0):
            raise ValueError("epsilon and delta must be positive")
        if not self.s1 >= self.s2 >= 1:
            raise ValueError("need s1 >= s2 >= 1")


@dataclass(frozen=True)
class EStepDraws:
    """Resampled random effects for every in-sample area (m x s2 arrays)."""

    b: np.ndarray
    sigma2: np.ndarray
    ess: np.ndarray


@dataclass
class FitResult:
    psi: Hyperparameters
    converged: bool
    n_iter: int
    history: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    def to_model(self, thresholds, shift=0.0, standardize=None):
        return FittedModel(
            psi=self.psi,
            thresholds=thresholds,
            shift=shift,
            em_trace=self.trace,
            converged=self.converged,
            standardize=standardize,
        )


def _in_sample(areas):
    return [a for a in areas if a.in_sample]


def pseudo_values(areas, thresholds):
    """Count-weighted mean log midpoint per in-sample area (the V vector)."""
    cbar = Midpoints.from_thresholds(thresholds).cbar
    log_cbar = np.log(cbar)
    return np.array([a.sample.counts @ log_cbar / a.sample.n for a in _in_sample(areas)])


def local_model_mle(counts, thresholds, start, shift=0.0, renormalize=False, maxfev=2000):
    """Single-area MLE of (location, power, variance) for grouped counts.

    Maximizes the multinomial likelihood of a one-area model whose latent
    values are normal with constant mean after the power transform.  Returns
    None when the optimizer leaves the finite region.
    """
    v_i, kappa_i, s2_i = start

    def nll(params):
        loc, kap, log_s2 = params
        return -float(
            log_pmf(counts, loc, np.exp(log_s2), kap, thresholds, shift, renormalize)
        )

    x0 = np.array([v_i, kappa_i, np.log(s2_i)])
    res = minimize(
        nll,
        x0,
        method="Nelder-Mead",
        options={"fatol": 1e-8, "xatol": 1e-8, "maxfev": maxfev},
    )
    # restart once from the found point; simplex search can stall on the
    # curved (location, power) ridge when started far away
    res = minimize(
        nll,
        res.x,
        method="Nelder-Mead",
        options={"fatol": 1e-10, "xatol": 1e-10, "maxfev": maxfev},
    )
    loc, kap, log_s2 = res.x
    if not np.all(np.isfinite(res.x)) or not np.isfinite(res.fun):
        return None
    return float(loc), float(kap), float(np.exp(log_s2))


def initial_values(areas, thresholds, shift=0.0, renormalize=False, init_gamma_log=False):
    """Moment-and-local-model starting values for the EM iteration.

    Area-level pseudo responses V_i (count-weighted log midpoints) give the
    regression and intercept-variance starts by least squares.  Per-area
    grouped-likelihood fits of a location/power/variance model give the
    dispersion-shape, power and dispersion-regression starts.  Areas with
    n < 3, with all mass in one class, or with a failed local fit are excluded
    from those moments with a warning.  Degenerate moments are floored
    (tau2 at 1e-4) or replaced (lambda at 1e3) to keep the priors proper.
    """
    sampled = _in_sample(areas)
    m = len(sampled)
    if m == 0:
        raise ValueError("no in-sample areas")
    X = np.array([a.x for a in sampled])
    p = X.shape[1]
    if m < p or np.linalg.matrix_rank(X) < p:
        raise ValueError("covariate matrix is rank deficient; cannot initialize")

    log_cbar = np.log(Midpoints.from_thresholds(thresholds).cbar)
    V = pseudo_values(areas, thresholds)

    beta0, *_ = np.linalg.lstsq(X, V, rcond=None)
    resid = V - X @ beta0
    tau2_0 = max(float(np.mean(resid**2)), _TAU2_FLOOR)

    kappas, sig2s, rows = [], [], []
    for i, a in enumerate(sampled):
        counts = a.sample.counts
        if a.sample.n < 3 or np.count_nonzero(counts) < 2:
            continue
        s2_start = float(counts @ (log_cbar - V[i]) ** 2 / a.sample.n)
        fit_i = local_model_mle(
            counts, thresholds, (V[i], 0.0, max(s2_start, 1e-4)), shift, renormalize
        )
        if fit_i is None:
            logger.warning("initial values: local fit failed for area %s; excluded", a.id)
            continue
        _, kappa_i, sig2_i = fit_i
        kappas.append(kappa_i)
        sig2s.append(sig2_i)
        rows.append(i)
    if not rows:
        raise ValueError("local model fit failed for every area; cannot initialize")

    sig2s = np.asarray(sig2s)
    var_sig2 = float(np.var(sig2s, ddof=1)) if len(rows) > 1 else 0.0
    if var_sig2 > 0 and np.isfinite(var_sig2):
        lam0 = 2.0 * (float(np.mean(sig2s)) ** 2 / var_sig2 + 1.0)
    else:
        logger.warning("initial values: degenerate dispersion spread; lambda set to %g", _LAMBDA_FALLBACK)
        lam0 = _LAMBDA_FALLBACK
    kappa0 = float(np.mean(kappas))

    target = np.log(sig2s) if init_gamma_log else sig2s
    gamma0, *_ = np.linalg.lstsq(X[rows], target, rcond=None)

    return Hyperparameters(beta=beta0, tau2=tau2_0, lam=min(lam0, 1e6), kappa=kappa0, gamma=gamma0)


def e_step(psi, areas, thresholds, config, em_iter):
    """Tuned-proposal SIR draws of the random effects for each in-sample area.

    Every (area, EM-iteration) pair gets an isolated random stream derived
    from the master seed, so results do not depend on worker scheduling.
    """
    sampled = _in_sample(areas)
    m = len(sampled)
    b = np.empty((m, config.s2))
    sigma2 = np.empty((m, config.s2))
    ess = np.empty(m)

    def run(i):
        a = sampled[i]
        rng = stream(config.seed, "estep", em_iter, i)
        proposal = eis_fit(
            a.sample, a.x, psi, thresholds, config.s0, rng,
            shift=config.shift, renormalize=config.renormalize,
        )
        (bi, s2i), diag = sir(
            a.sample, a.x, psi, thresholds, proposal, config.s1, config.s2, rng,
            shift=config.shift, renormalize=config.renormalize, label=a.id,
        )
        b[i], sigma2[i], ess[i] = bi, s2i, diag.ess

    if config.threads > 1 and m > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(run, range(m)))
    else:
        for i in range(m):
            run(i)
    return EStepDraws(b=b, sigma2=sigma2, ess=ess)


def beta_kappa_objective(beta, kappa, draws, Y, X, thresholds, shift=0.0, renormalize=False):
    """Monte Carlo average over draws of the grouped-data log likelihood."""
    mu = X @ beta  # (m,)
    logp = log_group_probs(
        mu[:, None] + draws.b, draws.sigma2, kappa, thresholds, shift, renormalize
    )  # (m, s2, G)
    terms = Y[:, None, :] * np.where(Y[:, None, :] > 0, logp, 0.0)
    coef = gammaln(Y.sum(axis=1) + 1.0).sum() - gammaln(Y + 1.0).sum()
    return float(terms.sum(axis=2).mean(axis=1).sum() + coef)


def gamma_lambda_objective(gamma, lam, mean_log_s2, mean_inv_s2, X):
    """Monte Carlo average over draws of the dispersion-prior log density.

    Depends on the draws only through per-area means of log sigma2 and
    1/sigma2, which the caller precomputes.
    """
    alpha = lam / 2.0 + 1.0
    log_scale = np.log(lam / 2.0) + X @ gamma
    phi = np.exp(X @ gamma)
    per_area = (
        alpha * log_scale
        - gammaln(alpha)
        - (alpha + 1.0) * mean_log_s2
        - (lam / 2.0) * phi * mean_inv_s2
    )
    return float(per_area.sum())


def m_step(draws, areas, thresholds, psi_prev, config):
    """Maximizers of the Monte Carlo Q function.

    tau2 has the closed form mean-of-squares of the intercept draws; the
    regression/power block and the dispersion block are maximized by
    Nelder-Mead warm-started at the previous iterate, with the dispersion
    shape optimized on the log scale to enforce positivity.
    """
    sampled = _in_sample(areas)
    X = np.array([a.x for a in sampled])
    Y = np.array([a.sample.counts for a in sampled])
    p = X.shape[1]

    # floored at the smallest positive normal so degenerate all-zero draws
    # still yield a valid (if vacuous) variance
    tau2_new = max(float(np.mean(draws.b**2)), np.finfo(float).tiny)

    def nll_bk(params):
        return -beta_kappa_objective(
            params[:p], params[p], draws, Y, X, thresholds, config.shift, config.renormalize
        )

    x0 = np.append(psi_prev.beta, psi_prev.kappa)
    if not np.isfinite(nll_bk(x0)):
        raise RuntimeError("M-step objective for (beta, kappa) is non-finite at the start")
    res_bk = minimize(
        nll_bk,
        x0,
        method="Nelder-Mead",
        options={"fatol": config.nm_ftol, "xatol": config.nm_ftol, "maxfev": config.nm_maxfev},
    )
    beta_new, kappa_new = res_bk.x[:p], float(res_bk.x[p])

    mean_log_s2 = np.mean(np.log(draws.sigma2), axis=1)
    mean_inv_s2 = np.mean(1.0 / draws.sigma2, axis=1)

    def nll_gl(params):
        # the dispersion shape has no finite maximizer when the drawn
        # dispersions are (numerically) constant; keep the search in the
        # region where the objective is a normal double
        if params[p] > 25.0 or np.any(X @ params[:p] > 500.0):
            return np.inf
        return -gamma_lambda_objective(
            params[:p], np.exp(params[p]), mean_log_s2, mean_inv_s2, X
        )

    x0 = np.append(psi_prev.gamma, np.log(psi_prev.lam))
    if not np.isfinite(nll_gl(x0)):
        raise RuntimeError("M-step objective for (gamma, lambda) is non-finite at the start")
    res_gl = minimize(
        nll_gl,
        x0,
        method="Nelder-Mead",
        options={"fatol": config.nm_ftol, "xatol": config.nm_ftol, "maxfev": config.nm_maxfev},
    )
    gamma_new, lam_new = res_gl.x[:p], float(np.exp(res_gl.x[p]))

    return Hyperparameters(
        beta=beta_new, tau2=tau2_new, lam=lam_new, kappa=kappa_new, gamma=gamma_new
    )


def _window_mean(values, k, h, lag):
    """Mean of iterates k-lag-h+1 .. k-lag (1-based iterate indices)."""
    return np.mean(values[k - lag - h : k - lag], axis=0)


def _block_arrays(history):
    return {
        "beta": np.array([psi.beta for psi in history]),
        "tau2": np.array([[psi.tau2] for psi in history]),
        "kappa": np.array([[psi.kappa] for psi in history]),
        "lambda": np.array([[psi.lam] for psi in history]),
        "gamma": np.array([psi.gamma for psi in history]),
    }


def windowed_estimate(history, h):
    """Per-block means over the last ``h`` iterates, as a Hyperparameters."""
    h = min(h, len(history))
    blocks = {name: np.mean(vals[-h:], axis=0) for name, vals in _block_arrays(history).items()}
    return Hyperparameters(
        beta=blocks["beta"],
        tau2=float(blocks["tau2"][0]),
        lam=float(blocks["lambda"][0]),
        kappa=float(blocks["kappa"][0]),
        gamma=blocks["gamma"],
    )


def check_convergence(history, config):
    """Windowed relative-change diagnostics over the iterate history.

    For each parameter block the diagnostic compares the mean of the last H
    iterates against the mean of the H iterates lagged by d, relative to the
    lagged window's norm plus ``delta``.  Checks start only once the history
    is strictly longer than H + d.

    Returns
    -------
    (converged, diagnostics) : diagnostics maps block name to its e value
        (empty before the windows are populated).
    """
    k = len(history)
    h, d = config.window_h, config.window_d
    if k <= h + d:
        return False, {}
    diags = {}
    for name, vals in _block_arrays(history).items():
        w1 = _window_mean(vals, k, h, 0)
        w2 = _window_mean(vals, k, h, d)
        diags[name] = float(
            np.linalg.norm(w1 - w2) / (np.linalg.norm(w2) + config.delta)
        )
    return max(diags.values()) < config.epsilon, diags


def fit(areas, thresholds, config):
    """Run the full EM loop and return the windowed-mean estimate plus trace.

    The trace records, per iteration, the iterate, the per-block convergence
    diagnostics and the 0.1/0.5/0.9 quantiles across areas of the effective
    sample size divided by s1.
    """
    psi = initial_values(
        areas, thresholds, config.shift, config.renormalize, config.init_gamma_log
    )
    history = []
    trace = []
    converged = False
    for k in range(1, config.max_em_iter + 1):
        draws = e_step(psi, areas, thresholds, config, k)
        psi = m_step(draws, areas, thresholds, psi, config)
        history.append(psi)
        converged, diags = check_convergence(history, config)
        q10, q50, q90 = np.quantile(draws.ess / config.s1, [0.1, 0.5, 0.9])
        trace.append(
            {
                "iter": k,
                "e": {name: diags.get(name) for name in ("beta", "tau2", "kappa", "lambda", "gamma")},
                "ess_q10": float(q10),
                "ess_q50": float(q50),
                "ess_q90": float(q90),
                "ess": [float(v) / config.s1 for v in draws.ess],
                "psi": psi.as_flat_dict(),
            }
        )
        if converged:
            break
    if not converged:
        logger.warning("EM did not converge in %d iterations; returning windowed mean", len(history))
    psi_hat = windowed_estimate(history, config.window_h)
    return FitResult(
        psi=psi_hat, converged=converged, n_iter=len(history), history=history, trace=trace
    )


def marginal_loglik_is(areas, psi, thresholds, s, seed, shift=0.0, renormalize=False):
    """Self-normalized importance-sampling estimate of the marginal log likelihood.

    Uses the random-effects prior as the proposal, independently of the EM
    machinery, so it can serve as an external check that the EM iterates climb.

    Returns
    -------
    (loglik, mc_se)
    """
    from .eis_sir import ProposalParams

    total = 0.0
    var_total = 0.0
    for i, a in enumerate(_in_sample(areas)):
        rng = stream(seed, "marglik", i)
        prior = ProposalParams.prior(psi, a.x)
        b, sigma2 = prior.sample(rng, s)
        mu = float(a.x @ psi.beta) + b
        logf = log_pmf(a.sample.counts, mu, sigma2, psi.kappa, thresholds, shift, renormalize)
        mmax = logf.max()
        if not np.isfinite(mmax):
            return -np.inf, np.inf
        q = np.exp(logf - mmax)
        qbar = q.mean()
        total += mmax + np.log(qbar)
        var_total += float(np.var(q) / (s * qbar**2))
    return float(total), float(np.sqrt(var_total))
