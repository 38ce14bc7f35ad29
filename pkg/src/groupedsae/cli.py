"""Batch command-line front end.

Subcommands bind ingestion, fitting, prediction, bootstrap and the two
simulation studies into reproducible runs: all randomness flows from a single
``--seed`` through named sub-streams, so identical invocations produce
byte-identical outputs (a timestamp in the model file is suppressible with
``--no-meta``).  Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import argparse
import csv
import datetime
import os
import sys

import numpy as np

from .baseline import Midpoints, naive_mean
from .bootstrap import bootstrap_rmse
from .datamodel import FittedModel, Thresholds, load_areas, load_model, save_model
from .eb_gibbs import eb_estimate, predict_out_of_sample
from .mcem import EmConfig, fit
from .rng import stream
from .simharness import (
    load_domain_covariates,
    load_unit_values,
    simulate_design_based,
    simulate_model_based,
)

_BLOCKS = ("beta", "tau2", "kappa", "lambda", "gamma")


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _parse_thresholds(text):
    try:
        return Thresholds(np.array([float(c) for c in text.split(",")]))
    except ValueError as exc:
        raise ValueError(f"bad --thresholds value {text!r}: {exc}") from None


def _standardize(areas):
    """Z-score non-constant covariate columns over the in-sample areas."""
    X = np.array([a.x for a in areas if a.in_sample])
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    constant = scale == 0
    mean[constant] = 0.0
    scale[constant] = 1.0
    from dataclasses import replace

    out = [replace(a, x=(a.x - mean) / scale) for a in areas]
    return out, {"mean": [float(v) for v in mean], "scale": [float(v) for v in scale]}


def _apply_standardize(areas, spec):
    from dataclasses import replace

    mean = np.asarray(spec["mean"])
    scale = np.asarray(spec["scale"])
    return [replace(a, x=(a.x - mean) / scale) for a in areas]


def _em_config_from_args(args, shift=0.0):
    return EmConfig(
        s0=args.s0,
        s1=args.s1,
        s2=args.s2,
        window_h=args.window_h,
        window_d=args.window_d,
        delta=args.delta,
        epsilon=args.epsilon,
        max_em_iter=args.max_iter,
        seed=args.seed,
        shift=shift,
        renormalize=args.renormalize_groups,
        init_gamma_log=args.init_gamma_log,
        threads=args.threads,
    )


def _add_fit_options(parser):
    parser.add_argument("--s0", type=int, default=100)
    parser.add_argument("--s1", type=int, default=10000)
    parser.add_argument("--s2", type=int, default=500)
    parser.add_argument("--window-h", type=int, default=30)
    parser.add_argument("--window-d", type=int, default=5)
    parser.add_argument("--delta", type=float, default=1e-3)
    parser.add_argument("--epsilon", type=float, default=1e-3)
    parser.add_argument("--max-iter", type=int, default=100)
    parser.add_argument("--renormalize-groups", action="store_true")
    parser.add_argument("--init-gamma-log", action="store_true")


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _trace_rows(trace, p):
    psi_cols = (
        [f"beta_{j + 1}" for j in range(p)]
        + ["tau2", "lambda", "kappa"]
        + [f"gamma_{j + 1}" for j in range(p)]
    )
    header = ["iter", "block", "e_k", "ess_q10", "ess_q50", "ess_q90"] + psi_cols
    rows = []
    for rec in trace:
        for block in _BLOCKS:
            rows.append(
                [rec["iter"], block, rec["e"].get(block), rec["ess_q10"], rec["ess_q50"], rec["ess_q90"]]
                + [rec["psi"][c] for c in psi_cols]
            )
    return header, rows


def cmd_fit(args):
    thresholds = _parse_thresholds(args.thresholds)
    areas = load_areas(args.data, thresholds)
    standardize = None
    if args.standardize:
        areas, standardize = _standardize(areas)
    config = _em_config_from_args(args, shift=args.shift)
    result = fit(areas, thresholds, config)
    meta = None
    if not args.no_meta:
        meta = {"created": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    model = result.to_model(thresholds, shift=args.shift, standardize=standardize)
    save_model(model, args.out, meta=meta)
    if args.trace:
        header, rows = _trace_rows(result.trace, result.psi.p)
        _write_csv(args.trace, header, rows)
    if not result.converged:
        print("warning: EM did not converge; estimate is the windowed mean", file=sys.stderr)
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    areas = load_areas(args.data, model.thresholds)
    if model.standardize is not None:
        areas = _apply_standardize(areas, model.standardize)
    midpoints = Midpoints.from_thresholds(model.thresholds, cG_override=args.naive_cg)
    rows = []
    for i, area in enumerate(areas):
        if area.in_sample:
            est = eb_estimate(
                area, model.psi, model.thresholds, stream(args.seed, "predict", i),
                s3=args.gibbs_iters, burnin=args.burnin, shift=model.shift,
            )
            naive = naive_mean(area.sample, midpoints)
        else:
            est = predict_out_of_sample(
                area, model.psi, stream(args.seed, "predict", i),
                s=args.gibbs_iters, shift=model.shift,
            )
            naive = None
        rows.append(
            [area.id, area.in_sample, est.mean_eb, est.gini_eb, naive, est.draws_used, est.clamped_draws]
        )
    _write_csv(
        args.out,
        ["area_id", "in_sample", "mean_eb", "gini_eb", "mean_naive", "draws_used", "clamped_draws"],
        rows,
    )
    return 0


def cmd_bootstrap(args):
    model = load_model(args.model)
    areas = load_areas(args.data, model.thresholds)
    if model.standardize is not None:
        areas = _apply_standardize(areas, model.standardize)
    records = bootstrap_rmse(
        areas, model, args.B, args.seed, s3=args.gibbs_iters, burnin=args.burnin,
        threads=args.threads,
    )
    _write_csv(
        args.out,
        ["area_id", "n", "rmse_eb", "rmse_naive", "B"],
        [[r["area_id"], r["n"], r["rmse_eb"], r["rmse_naive"], r["B"]] for r in records],
    )
    return 0


def cmd_simulate_model_based(args):
    if args.model:
        model = load_model(args.model)
        psi_true, thresholds = model.psi, model.thresholds
        shift = model.shift
    else:
        if not args.thresholds:
            raise ValueError("model-based simulation needs --thresholds or --model")
        thresholds = _parse_thresholds(args.thresholds)
        psi_true = None
        shift = args.shift
        print(
            "note: no fitted model supplied; using the documented synthetic hyperparameters",
            file=sys.stderr,
        )
    config = _em_config_from_args(args, shift=shift)
    records = simulate_model_based(
        thresholds,
        psi_true=psi_true,
        m=args.m,
        N_pop=args.N_pop,
        n_pattern=tuple(int(v) for v in args.n_pattern.split(",")),
        R=args.R,
        seed=args.seed,
        em_config=config,
        s3=args.gibbs_iters,
        burnin=args.burnin,
        threads=args.threads,
    )
    _write_csv(
        args.out,
        ["area_index", "n", "rrmse_eb", "rrmse_naive", "G", "R"],
        [[r["area_index"], r["n"], r["rrmse_eb"], r["rrmse_naive"], r["G"], r["R"]] for r in records],
    )
    return 0


def cmd_simulate_design_based(args):
    thresholds = _parse_thresholds(args.thresholds)
    unit_values = load_unit_values(args.population)
    covariates = load_domain_covariates(args.covariates)
    config = _em_config_from_args(args)
    records = simulate_design_based(
        unit_values,
        covariates,
        thresholds,
        shift=args.shift_c,
        n_per_domain=args.n,
        R=args.R,
        seed=args.seed,
        em_config=config,
        pop_size=args.pop_size,
        s3=args.gibbs_iters,
        burnin=args.burnin,
        threads=args.threads,
    )
    _write_csv(
        args.out,
        ["area_index", "n", "rrmse_eb", "rrmse_naive", "G", "R"],
        [[r["area_index"], r["n"], r["rrmse_eb"], r["rrmse_naive"], r["G"], r["R"]] for r in records],
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="groupedsae",
        description="Small area estimation of means and Gini coefficients from grouped data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="estimate hyperparameters from an areas CSV")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--thresholds", required=True, help="comma-separated cuts c_1,...,c_{G-1}")
    p_fit.add_argument("--out", required=True, help="model JSON output path")
    p_fit.add_argument("--trace", help="optional fit-trace CSV output path")
    p_fit.add_argument("--shift", type=float, default=0.0)
    p_fit.add_argument("--standardize", action="store_true")
    p_fit.add_argument("--no-meta", action="store_true")
    _add_fit_options(p_fit)
    _add_common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_pred = sub.add_parser("predict", help="EB estimates for all areas in a CSV")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--out", required=True)
    p_pred.add_argument("--gibbs-iters", type=int, default=500)
    p_pred.add_argument("--burnin", type=int, default=50)
    p_pred.add_argument("--naive-cg", type=float, default=None, help="override the top-class midpoint")
    _add_common(p_pred)
    p_pred.set_defaults(func=cmd_predict)

    p_boot = sub.add_parser("bootstrap", help="parametric bootstrap RMSE table")
    p_boot.add_argument("--model", required=True)
    p_boot.add_argument("--data", required=True)
    p_boot.add_argument("--B", type=int, required=True)
    p_boot.add_argument("--out", required=True)
    p_boot.add_argument("--gibbs-iters", type=int, default=500)
    p_boot.add_argument("--burnin", type=int, default=50)
    _add_common(p_boot)
    p_boot.set_defaults(func=cmd_bootstrap)

    p_sim = sub.add_parser("simulate", help="simulation studies")
    sim_sub = p_sim.add_subparsers(dest="study", required=True)

    p_mb = sim_sub.add_parser("model-based", help="model-generated replicates")
    p_mb.add_argument("--out", required=True)
    p_mb.add_argument("--thresholds", help="required unless --model is given")
    p_mb.add_argument("--model", help="fitted model JSON supplying the true hyperparameters")
    p_mb.add_argument("--m", type=int, default=100)
    p_mb.add_argument("--R", type=int, default=100)
    p_mb.add_argument("--N-pop", type=int, default=1000)
    p_mb.add_argument("--n-pattern", default="10,50,100,150,200")
    p_mb.add_argument("--shift", type=float, default=0.0)
    p_mb.add_argument("--gibbs-iters", type=int, default=500)
    p_mb.add_argument("--burnin", type=int, default=50)
    _add_fit_options(p_mb)
    _add_common(p_mb)
    p_mb.set_defaults(func=cmd_simulate_model_based)

    p_db = sim_sub.add_parser("design-based", help="fixed-population repeated sampling")
    p_db.add_argument("--out", required=True)
    p_db.add_argument("--population", required=True, help="unit-level CSV: domain_id,value")
    p_db.add_argument("--covariates", required=True, help="domain CSV: domain_id,x_1..x_p")
    p_db.add_argument("--thresholds", required=True)
    p_db.add_argument("--shift-c", type=float, required=True)
    p_db.add_argument("--n", type=int, required=True, help="sample size per domain")
    p_db.add_argument("--pop-size", type=int, default=None)
    p_db.add_argument("--R", type=int, default=100)
    p_db.add_argument("--gibbs-iters", type=int, default=500)
    p_db.add_argument("--burnin", type=int, default=50)
    _add_fit_options(p_db)
    _add_common(p_db)
    p_db.set_defaults(func=cmd_simulate_design_based)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
