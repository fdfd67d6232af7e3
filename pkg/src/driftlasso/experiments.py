"""Experiment drivers behind the command-line interface.

Each driver takes a resolved :class:`RunConfig`, fans trials out to worker
processes keyed by (seed, trial) and writes CSV/JSON files from the parent
process in trial order, so outputs do not depend on the worker count.
"""

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .config import ConfigError
from .estimators import (
    CVFailed,
    cross_validate_lambda,
    default_lambda_grid,
    fit_adaptive_lasso,
    fit_lasso,
    fit_mle,
)
from .likelihood import LikelihoodError, LikelihoodEvaluator
from .models import OrnsteinUhlenbeck, SineQuadratic, unvect, vect
from .sim import (
    SimConfig,
    SimulationDiverged,
    read_path_csv,
    simulate,
    subpath,
    substream,
    write_path_csv,
)
from .theory import (
    ConeSpec,
    basic_inequality_check,
    concentration_mc,
    lmin_error_bounds,
    error_bound_calculators,
    lambda1_T1_calculators,
    oracle_inequality_check,
    re_constant_estimate,
    support_metrics,
)

__all__ = [
    "AllTrialsFailed",
    "ThresholdNotMet",
    "draw_sparse_matrix",
    "draw_true_parameter",
    "choose_lambda",
    "run_trials",
    "cmd_simulate",
    "cmd_fit",
    "cmd_cv",
    "cmd_figure1",
    "cmd_scaling_study",
    "cmd_verify",
    "read_metrics",
    "aggregate_metrics",
]

# tags for auxiliary random streams of a trial
_TAG_PARAM = 1
_TAG_RE = 2

# solver failures that are recorded per trial instead of aborting a run
_NUMERICAL = (SimulationDiverged, LikelihoodError, CVFailed, FloatingPointError)


class AllTrialsFailed(RuntimeError):
    pass


class ThresholdNotMet(RuntimeError):
    def __init__(self, what, value, threshold):
        self.value = value
        super().__init__(f"{what} = {value:.4f} below threshold {threshold}")


# ---------------------------------------------------------------------------
# true parameters
# ---------------------------------------------------------------------------


def _magnitudes(rng, n, exp):
    lo, hi = exp.magnitude
    vals = rng.uniform(lo, hi, n)
    if exp.signs == "random":
        vals *= rng.choice([-1.0, 1.0], n)
    return vals


def draw_sparse_matrix(rng, d, exp):
    """Sparse d x d matrix with max(d, round(sparsity d^2)) nonzero entries
    and a positive definite symmetric part.

    The diagonal is always in the support.  Off-diagonal entries sit at
    uniformly chosen positions with magnitudes U[low, high] (random signs
    unless ``signs='positive'``).  Diagonal entries start at U[low, high];
    if the smallest eigenvalue of the symmetric part is then below ``low``,
    the whole diagonal is raised by the difference.
    """
    count = max(d, int(round(exp.sparsity * d * d)))
    off = [(i, j) for j in range(d) for i in range(d) if i != j]
    picks = rng.choice(len(off), size=count - d, replace=False)
    A = np.zeros((d, d))
    vals = _magnitudes(rng, len(picks), exp)
    for v, k in zip(vals, np.sort(picks)):
        A[off[k]] = v
    lo, hi = exp.magnitude
    A[np.diag_indices(d)] = rng.uniform(lo, hi, d)
    low = np.linalg.eigvalsh(0.5 * (A + A.T))[0]
    if low < lo:
        A[np.diag_indices(d)] += lo - low
    return A


def draw_true_parameter(model, seed, trial, exp):
    """theta_0 for a trial, from a stream independent of the path noise."""
    rng = substream(seed, trial, _TAG_PARAM)
    if isinstance(model, (SineQuadratic, OrnsteinUhlenbeck)):
        return vect(draw_sparse_matrix(rng, model.d, exp))
    s0 = exp.s0 if exp.s0 is not None else int(round(exp.sparsity * model.p))
    s0 = min(max(s0, 1), model.p)
    theta = np.zeros(model.p)
    theta[np.sort(rng.choice(model.p, size=s0, replace=False))] = _magnitudes(rng, s0, exp)
    return theta


def _true_theta(cfg, model, theta_cfg, trial):
    if theta_cfg is not None:
        return theta_cfg
    return draw_true_parameter(model, cfg.sim.seed, trial, cfg.experiment)


def _sim_config(cfg, T=None, keep_dW=True):
    s = cfg.sim
    return SimConfig(T=s.T if T is None else T, steps_per_unit=s.steps_per_unit, seed=s.seed,
                     burn_in=s.burn_in, x0=s.x0, keep_dW=keep_dW)


# ---------------------------------------------------------------------------
# penalty choice
# ---------------------------------------------------------------------------


def _lambda_grid(ev_train, block):
    if block.values is not None:
        return np.asarray(block.values, dtype=float)
    top = block.max if block.max is not None else None
    if top is None:
        if block.min is None and block.log_spaced:
            return default_lambda_grid(ev_train, block.count, block.ratio)
        top = float(np.max(np.abs(ev_train.value_and_grad(np.zeros(ev_train.model.p))[1])))
    bottom = block.min if block.min is not None else top * block.ratio
    if block.log_spaced:
        return np.geomspace(top, bottom, block.count)
    return np.linspace(top, bottom, block.count)


def choose_lambda(path, model, cfg):
    """(lambda, CVResult or None) according to ``experiment.lambda_rule``."""
    exp = cfg.experiment
    if exp.lambda_rule == "fixed":
        return float(exp.lam), None
    if exp.lambda_rule == "theory":
        return exp.lambda_scale * math.sqrt(math.log(model.p) / path.T), None
    t0, T = path.times[0], path.T
    train = subpath(path, t0 + exp.train[0] * T, t0 + exp.train[1] * T)
    grid = _lambda_grid(LikelihoodEvaluator(model, train), cfg.lambda_grid)
    cv = cross_validate_lambda(path, model, grid, cfg.solver, train=exp.train,
                               validation=exp.validation)
    return cv.lambda0, cv


# ---------------------------------------------------------------------------
# trial fan-out
# ---------------------------------------------------------------------------


def _call(job):
    fn, cfg, trial = job
    with threadpool_limits(1):
        return fn(cfg, trial)


def run_trials(fn, cfg, trials):
    """[fn(cfg, t) for t in trials], in order, on ``experiment.workers`` processes."""
    trials = list(trials)
    jobs = [(fn, cfg, t) for t in trials]
    workers = min(cfg.experiment.workers, max(len(jobs), 1))
    if workers <= 1:
        return [_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, jobs))


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_rows(filename, rows, columns=None):
    columns = columns or list(rows[0])
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
    return Path(filename)


def write_matrix(filename, M):
    """d rows of d comma-separated values, row i holding A[i, :]; no header."""
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(M):
            w.writerow([repr(float(v)) for v in row])
    return Path(filename)


def write_json(filename, obj):
    with open(filename, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return Path(filename)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o)}")


def _prepare(cfg, command):
    out = Path(cfg.experiment.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = cfg.to_dict()
    h = cfg.hash()
    exp = resolved["experiment"]
    execution = {"workers": exp.pop("workers"), "output_dir": exp.pop("output_dir")}
    write_json(out / "config.resolved.json",
               {"command": command, "config": resolved, "config_hash": h, "execution": execution})
    return out, h


def _mean_se(values):
    v = np.asarray([x for x in values if x is not None and np.isfinite(x)], dtype=float)
    if len(v) == 0:
        return math.nan, math.nan
    se = v.std(ddof=1) / math.sqrt(len(v)) if len(v) > 1 else math.nan
    return float(v.mean()), float(se)


# ---------------------------------------------------------------------------
# simulate / fit / cv
# ---------------------------------------------------------------------------


def _simulate_trial(cfg, trial):
    model, theta = cfg.build_model()
    theta = _true_theta(cfg, model, theta, trial)
    path = simulate(model, theta, _sim_config(cfg), trial=trial)
    path.meta["theta"] = [float(v) for v in theta]
    return path


def cmd_simulate(cfg):
    out, h = _prepare(cfg, "simulate")
    n = cfg.experiment.trials
    paths = run_trials(_simulate_trial, cfg, range(n))
    files = []
    for k, path in enumerate(paths):
        path.meta["config_hash"] = h
        name = "path.csv" if n == 1 else f"path_{k:04d}.csv"
        files.append(write_path_csv(path, out / name)[0])
    return files


def _load_or_simulate(cfg):
    model, theta = cfg.build_model()
    if cfg.experiment.path is not None:
        return model, theta, read_path_csv(cfg.experiment.path)
    theta = _true_theta(cfg, model, theta, 0)
    return model, theta, simulate(model, theta, _sim_config(cfg), trial=0)


def cmd_fit(cfg):
    out, h = _prepare(cfg, "fit")
    model, theta0, path = _load_or_simulate(cfg)
    ev = LikelihoodEvaluator(model, path)
    lam, cv = choose_lambda(path, model, cfg)
    warm = None if cv is None else cv.best.theta_hat
    fits = {"mle": fit_mle(ev, cfg.solver), "lasso": fit_lasso(ev, lam, cfg.solver, warm)}
    if cfg.experiment.adaptive_alpha is not None:
        fits["adaptive"] = fit_adaptive_lasso(ev, lam, cfg.experiment.adaptive_alpha,
                                              fits["lasso"].theta_hat, cfg.solver)
    report = {"config_hash": h, "lambda": lam, "estimates": {}}
    for name, res in fits.items():
        rec = res.record()
        if theta0 is not None:
            rec["metrics"] = support_metrics(res.theta_hat, theta0, cfg.experiment.zero_tol).as_dict()
        report["estimates"][name] = rec
    write_json(out / "fit.json", report)
    return report


def cmd_cv(cfg):
    out, h = _prepare(cfg, "cv")
    model, _, path = _load_or_simulate(cfg)
    if cfg.experiment.lambda_rule != "cv":
        cfg = replace(cfg, experiment=replace(cfg.experiment, lambda_rule="cv"))
    lam, cv = choose_lambda(path, model, cfg)
    write_rows(out / "cv_table.csv", [dict(r, config_hash=h) for r in cv.table],
               ["lambda", "validation_loss", "converged", "iterations", "nnz", "config_hash"])
    write_json(out / "cv.json", {"config_hash": h, "lambda0": lam,
                                 "estimate": cv.best.record()})
    return cv


# ---------------------------------------------------------------------------
# sparse matrix recovery: true matrix vs MLE vs Lasso
# ---------------------------------------------------------------------------

_METRIC_COLUMNS = ["trial", "seed", "estimator", "l1_err", "l2_err", "support_precision",
                   "support_recall", "f1", "size_hat", "p", "lambda", "converged", "iterations",
                   "stationarity_residual", "status", "config_hash"]


def _figure1_trial(cfg, trial):
    model, theta_cfg = cfg.build_model()
    if not isinstance(model, SineQuadratic):
        raise ConfigError("figure1 needs the sine_quadratic model family")
    exp = cfg.experiment
    theta0 = _true_theta(cfg, model, theta_cfg, trial)
    result = {"trial": trial, "theta0": theta0, "fits": {}, "lambda": None, "status": "ok"}
    try:
        path = simulate(model, theta0, _sim_config(cfg, keep_dW=False), trial=trial)
        lam, cv = choose_lambda(path, model, cfg)
        result["lambda"] = lam
        ev = LikelihoodEvaluator(model, path)
        warm = None if cv is None else cv.best.theta_hat
        result["fits"]["mle"] = fit_mle(ev, cfg.solver)
        result["fits"]["lasso"] = fit_lasso(ev, lam, cfg.solver, warm)
        if exp.adaptive_alpha is not None:
            result["fits"]["adaptive"] = fit_adaptive_lasso(
                ev, lam, exp.adaptive_alpha, result["fits"]["lasso"].theta_hat, cfg.solver)
    except _NUMERICAL as exc:
        result["status"] = f"failed: {exc}"
    return result


def cmd_figure1(cfg):
    exp = cfg.experiment
    out, h = _prepare(cfg, "figure1")
    d = cfg.build_model()[0].d
    results = run_trials(_figure1_trial, cfg, range(exp.trials))
    rows = []
    for res in results:
        k = res["trial"]
        where = out if exp.trials == 1 else out / f"trial_{k:04d}"
        where.mkdir(exist_ok=True)
        write_matrix(where / "A_true.csv", unvect(res["theta0"], d))
        names = {"mle": "A_mle.csv", "lasso": "A_lasso.csv", "adaptive": "A_adaptive.csv"}
        for est in ("mle", "lasso", "adaptive"):
            fit = res["fits"].get(est)
            if est == "adaptive" and exp.adaptive_alpha is None:
                continue
            row = {"trial": k, "seed": cfg.sim.seed, "estimator": est, "p": d * d,
                   "lambda": res["lambda"], "status": res["status"], "config_hash": h}
            if fit is not None:
                write_matrix(where / names[est], unvect(fit.theta_hat, d))
                row.update(support_metrics(fit.theta_hat, res["theta0"], exp.zero_tol).as_dict())
                row.update(converged=fit.converged, iterations=fit.iterations,
                           stationarity_residual=fit.stationarity_residual)
            rows.append(row)
    write_rows(out / "metrics.csv", rows, _METRIC_COLUMNS)
    if exp.trials > 1:
        summary = []
        for est in sorted({r["estimator"] for r in rows}):
            sub = [r for r in rows if r["estimator"] == est and "l2_err" in r]
            entry = {"estimator": est, "n": len(sub), "config_hash": h}
            for col in ("l1_err", "l2_err", "f1", "size_hat"):
                entry[f"mean_{col}"], entry[f"se_{col}"] = _mean_se([r[col] for r in sub])
                entry[f"median_{col}"] = float(np.median([r[col] for r in sub])) if sub else math.nan
            summary.append(entry)
        write_rows(out / "summary.csv", summary)
    if all(r["status"] != "ok" for r in results):
        raise AllTrialsFailed("; ".join(r["status"] for r in results))
    return rows


# ---------------------------------------------------------------------------
# scaling study: Lasso error against T
# ---------------------------------------------------------------------------


def _scaling_trial(cfg, job):
    T, trial = job
    model, theta_cfg = cfg.build_model()
    theta0 = _true_theta(cfg, model, theta_cfg, 0)
    row = {"T": T, "trial": trial}
    try:
        path = simulate(model, theta0, _sim_config(cfg, T=T, keep_dW=False), trial=trial)
        lam, _ = choose_lambda(path, model, cfg)
        fit = fit_lasso(LikelihoodEvaluator(model, path), lam, cfg.solver)
        m = support_metrics(fit.theta_hat, theta0, cfg.experiment.zero_tol)
        row.update(lam=lam, l2_err=m.l2_err, l1_err=m.l1_err, f1=m.f1,
                   converged=fit.converged, excluded=not fit.converged)
    except _NUMERICAL as exc:
        row.update(excluded=True, status=str(exc))
    return row


def log_log_slope(T, err):
    """OLS slope of log err on log T with its standard error."""
    x, y = np.log(np.asarray(T, float)), np.log(np.asarray(err, float))
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    if dof > 0:
        cov = (resid @ resid / dof) * np.linalg.inv(A.T @ A)
        se = float(math.sqrt(cov[1, 1]))
    else:
        se = math.nan
    return float(coef[1]), se, float(coef[0])


def cmd_scaling_study(cfg):
    exp = cfg.experiment
    model, _ = cfg.build_model()
    if not model.linear_in_theta:
        raise ConfigError("scaling-study needs a model linear in theta")
    out, h = _prepare(cfg, "scaling-study")
    # trial keys are disjoint across horizons so the points are independent
    jobs = [(float(T), i * 1_000_000 + k) for i, T in enumerate(exp.T_grid) for k in range(exp.trials)]
    rows = run_trials(_scaling_trial, cfg, jobs)
    cols = ["T", "trial", "lam", "l2_err", "l1_err", "f1", "converged", "excluded", "status",
            "config_hash"]
    write_rows(out / "scaling_trials.csv", [dict(r, config_hash=h) for r in rows], cols)
    summary = []
    for T in exp.T_grid:
        sub = [r["l2_err"] for r in rows if r["T"] == float(T) and not r["excluded"]]
        mean, se = _mean_se(sub)
        summary.append({"T": float(T), "n": len(sub), "mean_l2_err": mean, "se_l2_err": se,
                        "config_hash": h})
    write_rows(out / "scaling_summary.csv", summary)
    live = [s for s in summary if s["n"] > 0]
    slope, se, icpt = log_log_slope([s["T"] for s in live], [s["mean_l2_err"] for s in live])
    result = {"slope": slope, "slope_se": se, "intercept": icpt, "reference_slope": -0.5,
              "config_hash": h}
    write_rows(out / "scaling_slope.csv", [result])
    return result


# ---------------------------------------------------------------------------
# verify: inequality frequencies and concentration
# ---------------------------------------------------------------------------


def _verify_trial(cfg, trial):
    model, theta_cfg = cfg.build_model()
    exp, b = cfg.experiment, cfg.bounds
    theta0 = _true_theta(cfg, model, theta_cfg, 0)
    row = {"trial": trial}
    try:
        path = simulate(model, theta0, _sim_config(cfg), trial=trial)
        lam, _ = choose_lambda(path, model, cfg)
        ev = LikelihoodEvaluator(model, path)
        fit = fit_lasso(ev, lam, cfg.solver)
        basic = basic_inequality_check(ev, fit.theta_hat, theta0, lam, theta0)
        s0 = int(np.count_nonzero(theta0))
        cone = ConeSpec(max(s0, 1), 3.0 + 4.0 / b.gamma)
        k = re_constant_estimate(path, model, cone, exp.re_directions,
                                 rng_seed=int(substream(cfg.sim.seed, trial, _TAG_RE).integers(2**63))).k
        inputs = replace(b, lam=lam, k=k, s0=max(s0, 1), p=model.p, T=path.T)
        oracle = oracle_inequality_check(ev, fit.theta_hat, theta0, inputs, theta0)
        row.update(lam=lam, certified=fit.converged, residual=fit.stationarity_residual,
                   basic_lhs=basic.lhs, basic_rhs=basic.rhs, basic_holds=basic.holds,
                   k=k, oracle_lhs=oracle.lhs, oracle_rhs=oracle.rhs, oracle_holds=oracle.holds)
    except _NUMERICAL as exc:
        row.update(certified=False, status=str(exc))
    return row


def _bound_rows(b):
    rows = []
    try:
        eb = error_bound_calculators(b)
        rows.append({"quantity": "l2_bound", "value": eb.l2})
        rows.append({"quantity": "l1_bound", "value": eb.l1})
        rows.append({"quantity": "l0_bound", "value": eb.l0})
    except ValueError:
        pass
    try:
        cb = lmin_error_bounds(b)
        rows += [{"quantity": "l2_bound_lmin", "value": cb.l2},
                 {"quantity": "l1_bound_lmin", "value": cb.l1}]
    except ValueError:
        pass
    try:
        lt = lambda1_T1_calculators(b)
        rows += [{"quantity": "lambda1", "value": lt.lambda1}, {"quantity": "T1", "value": lt.T1},
                 {"quantity": "c0_used", "value": lt.c0}, {"quantity": "eps0_used", "value": lt.eps0}]
    except ValueError:
        pass
    return rows


def cmd_verify(cfg):
    exp, b = cfg.experiment, cfg.bounds
    model, _ = cfg.build_model()
    out, h = _prepare(cfg, "verify")
    rows = run_trials(_verify_trial, cfg, range(exp.trials))

    certified = [r for r in rows if r.get("certified")]
    basic_freq = float(np.mean([r["basic_holds"] for r in certified])) if certified else math.nan
    oracle_done = [r for r in rows if "oracle_holds" in r]
    oracle_freq = float(np.mean([r["oracle_holds"] for r in oracle_done])) if oracle_done else math.nan
    reference = 1.0 - 2.0 * b.eps

    basic_rows = [{"trial": r["trial"], "lhs": r.get("basic_lhs"), "rhs": r.get("basic_rhs"),
                   "holds": r.get("basic_holds"), "certified": r.get("certified")} for r in rows]
    basic_rows.append({"trial": "summary", "holds": basic_freq, "certified": len(certified)})
    write_rows(out / "basic_inequality.csv", [dict(r, config_hash=h) for r in basic_rows],
               ["trial", "lhs", "rhs", "holds", "certified", "config_hash"])
    oracle_rows = [{"trial": r["trial"], "lhs": r.get("oracle_lhs"), "rhs": r.get("oracle_rhs"),
                    "holds": r.get("oracle_holds"), "k": r.get("k"), "lambda": r.get("lam")}
                   for r in rows]
    oracle_rows.append({"trial": "summary", "holds": oracle_freq, "reference": reference})
    write_rows(out / "oracle_inequality.csv", [dict(r, config_hash=h) for r in oracle_rows],
               ["trial", "lhs", "rhs", "holds", "k", "lambda", "reference", "config_hash"])

    summary = {"config_hash": h, "basic_frequency": basic_freq, "certified_trials": len(certified),
               "oracle_frequency": oracle_freq, "oracle_reference": reference}
    bound_rows = _bound_rows(b)
    if bound_rows:
        write_rows(out / "bounds.csv", [dict(r, config_hash=h) for r in bound_rows],
                   ["quantity", "value", "config_hash"])

    if exp.concentration_trials > 0:
        # additive functional f(x) = x_1 (Lipschitz constant 1); the drift is
        # linear so the stationary mean of X is 0
        theta0 = _true_theta(cfg, model, cfg.build_model()[1], 0)
        if model.drift_matrix(theta0) is None:
            raise ConfigError("the concentration check needs a drift linear in x")
        rep = concentration_mc(model, theta0, lambda x: x[:, 0], 1.0, exp.concentration_T,
                               exp.concentration_trials, exp.mu_grid, cfg.sim.seed, C=None,
                               mean_f=0.0, steps_per_unit=cfg.sim.steps_per_unit,
                               x0="exact", antithetic=exp.antithetic)
        crow = [dict(r, config_hash=h) for r in rep.rows()]
        calibrated = np.exp(rep.calibrated_C * rep.mu ** 2 / exp.concentration_T)
        for r, cb in zip(crow, calibrated):
            r["calibrated_bound"] = float(cb)
            r["holds"] = bool(r["empirical_mgf"] <= cb * (1 + 1e-12))
        write_rows(out / "concentration.csv", crow,
                   ["mu", "empirical_mgf", "mgf_se", "log_mgf", "calibrated_bound", "holds",
                    "config_hash"])
        summary.update(calibrated_C=rep.calibrated_C, tail_a1=rep.tail_a1, tail_a2=rep.tail_a2)

    write_json(out / "verify_summary.json", summary)
    if certified and basic_freq < exp.threshold:
        raise ThresholdNotMet("basic inequality frequency", basic_freq, exp.threshold)
    return summary


# ---------------------------------------------------------------------------
# re-aggregation
# ---------------------------------------------------------------------------


def read_metrics(filename):
    with open(filename, newline="") as fh:
        return list(csv.DictReader(fh))


def aggregate_metrics(filenames):
    """Concatenate metrics files from several runs of the same configuration.

    Raises :class:`ConfigError` if their config hashes differ.
    """
    rows, hashes = [], set()
    for name in filenames:
        part = read_metrics(name)
        hashes |= {r["config_hash"] for r in part}
        rows += part
    if len(hashes) > 1:
        raise ConfigError(f"config hash mismatch across reports: {sorted(hashes)}")
    return rows
