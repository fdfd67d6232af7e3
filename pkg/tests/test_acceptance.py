"""Exit criteria of the build.  Each test prints one PASS/FAIL line and the
same lines are repeated in the pytest terminal summary."""

import csv
import filecmp
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from driftlasso.config import RunConfig
from driftlasso.estimators import SolverConfig, fit_lasso, lambda_max, soft_threshold
from driftlasso.experiments import cmd_figure1, cmd_scaling_study, cmd_verify
from driftlasso.likelihood import LikelihoodEvaluator, neg_log_likelihood, nll_gradient
from driftlasso.models import GeneralLinear, OrnsteinUhlenbeck, vect
from driftlasso.sim import SimConfig, simulate
from driftlasso.theory import (
    BoundInputs,
    concentration_mc,
    error_bound_calculators,
    lambda1_T1_calculators,
    ou_time_average_variance,
)

from conftest import ACCEPTANCE_LINES, family_cases

pytestmark = pytest.mark.acceptance


def report(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


# -- 1 -----------------------------------------------------------------------


def test_criterion_1_gradient_matches_finite_differences():
    start = time.perf_counter()
    worst = {}
    for name, model, sampler in family_cases():
        rng = np.random.default_rng(100)
        errs = []
        for case in range(100):
            path = simulate(model, sampler(rng), SimConfig(T=2.0, steps_per_unit=50, seed=case))
            ev = LikelihoodEvaluator(model, path)
            theta = sampler(rng)
            g = nll_gradient(ev, theta)
            h = 1e-6 * np.maximum(1.0, np.abs(theta))
            fd = np.empty(model.p)
            for j in range(model.p):
                e = np.zeros(model.p)
                e[j] = h[j]
                fd[j] = (neg_log_likelihood(ev, theta + e) - neg_log_likelihood(ev, theta - e)) / (2 * h[j])
            errs.append(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-300))
        worst[name] = max(errs)
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) < 1e-5 and elapsed < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(1, ok, f"max relative error per family: {detail}; {elapsed:.1f}s")


# -- 2 -----------------------------------------------------------------------


def test_criterion_2_likelihood_decomposition():
    start = time.perf_counter()
    worst = 0.0
    cases = family_cases()
    for k in range(50):
        name, model, sampler = cases[k % len(cases)]
        rng = np.random.default_rng(200 + k)
        theta0, theta = sampler(rng), sampler(rng)
        path = simulate(model, theta0, SimConfig(T=10.0, seed=k))
        ev = LikelihoodEvaluator(model, path)
        L = neg_log_likelihood(ev, theta)
        b, b0 = model.drift(theta, ev.X), model.drift(theta0, ev.X)
        mart = np.sum(b * path.dW) / ev.T
        dist = np.sum((b - b0) ** 2) * ev.dt / ev.T
        norm0 = np.sum(b0 * b0) * ev.dt / ev.T
        worst = max(worst, abs(L - (mart + 0.5 * (dist - norm0))) / (1 + abs(L)))
    elapsed = time.perf_counter() - start
    report(2, worst < 1e-10 and elapsed < 30,
           f"max |error| / (1 + |L_T|) = {worst:.1e} over 50 paths; {elapsed:.1f}s")


# -- 3 -----------------------------------------------------------------------


def _coordinate_descent(ev, lam, sweeps=100000):
    c, g, Q = ev.quadratic()
    theta = np.zeros(len(g))
    for _ in range(sweeps):
        old = theta.copy()
        for j in range(len(g)):
            r = g[j] + Q[j] @ theta - Q[j, j] * theta[j]
            theta[j] = soft_threshold(-r, lam) / Q[j, j]
        if np.max(np.abs(theta - old)) < 1e-15:
            break
    return c + g @ theta + 0.5 * theta @ Q @ theta + lam * np.abs(theta).sum()


def test_criterion_3_solver_matches_coordinate_descent():
    start = time.perf_counter()
    gaps, zero_ok = [], True
    for k in range(20):
        rng = np.random.default_rng(300 + k)
        if k % 2 == 0:
            d = 3 + k % 5
            model = OrnsteinUhlenbeck(d)
            A = np.eye(d) * rng.uniform(1, 2) + 0.3 * rng.standard_normal((d, d)) * (rng.uniform(size=(d, d)) < 0.3)
            theta0 = vect(A)
        else:
            d = 10 + 4 * (k % 5)
            model = GeneralLinear.coordinate(d)
            theta0 = rng.uniform(0, 1, d) * (rng.uniform(size=d) < 0.3)
        ev = LikelihoodEvaluator(model, simulate(model, theta0, SimConfig(T=20.0, seed=k)))
        top = lambda_max(ev)
        lam = top * rng.uniform(0.01, 0.5)
        res = fit_lasso(ev, lam, SolverConfig(tol=1e-12))
        gaps.append(res.objective - _coordinate_descent(ev, lam))
        zero_ok &= bool(np.all(fit_lasso(ev, top).theta_hat == 0))
        zero_ok &= bool(np.all(fit_lasso(ev, 3 * top).theta_hat == 0))
    elapsed = time.perf_counter() - start
    worst = max(abs(v) for v in gaps)
    report(3, worst <= 1e-8 and zero_ok and elapsed < 120,
           f"max |objective gap| {worst:.1e} on 20 instances, exact zero at lambda >= lambda_max: {zero_ok}; {elapsed:.1f}s")


# -- 4 -----------------------------------------------------------------------


def test_criterion_4_basic_inequality(tmp_path):
    start = time.perf_counter()
    cfg = RunConfig.from_dict({
        "model": {"family": "ou", "d": 5},
        "sim": {"T": 20, "steps_per_unit": 100, "seed": 0},
        "experiment": {"name": "basic", "trials": 100, "output_dir": str(tmp_path), "re_directions": 200},
    })
    summary = cmd_verify(cfg)
    elapsed = time.perf_counter() - start
    ok = summary["certified_trials"] == 100 and summary["basic_frequency"] == 1.0 and elapsed < 300
    report(4, ok, f"basic inequality held in {summary['basic_frequency'] * summary['certified_trials']:.0f}/"
                  f"{summary['certified_trials']} certified trials (p=25, T=20); "
                  f"oracle inequality frequency {summary['oracle_frequency']:.2f} "
                  f"(reference {summary['oracle_reference']:.2f}, recorded only); {elapsed:.1f}s")


# -- 5 -----------------------------------------------------------------------


def test_criterion_5_stationary_variance():
    start = time.perf_counter()
    a = 1.0
    target = 1.0 / (2 * a)  # Lyapunov: 2 a v = 1
    path = simulate(OrnsteinUhlenbeck(1), np.array([a]), SimConfig(T=2000.0, steps_per_unit=100, seed=0, x0="exact"))
    var = float(np.var(path.states))
    elapsed = time.perf_counter() - start
    report(5, abs(var - target) <= 0.02 and elapsed < 60,
           f"sample variance {var:.4f} vs {target} (tolerance 0.02, seed 0); {elapsed:.1f}s")


# -- 6 -----------------------------------------------------------------------


def _figure1_config(out, trials, workers=1):
    return RunConfig.from_dict({
        "model": {"family": "sine_quadratic", "d": 10},
        "sim": {"T": 20, "steps_per_unit": 100, "seed": 0},
        "experiment": {"name": "figure1", "trials": trials, "workers": workers,
                       "output_dir": str(out), "sparsity": 0.35, "lambda_rule": "cv"},
    })


@pytest.mark.slow
def test_criterion_6_figure1_support(tmp_path):
    start = time.perf_counter()
    rows = cmd_figure1(_figure1_config(tmp_path, 20))
    elapsed = time.perf_counter() - start
    lasso = [r for r in rows if r["estimator"] == "lasso"]
    mle = [r for r in rows if r["estimator"] == "mle"]
    p = 100
    lasso_sparse = sum(r["size_hat"] < p for r in lasso)
    mle_dense = sum(r["size_hat"] == p for r in mle)
    med_l, med_m = np.median([r["l2_err"] for r in lasso]), np.median([r["l2_err"] for r in mle])
    ok = len(lasso) == 20 and lasso_sparse >= 18 and mle_dense == 20 and med_l <= med_m and elapsed < 900
    report(6, ok, f"lasso support < 100 in {lasso_sparse}/20, MLE support = 100 in {mle_dense}/20, "
                  f"median l2 lasso {med_l:.3f} vs MLE {med_m:.3f}; {elapsed:.1f}s")


# -- 7 -----------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_7_rate_and_calculators(tmp_path, oracles):
    start = time.perf_counter()
    cfg = RunConfig.from_dict({
        "model": {"family": "general_linear", "d": 10, "basis": "coordinate"},
        "sim": {"T": 20, "steps_per_unit": 100, "seed": 0},
        "experiment": {"name": "scaling", "trials": 50, "output_dir": str(tmp_path), "s0": 3,
                       "signs": "positive", "lambda_rule": "cv",
                       "T_grid": [25, 50, 100, 200, 400]},
    })
    result = cmd_scaling_study(cfg)
    slope, se = result["slope"], result["slope_se"]
    elapsed = time.perf_counter() - start

    worst = 0.0
    for row in oracles["error_bounds"]:
        out = error_bound_calculators(BoundInputs(s0=row["s0"], lam=row["lam"], gamma=row["gamma"],
                                                  k=row["k"], M_inf=row["M_inf"], l_min=row["l_min"]))
        for key, got in zip(("l2", "l1", "l0"), out):
            worst = max(worst, abs(got - float(row[key])) / abs(float(row[key])))
    for row in oracles["lambda1"]:
        got = lambda1_T1_calculators(BoundInputs(p=row["p"], T=row["T"], eps=row["eps"], Delta1=row["Delta1"],
                                                 gamma_43=row["gamma_43"], C=row["C"])).lambda1
        worst = max(worst, abs(got - float(row["lambda1"])) / float(row["lambda1"]))
    for row in oracles["T1"]:
        got = lambda1_T1_calculators(BoundInputs(s0=row["s0"], p=row["p"], T=1.0, C=row["C"], l_min=row["l_min"],
                                                 Delta1=1.0, gamma_43=0.0, Delta2=row["Delta2"],
                                                 gamma_2=row["gamma_2"], c0=row["c0"], eps0=row["eps0"])).T1
        worst = max(worst, abs(got - float(row["T1"])) / float(row["T1"]))
    ok = -0.65 <= slope <= -0.35 and worst <= 1e-12 and elapsed < 1800
    report(7, ok, f"log-log slope {slope:.3f} (se {se:.3f}) for p=10, s0=3, 50 trials/T; "
                  f"calculators vs arithmetic oracle max rel error {worst:.1e}; {elapsed:.1f}s")


# -- 8 -----------------------------------------------------------------------


def test_criterion_8_concentration():
    start = time.perf_counter()
    T, mu = 50.0, [0.5, 1.0, 2.0]
    var = ou_time_average_variance(1.0, T)
    ident = lambda X: X[:, 0]  # noqa: E731
    reps = [concentration_mc(OrnsteinUhlenbeck(1), np.array([1.0]), ident, 1.0, T, 2000, mu, rng_seed=seed,
                             mean_f=0.0, x0="exact", antithetic=True, steps_per_unit=100)
            for seed in (1, 2)]
    elapsed = time.perf_counter() - start
    expected = np.exp(np.asarray(mu) ** 2 * var / 2)
    zs = [np.max(np.abs(r.empirical_mgf - expected) / r.mgf_se) for r in reps]
    C1, C2 = reps[0].calibrated_C, reps[1].calibrated_C
    stable = math.isfinite(C1) and math.isfinite(C2) and abs(C1 - C2) <= 0.2 * max(C1, C2)
    ok = max(zs) <= 3 and stable and elapsed < 600
    report(8, ok, f"max |MGF - oracle| / se = {max(zs):.2f} over two batches; calibrated C "
                  f"{C1:.3f} and {C2:.3f}; {elapsed:.1f}s")


# -- 9 -----------------------------------------------------------------------


def _csv_files(root):
    return sorted(p.relative_to(root) for p in Path(root).rglob("*.csv"))


@pytest.mark.slow
def test_criterion_9_determinism_across_workers(tmp_path):
    start = time.perf_counter()
    outs = {}
    for tag, workers in (("w1", 1), ("w1_again", 1), ("w8", 8)):
        outs[tag] = tmp_path / tag
        cmd_figure1(_figure1_config(outs[tag], 4, workers))
    elapsed = time.perf_counter() - start
    files = _csv_files(outs["w1"])
    same_set = all(_csv_files(o) == files for o in outs.values())
    identical = same_set and all(filecmp.cmp(outs["w1"] / f, outs[t] / f, shallow=False)
                                 for t in ("w1_again", "w8") for f in files)
    resolved = [json.loads((o / "config.resolved.json").read_text())["config_hash"] for o in outs.values()]
    ok = identical and len(set(resolved)) == 1 and elapsed < 1800
    report(9, ok, f"{len(files)} CSV files byte-identical across runs at 1, 1 and 8 workers: {identical}; "
                  f"{elapsed:.1f}s")
