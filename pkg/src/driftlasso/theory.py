"""Executable checks for the Lasso error analysis: cone membership, the basic
and oracle inequalities, closed-form bound calculators, a restricted
eigenvalue probe, a Monte Carlo test of exponential concentration for
additive functionals, and support-recovery metrics.

Everything here is a diagnostic.  Only the basic inequality is expected to
hold on every trial (it follows from optimality of the fit); the rest are
reported as frequencies or calibrated constants.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .likelihood import (
    LikelihoodEvaluator,
    drift_distance_sq,
    stochastic_term_G,
)
from .sim import SimConfig, _euler, _stationary_cov, simulate_batch, trial_rng

__all__ = [
    "ConeSpec",
    "BoundInputs",
    "DEFAULT_L",
    "cone_membership",
    "basic_inequality_check",
    "oracle_inequality_check",
    "oracle_rhs_coefficient",
    "error_bound_calculators",
    "lmin_error_bounds",
    "lambda1_T1_calculators",
    "re_constant_estimate",
    "gram_matrix",
    "concentration_mc",
    "ou_time_average_variance",
    "support_metrics",
    "m_infinity_estimate",
]

# constant of the chaining tail bound used by the deviation estimates
DEFAULT_L = 16.0 + 2.0 ** (23.0 / 4.0)


@dataclass(frozen=True)
class ConeSpec:
    """C(s, c) = {x != 0 : |x|_1 <= (1 + c) |x restricted to its s largest|_1}."""

    s: int
    c: float

    def __post_init__(self):
        if int(self.s) < 1:
            raise ValueError("cone sparsity s must be >= 1")
        if self.c < 0:
            raise ValueError("cone constant c must be >= 0")


@dataclass
class BoundInputs:
    """Scalars entering the bound calculators.

    The entropy and diameter inputs (Delta1, Delta2, gamma_43, gamma_2) are
    supplied by the user; nothing here computes them.  ``c0`` defaults to
    3 + 4/gamma and ``eps0`` to ``eps``.
    """

    s0: int = 1
    p: int = 1
    T: float = 1.0
    lam: float = 0.0
    gamma: float = 2.0
    k: float | None = None
    l_min: float | None = None
    eps: float = 0.05
    C: float = 1.0
    L: float = DEFAULT_L
    Delta1: float | None = None
    Delta2: float | None = None
    gamma_43: float | None = None
    gamma_2: float | None = None
    c0: float | None = None
    eps0: float | None = None
    M_inf: float | None = None

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    @property
    def c0_value(self):
        return 3.0 + 4.0 / self.gamma if self.c0 is None else float(self.c0)

    @property
    def eps0_value(self):
        return self.eps if self.eps0 is None else float(self.eps0)

    def to_dict(self):
        return asdict(self)


def _need(inputs, *names):
    for name in names:
        v = getattr(inputs, name)
        if v is None or not v > 0:
            raise ValueError(f"{name} must be supplied and positive (got {v!r})")


# ---------------------------------------------------------------------------
# cone
# ---------------------------------------------------------------------------


def top_s_indices(x, s):
    """Indices of the s largest |x_j|; equal magnitudes go to the lowest index."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(-np.abs(x), kind="stable")
    return np.sort(order[: int(s)])


def cone_membership(x, spec):
    x = np.asarray(x, dtype=float)
    if not np.any(x != 0):
        raise ValueError("cone membership is undefined at x = 0")
    top = np.abs(x[top_s_indices(x, spec.s)]).sum()
    return bool(np.abs(x).sum() <= (1.0 + spec.c) * top)


# ---------------------------------------------------------------------------
# inequalities on a simulated path
# ---------------------------------------------------------------------------


class InequalityCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def _l1(v):
    return float(np.abs(np.asarray(v, dtype=float)).sum())


def basic_inequality_check(ev, theta_hat, theta, lam, theta0, tol=1e-9, scale=None):
    """|b_hat - b0|_T^2 <= |b_theta - b0|_T^2 + 2 G(theta, theta_hat)
    + 2 lam (|theta|_1 - |theta_hat|_1).

    The slack is ``tol * scale`` with ``scale`` defaulting to
    1 + |penalised objective at theta_hat|.
    """
    lhs = drift_distance_sq(ev, theta_hat, theta0)
    rhs = (drift_distance_sq(ev, theta, theta0)
           + 2.0 * stochastic_term_G(ev, theta, theta_hat)
           + 2.0 * lam * (_l1(theta) - _l1(theta_hat)))
    if scale is None:
        scale = 1.0 + abs(ev.nll(theta_hat) + lam * _l1(theta_hat))
    return InequalityCheck(lhs, rhs, bool(lhs <= rhs + tol * scale))


def oracle_rhs_coefficient(gamma):
    """4 (gamma + 2)^2 / gamma; minimal (= 32) at gamma = 2."""
    return 4.0 * (gamma + 2.0) ** 2 / gamma


def oracle_inequality_check(ev, theta_hat, theta, inputs, theta0):
    """|b_hat - b0|_T^2 <= (1 + gamma)|b_theta - b0|_T^2 + 4 (gamma+2)^2 s lam^2 / (gamma k^2)
    with s = |theta|_0.  Only expected to hold on a high-probability event."""
    _need(inputs, "k")
    s = int(np.count_nonzero(theta))
    lhs = drift_distance_sq(ev, theta_hat, theta0)
    rhs = ((1.0 + inputs.gamma) * drift_distance_sq(ev, theta, theta0)
           + oracle_rhs_coefficient(inputs.gamma) * s * inputs.lam ** 2 / inputs.k ** 2)
    return InequalityCheck(lhs, rhs, bool(lhs <= rhs))


# ---------------------------------------------------------------------------
# closed-form calculators
# ---------------------------------------------------------------------------


class ErrorBounds(NamedTuple):
    l2: float
    l1: float
    l0: float | None


def _l0_bound(inputs):
    if inputs.M_inf is None or inputs.l_min is None:
        return None
    g = inputs.gamma
    return 64.0 * inputs.M_inf * (g + 1) * (g + 2) * inputs.s0 / (g ** 1.5 * inputs.l_min ** 2)


def error_bound_calculators(inputs):
    """(squared l2 bound, l1 bound, support-size bound) in terms of k.

    The support-size bound needs ``M_inf`` and ``l_min``; it is None otherwise.
    """
    _need(inputs, "k", "s0")
    g, s0, lam, k = inputs.gamma, inputs.s0, inputs.lam, inputs.k
    l2 = 4.0 * (g + 2) ** 2 * s0 * lam ** 2 / (g * k ** 4)
    l1 = 8.0 * (g + 1) * (g + 2) * s0 * lam / (g ** 1.5 * k ** 2)
    return ErrorBounds(l2, l1, _l0_bound(inputs))


def lmin_error_bounds(inputs):
    """The same bounds with k = l_min / 2 written out (constants 64 and 32)."""
    _need(inputs, "l_min", "s0")
    g, s0, lam, lm = inputs.gamma, inputs.s0, inputs.lam, inputs.l_min
    l2 = 64.0 * (g + 2) ** 2 * s0 * lam ** 2 / (g * lm ** 4)
    l1 = 32.0 * (g + 1) * (g + 2) * s0 * lam / (g ** 1.5 * lm ** 2)
    return ErrorBounds(l2, l1, _l0_bound(inputs))


class LambdaT1(NamedTuple):
    lambda1: float
    T1: float | None
    c0: float
    eps0: float


def lambda1_T1_calculators(inputs):
    """Penalty level lambda1 and horizon T1 from user-supplied entropy inputs.

    T1 is None unless Delta2, gamma_2 and l_min are all given.
    """
    _need(inputs, "p", "T", "eps", "C", "L", "Delta1")
    if inputs.gamma_43 is None or inputs.gamma_43 < 0:
        raise ValueError("gamma_43 must be supplied and nonnegative")
    L, p, T, C = inputs.L, inputs.p, inputs.T, inputs.C
    log_term = math.log(2 * L * p) + math.log(2.0 / inputs.eps)
    branch_a = math.sqrt(log_term / (2 * T))
    branch_b = ((2 * C) ** (1.0 / 3.0) / 6.0 * log_term / T) ** 0.75
    lam1 = 4 * L * inputs.Delta1 * max(branch_a, branch_b) + 4 * L * inputs.gamma_43 / math.sqrt(T)

    c0, eps0 = inputs.c0_value, inputs.eps0_value
    T1 = None
    if inputs.Delta2 is not None and inputs.gamma_2 is not None and inputs.l_min is not None:
        _need(inputs, "s0", "l_min")
        if not eps0 > 0:
            raise ValueError("eps0 must be positive")
        s2 = 2 * inputs.s0
        # log(21^{2s} (p^{2s} ^ (ep/2s)^{2s})) evaluated in the log domain
        log_count = s2 * math.log(21.0) + s2 * min(math.log(p), math.log(math.e * p / s2))
        inner = inputs.Delta2 * math.sqrt(log_count + math.log(L / eps0)) + inputs.gamma_2
        T1 = 2592.0 * (c0 + 2) ** 4 * L ** 2 * C / inputs.l_min ** 2 * inner ** 2
    return LambdaT1(lam1, T1, c0, eps0)


# ---------------------------------------------------------------------------
# restricted eigenvalue probe
# ---------------------------------------------------------------------------


def gram_matrix(path, model):
    """(1/T) sum_i D(X_i)^T D(X_i) dt for a model linear in theta."""
    ev = LikelihoodEvaluator(model, path)
    quad = ev.quadratic()
    if quad is None:
        raise ValueError("gram_matrix needs a model linear in theta")
    return quad[2]


def _cone_direction(rng, p, spec):
    """Random member of C(s, c): s-sparse dominant part plus a tail whose
    l1 mass is at most c times the dominant mass."""
    s = min(int(spec.s), p)
    support = rng.choice(p, size=s, replace=False)
    x = np.zeros(p)
    x[support] = rng.standard_normal(s)
    rest = np.setdiff1d(np.arange(p), support)
    tail = rng.standard_normal(len(rest))
    frac = rng.uniform()
    if len(rest) and spec.c > 0:
        mass = np.abs(tail).sum()
        if mass > 0:
            x[rest] = tail * (frac * spec.c * np.abs(x[support]).sum() / mass)
    if not np.any(x):
        x[support[0]] = 1.0
    return x


class REEstimate(NamedTuple):
    k: float
    running_min: np.ndarray
    directions: np.ndarray


def re_constant_estimate(path, model, spec, n_directions, rng_seed=0, theta_box=1.0,
                         theta_center=None):
    """Minimum of |b_theta - b_vartheta|_T / |theta - vartheta|_2 over random
    pairs with theta - vartheta in C(s, c).

    This is an upper estimate of the infimum.  Directions are drawn one after
    another from a single stream, so the running minimum over the first n
    directions does not depend on how many are requested in total.  For
    models linear in theta the ratio only depends on the direction and is a
    Rayleigh quotient of the Gram matrix; otherwise vartheta is drawn
    uniformly from the box of half-width ``theta_box`` around
    ``theta_center`` and theta = vartheta + r u with r ~ U(0, theta_box].
    """
    if n_directions < 1:
        raise ValueError("n_directions must be >= 1")
    p = model.p
    rng = np.random.default_rng(rng_seed)
    center = np.zeros(p) if theta_center is None else np.asarray(theta_center, dtype=float)
    ev = LikelihoodEvaluator(model, path)
    quad = ev.quadratic()
    ratios = np.empty(n_directions)
    dirs = np.empty((n_directions, p))
    for n in range(n_directions):
        x = _cone_direction(rng, p, spec)
        u = x / np.linalg.norm(x)
        dirs[n] = u
        if quad is not None:
            ratios[n] = math.sqrt(max(u @ (quad[2] @ u), 0.0))
        else:
            base = center + theta_box * rng.uniform(-1.0, 1.0, p)
            r = theta_box * (1.0 - rng.uniform())
            ratios[n] = math.sqrt(drift_distance_sq(ev, base + r * u, base)) / r
    running = np.minimum.accumulate(ratios)
    return REEstimate(float(running[-1]), running, dirs)


# ---------------------------------------------------------------------------
# concentration of additive functionals
# ---------------------------------------------------------------------------


def ou_time_average_variance(a, T):
    """Var of (1/T) int_0^T X_t dt for the stationary scalar OU dX = -aX dt + dW.

    Cov(X_s, X_t) = exp(-a|t-s|) / (2a), so the double integral gives
    (a T - 1 + exp(-a T)) / (a^3 T^2).
    """
    return (a * T - 1.0 + math.exp(-a * T)) / (a ** 3 * T ** 2)


@dataclass
class ConcentrationReport:
    mu: np.ndarray
    empirical_mgf: np.ndarray
    mgf_se: np.ndarray
    log_mgf: np.ndarray
    calibrated_C: float
    bound: np.ndarray | None
    holds: np.ndarray | None
    tail_u: np.ndarray
    tail_freq: np.ndarray
    tail_a1: float
    tail_a2: float
    statistics: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def rows(self):
        out = []
        for i, m in enumerate(self.mu):
            out.append({
                "mu": float(m),
                "empirical_mgf": float(self.empirical_mgf[i]),
                "mgf_se": float(self.mgf_se[i]),
                "log_mgf": float(self.log_mgf[i]),
                "bound": None if self.bound is None else float(self.bound[i]),
                "holds": None if self.holds is None else bool(self.holds[i]),
            })
        return out


def _additive_stats(f, X, dt, T, mean_f):
    # X is (m, N+1, d); left Riemann sum of f over the window
    m, n1, d = X.shape
    vals = np.asarray(f(X[:, :-1].reshape(-1, d)), dtype=float).reshape(m, n1 - 1)
    return (vals.sum(axis=1) * dt - mean_f * T) / T


def _antithetic_batch(model, theta, cfg, pairs, f, mean_f):
    """Each pair drives one path with noise +xi and one with -xi (including
    the initial state draw), keyed by trial_rng(seed, pair)."""
    N, d, dt = cfg.n_steps, model.d, cfg.dt
    n_burn = 0 if cfg.x0 == "exact" else int(round(cfg.burn_in * cfg.steps_per_unit))
    x0 = np.zeros((2 * len(pairs), d))
    noise = np.empty((2 * len(pairs), n_burn + N, d))
    chol = None
    if cfg.x0 == "exact":
        M = model.drift_matrix(theta)
        if M is None:
            raise ValueError("x0='exact' needs a drift linear in x")
        chol = np.linalg.cholesky(_stationary_cov(M))
    for r, k in enumerate(pairs):
        rng = trial_rng(cfg.seed, k)
        if chol is not None:
            z = chol @ rng.standard_normal(d)
            x0[2 * r], x0[2 * r + 1] = z, -z
        xi = rng.standard_normal((n_burn + N, d)) * math.sqrt(dt)
        noise[2 * r], noise[2 * r + 1] = xi, -xi
    X, bad = _euler(model, theta, x0, noise, dt)
    if bad >= 0:
        raise FloatingPointError(f"simulation diverged at step {bad}")
    return _additive_stats(f, X[:, n_burn:], dt, cfg.T, mean_f)


def concentration_mc(model, theta, f, f_lip, T, n_trials, mu_grid, rng_seed=0, *,
                     C=None, mean_f=None, steps_per_unit=100, burn_in=10.0,
                     x0="burned-in", antithetic=False, batch=100, tail_grid=None):
    """Empirical E exp(mu S) for S = (1/T) int_0^T (f(X_t) - E f) dt.

    With ``antithetic`` the trials come in sign-flipped pairs; the estimate
    stays unbiased and standard errors are computed over pair means.
    ``calibrated_C`` is the smallest C >= 0 for which
    exp(C mu^2 |f|_Lip^2 / T) dominates the empirical MGF on the whole grid.
    A bound column is added when ``C`` is given.  When ``mean_f`` is None
    the pooled average of f over all trials stands in for E f.

    Tail frequencies P(S > u) are fitted to exp(-T u^2 / (a1 + a2 u)) by
    least squares on T u^2 / (-log P) = a1 + a2 u.
    """
    if n_trials < 1 or (antithetic and n_trials % 2):
        raise ValueError("n_trials must be positive (and even with antithetic)")
    mu = np.asarray(mu_grid, dtype=float)
    cfg = SimConfig(T=T, steps_per_unit=steps_per_unit, seed=rng_seed, burn_in=burn_in,
                    x0=x0, keep_dW=False)
    centre = 0.0 if mean_f is None else float(mean_f)
    stats = []
    if antithetic:
        n_pairs = n_trials // 2
        for lo in range(0, n_pairs, batch):
            pairs = range(lo, min(lo + batch, n_pairs))
            stats.append(_antithetic_batch(model, theta, cfg, pairs, f, centre))
    else:
        for lo in range(0, n_trials, batch):
            paths = simulate_batch(model, theta, cfg, range(lo, min(lo + batch, n_trials)))
            X = np.stack([pth.states for pth in paths])
            stats.append(_additive_stats(f, X, cfg.dt, cfg.T, centre))
    S = np.concatenate(stats)
    if mean_f is None:
        S = S - S.mean()

    # log-domain aggregation guards against overflow for large mu S
    z = mu[:, None] * S[None, :]
    zmax = z.max(axis=1, keepdims=True)
    w = np.exp(z - zmax)
    log_mgf = np.log(w.mean(axis=1)) + zmax[:, 0]
    units = w.reshape(len(mu), -1, 2).mean(axis=2) if antithetic else w
    with np.errstate(over="ignore"):  # inf is the honest value; log_mgf stays finite
        mgf = np.exp(log_mgf)
        se = units.std(axis=1, ddof=1) / math.sqrt(units.shape[1]) * np.exp(zmax[:, 0])

    live = mu != 0
    if np.any(live) and f_lip > 0:
        calibrated = float(max(0.0, np.max(T * log_mgf[live] / (mu[live] ** 2 * f_lip ** 2))))
    else:
        calibrated = 0.0
    bound = holds = None
    if C is not None:
        bound = np.exp(C * mu ** 2 * f_lip ** 2 / T)
        holds = mgf <= bound * (1.0 + 1e-12)

    u = np.asarray(tail_grid if tail_grid is not None else np.quantile(np.abs(S), [0.5, 0.75, 0.9, 0.95, 0.99]),
                   dtype=float)
    freq = np.array([np.mean(S > v) for v in u])
    ok = (freq > 0) & (freq < 1) & (u > 0)
    a1 = a2 = math.nan
    if ok.sum() >= 2:
        y = T * u[ok] ** 2 / (-np.log(freq[ok]))
        a2, a1 = np.polyfit(u[ok], y, 1)
    meta = {"T": T, "n_trials": n_trials, "seed": rng_seed, "antithetic": antithetic,
            "steps_per_unit": steps_per_unit, "x0": x0, "f_lip": f_lip, "mean_f": mean_f}
    return ConcentrationReport(mu, mgf, se, log_mgf, calibrated, bound, holds, u, freq,
                               float(a1), float(a2), S, meta)


# ---------------------------------------------------------------------------
# estimates
# ---------------------------------------------------------------------------


class SupportMetrics(NamedTuple):
    l1_err: float
    l2_err: float
    support_precision: float
    support_recall: float
    f1: float
    size_hat: int

    def as_dict(self):
        return self._asdict()


def support_metrics(theta_hat, theta0, zero_tol=1e-8):
    """Error norms and support recovery.  An empty estimated support has
    precision 1 by convention; an empty true support has recall 1."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    diff = theta_hat - theta0
    est = np.abs(theta_hat) > zero_tol
    true = np.abs(theta0) > zero_tol
    tp = int(np.sum(est & true))
    precision = tp / est.sum() if est.any() else 1.0
    recall = tp / true.sum() if true.any() else 1.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return SupportMetrics(float(np.abs(diff).sum()), float(np.linalg.norm(diff)),
                          float(precision), float(recall), float(f1), int(est.sum()))


def m_infinity_estimate(path, model, theta_grid):
    """max over grid pairs and coordinates of |(1/T) sum J_theta(X_i)^T b_vartheta(X_i) dt|.

    A lower bound for the supremum over the parameter set.
    """
    grid = [np.asarray(t, dtype=float) for t in theta_grid]
    if not grid:
        raise ValueError("theta_grid must be nonempty")
    X, dt, T = path.left, path.dt, path.T
    drifts = [model.drift(t, X) for t in grid]
    best = 0.0
    for th in grid:
        J = model.jacobian(th, X)
        for b in drifts:
            v = np.einsum("tij,ti->j", J, b) * dt / T
            best = max(best, float(np.max(np.abs(v))))
    return best
