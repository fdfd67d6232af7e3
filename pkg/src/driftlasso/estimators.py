"""MLE, Lasso and adaptive Lasso by proximal gradient, plus the hold-out rule
for choosing the penalty level."""

import math
from dataclasses import asdict, dataclass, field
from dataclasses import replace as _replace

import numpy as np

from . import kernels
from .likelihood import LikelihoodError, LikelihoodEvaluator
from .sim import subpath

__all__ = [
    "SolverConfig",
    "SolverResult",
    "CVResult",
    "CVFailed",
    "DegeneratePilot",
    "soft_threshold",
    "kkt_residual",
    "fit_mle",
    "fit_lasso",
    "fit_adaptive_lasso",
    "lambda_max",
    "default_lambda_grid",
    "cross_validate_lambda",
]


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 10000
    tol: float = 1e-8
    initial_step: float = 1.0
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    accelerate: bool = True
    multi_start: int = 1
    start_scale: float = 0.5
    seed: int = 0
    method: str = "auto"

    def __post_init__(self):
        if self.method not in ("auto", "prox-gradient", "prox-newton"):
            raise ValueError("method must be 'auto', 'prox-gradient' or 'prox-newton'")
        if self.max_iter < 1 or self.tol <= 0 or self.initial_step <= 0:
            raise ValueError("max_iter, tol and initial_step must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not 0 < self.sufficient_decrease < 1:
            raise ValueError("sufficient_decrease must lie in (0, 1)")
        if self.multi_start < 1:
            raise ValueError("multi_start must be >= 1")

    def to_dict(self):
        return asdict(self)


@dataclass
class SolverResult:
    theta_hat: np.ndarray
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    stationarity_residual: float
    scale: float
    penalty: np.ndarray = field(repr=False, default=None)

    @property
    def objective(self):
        return float(self.objective_trace[-1])

    def support(self, zero_tol=0.0):
        return np.flatnonzero(np.abs(self.theta_hat) > zero_tol)

    def record(self):
        """JSON-ready summary: dense estimate plus explicit support list."""
        return {
            "theta_hat": [float(v) for v in self.theta_hat],
            "support": [int(j) for j in self.support()],
            "objective": self.objective,
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "stationarity_residual": float(self.stationarity_residual),
        }


class CVFailed(RuntimeError):
    def __init__(self, diagnostics):
        self.diagnostics = diagnostics
        super().__init__(f"every fit on the lambda grid failed: {diagnostics}")


class DegeneratePilot(ValueError):
    pass


def soft_threshold(v, t):
    """sign(v) max(|v| - t, 0); t may be +inf (result 0)."""
    v = np.asarray(v, dtype=float)
    with np.errstate(invalid="ignore"):
        out = np.sign(v) * np.maximum(np.abs(v) - t, 0.0)
    return out if out.ndim else float(out)


def _penalty_value(theta, thr):
    nz = theta != 0
    return float(np.sum(thr[nz] * np.abs(theta[nz])))


def kkt_residual(theta, grad, thr):
    """Sup-norm distance of -grad from the subdifferential of sum thr_j |theta_j|."""
    theta = np.asarray(theta)
    nz = theta != 0
    r = np.empty_like(grad)
    r[nz] = np.abs(grad[nz] + thr[nz] * np.sign(theta[nz]))
    with np.errstate(invalid="ignore"):
        r[~nz] = np.maximum(np.abs(grad[~nz]) - thr[~nz], 0.0)
    r[np.isinf(thr) & ~nz] = 0.0
    return float(np.max(r)) if r.size else 0.0


# relative size of objective changes that are indistinguishable from rounding
_ROUNDING = 64 * np.finfo(float).eps


def _prox_gradient(fun, theta0, thr, cfg, value=None):
    """Minimise f(theta) + sum thr_j |theta_j|.

    ``fun`` returns (f, grad f); ``value``, if given, returns f alone and is
    used wherever the gradient is not needed.

    Backtracking accepts a step s from the anchor y when
    f(x+) <= f(y) + g(y).(x+ - y) + (1 - sigma) |x+ - y|^2 / (2 s).
    With acceleration, momentum is reset (and the step rejected) whenever
    the composite objective would increase, so the trace never goes up by
    more than rounding.  Once objective changes fall below float resolution,
    a step may pass within a few ulps of |f| provided a curvature test on the
    gradients also holds.  Convergence is judged on the KKT residual at the
    iterate; the gradient there is only computed once the prox-gradient map
    at the anchor is small.
    """
    value = value or (lambda t: fun(t)[0])
    x = np.array(theta0, dtype=float)
    x[np.isinf(thr)] = 0.0
    fx, gx = fun(x)
    Fx = fx + _penalty_value(x, thr)
    scale = 1.0 + abs(Fx)
    target = cfg.tol * scale
    trace = [Fx]
    y, fy, gy = x, fx, gx
    tk = 1.0
    s = cfg.initial_step
    grow = 0
    sigma = cfg.sufficient_decrease
    it = 0
    residual = kkt_residual(x, gx, thr)
    converged = residual <= target
    while not converged and it < cfg.max_iter:
        it += 1
        if grow >= 3:
            # three first-try acceptances in a row: try a longer step
            s /= cfg.shrink
            grow = 0
        first = True
        while True:
            x_new = soft_threshold(y - s * gy, s * thr)
            diff = x_new - y
            f_new, g_new = value(x_new), None
            dd = diff @ diff
            bound = fy + gy @ diff + (1.0 - sigma) * dd / (2.0 * s)
            if f_new <= bound:
                break
            # within rounding of the bound: fall back to a curvature test on
            # the gradients, which keeps its accuracy there
            if f_new <= bound + _ROUNDING * (1.0 + abs(fy)):
                f_new, g_new = fun(x_new)
                if (g_new - gy) @ diff <= (1.0 - sigma) * dd / s:
                    break
            first = False
            s *= cfg.shrink
            if s < 1e-300:
                raise LikelihoodError("step size underflow in backtracking")
        grow = grow + 1 if first else 0
        F_new = f_new + _penalty_value(x_new, thr)
        if F_new > Fx + _ROUNDING * (1.0 + abs(Fx)):
            if y is x:
                # no descent even without momentum: rounding floor reached
                break
            # momentum made things worse: restart from the current iterate
            tk = 1.0
            if gx is None:
                fx, gx = fun(x)
            y, fy, gy = x, fx, gx
            continue
        restart = cfg.accelerate and (y - x_new) @ (x_new - x) > 0.0
        x_old = x
        x, fx, gx, Fx = x_new, f_new, g_new, F_new
        trace.append(Fx)
        # the KKT residual at x is within a small factor of the prox-gradient
        # map at y; only pay for the gradient at x when the latter is small
        if np.max(np.abs(diff)) / s <= 4.0 * target:
            if gx is None:
                fx, gx = fun(x)
            residual = kkt_residual(x, gx, thr)
            converged = residual <= target
            if converged:
                break
        if restart:
            # gradient-mapping restart test; unlike the objective test above
            # it stays informative below float resolution of f
            tk = 1.0
        mom = 0.0
        if cfg.accelerate:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
            mom = (tk - 1.0) / t_next
            tk = t_next
        if mom > 0.0:
            y = x + mom * (x - x_old)
            fy, gy = fun(y)
        else:
            if gx is None:
                fx, gx = fun(x)
            y, fy, gy = x, fx, gx
    if gx is None:
        fx, gx = fun(x)
    residual = kkt_residual(x, gx, thr)
    converged = residual <= target
    return SolverResult(x, np.asarray(trace), it, bool(converged), residual, scale, thr)


def _prox_newton(ev, theta0, thr, cfg):
    """Damped proximal Newton for models with an analytic Hessian.

    Each step minimises the local quadratic model plus the weighted l1 term
    by coordinate descent, with the Hessian shifted to be positive definite
    and further damped by mu I.  mu starts at the Hessian's largest diagonal
    entry (short, gradient-like steps) and is adapted from the ratio of
    actual to predicted decrease, Levenberg-Marquardt style, so early
    iterates move gradually as a first-order method would.  Stopping uses
    the same KKT residual as :func:`_prox_gradient`; if damping runs away
    the remaining budget goes to the first-order method.
    """
    x = np.array(theta0, dtype=float)
    x[np.isinf(thr)] = 0.0
    p = len(x)
    fx, gx, H = ev.value_grad_hess(x)
    Fx = fx + _penalty_value(x, thr)
    scale = 1.0 + abs(Fx)
    target = cfg.tol * scale
    trace = [Fx]
    residual = kkt_residual(x, gx, thr)
    mu = max(float(np.max(np.abs(np.diag(H)))), 1e-12)
    it = 0
    stalled = False
    while residual > target and it < cfg.max_iter:
        it += 1
        top = max(float(np.max(np.abs(np.diag(H)))), 1e-300)
        shift = max(0.0, -float(np.linalg.eigvalsh(H)[0])) + 1e-10 * top
        Hm = H + (shift + mu) * np.eye(p)
        z = x.copy()
        # the step's KKT error is bounded by the subproblem's, so solve the
        # latter well below the target
        kernels.quad_lasso_cd(Hm, gx - Hm @ x, thr, z, 0.01 * target, 10000)
        d = z - x
        pen_z = _penalty_value(z, thr)
        predicted = gx @ d + 0.5 * d @ (Hm @ d) + pen_z - _penalty_value(x, thr)
        F_new = ev.value(z) + pen_z
        actual = F_new - Fx
        slack = _ROUNDING * (1.0 + abs(Fx))
        if predicted < -slack:
            rho = actual / predicted
        else:
            # model decrease at rounding level: accept anything that does not
            # raise the objective beyond rounding
            rho = 1.0 if actual <= slack else -1.0
        if rho < 0.25:
            mu = max(4.0 * mu, 1e-12 * top)
        elif rho > 0.75:
            mu *= 0.25
        if rho <= 1e-4:
            if mu > 1e12 * top:
                stalled = True
                break
            continue
        x = z
        fx, gx, H = ev.value_grad_hess(x)
        Fx = fx + pen_z
        trace.append(Fx)
        residual = kkt_residual(x, gx, thr)
    if residual > target and it < cfg.max_iter and stalled:
        rest = _prox_gradient(ev.value_and_grad, x, thr,
                              _replace(cfg, max_iter=cfg.max_iter - it), ev.value)
        return SolverResult(rest.theta_hat, np.concatenate([trace, rest.objective_trace[1:]]),
                            it + rest.iterations, rest.converged, rest.stationarity_residual,
                            scale, thr)
    return SolverResult(x, np.asarray(trace), it, bool(residual <= target), residual, scale, thr)


def _run(ev, theta_init, thr, cfg):
    newton = cfg.method == "prox-newton" or (cfg.method == "auto" and ev.has_hessian)
    if newton:
        return _prox_newton(ev, theta_init, thr, cfg)
    return _prox_gradient(ev.value_and_grad, theta_init, thr, cfg, ev.value)


def _solve(ev, thr, cfg, theta_init):
    p = ev.model.p
    theta_init = np.zeros(p) if theta_init is None else np.asarray(theta_init, dtype=float)
    if theta_init.shape != (p,):
        raise ValueError(f"theta_init must have shape ({p},)")
    best = _run(ev, theta_init, thr, cfg)
    if cfg.multi_start > 1:
        rng = np.random.default_rng(cfg.seed)
        for _ in range(cfg.multi_start - 1):
            start = theta_init + cfg.start_scale * rng.standard_normal(p)
            res = _run(ev, start, thr, cfg)
            if res.objective < best.objective:
                best = res
    return best


def fit_mle(ev, cfg=SolverConfig(), theta_init=None):
    """Stationary point of L_T by (accelerated) gradient descent."""
    return _solve(ev, np.zeros(ev.model.p), cfg, theta_init)


def fit_lasso(ev, lam, cfg=SolverConfig(), theta_init=None):
    """Stationary point of L_T(theta) + lam |theta|_1."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return _solve(ev, np.full(ev.model.p, float(lam)), cfg, theta_init)


def adaptive_weights(theta_pilot, alpha):
    pilot = np.abs(np.asarray(theta_pilot, dtype=float))
    if not np.any(pilot > 0):
        raise DegeneratePilot("adaptive lasso needs a pilot with at least one nonzero entry")
    w = np.full(pilot.shape, np.inf)
    nz = pilot > 0
    w[nz] = pilot[nz] ** (-float(alpha))
    return w


def fit_adaptive_lasso(ev, lam, alpha, theta_pilot, cfg=SolverConfig(), theta_init=None):
    """Weighted l1 penalty lam sum_j |theta_j| / |pilot_j|^alpha.

    Coordinates where the pilot is zero get infinite weight and stay at 0.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    thr = float(lam) * adaptive_weights(theta_pilot, alpha)
    thr[np.isnan(thr)] = np.inf
    return _solve(ev, thr, cfg, theta_init)


def lambda_max(ev):
    """|grad L_T(0)|_inf: smallest lambda at which 0 is stationary."""
    return float(np.max(np.abs(ev.value_and_grad(np.zeros(ev.model.p))[1])))


def default_lambda_grid(ev, count=30, ratio=1e-3):
    top = lambda_max(ev)
    if top <= 0:
        return np.array([0.0])
    return np.geomspace(top, top * ratio, int(count))


@dataclass
class CVResult:
    lambda0: float
    table: list
    fits: dict = field(repr=False, default_factory=dict)

    @property
    def best(self):
        return self.fits[self.lambda0]


def cross_validate_lambda(path, model, lambda_grid, cfg=SolverConfig(), *,
                          train=(0.0, 0.8), validation=(0.9, 1.0), theta_init=None):
    """Hold-out choice of lambda.

    Fits on the ``train`` fraction of the window along the grid in descending
    order (each fit warm-started from the previous one) and scores the
    unpenalised likelihood on the ``validation`` fraction.  Ties go to the
    larger lambda.
    """
    grid = sorted({float(v) for v in lambda_grid}, reverse=True)
    if not grid:
        raise ValueError("lambda_grid must be nonempty")
    t0, T = path.times[0], path.T
    ev_tr = LikelihoodEvaluator(model, subpath(path, t0 + train[0] * T, t0 + train[1] * T))
    ev_va = LikelihoodEvaluator(model, subpath(path, t0 + validation[0] * T, t0 + validation[1] * T))
    warm = None if theta_init is None else np.asarray(theta_init, dtype=float)
    table, fits, diag = [], {}, {}
    best_lam, best_loss = None, math.inf
    for lam in grid:
        try:
            res = fit_lasso(ev_tr, lam, cfg, warm)
            loss = ev_va.nll(res.theta_hat)
        except (LikelihoodError, FloatingPointError, ValueError) as exc:
            diag[lam] = str(exc)
            table.append({"lambda": lam, "validation_loss": math.nan, "converged": False,
                          "iterations": 0, "nnz": -1})
            continue
        warm = res.theta_hat
        fits[lam] = res
        table.append({"lambda": lam, "validation_loss": loss, "converged": res.converged,
                      "iterations": res.iterations, "nnz": int(np.count_nonzero(res.theta_hat))})
        if loss < best_loss:
            best_lam, best_loss = lam, loss
    if best_lam is None:
        raise CVFailed(diag)
    return CVResult(best_lam, table, fits)
