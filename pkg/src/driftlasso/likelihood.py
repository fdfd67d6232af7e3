"""Discretised negative log-likelihood and the empirical quantities around it.

Stochastic integrals use left-endpoint (Ito) sums.  Sums are taken with
numpy's pairwise reduction, which keeps the decomposition identities at the
1e-10 level for paths of up to ~10^7 steps.
"""

import numpy as np

__all__ = [
    "LikelihoodEvaluator",
    "neg_log_likelihood",
    "nll_gradient",
    "empirical_bilinear",
    "empirical_norm",
    "stochastic_term_G",
    "martingale_sup_stat",
]

_CHUNK = 4096


class LikelihoodError(ArithmeticError):
    pass


def _finite(value, what):
    if not np.all(np.isfinite(value)):
        raise LikelihoodError(f"non-finite {what}")
    return value


class LikelihoodEvaluator:
    """Immutable pairing of a drift model and an observed path."""

    def __init__(self, model, path):
        if path.d != model.d:
            raise ValueError(f"path dimension {path.d} does not match model dimension {model.d}")
        self.model = model
        self.path = path
        self.X = np.ascontiguousarray(path.left)
        self.dX = np.ascontiguousarray(path.increments)
        self.dt = path.dt
        self.T = path.T
        self._quad = None

    # -- definitions -------------------------------------------------------

    def nll(self, theta):
        b = self.model.drift(theta, self.X)
        val = (np.sum(b * self.dX) + 0.5 * self.dt * np.sum(b * b)) / self.T
        return float(_finite(val, "likelihood"))

    def gradient(self, theta):
        grad = np.zeros(self.model.p)
        for lo in range(0, len(self.X), _CHUNK):
            xs, dxs = self.X[lo : lo + _CHUNK], self.dX[lo : lo + _CHUNK]
            b = self.model.drift(theta, xs)
            J = self.model.jacobian(theta, xs)
            grad += np.einsum("tij,ti->j", J, dxs + b * self.dt)
        return _finite(grad / self.T, "gradient")

    # -- solver route ------------------------------------------------------

    def quadratic(self):
        """Cached (c, g, Q) for models linear in theta, else None."""
        if not self.model.linear_in_theta:
            return None
        if self._quad is None:
            self._quad = self.model.quadratic_stats(self.X, self.dX, self.dt, self.T)
        return self._quad

    def value_and_grad(self, theta):
        """Fast (L_T, grad L_T); agrees with :meth:`nll`/:meth:`gradient` up to
        rounding."""
        theta = np.asarray(theta, dtype=float)
        quad = self.quadratic()
        if quad is not None:
            c, g, Q = quad
            Qt = Q @ theta
            return float(c + g @ theta + 0.5 * theta @ Qt), g + Qt
        loss, grad = self.model.loss_terms(theta, self.X, self.dX, self.dt)
        return float(_finite(loss / self.T, "likelihood")), _finite(grad / self.T, "gradient")

    @property
    def has_hessian(self):
        return hasattr(self.model, "loss_hessian")

    def value_grad_hess(self, theta):
        """(L_T, grad, dense Hessian) for models that provide one."""
        loss, grad, H = self.model.loss_hessian(np.asarray(theta, dtype=float), self.X, self.dX, self.dt)
        return (float(_finite(loss / self.T, "likelihood")), _finite(grad / self.T, "gradient"),
                _finite(H / self.T, "Hessian"))

    def value(self, theta):
        quad = self.quadratic()
        if quad is not None:
            c, g, Q = quad
            return float(c + g @ theta + 0.5 * theta @ (Q @ theta))
        loss = self.model.loss_value(np.asarray(theta, dtype=float), self.X, self.dX, self.dt)
        return float(_finite(loss / self.T, "likelihood"))


def neg_log_likelihood(ev, theta):
    """(1/T) sum b(X_i).dX_i + (1/2T) sum |b(X_i)|^2 dt."""
    return ev.nll(theta)


def nll_gradient(ev, theta):
    """(1/T) sum J(X_i)^T dX_i + (1/T) sum J(X_i)^T b(X_i) dt."""
    return ev.gradient(theta)


def _eval_fn(f, X):
    return np.asarray(f(X), dtype=float).reshape(X.shape[0], -1)


def empirical_bilinear(path, f, g):
    """<f, g>_T = (1/T) sum f(X_i).g(X_i) dt; f and g map (n, d) -> (n, d)."""
    X = path.left
    return float(np.sum(_eval_fn(f, X) * _eval_fn(g, X)) * path.dt / path.T)


def empirical_norm(path, f):
    return float(np.sqrt(max(empirical_bilinear(path, f, f), 0.0)))


def drift_distance_sq(ev, theta, vartheta):
    """|b_theta - b_vartheta|_T^2 on the evaluator's path."""
    diff = ev.model.drift(theta, ev.X) - ev.model.drift(vartheta, ev.X)
    return float(np.sum(diff * diff) * ev.dt / ev.T)


def stochastic_term_G(ev, theta, vartheta):
    """G(theta, vartheta) = (1/T) sum (b_theta - b_vartheta)(X_i).dW_i."""
    dW = ev.path.require_dW()
    diff = ev.model.drift(theta, ev.X) - ev.model.drift(vartheta, ev.X)
    return float(np.sum(diff * dW) / ev.T)


def martingale_vector(ev, theta):
    """(1/T) sum J_theta(X_i)^T dW_i, a vector of length p."""
    dW = ev.path.require_dW()
    out = np.zeros(ev.model.p)
    for lo in range(0, len(ev.X), _CHUNK):
        J = ev.model.jacobian(theta, ev.X[lo : lo + _CHUNK])
        out += np.einsum("tij,ti->j", J, dW[lo : lo + _CHUNK])
    return out / ev.T


def martingale_sup_stat(ev, theta_grid):
    """max over the grid and coordinates of |(1/T) sum J_theta^T dW|.

    The grid maximum is a lower bound on the supremum over the whole
    parameter set.  Models linear in theta have a theta-free Jacobian, so the
    grid is not consulted beyond its first point.
    """
    ev.path.require_dW()
    grid = [np.asarray(t, dtype=float) for t in theta_grid]
    if not grid:
        raise ValueError("theta_grid must be nonempty")
    if ev.model.linear_in_theta:
        grid = [np.zeros(ev.model.p)]
    return float(max(np.max(np.abs(martingale_vector(ev, t))) for t in grid))
