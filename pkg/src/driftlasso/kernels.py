"""Hot inner loops: Euler-Maruyama stepping and the fused sine-quadratic
likelihood/gradient pass.

Every kernel exists twice, as a numba ``@njit`` function (``*_numba``) and a
pure-numpy function (``*_numpy``).  The unsuffixed public names point at one
of them according to :data:`driftlasso._accel.USE_NUMBA`.  Both variants
follow the same arithmetic order per element but are not guaranteed to be
bit-identical (numba may contract or reorder reductions differently).
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

# |x| below this is treated as exactly zero by h and its k-derivative.
TINY = 1e-300


# ---------------------------------------------------------------------------
# h(x, k) = x^2 sin(k / x) and d/dk h(x, k) = x cos(k / x)
# ---------------------------------------------------------------------------


def h_numpy(x, k):
    x, k = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(k, dtype=float))
    live = np.abs(x) >= TINY
    xs = np.where(live, x, 1.0)
    return np.where(live, xs * xs * np.sin(k / xs), 0.0)


def h_dk_numpy(x, k):
    x, k = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(k, dtype=float))
    live = np.abs(x) >= TINY
    xs = np.where(live, x, 1.0)
    return np.where(live, xs * np.cos(k / xs), 0.0)


@njit(cache=True)
def _h_scalar(x, k):
    if abs(x) < TINY:
        return 0.0
    return x * x * math.sin(k / x)


@njit(cache=True)
def _h_dk_scalar(x, k):
    if abs(x) < TINY:
        return 0.0
    return x * math.cos(k / x)


# ---------------------------------------------------------------------------
# Euler-Maruyama, batched over independent trials
#
#   X[m, n+1] = (X[m, n] - b(X[m, n]) * dt) + dW[m, n]
#
# Returns (states of shape (m, N+1, d), first non-finite step or -1).
# ---------------------------------------------------------------------------


@njit(cache=True)
def euler_linear_numba(x0, M, dW, dt):
    m, N, d = dW.shape
    X = np.empty((m, N + 1, d))
    b = np.empty(d)
    for r in range(m):
        for i in range(d):
            X[r, 0, i] = x0[r, i]
        for n in range(N):
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc += M[i, j] * X[r, n, j]
                b[i] = acc
            for i in range(d):
                v = (X[r, n, i] - b[i] * dt) + dW[r, n, i]
                if not np.isfinite(v):
                    return X, n
                X[r, n + 1, i] = v
    return X, -1


def _first_bad_step(X):
    ok = np.isfinite(X).all(axis=(0, 2))
    if ok.all():
        return -1
    return int(np.argmin(ok)) - 1


def euler_linear_numpy(x0, M, dW, dt):
    m, N, d = dW.shape
    X = np.empty((m, N + 1, d))
    X[:, 0] = x0
    Mt = np.ascontiguousarray(M.T)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(N):
            X[:, n + 1] = (X[:, n] - (X[:, n] @ Mt) * dt) + dW[:, n]
    return X, _first_bad_step(X)


@njit(cache=True)
def euler_sinequad_numba(x0, A, dW, dt):
    m, N, d = dW.shape
    X = np.empty((m, N + 1, d))
    b = np.empty(d)
    for r in range(m):
        for i in range(d):
            X[r, 0, i] = x0[r, i]
        for n in range(N):
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc += _h_scalar(X[r, n, j], A[i, j])
                b[i] = acc
            for i in range(d):
                v = (X[r, n, i] - b[i] * dt) + dW[r, n, i]
                if not np.isfinite(v):
                    return X, n
                X[r, n + 1, i] = v
    return X, -1


def euler_sinequad_numpy(x0, A, dW, dt):
    m, N, d = dW.shape
    X = np.empty((m, N + 1, d))
    X[:, 0] = x0
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(N):
            b = h_numpy(X[:, n, None, :], A).sum(axis=-1)
            X[:, n + 1] = (X[:, n] - b * dt) + dW[:, n]
    return X, _first_bad_step(X)


# ---------------------------------------------------------------------------
# Sine-quadratic drift b_i(x) = sum_j h(x_j, A_ij)
# ---------------------------------------------------------------------------


@njit(cache=True)
def sinequad_drift_numba(A, X):
    n, d = X.shape
    out = np.empty((n, d))
    for t in range(n):
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += _h_scalar(X[t, j], A[i, j])
            out[t, i] = acc
    return out


def sinequad_drift_numpy(A, X):
    return h_numpy(X[:, None, :], A).sum(axis=-1)


@njit(cache=True)
def sinequad_loss_grad_numba(A, X, dX, dt):
    """Unscaled sums: loss = sum_t sum_i (b_ti dX_ti + b_ti^2 dt / 2) and
    grad_ij = sum_t h_dk(X_tj, A_ij) (dX_ti + b_ti dt)."""
    n, d = X.shape
    grad = np.zeros((d, d))
    s = np.empty((d, d))
    c = np.empty((d, d))
    loss = 0.0
    for t in range(n):
        step = 0.0
        for j in range(d):
            x = X[t, j]
            if abs(x) < TINY:
                for i in range(d):
                    s[i, j] = 0.0
                    c[i, j] = 0.0
            else:
                for i in range(d):
                    u = A[i, j] / x
                    s[i, j] = x * x * math.sin(u)
                    c[i, j] = x * math.cos(u)
        for i in range(d):
            b = 0.0
            for j in range(d):
                b += s[i, j]
            r = dX[t, i] + b * dt
            step += b * dX[t, i] + 0.5 * b * b * dt
            for j in range(d):
                grad[i, j] += c[i, j] * r
        loss += step
    return loss, grad


@njit(cache=True)
def sinequad_loss_numba(A, X, dX, dt):
    """Loss sum only (no cosines, no gradient)."""
    n, d = X.shape
    loss = 0.0
    for t in range(n):
        step = 0.0
        for i in range(d):
            b = 0.0
            for j in range(d):
                x = X[t, j]
                if abs(x) >= TINY:
                    b += x * x * math.sin(A[i, j] / x)
            step += b * dX[t, i] + 0.5 * b * b * dt
        loss += step
    return loss


def sinequad_loss_numpy(A, X, dX, dt):
    b = sinequad_drift_numpy(A, X)
    return float(np.sum(b * dX + 0.5 * b * b * dt))


def sinequad_loss_grad_numpy(A, X, dX, dt):
    n, d = X.shape
    live = np.abs(X) >= TINY
    xs = np.where(live, X, 1.0)[:, None, :]
    u = A / xs
    s = np.where(live[:, None, :], xs * xs * np.sin(u), 0.0)
    c = np.where(live[:, None, :], xs * np.cos(u), 0.0)
    b = s.sum(axis=-1)
    r = dX + b * dt
    loss = float(np.sum(b * dX + 0.5 * b * b * dt))
    grad = np.einsum("tij,ti->ij", c, r)
    return loss, grad


@njit(cache=True)
def sinequad_loss_grad_hess_numba(A, X, dX, dt):
    """As :func:`sinequad_loss_grad_numba` plus the Hessian blocks
    H[i, j, l] = d^2 loss / dA_ij dA_il (rows of A do not interact):
    sum_t c_ij c_il dt - [j == l] sin(A_ij / x_j) (dX_ti + b_ti dt)."""
    n, d = X.shape
    grad = np.zeros((d, d))
    hess = np.zeros((d, d, d))
    s = np.empty((d, d))
    c = np.empty((d, d))
    sn = np.empty((d, d))
    loss = 0.0
    for t in range(n):
        step = 0.0
        for j in range(d):
            x = X[t, j]
            if abs(x) < TINY:
                for i in range(d):
                    s[i, j] = 0.0
                    c[i, j] = 0.0
                    sn[i, j] = 0.0
            else:
                for i in range(d):
                    u = A[i, j] / x
                    su = math.sin(u)
                    sn[i, j] = su
                    s[i, j] = x * x * su
                    c[i, j] = x * math.cos(u)
        for i in range(d):
            b = 0.0
            for j in range(d):
                b += s[i, j]
            r = dX[t, i] + b * dt
            step += b * dX[t, i] + 0.5 * b * b * dt
            for j in range(d):
                cij = c[i, j]
                grad[i, j] += cij * r
                hess[i, j, j] -= sn[i, j] * r
                for l in range(d):
                    hess[i, j, l] += cij * c[i, l] * dt
        loss += step
    return loss, grad, hess


def sinequad_loss_grad_hess_numpy(A, X, dX, dt):
    n, d = X.shape
    live = np.abs(X) >= TINY
    xs = np.where(live, X, 1.0)[:, None, :]
    u = A / xs
    sn = np.where(live[:, None, :], np.sin(u), 0.0)
    s = np.where(live[:, None, :], xs * xs * sn, 0.0)
    c = np.where(live[:, None, :], xs * np.cos(u), 0.0)
    b = s.sum(axis=-1)
    r = dX + b * dt
    loss = float(np.sum(b * dX + 0.5 * b * b * dt))
    grad = np.einsum("tij,ti->ij", c, r)
    hess = np.einsum("tij,til->ijl", c, c) * dt
    idx = np.arange(d)
    hess[:, idx, idx] -= np.einsum("tij,ti->ij", sn, r)
    return loss, grad, hess


# ---------------------------------------------------------------------------
# Weighted-l1 quadratic subproblem
#
#   min_z  q.z + z^T H z / 2 + sum_j thr_j |z_j|
#
# by cyclic coordinate descent from z (modified in place); H must have a
# positive diagonal.  Stops when no coordinate moves by more than ``tol``
# (measured as |dz_j| H_jj) or after ``max_sweeps``.  Returns the sweep count.
# ---------------------------------------------------------------------------


@njit(cache=True)
def quad_lasso_cd_numba(H, q, thr, z, tol, max_sweeps):
    p = len(q)
    w = H @ z
    for sweep in range(max_sweeps):
        worst = 0.0
        for j in range(p):
            hjj = H[j, j]
            old = z[j]
            if np.isinf(thr[j]):
                new = 0.0
            else:
                v = hjj * old - (q[j] + w[j])
                a = abs(v) - thr[j]
                new = 0.0
                if a > 0.0:
                    new = math.copysign(a, v) / hjj
            delta = new - old
            if delta != 0.0:
                z[j] = new
                for k in range(p):
                    w[k] += H[k, j] * delta
                change = abs(delta) * hjj
                if change > worst:
                    worst = change
        if worst <= tol:
            return sweep + 1
    return max_sweeps


def quad_lasso_cd_numpy(H, q, thr, z, tol, max_sweeps):
    p = len(q)
    w = H @ z
    for sweep in range(max_sweeps):
        worst = 0.0
        for j in range(p):
            hjj = H[j, j]
            old = z[j]
            if np.isinf(thr[j]):
                new = 0.0
            else:
                v = hjj * old - (q[j] + w[j])
                a = abs(v) - thr[j]
                new = math.copysign(a, v) / hjj if a > 0.0 else 0.0
            delta = new - old
            if delta != 0.0:
                z[j] = new
                w += H[:, j] * delta
                worst = max(worst, abs(delta) * hjj)
        if worst <= tol:
            return sweep + 1
    return max_sweeps


if USE_NUMBA:
    euler_linear = euler_linear_numba
    euler_sinequad = euler_sinequad_numba
    sinequad_drift = sinequad_drift_numba
    sinequad_loss_grad = sinequad_loss_grad_numba
    sinequad_loss = sinequad_loss_numba
    sinequad_loss_grad_hess = sinequad_loss_grad_hess_numba
    quad_lasso_cd = quad_lasso_cd_numba
else:
    euler_linear = euler_linear_numpy
    euler_sinequad = euler_sinequad_numpy
    sinequad_drift = sinequad_drift_numpy
    sinequad_loss_grad = sinequad_loss_grad_numpy
    sinequad_loss = sinequad_loss_numpy
    sinequad_loss_grad_hess = sinequad_loss_grad_hess_numpy
    quad_lasso_cd = quad_lasso_cd_numpy

h = h_numpy
h_dk = h_dk_numpy
