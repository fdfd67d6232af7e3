"""Parametric drift families b_theta: R^d -> R^d.

All ``drift``/``jacobian`` methods are vectorised over leading axes of ``x``:
``x`` has shape ``(..., d)``, the drift ``(..., d)`` and the theta-Jacobian
``(..., d, p)`` with column ``j`` equal to ``d b / d theta_j``.

Matrix-valued parameters use column-major vectorisation: ``theta = vect(A)``
means ``theta[i + j * d] == A[i, j]``.
"""

import hashlib
import json

import numpy as np

from . import kernels
from .kernels import h, h_dk

__all__ = [
    "DriftModel",
    "OrnsteinUhlenbeck",
    "GeneralLinear",
    "LangevinGradient",
    "SineQuadratic",
    "h_function",
    "h_dk",
    "drift_eval",
    "drift_jacobian",
    "monotonicity_probe",
    "langevin_invariant_density_unnormalized",
    "model_from_config",
    "vect",
    "unvect",
]


def h_function(x, k):
    """x^2 sin(k/x), extended by 0 at x = 0."""
    return h(x, k)


def vect(A):
    return np.asarray(A, dtype=float).ravel(order="F")


def unvect(theta, d):
    return np.asarray(theta, dtype=float).reshape((d, d), order="F")


class DriftModel:
    """Base class.  Subclasses set ``d``, ``p`` and implement ``drift`` and
    ``jacobian``."""

    family = "abstract"
    linear_in_theta = False

    d: int
    p: int

    def drift(self, theta, x):
        raise NotImplementedError

    def jacobian(self, theta, x):
        raise NotImplementedError

    def drift_matrix(self, theta):
        """Matrix M with b_theta(x) = M x when the drift is linear in x,
        otherwise None.  Used to route simulation to the compiled kernel."""
        return None

    def check_theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.p,):
            raise ValueError(f"theta must have shape ({self.p},), got {theta.shape}")
        return theta

    def check_x(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.d,):
            raise ValueError(f"state dimension must be {self.d}, got shape {x.shape}")
        return x

    def loss_terms(self, theta, X, dX, dt):
        """Unscaled likelihood sums over a path segment.

        Returns ``(sum_t b_t.dX_t + |b_t|^2 dt / 2, sum_t J_t^T (dX_t + b_t dt))``
        where ``X`` holds left endpoints.  Generic version; subclasses with
        a cheaper route override it.
        """
        theta = self.check_theta(theta)
        loss = 0.0
        grad = np.zeros(self.p)
        for lo in range(0, len(X), 2048):
            xs, dxs = X[lo : lo + 2048], dX[lo : lo + 2048]
            b = self.drift(theta, xs)
            J = self.jacobian(theta, xs)
            loss += np.sum(b * dxs) + 0.5 * dt * np.sum(b * b)
            grad += np.einsum("tij,ti->j", J, dxs + b * dt)
        return float(loss), grad

    def loss_value(self, theta, X, dX, dt):
        """First element of :meth:`loss_terms` (overridden where cheaper)."""
        return self.loss_terms(theta, X, dX, dt)[0]

    def spec(self):
        """JSON-serialisable description (used for config echo and hashing)."""
        return {"family": self.family, "d": self.d, "p": self.p}

    def spec_hash(self):
        blob = json.dumps(self.spec(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __repr__(self):
        return f"{type(self).__name__}(d={self.d}, p={self.p})"


class _LinearInTheta(DriftModel):
    """b_theta(x) = phi_0(x) + Phi(x) theta."""

    linear_in_theta = True

    def offset(self, x):
        raise NotImplementedError

    def design(self, x):
        raise NotImplementedError

    def drift(self, theta, x):
        theta = self.check_theta(theta)
        x = self.check_x(x)
        return self.offset(x) + self.design(x) @ theta

    def jacobian(self, theta, x):
        return self.design(self.check_x(x))

    def quadratic_stats(self, X, dX, dt, T):
        """(c, g, Q) such that the scaled likelihood is c + g.theta + theta.Q.theta / 2."""
        c = 0.0
        g = np.zeros(self.p)
        Q = np.zeros((self.p, self.p))
        for lo in range(0, len(X), 2048):
            xs, dxs = X[lo : lo + 2048], dX[lo : lo + 2048]
            phi0 = self.offset(xs)
            Phi = self.design(xs)
            c += np.sum(phi0 * dxs) + 0.5 * dt * np.sum(phi0 * phi0)
            g += np.einsum("tij,ti->j", Phi, dxs + phi0 * dt)
            Q += dt * np.einsum("tij,tik->jk", Phi, Phi)
        return c / T, g / T, Q / T


class OrnsteinUhlenbeck(_LinearInTheta):
    """b(x) = A x with theta = vect(A), p = d^2."""

    family = "ornstein_uhlenbeck"

    def __init__(self, d):
        self.d = int(d)
        self.p = self.d * self.d

    def offset(self, x):
        return np.zeros_like(x)

    def design(self, x):
        d = self.d
        J = np.einsum("...l,ik->...ilk", x, np.eye(d))
        return J.reshape(x.shape[:-1] + (d, d * d))

    def drift(self, theta, x):
        A = unvect(self.check_theta(theta), self.d)
        return self.check_x(x) @ A.T

    def drift_matrix(self, theta):
        return unvect(self.check_theta(theta), self.d)

    def quadratic_stats(self, X, dX, dt, T):
        # Q = S kron I with S the empirical Gram of the states
        S = dt * (X.T @ X) / T
        R = (dX.T @ X) / T
        return 0.0, vect(R), np.kron(S, np.eye(self.d))


class GeneralLinear(_LinearInTheta):
    """b_theta = phi_0 + sum_j theta_j phi_j.

    ``basis`` is a list of vectorised callables ``(..., d) -> (..., d)``;
    ``offset`` is one more such callable or None for phi_0 = 0.
    ``basis_matrices`` (shape ``(p, d, d)``) and ``offset_matrix`` may be
    supplied when every phi is linear in x, enabling the compiled simulator.
    ``lipschitz`` is stored for reference only.

    The positivity restriction theta_j > 0 sometimes imposed on this family
    is not enforced anywhere.
    """

    family = "general_linear"

    def __init__(self, d, basis, offset=None, *, basis_matrices=None,
                 offset_matrix=None, lipschitz=None, name=None, payload=None):
        self.d = int(d)
        self.basis = list(basis)
        self.p = len(self.basis)
        if self.p == 0:
            raise ValueError("GeneralLinear needs at least one basis function")
        self._offset = offset
        self.basis_matrices = None if basis_matrices is None else np.asarray(basis_matrices, float)
        self.offset_matrix = None if offset_matrix is None else np.asarray(offset_matrix, float)
        self.lipschitz = lipschitz
        self.name = name
        self._payload = payload

    @classmethod
    def from_matrices(cls, matrices, offset_matrix=None, **kw):
        """Basis phi_j(x) = M_j x and offset phi_0(x) = M_0 x."""
        mats = np.asarray(matrices, dtype=float)
        basis = [(lambda x, M=M: x @ M.T) for M in mats]
        offset = None
        if offset_matrix is not None:
            M0 = np.asarray(offset_matrix, dtype=float)
            offset = lambda x: x @ M0.T  # noqa: E731
        return cls(mats.shape[1], basis, offset, basis_matrices=mats,
                   offset_matrix=offset_matrix, **kw)

    @classmethod
    def coordinate(cls, d, offset="identity"):
        """phi_j(x) = x_j e_j (p = d), phi_0(x) = x or 0.

        With the identity offset this is the diagonal OU process with drift
        matrix I + diag(theta)."""
        mats = np.zeros((d, d, d))
        for j in range(d):
            mats[j, j, j] = 1.0
        M0 = _offset_matrix(offset, d)
        return cls.from_matrices(mats, M0, name="coordinate",
                                 payload={"basis": "coordinate", "offset": offset})

    @classmethod
    def full_linear(cls, d, offset="zero"):
        """phi_{i + j d}(x) = x_j e_i (p = d^2): the OU family in this form."""
        mats = np.zeros((d * d, d, d))
        for j in range(d):
            for i in range(d):
                mats[i + j * d, i, j] = 1.0
        M0 = _offset_matrix(offset, d)
        return cls.from_matrices(mats, M0, name="full_linear",
                                 payload={"basis": "full_linear", "offset": offset})

    def offset(self, x):
        if self._offset is None:
            return np.zeros_like(x)
        return np.asarray(self._offset(x), dtype=float)

    def design(self, x):
        return np.stack([np.asarray(phi(x), dtype=float) for phi in self.basis], axis=-1)

    def drift_matrix(self, theta):
        if self.basis_matrices is None:
            return None
        theta = self.check_theta(theta)
        M = np.tensordot(theta, self.basis_matrices, axes=1)
        if self.offset_matrix is not None:
            M = M + self.offset_matrix
        elif self._offset is not None:
            return None
        return M

    def spec(self):
        out = super().spec()
        if self._payload is not None:
            out.update(self._payload)
        else:
            out["basis"] = "custom"
        return out


def _offset_matrix(offset, d):
    if offset in (None, "zero"):
        return None
    if offset == "identity":
        return np.eye(d)
    M = np.asarray(offset, dtype=float)
    if M.shape != (d, d):
        raise ValueError(f"offset must be 'zero', 'identity' or a {d}x{d} matrix")
    return M


class LangevinGradient(DriftModel):
    """b_theta = grad_x V_theta.

    ``gradient(theta, x)`` returns grad_x V (shape ``(..., d)``) and
    ``gradient_dtheta(theta, x)`` its theta-Jacobian (``(..., d, p)``);
    ``potential(theta, x)`` is optional and only used for the invariant
    density.
    """

    family = "langevin"

    def __init__(self, d, p, gradient, gradient_dtheta, potential=None, name=None):
        self.d = int(d)
        self.p = int(p)
        self._grad = gradient
        self._grad_dtheta = gradient_dtheta
        self.potential = potential
        self.name = name

    def drift(self, theta, x):
        return np.asarray(self._grad(self.check_theta(theta), self.check_x(x)), dtype=float)

    def jacobian(self, theta, x):
        return np.asarray(self._grad_dtheta(self.check_theta(theta), self.check_x(x)), dtype=float)

    def spec(self):
        out = super().spec()
        out["name"] = self.name or "custom"
        return out


class SineQuadratic(DriftModel):
    """b_i(x) = sum_j h(x_j, A_ij) with h(x, k) = x^2 sin(k/x), theta = vect(A)."""

    family = "sine_quadratic"

    def __init__(self, d):
        self.d = int(d)
        self.p = self.d * self.d

    def drift(self, theta, x):
        A = unvect(self.check_theta(theta), self.d)
        x = self.check_x(x)
        return h(x[..., None, :], A).sum(axis=-1)

    def jacobian(self, theta, x):
        d = self.d
        A = unvect(self.check_theta(theta), d)
        x = self.check_x(x)
        D = h_dk(x[..., None, :], A)  # (..., i, j)
        J = np.einsum("...ij,ik->...ijk", D, np.eye(d))
        return J.reshape(x.shape[:-1] + (d, d * d))

    def loss_terms(self, theta, X, dX, dt):
        A = unvect(self.check_theta(theta), self.d)
        loss, grad = kernels.sinequad_loss_grad(
            np.ascontiguousarray(A), np.ascontiguousarray(X), np.ascontiguousarray(dX), float(dt))
        return float(loss), vect(grad)

    def loss_hessian(self, theta, X, dX, dt):
        """Unscaled (loss, grad, dense p x p Hessian) in vect order."""
        d = self.d
        A = unvect(self.check_theta(theta), d)
        loss, grad, blocks = kernels.sinequad_loss_grad_hess(
            np.ascontiguousarray(A), np.ascontiguousarray(X), np.ascontiguousarray(dX), float(dt))
        # theta index of A[i, j] is i + j d; only pairs in the same row i couple
        H = np.zeros((d, d, d, d))
        idx = np.arange(d)
        H[idx, :, idx, :] = blocks
        H = H.transpose(1, 0, 3, 2).reshape(d * d, d * d)
        return float(loss), vect(grad), H

    def loss_value(self, theta, X, dX, dt):
        A = unvect(self.check_theta(theta), self.d)
        return float(kernels.sinequad_loss(
            np.ascontiguousarray(A), np.ascontiguousarray(X), np.ascontiguousarray(dX), float(dt)))


def drift_eval(model, theta, x):
    return model.drift(theta, x)


def drift_jacobian(model, theta, x):
    return model.jacobian(theta, x)


def monotonicity_probe(model, theta, sample_count, box_radius=1.0, rng_seed=0):
    """Minimum of (b(x)-b(y)).(x-y) / |x-y|^2 over random pairs in a box.

    A sampled lower estimate of the monotonicity constant M; a positive value
    is evidence for the condition, not a proof.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    x = rng.uniform(-box_radius, box_radius, size=(sample_count, model.d))
    y = rng.uniform(-box_radius, box_radius, size=(sample_count, model.d))
    diff = x - y
    num = np.sum((model.drift(theta, x) - model.drift(theta, y)) * diff, axis=-1)
    den = np.sum(diff * diff, axis=-1)
    keep = den > 0
    return float(np.min(num[keep] / den[keep]))


def langevin_invariant_density_unnormalized(V, x, log=False):
    """exp(-2 V(x)); with ``log=True`` returns -2 V(x) instead (no overflow)."""
    val = -2.0 * float(V(np.asarray(x, dtype=float)))
    return val if log else float(np.exp(val))


def model_from_config(block):
    """Build ``(model, theta)`` from a config ``model`` block.

    ``theta`` is None when the block carries no parameter (e.g. it is drawn
    by the experiment).
    """
    block = dict(block)
    family = block.pop("family")
    d = int(block.pop("d"))
    matrix = block.pop("matrix", None)
    theta = block.pop("theta", None)
    if family in ("ornstein_uhlenbeck", "ou"):
        model = OrnsteinUhlenbeck(d)
    elif family == "sine_quadratic":
        model = SineQuadratic(d)
    elif family == "general_linear":
        basis = block.pop("basis", "coordinate")
        offset = block.pop("offset", "identity" if basis == "coordinate" else "zero")
        if basis == "coordinate":
            model = GeneralLinear.coordinate(d, offset)
        elif basis == "full_linear":
            model = GeneralLinear.full_linear(d, offset)
        else:
            raise ValueError(f"unknown basis identifier {basis!r}")
    else:
        raise ValueError(f"unknown model family {family!r}")
    if block:
        raise ValueError(f"unknown keys in model block: {sorted(block)}")
    if matrix is not None:
        if theta is not None:
            raise ValueError("give either 'matrix' or 'theta', not both")
        theta = vect(np.asarray(matrix, dtype=float))
    if theta is not None:
        theta = model.check_theta(theta)
    return model, theta
