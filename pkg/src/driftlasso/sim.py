"""Euler-Maruyama simulation of dX = -b_theta(X) dt + dW on a uniform grid."""

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from . import kernels
from .models import SineQuadratic, unvect

__all__ = [
    "SimConfig",
    "ObservedPath",
    "SimulationDiverged",
    "trial_rng",
    "substream",
    "simulate",
    "simulate_batch",
    "subpath",
    "write_path_csv",
    "read_path_csv",
]


class SimulationDiverged(RuntimeError):
    def __init__(self, step, trial=None):
        self.step = step
        self.trial = trial
        where = f" (trial {trial})" if trial is not None else ""
        super().__init__(f"simulation diverged: non-finite state at step {step}{where}")


@dataclass(frozen=True)
class SimConfig:
    """``x0`` is ``"burned-in"`` (default), ``"exact"`` (Gaussian stationary
    law, linear-in-x drifts only) or an explicit state vector."""

    T: float
    steps_per_unit: int = 100
    seed: int = 0
    burn_in: float = 10.0
    x0: object = "burned-in"
    keep_dW: bool = True

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if int(self.steps_per_unit) < 1:
            raise ValueError("steps_per_unit must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")

    @property
    def n_steps(self):
        return int(round(self.T * self.steps_per_unit))

    @property
    def dt(self):
        return 1.0 / self.steps_per_unit

    def to_dict(self):
        out = asdict(self)
        if isinstance(self.x0, np.ndarray):
            out["x0"] = self.x0.tolist()
        return out


@dataclass
class ObservedPath:
    """States on the grid ``times``; ``dW[i]`` drove the step ``i -> i+1``."""

    times: np.ndarray
    states: np.ndarray
    dW: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or len(self.states) != len(self.times):
            raise ValueError("states must be (N+1, d) matching times")
        if len(self.times) < 2:
            raise ValueError("a path needs at least one increment")
        if self.dW is not None:
            self.dW = np.asarray(self.dW, dtype=float)
            if self.dW.shape != (len(self.times) - 1, self.states.shape[1]):
                raise ValueError("dW must be (N, d)")

    @property
    def d(self):
        return self.states.shape[1]

    @property
    def n_steps(self):
        return len(self.times) - 1

    @property
    def dt(self):
        return (self.times[-1] - self.times[0]) / self.n_steps

    @property
    def T(self):
        """Length of the observation window."""
        return float(self.times[-1] - self.times[0])

    @property
    def left(self):
        return self.states[:-1]

    @property
    def increments(self):
        return np.diff(self.states, axis=0)

    def require_dW(self):
        if self.dW is None:
            raise ValueError("this operation requires generated path (retained Brownian increments)")
        return self.dW


def trial_rng(seed, trial=0):
    """Counter-based generator keyed by (seed, trial): independent of the
    order or process in which trials are run."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial),))
    return np.random.Generator(np.random.Philox(ss))


def _stationary_cov(M):
    return solve_continuous_lyapunov(M, np.eye(M.shape[0]))


def _euler(model, theta, x0, dW, dt):
    """Batched stepping; x0 is (m, d), dW is (m, N, d)."""
    x0 = np.ascontiguousarray(x0, dtype=float)
    dW = np.ascontiguousarray(dW, dtype=float)
    M = model.drift_matrix(theta)
    if M is not None:
        return kernels.euler_linear(x0, np.ascontiguousarray(M), dW, float(dt))
    if isinstance(model, SineQuadratic):
        A = np.ascontiguousarray(unvect(theta, model.d))
        return kernels.euler_sinequad(x0, A, dW, float(dt))
    m, N, d = dW.shape
    X = np.empty((m, N + 1, d))
    X[:, 0] = x0
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(N):
            X[:, n + 1] = (X[:, n] - model.drift(theta, X[:, n]) * dt) + dW[:, n]
    return X, kernels._first_bad_step(X)


def _initial_state(model, theta, cfg, rng):
    d = model.d
    if isinstance(cfg.x0, str):
        if cfg.x0 == "exact":
            M = model.drift_matrix(theta)
            if M is None:
                raise ValueError("x0='exact' needs a drift linear in x")
            L = np.linalg.cholesky(_stationary_cov(M))
            return L @ rng.standard_normal(d)
        if cfg.x0 != "burned-in":
            raise ValueError(f"unknown x0 mode {cfg.x0!r}")
        n_burn = int(round(cfg.burn_in * cfg.steps_per_unit))
        if n_burn == 0:
            return np.zeros(d)
        burn = rng.standard_normal((1, n_burn, d)) * np.sqrt(cfg.dt)
        X, bad = _euler(model, theta, np.zeros((1, d)), burn, cfg.dt)
        if bad >= 0:
            raise SimulationDiverged(bad - n_burn)
        return X[0, -1].copy()
    x0 = np.asarray(cfg.x0, dtype=float)
    if x0.shape != (d,):
        raise ValueError(f"x0 must have shape ({d},)")
    return x0


def simulate(model, theta, cfg, trial=0, dW=None):
    """One Euler-Maruyama path on [0, T].

    ``dW`` overrides the Brownian increments of the observed window (test
    hook); the burn-in, if any, still uses the seeded stream.  Raises
    :class:`SimulationDiverged` if a state becomes non-finite.
    """
    return simulate_batch(model, theta, cfg, trials=[trial], dW=None if dW is None else dW[None])[0]


def simulate_batch(model, theta, cfg, trials, dW=None):
    """Paths for several trial indices, stepped together.

    Each trial draws from its own ``trial_rng(cfg.seed, trial)``, so results
    do not depend on how trials are grouped into batches.
    """
    theta = model.check_theta(theta)
    trials = list(trials)
    N, d, dt = cfg.n_steps, model.d, cfg.dt
    x0 = np.empty((len(trials), d))
    noise = np.empty((len(trials), N, d))
    for r, trial in enumerate(trials):
        rng = trial_rng(cfg.seed, trial)
        x0[r] = _initial_state(model, theta, cfg, rng)
        noise[r] = rng.standard_normal((N, d)) * np.sqrt(dt)
    if dW is not None:
        noise = np.asarray(dW, dtype=float).reshape(noise.shape)
    X, bad = _euler(model, theta, x0, noise, dt)
    if bad >= 0:
        raise SimulationDiverged(bad)
    times = np.arange(N + 1) * dt
    times[-1] = N * dt
    out = []
    for r, trial in enumerate(trials):
        meta = {
            "seed": int(cfg.seed),
            "trial": int(trial),
            "config": cfg.to_dict(),
            "model": model.spec(),
            "model_hash": model.spec_hash(),
        }
        out.append(ObservedPath(times.copy(), X[r], noise[r] if cfg.keep_dW else None, meta))
    return out


def _grid_index(path, t):
    return int(round((t - path.times[0]) / path.dt))


def subpath(path, a, b):
    """Restriction to [a, b] (rounded to the grid), keeping the original clock."""
    i, j = _grid_index(path, a), _grid_index(path, b)
    i, j = max(i, 0), min(j, path.n_steps)
    if j <= i:
        raise ValueError(f"empty window [{a}, {b}]")
    dW = None if path.dW is None else path.dW[i:j]
    meta = dict(path.meta, window=[float(path.times[i]), float(path.times[j])])
    return ObservedPath(path.times[i : j + 1], path.states[i : j + 1], dW, meta)


def write_path_csv(path, filename, meta_filename=None):
    """CSV ``t,x1..xd[,dw1..dwd]`` plus a JSON sidecar with the metadata."""
    filename = Path(filename)
    d = path.d
    header = ["t"] + [f"x{i + 1}" for i in range(d)]
    if path.dW is not None:
        header += [f"dw{i + 1}" for i in range(d)]
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for n in range(len(path.times)):
            row = [repr(float(path.times[n]))] + [repr(float(v)) for v in path.states[n]]
            if path.dW is not None:
                if n < path.n_steps:
                    row += [repr(float(v)) for v in path.dW[n]]
                else:
                    row += [""] * d
            w.writerow(row)
    meta_filename = meta_filename or filename.with_suffix(".meta.json")
    with open(meta_filename, "w") as fh:
        json.dump(path.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return filename, Path(meta_filename)


def read_path_csv(filename):
    filename = Path(filename)
    with open(filename) as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    d = sum(1 for h in header if h.startswith("x"))
    has_dw = any(h.startswith("dw") for h in header)
    times = np.array([float(r[0]) for r in body])
    states = np.array([[float(v) for v in r[1 : 1 + d]] for r in body])
    dW = None
    if has_dw:
        dW = np.array([[float(v) for v in r[1 + d : 1 + 2 * d]] for r in body[:-1]])
    meta = {}
    side = filename.with_suffix(".meta.json")
    if side.exists():
        meta = json.loads(side.read_text())
    return ObservedPath(times, states, dW, meta)


def with_seed(cfg, seed):
    return replace(cfg, seed=int(seed))


def substream(seed, trial, tag):
    """Generator for auxiliary draws of a trial (e.g. the true parameter),
    independent of the path noise from ``trial_rng(seed, trial)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial), int(tag)))
    return np.random.Generator(np.random.Philox(ss))
