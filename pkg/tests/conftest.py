import json
from pathlib import Path

import numpy as np
import pytest

from driftlasso.models import GeneralLinear, LangevinGradient, OrnsteinUhlenbeck, SineQuadratic
from driftlasso.sim import SimConfig, simulate

ORACLES = json.loads((Path(__file__).parent / "oracles" / "oracles.json").read_text())


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


def quartic_langevin(d):
    """V_theta(x) = sum_j theta_j x_j^2 / 2 + theta_{d+j} x_j^4 / 4 (p = 2d)."""

    def grad(theta, x):
        a, c = theta[:d], theta[d:]
        return a * x + c * x ** 3

    def grad_dtheta(theta, x):
        x = np.asarray(x, float)
        eye = np.eye(d)
        return np.concatenate([x[..., :, None] * eye, (x ** 3)[..., :, None] * eye], axis=-1)

    def potential(theta, x):
        a, c = theta[:d], theta[d:]
        return np.sum(a * x ** 2 / 2 + c * x ** 4 / 4, axis=-1)

    return LangevinGradient(d, 2 * d, grad, grad_dtheta, potential, name="quartic")


def family_cases():
    """(model, theta sampler) pairs covering every drift family."""
    return [
        ("ou", OrnsteinUhlenbeck(3), lambda r: np.eye(3).ravel() + 0.3 * r.standard_normal(9)),
        ("coordinate", GeneralLinear.coordinate(4), lambda r: r.uniform(0, 1, 4)),
        ("full_linear", GeneralLinear.full_linear(2), lambda r: (2 * np.eye(2)).ravel() + 0.2 * r.standard_normal(4)),
        ("langevin", quartic_langevin(2), lambda r: r.uniform(0.5, 1.5, 4)),
        ("sine_quadratic", SineQuadratic(3), lambda r: r.uniform(-2, 2, 9)),
    ]


@pytest.fixture
def ou_path():
    model = OrnsteinUhlenbeck(2)
    theta = np.array([1.0, 0.2, -0.1, 1.5])
    return model, theta, simulate(model, theta, SimConfig(T=5.0, seed=3))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
