import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftlasso.likelihood import (
    LikelihoodEvaluator,
    drift_distance_sq,
    empirical_bilinear,
    empirical_norm,
    martingale_sup_stat,
    neg_log_likelihood,
    nll_gradient,
    stochastic_term_G,
)
from driftlasso.models import GeneralLinear, OrnsteinUhlenbeck, SineQuadratic, vect
from driftlasso.sim import ObservedPath, SimConfig, simulate, simulate_batch

from conftest import family_cases

scalar_linear = GeneralLinear(1, [lambda x: x])


def _constant_path(value=1.0, n=1, dt=1.0, d=1):
    times = np.arange(n + 1) * dt
    return ObservedPath(times, np.full((n + 1, d), value), np.zeros((n, d)))


def test_zero_drift_gives_zero():
    ou = OrnsteinUhlenbeck(2)
    path = simulate(ou, vect(np.eye(2)), SimConfig(T=2.0))
    ev = LikelihoodEvaluator(ou, path)
    assert neg_log_likelihood(ev, np.zeros(4)) == 0.0


@pytest.mark.parametrize("theta", [0.0, 1.0, -2.5, 3.0])
def test_two_point_path(theta):
    ev = LikelihoodEvaluator(scalar_linear, _constant_path())
    assert neg_log_likelihood(ev, np.array([theta])) == pytest.approx(theta ** 2 / 2, abs=1e-15)
    assert ev.value(np.array([theta])) == pytest.approx(theta ** 2 / 2, abs=1e-15)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        LikelihoodEvaluator(OrnsteinUhlenbeck(2), _constant_path())


@pytest.mark.parametrize("name,model,sampler", family_cases(), ids=lambda v: v if isinstance(v, str) else "")
def test_gradient_matches_central_differences(name, model, sampler):
    rng = np.random.default_rng(5)
    theta_true = sampler(rng)
    path = simulate(model, theta_true, SimConfig(T=3.0, seed=1))
    ev = LikelihoodEvaluator(model, path)
    for _ in range(3):
        theta = sampler(rng)
        g = nll_gradient(ev, theta)
        fd = np.array([(neg_log_likelihood(ev, theta + 1e-6 * e) - neg_log_likelihood(ev, theta - 1e-6 * e)) / 2e-6
                       for e in np.eye(model.p)])
        np.testing.assert_allclose(fd, g, rtol=1e-5, atol=1e-8)
        v, g2 = ev.value_and_grad(theta)
        assert v == pytest.approx(neg_log_likelihood(ev, theta), rel=1e-10, abs=1e-12)
        np.testing.assert_allclose(g2, g, rtol=1e-9, atol=1e-12)


def test_general_linear_gradient_is_affine():
    gl = GeneralLinear.coordinate(3)
    path = simulate(gl, np.array([0.5, 0.1, 0.9]), SimConfig(T=5.0))
    ev = LikelihoodEvaluator(gl, path)
    _, _, Q = ev.quadratic()
    a, b = np.array([1.0, -2.0, 0.3]), np.array([0.0, 0.5, 0.7])
    np.testing.assert_allclose(nll_gradient(ev, a) - nll_gradient(ev, b), Q @ (a - b), atol=1e-12)


def test_gradient_zero_on_static_path_with_zero_drift():
    ev = LikelihoodEvaluator(scalar_linear, _constant_path(value=0.0, n=5))
    assert np.all(nll_gradient(ev, np.array([2.0])) == 0)


def test_bilinear_examples():
    path = simulate(OrnsteinUhlenbeck(2), vect(np.eye(2)), SimConfig(T=3.0))
    unit = lambda X: np.tile([1.0, 0.0], (len(X), 1))  # noqa: E731
    assert empirical_bilinear(path, unit, unit) == pytest.approx(1.0, rel=1e-12)
    ident = lambda X: X  # noqa: E731
    assert empirical_norm(_constant_path(n=10, dt=0.1), ident) ** 2 == pytest.approx(1.0, rel=1e-12)


_PATH = simulate(OrnsteinUhlenbeck(2), vect(np.eye(2)), SimConfig(T=2.0, seed=8))


def _linear_map(coef):
    M = np.asarray(coef).reshape(2, 3)
    return lambda X: np.column_stack([M[i, 0] + M[i, 1] * X[:, 0] + M[i, 2] * np.sin(X[:, 1]) for i in range(2)])


coefs = st.lists(st.floats(-5, 5, allow_nan=False), min_size=6, max_size=6)


@settings(max_examples=1000, deadline=None)
@given(coefs, coefs)
def test_cauchy_schwarz(a, b):
    f, g = _linear_map(a), _linear_map(b)
    lhs = abs(empirical_bilinear(_PATH, f, g))
    assert lhs <= empirical_norm(_PATH, f) * empirical_norm(_PATH, g) * (1 + 1e-9) + 1e-12


@settings(max_examples=200, deadline=None)
@given(coefs, coefs)
def test_norm_triangle_inequality(a, b):
    f, g = _linear_map(a), _linear_map(b)
    fg = lambda X: f(X) + g(X)  # noqa: E731
    assert empirical_norm(_PATH, fg) <= empirical_norm(_PATH, f) + empirical_norm(_PATH, g) + 1e-9


@pytest.mark.parametrize("model,theta0,theta", [
    (OrnsteinUhlenbeck(2), vect(np.array([[1.0, 0.3], [0.0, 2.0]])), vect(np.array([[0.2, -1.0], [0.4, 0.5]]))),
    (SineQuadratic(2), np.array([1.0, 0.5, -0.3, 2.0]), np.array([0.0, 1.0, 1.0, -1.0])),
])
def test_decomposition_identity(model, theta0, theta):
    path = simulate(model, theta0, SimConfig(T=10.0, seed=2))
    ev = LikelihoodEvaluator(model, path)
    L = neg_log_likelihood(ev, theta)
    mart = float(np.sum(model.drift(theta, ev.X) * path.dW) / ev.T)
    b0 = model.drift(theta0, ev.X)
    norm0 = float(np.sum(b0 * b0) * ev.dt / ev.T)
    rhs = mart + 0.5 * (drift_distance_sq(ev, theta, theta0) - norm0)
    assert abs(L - rhs) < 1e-10 * (1 + abs(L))
    # same identity written with G
    G = stochastic_term_G(ev, theta, theta0)
    diff = neg_log_likelihood(ev, theta) - neg_log_likelihood(ev, theta0)
    assert diff == pytest.approx(G + 0.5 * drift_distance_sq(ev, theta, theta0), abs=1e-10 * (1 + abs(diff)))


def test_G_examples_and_missing_dW():
    ou = OrnsteinUhlenbeck(1)
    path = simulate(ou, np.array([1.0]), SimConfig(T=2.0))
    ev = LikelihoodEvaluator(ou, path)
    a, b = np.array([1.0]), np.array([3.0])
    assert stochastic_term_G(ev, a, a) == 0.0
    assert stochastic_term_G(ev, a, b) == -stochastic_term_G(ev, b, a)
    bare = LikelihoodEvaluator(ou, ObservedPath(path.times, path.states))
    with pytest.raises(ValueError, match="requires generated path"):
        stochastic_term_G(bare, a, b)
    with pytest.raises(ValueError, match="requires generated path"):
        martingale_sup_stat(bare, [a])


def test_G_has_zero_mean():
    ou = OrnsteinUhlenbeck(1)
    theta, vartheta = np.array([1.0]), np.array([2.5])
    paths = simulate_batch(ou, theta, SimConfig(T=5.0, seed=11), range(600))
    vals = np.array([stochastic_term_G(LikelihoodEvaluator(ou, p), theta, vartheta) for p in paths])
    assert abs(vals.mean()) <= 4 * vals.std(ddof=1) / np.sqrt(len(vals))


def test_expected_likelihood_gap_equals_half_distance():
    ou = OrnsteinUhlenbeck(1)
    theta0, theta = np.array([1.0]), np.array([3.0])
    paths = simulate_batch(ou, theta0, SimConfig(T=5.0, seed=12), range(200))
    gaps, dists = [], []
    for p in paths:
        ev = LikelihoodEvaluator(ou, p)
        gaps.append(neg_log_likelihood(ev, theta) - neg_log_likelihood(ev, theta0))
        dists.append(0.5 * drift_distance_sq(ev, theta, theta0))
    gaps, dists = np.array(gaps), np.array(dists)
    assert gaps.mean() > 0
    se = (gaps - dists).std(ddof=1) / np.sqrt(len(gaps))
    assert abs(gaps.mean() - dists.mean()) <= 4 * se


def test_martingale_statistic():
    path = simulate(scalar_linear, np.array([1.0]), SimConfig(T=4.0, seed=3))
    ev = LikelihoodEvaluator(scalar_linear, path)
    direct = 0.0
    for i in range(path.n_steps):
        direct += path.states[i, 0] * path.dW[i, 0]
    expected = abs(direct / path.T)
    assert martingale_sup_stat(ev, [np.array([0.0])]) == pytest.approx(expected, rel=1e-12)
    assert martingale_sup_stat(ev, [np.array([5.0]), np.array([-1.0])]) == martingale_sup_stat(ev, [np.array([0.0])])
    quiet = ObservedPath(path.times, path.states, np.zeros_like(path.dW))
    assert martingale_sup_stat(LikelihoodEvaluator(scalar_linear, quiet), [np.array([1.0])]) == 0.0
    sq = SineQuadratic(2)
    sq_quiet = ObservedPath(np.arange(11) * 0.1, np.ones((11, 2)), np.zeros((10, 2)))
    assert martingale_sup_stat(LikelihoodEvaluator(sq, sq_quiet), [np.ones(4)]) == 0.0
    with pytest.raises(ValueError):
        martingale_sup_stat(ev, [])
