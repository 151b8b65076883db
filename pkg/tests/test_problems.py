"""Problem catalog: hand-derived operator values and manufactured consistency."""

import numpy as np
import pytest

from bayespde.errors import ConfigurationError, DimensionMismatchError, DomainError
from bayespde.mlp import Jet
from bayespde.problems import exact_eval, get_problem, problem_names, residual

TANH_1 = 0.7615941559557649


def test_catalog_names():
    assert problem_names() == [
        "allen_cahn2d", "inverse_reaction1d", "inverse_reaction2d",
        "nonlinear_poisson1d", "poisson1d", "regression",
    ]
    with pytest.raises(ConfigurationError):
        get_problem("nope")


def test_linear_poisson_residual_hand_value():
    # u = sin^3(6x) at x = pi/12: u'' = -108, residual = lambda * u'' = -1.08
    problem = get_problem("poisson1d")
    x = np.pi / 12
    value, grad, hess = problem.exact_jet(np.array([[x]]))
    assert hess[0, 0] == pytest.approx(-108.0, abs=1e-10)
    jet = Jet(value[0], grad[0], hess[0])
    assert residual(problem, jet, {}) == pytest.approx(-1.08, abs=1e-10)


def test_nonlinear_poisson_residual_hand_value():
    # -1.08 + 0.7 * tanh(1)
    problem = get_problem("nonlinear_poisson1d")
    x = np.pi / 12
    value, grad, hess = problem.exact_jet(np.array([[x]]))
    jet = Jet(value[0], grad[0], hess[0])
    expected = -1.08 + 0.7 * TANH_1
    assert residual(problem, jet, {}) == pytest.approx(expected, abs=1e-10)
    assert expected == pytest.approx(-0.54689, abs=1e-5)


def test_allen_cahn_residual_hand_value():
    # u = sin(pi x) sin(pi y) at (0.5, 0.5): u = 1, cubic term zero,
    # residual = -0.02 pi^2
    problem = get_problem("allen_cahn2d")
    X = np.array([[0.5, 0.5]])
    value, grad, hess = problem.exact_jet(X)
    jet = Jet(value[0], grad[0], hess[0])
    assert residual(problem, jet, {}) == pytest.approx(-0.02 * np.pi**2, abs=1e-12)
    assert -0.02 * np.pi**2 == pytest.approx(-0.197392, abs=1e-6)


def test_exact_eval_examples():
    assert exact_eval(get_problem("regression"), "u", 0.0) == 0.0
    assert exact_eval(get_problem("allen_cahn2d"), "u", (0.5, 0.5)) == pytest.approx(1.0)
    assert exact_eval(get_problem("nonlinear_poisson1d"), "f", np.pi / 12) == pytest.approx(
        -1.08 + 0.7 * TANH_1, abs=1e-10
    )


def test_exact_eval_errors():
    with pytest.raises(DomainError):
        exact_eval(get_problem("poisson1d"), "u", 0.9)
    with pytest.raises(ConfigurationError):
        exact_eval(get_problem("regression"), "f", 0.0)
    with pytest.raises(ConfigurationError):
        exact_eval(get_problem("poisson1d"), "w", 0.0)


def _random_interior(problem, rng, n):
    los = np.array([lo for lo, _ in problem.domain])
    his = np.array([hi for _, hi in problem.domain])
    return rng.uniform(los, his, size=(n, problem.spatial_dim))


@pytest.mark.parametrize("name", ["poisson1d", "nonlinear_poisson1d", "allen_cahn2d",
                                  "inverse_reaction1d", "inverse_reaction2d"])
def test_manufactured_consistency(name):
    # stored analytic jets agree with finite differences of exact_u, and the
    # operator applied to them reproduces exact_f
    problem = get_problem(name)
    rng = np.random.default_rng(hash(name) % 2**32)
    X = _random_interior(problem, rng, 100)
    value, grad, hess = problem.exact_jet(X)
    np.testing.assert_allclose(value, problem.exact_u(X), atol=1e-14)
    h = 1e-6
    for axis in range(problem.spatial_dim):
        e = np.zeros(problem.spatial_dim)
        e[axis] = h
        up = problem.exact_u(np.clip(X + e, [lo for lo, _ in problem.domain],
                                     [hi for _, hi in problem.domain]))
        # interior points stay interior after the tiny shift with margin
        up = problem.exact_u(X + e)
        um = problem.exact_u(X - e)
        np.testing.assert_allclose(grad[:, axis], (up - um) / (2 * h), atol=5e-6)
        np.testing.assert_allclose(hess[:, axis], (up - 2 * value + um) / h**2, atol=5e-3)
    params = problem.resolve_params(problem.true_params)
    f_from_jet = problem.residual_fn(value, hess.sum(axis=1), params)
    np.testing.assert_allclose(f_from_jet, problem.exact_f(X), atol=1e-10)


def test_poisson_operator_is_linear_others_are_not():
    rng = np.random.default_rng(12)
    j1 = Jet(0.3, np.array([0.1]), np.array([2.0]))
    j2 = Jet(-0.5, np.array([0.4]), np.array([-1.2]))
    jsum = Jet(j1.value + j2.value, j1.grad + j2.grad, j1.hess_diag + j2.hess_diag)
    linear = get_problem("poisson1d")
    assert residual(linear, jsum, {}) == pytest.approx(
        residual(linear, j1, {}) + residual(linear, j2, {}), rel=1e-12
    )
    for name in ("nonlinear_poisson1d",):
        problem = get_problem(name)
        combined = residual(problem, jsum, {})
        parts = residual(problem, j1, {}) + residual(problem, j2, {})
        assert abs(combined - parts) > 1e-6
    ac = get_problem("allen_cahn2d")
    k1 = Jet(0.3, np.array([0.1, 0.0]), np.array([2.0, 1.0]))
    k2 = Jet(-0.5, np.array([0.4, 0.2]), np.array([-1.2, 0.5]))
    ksum = Jet(k1.value + k2.value, k1.grad + k2.grad, k1.hess_diag + k2.hess_diag)
    assert abs(residual(ac, ksum, {}) -
               (residual(ac, k1, {}) + residual(ac, k2, {}))) > 1e-6


def test_missing_unknown_parameter_is_configuration_error():
    problem = get_problem("inverse_reaction1d")
    jet = Jet(0.2, np.array([0.0]), np.array([1.0]))
    with pytest.raises(ConfigurationError):
        residual(problem, jet, {})
    assert residual(problem, jet, {"k": 0.7}) == pytest.approx(
        0.01 * 1.0 + 0.7 * np.tanh(0.2), rel=1e-12
    )


def test_residual_dimension_check():
    problem = get_problem("allen_cahn2d")
    jet = Jet(0.2, np.array([0.0]), np.array([1.0]))
    with pytest.raises(DimensionMismatchError):
        residual(problem, jet, {})


def test_residual_partials_match_finite_differences():
    rng = np.random.default_rng(77)
    for name in ("poisson1d", "nonlinear_poisson1d", "allen_cahn2d",
                 "inverse_reaction1d", "inverse_reaction2d"):
        problem = get_problem(name)
        params = problem.resolve_params(problem.true_params)
        value = rng.normal(size=6)
        lap = rng.normal(size=6)
        d_val, d_lap, d_unknown = problem.residual_partials_fn(value, lap, params)
        h = 1e-7
        fd_val = (problem.residual_fn(value + h, lap, params)
                  - problem.residual_fn(value - h, lap, params)) / (2 * h)
        fd_lap = (problem.residual_fn(value, lap + h, params)
                  - problem.residual_fn(value, lap - h, params)) / (2 * h)
        np.testing.assert_allclose(d_val, fd_val, atol=1e-6)
        np.testing.assert_allclose(d_lap, fd_lap, atol=1e-6)
        for pname, dp in d_unknown.items():
            up = dict(params); up[pname] += h
            dn = dict(params); dn[pname] -= h
            fd_p = (problem.residual_fn(value, lap, up)
                    - problem.residual_fn(value, lap, dn)) / (2 * h)
            np.testing.assert_allclose(dp, fd_p, atol=1e-6)
