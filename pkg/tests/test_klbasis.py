"""Karhunen-Loeve basis: Nystrom oracle, quadrature identities, jet checks."""

import numpy as np
import pytest

from bayespde.errors import ConvergenceError, DimensionMismatchError, DomainError
from bayespde.klbasis import KlSurrogate, kl_eigenpairs, kl_eval


def nystrom_eigenvalues(corr_length, half_width, n_terms, n_nodes=2048):
    """Independent midpoint-rule discretization of the kernel operator."""
    h = 2.0 * half_width / n_nodes
    x = -half_width + (np.arange(n_nodes) + 0.5) * h
    kernel = np.exp(-np.abs(x[:, None] - x[None, :]) / corr_length)
    eigs = np.linalg.eigvalsh(kernel * h)
    return np.sort(eigs)[::-1][:n_terms]


@pytest.fixture(scope="module")
def basis():
    return kl_eigenpairs(corr_length=0.25, half_width=1.0, n_terms=20)


def test_eigenvalues_positive_and_non_increasing(basis):
    assert np.all(basis.eigenvalues > 0)
    assert np.all(np.diff(basis.eigenvalues) <= 0)


def test_retained_energy_fraction(basis):
    # total energy of the unit-variance kernel on [-1, 1] is 2
    assert 0.91 <= basis.energy_fraction() <= 0.93


def test_eigenvalues_match_nystrom_oracle(basis):
    oracle = nystrom_eigenvalues(0.25, 1.0, 20)
    rel = np.abs(basis.eigenvalues - oracle) / oracle
    assert rel.max() < 1e-3


def test_orthonormality_gauss_quadrature(basis):
    # 1024-node Gauss-Legendre integrates the smooth products essentially
    # exactly; the trapezoid rule at the same node count bottoms out near
    # 5e-6 for the 20th mode, so its check below uses that observed floor.
    nodes, weights = np.polynomial.legendre.leggauss(1024)
    psi = basis.eigenfunction_matrix(nodes * basis.half_width) * np.sqrt(basis.half_width)
    gram = (psi * weights[:, None]).T @ psi
    assert np.abs(gram - np.eye(basis.n_terms)).max() < 1e-6


def test_orthonormality_trapezoid_floor(basis):
    xs = np.linspace(-1.0, 1.0, 1024)
    psi = basis.eigenfunction_matrix(xs)
    gram = np.trapezoid(psi[:, :, None] * psi[:, None, :], xs, axis=0)
    assert np.abs(gram - np.eye(basis.n_terms)).max() < 1e-5


def test_operator_equation_pointwise(basis):
    xs = np.linspace(-1.0, 1.0, 1025)
    kernel = np.exp(-np.abs(xs[:, None] - xs[None, :]) / basis.corr_length)
    psi = basis.eigenfunction_matrix(xs)
    integral = np.trapezoid(kernel[:, :, None] * psi[None, :, :], xs, axis=1)
    residual = integral - basis.eigenvalues * psi
    assert np.abs(residual).max() < 1e-4


def test_invalid_construction():
    with pytest.raises(ValueError):
        kl_eigenpairs(-0.1, 1.0, 5)
    with pytest.raises(ValueError):
        kl_eigenpairs(0.25, 1.0, 0)


def test_many_modes_still_bracketed():
    # bracketed bisection cannot skip modes even far into the spectrum
    basis = kl_eigenpairs(0.25, 1.0, 120)
    assert np.all(np.diff(basis.frequencies) > 0)
    assert np.all(np.diff(basis.eigenvalues) < 0)


def test_eval_zero_coefficients(basis):
    jet = kl_eval(basis, np.zeros(20), 0.3)
    assert jet.value == 0.0 and jet.grad[0] == 0.0 and jet.hess_diag[0] == 0.0


def test_eval_first_mode_and_derivatives(basis):
    theta = np.zeros(20)
    theta[0] = 1.0
    x = 0.41
    jet = kl_eval(basis, theta, x)
    w, n = basis.frequencies[0], basis.norms[0]
    assert jet.value == pytest.approx(np.sqrt(basis.eigenvalues[0]) * np.cos(w * x) / n,
                                      rel=1e-12)
    h = 1e-5
    up = kl_eval(basis, theta, x + h).value
    um = kl_eval(basis, theta, x - h).value
    assert jet.grad[0] == pytest.approx((up - um) / (2 * h), rel=1e-6)
    assert jet.hess_diag[0] == pytest.approx((up - 2 * jet.value + um) / h**2, rel=1e-4)


def test_eval_linearity(basis):
    rng = np.random.default_rng(8)
    t1, t2 = rng.normal(size=20), rng.normal(size=20)
    x = -0.67
    j1, j2, j12 = kl_eval(basis, t1, x), kl_eval(basis, t2, x), kl_eval(basis, t1 + t2, x)
    assert j12.value == pytest.approx(j1.value + j2.value, rel=1e-12)
    assert j12.grad[0] == pytest.approx(j1.grad[0] + j2.grad[0], rel=1e-12)
    assert j12.hess_diag[0] == pytest.approx(j1.hess_diag[0] + j2.hess_diag[0], rel=1e-12)


def test_eval_domain_and_length_errors(basis):
    with pytest.raises(DomainError):
        kl_eval(basis, np.zeros(20), 1.5)
    with pytest.raises(DimensionMismatchError):
        kl_eval(basis, np.zeros(19), 0.0)


def test_prior_draw_covariance_matches_truncated_kernel(basis):
    # empirical covariance of 10000 prior draws vs sum_i a_i psi_i(x) psi_i(x')
    rng = np.random.default_rng(123)
    xs = np.linspace(-1.0, 1.0, 9)
    surrogate = KlSurrogate(basis)
    design = surrogate._design(xs, 0)
    draws = rng.standard_normal((10_000, 20)) @ design.T
    emp = np.cov(draws, rowvar=False, bias=True)
    truncated = design @ design.T
    # Monte-Carlo standard error of each covariance entry
    se = np.sqrt((np.outer(np.diag(truncated), np.diag(truncated)) + truncated**2)
                 / 10_000)
    assert np.all(np.abs(emp - truncated) <= 3.0 * se)


def test_surrogate_bound_paths_match_eval(basis):
    surrogate = KlSurrogate(basis)
    rng = np.random.default_rng(4)
    theta = rng.normal(size=20)
    pts = np.array([[0.1], [-0.5], [0.66]])
    bound = surrogate.bind(pts)
    values, _ = bound.value(theta)
    v2, grad, lap, _ = bound.grad_lap(theta)
    for i, x in enumerate(pts[:, 0]):
        jet = kl_eval(basis, theta, x)
        assert values[i] == pytest.approx(jet.value, rel=1e-12)
        assert grad[i, 0] == pytest.approx(jet.grad[0], rel=1e-12)
        assert lap[i] == pytest.approx(jet.hess_diag[0], rel=1e-12)
    np.testing.assert_array_equal(values, v2)
