"""Integrator identities and sampling correctness on analytic targets."""

import numpy as np
import pytest

import bayespde.hmc as hmc_mod
from bayespde.hmc import HmcConfig, adapt_step_size, hmc_sample, leapfrog


class GaussianTarget:
    """Zero-mean Gaussian with a fixed covariance; exact potential."""

    def __init__(self, cov):
        self.cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
        self.prec = np.linalg.inv(self.cov)
        self.dim = self.cov.shape[0]

    def potential_and_grad(self, theta):
        grad = self.prec @ theta
        return 0.5 * float(theta @ grad), grad


class DivergingTarget:
    """Finite inside a ball, non-finite outside; exercises rejection paths."""

    dim = 1

    def potential_and_grad(self, theta):
        if abs(theta[0]) > 2.0:
            return np.inf, np.zeros(1)
        return 0.5 * float(theta @ theta), theta.copy()


def quadratic_grad(theta):
    return theta


# -- leapfrog ----------------------------------------------------------------


def test_leapfrog_single_step_hand_arithmetic():
    # U = theta^2/2, theta0 = 1, r0 = 0, dt = 0.1, L = 1:
    # r_half = -0.05, theta1 = 0.995, r1 = -0.09975
    theta, r, diverged = leapfrog(quadratic_grad, np.array([1.0]), np.array([0.0]),
                                  0.1, 1)
    assert not diverged
    assert theta[0] == pytest.approx(0.995, abs=1e-15)
    assert r[0] == pytest.approx(-0.09975, abs=1e-15)


def test_leapfrog_free_particle_closed_form():
    rng = np.random.default_rng(0)
    theta0, r0 = rng.normal(size=4), rng.normal(size=4)
    theta, r, _ = leapfrog(lambda t: np.zeros_like(t), theta0, r0, 0.1, 50)
    np.testing.assert_array_equal(r, r0)
    np.testing.assert_allclose(theta, theta0 + 50 * 0.1 * r0, rtol=0, atol=1e-14)


def test_leapfrog_time_reversal():
    rng = np.random.default_rng(1)
    theta0, r0 = rng.normal(size=6), rng.normal(size=6)
    theta1, r1, _ = leapfrog(quadratic_grad, theta0, r0, 0.1, 50)
    theta2, r2, _ = leapfrog(quadratic_grad, theta1, -r1, 0.1, 50)
    np.testing.assert_allclose(theta2, theta0, atol=1e-10)
    np.testing.assert_allclose(-r2, r0, atol=1e-10)


def test_leapfrog_energy_error_harmonic_oscillator():
    # the leapfrog energy-error envelope on U = theta^2/2 is
    # (dt^2/8) * |theta_t^2 - theta_0^2| <= (dt^2/4) * H / (1 - dt^2/4),
    # so at dt = 0.1 the 1e-3 bound holds for trajectory energies up to 0.4
    rng = np.random.default_rng(2)
    for phase in np.linspace(0.0, 2 * np.pi, 16, endpoint=False):
        theta0 = np.array([0.8 * np.cos(phase)])
        r0 = np.array([0.8 * np.sin(phase)])
        theta, r, _ = leapfrog(quadratic_grad, theta0, r0, 0.1, 50)
        h0 = 0.5 * float(theta0 @ theta0 + r0 @ r0)
        h1 = 0.5 * float(theta @ theta + r @ r)
        assert abs(h1 - h0) < 1e-3
    # at arbitrary energies the sharp scaling law holds
    for _ in range(50):
        theta0, r0 = rng.normal(size=1), rng.normal(size=1)
        theta, r, _ = leapfrog(quadratic_grad, theta0, r0, 0.1, 50)
        h0 = 0.5 * float(theta0 @ theta0 + r0 @ r0)
        h1 = 0.5 * float(theta @ theta + r @ r)
        envelope = (0.1**2 / 4.0) * h0 / (1.0 - 0.1**2 / 4.0)
        assert abs(h1 - h0) <= envelope + 1e-12


def test_leapfrog_phase_space_volume():
    # one step of the quadratic-potential map is linear; its 2x2 matrix has
    # unit determinant
    dt = 0.3
    cols = []
    for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        theta, r, _ = leapfrog(quadratic_grad, e[:1], e[1:], dt, 1)
        cols.append([theta[0], r[0]])
    jac = np.array(cols).T
    assert abs(np.linalg.det(jac) - 1.0) < 1e-14


def test_leapfrog_divergence_signal():
    def bad_grad(theta):
        return np.array([np.nan])

    _, _, diverged = leapfrog(bad_grad, np.array([0.0]), np.array([1.0]), 0.1, 3)
    assert diverged


# -- step-size rule -----------------------------------------------------------


def test_adapt_rule_examples():
    assert adapt_step_size(0.2, 1.0) == pytest.approx(0.2 * 1.1)
    assert adapt_step_size(0.2, 0.75) == 0.2
    dt = 0.2
    for _ in range(500):
        dt = adapt_step_size(dt, 0.0)
    assert dt == pytest.approx(0.2 / 1.1**500)
    assert dt > 0.0


# -- sampling ----------------------------------------------------------------


def test_hmc_standard_normal_moments():
    config = HmcConfig(step_size=0.5, leapfrog_steps=50, burn_in=200,
                       total_samples=10_200, keep_last=10_000, seed=42)
    samples = hmc_sample(GaussianTarget(np.eye(1)), config)
    draws = samples.draws[:, 0]
    assert len(samples) == 10_000
    assert abs(draws.mean()) < 0.05
    assert 0.90 <= draws.var() <= 1.10
    assert samples.acceptance_rate > 0.6


@pytest.mark.slow
def test_hmc_correlated_gaussian_covariance():
    cov = np.array([[1.0, 0.9], [0.9, 1.0]])
    config = HmcConfig(step_size=0.3, leapfrog_steps=50, burn_in=500,
                       total_samples=8_500, keep_last=8_000, seed=0)
    samples = hmc_sample(GaussianTarget(cov), config)
    emp = np.cov(samples.draws, rowvar=False, bias=True)
    assert np.abs(emp - cov).max() < 0.05
    assert np.abs(samples.draws.mean(axis=0)).max() < 0.05


def test_hmc_trajectories_nearly_always_accept_on_quadratic():
    # burn_in=0 keeps the step size frozen at 0.1 so every trajectory has
    # the tiny oscillator energy error; acceptance is then essentially 1
    config = HmcConfig(step_size=0.1, leapfrog_steps=50, burn_in=0,
                       total_samples=300, keep_last=300, seed=3)
    samples = hmc_sample(GaussianTarget(np.eye(2)), config)
    assert samples.acceptance_rate > 0.99
    assert samples.diagnostics["divergences"] == 0
    assert samples.diagnostics["final_step_size"] == 0.1


def test_hmc_reproducible_bitwise():
    config = HmcConfig(step_size=0.4, leapfrog_steps=20, burn_in=100,
                       total_samples=600, keep_last=400, seed=11)
    a = hmc_sample(GaussianTarget(np.eye(3)), config)
    b = hmc_sample(GaussianTarget(np.eye(3)), config)
    np.testing.assert_array_equal(a.draws, b.draws)
    assert a.acceptance_rate == b.acceptance_rate
    assert a.diagnostics == b.diagnostics


def test_hmc_without_metropolis_is_deterministic_hamiltonian_flow(monkeypatch):
    # with the correction forced to accept, positions follow the leapfrog
    # flow of the resampled momenta exactly
    monkeypatch.setattr(hmc_mod, "_metropolis_accept", lambda rng, a, b: True)
    config = HmcConfig(step_size=0.25, leapfrog_steps=10, burn_in=0,
                       total_samples=5, keep_last=5, seed=19)
    target = GaussianTarget(np.eye(2))
    samples = hmc_sample(target, config)

    rng = np.random.Generator(np.random.Philox(19))
    theta = rng.standard_normal(2)
    expected = []
    for _ in range(5):
        r = rng.standard_normal(2)
        theta, _, _ = leapfrog(lambda t: target.potential_and_grad(t)[1],
                               theta, r, 0.25, 10)
        expected.append(theta.copy())
    np.testing.assert_allclose(samples.draws, np.array(expected), atol=1e-12)


def test_hmc_counts_divergences_and_still_samples():
    config = HmcConfig(step_size=0.5, leapfrog_steps=30, burn_in=100,
                       total_samples=400, keep_last=300, seed=5)
    samples = hmc_sample(DivergingTarget(), config, initial=np.zeros(1))
    assert samples.diagnostics["divergences"] > 0
    assert np.all(np.isfinite(samples.draws))
    assert np.all(np.abs(samples.draws) <= 2.0)


def test_hmc_low_acceptance_warning():
    # an extremely stiff target with a burn-in too short to retune
    target = GaussianTarget(np.array([[1e-12]]))
    config = HmcConfig(step_size=0.1, leapfrog_steps=10, burn_in=25,
                       total_samples=60, keep_last=30, seed=2)
    samples = hmc_sample(target, config, initial=np.array([1.0]))
    assert samples.diagnostics["warnings"]
    assert "tuning" in samples.diagnostics["warnings"][0]


def test_keep_last_larger_than_post_burn_in_is_clamped():
    config = HmcConfig(step_size=0.5, leapfrog_steps=5, burn_in=10,
                       total_samples=50, keep_last=500, seed=0)
    samples = hmc_sample(GaussianTarget(np.eye(1)), config)
    assert len(samples) == 40
