"""Point-estimate training, dropout, prior kernels and GP regression."""

import numpy as np
import pytest

from bayespde.baselines import (
    DropoutConfig,
    _draw_scales,
    dropout_predict,
    dropout_train,
    estimate_prior_kernel,
    gp_regress,
    pinn_train,
    sample_prior_outputs,
)
from bayespde.datagen import build_experiment_dataset
from bayespde.errors import ConfigurationError
from bayespde.mlp import MlpArchitecture, MlpSurrogate, PriorScales, glorot_init, value_batch
from bayespde.posterior import LogPosteriorTarget, ObservationSet, SensorDataset
from bayespde.problems import get_problem


def _regression_target(arch, points, values, sigma):
    dataset = SensorDataset(
        u_obs=ObservationSet(points, values, np.full(len(values), sigma)),
        f_obs=ObservationSet.empty(1),
        b_obs=ObservationSet.empty(1),
    )
    return LogPosteriorTarget(get_problem("regression"), MlpSurrogate(arch), dataset,
                              "forward")


def _inverse_target(arch, noise=0.01, seed=0):
    dataset = build_experiment_dataset("inverse_reaction1d", noise, seed)
    return LogPosteriorTarget(get_problem("inverse_reaction1d"), MlpSurrogate(arch),
                              dataset, "inverse")


def test_pinn_reaches_zero_residual_floor_on_realizable_data():
    # data generated by a network of the same architecture with sigma = 1:
    # the loss floor is the pure normalizer N/2 * log(2 pi)
    arch = MlpArchitecture(1, (8, 8))
    gen_rng = np.random.default_rng(3)
    theta_true = glorot_init(arch, gen_rng) * 2.0
    points = np.linspace(-1, 1, 20)[:, None]
    values, _ = value_batch(arch, theta_true, points)
    target = _regression_target(arch, points, values, sigma=1.0)
    theta, trace = pinn_train(target, n_steps=20_000, learning_rate=1e-2, seed=1)
    floor = 20 * 0.5 * np.log(2 * np.pi)
    assert trace[-1][1] < floor + 1e-4


def test_dropout_rate_zero_identical_to_pinn():
    arch = MlpArchitecture(1, (6, 5))
    target = _inverse_target(arch)
    config = DropoutConfig(rate=0.0, train_steps=300, learning_rate=1e-3, seed=9)
    model = dropout_train(target, config)
    theta_pinn, _ = pinn_train(target, n_steps=300, learning_rate=1e-3, seed=9)
    np.testing.assert_array_equal(model.theta, theta_pinn)


def test_dropout_training_deterministic():
    arch = MlpArchitecture(1, (6, 5))
    target = _inverse_target(arch)
    config = DropoutConfig(rate=0.05, train_steps=200, learning_rate=1e-3, seed=4)
    a = dropout_train(target, config)
    b = dropout_train(target, config)
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.unknown_trace, b.unknown_trace)


def test_mask_dropped_fraction():
    rng = np.random.default_rng(0)
    arch = MlpArchitecture(1, (50, 50))
    dropped = []
    for _ in range(10_000 // 2):
        for scale in _draw_scales(arch, 0.05, rng):
            dropped.append(np.mean(scale == 0.0))
    assert 0.045 <= np.mean(dropped) <= 0.055


def test_masks_rescale_kept_units():
    rng = np.random.default_rng(1)
    [scale] = _draw_scales(MlpArchitecture(1, (40,)), 0.2, rng)
    kept = scale[scale > 0]
    np.testing.assert_allclose(kept, 1.0 / 0.8, atol=1e-15)


def test_dropout_predict_rate_zero_zero_std():
    arch = MlpArchitecture(1, (6, 5))
    target = _inverse_target(arch)
    model = dropout_train(target, DropoutConfig(rate=0.0, train_steps=50, seed=0))
    grid = np.linspace(-0.7, 0.7, 9)[:, None]
    mean, std = dropout_predict(model, grid, n_passes=64, quantity="u")
    np.testing.assert_allclose(std, 0.0, atol=1e-14)

    model_p = dropout_train(target, DropoutConfig(rate=0.1, train_steps=50, seed=0))
    _, std_p = dropout_predict(model_p, grid, n_passes=64, quantity="u")
    assert np.all(std_p > 0)


def test_dropout_unknown_trace_tail_length():
    arch = MlpArchitecture(1, (5, 4))
    target = _inverse_target(arch)
    model = dropout_train(target, DropoutConfig(rate=0.02, train_steps=120, seed=1),
                          unknown_trace_last=50)
    assert model.unknown_trace.shape == (50, 1)


# -- prior kernel -------------------------------------------------------------


def test_prior_kernel_symmetric_and_psd():
    arch = MlpArchitecture(1, (20, 20))
    grid = np.linspace(-1, 1, 9)
    est = estimate_prior_kernel(arch, None, grid, n_samples=4000, seed=0)
    np.testing.assert_allclose(est.cov, est.cov.T, atol=1e-12)
    eigs = np.linalg.eigvalsh(est.cov + 1e-8 * np.eye(9))
    assert np.all(eigs > 0)


def test_prior_kernel_standard_error_halves_with_four_times_samples():
    arch = MlpArchitecture(1, (10, 10))
    grid = np.linspace(-1, 1, 5)
    a = estimate_prior_kernel(arch, None, grid, n_samples=2000, seed=3)
    b = estimate_prior_kernel(arch, None, grid, n_samples=8000, seed=4)
    ratio = a.standard_error.mean() / b.standard_error.mean()
    assert ratio == pytest.approx(2.0, rel=0.2)


def test_prior_kernel_determinism_and_output_variance():
    arch = MlpArchitecture(1, (30, 30))
    grid = np.array([0.0])
    a = estimate_prior_kernel(arch, None, grid, n_samples=3000, seed=7)
    b = estimate_prior_kernel(arch, None, grid, n_samples=3000, seed=7)
    np.testing.assert_array_equal(a.cov, b.cov)
    # output variance at the origin: 30 * E[tanh(w z)^2] + 1, a number near 30
    assert 15 < a.cov[0, 0] < 45


def test_prior_jets_match_finite_differences_of_prior_values():
    # evaluation points x-h, x, x+h share the same weight draws inside one
    # call, so central differences of the sampled values provide an oracle
    # for the sampled derivatives, draw by draw
    arch = MlpArchitecture(1, (7, 6))
    x, h = 0.37, 1e-5
    pts = np.array([x - h, x, x + h])
    values, grads, hesses = sample_prior_outputs(arch, None, pts, 200, seed=5,
                                                 want_jets=True)
    fd_grad = (values[:, 2] - values[:, 0]) / (2 * h)
    fd_hess = (values[:, 2] - 2 * values[:, 1] + values[:, 0]) / h**2
    np.testing.assert_allclose(grads[:, 1], fd_grad, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(hesses[:, 1], fd_hess, rtol=1e-3, atol=1e-3)


# -- GP regression -------------------------------------------------------------


def _rbf(x1, x2, scale=1.0, ell=0.4):
    return scale * np.exp(-0.5 * (x1[:, None] - x2[None, :]) ** 2 / ell**2)


def test_gp_single_observation_closed_form():
    x_train = np.array([0.3])
    x_test = np.array([0.0, 0.3, 0.8])
    y = np.array([1.7])
    sigma = 0.2
    k_train = _rbf(x_train, x_train)
    k_cross = _rbf(x_test, x_train)
    k_diag = np.diag(_rbf(x_test, x_test))
    mean, std = gp_regress(k_train, k_cross, k_diag, y, np.array([sigma]))
    expected = k_cross[:, 0] * y[0] / (k_train[0, 0] + sigma**2)
    np.testing.assert_allclose(mean, expected, rtol=1e-8)


def test_gp_interpolates_in_small_noise_limit():
    x_train = np.linspace(-1, 1, 5)
    y = np.sin(2 * x_train)
    k_train = _rbf(x_train, x_train)
    k_cross = _rbf(x_train, x_train)
    k_diag = np.diag(k_train)
    mean, std = gp_regress(k_train, k_cross, k_diag, y, np.full(5, 1e-6))
    np.testing.assert_allclose(mean, y, atol=1e-4)
    assert np.all(std < 1e-2)


def test_gp_posterior_variance_never_exceeds_prior():
    rng = np.random.default_rng(2)
    x_train = rng.uniform(-1, 1, 7)
    x_test = np.linspace(-1, 1, 31)
    y = rng.normal(size=7)
    k_train = _rbf(x_train, x_train)
    k_cross = _rbf(x_test, x_train)
    k_diag = np.diag(_rbf(x_test, x_test))
    _, std = gp_regress(k_train, k_cross, k_diag, y, np.full(7, 0.1))
    assert np.all(std**2 <= k_diag + 1e-10)


def test_gp_rejects_zero_noise():
    with pytest.raises(ConfigurationError):
        gp_regress(np.eye(2), np.eye(2), np.ones(2), np.ones(2), np.zeros(2))


def test_dropout_rate_validation():
    with pytest.raises(ConfigurationError):
        DropoutConfig(rate=1.0)
