"""Non-Bayesian reference methods and prior-kernel utilities.

PINN point estimation minimizes the same negative log likelihood the
posterior uses, without any prior term.  MC dropout trains the same loss
under per-step inverted-dropout masks on hidden activations and reads off
uncertainty from stochastic forward passes.  The prior-kernel estimator and
the Gaussian-process regressor provide the empirical-kernel reference
solution for the function-regression task.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .adam import AdamState, adam_step
from .errors import ConfigurationError, NumericalError
from .mlp import MlpArchitecture, PriorScales, glorot_init, value_batch, jet_batch
from .posterior import LogPosteriorTarget

__all__ = [
    "DropoutConfig",
    "DropoutModel",
    "PriorKernelEstimate",
    "pinn_train",
    "dropout_train",
    "dropout_predict",
    "estimate_prior_kernel",
    "sample_prior_outputs",
    "gp_regress",
]

_JITTERS = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


# ---------------------------------------------------------------------------
# maximum-likelihood training (PINN and dropout share one loop)


@dataclass(frozen=True)
class DropoutConfig:
    """Dropout rate and sampling sizes; rate 0 reduces to plain training."""

    rate: float = 0.05
    train_steps: int = 200_000
    predict_passes: int = 10_000
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ConfigurationError("dropout rate must lie in [0, 1)")


@dataclass
class DropoutModel:
    """Trained parameters plus everything needed for stochastic prediction."""

    target: LogPosteriorTarget
    theta: np.ndarray
    rate: float
    seed: int
    unknown_trace: np.ndarray | None = None
    loss_trace: list = field(default_factory=list)


def _init_theta(target: LogPosteriorTarget, rng) -> np.ndarray:
    arch = target.surrogate.arch
    theta = glorot_init(arch, rng)
    n_unknown = target.dim - target.surrogate.n_params
    if n_unknown:
        theta = np.concatenate([theta, np.zeros(n_unknown)])
    return theta


def _draw_scales(arch: MlpArchitecture, rate: float, rng):
    keep = 1.0 - rate
    return [(rng.random(w) >= rate) / keep for w in arch.hidden_widths]


def _train_mle(target: LogPosteriorTarget, n_steps: int, learning_rate: float,
               seed: int, dropout_rate: float = 0.0, trace_every: int = 100,
               unknown_trace_last: int = 0):
    """Adam descent of the negative log likelihood; optional dropout masks.

    At rate zero no mask is ever drawn, so the trajectory is bit-identical
    to plain training under the same seed.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    theta = _init_theta(target, rng)
    arch = target.surrogate.arch
    state = AdamState(lr=learning_rate)
    loss_trace = []
    n_unknown = target.dim - target.surrogate.n_params
    unknown_trace = (
        np.empty((min(unknown_trace_last, n_steps), n_unknown))
        if n_unknown and unknown_trace_last else None
    )

    for step in range(n_steps):
        scales = _draw_scales(arch, dropout_rate, rng) if dropout_rate > 0 else None
        loss, grad = target.neg_log_likelihood_and_grad(theta, scales=scales)
        if not np.isfinite(loss):
            raise NumericalError(
                f"training loss diverged at step {step}; trace tail: {loss_trace[-5:]}"
            )
        if step % trace_every == 0 or step == n_steps - 1:
            loss_trace.append((step, float(loss)))
        theta = adam_step(state, theta, grad)
        if unknown_trace is not None:
            offset = step - (n_steps - unknown_trace.shape[0])
            if offset >= 0:
                unknown_trace[offset] = theta[target.surrogate.n_params:]
    return theta, loss_trace, unknown_trace


def pinn_train(target: LogPosteriorTarget, n_steps: int = 200_000,
               learning_rate: float = 1e-3, seed: int = 0):
    """Point estimate of all parameters (network and unknown PDE constants).

    Returns ``(theta, loss_trace)``; the unknown block sits at the tail of
    ``theta`` exactly as in the posterior parameterization.
    """
    theta, loss_trace, _ = _train_mle(target, n_steps, learning_rate, seed)
    return theta, loss_trace


def dropout_train(target: LogPosteriorTarget, config: DropoutConfig,
                  unknown_trace_last: int = 10_000) -> DropoutModel:
    """Train under per-step dropout masks; keeps the tail trace of unknowns."""
    theta, loss_trace, unknown_trace = _train_mle(
        target, config.train_steps, config.learning_rate, config.seed,
        dropout_rate=config.rate, unknown_trace_last=unknown_trace_last,
    )
    return DropoutModel(target=target, theta=theta, rate=config.rate,
                        seed=config.seed, unknown_trace=unknown_trace,
                        loss_trace=loss_trace)


def dropout_predict(model: DropoutModel, eval_points: np.ndarray,
                    n_passes: int = 10_000, quantity: str = "u", seed: int | None = None):
    """Mean and population std over stochastic forward passes."""
    target = model.target
    arch = target.surrogate.arch
    theta_s, unknowns = target.split(model.theta)
    rng = np.random.Generator(np.random.Philox(model.seed + 1 if seed is None else seed))
    X = np.asarray(eval_points, dtype=np.float64)
    mean = np.zeros(X.shape[0])
    m2 = np.zeros(X.shape[0])
    params = target.pde_params(unknowns) if quantity == "f" else None
    for count in range(1, n_passes + 1):
        scales = _draw_scales(arch, model.rate, rng) if model.rate > 0 else None
        if quantity == "u":
            values, _ = value_batch(arch, theta_s, X, scales=scales)
        elif quantity == "f":
            values, _, hess, _ = jet_batch(arch, theta_s, X, scales=scales)
            values = target.problem.residual_fn(values, hess.sum(axis=1), params)
        else:
            raise ConfigurationError(f"unknown quantity {quantity!r}")
        delta = values - mean
        mean += delta / count
        m2 += delta * (values - mean)
    return mean, np.sqrt(m2 / n_passes)


# ---------------------------------------------------------------------------
# empirical prior kernel and GP regression


@dataclass(frozen=True)
class PriorKernelEstimate:
    """Monte-Carlo output covariance of a randomly weighted network."""

    points: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    standard_error: np.ndarray
    n_samples: int


def _batched_prior_values(arch, scales, X, n, rng, batch, want_jets=False):
    """Network outputs (and optionally 1d jets) over prior draws, batched."""
    shapes = arch.layer_shapes
    P = X.shape[0]
    outs = np.empty((n, P))
    grads = np.empty((n, P)) if want_jets else None
    hesses = np.empty((n, P)) if want_jets else None
    done = 0
    while done < n:
        b = min(batch, n - done)
        z = np.broadcast_to(X.T, (b, X.shape[1], P)).copy()
        g = h = None
        if want_jets:
            g = np.ones((b, 1, P))
            h = np.zeros((b, 1, P))
        for layer, ((n_out, n_in), sw, sb) in enumerate(zip(shapes, scales.weight, scales.bias)):
            w = rng.normal(0.0, sw, size=(b, n_out, n_in))
            bias = rng.normal(0.0, sb, size=(b, n_out, 1))
            a = w @ z + bias
            if want_jets:
                p = w @ g
                q = w @ h
            if layer == len(shapes) - 1:
                z = a
                if want_jets:
                    g, h = p, q
            else:
                t = np.tanh(a)
                if want_jets:
                    s = 1.0 - t * t
                    phi2 = -2.0 * t * s
                    g = s * p
                    h = phi2 * p * p + s * q
                z = t
        outs[done:done + b] = z[:, 0, :]
        if want_jets:
            grads[done:done + b] = g[:, 0, :]
            hesses[done:done + b] = h[:, 0, :]
        done += b
    if want_jets:
        return outs, grads, hesses
    return outs


def sample_prior_outputs(arch: MlpArchitecture, scales: PriorScales | None,
                         points: np.ndarray, n_samples: int, seed: int = 0,
                         batch: int = 2000, want_jets: bool = False):
    """Prior draws of network outputs (optionally with 1d derivatives).

    Weight tensors are drawn layer by layer inside each batch, so the result
    depends only on ``(seed, batch)``; the default batch is part of the
    reproducibility contract of the studies built on top.
    """
    if scales is None:
        scales = PriorScales.unit(len(arch.layer_shapes))
    if want_jets and arch.input_dim != 1:
        raise ConfigurationError("derivative sampling is implemented for 1d inputs")
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    # cap the per-batch working set: (batch, width, n_points) float64 arrays
    width = max(w for w, _ in arch.layer_shapes)
    batch = max(1, min(batch, 4_000_000 // (width * X.shape[0])))
    rng = np.random.Generator(np.random.Philox(seed))
    return _batched_prior_values(arch, scales, X, n_samples, rng, batch, want_jets)


def estimate_prior_kernel(arch: MlpArchitecture, scales: PriorScales | None,
                          grid: np.ndarray, n_samples: int = 100_000,
                          seed: int = 0, batch: int = 2000) -> PriorKernelEstimate:
    """Monte-Carlo covariance of network outputs over a grid of points."""
    if n_samples < 2:
        raise ConfigurationError("kernel estimation needs at least two samples")
    grid = np.asarray(grid, dtype=np.float64)
    samples = sample_prior_outputs(arch, scales, grid, n_samples, seed=seed, batch=batch)
    mean = samples.mean(axis=0)
    centered = samples - mean
    cov = centered.T @ centered / n_samples
    # spread of the entrywise product estimator
    second = centered**2
    prod_var = second.T @ second / n_samples - cov**2
    se = np.sqrt(np.maximum(prod_var, 0.0) / n_samples)
    return PriorKernelEstimate(points=grid, mean=mean, cov=cov,
                               standard_error=se, n_samples=n_samples)


def gp_regress(k_train: np.ndarray, k_cross: np.ndarray, k_test_diag: np.ndarray,
               y: np.ndarray, noise_std: np.ndarray):
    """Zero-mean GP posterior mean and std with escalating-jitter factorization.

    ``k_cross`` has shape ``(n_test, n_train)``.
    """
    noise_std = np.asarray(noise_std, dtype=np.float64)
    if np.any(noise_std <= 0):
        raise ConfigurationError("gp regression requires positive noise stds")
    gram = k_train + np.diag(noise_std**2)
    scale = float(np.mean(np.diag(k_train))) or 1.0
    factor = None
    for jitter in _JITTERS:
        try:
            factor = cho_factor(gram + jitter * scale * np.eye(gram.shape[0]), lower=True)
            break
        except np.linalg.LinAlgError:
            continue
    if factor is None:
        raise NumericalError("kernel factorization failed at maximum jitter")
    alpha = cho_solve(factor, y)
    mean = k_cross @ alpha
    solved = cho_solve(factor, k_cross.T)
    var = k_test_diag - np.einsum("ij,ji->i", k_cross, solved)
    return mean, np.sqrt(np.maximum(var, 0.0))
