"""Mean-field Gaussian variational inference with reparameterized gradients.

The variational family is a fully factorized Gaussian with mean ``mu`` and
standard deviation ``softplus(rho)`` per component.  Each step draws a batch
of standard normal vectors, forms ``theta = mu + softplus(rho) * z`` and
descends the Monte-Carlo estimate of ``E_Q[log Q - log P(theta) - log
P(D|theta)]`` with Adam.  The pathwise gradient is used in closed form: the
``log Q`` term contributes nothing to the mean gradient and exactly ``-1 /
sigma`` to the scale gradient, so only the potential gradient is evaluated
per draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adam import AdamState, adam_step
from .errors import DimensionMismatchError, NumericalError
from .posterior import PosteriorSamples

__all__ = ["ViParams", "vi_fit", "vi_sample", "softplus", "softplus_inverse"]

_LOG_2PI = float(np.log(2.0 * np.pi))
_DIVERGENCE_PATIENCE = 100


def softplus(x):
    return np.logaddexp(0.0, x)


def softplus_inverse(y):
    # inverse of log(1 + exp(x)); valid for y > 0
    return y + np.log(-np.expm1(-y))


@dataclass
class ViParams:
    """Variational parameters; implied std is ``softplus(rho)`` per component."""

    mu: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.rho = np.asarray(self.rho, dtype=np.float64)
        if self.mu.shape != self.rho.shape or self.mu.ndim != 1:
            raise DimensionMismatchError("mu and rho must be 1-d vectors of equal length")

    @property
    def std(self) -> np.ndarray:
        return softplus(self.rho)

    @classmethod
    def initial(cls, dim: int, std: float = 0.1) -> "ViParams":
        return cls(mu=np.zeros(dim), rho=np.full(dim, softplus_inverse(std)))


def _objective_terms(sigma, z, potentials):
    # log Q at the reparameterized draws: -sum(log sigma) - 0.5*||z||^2 + const
    d = sigma.shape[0]
    log_q = -np.log(sigma).sum() - 0.5 * (z * z).sum(axis=1) - 0.5 * d * _LOG_2PI
    return float(np.mean(log_q + potentials))


def vi_fit(target, init: ViParams | None = None, n_steps: int = 200_000,
           batch_size: int = 5, adam: AdamState | None = None,
           seed: int = 0, trace_every: int = 100):
    """Fit the factorized Gaussian to ``target``; returns ``(params, trace)``.

    ``target`` must expose ``dim`` and ``potential_and_grad``.  The trace
    records ``(step, objective_estimate)`` pairs every ``trace_every`` steps.
    A hundred consecutive non-finite objective estimates abort the fit.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    dim = target.dim
    params = init if init is not None else ViParams.initial(dim)
    if params.mu.shape[0] != dim:
        raise DimensionMismatchError("initial parameters do not match target dimension")
    mu = params.mu.copy()
    rho = params.rho.copy()
    state = adam if adam is not None else AdamState()
    trace = []
    bad_streak = 0

    for step in range(n_steps):
        sigma = softplus(rho)
        z = rng.standard_normal((batch_size, dim))
        thetas = mu + sigma * z
        grad_mu = np.zeros(dim)
        grad_sigma = np.zeros(dim)
        potentials = np.empty(batch_size)
        for j in range(batch_size):
            potentials[j], grad_u = target.potential_and_grad(thetas[j])
            grad_mu += grad_u
            grad_sigma += grad_u * z[j]
        grad_mu /= batch_size
        grad_sigma = grad_sigma / batch_size - 1.0 / sigma
        grad_rho = grad_sigma / (1.0 + np.exp(-rho))

        objective = _objective_terms(sigma, z, potentials)
        if not np.isfinite(objective):
            bad_streak += 1
            if bad_streak >= _DIVERGENCE_PATIENCE:
                raise NumericalError(
                    f"variational objective non-finite for {bad_streak} consecutive steps"
                )
            continue
        bad_streak = 0
        if step % trace_every == 0:
            trace.append((step, objective))

        packed = adam_step(state, np.concatenate([mu, rho]),
                           np.concatenate([grad_mu, grad_rho]))
        mu, rho = packed[:dim], packed[dim:]

    return ViParams(mu=mu, rho=rho), trace


def vi_sample(params: ViParams, count: int, seed: int = 0) -> PosteriorSamples:
    """Reparameterized draws from the fitted family."""
    rng = np.random.Generator(np.random.Philox(seed))
    z = rng.standard_normal((count, params.mu.shape[0]))
    draws = params.mu + params.std * z
    return PosteriorSamples(draws=draws, sampler="vi", seed=seed)
