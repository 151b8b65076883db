"""Noisy-sensor data model and unnormalized log-posterior assembly.

The likelihood is a product of independent Gaussians over three observation
sets (solution values, forcing values, boundary traces); the prior is an
independent standard normal on every parameter, including any unknown PDE
parameters appended after the surrogate block.  Gradients are assembled
analytically from the surrogate reverse passes and the operator partials,
fused with the value computation so samplers pay for one sweep per
evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError, NumericalError
from .problems import PdeProblem

__all__ = [
    "ObservationSet",
    "SensorDataset",
    "PosteriorSamples",
    "LogPosteriorTarget",
    "log_prior",
    "predictive_stats",
]

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class ObservationSet:
    """Locations, measured values and per-point noise standard deviations."""

    points: np.ndarray
    values: np.ndarray
    noise_std: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        values = np.asarray(self.values, dtype=np.float64).ravel()
        noise = np.asarray(self.noise_std, dtype=np.float64).ravel()
        if points.shape[0] != values.shape[0] or values.shape[0] != noise.shape[0]:
            raise DimensionMismatchError("points, values and noise_std lengths differ")
        if np.any(noise < 0):
            raise ConfigurationError("noise standard deviations must be >= 0")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "noise_std", noise)

    def __len__(self) -> int:
        return self.values.shape[0]

    @classmethod
    def empty(cls, dim: int) -> "ObservationSet":
        return cls(np.zeros((0, dim)), np.zeros(0), np.zeros(0))


@dataclass(frozen=True)
class SensorDataset:
    """The three observation sets a posterior is conditioned on."""

    u_obs: ObservationSet
    f_obs: ObservationSet
    b_obs: ObservationSet

    @property
    def n_u(self) -> int:
        return len(self.u_obs)

    @property
    def n_f(self) -> int:
        return len(self.f_obs)

    @property
    def n_b(self) -> int:
        return len(self.b_obs)

    def sets(self):
        return (("u", self.u_obs), ("f", self.f_obs), ("b", self.b_obs))


@dataclass
class PosteriorSamples:
    """Ordered posterior draws plus sampler metadata."""

    draws: np.ndarray
    sampler: str
    seed: int
    acceptance_rate: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.draws = np.atleast_2d(np.asarray(self.draws, dtype=np.float64))
        if self.acceptance_rate is not None and not 0.0 <= self.acceptance_rate <= 1.0:
            raise ValueError("acceptance_rate must lie in [0, 1]")

    def __len__(self) -> int:
        return self.draws.shape[0]

    @property
    def dim(self) -> int:
        return self.draws.shape[1]


def log_prior(theta: np.ndarray) -> float:
    """Independent standard normal log-density over every component."""
    theta = np.asarray(theta, dtype=np.float64)
    if not np.all(np.isfinite(theta)):
        raise NumericalError("non-finite parameter vector")
    d = theta.shape[0]
    return float(-0.5 * theta @ theta - 0.5 * d * _LOG_2PI)


class _GaussianBlock:
    """Precomputed constants for one observation set."""

    def __init__(self, obs: ObservationSet):
        if len(obs) and np.any(obs.noise_std <= 0):
            raise ConfigurationError("likelihood requires strictly positive noise_std")
        self.values = obs.values
        self.inv_var = 1.0 / obs.noise_std**2 if len(obs) else np.zeros(0)
        self.log_norm = (
            float(-0.5 * np.sum(np.log(2.0 * np.pi * obs.noise_std**2))) if len(obs) else 0.0
        )

    def log_density(self, model: np.ndarray) -> float:
        resid = model - self.values
        return self.log_norm - 0.5 * float(resid * self.inv_var @ resid)

    def weighted_residual(self, model: np.ndarray) -> np.ndarray:
        # d(-log density)/d(model)
        return (model - self.values) * self.inv_var


class LogPosteriorTarget:
    """Unnormalized log posterior for a (problem, surrogate, dataset) triple.

    In inverse mode the parameter vector carries one extra trailing component
    per declared unknown PDE parameter, each with a standard normal prior.
    """

    def __init__(self, problem: PdeProblem, surrogate, dataset: SensorDataset,
                 mode: str = "forward"):
        if mode not in ("forward", "inverse"):
            raise ConfigurationError("mode must be 'forward' or 'inverse'")
        if mode == "inverse" and not problem.unknown_params:
            raise ConfigurationError(f"{problem.name} declares no unknown parameters")
        if mode == "forward" and problem.unknown_params:
            raise ConfigurationError(
                f"{problem.name} declares unknown parameters; use inverse mode"
            )
        if dataset.n_f and not problem.has_residual:
            raise ConfigurationError(f"{problem.name} has no operator for f observations")
        self.problem = problem
        self.surrogate = surrogate
        self.dataset = dataset
        self.mode = mode
        self.unknown_names = problem.unknown_names if mode == "inverse" else ()
        self.dim = surrogate.n_params + len(self.unknown_names)

        self._u_block = _GaussianBlock(dataset.u_obs)
        self._f_block = _GaussianBlock(dataset.f_obs)
        self._b_block = _GaussianBlock(dataset.b_obs)

        # u and b observations both read the solution trace; share one sweep.
        ub_points = np.vstack([dataset.u_obs.points, dataset.b_obs.points])
        self._ub_eval = surrogate.bind(ub_points) if len(ub_points) else None
        self._f_eval = surrogate.bind(dataset.f_obs.points) if dataset.n_f else None

    # -- parameter vector handling ------------------------------------------

    def split(self, theta: np.ndarray):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.dim,):
            raise DimensionMismatchError(
                f"theta of shape {theta.shape}, target dimension {self.dim}"
            )
        n_s = self.surrogate.n_params
        unknowns = {name: float(theta[n_s + i]) for i, name in enumerate(self.unknown_names)}
        return theta[:n_s], unknowns

    def pde_params(self, unknowns: dict[str, float]) -> dict[str, float]:
        return self.problem.resolve_params(unknowns)

    # -- densities ------------------------------------------------------------

    def _model_values(self, theta_s, unknowns):
        u_model = b_model = f_model = None
        n_u = self.dataset.n_u
        if self._ub_eval is not None:
            ub, _ = self._ub_eval.value(theta_s)
            u_model, b_model = ub[:n_u], ub[n_u:]
        if self._f_eval is not None:
            value, _, lap, _ = self._f_eval.grad_lap(theta_s)
            f_model = self.problem.residual_fn(value, lap, self.pde_params(unknowns))
        return u_model, f_model, b_model

    def log_likelihood(self, theta: np.ndarray) -> float:
        theta_s, unknowns = self.split(theta)
        u_model, f_model, b_model = self._model_values(theta_s, unknowns)
        total = 0.0
        if u_model is not None:
            total += self._u_block.log_density(u_model)
            total += self._b_block.log_density(b_model)
        if f_model is not None:
            total += self._f_block.log_density(f_model)
        if not np.isfinite(total):
            raise NumericalError("non-finite log likelihood")
        return total

    def log_posterior(self, theta: np.ndarray) -> float:
        return self.log_likelihood(theta) + log_prior(theta)

    def potential(self, theta: np.ndarray) -> float:
        return -self.log_posterior(theta)

    # -- fused value + gradient ------------------------------------------------

    def neg_log_likelihood_and_grad(self, theta: np.ndarray, scales=None):
        """Negative log likelihood and its gradient in one sweep.

        Non-finite intermediates are returned as ``(inf, zeros)`` rather than
        raised, so samplers can treat them as divergences.  ``scales`` are
        optional per-hidden-layer activation multipliers (dropout masks),
        only meaningful for network surrogates.
        """
        theta_s, unknowns = self.split(theta)
        grad = np.zeros(self.dim)
        n_s = self.surrogate.n_params
        n_u = self.dataset.n_u
        value = 0.0

        # overflow inside the sweeps is a handled outcome (divergence)
        with np.errstate(over="ignore", invalid="ignore"):
            if self._ub_eval is not None:
                ub, tape = self._ub_eval.value(theta_s, scales=scales)
                u_model, b_model = ub[:n_u], ub[n_u:]
                value -= self._u_block.log_density(u_model)
                value -= self._b_block.log_density(b_model)
                d_ub = np.concatenate([
                    self._u_block.weighted_residual(u_model),
                    self._b_block.weighted_residual(b_model),
                ])
                grad[:n_s] += self._ub_eval.value_vjp(tape, d_ub)

            if self._f_eval is not None:
                params = self.pde_params(unknowns)
                fvalue, _, lap, tape = self._f_eval.grad_lap(theta_s, scales=scales)
                f_model = self.problem.residual_fn(fvalue, lap, params)
                value -= self._f_block.log_density(f_model)
                w = self._f_block.weighted_residual(f_model)
                d_val, d_lap, d_unknown = self.problem.residual_partials_fn(
                    fvalue, lap, params)
                d_grad = np.zeros((w.shape[0], 1))
                grad[:n_s] += self._f_eval.grad_lap_vjp(tape, w * d_val, d_grad, w * d_lap)
                for i, name in enumerate(self.unknown_names):
                    if name in d_unknown:
                        grad[n_s + i] += float(w @ d_unknown[name])

        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            return np.inf, np.zeros(self.dim)
        return value, grad

    def potential_and_grad(self, theta: np.ndarray):
        """Negative log posterior and its gradient in one sweep."""
        theta = np.asarray(theta, dtype=np.float64)
        value, grad = self.neg_log_likelihood_and_grad(theta)
        if not np.isfinite(value):
            return np.inf, np.zeros(self.dim)
        with np.errstate(over="ignore"):
            value += 0.5 * float(theta @ theta) + 0.5 * self.dim * _LOG_2PI
        if not np.isfinite(value):
            return np.inf, np.zeros(self.dim)
        return value, grad + theta

    def grad_log_posterior(self, theta: np.ndarray) -> np.ndarray:
        _, grad = self.potential_and_grad(theta)
        return -grad

    # -- prediction -------------------------------------------------------------

    def predict(self, theta: np.ndarray, X: np.ndarray, quantity: str) -> np.ndarray:
        """Model value of ``u`` or ``f`` at arbitrary points for one draw."""
        theta_s, unknowns = self.split(theta)
        if quantity == "u":
            return self.surrogate.value_at(theta_s, X)
        if quantity == "f":
            if not self.problem.has_residual:
                raise ConfigurationError(f"{self.problem.name} has no forcing term")
            value, _, hess = self.surrogate.jet_at(theta_s, X)
            return self.problem.residual_fn(value, hess.sum(axis=1), self.pde_params(unknowns))
        raise ConfigurationError(f"unknown quantity {quantity!r}")


def predictive_stats(target: LogPosteriorTarget, samples: PosteriorSamples,
                     eval_points: np.ndarray, quantity: str = "u"):
    """Pointwise mean and population standard deviation over posterior draws.

    Uses Welford's recurrence, so a single pass over the draws is numerically
    equivalent to the direct two-pass formula.
    """
    if len(samples) < 2:
        raise ValueError("predictive statistics need at least two draws")
    eval_points = np.asarray(eval_points, dtype=np.float64)
    n_pts = eval_points.shape[0]
    mean = np.zeros(n_pts)
    m2 = np.zeros(n_pts)
    for count, theta in enumerate(samples.draws, start=1):
        values = target.predict(theta, eval_points, quantity)
        delta = values - mean
        mean += delta / count
        m2 += delta * (values - mean)
    return mean, np.sqrt(m2 / len(samples))
