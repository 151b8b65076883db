"""Potential-flow transport sampler for low-dimensional posteriors.

A scalar potential network ``phi(u, t)`` defines the velocity field of the
ODE ``du/dt = grad_u phi``; integrating from 0 to the time span with forward
Euler maps base draws to posterior draws, while the log-density follows the
companion recursion that subtracts ``dt * laplacian_u phi`` per step.  Both
the gradient and the Laplacian of the potential are exact, carried by the
network's forward derivative sweep, and training differentiates through the
whole rollout by reverse accumulation across the recorded steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adam import AdamState, adam_step
from .errors import NumericalError
from .mlp import MlpArchitecture, glorot_init, grad_lap_backward, grad_lap_batch
from .posterior import PosteriorSamples

__all__ = [
    "FlowConfig",
    "PotentialNet",
    "flow_forward",
    "flow_objective_and_grad",
    "flow_fit",
    "flow_sample",
]

_LOG_2PI = float(np.log(2.0 * np.pi))
_DIVERGENCE_PATIENCE = 100


@dataclass
class FlowConfig:
    """Transport and training settings.

    ``euler_steps`` defaults differ by task: 50 for forward problems, 10 for
    inverse ones.
    """

    time_span: float = 1.0
    euler_steps: int = 50
    hidden_widths: tuple[int, ...] = (128, 128, 128)
    train_steps: int = 100_000
    batch_size: int = 16
    learning_rate: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.euler_steps < 1:
            raise ValueError("euler_steps must be >= 1")
        if self.time_span <= 0:
            raise ValueError("time_span must be positive")


class PotentialNet:
    """Scalar potential ``phi(u, t)`` over sample space plus a time input."""

    def __init__(self, sample_dim: int, config: FlowConfig, params=None, seed: int = 0):
        self.sample_dim = sample_dim
        self.config = config
        self.arch = MlpArchitecture(sample_dim + 1, config.hidden_widths)
        if params is not None:
            self.params = np.asarray(params, dtype=np.float64).copy()
        else:
            rng = np.random.Generator(np.random.Philox(seed))
            params = glorot_init(self.arch, rng)
            # zeroed output layer makes the initial transport the identity map
            n_out_block = self.arch.hidden_widths[-1] + 1
            params[-n_out_block:] = 0.0
            self.params = params

    def grad_lap(self, u: np.ndarray, t: float):
        """Gradient and Laplacian of phi over the sample coordinates.

        Returns ``(grad (B, d), lap (B,), tape)``.
        """
        inputs = np.concatenate([u, np.full((u.shape[0], 1), t)], axis=1)
        _, grad, lap, tape = grad_lap_batch(
            self.arch, self.params, inputs, n_coords=self.sample_dim
        )
        return grad, lap, tape

    def grad_lap_vjp(self, tape, d_grad, d_lap):
        """Parameter and sample-space adjoints for the ``grad_lap`` outputs."""
        d_values = np.zeros(d_lap.shape[0])
        theta_bar, x_bar = grad_lap_backward(self.arch, tape, d_values, d_grad, d_lap)
        return theta_bar, x_bar[:, : self.sample_dim]


def _base_log_density(z: np.ndarray) -> np.ndarray:
    return -0.5 * (z * z).sum(axis=1) - 0.5 * z.shape[1] * _LOG_2PI


def flow_forward(potential, z: np.ndarray, time_span: float = 1.0,
                 euler_steps: int = 50, record: bool = False):
    """Transport base draws and their log-density through the potential flow.

    Returns ``(u, log_density)`` or ``(u, log_density, steps)`` when
    ``record`` is set; ``steps`` holds ``(u_i, tape_i)`` per Euler step for
    the training reverse sweep.  ``potential`` needs ``grad_lap(u, t)``.
    """
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    dt = time_span / euler_steps
    u = z.copy()
    log_density = _base_log_density(z)
    steps = []
    for i in range(euler_steps):
        grad, lap, tape = potential.grad_lap(u, i * dt)
        if record:
            steps.append((u, tape))
        u = u + dt * grad
        log_density = log_density - dt * lap
        if not np.all(np.isfinite(u)):
            raise NumericalError(f"flow trajectory non-finite at step {i}")
    if record:
        return u, log_density, steps
    return u, log_density


def flow_objective_and_grad(net: PotentialNet, target, z: np.ndarray,
                            time_span: float, euler_steps: int):
    """Divergence estimate over a fixed base batch and its parameter gradient.

    The reverse sweep walks the recorded Euler steps backwards: each step
    receives the downstream sample-space adjoint through its velocity output
    and a constant adjoint on its density decrement, and returns both the
    potential-parameter contribution and the adjoint for the previous step.
    """
    dt = time_span / euler_steps
    u, log_density, steps = flow_forward(net, z, time_span, euler_steps, record=True)
    lam = np.empty_like(u)
    potentials = np.empty(z.shape[0])
    for j in range(z.shape[0]):
        potentials[j], lam[j] = target.potential_and_grad(u[j])
    objective = float(np.mean(log_density + potentials))
    if not np.isfinite(objective):
        return objective, None

    grad_params = np.zeros_like(net.params)
    d_lap = np.full(z.shape[0], -dt)
    for _, tape in reversed(steps):
        theta_bar, u_bar = net.grad_lap_vjp(tape, dt * lam, d_lap)
        grad_params += theta_bar
        lam = lam + u_bar
    return objective, grad_params / z.shape[0]


def flow_fit(target, config: FlowConfig, seed: int | None = None,
             trace_every: int = 100):
    """Train a potential network to transport N(0, I) onto ``target``.

    Returns ``(net, trace)``; the trace holds ``(step, objective)`` pairs of
    the Monte-Carlo divergence estimate.  ``target`` must expose ``dim`` and
    ``potential_and_grad``.
    """
    seed = config.seed if seed is None else seed
    dim = target.dim
    net = PotentialNet(dim, config, seed=seed)
    rng = np.random.Generator(np.random.Philox((seed, 1)))
    state = AdamState(lr=config.learning_rate)
    trace = []
    bad_streak = 0

    for step in range(config.train_steps):
        z = rng.standard_normal((config.batch_size, dim))
        objective, grad_params = flow_objective_and_grad(
            net, target, z, config.time_span, config.euler_steps
        )
        if grad_params is None:
            bad_streak += 1
            if bad_streak >= _DIVERGENCE_PATIENCE:
                raise NumericalError(
                    f"flow objective non-finite for {bad_streak} consecutive steps"
                )
            continue
        bad_streak = 0
        if step % trace_every == 0:
            trace.append((step, objective))
        net.params = adam_step(state, net.params, grad_params)

    return net, trace


def flow_sample(net: PotentialNet, count: int, seed: int = 0,
                batch: int = 1024) -> PosteriorSamples:
    """Map fresh base draws through the trained transport."""
    rng = np.random.Generator(np.random.Philox(seed))
    cfg = net.config
    out = np.empty((count, net.sample_dim))
    done = 0
    while done < count:
        b = min(batch, count - done)
        z = rng.standard_normal((b, net.sample_dim))
        u, _ = flow_forward(net, z, cfg.time_span, cfg.euler_steps)
        out[done : done + b] = u
        done += b
    return PosteriorSamples(draws=out, sampler="dnf", seed=seed)
