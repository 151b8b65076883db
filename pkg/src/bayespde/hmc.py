"""Hamiltonian Monte Carlo with identity mass and burn-in step-size control.

One chain iteration resamples the momentum, integrates the Hamiltonian flow
with the leapfrog scheme (half kick, drift, half kick per step) and applies a
Metropolis-Hastings correction accepting with probability
``min(1, exp(H_old - H_new))``.  Trajectories that produce non-finite energy
or gradients count as divergences and are rejected outright.

During burn-in the step size is retuned from the running acceptance rate
over a window of up to the last 100 iterations: above 0.9 it grows by 1.1,
below 0.6 it shrinks by 1.1; after burn-in it is frozen.  The window only
holds outcomes observed at the current step size (it restarts whenever the
step size changes, and a decision needs at least 5 fresh outcomes) -- a
lagged window turns this multiplicative rule into a relaxation oscillator
that swings the step size over decades and freezes at an arbitrary phase.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .posterior import PosteriorSamples

__all__ = ["HmcConfig", "leapfrog", "hmc_sample", "adapt_step_size"]

ADAPT_WINDOW = 100
ADAPT_FACTOR = 1.1
ADAPT_HIGH = 0.9
ADAPT_LOW = 0.6
_ADAPT_MIN_FRESH = 5
LOW_ACCEPTANCE_WARNING = 0.05


@dataclass
class HmcConfig:
    """Chain settings; ``total_samples`` counts iterations including burn-in."""

    step_size: float = 0.1
    leapfrog_steps: int = 50
    burn_in: int = 2000
    total_samples: int = 15000
    keep_last: int = 10000
    seed: int = 0

    def __post_init__(self):
        if min(self.step_size, self.leapfrog_steps, self.total_samples, self.keep_last) <= 0:
            raise ValueError("step_size, leapfrog_steps, total_samples, keep_last must be positive")
        if self.burn_in < 0 or self.burn_in >= self.total_samples:
            raise ValueError("burn_in must be non-negative and below total_samples")


def leapfrog(grad_potential, theta, r, step_size, n_steps):
    """Integrate ``n_steps`` leapfrog steps; returns ``(theta, r, diverged)``.

    Reference integrator; the sampler below fuses value and gradient
    evaluations but follows the identical update sequence.
    """
    theta = np.array(theta, dtype=np.float64)
    r = np.array(r, dtype=np.float64)
    for _ in range(n_steps):
        grad = grad_potential(theta)
        if not np.all(np.isfinite(grad)):
            return theta, r, True
        r = r - 0.5 * step_size * grad
        theta = theta + step_size * r
        grad = grad_potential(theta)
        if not np.all(np.isfinite(grad)):
            return theta, r, True
        r = r - 0.5 * step_size * grad
    return theta, r, False


def adapt_step_size(step_size: float, recent_acceptance: float) -> float:
    """Burn-in retuning rule from the running acceptance rate."""
    if recent_acceptance > ADAPT_HIGH:
        return step_size * ADAPT_FACTOR
    if recent_acceptance < ADAPT_LOW:
        return step_size / ADAPT_FACTOR
    return step_size


def _metropolis_accept(rng, h_old, h_new) -> bool:
    # standard rule: accept with probability min(1, exp(H_old - H_new))
    if not np.isfinite(h_new):
        return False
    log_alpha = h_old - h_new
    return log_alpha >= 0.0 or rng.uniform() < np.exp(log_alpha)


def hmc_sample(target, config: HmcConfig, initial: np.ndarray | None = None) -> PosteriorSamples:
    """Run one chain and return the last ``keep_last`` post-burn-in states.

    ``target`` must expose ``dim`` and ``potential_and_grad(theta)``.
    The chain starts from ``initial`` or a standard normal prior draw.
    """
    rng = np.random.Generator(np.random.Philox(config.seed))
    dim = target.dim
    theta = (np.asarray(initial, dtype=np.float64).copy() if initial is not None
             else rng.standard_normal(dim))
    potential, grad = target.potential_and_grad(theta)

    step_size = float(config.step_size)
    n_post = config.total_samples - config.burn_in
    n_keep = min(config.keep_last, n_post)
    kept = np.empty((n_keep, dim))
    window: deque[bool] = deque(maxlen=ADAPT_WINDOW)
    accepted_post = 0
    accepted_burn = 0
    divergences = 0

    for iteration in range(config.total_samples):
        r = rng.standard_normal(dim)
        h_old = potential + 0.5 * float(r @ r)

        theta_prop, r_prop = theta, r
        pot_prop, grad_prop = potential, grad
        diverged = False
        # exploding trajectories overflow benignly; they are rejected below
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(config.leapfrog_steps):
                r_prop = r_prop - 0.5 * step_size * grad_prop
                theta_prop = theta_prop + step_size * r_prop
                pot_prop, grad_prop = target.potential_and_grad(theta_prop)
                if not np.isfinite(pot_prop):
                    diverged = True
                    break
                r_prop = r_prop - 0.5 * step_size * grad_prop

            if diverged:
                divergences += 1
                accept = False
            else:
                h_new = pot_prop + 0.5 * float(r_prop @ r_prop)
                accept = _metropolis_accept(rng, h_old, h_new)
        if accept:
            theta, potential, grad = theta_prop, pot_prop, grad_prop

        in_burn_in = iteration < config.burn_in
        if in_burn_in:
            accepted_burn += accept
            window.append(accept)
            if len(window) >= _ADAPT_MIN_FRESH:
                new_step = adapt_step_size(step_size, sum(window) / len(window))
                if new_step != step_size:
                    step_size = new_step
                    window.clear()
        else:
            accepted_post += accept
            kept_index = iteration - config.burn_in - (n_post - n_keep)
            if kept_index >= 0:
                kept[kept_index] = theta

    acceptance = accepted_post / n_post if n_post else 0.0
    burn_rate = accepted_burn / config.burn_in if config.burn_in else 1.0
    diagnostics = {
        "final_step_size": step_size,
        "divergences": divergences,
        "burn_in_acceptance": burn_rate,
        "warnings": [],
    }
    if config.burn_in and burn_rate < LOW_ACCEPTANCE_WARNING:
        diagnostics["warnings"].append(
            f"burn-in acceptance {burn_rate:.3f} below {LOW_ACCEPTANCE_WARNING}; "
            "step-size tuning likely failed"
        )
    return PosteriorSamples(
        draws=kept, sampler="hmc", seed=config.seed,
        acceptance_rate=acceptance, diagnostics=diagnostics,
    )
