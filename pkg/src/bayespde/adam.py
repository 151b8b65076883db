"""Bias-corrected Adam optimizer shared by every training loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError

__all__ = ["AdamState", "adam_step"]


@dataclass
class AdamState:
    """Optimizer hyperparameters and running moment estimates."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """One update; advances ``state`` in place and returns the new parameters."""
    grad = np.asarray(grad, dtype=np.float64)
    if state.m is None:
        state.m = np.zeros_like(grad)
        state.v = np.zeros_like(grad)
    if grad.shape != state.m.shape or grad.shape != np.shape(params):
        raise DimensionMismatchError("gradient shape does not match optimizer state")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
