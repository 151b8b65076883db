"""Truncated Karhunen-Loeve surrogate for the exponential-kernel process.

The kernel ``exp(-|x - x'| / corr_length)`` on ``[-a, a]`` has closed-form
eigenpairs: cosine modes with frequencies solving ``c = w tan(w a)`` and sine
modes solving ``w = -c tan(w a)``, with ``c = 1 / corr_length`` and eigenvalue
``2 c / (w^2 + c^2)``.  Frequencies are isolated by bisection inside the
analytically known brackets between tangent singularities, so the search
cannot escape a mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DimensionMismatchError,
    DomainError,
)

__all__ = ["KLBasis", "kl_eigenpairs", "kl_eval"]

_BRACKET_INSET = 1e-9
_ROOT_XTOL = 1e-12


@dataclass(frozen=True)
class KLBasis:
    """Leading eigenpairs of the exponential kernel on ``[-a, a]``.

    ``frequencies`` and ``parities`` define the eigenfunctions:
    ``cos(w x) / norm`` for parity ``+1`` and ``sin(w x) / norm`` for ``-1``.
    Eigenvalues are sorted in descending order.
    """

    corr_length: float
    half_width: float
    eigenvalues: np.ndarray
    frequencies: np.ndarray
    parities: np.ndarray
    norms: np.ndarray

    @property
    def n_terms(self) -> int:
        return len(self.eigenvalues)

    def eigenfunction_matrix(self, x: np.ndarray, derivative: int = 0) -> np.ndarray:
        """Matrix of eigenfunction (derivative) values, shape ``(len(x), n)``."""
        x = np.asarray(x, dtype=np.float64)
        w = self.frequencies
        wx = np.outer(x, w)
        cos_modes = self.parities > 0
        if derivative == 0:
            psi = np.where(cos_modes, np.cos(wx), np.sin(wx))
        elif derivative == 1:
            psi = np.where(cos_modes, -w * np.sin(wx), w * np.cos(wx))
        elif derivative == 2:
            psi = -(w * w) * np.where(cos_modes, np.cos(wx), np.sin(wx))
        else:
            raise ValueError("derivative order must be 0, 1 or 2")
        return psi / self.norms

    def energy_fraction(self) -> float:
        """Retained fraction of the total kernel energy ``2 a``."""
        return float(self.eigenvalues.sum() / (2.0 * self.half_width))


def kl_eigenpairs(corr_length: float, half_width: float, n_terms: int) -> KLBasis:
    """Solve for the leading ``n_terms`` eigenpairs.

    Roots are bisected to ``1e-12`` inside brackets that each contain exactly
    one frequency; modes come out interleaved cos/sin with ascending
    frequency, hence descending eigenvalue.
    """
    if corr_length <= 0 or half_width <= 0:
        raise ValueError("corr_length and half_width must be positive")
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    a = float(half_width)
    c = 1.0 / float(corr_length)

    def cos_eq(w):
        return c - w * np.tan(w * a)

    def sin_eq(w):
        return w + c * np.tan(w * a)

    freqs, parities = [], []
    for mode in range(n_terms):
        k, is_cos = divmod(mode, 2)
        is_cos = is_cos == 0
        if is_cos:
            lo = k * np.pi / a + _BRACKET_INSET
            hi = (k + 0.5) * np.pi / a - _BRACKET_INSET
            equation = cos_eq
        else:
            lo = (k + 0.5) * np.pi / a + _BRACKET_INSET
            hi = (k + 1.0) * np.pi / a - _BRACKET_INSET
            equation = sin_eq
        try:
            w = bisect(equation, lo, hi, xtol=_ROOT_XTOL)
        except ValueError as exc:
            raise ConvergenceError(f"frequency bracketing failed for mode {mode}") from exc
        freqs.append(w)
        parities.append(1 if is_cos else -1)

    freqs = np.array(freqs)
    parities = np.array(parities)
    eigenvalues = 2.0 * c / (freqs**2 + c**2)
    sin2w = np.sin(2.0 * freqs * a) / (2.0 * freqs)
    norms = np.sqrt(np.where(parities > 0, a + sin2w, a - sin2w))
    return KLBasis(
        corr_length=float(corr_length),
        half_width=a,
        eigenvalues=eigenvalues,
        frequencies=freqs,
        parities=parities,
        norms=norms,
    )


def kl_eval(basis: KLBasis, theta: np.ndarray, x) -> "Jet":
    """Expansion value and spatial derivatives at a single point."""
    from .mlp import Jet

    x = float(np.asarray(x).reshape(()))
    if abs(x) > basis.half_width:
        raise DomainError(f"x={x} outside [-{basis.half_width}, {basis.half_width}]")
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape[0] < basis.n_terms:
        raise DimensionMismatchError(
            f"theta has {theta.shape[0]} entries, basis needs {basis.n_terms}"
        )
    coeff = np.sqrt(basis.eigenvalues) * theta[: basis.n_terms]
    xa = np.array([x])
    value = float(basis.eigenfunction_matrix(xa, 0)[0] @ coeff)
    d1 = float(basis.eigenfunction_matrix(xa, 1)[0] @ coeff)
    d2 = float(basis.eigenfunction_matrix(xa, 2)[0] @ coeff)
    return Jet(value, np.array([d1]), np.array([d2]))


class KlSurrogate:
    """Surrogate-protocol adapter around a truncated expansion."""

    def __init__(self, basis: KLBasis):
        self.basis = basis
        self._sqrt_eigs = np.sqrt(basis.eigenvalues)

    @property
    def n_params(self) -> int:
        return self.basis.n_terms

    @property
    def input_dim(self) -> int:
        return 1

    def _check_points(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != 1:
            raise DimensionMismatchError("points must have shape (P, 1)")
        if np.any(np.abs(X) > self.basis.half_width):
            raise DomainError("points outside the expansion interval")
        return X[:, 0]

    def _design(self, x, derivative):
        return self.basis.eigenfunction_matrix(x, derivative) * self._sqrt_eigs

    def bind(self, points: np.ndarray) -> "BoundKl":
        return BoundKl(self, self._check_points(points))

    def value_at(self, theta, X):
        x = self._check_points(X)
        return self._design(x, 0) @ theta

    def jet_at(self, theta, X):
        x = self._check_points(X)
        values = self._design(x, 0) @ theta
        grad = (self._design(x, 1) @ theta)[:, None]
        hess = (self._design(x, 2) @ theta)[:, None]
        return values, grad, hess

    def sample_prior(self, rng):
        return rng.standard_normal(self.n_params)


class BoundKl:
    """Expansion evaluator with design matrices precomputed for fixed points."""

    def __init__(self, surrogate: KlSurrogate, x: np.ndarray):
        self.surrogate = surrogate
        self._b0 = surrogate._design(x, 0)
        self._b1 = surrogate._design(x, 1)
        self._b2 = surrogate._design(x, 2)

    def value(self, theta, scales=None):
        if scales is not None:
            raise ConfigurationError("activation scaling does not apply to expansions")
        return self._b0 @ theta, None

    def value_vjp(self, tape, d_values):
        return d_values @ self._b0

    def grad_lap(self, theta, scales=None):
        if scales is not None:
            raise ConfigurationError("activation scaling does not apply to expansions")
        values = self._b0 @ theta
        grad = (self._b1 @ theta)[:, None]
        lap = self._b2 @ theta
        return values, grad, lap, None

    def grad_lap_vjp(self, tape, d_values, d_grad, d_lap):
        return d_values @ self._b0 + d_grad[:, 0] @ self._b1 + d_lap @ self._b2
