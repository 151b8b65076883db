"""Catalog of PDE operators with manufactured reference solutions.

Each entry couples a residual operator acting on surrogate jets with the
closed-form solution it was manufactured from, plus the matching forcing
term.  The analytic jets of the reference solutions are stored here so the
operator tests never depend on any surrogate module.

Every operator in the catalog acts through the solution value and its
Laplacian only; the Dirichlet boundary operator is the identity trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError, DomainError
from .mlp import Jet

__all__ = ["PdeProblem", "residual", "exact_eval", "get_problem", "problem_names"]


@dataclass(frozen=True)
class PdeProblem:
    """A PDE with Dirichlet data and a manufactured reference solution.

    ``residual_fn(value, laplacian, params) -> residual`` and
    ``residual_partials(value, laplacian, params) -> (d_value, d_lap, d_params)``
    are vectorized over points.  ``unknown_params`` maps parameter names to
    their prior (mean, std); for forward problems it is empty and every
    parameter appears in ``known_params``.
    """

    name: str
    spatial_dim: int
    domain: tuple[tuple[float, float], ...]
    known_params: dict[str, float]
    unknown_params: dict[str, tuple[float, float]]
    true_params: dict[str, float]
    exact_u_fn: Callable[[np.ndarray], np.ndarray]
    exact_jet_fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]
    residual_fn: Callable | None
    residual_partials_fn: Callable | None

    @property
    def has_residual(self) -> bool:
        return self.residual_fn is not None

    @property
    def unknown_names(self) -> tuple[str, ...]:
        return tuple(self.unknown_params)

    def check_points(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.spatial_dim:
            raise DimensionMismatchError(
                f"points of dimension {X.shape[1]} on a {self.spatial_dim}-d problem"
            )
        for axis, (lo, hi) in enumerate(self.domain):
            if np.any(X[:, axis] < lo) or np.any(X[:, axis] > hi):
                raise DomainError(f"point outside domain along axis {axis}")
        return X

    def resolve_params(self, params: dict[str, float]) -> dict[str, float]:
        """Known parameters overlaid with caller-supplied unknowns."""
        merged = dict(self.known_params)
        merged.update(params)
        missing = [k for k in self.unknown_params if k not in merged]
        if missing:
            raise ConfigurationError(f"missing parameter(s) {missing} for {self.name}")
        return merged

    def exact_u(self, X) -> np.ndarray:
        X = self.check_points(X)
        return self.exact_u_fn(X)

    def exact_jet(self, X):
        X = self.check_points(X)
        return self.exact_jet_fn(X)

    def exact_f(self, X) -> np.ndarray:
        if not self.has_residual:
            raise ConfigurationError(f"{self.name} has no forcing term")
        X = self.check_points(X)
        value, _, hess = self.exact_jet_fn(X)
        merged = self.resolve_params(self.true_params)
        return self.residual_fn(value, hess.sum(axis=1), merged)

    def boundary_points(self) -> np.ndarray:
        """Endpoints (1d) of the domain; 2d boundaries are built per edge."""
        if self.spatial_dim != 1:
            raise ConfigurationError("boundary_points is defined for 1d problems")
        lo, hi = self.domain[0]
        return np.array([[lo], [hi]])


def residual(problem: PdeProblem, jet: Jet, params: dict[str, float]) -> float:
    """Apply the differential operator to a surrogate jet at one point."""
    if not problem.has_residual:
        raise ConfigurationError(f"{problem.name} has no differential operator")
    hess = np.asarray(jet.hess_diag, dtype=np.float64)
    if hess.shape[0] != problem.spatial_dim:
        raise DimensionMismatchError(
            f"jet of dimension {hess.shape[0]} on a {problem.spatial_dim}-d problem"
        )
    merged = problem.resolve_params(params)
    value = np.atleast_1d(np.float64(jet.value))
    lap = np.atleast_1d(hess.sum())
    return float(problem.residual_fn(value, lap, merged))


def exact_eval(problem: PdeProblem, which: str, x) -> float:
    """Closed-form reference value of ``u`` or ``f`` at one point."""
    X = np.atleast_1d(np.asarray(x, dtype=np.float64))[None, :]
    if which == "u":
        return float(problem.exact_u(X)[0])
    if which == "f":
        return float(problem.exact_f(X)[0])
    raise ConfigurationError(f"unknown quantity {which!r}; expected 'u' or 'f'")


# ---------------------------------------------------------------------------
# manufactured solutions

def _sin3_value(X):
    return np.sin(6.0 * X[:, 0]) ** 3


def _sin3_jet(X):
    # u = sin^3(6x): u' = 18 sin^2 cos, u'' = 216 sin - 324 sin^3
    s = np.sin(6.0 * X[:, 0])
    c = np.cos(6.0 * X[:, 0])
    value = s**3
    grad = (18.0 * s * s * c)[:, None]
    hess = (216.0 * s - 324.0 * s**3)[:, None]
    return value, grad, hess


def _sinpi2d_value(X):
    return np.sin(np.pi * X[:, 0]) * np.sin(np.pi * X[:, 1])


def _sinpi2d_jet(X):
    sx, sy = np.sin(np.pi * X[:, 0]), np.sin(np.pi * X[:, 1])
    cx, cy = np.cos(np.pi * X[:, 0]), np.cos(np.pi * X[:, 1])
    value = sx * sy
    grad = np.pi * np.stack([cx * sy, sx * cy], axis=1)
    hess = -(np.pi**2) * np.stack([value, value], axis=1)
    return value, grad, hess


# residual operators, all acting through (value, laplacian)

def _diffusion_residual(value, lap, p):
    return p["lambda"] * lap


def _diffusion_partials(value, lap, p):
    return np.zeros_like(value), np.full_like(lap, p["lambda"]), {}


def _tanh_reaction_residual(value, lap, p):
    return p["lambda"] * lap + p["k"] * np.tanh(value)


def _tanh_reaction_partials(value, lap, p):
    t = np.tanh(value)
    return p["k"] * (1.0 - t * t), np.full_like(lap, p["lambda"]), {"k": t}


def _allen_cahn_residual(value, lap, p):
    return p["lambda"] * lap + value * (value * value - 1.0)


def _allen_cahn_partials(value, lap, p):
    return 3.0 * value * value - 1.0, np.full_like(lap, p["lambda"]), {}


def _quadratic_reaction_residual(value, lap, p):
    return p["lambda"] * lap + p["k"] * value * value


def _quadratic_reaction_partials(value, lap, p):
    return 2.0 * p["k"] * value, np.full_like(lap, p["lambda"]), {"k": value * value}


_INTERVAL_07 = ((-0.7, 0.7),)
_BOX_1 = ((-1.0, 1.0), (-1.0, 1.0))

_CATALOG: dict[str, PdeProblem] = {}


def _register(problem: PdeProblem):
    _CATALOG[problem.name] = problem


_register(PdeProblem(
    name="regression",
    spatial_dim=1,
    domain=((-1.0, 1.0),),
    known_params={},
    unknown_params={},
    true_params={},
    exact_u_fn=_sin3_value,
    exact_jet_fn=_sin3_jet,
    residual_fn=None,
    residual_partials_fn=None,
))

_register(PdeProblem(
    name="poisson1d",
    spatial_dim=1,
    domain=_INTERVAL_07,
    known_params={"lambda": 0.01},
    unknown_params={},
    true_params={},
    exact_u_fn=_sin3_value,
    exact_jet_fn=_sin3_jet,
    residual_fn=_diffusion_residual,
    residual_partials_fn=_diffusion_partials,
))

_register(PdeProblem(
    name="nonlinear_poisson1d",
    spatial_dim=1,
    domain=_INTERVAL_07,
    known_params={"lambda": 0.01, "k": 0.7},
    unknown_params={},
    true_params={},
    exact_u_fn=_sin3_value,
    exact_jet_fn=_sin3_jet,
    residual_fn=_tanh_reaction_residual,
    residual_partials_fn=_tanh_reaction_partials,
))

_register(PdeProblem(
    name="allen_cahn2d",
    spatial_dim=2,
    domain=_BOX_1,
    known_params={"lambda": 0.01},
    unknown_params={},
    true_params={},
    exact_u_fn=_sinpi2d_value,
    exact_jet_fn=_sinpi2d_jet,
    residual_fn=_allen_cahn_residual,
    residual_partials_fn=_allen_cahn_partials,
))

_register(PdeProblem(
    name="inverse_reaction1d",
    spatial_dim=1,
    domain=_INTERVAL_07,
    known_params={"lambda": 0.01},
    unknown_params={"k": (0.0, 1.0)},
    true_params={"k": 0.7},
    exact_u_fn=_sin3_value,
    exact_jet_fn=_sin3_jet,
    residual_fn=_tanh_reaction_residual,
    residual_partials_fn=_tanh_reaction_partials,
))

_register(PdeProblem(
    name="inverse_reaction2d",
    spatial_dim=2,
    domain=_BOX_1,
    known_params={"lambda": 0.01},
    unknown_params={"k": (0.0, 1.0)},
    true_params={"k": 1.0},
    exact_u_fn=_sinpi2d_value,
    exact_jet_fn=_sinpi2d_jet,
    residual_fn=_quadratic_reaction_residual,
    residual_partials_fn=_quadratic_reaction_partials,
))


def problem_names() -> list[str]:
    return sorted(_CATALOG)


def get_problem(name: str) -> PdeProblem:
    try:
        return _CATALOG[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown problem {name!r}; catalog: {', '.join(problem_names())}"
        ) from None
