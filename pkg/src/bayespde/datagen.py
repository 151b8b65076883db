"""Deterministic synthesis of sensor datasets.

Sensor locations come from declarative layouts, values from the problem
catalog's closed-form references, and noise from a counter-based Philox
generator, so a (layout, noise, seed) triple reproduces the same dataset on
any platform.  The stream is consumed in a fixed order: placements for the
u, f, b sets, then noise for the same sets.

Passing the same ``SensorLayout`` instance for two sets makes them share one
realized set of locations (used by the 2d inverse experiment, where u and f
are measured by the same scattered sensors).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .posterior import ObservationSet, SensorDataset
from .problems import PdeProblem, get_problem

__all__ = [
    "SensorLayout",
    "NoiseSpec",
    "generate_sensors",
    "build_experiment_dataset",
    "experiment_noise_cases",
    "dataset_to_csv",
    "RNG_ALGORITHM",
]

RNG_ALGORITHM = "philox"

_LAYOUT_KINDS = ("equidistant-1d", "uniform-random-interior", "boundary-grid", "explicit-list")


@dataclass(frozen=True, eq=False)
class SensorLayout:
    """Placement rule for one observation set.

    ``eq=False`` keeps instance identity, which is what layout sharing keys on.
    """

    kind: str
    count: int = 0
    interval: tuple[float, float] | None = None
    points: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _LAYOUT_KINDS:
            raise ConfigurationError(f"unknown layout kind {self.kind!r}")
        if self.kind != "explicit-list" and self.count < 1:
            raise ConfigurationError("layout count must be >= 1")

    @classmethod
    def equidistant(cls, count: int, interval=None) -> "SensorLayout":
        return cls(kind="equidistant-1d", count=count, interval=interval)

    @classmethod
    def random_interior(cls, count: int) -> "SensorLayout":
        return cls(kind="uniform-random-interior", count=count)

    @classmethod
    def boundary(cls, per_edge: int = 2) -> "SensorLayout":
        return cls(kind="boundary-grid", count=per_edge)

    @classmethod
    def explicit(cls, points) -> "SensorLayout":
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return cls(kind="explicit-list", count=pts.shape[0], points=pts)


@dataclass(frozen=True)
class NoiseSpec:
    """Per-set Gaussian noise standard deviations; zero means exact values."""

    sigma_u: float = 0.0
    sigma_f: float = 0.0
    sigma_b: float = 0.0

    def __post_init__(self):
        if min(self.sigma_u, self.sigma_f, self.sigma_b) < 0:
            raise ConfigurationError("noise standard deviations must be >= 0")

    def for_set(self, set_name: str) -> float:
        return {"u": self.sigma_u, "f": self.sigma_f, "b": self.sigma_b}[set_name]


def _realize_layout(layout: SensorLayout, problem: PdeProblem, rng) -> np.ndarray:
    if layout.kind == "explicit-list":
        return layout.points.copy()
    if layout.kind == "equidistant-1d":
        if problem.spatial_dim != 1:
            raise ConfigurationError("equidistant-1d layout on a 2d problem")
        lo, hi = layout.interval if layout.interval is not None else problem.domain[0]
        return np.linspace(lo, hi, layout.count)[:, None]
    if layout.kind == "uniform-random-interior":
        los = np.array([lo for lo, _ in problem.domain])
        his = np.array([hi for _, hi in problem.domain])
        pts = rng.uniform(los, his, size=(layout.count, problem.spatial_dim))
        # strictly interior: a draw landing exactly on the frame is resampled
        for _ in range(8):
            on_edge = np.any((pts == los) | (pts == his), axis=1)
            if not on_edge.any():
                break
            pts[on_edge] = rng.uniform(los, his, size=(int(on_edge.sum()), problem.spatial_dim))
        return pts
    # boundary-grid
    if problem.spatial_dim == 1:
        return problem.boundary_points()
    edges = []
    for axis in range(2):
        other = 1 - axis
        ticks = np.linspace(*problem.domain[other], layout.count)
        for bound in problem.domain[axis]:
            pts = np.empty((layout.count, 2))
            pts[:, axis] = bound
            pts[:, other] = ticks
            edges.append(pts)
    return np.vstack(edges)


def generate_sensors(problem: PdeProblem, layouts: dict[str, SensorLayout | None],
                     noise: NoiseSpec, seed: int) -> SensorDataset:
    """Place sensors, read the exact references, add seeded Gaussian noise."""
    rng = np.random.Generator(np.random.Philox(seed))
    realized: dict[int, np.ndarray] = {}
    placements: dict[str, np.ndarray | None] = {}
    for set_name in ("u", "f", "b"):
        layout = layouts.get(set_name)
        if layout is None:
            placements[set_name] = None
            continue
        key = id(layout)
        if key not in realized:
            realized[key] = _realize_layout(layout, problem, rng)
        placements[set_name] = realized[key]

    observations = {}
    for set_name in ("u", "f", "b"):
        pts = placements[set_name]
        if pts is None:
            observations[set_name] = ObservationSet.empty(problem.spatial_dim)
            continue
        pts = problem.check_points(pts)
        exact = problem.exact_f(pts) if set_name == "f" else problem.exact_u(pts)
        sigma = noise.for_set(set_name)
        values = exact + sigma * rng.standard_normal(len(exact)) if sigma > 0 else exact.copy()
        observations[set_name] = ObservationSet(pts, values, np.full(len(exact), sigma))
    return SensorDataset(u_obs=observations["u"], f_obs=observations["f"],
                         b_obs=observations["b"])


# ---------------------------------------------------------------------------
# experiment dataset catalog

_REGRESSION_POINTS = np.concatenate([
    np.linspace(-0.8, -0.2, 16), np.linspace(0.2, 0.8, 16),
])[:, None]


def _interior_u_points():
    # six interior nodes of an 8-point equipartition of [-0.7, 0.7]
    return np.linspace(-0.7, 0.7, 8)[1:-1][:, None]


def experiment_noise_cases(experiment: str) -> dict[float, NoiseSpec]:
    """Noise scale cases each experiment was studied at."""
    if experiment == "regression":
        return {0.1: NoiseSpec(sigma_u=0.1), 0.01: NoiseSpec(sigma_u=0.01)}
    if experiment in ("poisson1d", "nonlinear_poisson1d", "allen_cahn2d"):
        return {
            0.01: NoiseSpec(sigma_f=0.01, sigma_b=0.01),
            0.1: NoiseSpec(sigma_f=0.1, sigma_b=0.1),
        }
    if experiment in ("inverse_reaction1d", "inverse_reaction2d"):
        return {
            0.01: NoiseSpec(sigma_u=0.01, sigma_f=0.01, sigma_b=0.01),
            0.1: NoiseSpec(sigma_u=0.1, sigma_f=0.1, sigma_b=0.01),
        }
    raise ConfigurationError(f"no dataset catalog entry for {experiment!r}")


def _experiment_layouts(experiment: str) -> dict[str, SensorLayout | None]:
    if experiment == "regression":
        return {"u": SensorLayout.explicit(_REGRESSION_POINTS), "f": None, "b": None}
    if experiment == "poisson1d":
        return {"u": None, "f": SensorLayout.equidistant(16), "b": SensorLayout.boundary()}
    if experiment == "nonlinear_poisson1d":
        return {"u": None, "f": SensorLayout.equidistant(32), "b": SensorLayout.boundary()}
    if experiment == "allen_cahn2d":
        return {"u": None, "f": SensorLayout.random_interior(500),
                "b": SensorLayout.boundary(per_edge=25)}
    if experiment == "inverse_reaction1d":
        return {"u": SensorLayout.explicit(_interior_u_points()),
                "f": SensorLayout.equidistant(32), "b": SensorLayout.boundary()}
    if experiment == "inverse_reaction2d":
        shared = SensorLayout.random_interior(100)
        return {"u": shared, "f": shared, "b": SensorLayout.boundary(per_edge=25)}
    raise ConfigurationError(f"no dataset catalog entry for {experiment!r}")


def build_experiment_dataset(experiment: str, noise_case: float, seed: int,
                             noise_override: NoiseSpec | None = None) -> SensorDataset:
    """Dataset for a catalog experiment at one of its studied noise scales."""
    problem = get_problem(experiment)
    cases = experiment_noise_cases(experiment)
    if noise_override is not None:
        noise = noise_override
    else:
        try:
            noise = cases[noise_case]
        except KeyError:
            raise ConfigurationError(
                f"{experiment} has no noise case {noise_case}; "
                f"available: {sorted(cases)}"
            ) from None
    return generate_sensors(problem, _experiment_layouts(experiment), noise, seed)


def dataset_to_csv(dataset: SensorDataset, spatial_dim: int) -> str:
    """Serialize a dataset; columns set,x[,y],value,sigma with repr floats."""
    coord_cols = ["x", "y"][:spatial_dim]
    lines = [",".join(["set", *coord_cols, "value", "sigma"])]
    for name, obs in dataset.sets():
        for i in range(len(obs)):
            coords = [repr(float(c)) for c in obs.points[i]]
            lines.append(",".join([name, *coords, repr(float(obs.values[i])),
                                   repr(float(obs.noise_std[i]))]))
    return "\n".join(lines) + "\n"
