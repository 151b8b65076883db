"""Configuration-driven experiment runs and prior studies.

A run assembles problem + dataset + surrogate + estimator from a JSON
document, produces posterior (or point) predictions on an evaluation grid
and writes three artifacts into the output directory:

``prediction_u.csv`` / ``prediction_f.csv``
    columns ``x[,y],mean,std,exact`` with full-precision floats;
``summary.json``
    deterministic run summary (byte-identical under a fixed seed);
``diagnostics.json``
    wall-clock timings and optimizer/sampler traces (not byte-stable).

Two settings profiles exist: ``paper`` reproduces the published run sizes,
``desk`` is the reduced profile the acceptance suite uses.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__
from .adam import AdamState
from .baselines import (
    DropoutConfig,
    dropout_predict,
    dropout_train,
    estimate_prior_kernel,
    gp_regress,
    pinn_train,
    sample_prior_outputs,
)
from .datagen import NoiseSpec, build_experiment_dataset, experiment_noise_cases
from .errors import ConfigurationError
from .flow import FlowConfig, flow_fit, flow_sample
from .hmc import HmcConfig, hmc_sample
from .klbasis import KlSurrogate, kl_eigenpairs
from .mlp import MlpArchitecture, MlpSurrogate, PriorScales, sample_prior
from .posterior import LogPosteriorTarget, PosteriorSamples, predictive_stats
from .problems import get_problem, problem_names
from .vi import ViParams, vi_fit, vi_sample

__all__ = [
    "ExperimentConfig",
    "RunSummary",
    "run_experiment",
    "prior_density_study",
    "prior_covariance_study",
    "kernel_study_cases",
    "PROFILES",
    "ESTIMATORS",
]

ESTIMATORS = ("hmc", "vi", "dnf", "dropout", "pinn", "gpr")
SURROGATES = ("bnn", "kl")

PROFILES = {
    "paper": {
        "hmc": {"step_size": 0.1, "leapfrog_steps": 50, "burn_in": 2000,
                "total_samples": 15_000, "keep_last": 10_000},
        "vi": {"n_steps": 200_000, "batch_size": 5, "learning_rate": 1e-3},
        "dnf": {"time_span": 1.0, "euler_steps_forward": 50, "euler_steps_inverse": 10,
                "hidden_widths": (128, 128, 128), "train_steps": 100_000,
                "batch_size": 16, "learning_rate": 1e-4},
        "dropout": {"rate": 0.05, "train_steps": 200_000, "predict_passes": 10_000,
                    "learning_rate": 1e-3},
        "pinn": {"n_steps": 200_000, "learning_rate": 1e-3},
        "gpr": {"kernel_samples": 100_000},
        "grid_1d": 201, "grid_2d": 101, "predictive_draws": 10_000,
    },
    "desk": {
        "hmc": {"step_size": 0.1, "leapfrog_steps": 50, "burn_in": 500,
                "total_samples": 2500, "keep_last": 2000},
        "vi": {"n_steps": 20_000, "batch_size": 5, "learning_rate": 1e-3},
        "dnf": {"time_span": 1.0, "euler_steps_forward": 50, "euler_steps_inverse": 10,
                "hidden_widths": (128, 128, 128), "train_steps": 10_000,
                "batch_size": 16, "learning_rate": 1e-3},
        "dropout": {"rate": 0.05, "train_steps": 20_000, "predict_passes": 10_000,
                    "learning_rate": 1e-3},
        # point-estimate training is cheap, so the desk profile keeps the
        # full step count
        "pinn": {"n_steps": 200_000, "learning_rate": 1e-3},
        "gpr": {"kernel_samples": 100_000},
        "grid_1d": 201, "grid_2d": 51, "predictive_draws": 2000,
    },
}

KL_TERMS = 20
KL_CORR_LENGTH = 0.25
KL_HALF_WIDTH = 1.0
BNN_HIDDEN = (50, 50)


def _derive_seed(seed: int, role: int) -> int:
    state = np.random.SeedSequence(entropy=seed, spawn_key=(role,)).generate_state(2)
    return int(state[0]) ^ (int(state[1]) << 31)


@dataclass
class ExperimentConfig:
    """One experiment run; unspecified sampler fields fall back to the profile."""

    experiment: str
    surrogate: str = "bnn"
    estimator: str = "hmc"
    noise: float = 0.01
    profile: str = "desk"
    seed: int = 0
    overrides: dict = field(default_factory=dict)
    noise_override: dict | None = None
    output_dir: str | None = None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigurationError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def validate(self):
        if self.experiment not in problem_names():
            raise ConfigurationError(
                f"unknown experiment {self.experiment!r}; catalog: "
                f"{', '.join(problem_names())}"
            )
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(
                f"unknown estimator {self.estimator!r}; choose from {ESTIMATORS}"
            )
        if self.surrogate not in SURROGATES:
            raise ConfigurationError(
                f"unknown surrogate {self.surrogate!r}; choose from {SURROGATES}"
            )
        if self.profile not in PROFILES:
            raise ConfigurationError(f"unknown profile {self.profile!r}")
        problem = get_problem(self.experiment)
        if self.surrogate == "kl" and problem.spatial_dim != 1:
            raise ConfigurationError("the expansion surrogate covers 1d problems only")
        if self.estimator == "dnf" and self.surrogate != "kl":
            raise ConfigurationError("the flow estimator requires the kl surrogate")
        if self.estimator in ("dropout", "pinn") and self.surrogate != "bnn":
            raise ConfigurationError(f"{self.estimator} requires the bnn surrogate")
        if self.estimator == "gpr" and self.experiment != "regression":
            raise ConfigurationError("gpr applies to the regression experiment only")
        if self.noise_override is None:
            cases = experiment_noise_cases(self.experiment)
            if self.noise not in cases:
                raise ConfigurationError(
                    f"{self.experiment} has no noise case {self.noise}; "
                    f"available: {sorted(cases)}"
                )

    def resolved(self, section: str) -> dict:
        merged = dict(PROFILES[self.profile][section])
        extra = self.overrides.get(section, {})
        unknown = set(extra) - set(merged)
        if unknown:
            raise ConfigurationError(f"unknown {section} override keys: {sorted(unknown)}")
        merged.update(extra)
        return merged

    def echo(self) -> dict:
        # scientific configuration only; output paths do not affect results
        return {
            "experiment": self.experiment,
            "surrogate": self.surrogate,
            "estimator": self.estimator,
            "noise": self.noise,
            "noise_override": self.noise_override,
            "profile": self.profile,
            "seed": self.seed,
            "overrides": self.overrides,
        }


@dataclass
class RunSummary:
    """Deterministic result record written to ``summary.json``."""

    engine_version: str
    config: dict
    mode: str
    dataset_counts: dict
    estimator_config: dict
    k_mean: float | None
    k_std: float | None
    rel_l2_u: float
    rel_l2_f: float | None
    mean_std_u: float
    mean_std_f: float | None
    diagnostics: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def _build_surrogate(config: ExperimentConfig, problem):
    if config.surrogate == "bnn":
        widths = tuple(config.overrides.get("bnn_hidden", BNN_HIDDEN))
        return MlpSurrogate(MlpArchitecture(problem.spatial_dim, widths))
    basis = kl_eigenpairs(KL_CORR_LENGTH, KL_HALF_WIDTH,
                          int(config.overrides.get("kl_terms", KL_TERMS)))
    return KlSurrogate(basis)


def _eval_grid(problem, profile_cfg) -> np.ndarray:
    if problem.spatial_dim == 1:
        lo, hi = problem.domain[0]
        return np.linspace(lo, hi, profile_cfg["grid_1d"])[:, None]
    n = profile_cfg["grid_2d"]
    (x_lo, x_hi), (y_lo, y_hi) = problem.domain
    xs = np.linspace(x_lo, x_hi, n)
    ys = np.linspace(y_lo, y_hi, n)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _prediction_csv(points, mean, std, exact) -> str:
    dim = points.shape[1]
    header = ",".join((["x", "y"][:dim]) + ["mean", "std", "exact"])
    lines = [header]
    for i in range(points.shape[0]):
        coords = [repr(float(c)) for c in points[i]]
        lines.append(",".join(coords + [repr(float(mean[i])), repr(float(std[i])),
                                        repr(float(exact[i]))]))
    return "\n".join(lines) + "\n"


def _rel_l2(mean, exact) -> float:
    return float(np.linalg.norm(mean - exact) / np.linalg.norm(exact))


def _run_sampling_estimator(config, target, profile_cfg):
    """Posterior draws plus deterministic diagnostics for hmc/vi/dnf."""
    sampler_seed = _derive_seed(config.seed, 1)
    predict_seed = _derive_seed(config.seed, 2)
    draws = profile_cfg["predictive_draws"]
    t0 = time.perf_counter()
    if config.estimator == "hmc":
        hmc_cfg = HmcConfig(seed=sampler_seed, **config.resolved("hmc"))
        init_rng = np.random.Generator(np.random.Philox(_derive_seed(config.seed, 3)))
        initial = (sample_prior(target.surrogate.arch, init_rng)
                   if config.surrogate == "bnn"
                   else init_rng.standard_normal(target.surrogate.n_params))
        if target.mode == "inverse":
            initial = np.concatenate([initial, init_rng.standard_normal(
                target.dim - len(initial))])
        samples = hmc_sample(target, hmc_cfg, initial=initial)
        elapsed = time.perf_counter() - t0
        diag = {
            "acceptance_rate": samples.acceptance_rate,
            **samples.diagnostics,
        }
        return samples, diag, {"sampler_seconds": elapsed}
    if config.estimator == "vi":
        vi_cfg = config.resolved("vi")
        params, trace = vi_fit(
            target, init=ViParams.initial(target.dim),
            n_steps=vi_cfg["n_steps"], batch_size=vi_cfg["batch_size"],
            adam=AdamState(lr=vi_cfg["learning_rate"]), seed=sampler_seed,
        )
        samples = vi_sample(params, draws, seed=predict_seed)
        elapsed = time.perf_counter() - t0
        diag = {"objective_initial": trace[0][1], "objective_final": trace[-1][1]}
        return samples, diag, {"sampler_seconds": elapsed,
                               "objective_trace": trace[-50:]}
    # dnf
    dnf_cfg = config.resolved("dnf")
    euler_steps = (dnf_cfg["euler_steps_inverse"] if target.mode == "inverse"
                   else dnf_cfg["euler_steps_forward"])
    flow_cfg = FlowConfig(
        time_span=dnf_cfg["time_span"], euler_steps=euler_steps,
        hidden_widths=tuple(dnf_cfg["hidden_widths"]),
        train_steps=dnf_cfg["train_steps"], batch_size=dnf_cfg["batch_size"],
        learning_rate=dnf_cfg["learning_rate"], seed=sampler_seed,
    )
    net, trace = flow_fit(target, flow_cfg)
    samples = flow_sample(net, draws, seed=predict_seed)
    elapsed = time.perf_counter() - t0
    diag = {"objective_initial": trace[0][1], "objective_final": trace[-1][1]}
    return samples, diag, {"sampler_seconds": elapsed, "objective_trace": trace[-50:]}


def _summary_from_samples(config, target, samples, grid):
    problem = target.problem
    mean_u, std_u = predictive_stats(target, samples, grid, "u")
    exact_u = problem.exact_u(grid)
    result = {
        "mean_u": mean_u, "std_u": std_u, "exact_u": exact_u,
        "mean_f": None, "std_f": None, "exact_f": None,
    }
    if problem.has_residual:
        mean_f, std_f = predictive_stats(target, samples, grid, "f")
        result.update(mean_f=mean_f, std_f=std_f, exact_f=problem.exact_f(grid))
    k_mean = k_std = None
    if target.mode == "inverse":
        k_draws = samples.draws[:, target.surrogate.n_params]
        k_mean, k_std = float(k_draws.mean()), float(k_draws.std())
    return result, k_mean, k_std


def run_experiment(config: ExperimentConfig):
    """Execute one configured run; returns ``(summary, output_dir)``."""
    config.validate()
    problem = get_problem(config.experiment)
    profile_cfg = PROFILES[config.profile]
    noise_override = (NoiseSpec(**config.noise_override)
                      if config.noise_override is not None else None)
    dataset = build_experiment_dataset(config.experiment, config.noise, config.seed,
                                       noise_override=noise_override)
    surrogate = _build_surrogate(config, problem)
    mode = "inverse" if problem.unknown_params else "forward"
    grid = _eval_grid(problem, profile_cfg)

    wall_start = time.perf_counter()
    timing: dict = {}
    extra_diag: dict = {}

    if config.estimator in ("hmc", "vi", "dnf"):
        target = LogPosteriorTarget(problem, surrogate, dataset, mode)
        samples, diag, extra_diag = _run_sampling_estimator(config, target, profile_cfg)
        fields, k_mean, k_std = _summary_from_samples(config, target, samples, grid)
        estimator_cfg = config.resolved(config.estimator)
    elif config.estimator == "pinn":
        target = LogPosteriorTarget(problem, surrogate, dataset, mode)
        pinn_cfg = config.resolved("pinn")
        t0 = time.perf_counter()
        theta, loss_trace = pinn_train(target, n_steps=pinn_cfg["n_steps"],
                                       learning_rate=pinn_cfg["learning_rate"],
                                       seed=_derive_seed(config.seed, 1))
        extra_diag = {"sampler_seconds": time.perf_counter() - t0,
                      "loss_trace": loss_trace[-50:]}
        mean_u = target.predict(theta, grid, "u")
        fields = {"mean_u": mean_u, "std_u": np.zeros_like(mean_u),
                  "exact_u": problem.exact_u(grid),
                  "mean_f": None, "std_f": None, "exact_f": None}
        if problem.has_residual:
            mean_f = target.predict(theta, grid, "f")
            fields.update(mean_f=mean_f, std_f=np.zeros_like(mean_f),
                          exact_f=problem.exact_f(grid))
        k_mean = k_std = None
        if mode == "inverse":
            k_mean, k_std = float(theta[surrogate.n_params]), 0.0
        diag = {"final_loss": loss_trace[-1][1]}
        estimator_cfg = pinn_cfg
    elif config.estimator == "dropout":
        target = LogPosteriorTarget(problem, surrogate, dataset, mode)
        drop_cfg = config.resolved("dropout")
        dropout_config = DropoutConfig(rate=drop_cfg["rate"],
                                       train_steps=drop_cfg["train_steps"],
                                       predict_passes=drop_cfg["predict_passes"],
                                       learning_rate=drop_cfg["learning_rate"],
                                       seed=_derive_seed(config.seed, 1))
        t0 = time.perf_counter()
        model = dropout_train(target, dropout_config)
        passes = drop_cfg["predict_passes"]
        mean_u, std_u = dropout_predict(model, grid, n_passes=passes, quantity="u",
                                        seed=_derive_seed(config.seed, 2))
        fields = {"mean_u": mean_u, "std_u": std_u, "exact_u": problem.exact_u(grid),
                  "mean_f": None, "std_f": None, "exact_f": None}
        if problem.has_residual:
            mean_f, std_f = dropout_predict(model, grid, n_passes=passes, quantity="f",
                                            seed=_derive_seed(config.seed, 4))
            fields.update(mean_f=mean_f, std_f=std_f, exact_f=problem.exact_f(grid))
        extra_diag = {"sampler_seconds": time.perf_counter() - t0,
                      "loss_trace": model.loss_trace[-50:]}
        k_mean = k_std = None
        if mode == "inverse":
            trace = model.unknown_trace[:, 0]
            k_mean, k_std = float(trace.mean()), float(trace.std())
        diag = {"final_loss": model.loss_trace[-1][1], "rate": model.rate}
        estimator_cfg = drop_cfg
    else:  # gpr
        gpr_cfg = config.resolved("gpr")
        obs = dataset.u_obs
        all_points = np.vstack([obs.points, grid])
        t0 = time.perf_counter()
        kernel = estimate_prior_kernel(
            MlpArchitecture(problem.spatial_dim, BNN_HIDDEN), None,
            all_points[:, 0], n_samples=gpr_cfg["kernel_samples"],
            seed=_derive_seed(config.seed, 1),
        )
        n_train = len(obs)
        k_train = kernel.cov[:n_train, :n_train]
        k_cross = kernel.cov[n_train:, :n_train]
        k_diag = np.diag(kernel.cov)[n_train:]
        mean_u, std_u = gp_regress(k_train, k_cross, k_diag, obs.values, obs.noise_std)
        extra_diag = {"sampler_seconds": time.perf_counter() - t0}
        fields = {"mean_u": mean_u, "std_u": std_u, "exact_u": problem.exact_u(grid),
                  "mean_f": None, "std_f": None, "exact_f": None}
        k_mean = k_std = None
        diag = {"kernel_samples": gpr_cfg["kernel_samples"]}
        estimator_cfg = gpr_cfg

    rel_l2_f = mean_std_f = None
    if fields["mean_f"] is not None:
        rel_l2_f = _rel_l2(fields["mean_f"], fields["exact_f"])
        mean_std_f = float(np.mean(fields["std_f"]))

    summary = RunSummary(
        engine_version=__version__,
        config=config.echo(),
        mode=mode,
        dataset_counts={"n_u": dataset.n_u, "n_f": dataset.n_f, "n_b": dataset.n_b},
        estimator_config=_jsonable(estimator_cfg),
        k_mean=k_mean,
        k_std=k_std,
        rel_l2_u=_rel_l2(fields["mean_u"], fields["exact_u"]),
        rel_l2_f=rel_l2_f,
        mean_std_u=float(np.mean(fields["std_u"])),
        mean_std_f=mean_std_f,
        diagnostics=_jsonable(diag),
    )

    out_dir = None
    if config.output_dir is not None:
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "prediction_u.csv").write_text(
            _prediction_csv(grid, fields["mean_u"], fields["std_u"], fields["exact_u"]),
            newline="\n")
        if fields["mean_f"] is not None:
            (out_dir / "prediction_f.csv").write_text(
                _prediction_csv(grid, fields["mean_f"], fields["std_f"],
                                fields["exact_f"]), newline="\n")
        (out_dir / "summary.json").write_text(summary.to_json(), newline="\n")
        diagnostics = {
            "wall_time_seconds": time.perf_counter() - wall_start,
            **_jsonable(extra_diag),
        }
        (out_dir / "diagnostics.json").write_text(
            json.dumps(diagnostics, sort_keys=True, indent=2) + "\n", newline="\n")
    return summary, out_dir


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# prior studies


def _excess_kurtosis(samples: np.ndarray) -> float:
    centered = samples - samples.mean()
    m2 = float(np.mean(centered**2))
    m4 = float(np.mean(centered**4))
    return m4 / m2**2 - 3.0


def _histogram_csv(point_labels, sample_sets, bins) -> str:
    lines = ["point,bin_left,bin_right,density,gaussian_density"]
    for label, samples in zip(point_labels, sample_sets):
        density, edges = np.histogram(samples, bins=bins, density=True)
        std = samples.std()
        centers = 0.5 * (edges[:-1] + edges[1:])
        gauss = np.exp(-0.5 * (centers / std) ** 2) / (std * np.sqrt(2 * np.pi))
        for i in range(len(density)):
            lines.append(",".join([repr(float(label)), repr(float(edges[i])),
                                   repr(float(edges[i + 1])), repr(float(density[i])),
                                   repr(float(gauss[i]))]))
    return "\n".join(lines) + "\n"


def prior_density_study(output_dir, points=(0.0, 0.5, 1.0), n_samples=100_000,
                        seed=0, hidden=BNN_HIDDEN, bins=80):
    """Histograms of prior network output and derivatives at fixed points.

    Writes one CSV per quantity plus ``study_summary.json`` holding excess
    kurtosis per point with the Gaussian three-standard-error band.
    """
    if n_samples < 1000:
        raise ConfigurationError("density study needs at least 1000 samples")
    arch = MlpArchitecture(1, tuple(hidden))
    pts = np.asarray(points, dtype=np.float64)
    values, grads, hesses = sample_prior_outputs(arch, None, pts, n_samples,
                                                 seed=seed, want_jets=True)
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    band = 3.0 * np.sqrt(24.0 / n_samples)
    summary = {"n_samples": n_samples, "seed": seed, "points": pts.tolist(),
               "gaussian_kurtosis_band": band, "quantities": {}}
    for name, samples in (("u", values), ("du", grads), ("d2u", hesses)):
        (out_dir / f"density_{name}.csv").write_text(
            _histogram_csv(pts, samples.T, bins), newline="\n")
        stats = {}
        for i, p in enumerate(pts):
            ek = _excess_kurtosis(samples[:, i])
            stats[repr(float(p))] = {"excess_kurtosis": ek,
                                     "within_gaussian_band": bool(abs(ek) <= band)}
        summary["quantities"][name] = stats
    (out_dir / "study_summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", newline="\n")
    return summary


def kernel_study_cases() -> dict[str, dict]:
    """Width / weight-scale cases for the prior covariance study.

    The first three hold ``sqrt(width) * sigma_w`` fixed across widths 20,
    50 and 100; the last two change only the width at unit scales.
    """
    return {
        "w20_matched": {"hidden": (20, 20), "sigma_w": (1.0, np.sqrt(2.5), np.sqrt(2.5))},
        "w50_unit": {"hidden": (50, 50), "sigma_w": (1.0, 1.0, 1.0)},
        "w100_matched": {"hidden": (100, 100),
                         "sigma_w": (1.0, np.sqrt(0.5), np.sqrt(0.5))},
        "w20_unit": {"hidden": (20, 20), "sigma_w": (1.0, 1.0, 1.0)},
        "w100_unit": {"hidden": (100, 100), "sigma_w": (1.0, 1.0, 1.0)},
    }


def _matrix_csv(points, matrix) -> str:
    lines = [",".join(["x"] + [repr(float(p)) for p in points])]
    for i, p in enumerate(points):
        lines.append(",".join([repr(float(p))] + [repr(float(v)) for v in matrix[i]]))
    return "\n".join(lines) + "\n"


def prior_covariance_study(output_dir, cases=None, grid=None, n_samples=100_000,
                           seed=0):
    """Empirical output covariance per architecture case; one CSV each."""
    if cases is None:
        cases = kernel_study_cases()
    if not cases:
        raise ConfigurationError("at least one architecture case is required")
    if grid is None:
        grid = np.linspace(-1.0, 1.0, 13)
    grid = np.asarray(grid, dtype=np.float64)
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    estimates = {}
    for offset, (name, case) in enumerate(sorted(cases.items())):
        arch = MlpArchitecture(1, tuple(case["hidden"]))
        scales = PriorScales(weight=tuple(case["sigma_w"]),
                             bias=tuple(case.get("sigma_b", (1.0,) * 3)))
        estimate = estimate_prior_kernel(arch, scales, grid, n_samples=n_samples,
                                         seed=seed + offset)
        (out_dir / f"covariance_{name}.csv").write_text(
            _matrix_csv(grid, estimate.cov), newline="\n")
        estimates[name] = estimate
    meta = {"n_samples": n_samples, "seed": seed, "grid": grid.tolist(),
            "cases": sorted(cases)}
    (out_dir / "study_meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", newline="\n")
    return estimates
