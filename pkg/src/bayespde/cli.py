"""Command-line harness.

Subcommands: ``run <config.json>`` executes one experiment, ``list`` prints
the catalog, ``prior-density`` and ``prior-cov`` run the prior studies.
Relative output paths resolve against ``$BAYESPDE_OUTPUT_ROOT`` (default
``./runs``).  Exit codes: 0 success, 2 configuration error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ConvergenceError, NumericalError
from .datagen import experiment_noise_cases
from .experiments import (
    ESTIMATORS,
    PROFILES,
    ExperimentConfig,
    kernel_study_cases,
    prior_covariance_study,
    prior_density_study,
    run_experiment,
)
from .problems import get_problem, problem_names

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _output_root() -> Path:
    return Path(os.environ.get("BAYESPDE_OUTPUT_ROOT", "runs"))


def _resolve_output(path_str: str | None, default_name: str) -> str:
    path = Path(path_str) if path_str else Path(default_name)
    if not path.is_absolute():
        path = _output_root() / path
    return str(path)


def _cmd_run(args) -> int:
    config_path = Path(args.config)
    if not config_path.exists():
        print(f"error: config file {config_path} not found", file=sys.stderr)
        return EXIT_CONFIG
    config = ExperimentConfig.from_json(config_path.read_text())
    if config.output_dir is None:
        config.output_dir = f"{config.experiment}_{config.estimator}_{config.seed}"
    config.output_dir = _resolve_output(config.output_dir, config.experiment)
    summary, out_dir = run_experiment(config)
    print(f"wrote {out_dir}/summary.json")
    if summary.k_mean is not None:
        print(f"k mean {summary.k_mean:.6g}, std {summary.k_std:.6g}")
    print(f"relative L2 (u): {summary.rel_l2_u:.6g}")
    return EXIT_OK


def _cmd_list(_args) -> int:
    print("experiments:")
    for name in problem_names():
        problem = get_problem(name)
        cases = ", ".join(str(c) for c in sorted(experiment_noise_cases(name)))
        kind = "inverse" if problem.unknown_params else "forward"
        print(f"  {name:22s} {problem.spatial_dim}d {kind:8s} noise cases: {cases}")
    print(f"estimators: {', '.join(ESTIMATORS)}")
    print(f"profiles:   {', '.join(PROFILES)}")
    print("surrogates: bnn (tanh network), kl (truncated expansion, 1d only)")
    return EXIT_OK


def _cmd_prior_density(args) -> int:
    out = _resolve_output(args.out, "prior_density")
    summary = prior_density_study(out, points=tuple(args.points),
                                  n_samples=args.samples, seed=args.seed)
    print(f"wrote {out}/study_summary.json")
    for quantity, stats in summary["quantities"].items():
        flags = ", ".join(
            f"x={p}: {'gaussian' if s['within_gaussian_band'] else 'non-gaussian'}"
            for p, s in stats.items()
        )
        print(f"  {quantity}: {flags}")
    return EXIT_OK


def _cmd_prior_cov(args) -> int:
    cases = kernel_study_cases()
    if args.case != ["all"]:
        unknown = set(args.case) - set(cases)
        if unknown:
            raise ConfigurationError(
                f"unknown kernel cases {sorted(unknown)}; "
                f"available: {', '.join(sorted(cases))}"
            )
        cases = {name: cases[name] for name in args.case}
    out = _resolve_output(args.out, "prior_covariance")
    grid = np.linspace(args.grid_min, args.grid_max, args.grid_points)
    prior_covariance_study(out, cases=cases, grid=grid, n_samples=args.samples,
                           seed=args.seed)
    print(f"wrote covariance matrices for {len(cases)} case(s) to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayespde",
        description="Bayesian inference for PDE problems from noisy sensor data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("config", help="path to the experiment config JSON")
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("list", help="show the experiment catalog")
    p_list.set_defaults(func=_cmd_list)

    p_density = sub.add_parser("prior-density",
                               help="histogram study of prior outputs and derivatives")
    p_density.add_argument("--samples", type=int, default=100_000)
    p_density.add_argument("--seed", type=int, default=0)
    p_density.add_argument("--points", type=float, nargs="+", default=[0.0, 0.5, 1.0])
    p_density.add_argument("--out", default=None)
    p_density.set_defaults(func=_cmd_prior_density)

    p_cov = sub.add_parser("prior-cov",
                           help="empirical prior covariance matrices per architecture")
    p_cov.add_argument("--samples", type=int, default=100_000)
    p_cov.add_argument("--seed", type=int, default=0)
    p_cov.add_argument("--case", nargs="+", default=["all"])
    p_cov.add_argument("--grid-min", type=float, default=-1.0)
    p_cov.add_argument("--grid-max", type=float, default=1.0)
    p_cov.add_argument("--grid-points", type=int, default=13)
    p_cov.add_argument("--out", default=None)
    p_cov.set_defaults(func=_cmd_prior_cov)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
