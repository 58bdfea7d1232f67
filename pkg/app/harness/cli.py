"""
Command line: plan, sample, smooth-check, convexify, diagnose, experiment.

Exit codes come from the exception classes in app.errors: 0 ok, 2 configuration
or parameter error, 3 regime error, 4 chain divergence, 5 failed checks.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from app import __version__
from app.convexify import (
    build_breve_U,
    build_hat_U,
    check_hat_convexity,
    check_shell_continuity,
    grid_table,
    lyapunov_check,
    verify_boundary_resolution,
    verify_breve,
    verify_oscillation,
)
from app.convexify.construction import check_grid
from app.diagnostics import diagnose, smoothing_w2_check
from app.errors import CheckFailure, ConfigurationError, SamplingError
from app.harness import io
from app.harness.config import ExperimentConfig, apply_cli_overrides, load_config
from app.harness.pipeline import (
    DIAGNOSTIC_STREAM,
    build_manifest,
    build_model,
    emit_plot_data,
    lsi_constant,
    make_plan,
    run_experiment,
    smoothing_config,
    utc_now,
)
from app.harness.templates import render_diagnostics, render_plan
from app.langevin import init_gaussian, run_chain
from app.potentials import builtin
from app.rng import make_rng
from app.smoothing import check_grad_bounds, check_value_bound, check_variance
from app.smoothing.pgauss import make_params
from app.smoothing.schemas import SmoothingConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = "config/config.json"


def _config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config or DEFAULT_CONFIG)
    return apply_cli_overrides(config, seed=args.seed, out=args.out, workers=args.workers)


def _fail_if(failed: list[str]) -> int:
    if failed:
        raise CheckFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}", failed)
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    config = _config(args)
    model = build_model(config)
    plan = make_plan(config, model, init_gaussian(model))
    print(render_plan(plan))
    if args.out:
        path = io.write_csv(Path(args.out) / "plan.csv", list(plan.as_row()), [plan.as_row()])
        print(f"✓ Plan written to {path}")
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    config = _config(args)
    model = build_model(config)
    init = init_gaussian(model)
    plan = make_plan(config, model, init)
    print(render_plan(plan))
    batch = run_chain(model, plan, init, config.n_chains, config.master_seed,
                      smoothing=smoothing_config(config, plan, config.d), workers=config.workers, thin=config.thin)
    out = Path(config.output_dir)
    path = io.write_samples(out / "samples.csv", batch.samples, batch.chain_ids)
    io.write_json(out / "samples.meta.json", {"master_seed": config.master_seed, "n_chains": batch.n, "d": batch.d,
                                              "potential": model.describe(), "plan": plan.model_dump(mode="json"),
                                              "thin": batch.thin})
    if batch.trajectory is not None:
        io.write_trajectory(out / "samples.trajectory.csv", batch.trajectory, batch.thin)
    print(f"✓ {batch.n} samples written to {path}")
    return 0


def cmd_smooth_check(args: argparse.Namespace) -> int:
    config = _config(args)
    model = build_model(config)
    mu = config.smoothing.mu if config.smoothing.mu is not None else args.mu
    cfg = SmoothingConfig(mu=mu, pg=make_params(config.smoothing.p, config.d), budget=config.smoothing.budget)
    rng = make_rng(config.master_seed, DIAGNOSTIC_STREAM)
    reports = [check_value_bound(model, cfg, args.points, args.radius, rng),
               check_grad_bounds(model, cfg, args.points, args.radius, rng)]
    for x in (np.zeros(config.d), np.full(config.d, args.radius / np.sqrt(config.d))):
        reports.append(check_variance(model, cfg, x, cfg.budget, rng))
    rows = [{**row, "pass": row["passed"]} for report in reports for row in report.rows]
    if config.d == 1:
        check = smoothing_w2_check(model, mu, config.smoothing.p, rng=rng)
        rows.append({"check": check.name, "point": "", "bound": check.rhs, "estimate": check.lhs,
                     "stderr": check.stderr, "margin": check.rhs + 3.0 * check.stderr - check.lhs,
                     "pass": check.passed})
    path = io.write_csv(Path(config.output_dir) / "smoothing.csv", io.SMOOTHING_HEADER, rows)
    failed = sorted({row["check"] for row in rows if not row["pass"]})
    for report in reports:
        print(f"{'✓' if report.passed else '✗'} {report.name}: worst margin {report.worst_margin:.3g}"
              + (" (flagged)" if report.flagged else ""))
    print(f"✓ Report written to {path}")
    return _fail_if(failed)


def cmd_convexify(args: argparse.Namespace) -> int:
    config = _config(args)
    started = utc_now()
    model = build_model(config)
    hat = build_hat_U(model, R=config.R)
    grid = check_grid(hat)
    reports = [verify_oscillation(hat, grid), *check_hat_convexity(hat, grid), check_shell_continuity(hat),
               verify_boundary_resolution(hat, grid)]
    breve = None
    if model.smoothness.alpha_N == 1.0 and model.dissipativity is not None and model.dissipativity.beta == 2.0:
        breve = build_breve_U(model, R=config.R)
        reports.extend(verify_breve(breve, check_grid(breve)))
        reports.append(lyapunov_check(model, model.dissipativity, grid))
        reports.append(lyapunov_check(breve, model.dissipativity, grid))
    else:
        logger.info("U-breve skipped: needs alpha_N = 1 and 2-dissipativity")

    out = Path(config.output_dir)
    table = grid_table(hat, grid, breve)
    header = [f"x{j}" for j in range(model.d)] + ["U", "V", "V_tilde", "hat_U", "breve_U"]
    files = [("grid", io.write_csv(out / "grid.csv", header, table))]
    rows = [{"check": r.name, "bound": r.bound, "measured": r.statistic, "pass": r.passed} for r in reports]
    files.append(("verification", io.write_csv(out / "verification.csv", io.VERIFICATION_HEADER, rows)))
    for r in reports:
        print(f"  {'✓' if r.passed else '✗'} {r.name}: {r.statistic:.6g}"
              + ("" if r.bound is None else f" (bound {r.bound:.6g})"))
    failed = [r.name for r in reports if not r.passed]
    manifest = emit_plot_data(build_manifest(config.model_dump(mode="json"), None, out, files, started, failed))
    io.write_json(out / "manifest.json", manifest.model_dump(mode="json"))
    print(f"✓ Grid and verification written to {out}")
    return _fail_if(failed)


def cmd_diagnose(args: argparse.Namespace) -> int:
    samples = io.read_samples(args.samples)
    d = samples.shape[1]
    if args.config:
        config = _config(args)
        if config.d != d:
            raise ConfigurationError(f"Samples have d={d} but the configuration says d={config.d}")
        model = build_model(config)
        gamma = args.gamma if args.gamma is not None else lsi_constant(config)
        seed, kl_method, out = config.master_seed, config.diagnostics.kl_method, Path(config.output_dir)
    else:
        if not args.potential:
            raise ConfigurationError("diagnose needs --potential or --config")
        model = builtin(args.potential, d)
        gamma, seed, kl_method = args.gamma, args.seed or 0, args.kl_method
        out = Path(args.out or ".")
    report = diagnose(samples, model, gamma=gamma, kl_method=kl_method, rng=make_rng(seed, DIAGNOSTIC_STREAM))
    io.write_csv(out / "diagnostics.csv", io.DIAGNOSTICS_HEADER, report.rows())
    text = render_diagnostics(report)
    (out / "diagnostics.txt").write_text(text, encoding="utf-8")
    print(text)
    return _fail_if(report.failed)


def cmd_experiment(args: argparse.Namespace) -> int:
    manifest = run_experiment(_config(args), strict=True)
    print(f"✓ Manifest written to {Path(manifest.output_dir) / 'manifest.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help=f"JSON or key = value experiment file (default {DEFAULT_CONFIG})")
    common.add_argument("--seed", type=int, default=None, help="Master seed (overrides the config)")
    common.add_argument("--out", default=None, help="Output directory (overrides the config)")
    common.add_argument("--workers", type=int, default=None, help="Threads for chain blocks")
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(prog="langevin-lab", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("plan", parents=[common], help="Print the step-size plan").set_defaults(func=cmd_plan)
    sub.add_parser("sample", parents=[common], help="Run chains and write samples.csv").set_defaults(func=cmd_sample)

    smooth = sub.add_parser("smooth-check", parents=[common], help="Check the smoothing bounds")
    smooth.add_argument("--mu", type=float, default=0.1, help="Smoothing radius when the config has none")
    smooth.add_argument("--points", type=int, default=8)
    smooth.add_argument("--radius", type=float, default=2.0)
    smooth.set_defaults(func=cmd_smooth_check)

    sub.add_parser("convexify", parents=[common], help="Build and verify the convexified potentials"
                   ).set_defaults(func=cmd_convexify)

    diag = sub.add_parser("diagnose", parents=[common], help="Estimate KL/TV/W2 of sample files")
    diag.add_argument("--samples", nargs="+", required=True, help="Sample CSV files (chain_id, x0, ...)")
    diag.add_argument("--potential", default=None, help="Builtin potential name when no --config is given")
    diag.add_argument("--gamma", type=float, default=None, help="LSI constant for the Talagrand check")
    diag.add_argument("--kl-method", default="quadrature", choices=["quadrature", "knn"])
    diag.set_defaults(func=cmd_diagnose)

    sub.add_parser("experiment", parents=[common], help="Plan, sample, diagnose and write a manifest"
                   ).set_defaults(func=cmd_experiment)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        return args.func(args)
    except SamplingError as e:
        logger.error("%s: %s", type(e).__name__, e)
        print(f"✗ {e}", file=sys.stderr)
        return e.exit_code
