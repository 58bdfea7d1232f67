"""
Experiment pipeline: a LangGraph workflow plan -> sample -> diagnose, looping
back to sample while step sizes of a sweep remain, then emit.

Every random stream is keyed by the master seed, so rerunning a manifest's
config reproduces its data files bit for bit under any worker count.
"""
import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, TypedDict, Union

import numpy as np
from langgraph.graph import END, StateGraph
from pydantic import BaseModel, Field

from app import __version__
from app.convexify.isoperimetry import second_moment
from app.diagnostics import bias_scaling_fit, diagnose, kl_gaussian
from app.diagnostics.schemas import BiasFit, DiagnosticsReport
from app.errors import CheckFailure, ConfigurationError, SamplingError
from app.harness.config import ExperimentConfig
from app.harness import io
from app.harness.templates import render_summary
from app.langevin import (
    Regime,
    SampleBatch,
    StepSizePlan,
    ar1_stationary_variance,
    init_gaussian,
    kl_envelope,
    plan_lsi,
    plan_nonconvex_outside_ball,
    plan_poincare,
    plan_smoothed,
    resolve_H0,
    run_chain,
)
from app.langevin.schemas import InitSpec
from app.potentials import PotentialModel, builtin
from app.rng import make_rng
from app.smoothing.pgauss import make_params
from app.smoothing.schemas import SmoothingConfig

logger = logging.getLogger(__name__)

# streams above the chain ids
DIAGNOSTIC_STREAM = 1 << 32
REFERENCE_STREAM = (1 << 32) + (1 << 16)
E2_EXTENT = 25.0


class FileRecord(BaseModel):
    path: str = Field(description="Path relative to the output directory")
    sha256: str
    schema_name: str
    schema_version: str


class RunManifest(BaseModel):
    """Config echo, resolved plan, code version, timestamps and hashed outputs."""

    config: dict[str, Any]
    plan: Optional[dict[str, Any]] = None
    code_version: str = __version__
    started_at: str
    finished_at: str
    output_dir: str
    files: list[FileRecord] = Field(default_factory=list)
    schema_versions: dict[str, str] = Field(default_factory=dict)
    passed: bool = True
    failed: list[str] = Field(default_factory=list)
    bias_fit: Optional[BiasFit] = None

    def file(self, schema_name: str) -> Optional[Path]:
        """Absolute path of the first output with this schema."""
        for record in self.files:
            if record.schema_name == schema_name:
                return Path(self.output_dir) / record.path
        return None


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def build_model(config: ExperimentConfig) -> PotentialModel:
    return builtin(config.potential.name, config.d, **config.potential.params)


def _require(value: Optional[float], name: str, regime: Regime) -> float:
    if value is None:
        raise ConfigurationError(f"Regime {regime.value} needs '{name}' in the configuration")
    return value


def target_E2(config: ExperimentConfig, model: PotentialModel) -> float:
    if config.E2 is not None:
        return config.E2
    if model.d > 2:
        raise ConfigurationError(f"E2 must be supplied for d={model.d} > 2")
    return second_moment(model.value, model.d, E2_EXTENT)


def make_plan(config: ExperimentConfig, model: PotentialModel, init: InitSpec) -> StepSizePlan:
    """
    Dispatch to the planner of config.regime and apply eta/k overrides.

    Raises:
        ConfigurationError: a constant the regime needs is missing
        RegimeError: the potential violates the regime's hypotheses
    """
    spec, d, p, eps = model.smoothness, model.d, config.p, config.epsilon
    H0 = resolve_H0(init, config.H0)
    regime = config.regime
    if regime == Regime.LSI:
        plan = plan_lsi(spec, _require(config.gamma, "gamma", regime), d, p, eps, H0, config.aggressive)
    elif regime == Regime.SMOOTHED:
        gamma1 = config.gamma1 if config.gamma1 is not None else _require(config.gamma, "gamma1", regime)
        plan = plan_smoothed(spec, gamma1, d, p, eps, H0, target_E2(config, model), config.aggressive,
                             gamma=config.gamma)
    else:
        diss = model.dissipativity
        if diss is None:
            raise ConfigurationError(f"Potential '{model.name}' declares no dissipativity")
        R = config.R or model.convexity_radius or 1.0
        if regime == Regime.POINCARE_DISSIPATIVE:
            plan = plan_poincare(spec, _require(config.gamma, "gamma", regime), d, p, eps, H0, diss, R,
                                 config.M2, model, config.aggressive)
        else:
            plan = plan_nonconvex_outside_ball(spec, d, p, eps, H0, diss, R, config.M2, model, config.K,
                                               config.aggressive)
    if config.overrides.eta is not None or config.overrides.k is not None:
        logger.warning("eta/k overridden (%s, %s); the plan is off-theorem", config.overrides.eta, config.overrides.k)
        plan = plan.with_overrides(config.overrides.eta, config.overrides.k)
    return plan


def smoothing_config(config: ExperimentConfig, plan: StepSizePlan, d: int) -> Optional[SmoothingConfig]:
    """Smoothed kernel for the SMOOTHED regime or when enabled; mu defaults to sqrt(eta)."""
    if plan.regime != Regime.SMOOTHED and not config.smoothing.enabled:
        return None
    mu = config.smoothing.mu if config.smoothing.mu is not None else math.sqrt(plan.eta)
    return SmoothingConfig(mu=mu, pg=make_params(config.smoothing.p, d), budget=config.smoothing.budget)


def lsi_constant(config: ExperimentConfig) -> Optional[float]:
    """The log-Sobolev constant Talagrand can use; Poincare-type constants do not qualify."""
    if config.regime in (Regime.LSI, Regime.SMOOTHED):
        return config.gamma if config.gamma is not None else config.gamma1
    return None


def reference_samples(config: ExperimentConfig, model: PotentialModel) -> Optional[np.ndarray]:
    """Exact draws from the target when it can be sampled directly (the standard Gaussian)."""
    n = config.diagnostics.reference_samples
    if n == 0 or model.name != "gaussian":
        return None
    return make_rng(config.master_seed, REFERENCE_STREAM).standard_normal((n, model.d))


class ExperimentState(TypedDict, total=False):
    config: ExperimentConfig
    started_at: str
    model: PotentialModel
    init: InitSpec
    plan: StepSizePlan
    etas: list[float]
    index: int
    plans: list[StepSizePlan]
    batches: list[SampleBatch]
    reports: list[DiagnosticsReport]
    sweep_rows: list[dict[str, Any]]
    manifest: RunManifest


class ExperimentPipeline:
    """Compiled plan/sample/diagnose/emit graph."""

    def __init__(self):
        self.app = self._build_graph()

    def _build_graph(self):
        graph = StateGraph(ExperimentState)
        graph.add_node("plan", self._plan_node)
        graph.add_node("sample", self._sample_node)
        graph.add_node("diagnose", self._diagnose_node)
        graph.add_node("emit", self._emit_node)
        graph.set_entry_point("plan")
        graph.add_edge("plan", "sample")
        graph.add_edge("sample", "diagnose")
        graph.add_conditional_edges(
            "diagnose",
            self._should_continue,
            {"continue": "sample", "emit": "emit"}
        )
        graph.add_edge("emit", END)
        return graph.compile()

    def _plan_node(self, state: ExperimentState) -> ExperimentState:
        config = state["config"]
        print("\n[Step 1] Planning step size...")
        model = build_model(config)
        init = init_gaussian(model)
        plan = make_plan(config, model, init)
        etas = list(config.sweep.etas) or [plan.eta]
        print(f"✓ {plan.regime.value}: eta={plan.eta:.6g}, k={plan.k_iterations}"
              + (f" (sweep over {len(etas)} step sizes)" if config.sweep.etas else ""))
        return {"model": model, "init": init, "plan": plan, "etas": etas, "index": 0,
                "plans": [], "batches": [], "reports": [], "sweep_rows": []}

    def _sample_node(self, state: ExperimentState) -> ExperimentState:
        config, plan, index = state["config"], state["plan"], state["index"]
        if config.sweep.etas:
            plan = plan.with_overrides(eta=state["etas"][index], k=config.sweep.k)
        print(f"\n[Step 2.{index + 1}] Sampling {config.n_chains} chains x {plan.k_iterations} steps "
              f"(eta={plan.eta:.6g})...")
        batch = run_chain(state["model"], plan, state["init"], config.n_chains, config.master_seed,
                          smoothing=smoothing_config(config, plan, config.d), workers=config.workers,
                          thin=config.thin)
        print(f"✓ Sampled {batch.n} chains")
        return {"plans": state["plans"] + [plan], "batches": state["batches"] + [batch]}

    def _diagnose_node(self, state: ExperimentState) -> ExperimentState:
        config, model, index = state["config"], state["model"], state["index"]
        plan, batch = state["plans"][-1], state["batches"][-1]
        print(f"\n[Step 3.{index + 1}] Diagnosing...")
        gamma = lsi_constant(config)
        report = diagnose(batch.samples, model, gamma=gamma, kl_method=config.diagnostics.kl_method,
                          rng=make_rng(config.master_seed, DIAGNOSTIC_STREAM + index),
                          reference=reference_samples(config, model), p=config.p,
                          n_boot=config.diagnostics.n_boot)
        for check in report.checks:
            print(f"  {'✓' if check.passed else '✗'} {check.name}: {check.lhs:.6g} <= {check.rhs:.6g}")
        update: ExperimentState = {"reports": state["reports"] + [report], "index": index + 1}
        if config.sweep.etas:
            update["sweep_rows"] = state["sweep_rows"] + [self._sweep_row(config, model, plan, report, gamma)]
        return update

    @staticmethod
    def _sweep_row(config: ExperimentConfig, model: PotentialModel, plan: StepSizePlan,
                   report: DiagnosticsReport, gamma: Optional[float]) -> dict[str, Any]:
        kl = report.kl
        expected = None
        if model.name == "gaussian" and 0.0 < plan.eta < 2.0:
            smoothing = smoothing_config(config, plan, model.d)
            mu = smoothing.mu if smoothing is not None else 0.0
            expected = kl_gaussian(ar1_stationary_variance(plan.eta, mu, config.smoothing.p), 1.0, model.d)
        envelope = kl_envelope(plan.eta, model.smoothness, gamma, model.d, config.p) if gamma else None
        passed = None
        if kl is not None and envelope is not None:
            passed = kl.estimate <= envelope + 3.0 * kl.stderr
        return {"eta": plan.eta, "kl": None if kl is None else kl.estimate,
                "kl_stderr": None if kl is None else kl.stderr, "kl_expected": expected,
                "envelope": envelope, "pass": passed}

    def _should_continue(self, state: ExperimentState) -> str:
        if state["index"] < len(state["etas"]):
            return "continue"
        return "emit"

    def _emit_node(self, state: ExperimentState) -> ExperimentState:
        config = state["config"]
        out = Path(config.output_dir)
        print(f"\n[Step 4] Writing outputs to {out}...")
        files: list[tuple[str, Path]] = []
        sweep = bool(config.sweep.etas)

        plan_rows = [p.as_row() for p in state["plans"]]
        files.append(("plan", io.write_csv(out / "plan.csv", list(plan_rows[0]), plan_rows)))
        for i, batch in enumerate(state["batches"]):
            stem = f"samples_eta{i:02d}" if sweep else "samples"
            files.append(("samples", io.write_samples(out / f"{stem}.csv", batch.samples, batch.chain_ids)))
            meta = {"master_seed": batch.master_seed, "n_chains": batch.n, "d": batch.d,
                    "potential": state["model"].describe(), "plan": state["plans"][i].model_dump(mode="json"),
                    "thin": batch.thin}
            files.append(("samples_meta", io.write_json(out / f"{stem}.meta.json", meta)))
            if batch.trajectory is not None:
                files.append(("trajectory", io.write_trajectory(out / f"{stem}.trajectory.csv",
                                                                batch.trajectory, batch.thin)))

        diag_rows = []
        for plan, report in zip(state["plans"], state["reports"]):
            diag_rows.extend({"eta": plan.eta, **row} for row in report.rows())
        files.append(("diagnostics", io.write_csv(out / "diagnostics.csv", io.DIAGNOSTICS_HEADER, diag_rows)))

        fit = None
        failed = [name for report in state["reports"] for name in report.failed]
        if sweep:
            rows = state["sweep_rows"]
            files.append(("sweep", io.write_csv(out / "sweep.csv", io.SWEEP_HEADER, rows)))
            failed += [f"envelope@eta={row['eta']:g}" for row in rows if row["pass"] is False]
            fit = self._fit(rows)

        summary = render_summary(config, state["plan"], state["reports"], fit)
        (out / "summary.txt").write_text(summary, encoding="utf-8")
        files.append(("summary", out / "summary.txt"))

        manifest = build_manifest(config.model_dump(mode="json"), state["plan"], out, files,
                                  state["started_at"], failed, fit)
        manifest = emit_plot_data(manifest)
        io.write_json(out / "manifest.json", manifest.model_dump(mode="json"))
        print(summary)
        return {"manifest": manifest}

    @staticmethod
    def _fit(rows: list[dict[str, Any]]) -> Optional[BiasFit]:
        usable = [(r["eta"], r["kl"]) for r in rows if r["kl"] is not None and r["kl"] > 0.0]
        if len(usable) < 4 or len(usable) < len(rows):
            logger.info("Bias fit skipped: %d of %d step sizes have a positive KL estimate", len(usable), len(rows))
            return None
        etas, kls = zip(*usable)
        return bias_scaling_fit(etas, kls)

    def run(self, config: ExperimentConfig) -> RunManifest:
        print("=" * 60)
        print(f"Experiment: {config.potential.name} (d={config.d}), regime {config.regime.value}")
        print("=" * 60)
        # two nodes per step size plus plan and emit
        limit = 2 * max(1, len(config.sweep.etas)) + 10
        final_state = self.app.invoke({"config": config, "started_at": utc_now()}, config={"recursion_limit": limit})
        return final_state["manifest"]


def build_manifest(config_echo: dict[str, Any], plan: Optional[StepSizePlan], out: Path,
                   files: list[tuple[str, Path]], started_at: str, failed: Optional[list[str]] = None,
                   fit: Optional[BiasFit] = None) -> RunManifest:
    """Hash every listed output and record the schema versions in use."""
    records = []
    for schema_name, path in files:
        version = io.CSV_SCHEMAS[schema_name][0] if schema_name in io.CSV_SCHEMAS else "1"
        records.append(FileRecord(path=str(Path(path).relative_to(out)), sha256=io.sha256_file(path),
                                  schema_name=schema_name, schema_version=version))
    failed = list(failed or [])
    return RunManifest(
        config=config_echo,
        plan=None if plan is None else plan.model_dump(mode="json"),
        started_at=started_at,
        finished_at=utc_now(),
        output_dir=str(out),
        files=records,
        schema_versions={r.schema_name: r.schema_version for r in records},
        passed=not failed,
        failed=failed,
        bias_fit=fit,
    )


def _plot_rows(manifest: RunManifest) -> list[dict[str, Any]]:
    rows: list[dict[str, Any]] = []
    sweep = manifest.file("sweep")
    diagnostics = manifest.file("diagnostics")
    grid = manifest.file("grid")
    if sweep is not None:
        for row in io.read_csv(sweep)[1]:
            if row["kl"]:
                rows.append({"series": "bias_vs_eta", "x": float(row["eta"]), "y": float(row["kl"]),
                             "yerr": float(row["kl_stderr"])})
    elif diagnostics is not None:
        for row in io.read_csv(diagnostics)[1]:
            if row["kind"] == "estimate":
                rows.append({"series": row["name"], "x": float(row["eta"]) if row["eta"] else None,
                             "y": float(row["value"]), "yerr": float(row["stderr"])})
    if grid is not None:
        header, grid_rows = io.read_csv(grid)
        if "x1" not in header:
            for series in ("U", "V", "hat_U", "breve_U"):
                rows.extend({"series": series, "x": float(r["x0"]), "y": float(r[series]), "yerr": None}
                            for r in grid_rows if r[series])
    return rows


def emit_plot_data(manifest: RunManifest) -> RunManifest:
    """
    Write plot_data.csv (series, x, y, yerr) next to the manifest's outputs.

    Sweeps give one bias_vs_eta row per step size; otherwise each estimate of
    diagnostics.csv is a row. A d = 1 convexify grid adds U, V, hat_U and breve_U
    series. Nothing is plotted.

    Raises:
        ConfigurationError: a listed input file is missing
    """
    for record in manifest.files:
        path = Path(manifest.output_dir) / record.path
        if not path.exists():
            raise ConfigurationError(f"Manifest lists {path}, which does not exist")
    out = Path(manifest.output_dir)
    path = io.write_csv(out / "plot_data.csv", io.PLOT_HEADER, _plot_rows(manifest))
    record = FileRecord(path=path.name, sha256=io.sha256_file(path), schema_name="plot_data",
                        schema_version=io.CSV_SCHEMAS["plot_data"][0])
    files = [r for r in manifest.files if r.schema_name != "plot_data"] + [record]
    return manifest.model_copy(update={"files": files,
                                       "schema_versions": {**manifest.schema_versions, "plot_data": record.schema_version}})


def run_experiment(config: ExperimentConfig, strict: bool = False) -> RunManifest:
    """
    Plan, sample, diagnose and write every output of one experiment.

    Args:
        config: Validated experiment configuration
        strict: Raise CheckFailure after writing outputs when a check fails

    Returns:
        RunManifest with hashed outputs

    Raises:
        ConfigurationError, RegimeError, ChainDivergenceError: from the stages
        CheckFailure: strict mode and a failed check
    """
    try:
        manifest = ExperimentPipeline().run(config)
    except SamplingError:
        print("✗ Experiment aborted")
        raise
    if strict and not manifest.passed:
        raise CheckFailure(f"{len(manifest.failed)} check(s) failed", manifest.failed)
    return manifest


def load_manifest(path: Union[str, Path]) -> RunManifest:
    try:
        with open(path, encoding="utf-8") as f:
            return RunManifest.model_validate(json.load(f))
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"Cannot read manifest {path}: {e}") from e
