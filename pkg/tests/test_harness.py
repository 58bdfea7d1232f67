import math
from pathlib import Path

import numpy as np
import pytest

from app.diagnostics import kl_gaussian
from app.errors import ConfigurationError
from app.harness import apply_cli_overrides, load_config, load_manifest, parse_key_values, run_experiment
from app.harness import io
from app.harness.cli import main
from app.harness.config import validate_config
from app.harness.templates import render_plan
from app.langevin import Regime, ar1_stationary_variance, plan_lsi
from app.potentials import SmoothnessSpec
from app.rng import make_rng

CONFIG_DIR = Path(__file__).resolve().parents[1] / "config"


def test_parse_key_values_sections_and_dotted_keys():
    text = """
# top of file
master_seed = 3
sweep.etas = [0.1, 0.2]
potential.name = gaussian   # bare string

[diagnostics]
kl_method = "knn"
n_boot = 50
"""
    data = parse_key_values(text)
    assert data == {
        "master_seed": 3,
        "sweep": {"etas": [0.1, 0.2]},
        "potential": {"name": "gaussian"},
        "diagnostics": {"kl_method": "knn", "n_boot": 50},
    }


@pytest.mark.parametrize("text", [
    "[sweep]\nk.value = 1",
    "a.b.c = 1",
    "no equals sign here",
    "d = 1\nd.x = 2",
])
def test_parse_key_values_rejects_malformed_input(text):
    with pytest.raises(ConfigurationError):
        parse_key_values(text)


def test_load_config_json(experiment_data, write_config):
    config = load_config(write_config(experiment_data))
    assert config.potential.name == "gaussian"
    assert config.regime == Regime.LSI
    assert config.overrides.eta == 0.1
    assert config.diagnostics.n_boot == 20
    assert config.smoothing.p == 2.0


def test_load_config_key_values():
    config = load_config(CONFIG_DIR / "experiment.cfg")
    assert config.sweep.etas == [0.02, 0.05, 0.1, 0.2]
    assert config.sweep.k == 400
    convexify = load_config(CONFIG_DIR / "convexify.cfg")
    assert convexify.potential.params == {"amplitude": 0.5, "radius": 3.0}


def test_load_config_errors(experiment_data, write_config, tmp_path):
    data = dict(experiment_data)
    del data["master_seed"]
    with pytest.raises(ConfigurationError):
        load_config(write_config(data))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_config(bad)
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.json")
    with pytest.raises(ConfigurationError):
        validate_config({**experiment_data, "regime": "MCMC"})


def test_potential_section_collects_params(experiment_data):
    config = validate_config({**experiment_data, "potential": {"name": "holder", "alpha": 0.5, "L": 2.0}})
    assert config.potential.params == {"alpha": 0.5, "L": 2.0}


def test_apply_cli_overrides(experiment_data, tmp_path):
    config = validate_config(experiment_data)
    assert apply_cli_overrides(config) is config
    updated = apply_cli_overrides(config, seed=11, out=str(tmp_path), workers=3)
    assert (updated.master_seed, updated.output_dir, updated.workers) == (11, str(tmp_path), 3)
    assert updated.overrides == config.overrides


def test_format_cell():
    assert io.format_cell(0.1) == "0.10000000000000001"
    assert io.format_cell(np.float64(0.5)) == "0.5"
    assert io.format_cell(True) == "true"
    assert io.format_cell(np.bool_(False)) == "false"
    assert io.format_cell(None) == ""
    assert io.format_cell(np.int64(7)) == "7"


def test_samples_file_round_trip(tmp_path):
    x = make_rng(5, 0).standard_normal((50, 2))
    path = io.write_samples(tmp_path / "samples.csv", x)
    assert path.read_bytes().splitlines(keepends=True)[0] == b"chain_id,x0,x1\r\n"
    np.testing.assert_array_equal(io.read_samples(path), x)
    stacked = io.read_samples([path, path])
    assert stacked.shape == (100, 2)


def test_read_samples_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        io.read_samples(tmp_path / "missing.csv")
    path = io.write_csv(tmp_path / "other.csv", ["a", "b"], [{"a": 1, "b": 2}])
    with pytest.raises(ConfigurationError):
        io.read_samples(path)


def test_render_plan_marks_binding_cap():
    plan = plan_lsi(SmoothnessSpec(components=[(1.0, 1.0)]), 1.0, 1, 2.0, 0.1, 1.0)
    text = render_plan(plan)
    binding = min(plan.caps, key=plan.caps.get)
    marked = [line for line in text.splitlines() if line.endswith("<- binding")]
    assert len(marked) == 1
    assert marked[0].startswith(f"cap.{binding} = ")
    assert "off_theorem    = false" in text


def _config(experiment_data, out: Path, **update):
    return validate_config({**experiment_data, "output_dir": str(out), **update})


def test_run_experiment_writes_hashed_outputs(experiment_data, tmp_path):
    manifest = run_experiment(_config(experiment_data, tmp_path / "a"))
    out = tmp_path / "a"
    for name in ("plan.csv", "samples.csv", "samples.meta.json", "diagnostics.csv", "summary.txt",
                 "plot_data.csv", "manifest.json"):
        assert (out / name).exists(), name
    for record in manifest.files:
        assert record.sha256 == io.sha256_file(out / record.path)
    assert manifest.schema_versions["samples"] == "1"
    assert manifest.plan["eta"] == 0.1 and manifest.plan["off_theorem"] is True

    reloaded = load_manifest(out / "manifest.json")
    assert reloaded.files == manifest.files
    assert io.read_samples(reloaded.file("samples")).shape == (300, 1)

    _, diagnostics = io.read_csv(out / "diagnostics.csv")
    assert {row["name"] for row in diagnostics if row["kind"] == "estimate"} == {"kl", "tv", "w2"}
    _, plot = io.read_csv(out / "plot_data.csv")
    assert [row["series"] for row in plot] == ["kl", "tv", "w2"]


def test_run_experiment_is_reproducible_across_workers(experiment_data, tmp_path):
    first = run_experiment(_config(experiment_data, tmp_path / "a", n_chains=600))
    second = run_experiment(_config(experiment_data, tmp_path / "b", n_chains=600, workers=2))
    hashes = [{r.path: r.sha256 for r in m.files if r.schema_name in ("samples", "diagnostics")}
              for m in (first, second)]
    assert hashes[0] == hashes[1]


def test_sweep(experiment_data, tmp_path):
    etas = [0.05, 0.1, 0.2, 0.4]
    manifest = run_experiment(_config(experiment_data, tmp_path, sweep={"etas": etas, "k": 150}))
    _, rows = io.read_csv(tmp_path / "sweep.csv")
    assert [float(r["eta"]) for r in rows] == etas
    for row in rows:
        expected = kl_gaussian(ar1_stationary_variance(float(row["eta"])), 1.0)
        assert float(row["kl_expected"]) == pytest.approx(expected, rel=1e-12)
        assert float(row["envelope"]) > 0.0
    assert float(rows[-1]["kl_expected"]) == pytest.approx(0.5 * (0.25 - math.log(1.25)))
    for i in range(4):
        assert (tmp_path / f"samples_eta{i:02d}.csv").exists()
    _, plot = io.read_csv(tmp_path / "plot_data.csv")
    assert [row["series"] for row in plot] == ["bias_vs_eta"] * 4
    assert manifest.plan["regime"] == "LSI"


def test_cli_plan(experiment_data, write_config, tmp_path, capsys):
    path = write_config(experiment_data)
    assert main(["plan", "--config", str(path), "--out", str(tmp_path / "plan")]) == 0
    assert "<- binding" in capsys.readouterr().out
    assert (tmp_path / "plan" / "plan.csv").exists()


def test_cli_exit_codes(experiment_data, write_config, tmp_path):
    missing_seed = {k: v for k, v in experiment_data.items() if k != "master_seed"}
    assert main(["plan", "--config", str(write_config(missing_seed, "a.json"))]) == 2

    holder = {**experiment_data, "potential": {"name": "holder", "alpha": 0.5}, "regime": "POINCARE_DISSIPATIVE",
              "M2": 1.0, "overrides": {}}
    assert main(["plan", "--config", str(write_config(holder, "b.json"))]) == 3

    diverging = {**experiment_data, "n_chains": 10, "overrides": {"eta": 3.0, "k": 100}}
    assert main(["sample", "--config", str(write_config(diverging, "c.json")), "--out", str(tmp_path / "c")]) == 4


def test_cli_diagnose_flags_wrong_target(tmp_path):
    samples = io.write_samples(tmp_path / "samples.csv", 3.0 + make_rng(9, 0).standard_normal((500, 1)))
    code = main(["diagnose", "--samples", str(samples), "--potential", "gaussian", "--out", str(tmp_path)])
    assert code == 5
    _, rows = io.read_csv(tmp_path / "diagnostics.csv")
    grad = next(row for row in rows if row["name"] == "grad_moment")
    assert grad["passed"] == "false"
    assert (tmp_path / "diagnostics.txt").exists()


def test_cli_diagnose_needs_a_target(tmp_path):
    samples = io.write_samples(tmp_path / "samples.csv", make_rng(9, 0).standard_normal((200, 1)))
    assert main(["diagnose", "--samples", str(samples)]) == 2


@pytest.mark.slow
def test_cli_convexify(tmp_path):
    code = main(["convexify", "--config", str(CONFIG_DIR / "convexify.cfg"), "--out", str(tmp_path)])
    assert code == 0
    header, grid = io.read_csv(tmp_path / "grid.csv")
    assert header == ["x0", "U", "V", "V_tilde", "hat_U", "breve_U"]
    _, checks = io.read_csv(tmp_path / "verification.csv")
    assert all(row["pass"] == "true" for row in checks)
    manifest = load_manifest(tmp_path / "manifest.json")
    assert {r.schema_name for r in manifest.files} == {"grid", "verification", "plot_data"}
    _, plot = io.read_csv(tmp_path / "plot_data.csv")
    assert {row["series"] for row in plot} == {"U", "V", "hat_U", "breve_U"}
    assert len(plot) == 4 * len(grid)
