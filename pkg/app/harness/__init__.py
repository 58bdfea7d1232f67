from app.harness.config import ExperimentConfig, apply_cli_overrides, load_config, parse_key_values
from app.harness.pipeline import (
    ExperimentPipeline,
    FileRecord,
    RunManifest,
    emit_plot_data,
    load_manifest,
    make_plan,
    run_experiment,
)

__all__ = [
    'ExperimentConfig',
    'apply_cli_overrides',
    'load_config',
    'parse_key_values',
    'ExperimentPipeline',
    'FileRecord',
    'RunManifest',
    'emit_plot_data',
    'load_manifest',
    'make_plan',
    'run_experiment',
]
