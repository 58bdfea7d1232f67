"""
Experiment configuration: pydantic records and the loader.

Two file formats give the same nested mapping:

* JSON (``*.json``), e.g. ``config/config.json``;
* the line grammar ``key = value`` with one level of sections, either as
  ``[section]`` headers or dotted keys (``potential.alpha = 0.5``). ``#``
  starts a comment; values are read as JSON scalars or lists when they parse,
  otherwise as bare strings.
"""
import json
import logging
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import BaseModel, Field, ValidationError, model_validator

from app.errors import ConfigurationError
from app.langevin.schemas import Regime

logger = logging.getLogger(__name__)


class PotentialConfig(BaseModel):
    """Builtin potential name and its parameters; unknown keys of the section are parameters."""

    name: str = Field(description="One of app.potentials.builtin_names()")
    params: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _collect_params(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            params = dict(data.pop("params", None) or {})
            name = data.pop("name", None)
            params.update(data)
            return {"name": name, "params": params}
        return data


class SmoothingSection(BaseModel):
    enabled: bool = Field(default=False, description="Use the smoothed kernel outside the SMOOTHED regime")
    mu: Optional[float] = Field(default=None, description="Smoothing radius; None means sqrt(eta)", ge=0.0)
    p: float = Field(default=2.0, description="Shape of the perturbation law", ge=1.0, le=2.0)
    budget: int = Field(default=10_000, description="Monte Carlo draws per smoothing query", ge=1)


class OverridesSection(BaseModel):
    """Replace the planned eta or k; the plan is then marked off-theorem."""

    eta: Optional[float] = Field(default=None, gt=0.0)
    k: Optional[int] = Field(default=None, ge=0)


class SweepSection(BaseModel):
    etas: list[float] = Field(default_factory=list, description="Step sizes run one after another")
    k: Optional[int] = Field(default=None, description="Iterations per step size; defaults to the plan's k", ge=0)


class DiagnosticsSection(BaseModel):
    kl_method: str = Field(default="quadrature", description="quadrature (d <= 2) or knn (d <= 10)")
    n_boot: int = Field(default=200, ge=2)
    reference_samples: int = Field(default=0, description="Exact draws from the target for d > 1 W2/KL; 0 skips",
                                   ge=0)


class ExperimentConfig(BaseModel):
    """Everything one run needs; the seed has no default."""

    potential: PotentialConfig
    regime: Regime = Regime.LSI
    d: int = Field(default=1, ge=1)
    p: float = Field(default=2.0, description="Shape exponent entering D3, D4 and the moment bounds", ge=1.0, le=2.0)
    epsilon: float = Field(default=0.1, gt=0.0)
    gamma: Optional[float] = Field(default=None, description="LSI or Poincare constant of the target", gt=0.0)
    gamma1: Optional[float] = Field(default=None, description="LSI constant of pi_mu (smoothed regime)", gt=0.0)
    E2: Optional[float] = Field(default=None, description="Second moment of pi; quadrature when omitted", gt=0.0)
    H0: Optional[float] = Field(default=None, description="Initial KL; the clamped bound when omitted", gt=0.0)
    R: Optional[float] = Field(default=None, description="Convexity radius; the potential's when omitted", gt=0.0)
    M2: Optional[float] = Field(default=None, description="Second moment of exp(-U-breve)", gt=0.0)
    K: float = Field(default=1.0, description="Isoperimetric constant scale of the outside-ball regime", gt=0.0)
    aggressive: float = Field(default=1.0, description="Multiplier on the planned eta (off-theorem when != 1)",
                              gt=0.0)
    smoothing: SmoothingSection = Field(default_factory=SmoothingSection)
    n_chains: int = Field(default=1000, ge=1)
    master_seed: int = Field(description="Seed of every random stream", ge=0)
    output_dir: str = Field(default="runs/default")
    workers: int = Field(default=1, ge=1)
    thin: Optional[int] = Field(default=None, ge=1)
    overrides: OverridesSection = Field(default_factory=OverridesSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    diagnostics: DiagnosticsSection = Field(default_factory=DiagnosticsSection)


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_key_values(text: str) -> dict[str, Any]:
    """
    Parse the key = value grammar into a nested dict (at most one level of sections).

    Raises:
        ConfigurationError: malformed line or nesting deeper than one level
    """
    data: dict[str, Any] = {}
    section: Optional[str] = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip() or None
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"Line {number}: expected 'key = value', got '{line.strip()}'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        path = ([section] if section else []) + key.split(".")
        if len(path) > 2 or not all(path):
            raise ConfigurationError(f"Line {number}: '{key}' nests deeper than one section")
        value = _parse_value(raw)
        if len(path) == 1:
            data[path[0]] = value
        else:
            block = data.setdefault(path[0], {})
            if not isinstance(block, dict):
                raise ConfigurationError(f"Line {number}: '{path[0]}' is both a value and a section")
            block[path[1]] = value
    return data


def validate_config(data: dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid experiment configuration: {e}") from e


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Load an experiment configuration from JSON or the key = value grammar.

    Args:
        path: Configuration file (UTF-8)

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigurationError: unreadable file, syntax error or failed validation
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read configuration {path}: {e}") from e
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid JSON in {path}: {e}") from e
    else:
        data = parse_key_values(text)
    logger.debug("Loaded configuration %s: %s", path, data)
    return validate_config(data)


def apply_cli_overrides(config: ExperimentConfig, seed: Optional[int] = None, out: Optional[str] = None,
                        workers: Optional[int] = None) -> ExperimentConfig:
    """--seed, --out and --workers take precedence over the file."""
    update: dict[str, Any] = {}
    if seed is not None:
        update["master_seed"] = seed
    if out is not None:
        update["output_dir"] = out
    if workers is not None:
        update["workers"] = workers
    if not update:
        return config
    return validate_config({**config.model_dump(mode="json"), **update})
