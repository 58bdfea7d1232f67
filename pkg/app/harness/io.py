"""
CSV and JSON emission.

Every CSV is RFC-4180 (csv module, CRLF line ends, minimal quoting) with a
fixed header listed in CSV_SCHEMAS; reals are written with 17 significant
digits so they read back bit-exactly.
"""
import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np

from app.errors import ConfigurationError, InsufficientSamplesError

logger = logging.getLogger(__name__)

# name -> (version, fixed leading columns); coordinate columns x0.. follow where noted
CSV_SCHEMAS: dict[str, tuple[str, list[str]]] = {
    "samples": ("1", ["chain_id", "x0..x{d-1}"]),
    "plan": ("1", ["regime", "eta", "k_iterations", "epsilon_target", "mu", "aggressive", "off_theorem",
                   "const_*", "cap_*"]),
    "diagnostics": ("1", ["eta", "kind", "name", "value", "stderr", "rhs", "passed", "method", "flagged", "notes"]),
    "trajectory": ("1", ["step", "chain_id", "x0..x{d-1}"]),
    "sweep": ("1", ["eta", "kl", "kl_stderr", "kl_expected", "envelope", "pass"]),
    "smoothing": ("1", ["check", "point", "bound", "estimate", "stderr", "margin", "pass"]),
    "grid": ("1", ["x0..x{d-1}", "U", "V", "V_tilde", "hat_U", "breve_U"]),
    "verification": ("1", ["check", "bound", "measured", "pass"]),
    "plot_data": ("1", ["series", "x", "y", "yerr"]),
}

DIAGNOSTICS_HEADER = CSV_SCHEMAS["diagnostics"][1]
SWEEP_HEADER = CSV_SCHEMAS["sweep"][1]
SMOOTHING_HEADER = CSV_SCHEMAS["smoothing"][1]
VERIFICATION_HEADER = CSV_SCHEMAS["verification"][1]
PLOT_HEADER = CSV_SCHEMAS["plot_data"][1]


def format_cell(value: Any) -> str:
    """17 significant digits for reals, lowercase booleans, empty for None."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[dict[str, Any]]) -> Path:
    """Write rows (missing keys become empty cells) under a fixed header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(row.get(column)) for column in header])
    logger.debug("Wrote %s", path)
    return path


def read_csv(path: Union[str, Path]) -> tuple[list[str], list[dict[str, str]]]:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Missing input file {path}")
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        return list(reader.fieldnames or []), list(reader)


def write_samples(path: Union[str, Path], samples: np.ndarray, chain_ids: Optional[np.ndarray] = None) -> Path:
    """chain_id then one column per coordinate."""
    samples = np.asarray(samples, dtype=float)
    d = samples.shape[1]
    ids = np.arange(samples.shape[0]) if chain_ids is None else chain_ids
    header = ["chain_id"] + [f"x{j}" for j in range(d)]
    rows = ({"chain_id": int(i), **{f"x{j}": float(v) for j, v in enumerate(x)}} for i, x in zip(ids, samples))
    return write_csv(path, header, rows)


def read_samples(paths: Union[str, Path, Sequence[Union[str, Path]]]) -> np.ndarray:
    """Stack the coordinate columns of one or more sample CSV files."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    blocks = []
    for path in paths:
        header, rows = read_csv(path)
        columns = [c for c in header if c.startswith("x") and c[1:].isdigit()]
        if not columns:
            raise ConfigurationError(f"{path} has no coordinate columns x0..")
        blocks.append(np.array([[float(row[c]) for c in columns] for row in rows], dtype=float).reshape(-1, len(columns)))
    if len({b.shape[1] for b in blocks}) > 1:
        raise ConfigurationError("Sample files disagree on the dimension")
    samples = np.vstack(blocks)
    if samples.shape[0] == 0:
        raise InsufficientSamplesError("Sample files contain no rows")
    return samples


def write_trajectory(path: Union[str, Path], trajectory: np.ndarray, thin: int) -> Path:
    """Frames of shape (n_frames, n_chains, d) as rows step, chain_id, x0..; frame j is step j * thin."""
    d = trajectory.shape[2]
    header = ["step", "chain_id"] + [f"x{j}" for j in range(d)]
    rows = ({"step": frame * thin, "chain_id": chain, **{f"x{j}": float(v) for j, v in enumerate(x)}}
            for frame, states in enumerate(trajectory) for chain, x in enumerate(states))
    return write_csv(path, header, rows)


def write_json(path: Union[str, Path], payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    return path


def sha256_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()
