import json
from pathlib import Path

import numpy as np
import pytest

from app.potentials import builtin
from app.rng import make_rng

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(1234, 0)


@pytest.fixture
def gaussian1():
    return builtin("gaussian", 1)


@pytest.fixture
def gaussian2():
    return builtin("gaussian", 2)


@pytest.fixture
def experiment_data() -> dict:
    with open(FIXTURES / "experiment_1.json", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict as JSON under tmp_path and return the path."""

    def _write(data: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write
