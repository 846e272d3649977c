import os

# Set COLUMNS before any imports to ensure Rich Console detects a stable width
os.environ["COLUMNS"] = "160"

import json
from typing import Any

import numpy as np
import pytest
from click.testing import CliRunner

from thermoscope.gasmodels import GasParameters


@pytest.fixture(scope="module")
def runner():
    """Fixture for invoking command-line interfaces.

    Module-scoped for performance - CliRunner creates isolated environments
    for each invoke() call, making it safe to share across tests.
    """
    return CliRunner(env={"COLUMNS": "160"})


@pytest.fixture(autouse=True)
def isolated_config_dir(tmp_path, monkeypatch):
    """Point the default config location at an empty temp dir for every test."""
    config_dir = tmp_path / "config"
    monkeypatch.setattr("thermoscope.config.get_config_dir", lambda: config_dir)
    monkeypatch.delenv("THERMOSCOPE_LOG", raising=False)
    return config_dir


@pytest.fixture
def rng():
    """Seeded generator so randomized property tests are reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def ideal_gas():
    return GasParameters(N=1, m=1.0, C=1.0)


@pytest.fixture
def vdw_gas():
    """a = b = N = 1: Tc = 8/27, Pc = 1/27, Veff_c = 3."""
    return GasParameters(N=1, m=1.0, C=1.0, a=1.0, b=1.0)


def parse_json_output(output: str) -> Any:
    """Parse a JSON document written to stdout."""
    return json.loads(output)


def central_difference(f, x: np.ndarray, i: int, eps: float) -> float:
    """(f(x + eps e_i) - f(x - eps e_i)) / 2 eps."""
    step = np.zeros_like(x)
    step[i] = eps
    return (f(x + step) - f(x - step)) / (2.0 * eps)
