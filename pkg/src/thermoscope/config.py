"""
Configuration files and parameter merging for the thermoscope CLI.

A config file holds flat ``key = value`` lines with ``#`` comments. Values
are merged as registry default < config file < command-line flag. The default
file lives in the platform config directory chosen by platformdirs.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

import click
from dotenv import dotenv_values
from platformdirs import user_config_dir
from pydantic import BaseModel, ConfigDict

CONFIG_FILE_NAME = "thermoscope.conf"

Format = Literal["csv", "json"]
Command = Literal[
    "maxent",
    "ideal",
    "vdw-state",
    "vdw-isotherm",
    "vdw-maxwell",
    "vdw-selector",
    "transport",
]


def get_config_dir() -> Path:
    """
    Get the cross-platform user config directory for thermoscope.

    Returns:
        Path to config directory:
        - Linux: ~/.config/thermoscope/
        - macOS: ~/Library/Application Support/thermoscope/
        - Windows: %APPDATA%\\Local\\thermoscope\\
    """
    return Path(user_config_dir("thermoscope", appauthor=False))


def get_default_config_file() -> Path:
    return get_config_dir() / CONFIG_FILE_NAME


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_float_list(text: str) -> tuple[float, ...]:
    items = [item.strip() for item in text.split(",") if item.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(item) for item in items)


@dataclass(frozen=True)
class ConfigKey:
    """One configurable parameter: its file key, flag and parser."""

    key: str
    flag: str
    parse: Callable[[str], Any]
    default: Any = None
    help: str = ""

    @property
    def dest(self) -> str:
        """Python identifier click uses for the flag's value."""
        return self.key.replace(".", "__")


def _keys(*entries: ConfigKey) -> dict[str, ConfigKey]:
    return {entry.key: entry for entry in entries}


REGISTRY: dict[str, ConfigKey] = _keys(
    ConfigKey("maxent.tol", "--tol", float, 1e-10, "Newton tolerance on moments"),
    ConfigKey("maxent.max_iter", "--max-iter", int, 200, "Newton iteration cap"),
    ConfigKey("maxent.deterministic", "--deterministic", parse_bool, False, "Fixed-order sums"),
    ConfigKey("maxent.system", "--system", str, None, "Observable system JSON file"),
    ConfigKey("maxent.target", "--target", parse_float_list, None, "Target moments, comma separated"),
    ConfigKey("maxent.U", "--U", float, None, "Target energy for the ideal-gas system"),
    ConfigKey("maxent.V", "--V", float, None, "Target volume for the ideal-gas system"),
    ConfigKey("gas.N", "--N", int, 1, "Particle count"),
    ConfigKey("gas.m", "--m", float, 1.0, "Particle mass"),
    ConfigKey("gas.C", "--C", float, 1.0, "Cylinder constant"),
    ConfigKey("gas.a", "--a", float, 0.0, "van der Waals attraction"),
    ConfigKey("gas.b", "--b", float, 0.0, "Excluded volume per particle"),
    ConfigKey("state.T", "--T", float, None, "Temperature"),
    ConfigKey("state.P", "--P", float, None, "Pressure"),
    ConfigKey("isotherm.v_lo", "--v-lo", float, None, "Smallest effective volume"),
    ConfigKey("isotherm.v_hi", "--v-hi", float, None, "Largest effective volume"),
    ConfigKey("isotherm.count", "--count", int, 512, "Number of samples"),
    ConfigKey("isotherm.adjust", "--adjust", parse_bool, False, "Apply the Maxwell adjustment"),
    ConfigKey("selector.P_ref", "--P-ref", float, None, "Anchor pressure on the liquid branch"),
    ConfigKey("selector.P_lo", "--P-lo", float, None, "Lowest tabulated pressure"),
    ConfigKey("sweep.temps", "--temps", parse_float_list, None, "Temperature sweep T1,T2,..."),
    ConfigKey("sweep.workers", "--workers", int, 1, "Parallel workers for sweeps"),
    ConfigKey("grid.nq", "--nq", int, 256, "Q grid size"),
    ConfigKey("grid.np", "--np", int, 256, "P grid size"),
    ConfigKey("grid.q_min", "--q-min", float, -8.0, "Q lower bound"),
    ConfigKey("grid.q_max", "--q-max", float, 8.0, "Q upper bound (periodic)"),
    ConfigKey("grid.p_min", "--p-min", float, -6.0, "P lower bound"),
    ConfigKey("grid.p_max", "--p-max", float, 6.0, "P upper bound"),
    ConfigKey("transport.t_end", "--t-end", float, 1.0, "Final time"),
    ConfigKey("transport.steps", "--steps", int, 100, "Number of time steps"),
    ConfigKey("transport.sigma_q", "--sigma-q", float, 1.0, "Initial Gaussian width in Q"),
    ConfigKey("transport.sigma_p", "--sigma-p", float, 1.0, "Initial Gaussian width in P"),
    ConfigKey("transport.dump", "--dump", str, None, "Binary dump of the final density"),
)


class RunConfig(BaseModel):
    """Fully merged settings of one command run."""

    model_config = ConfigDict(frozen=True)

    command: Command
    parameters: dict[str, Any]
    output_path: str | None = None
    format: Format


def load_config_file(path: Path) -> dict[str, str]:
    """Read a config file, rejecting keys the registry does not know."""
    if not path.exists():
        raise click.UsageError(f"config file not found: {path}")
    raw = dotenv_values(path, interpolate=False, encoding="utf-8")
    values: dict[str, str] = {}
    for key, value in raw.items():
        if key not in REGISTRY:
            raise click.UsageError(f"unknown config key {key!r} in {path}")
        if value is None:
            raise click.UsageError(f"config key {key!r} in {path} has no value")
        values[key] = value
    return values


def resolve_config_file(explicit: str | None) -> Path | None:
    """``--config`` if given, else the default file when it exists."""
    if explicit is not None:
        return Path(explicit)
    default = get_default_config_file()
    return default if default.exists() else None


def merge_parameters(
    keys: Iterable[str],
    file_values: Mapping[str, str],
    flag_values: Mapping[str, Any],
    *,
    required: Iterable[str] = (),
) -> dict[str, Any]:
    """Merge defaults, file values and flags for ``keys``.

    ``flag_values`` is keyed by config key and holds None for flags that were
    not given. Missing required keys and unparsable file values raise
    :class:`click.UsageError`.
    """
    merged: dict[str, Any] = {}
    for key in keys:
        entry = REGISTRY[key]
        value = entry.default
        if key in file_values:
            try:
                value = entry.parse(file_values[key])
            except ValueError as exc:
                raise click.UsageError(
                    f"bad value {file_values[key]!r} for config key {key!r}: {exc}"
                ) from exc
        flag = flag_values.get(key)
        if flag is not None:
            value = flag
        merged[key] = value
    for key in required:
        if merged.get(key) is None:
            entry = REGISTRY[key]
            raise click.UsageError(
                f"missing required option {entry.flag} (config key {key})"
            )
    return merged


def echo_parameters(parameters: Mapping[str, Any]) -> dict[str, Any]:
    """JSON-friendly copy of merged parameters (tuples become lists)."""
    return {
        key: list(value) if isinstance(value, tuple) else value
        for key, value in sorted(parameters.items())
    }
