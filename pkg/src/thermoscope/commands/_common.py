"""Shared option plumbing for the thermoscope commands."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Any, TypeVar

import click
from pydantic import ValidationError

from thermoscope.config import (
    REGISTRY,
    Command,
    ConfigKey,
    Format,
    RunConfig,
    load_config_file,
    merge_parameters,
    parse_bool,
    parse_float_list,
    resolve_config_file,
)
from thermoscope.gasmodels import GasParameters

F = TypeVar("F", bound=Callable[..., Any])
T = TypeVar("T")

GAS_KEYS = ("gas.N", "gas.m", "gas.C", "gas.a", "gas.b")

_TYPE_NAMES = {
    float: "FLOAT",
    int: "INTEGER",
    str: "TEXT",
    parse_bool: "BOOLEAN",
    parse_float_list: "FLOAT,...",
}


class RegistryType(click.ParamType):
    """Parses a flag value with the same parser the config file uses."""

    def __init__(self, entry: ConfigKey):
        self.entry = entry
        self.name = _TYPE_NAMES.get(entry.parse, "VALUE")

    def convert(self, value: Any, param: click.Parameter | None, ctx: click.Context | None) -> Any:
        if not isinstance(value, str):
            return value
        try:
            return self.entry.parse(value)
        except ValueError as exc:
            self.fail(f"{value!r} is not a valid {self.name} ({exc})", param, ctx)


def registry_options(*keys: str) -> Callable[[F], F]:
    """Add one long flag per config key, defaulting to None so merging can tell
    given flags from absent ones."""

    def decorator(f: F) -> F:
        for key in reversed(keys):
            entry = REGISTRY[key]
            default = "" if entry.default is None else f" [default: {entry.default}]"
            f = click.option(
                entry.flag,
                entry.dest,
                type=RegistryType(entry),
                default=None,
                help=f"{entry.help} (config key {key}){default}",
            )(f)
        return f

    return decorator


def output_options(default_format: Format) -> Callable[[F], F]:
    """--config, --output and --format, common to every computing command."""

    def decorator(f: F) -> F:
        f = click.option(
            "--format",
            "fmt",
            type=click.Choice(["csv", "json"]),
            default=default_format,
            show_default=True,
            help="Output format.",
        )(f)
        f = click.option(
            "--output",
            "output_path",
            type=click.Path(dir_okay=False),
            default=None,
            help="Write to this file instead of stdout.",
        )(f)
        f = click.option(
            "--config",
            "config_path",
            type=click.Path(dir_okay=False),
            default=None,
            help="Config file of key = value lines.",
        )(f)
        return f

    return decorator


def resolve_run(
    command: Command,
    keys: Sequence[str],
    flags: dict[str, Any],
    *,
    config_path: str | None,
    output_path: str | None,
    fmt: Format,
    required: Iterable[str] = (),
) -> RunConfig:
    """Merge defaults, the config file and flags into a :class:`RunConfig`."""
    config_file = resolve_config_file(config_path)
    file_values = load_config_file(config_file) if config_file is not None else {}
    flag_values = {key: flags.get(REGISTRY[key].dest) for key in keys}
    parameters = merge_parameters(keys, file_values, flag_values, required=required)
    return RunConfig(
        command=command, parameters=parameters, output_path=output_path, format=fmt
    )


def gas_parameters(run: RunConfig) -> GasParameters:
    p = run.parameters
    try:
        return GasParameters(
            **{key.split(".", 1)[1]: p[key] for key in GAS_KEYS if key in p}
        )
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise click.UsageError(f"invalid gas.{field}: {first['msg']}") from exc


def sweep_temperatures(run: RunConfig) -> list[float] | None:
    """Temperatures of a ``--temps`` sweep, or None for a single run.

    A sweep writes one file per temperature, so it needs ``--output``.
    """
    temps = run.parameters.get("sweep.temps")
    if temps is None:
        if run.parameters.get("state.T") is None:
            raise click.UsageError("missing required option --T (config key state.T)")
        return None
    if run.output_path is None:
        raise click.UsageError("--temps writes one file per temperature and needs --output")
    return list(temps)


def fan_out(task: Callable[[float], T], temps: Sequence[float], workers: int) -> list[T]:
    """Run ``task`` per temperature across ``workers`` threads, in input order."""
    if workers < 1:
        raise click.UsageError(f"--workers must be at least 1, got {workers}")
    if workers == 1:
        return [task(t) for t in temps]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(task, temps))
