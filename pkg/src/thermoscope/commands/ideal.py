from __future__ import annotations

import click

from thermoscope.commands._common import GAS_KEYS, gas_parameters, output_options, registry_options, resolve_run
from thermoscope.config import Format
from thermoscope.gasmodels import ideal_multipliers, ideal_state
from thermoscope.output import emit_equilibrium_csv, emit_json, equilibrium_dict

IDEAL_KEYS = (*GAS_KEYS, "state.T", "state.P")


@click.command("ideal")
@registry_options(*IDEAL_KEYS)
@output_options("json")
@click.pass_context
def ideal(ctx: click.Context, config_path: str | None, output_path: str | None, fmt: Format, **flags):
    """Ideal-gas equilibrium point (U, V, T, P, S, Upsilon) at given T and P."""
    logger = ctx.obj["logger"]
    run = resolve_run(
        "ideal",
        IDEAL_KEYS,
        flags,
        config_path=config_path,
        output_path=output_path,
        fmt=fmt,
        required=("state.T", "state.P"),
    )
    g = gas_parameters(run)
    T, P = run.parameters["state.T"], run.parameters["state.P"]
    point = ideal_state(T, P, g)
    logger.debug(f"ideal state at T={T}, P={P}: U={point.U}, V={point.V}")
    if run.format == "json":
        emit_json({**equilibrium_dict(point), "lambda": list(ideal_multipliers(T, P))}, run.output_path, run)
    else:
        emit_equilibrium_csv([point], run.output_path, run)
