"""van der Waals commands: single states, isotherms, Maxwell constructions and
graph selectors. The last three accept a ``--temps`` sweep."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import asdict
from pathlib import Path

import click

from thermoscope.commands._common import (
    GAS_KEYS,
    fan_out,
    gas_parameters,
    output_options,
    registry_options,
    resolve_run,
    sweep_temperatures,
)
from thermoscope.config import Format, RunConfig
from thermoscope.gasmodels import GasParameters, vdw_critical_point, vdw_cubic, vdw_state
from thermoscope.maxwell import (
    MaxwellDocument,
    MaxwellResult,
    graph_selector,
    maxwell_adjustment,
    maxwell_pressure,
    sample_isotherm,
    selector_table,
)
from thermoscope.output import (
    SELECTOR_HEADER,
    emit_csv,
    emit_equilibrium_csv,
    emit_isotherm_csv,
    emit_json,
    emit_selector_csv,
    equilibrium_dict,
    sweep_path,
)

SWEEP_KEYS = ("sweep.temps", "sweep.workers")
STATE_KEYS = (*GAS_KEYS, "state.T", "state.P")
ISOTHERM_KEYS = (
    *GAS_KEYS,
    "state.T",
    "isotherm.v_lo",
    "isotherm.v_hi",
    "isotherm.count",
    "isotherm.adjust",
    *SWEEP_KEYS,
)
MAXWELL_KEYS = (*GAS_KEYS, "state.T", *SWEEP_KEYS)
SELECTOR_KEYS = (
    *GAS_KEYS,
    "state.T",
    "selector.P_ref",
    "selector.P_lo",
    "isotherm.count",
    *SWEEP_KEYS,
)
MAXWELL_HEADER = ("T", "P_mx", "V_liquid", "V_vapor", "residual")


def _per_temperature(
    ctx: click.Context, run: RunConfig, job: Callable[[float, Path | None], None]
) -> None:
    logger = ctx.obj["logger"]
    temps = sweep_temperatures(run)
    if temps is None:
        output = Path(run.output_path) if run.output_path is not None else None
        job(run.parameters["state.T"], output)
        return

    assert run.output_path is not None
    base = run.output_path

    def task(T: float) -> None:
        path = sweep_path(base, T)
        job(T, path)
        logger.success(f"wrote {path}")

    workers = run.parameters["sweep.workers"]
    logger.debug(f"sweeping {len(temps)} temperatures on {workers} worker(s)")
    fan_out(task, temps, workers)


def _maxwell_or_none(T: float, g: GasParameters) -> MaxwellResult | None:
    if g.a <= 0.0 or g.b <= 0.0 or T >= vdw_critical_point(g)[0]:
        return None
    return maxwell_pressure(T, g)


@click.command("vdw-state")
@registry_options(*STATE_KEYS)
@output_options("csv")
@click.pass_context
def vdw_state_cmd(ctx: click.Context, config_path: str | None, output_path: str | None, fmt: Format, **flags):
    """Every equilibrium point (one per real volume root) at given T and P."""
    logger = ctx.obj["logger"]
    run = resolve_run(
        "vdw-state",
        STATE_KEYS,
        flags,
        config_path=config_path,
        output_path=output_path,
        fmt=fmt,
        required=("state.T", "state.P"),
    )
    g = gas_parameters(run)
    T, P = run.parameters["state.T"], run.parameters["state.P"]
    points = vdw_state(T, P, g)
    logger.debug(f"{len(points)} volume root(s) at T={T}, P={P}")
    if run.format == "json":
        document = {
            "points": [equilibrium_dict(point) for point in points],
            "discriminant": vdw_cubic(T, P, g).scaled_discriminant,
        }
        emit_json(document, run.output_path, run)
    else:
        emit_equilibrium_csv(points, run.output_path, run)


@click.command("vdw-isotherm")
@registry_options(*ISOTHERM_KEYS)
@output_options("csv")
@click.pass_context
def vdw_isotherm(ctx: click.Context, config_path: str | None, output_path: str | None, fmt: Format, **flags):
    """Sample P(Veff) on an isotherm, optionally with the Maxwell adjustment."""
    run = resolve_run(
        "vdw-isotherm",
        ISOTHERM_KEYS,
        flags,
        config_path=config_path,
        output_path=output_path,
        fmt=fmt,
        required=("isotherm.v_lo", "isotherm.v_hi"),
    )
    g = gas_parameters(run)
    p = run.parameters

    def job(T: float, path: Path | None) -> None:
        iso = sample_isotherm(T, g, p["isotherm.v_lo"], p["isotherm.v_hi"], p["isotherm.count"])
        segment = None
        if p["isotherm.adjust"]:
            iso, segment = maxwell_adjustment(iso, _maxwell_or_none(T, g))
        if run.format == "json":
            document = {
                "T": T,
                "Veff": iso.volumes.tolist(),
                "P": iso.pressures.tolist(),
                "maxwell": asdict(segment) if segment is not None else None,
            }
            emit_json(document, path, run)
        else:
            emit_isotherm_csv(iso, path, run)

    _per_temperature(ctx, run, job)


@click.command("vdw-maxwell")
@registry_options(*MAXWELL_KEYS)
@output_options("json")
@click.pass_context
def vdw_maxwell(ctx: click.Context, config_path: str | None, output_path: str | None, fmt: Format, **flags):
    """Maxwell coexistence pressure and volumes below Tc."""
    logger = ctx.obj["logger"]
    run = resolve_run(
        "vdw-maxwell", MAXWELL_KEYS, flags, config_path=config_path, output_path=output_path, fmt=fmt
    )
    g = gas_parameters(run)

    def job(T: float, path: Path | None) -> None:
        mr = maxwell_pressure(T, g)
        logger.debug(f"T={T}: P_mx={mr.P_mx}, residual={mr.equal_area_residual:.3e}")
        document = MaxwellDocument.from_result(mr)
        if run.format == "json":
            emit_json(document.model_dump(), path, run)
        else:
            emit_csv(MAXWELL_HEADER, [tuple(document.model_dump().values())], path, run)

    _per_temperature(ctx, run, job)


@click.command("vdw-selector")
@registry_options(*SELECTOR_KEYS)
@output_options("csv")
@click.pass_context
def vdw_selector(ctx: click.Context, config_path: str | None, output_path: str | None, fmt: Format, **flags):
    """Tabulate the Gibbs graph selector f_T(P) between --P-lo and --P-ref."""
    logger = ctx.obj["logger"]
    run = resolve_run(
        "vdw-selector",
        SELECTOR_KEYS,
        flags,
        config_path=config_path,
        output_path=output_path,
        fmt=fmt,
        required=("selector.P_ref", "selector.P_lo"),
    )
    g = gas_parameters(run)
    p = run.parameters

    def job(T: float, path: Path | None) -> None:
        selector = graph_selector(T, g, p["selector.P_ref"])
        rows = selector_table(selector, p["selector.P_lo"], p["isotherm.count"])
        logger.debug(f"T={T}: selector continuity gap {selector.continuity_gap:.3e}")
        if run.format == "json":
            document = {
                "T": T,
                "P_ref": selector.P_ref,
                "P_mx": selector.P_mx,
                "jump": selector.jump,
                "continuity_gap": selector.continuity_gap,
                "rows": [dict(zip(SELECTOR_HEADER, row)) for row in rows],
            }
            emit_json(document, path, run)
        else:
            emit_selector_csv(rows, path, run)

    _per_temperature(ctx, run, job)
