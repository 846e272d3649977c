from __future__ import annotations

import click

from thermoscope.commands._common import output_options, registry_options, resolve_run
from thermoscope.config import Format
from thermoscope.kinetic import (
    conservation_report,
    encode_binary,
    gaussian_state,
    momentum_observables,
    phase_grid,
    run_transport,
)
from thermoscope.output import emit_json, emit_trajectory_csv, write_atomic

TRANSPORT_KEYS = (
    "grid.nq",
    "grid.np",
    "grid.q_min",
    "grid.q_max",
    "grid.p_min",
    "grid.p_max",
    "transport.t_end",
    "transport.steps",
    "transport.sigma_q",
    "transport.sigma_p",
    "transport.dump",
)


@click.command("transport")
@registry_options(*TRANSPORT_KEYS)
@output_options("csv")
@click.pass_context
def transport(ctx: click.Context, config_path: str | None, output_path: str | None, fmt: Format, **flags):
    """Free transport of a Gaussian density on a periodic phase grid.

    Emits mass, entropy, <P> and <P^2> per step; --dump writes the final
    density in the binary KTPS0001 format.
    """
    logger = ctx.obj["logger"]
    run = resolve_run(
        "transport", TRANSPORT_KEYS, flags, config_path=config_path, output_path=output_path, fmt=fmt
    )
    p = run.parameters
    grid = phase_grid(
        p["grid.nq"], p["grid.np"], p["grid.q_min"], p["grid.q_max"], p["grid.p_min"], p["grid.p_max"]
    )
    initial = gaussian_state(grid, sigma_q=p["transport.sigma_q"], sigma_p=p["transport.sigma_p"])
    trajectory = run_transport(initial, p["transport.t_end"], p["transport.steps"])
    report = conservation_report(trajectory, momentum_observables(grid))
    for label, drift in report.drifts.items():
        logger.info(f"{label} drift {drift:.3e}")

    if run.format == "json":
        rows = [
            {"t": s.t, "mass": s.mass, "entropy": s.entropy, **s.means} for s in report.snapshots
        ]
        emit_json({"snapshots": rows, "drifts": report.drifts}, run.output_path, run)
    else:
        emit_trajectory_csv(report, run.output_path, run)

    if p["transport.dump"] is not None:
        write_atomic(p["transport.dump"], encode_binary(trajectory[-1].f))
        logger.success(f"wrote {p['transport.dump']}")
