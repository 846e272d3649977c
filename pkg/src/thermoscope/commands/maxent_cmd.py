from __future__ import annotations

from pathlib import Path

import click
import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from thermoscope.commands._common import GAS_KEYS, gas_parameters, output_options, registry_options, resolve_run
from thermoscope.config import Format
from thermoscope.errors import InputError
from thermoscope.gasmodels import ideal_gas_system
from thermoscope.maxent import ObservableSystem, SolutionDocument, SolverOptions, fit_multipliers
from thermoscope.measure import Observable, QuadratureMeasure
from thermoscope.output import emit_csv, emit_json

MAXENT_KEYS = (
    "maxent.tol",
    "maxent.max_iter",
    "maxent.deterministic",
    "maxent.system",
    "maxent.target",
    "maxent.U",
    "maxent.V",
    *GAS_KEYS,
)


class ObservableEntry(BaseModel):
    label: str
    values: list[float]


class SystemDocument(BaseModel):
    """On-disk observable system: a quadrature measure plus observables on its nodes."""

    model_config = ConfigDict(frozen=True)

    dim: int
    nodes: list[list[float]]
    weights: list[float]
    observables: list[ObservableEntry]

    def build(self) -> ObservableSystem:
        nodes = np.asarray(self.nodes, dtype=float).reshape(len(self.weights), self.dim)
        measure = QuadratureMeasure(nodes, np.asarray(self.weights, dtype=float))
        return ObservableSystem(
            measure,
            tuple(Observable(np.asarray(o.values, dtype=float), o.label) for o in self.observables),
        )


def load_system(path: str) -> ObservableSystem:
    text = Path(path).read_text(encoding="utf-8")
    try:
        document = SystemDocument.model_validate_json(text)
    except ValidationError as exc:
        raise InputError(f"{path}: {exc.error_count()} validation error(s) in system file") from exc
    try:
        return document.build()
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


@click.command("maxent")
@registry_options(*MAXENT_KEYS)
@output_options("json")
@click.pass_context
def maxent(ctx: click.Context, config_path: str | None, output_path: str | None, fmt: Format, **flags):
    """Fit Lagrange multipliers to target moments.

    Either --system FILE with --target mu1,mu2,... or, for the reduced
    ideal-gas system, --U and --V.
    """
    logger = ctx.obj["logger"]
    run = resolve_run(
        "maxent", MAXENT_KEYS, flags, config_path=config_path, output_path=output_path, fmt=fmt
    )
    p = run.parameters
    opts = SolverOptions(
        tol=p["maxent.tol"], max_iter=p["maxent.max_iter"], deterministic=p["maxent.deterministic"]
    )
    if p["maxent.system"] is not None:
        if p["maxent.target"] is None:
            raise click.UsageError("--system needs --target (config key maxent.target)")
        system = load_system(p["maxent.system"])
        target = list(p["maxent.target"])
    elif p["maxent.U"] is not None and p["maxent.V"] is not None:
        system = ideal_gas_system(gas_parameters(run), target=(p["maxent.U"], p["maxent.V"]))
        target = [p["maxent.U"], p["maxent.V"]]
    else:
        raise click.UsageError("give --system with --target, or --U and --V")

    logger.debug(f"fitting {system.n} multipliers on {system.measure.size} nodes")
    solution = fit_multipliers(target, system, opts)
    logger.info(f"converged after {solution.iterations} Newton iterations")

    document = SolutionDocument.from_solution(solution)
    if run.format == "json":
        emit_json({"labels": system.labels, **document.model_dump(by_alias=True)}, run.output_path, run)
    else:
        rows = zip(system.labels, solution.multipliers.tolist(), solution.moments.tolist())
        emit_csv(("label", "lambda", "moment"), rows, run.output_path, run)
