"""Output helpers: JSON/CSV rendering, atomic file writes and metadata sidecars."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import click

from thermoscope import __version__
from thermoscope.config import RunConfig, echo_parameters
from thermoscope.gasmodels import EQUILIBRIUM_HEADER, EquilibriumPoint
from thermoscope.kinetic import TRAJECTORY_HEADER, ConservationReport
from thermoscope.maxwell import Isotherm

ISOTHERM_HEADER = ("Veff", "P")
SELECTOR_HEADER = ("P", "fT", "dfTdP", "branch")
SELECTOR_BRANCHES = frozenset({"liquid", "vapour", "cliff"})
SIDECAR_SUFFIX = ".meta.json"


def json_dumps(obj: Any, **kwargs: Any) -> str:
    """Dump object to JSON string with Unicode preservation."""
    kwargs.setdefault("ensure_ascii", False)
    kwargs.setdefault("indent", 2)
    return json.dumps(obj, **kwargs)


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return format(float(value), ".17g")


def _cell(value: Any) -> str:
    if isinstance(value, str):
        return value
    return format_float(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def write_atomic(path: str | Path, data: str | bytes) -> None:
    """Write to a temporary file beside ``path`` and rename it into place."""
    target = Path(path)
    directory = target.parent if str(target.parent) else Path(".")
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp_name = tempfile.mkstemp(
        prefix=f".{target.name}.", suffix=".tmp", dir=directory
    )
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def run_metadata(run: RunConfig) -> dict[str, Any]:
    return {
        "config": {
            "command": run.command,
            "format": run.format,
            "parameters": echo_parameters(run.parameters),
        },
        "version": __version__,
    }


def sidecar_path(path: str | Path) -> Path:
    target = Path(path)
    return target.with_name(target.name + SIDECAR_SUFFIX)


def sweep_path(path: str | Path, T: float) -> Path:
    """``<stem>_T<T><suffix>`` for one temperature of a sweep."""
    target = Path(path)
    return target.with_name(f"{target.stem}_T{T:g}{target.suffix}")


def emit_text(text: str, output_path: str | Path | None) -> None:
    if output_path is None:
        click.echo(text, nl=not text.endswith("\n"))
    else:
        write_atomic(output_path, text)


def emit_json(
    document: dict[str, Any], output_path: str | Path | None, run: RunConfig
) -> None:
    """Write ``document`` with the run metadata embedded under ``"meta"``."""
    payload = {**document, "meta": run_metadata(run)}
    emit_text(json_dumps(payload) + "\n", output_path)


def emit_csv(
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    output_path: str | Path | None,
    run: RunConfig,
) -> None:
    """Write a CSV table; files get a ``.meta.json`` sidecar, stdout does not."""
    emit_text(csv_text(header, rows), output_path)
    if output_path is not None:
        write_atomic(sidecar_path(output_path), json_dumps(run_metadata(run)) + "\n")


def emit_isotherm_csv(iso: Isotherm, output_path: str | Path | None, run: RunConfig) -> None:
    emit_csv(ISOTHERM_HEADER, iso.samples, output_path, run)


def emit_selector_csv(
    rows: Sequence[tuple[float, float, float, str]],
    output_path: str | Path | None,
    run: RunConfig,
) -> None:
    for row in rows:
        if row[3] not in SELECTOR_BRANCHES:
            raise ValueError(f"unknown selector branch {row[3]!r}")
    emit_csv(SELECTOR_HEADER, rows, output_path, run)


def emit_trajectory_csv(
    report: ConservationReport, output_path: str | Path | None, run: RunConfig
) -> None:
    emit_csv(TRAJECTORY_HEADER, report.rows(), output_path, run)


def emit_equilibrium_csv(
    points: Sequence[EquilibriumPoint], output_path: str | Path | None, run: RunConfig
) -> None:
    emit_csv(EQUILIBRIUM_HEADER, [p.as_row() for p in points], output_path, run)


def equilibrium_dict(point: EquilibriumPoint) -> dict[str, float]:
    return dict(zip(EQUILIBRIUM_HEADER, point.as_row()))
