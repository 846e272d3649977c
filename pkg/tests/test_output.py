"""Tests for CSV/JSON rendering, atomic writes and sidecars."""

import json

import numpy as np
import pytest

from thermoscope import __version__
from thermoscope.config import RunConfig
from thermoscope.maxwell import sample_isotherm
from thermoscope.output import (
    ISOTHERM_HEADER,
    csv_text,
    emit_csv,
    emit_isotherm_csv,
    emit_json,
    emit_selector_csv,
    format_float,
    json_dumps,
    run_metadata,
    sidecar_path,
    sweep_path,
    write_atomic,
)


@pytest.fixture
def run():
    return RunConfig(
        command="vdw-isotherm",
        parameters={"state.T": 0.25, "sweep.temps": (0.2, 0.25)},
        output_path=None,
        format="csv",
    )


class TestFormatting:
    def test_float_round_trips(self, rng):
        for x in rng.normal(size=100) * 10.0 ** rng.integers(-300, 300, size=100):
            assert float(format_float(x)) == x

    def test_seventeen_digits(self):
        assert format_float(0.1) == "0.10000000000000001"
        assert format_float(np.float64(2.0)) == "2"

    def test_header_only_csv(self):
        assert csv_text(ISOTHERM_HEADER, []) == "Veff,P\n"

    def test_strings_pass_through(self):
        assert csv_text(("P", "branch"), [(1.5, "cliff")]) == "P,branch\n1.5,cliff\n"

    def test_json_keeps_unicode(self):
        assert json_dumps({"label": "Λ"}, indent=None) == '{"label": "Λ"}'


class TestPaths:
    def test_sidecar(self, tmp_path):
        assert sidecar_path(tmp_path / "iso.csv") == tmp_path / "iso.csv.meta.json"

    def test_sweep(self, tmp_path):
        assert sweep_path(tmp_path / "m.json", 0.25) == tmp_path / "m_T0.25.json"
        assert sweep_path("iso.csv", 1.0).name == "iso_T1.csv"


class TestWriteAtomic:
    def test_writes_and_replaces(self, tmp_path):
        target = tmp_path / "out.csv"
        write_atomic(target, "first\n")
        write_atomic(target, "second\n")
        assert target.read_text() == "second\n"
        assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]

    def test_bytes(self, tmp_path):
        target = tmp_path / "f.bin"
        write_atomic(target, b"\x00\x01")
        assert target.read_bytes() == b"\x00\x01"

    def test_missing_directory_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            write_atomic(tmp_path / "nope" / "out.csv", "x")


class TestEmit:
    def test_metadata(self, run):
        meta = run_metadata(run)
        assert meta["version"] == __version__
        assert meta["config"]["command"] == "vdw-isotherm"
        assert meta["config"]["parameters"]["sweep.temps"] == [0.2, 0.25]

    def test_csv_to_stdout_has_no_sidecar(self, run, capsys, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        emit_csv(("a",), [(1.0,)], None, run)
        assert capsys.readouterr().out == "a\n1\n"
        assert list(tmp_path.iterdir()) == []

    def test_csv_to_file_writes_sidecar(self, run, tmp_path, vdw_gas):
        target = tmp_path / "iso.csv"
        iso = sample_isotherm(0.25, vdw_gas, 1.5, 4.0, 4)
        emit_isotherm_csv(iso, target, run)
        lines = target.read_text().splitlines()
        assert lines[0] == "Veff,P"
        assert len(lines) == 5
        meta = json.loads(sidecar_path(target).read_text())
        assert meta["config"]["parameters"]["state.T"] == 0.25

    def test_json_embeds_meta(self, run, capsys):
        emit_json({"T": 0.25}, None, run)
        document = json.loads(capsys.readouterr().out)
        assert list(document) == ["T", "meta"]
        assert document["meta"]["config"]["format"] == "csv"

    def test_selector_branch_enum(self, run):
        with pytest.raises(ValueError, match="unknown selector branch"):
            emit_selector_csv([(0.1, 0.0, 2.0, "gas")], None, run)
