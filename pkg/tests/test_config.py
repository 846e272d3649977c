"""Tests for config files and parameter merging."""

from pathlib import Path

import click
import pytest
from pydantic import ValidationError

from thermoscope.config import (
    REGISTRY,
    RunConfig,
    echo_parameters,
    get_config_dir,
    get_default_config_file,
    load_config_file,
    merge_parameters,
    parse_bool,
    parse_float_list,
    resolve_config_file,
)


def test_get_config_dir():
    """The unpatched config dir is a Path named after the tool."""
    config_dir = get_config_dir()
    assert isinstance(config_dir, Path)
    assert "thermoscope" in str(config_dir)


def test_default_config_file_follows_config_dir(isolated_config_dir):
    assert get_default_config_file() == isolated_config_dir / "thermoscope.conf"


class TestParsers:
    @pytest.mark.parametrize("text", ["true", "1", "YES", " on "])
    def test_true(self, text):
        assert parse_bool(text) is True

    @pytest.mark.parametrize("text", ["false", "0", "No", "off"])
    def test_false(self, text):
        assert parse_bool(text) is False

    def test_bad_bool(self):
        with pytest.raises(ValueError):
            parse_bool("maybe")

    def test_float_list(self):
        assert parse_float_list("0.2, 0.25,0.3") == (0.2, 0.25, 0.3)

    @pytest.mark.parametrize("text", ["", " , ", "0.2,x"])
    def test_bad_float_list(self, text):
        with pytest.raises(ValueError):
            parse_float_list(text)


class TestRegistry:
    def test_flags_are_unique(self):
        flags = [entry.flag for entry in REGISTRY.values()]
        assert len(flags) == len(set(flags))

    def test_dest_is_identifier(self):
        for entry in REGISTRY.values():
            assert entry.dest.isidentifier()

    def test_defaults(self):
        assert REGISTRY["maxent.tol"].default == 1e-10
        assert REGISTRY["grid.nq"].default == 256
        assert REGISTRY["state.T"].default is None


class TestLoadConfigFile:
    def test_reads_key_values_and_comments(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("# vdW gas\ngas.a = 1\ngas.b=1\nsweep.temps = \"0.2,0.25\"\n")
        assert load_config_file(path) == {"gas.a": "1", "gas.b": "1", "sweep.temps": "0.2,0.25"}

    def test_missing_file(self, tmp_path):
        with pytest.raises(click.UsageError, match="not found"):
            load_config_file(tmp_path / "absent.conf")

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("gas.z = 1\n")
        with pytest.raises(click.UsageError, match="unknown config key 'gas.z'"):
            load_config_file(path)

    def test_key_without_value(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("state.T\n")
        with pytest.raises(click.UsageError, match="has no value"):
            load_config_file(path)


class TestResolveConfigFile:
    def test_explicit_wins(self, tmp_path):
        assert resolve_config_file(str(tmp_path / "x.conf")) == tmp_path / "x.conf"

    def test_default_when_present(self, isolated_config_dir):
        isolated_config_dir.mkdir(parents=True)
        (isolated_config_dir / "thermoscope.conf").write_text("gas.N = 3\n")
        assert resolve_config_file(None) == isolated_config_dir / "thermoscope.conf"

    def test_none_when_absent(self):
        assert resolve_config_file(None) is None


class TestMergeParameters:
    """default < config file < flag."""

    KEYS = ("gas.N", "state.T", "state.P")

    def test_defaults_only(self):
        merged = merge_parameters(self.KEYS, {}, {})
        assert merged == {"gas.N": 1, "state.T": None, "state.P": None}

    def test_file_overrides_default_and_flag_overrides_file(self):
        merged = merge_parameters(
            self.KEYS, {"gas.N": "2", "state.T": "3"}, {"state.T": 4.0, "state.P": None}
        )
        assert merged == {"gas.N": 2, "state.T": 4.0, "state.P": None}

    def test_keys_outside_the_command_are_ignored(self):
        merged = merge_parameters(("gas.N",), {"gas.N": "2", "state.T": "3"}, {})
        assert merged == {"gas.N": 2}

    def test_bad_file_value(self):
        with pytest.raises(click.UsageError, match="bad value 'two'"):
            merge_parameters(self.KEYS, {"gas.N": "two"}, {})

    def test_missing_required_names_the_flag(self):
        with pytest.raises(click.UsageError, match="--P"):
            merge_parameters(self.KEYS, {"state.T": "1"}, {}, required=("state.T", "state.P"))


class TestRunConfig:
    def test_frozen(self):
        run = RunConfig(command="ideal", parameters={}, format="json")
        with pytest.raises(ValidationError):
            run.format = "csv"

    def test_format_is_checked(self):
        with pytest.raises(ValidationError):
            RunConfig(command="ideal", parameters={}, format="xml")

    def test_command_is_checked(self):
        with pytest.raises(ValidationError):
            RunConfig(command="plot", parameters={}, format="csv")


def test_echo_parameters_sorted_and_json_friendly():
    echoed = echo_parameters({"sweep.temps": (0.2, 0.3), "gas.N": 1})
    assert list(echoed) == ["gas.N", "sweep.temps"]
    assert echoed["sweep.temps"] == [0.2, 0.3]
