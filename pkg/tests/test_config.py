"""Tests for run configuration files and resource limit overrides."""

import math

import pytest
from src.dicke_gauge.config import (
    LIMIT_DEFAULTS,
    RunConfig,
    env_limit,
    limit_setting,
    load_run_config,
    resource_limits,
)
from src.dicke_gauge.errors import ValidationError


class TestLimits:
    """Test environment overrides of resource limits."""

    def test_defaults(self, monkeypatch):
        """Test that unset variables fall back to the defaults."""
        monkeypatch.delenv("DICKE_ED_MAX_DIM", raising=False)
        assert env_limit("max_dimension") is None
        assert limit_setting("max_dimension") == LIMIT_DEFAULTS["max_dimension"]

    def test_env_override(self, monkeypatch):
        """Test that DICKE_ED_MAX_DIM overrides the default."""
        monkeypatch.setenv("DICKE_ED_MAX_DIM", "1234")
        assert limit_setting("max_dimension") == 1234

    def test_invalid_env_value(self, monkeypatch):
        """Test that a non-numeric override names the variable."""
        monkeypatch.setenv("DICKE_WORKERS", "many")
        with pytest.raises(ValidationError) as exc_info:
            limit_setting("workers")
        assert "DICKE_WORKERS" in exc_info.value.fields

    def test_env_wins_over_file(self, monkeypatch):
        """Test that environment limits take precedence over run-file limits."""
        monkeypatch.setenv("DICKE_SWEEP_MAX_CELLS", "77")
        limits = resource_limits({"max_cells": 10, "dense_limit": 99})
        assert limits["max_cells"] == 77
        assert limits["dense_limit"] == 99

    def test_unknown_file_limit(self):
        """Test that an unknown limit key is rejected."""
        with pytest.raises(ValidationError, match="unknown limit"):
            resource_limits({"max_memory": 1})


class TestRunConfig:
    """Test INI round trips and override precedence."""

    def test_round_trip(self):
        """Test that to_ini / from_ini restore every field exactly."""
        config = RunConfig(
            command="figure",
            gauge="unified",
            target="fig5",
            eta=0.1 + 0.2,
            G=1 / 3,
            N=7,
            phi=math.pi / 3,
            atoms=(2, 4, 8),
            tol=1e-9,
            points=41,
            samples=50,
            seed=9,
            axes={"G": (0.0, 2.0, 41)},
            out="results",
            format="json",
        )
        assert RunConfig.from_ini(config.to_ini()) == config

    def test_file_values_override_base(self):
        """Test that values from the file replace the base configuration."""
        text = "[params]\nG = 0.75\nphi = pi/6\n\n[run]\natoms = 2, 3\n"
        config = RunConfig.from_ini(text)
        assert config.G == 0.75
        assert config.phi == math.pi / 6
        assert config.atoms == (2, 3)
        assert config.N == 10

    def test_unknown_key_and_section(self):
        """Test that every unknown key or section is reported."""
        text = "[params]\ncoupling = 0.5\n\n[plot]\ncolor = red\n"
        with pytest.raises(ValidationError) as exc_info:
            RunConfig.from_ini(text)
        assert set(exc_info.value.fields) == {"params.coupling", "plot"}

    def test_bad_value_names_key(self):
        """Test that an unparseable value names its section and key."""
        with pytest.raises(ValidationError) as exc_info:
            RunConfig.from_ini("[params]\nG = strong\n")
        assert "params.G" in exc_info.value.fields

    def test_bad_format(self):
        """Test that the output format must be csv or json."""
        with pytest.raises(ValidationError, match="output.format"):
            RunConfig.from_ini("[output]\nformat = xlsx\n")

    def test_with_overrides_skips_none(self):
        """Test that None overrides leave file values alone."""
        config = RunConfig(G=0.8).with_overrides(G=None, N=3)
        assert config.G == 0.8
        assert config.N == 3

    def test_with_env_limits(self, monkeypatch):
        """Test that environment limits are applied on top of file limits."""
        monkeypatch.setenv("DICKE_ED_MAX_SOLVES", "5")
        config = RunConfig(limits={**LIMIT_DEFAULTS, "max_ed_solves": 10}).with_env_limits()
        assert config.limits["max_ed_solves"] == 5

    def test_echo_is_json_ready(self):
        """Test that the echo lists tuples as lists."""
        echo = RunConfig(axes={"G": (0.0, 1.0, 3)}).echo()
        assert echo["atoms"] == [2, 4, 8]
        assert echo["axes"] == {"G": [0.0, 1.0, 3]}
        assert echo["limits"] == LIMIT_DEFAULTS

    def test_load_missing_file(self, tmp_path):
        """Test that a missing run file is a validation error."""
        with pytest.raises(ValidationError, match="does not exist"):
            load_run_config(tmp_path / "missing.ini")

    def test_load_file(self, tmp_path):
        """Test reading a run file from disk."""
        path = tmp_path / "run.ini"
        path.write_text("[run]\ngauge = dipole\n\n[limits]\nmax_cells = 500\n", encoding="utf-8")
        config = load_run_config(path)
        assert config.gauge == "dipole"
        assert config.limits["max_cells"] == 500
