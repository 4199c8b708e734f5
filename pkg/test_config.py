"""
Test suite for run settings: config files, environment overrides and validation.
"""

import os
import unittest
from unittest.mock import patch

import pytest

from config import Config, RunConfig


class TestRunConfig(unittest.TestCase):
    """Validated settings"""

    def test_defaults(self):
        config = RunConfig()
        assert config.grid_n == 4000
        assert config.output_format == "table"
        assert config.coordinate == "auto"

    def test_rejects_nonpositive_tolerance(self):
        with pytest.raises(ValueError):
            RunConfig(spectrum_tol=0)

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            RunConfig(grid_n=8)


class TestSources:
    """File < environment < explicit overrides"""

    def test_file_values(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("grid_n=2000\nPDM_SEED=11\n")
        with patch.dict(os.environ, {}, clear=True):
            config = RunConfig.from_sources(path)
        assert config.grid_n == 2000
        assert config.seed == 11

    def test_environment_beats_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed=11\n")
        with patch.dict(os.environ, {"PDM_SEED": "5"}, clear=True):
            assert RunConfig.from_sources(path).seed == 5

    def test_overrides_win_and_none_is_ignored(self):
        with patch.dict(os.environ, {"PDM_SEED": "5", "PDM_WORKERS": "3"}, clear=True):
            config = RunConfig.from_sources(overrides={"seed": 9, "workers": None})
        assert config.seed == 9
        assert config.workers == 3

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("colour=blue\n")
        with pytest.raises(ValueError, match="Unknown key"):
            RunConfig.from_sources(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValueError, match="not found"):
            RunConfig.from_sources(tmp_path / "absent.cfg")

    def test_invalid_value_is_reported_by_field(self):
        with patch.dict(os.environ, {"PDM_RESIDUAL_TOL": "-1"}, clear=True):
            with pytest.raises(ValueError, match="residual_tol"):
                RunConfig.from_sources()

    def test_blank_environment_values_are_skipped(self):
        with patch.dict(os.environ, {"PDM_GRID_N": "  "}, clear=True):
            assert Config.env_overrides() == {}

    def test_get_with_default(self):
        with patch.dict(os.environ, {}, clear=True):
            assert Config.get("PDM_NOT_SET", "fallback") == "fallback"
