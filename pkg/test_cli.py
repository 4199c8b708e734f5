"""
Test suite for the pdm-superint command line.
"""

import csv
import io
import json
import os
import unittest
from unittest.mock import patch

import pytest

from cli import fan_out, format_value, main, parse_range, render
from config import RunConfig
from numsolve import SolverError


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestHelpers(unittest.TestCase):
    """Parsing and formatting"""

    def test_ranges(self):
        assert parse_range("3") == [3]
        assert parse_range("0..3") == [0, 1, 2, 3]

    def test_bad_ranges(self):
        for text in ("a", "3..1", "-1"):
            with pytest.raises(Exception):
                parse_range(text)

    def test_twelve_digits(self):
        assert format_value(-4 / 9) == "-0.444444444444"
        assert format_value((0.0, float("inf"))) == "(0, inf)"
        assert format_value(None) == ""

    def test_table_is_aligned(self):
        text = render([{"a": 1.5, "bb": "x"}, {"a": 10.25, "bb": "yy"}], ["a", "bb"], "table")
        lines = text.splitlines()
        assert lines[0].startswith("a      bb")
        assert lines[2].startswith("1.5    x")

    def test_submission_order(self):
        assert fan_out(lambda i: i * i, range(10), RunConfig(workers=4)) == [i * i for i in range(10)]


class TestCommands:
    """End-to-end runs of main()"""

    def test_list(self, capsys):
        code, out, _ = run(capsys, "list", "--format", "json")
        assert code == 0
        families = json.loads(out)
        assert len(families) == 24
        assert families[0]["family"] == "F.1"

    def test_spectrum(self, capsys):
        code, out, _ = run(capsys, "spectrum", "--family", "T2.10", "--alpha", "8", "--kappa", "0", "--format", "csv")
        assert code == 0
        row = csv_rows(out)[0]
        assert float(row["E"]) == pytest.approx(-10.8166538264, abs=1e-10)
        assert row["formula"] == "t2_10_levels"

    def test_spectrum_ranges(self, capsys):
        code, out, _ = run(capsys, "spectrum", "--family", "T2.1", "--alpha", "-2", "--l", "0..1", "--n", "0..2",
                           "--format", "csv")
        assert code == 0
        rows = csv_rows(out)
        assert [(r["l"], r["n"]) for r in rows] == [(str(l), str(n)) for l in range(2) for n in range(3)]
        assert float(rows[3]["E"]) == pytest.approx(-0.16)

    def test_spectrum_without_levels(self, capsys):
        code, out, _ = run(capsys, "spectrum", "--family", "F.1", "--format", "csv")
        assert code == 1
        assert "no discrete spectrum" in csv_rows(out)[0]["note"]

    def test_solve(self, capsys, tmp_path):
        dump = tmp_path / "states.csv"
        code, out, _ = run(capsys, "solve", "--family", "T2.1", "--alpha", "-2", "--l", "1", "--states", "2",
                           "--grid", "2000", "--format", "csv", "--dump-wavefunctions", str(dump))
        assert code == 0
        rows = csv_rows(out)
        assert list(rows[0]) == ["n", "E_numeric", "E_closed", "diff", "error_estimate"]
        assert float(rows[0]["E_numeric"]) == pytest.approx(-0.16, abs=1e-6)
        assert dump.read_text().splitlines()[0] == "x,phi_0,phi_1"

    def test_reduce(self, capsys):
        code, out, _ = run(capsys, "reduce", "--family", "T2.1", "--alpha", "-2", "--format", "csv")
        assert code == 0
        assert {r["route"]: r["class"] for r in csv_rows(out)} == {"direct": "Coulomb", "two_step": "Oscillator3d"}

    def test_export(self, capsys, tmp_path):
        code, _, _ = run(capsys, "export", "--directory", str(tmp_path), "--family", "T2.1", "--alpha", "-2",
                         "--n", "0..1", "--grid", "500", "--x-max", "12")
        assert code == 0
        assert (tmp_path / "T2.1.json").exists()
        table = (tmp_path / "T2.1_l0_states.csv").read_text().splitlines()
        assert table[0] == "x,phi_0,phi_1"
        assert len(table) == 501

    def test_report_bytes_repeat(self, capsys, tmp_path):
        paths = [tmp_path / "a.json", tmp_path / "b.json"]
        for path in paths:
            assert main(["spectrum", "--family", "T1.9", "--alpha", "3", "--kappa", "1", "--n", "0..2",
                         "--format", "json", "--output", str(path)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    @pytest.mark.slow
    def test_verify_family(self, capsys):
        code, out, _ = run(capsys, "verify", "--family", "T2.1", "--alpha", "-2", "--format", "csv")
        assert code == 0
        rows = csv_rows(out)
        assert len(rows) == 2
        assert all(r["passed"] == "yes" for r in rows)


class TestExitCodes:
    """Usage and configuration errors exit with 2"""

    def test_unknown_family(self, capsys):
        code, _, err = run(capsys, "verify", "--family", "bogus")
        assert code == 2
        assert "error" in err

    def test_missing_coupling(self, capsys):
        assert run(capsys, "spectrum", "--family", "T2.1")[0] == 2

    def test_bad_range(self, capsys):
        assert run(capsys, "spectrum", "--family", "T2.1", "--alpha", "-2", "--n", "x..y")[0] == 2

    def test_spectral_violation(self, capsys):
        assert run(capsys, "spectrum", "--family", "T2.1", "--alpha", "2")[0] == 2

    def test_invalid_environment(self, capsys):
        with patch.dict(os.environ, {"PDM_WORKERS": "0"}):
            assert run(capsys, "list")[0] == 2

    def test_verify_needs_a_selection(self, capsys):
        assert run(capsys, "verify")[0] == 2

    @patch("cli.numeric_spectrum", side_effect=SolverError("no bracket"))
    def test_solver_failure_exits_one(self, mock_solver, capsys):
        """A solver error inside a command is a failed check, not a usage error"""
        code, _, err = run(capsys, "solve", "--family", "T2.1", "--alpha", "-2")
        assert code == 1
        assert "no bracket" in err

    @patch("cli.numeric_spectrum", side_effect=SolverError("stop"))
    def test_coordinate_flag_reaches_the_solver(self, mock_solver, capsys):
        run(capsys, "solve", "--family", "T2.1", "--alpha", "-2", "--coordinate", "arctan")
        config = mock_solver.call_args.args[4]
        assert config.coordinate == "arctan"

    @patch("cli.clear_caches")
    def test_caches_cleared_after_each_command(self, mock_clear, capsys):
        run(capsys, "list")
        mock_clear.assert_called_once()
