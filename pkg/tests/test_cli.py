"""Tests for the dicke-gauge command line."""

import json
import math

import pytest
from src.dicke_gauge.cli import (
    EXIT_BUDGET,
    EXIT_ED_FAILED,
    EXIT_INVARIANT,
    EXIT_OK,
    EXIT_VALIDATION,
    build_parser,
    main,
    resolve_config,
)
from src.dicke_gauge.errors import EigensolverError
from src.dicke_gauge.verify import CheckFailure, SuiteReport


class TestPoint:
    """Test the point command."""

    def test_normal_phase(self, capsys):
        """Test that G = 0.3 at resonance prints the normal phase."""
        assert main(["point", "--gauge", "coulomb", "--eta", "1", "--g", "0.3"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "label     NP" in out
        assert "energy    -1" in out
        assert "delta_na  -1" in out

    def test_unified_matches_coulomb_at_resonance(self, capsys):
        """Test that the unified gauge at eta = 1 prints the Coulomb observables."""
        main(["point", "--gauge", "coulomb", "--eta", "1", "--g", "1"])
        coulomb = capsys.readouterr().out.splitlines()[1:]
        main(["point", "--gauge", "unified", "--eta", "1", "--phi", "1.0472", "--g", "1"])
        unified = capsys.readouterr().out.splitlines()[1:]
        assert coulomb[:6] == unified[:6]

    def test_negative_coupling_names_flag(self, capsys):
        """Test that --g -0.1 exits 2 and names the flag."""
        assert main(["point", "--gauge", "coulomb", "--eta", "1", "--g", "-0.1"]) == EXIT_VALIDATION
        assert "--g" in capsys.readouterr().err

    def test_bad_phase_names_flag(self, capsys):
        """Test that an unparseable --phi exits 2."""
        assert main(["point", "--phi", "third"]) == EXIT_VALIDATION
        assert "--phi" in capsys.readouterr().err

    def test_unknown_gauge(self, capsys):
        """Test that an unknown gauge exits 2."""
        assert main(["point", "--gauge", "velocity"]) == EXIT_VALIDATION
        assert "--gauge" in capsys.readouterr().err

    def test_json_record(self, tmp_path):
        """Test that --json writes the solution with the config echo."""
        assert main(["--out", str(tmp_path), "point", "--gauge", "nonhermitian", "--phi", "pi/3",
                     "--g", "0.4", "--n", "4", "--json"]) == EXIT_OK
        data = json.loads((tmp_path / "point.json").read_text())
        assert data["solution"]["phase"] == "NP"
        assert data["solution"]["companion"]["n_p"] == pytest.approx(0.46125)
        assert data["label"] == "NP_co"
        assert data["config"]["G"] == 0.4
        assert "generated_at" in data

    def test_phase_literal_reduced(self, tmp_path):
        """Test that phi = 7*pi/3 is echoed reduced to pi/3."""
        main(["--out", str(tmp_path), "point", "--gauge", "unified", "--phi", "7*pi/3", "--json"])
        data = json.loads((tmp_path / "point.json").read_text())
        assert data["params"]["phi"] == pytest.approx(math.pi / 3, abs=1e-12)


class TestFigure:
    """Test the figure command."""

    def test_fig7_files(self, tmp_path):
        """Test four panel files plus the sidecar."""
        assert main(["--out", str(tmp_path), "figure", "fig7", "--points", "5"]) == EXIT_OK
        names = sorted(path.name for path in tmp_path.iterdir())
        assert names == ["fig7.json", "fig7_im_x1.csv", "fig7_im_x2.csv", "fig7_re_x1.csv", "fig7_re_x2.csv"]
        sidecar = json.loads((tmp_path / "fig7.json").read_text())
        assert sidecar["figure"] == "fig7"
        assert sidecar["config"]["points"] == 5
        assert sidecar["panels"][0]["annotations"]["G_ep"] == pytest.approx(0.35355339059327373)

    def test_diagram_boundary_file(self, tmp_path):
        """Test that phase diagrams are written with their boundary files."""
        assert main(["--out", str(tmp_path), "figure", "fig4", "--points", "4"]) == EXIT_OK
        assert (tmp_path / "fig4_coulomb_boundary.csv").read_text().startswith("eta,G_c\n")

    def test_json_format(self, tmp_path):
        """Test that --format json writes JSON panels."""
        assert main(["--out", str(tmp_path), "--format", "json", "figure", "fig9", "--points", "4"]) == EXIT_OK
        assert json.loads((tmp_path / "fig9_n_p.json").read_text())["metadata"]["panel"] == "fig9_n_p"

    def test_axis_override(self, tmp_path):
        """Test that --axis replaces an axis range."""
        assert main(["--out", str(tmp_path), "figure", "fig2", "--axis", "G", "0", "1", "3"]) == EXIT_OK
        body = (tmp_path / "fig2_n_p_eta1.csv").read_text()
        assert body.splitlines() == ["G,n_p", "0,0", "0.5,0", "1,1.875"]

    def test_deterministic_bodies(self, tmp_path):
        """Test that reruns produce byte-identical CSV files."""
        main(["--out", str(tmp_path / "a"), "figure", "fig10", "--points", "6"])
        main(["--out", str(tmp_path / "b"), "figure", "fig10", "--points", "6"])
        assert (tmp_path / "a" / "fig10_diagram.csv").read_bytes() == (tmp_path / "b" / "fig10_diagram.csv").read_bytes()

    def test_unknown_figure(self, capsys, tmp_path):
        """Test that an unknown figure exits 2 listing valid ids."""
        assert main(["--out", str(tmp_path), "figure", "fig11"]) == EXIT_VALIDATION
        assert "fig2" in capsys.readouterr().err

    def test_budget_exceeded(self, monkeypatch, tmp_path, capsys):
        """Test that a grid over the cell budget exits 3."""
        monkeypatch.setenv("DICKE_SWEEP_MAX_CELLS", "10")
        assert main(["--out", str(tmp_path), "figure", "fig4", "--points", "5"]) == EXIT_BUDGET
        assert "budget" in capsys.readouterr().err


class TestED:
    """Test the ed command."""

    def test_table(self, tmp_path):
        """Test the CSV table and the n_max_used metadata."""
        assert main(["--out", str(tmp_path), "ed", "--gauge", "coulomb", "--eta", "1", "--g", "1",
                     "--n", "1,2"]) == EXIT_OK
        lines = (tmp_path / "ed_coulomb.csv").read_text().splitlines()
        assert lines[0].startswith("N,energy_var,n_p_var")
        assert len(lines) == 3
        meta = json.loads((tmp_path / "ed_coulomb_meta.json").read_text())
        assert [row["n_max_used"] > 0 for row in meta["rows"]] == [True, True]

    def test_zero_coupling_gap(self, tmp_path):
        """Test that G = 0 gives a zero gap."""
        main(["--out", str(tmp_path), "ed", "--gauge", "coulomb", "--g", "0", "--n", "4"])
        meta = json.loads((tmp_path / "ed_coulomb_meta.json").read_text())
        assert abs(meta["rows"][0]["gap"]) < 1e-10

    def test_refused_size(self, tmp_path):
        """Test that an oversized N is refused before allocation and exits 4."""
        assert main(["--out", str(tmp_path), "ed", "--n", "4096"]) == EXIT_ED_FAILED
        meta = json.loads((tmp_path / "ed_coulomb_meta.json").read_text())
        assert meta["rows"][0]["status"] == "unconverged"

    def test_eigensolver_error_exits_4(self, tmp_path, monkeypatch, capsys):
        """Test that an eigensolver failure escaping the row loop exits 4, not 2."""
        def fail(*args, **kwargs):
            raise EigensolverError("eigsh did not converge")

        monkeypatch.setattr("src.dicke_gauge.cli.ed_compare", fail)
        assert main(["--out", str(tmp_path), "ed", "--n", "2"]) == EXIT_ED_FAILED
        assert "eigsh did not converge" in capsys.readouterr().err

    def test_partial_failure_exits_zero(self, tmp_path):
        """Test that one refused row among converged rows still exits 0."""
        assert main(["--out", str(tmp_path), "ed", "--g", "0.3", "--n", "1,4096"]) == EXIT_OK

    def test_dump(self, tmp_path):
        """Test that --dump writes one Matrix Market file per converged row."""
        dump = tmp_path / "mtx"
        assert main(["--out", str(tmp_path), "ed", "--g", "0.2", "--n", "1", "--dump", str(dump)]) == EXIT_OK
        files = list(dump.glob("*.mtx"))
        assert len(files) == 1
        assert files[0].name.startswith("H_coulomb_N1_nmax")

    def test_bad_atom_list(self, capsys, tmp_path):
        """Test that a malformed --n exits 2 naming the flag."""
        assert main(["--out", str(tmp_path), "ed", "--n", "2,x"]) == EXIT_VALIDATION
        assert "--n" in capsys.readouterr().err

    def test_nonhermitian_refused(self, tmp_path):
        """Test that the non-Hermitian gauge has no ED table."""
        assert main(["--out", str(tmp_path), "ed", "--gauge", "nonhermitian", "--n", "1"]) == EXIT_VALIDATION


class TestVerify:
    """Test the verify command."""

    def test_passing_scope(self, capsys):
        """Test that a passing suite exits 0."""
        assert main(["verify", "gauge-reduction", "--samples", "10"]) == EXIT_OK
        assert "gauge-reduction" in capsys.readouterr().out

    def test_json_report(self, tmp_path):
        """Test that --json writes the per-suite report."""
        assert main(["--out", str(tmp_path), "verify", "ep", "--samples", "5", "--json"]) == EXIT_OK
        data = json.loads((tmp_path / "verify.json").read_text())
        assert data["reports"][0]["scope"] == "ep"
        assert data["reports"][0]["failed"] == 0

    def test_failure_exits_5_with_replay(self, monkeypatch, capsys):
        """Test that a failed invariant exits 5 and prints the failing sample."""
        failing = SuiteReport(scope="berry", seed=0, samples=1,
                              failures=[CheckFailure("berry coulomb", 1.0, 0.0, {"G": 0.7, "N": 3})])
        monkeypatch.setattr("src.dicke_gauge.cli.run_verify", lambda scope, samples, seed: [failing])
        assert main(["verify", "berry"]) == EXIT_INVARIANT
        out = capsys.readouterr().out
        assert '"G": 0.7' in out

    def test_unknown_scope(self):
        """Test that an unknown scope exits 2."""
        assert main(["verify", "everything"]) == EXIT_VALIDATION

    def test_ep_scope_exits_cleanly(self, capsys):
        """Test that the ep suite runs to completion and exits 0."""
        assert main(["verify", "ep", "--samples", "5"]) == EXIT_OK
        assert capsys.readouterr().out.startswith("ep ")

    def test_ed_scope_prints_gauge_spread(self, tmp_path, capsys):
        """Test that the ed suite prints and stores the resonance gauge spread."""
        assert main(["--out", str(tmp_path), "verify", "ed", "--samples", "1", "--json"]) == EXIT_OK
        assert "note: ED gauge spread at resonance" in capsys.readouterr().out
        data = json.loads((tmp_path / "verify.json").read_text())
        assert data["reports"][0]["notes"][0]["eta"] == 1.0


class TestConfigResolution:
    """Test precedence of run files, environment and flags."""

    def test_flags_override_file(self, tmp_path):
        """Test that a flag wins over the run file."""
        path = tmp_path / "run.ini"
        path.write_text("[params]\nG = 0.9\nN = 6\n", encoding="utf-8")
        args = build_parser().parse_args(["--config", str(path), "point", "--g", "0.2"])
        config = resolve_config(args)
        assert config.G == 0.2
        assert config.N == 6

    def test_eta_flag_replaces_file_omega(self, tmp_path):
        """Test that --eta drops a conflicting omega from the run file."""
        path = tmp_path / "run.ini"
        path.write_text("[params]\nomega = 2.0\n", encoding="utf-8")
        args = build_parser().parse_args(["--config", str(path), "point", "--eta", "0.5"])
        config = resolve_config(args)
        assert config.eta == 0.5
        assert config.omega is None

    def test_env_limit_applied(self, monkeypatch):
        """Test that environment limits reach the run configuration."""
        monkeypatch.setenv("DICKE_ED_MAX_DIM", "321")
        config = resolve_config(build_parser().parse_args(["ed"]))
        assert config.limits["max_dimension"] == 321

    def test_workers_flag(self):
        """Test that --workers sets the ED worker limit for ed runs."""
        config = resolve_config(build_parser().parse_args(["ed", "--workers", "3"]))
        assert config.limits["ed_workers"] == 3

    def test_bad_run_file(self, tmp_path, capsys):
        """Test that an invalid run file exits 2 naming the key."""
        path = tmp_path / "run.ini"
        path.write_text("[params]\nG = strong\n", encoding="utf-8")
        assert main(["--config", str(path), "point"]) == EXIT_VALIDATION
        assert "params.G" in capsys.readouterr().err
