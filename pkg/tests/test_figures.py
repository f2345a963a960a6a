"""Tests for the figure registry and panel rendering."""

import json
import math

import pytest
from src.dicke_gauge.errors import BudgetError, ValidationError
from src.dicke_gauge.figures import ALL_FIGURES, FIGURES, GridOptions, get_figure, render_figure

GRID = GridOptions(points=5)


class TestRegistry:
    """Test figure lookup."""

    def test_all_figures_registered(self):
        """Test that fig2 through fig10 are available in order."""
        assert list(FIGURES) == [f"fig{n}" for n in range(2, 11)]
        assert len(ALL_FIGURES) == 9

    def test_lookup_is_case_insensitive(self):
        """Test that ids are normalized before lookup."""
        assert get_figure(" FIG4 ").name == "fig4"

    def test_unknown_figure_lists_valid_ids(self):
        """Test that an unknown id names every valid id."""
        with pytest.raises(ValidationError, match="Valid ids: fig2, fig3") as exc_info:
            get_figure("fig11")
        assert "figure" in exc_info.value.fields


class TestRenderFigure:
    """Test rendered panels."""

    def test_fig2_panel_triples(self):
        """Test three observables at three detunings for the Coulomb gauge."""
        outputs = render_figure("fig2", GRID)
        names = [output.name for output in outputs]
        assert len(names) == 9
        assert names[:3] == ["fig2_energy_eta0.5", "fig2_n_p_eta0.5", "fig2_delta_na_eta0.5"]
        assert "fig2_delta_na_eta1.5" in names
        first = outputs[0]
        assert first.columns == ["G", "energy"]
        assert first.body.splitlines()[0] == "G,energy"
        assert len(first.body.splitlines()) == 6
        assert first.annotations["G_c"] == pytest.approx(math.sqrt(0.5) / 2)

    def test_fig3_uses_dipole_critical_coupling(self):
        """Test the dipole G_c annotation at eta = 1.5."""
        outputs = {output.name: output for output in render_figure("fig3", GRID)}
        assert outputs["fig3_n_p_eta1.5"].annotations["G_c"] == pytest.approx(0.408248290463863)

    def test_fig4_writes_boundaries(self):
        """Test that each phase diagram carries its G_c(eta) boundary."""
        outputs = render_figure("fig4", GRID)
        assert [output.name for output in outputs] == ["fig4_coulomb", "fig4_dipole"]
        for output in outputs:
            assert output.columns == ["eta", "G", "label", "n_p"]
            assert len(output.records) == 25
            assert output.boundary_body.splitlines()[0] == "eta,G_c"

    def test_fig5_concatenates_phases(self):
        """Test that each unified panel stacks the three field phases."""
        outputs = render_figure("fig5", GRID)
        assert len(outputs) == 9
        panel = outputs[0]
        assert panel.columns == ["phi", "G", "energy"]
        assert len(panel.records) == 15
        phases = sorted({record.inputs["phi"] for record in panel.records})
        assert phases == pytest.approx([math.pi / 6, math.pi / 4, math.pi / 3])

    def test_fig7_four_files(self):
        """Test (Re, Im) at gamma^2/N = 1 and 2 with their G_ep annotations."""
        outputs = render_figure("fig7", GRID)
        assert [output.name for output in outputs] == ["fig7_re_x1", "fig7_im_x1", "fig7_re_x2", "fig7_im_x2"]
        assert outputs[0].annotations["G_ep"] == pytest.approx(0.35355339059327373)
        assert outputs[2].annotations["G_ep"] == pytest.approx(0.25)
        assert outputs[1].columns == ["G", "im_minus", "im_plus"]

    def test_fig8_merge_points(self):
        """Test x_ep annotations at G = 0.5 and 1."""
        outputs = {output.name: output for output in render_figure("fig8", GRID)}
        assert outputs["fig8_re_G0.5"].annotations["x_ep"] == pytest.approx(0.5)
        assert outputs["fig8_im_G1"].annotations["x_ep"] == pytest.approx(0.125)

    def test_fig9_unstable_state(self):
        """Test the normal and unstable curves of the non-Hermitian gauge."""
        outputs = {output.name: output for output in render_figure("fig9", GRID)}
        assert set(outputs) == {"fig9_energy", "fig9_n_p", "fig9_atom_energy"}
        assert outputs["fig9_energy"].columns == ["G", "energy", "energy_upper", "energy_unstable"]

    def test_fig10_normal_labels_only(self):
        """Test that the non-Hermitian diagram contains only NP-family labels."""
        (output,) = render_figure("fig10", GRID)
        labels = {record.observables["label"] for record in output.records}
        assert labels <= {"NP", "NP_co"}

    def test_json_format(self):
        """Test JSON panel bodies keep only the panel columns."""
        outputs = render_figure("fig2", GRID, output_format="json")
        data = json.loads(outputs[1].body)
        assert data["metadata"]["columns"] == ["G", "n_p"]
        assert set(data["records"][0]) == {"index", "G", "n_p"}

    def test_axis_override(self):
        """Test that an explicit axis range wins over the point count."""
        grid = GridOptions(points=5, axes={"G": (0.0, 1.0, 3)})
        outputs = render_figure("fig2", grid)
        assert [record.inputs["G"] for record in outputs[0].records] == [0.0, 0.5, 1.0]

    def test_budget(self):
        """Test that a panel over the cell budget is refused."""
        with pytest.raises(BudgetError):
            render_figure("fig4", GridOptions(points=50), max_cells=100)

    def test_deterministic_bodies(self):
        """Test byte-identical bodies across runs."""
        first = [output.body for output in render_figure("fig6", GRID)]
        second = [output.body for output in render_figure("fig6", GRID)]
        assert first == second
