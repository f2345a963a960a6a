"""Tests for parameter validation, gauge parsing and the phase-structure function."""

import math

import pytest
from src.dicke_gauge.errors import DomainError, ValidationError
from src.dicke_gauge.model import (
    GaugeKind,
    SpinConvention,
    effective_phase_factor,
    parse_angle,
    phase_factor,
    reduce_phase,
    spin_value,
    validate_params,
)


class TestValidateParams:
    """Test construction of ModelParams from raw inputs."""

    def test_defaults_to_resonance(self):
        """Test that omitting eta and omega gives eta = 1."""
        p = validate_params(G=0.3, N=4)
        assert p.eta == 1.0
        assert p.omega == 1.0
        assert p.Omega == 1.0

    def test_eta_derived_from_omega(self):
        """Test that eta is computed as omega / Omega."""
        p = validate_params(G=0.3, N=4, Omega=2.0, omega=1.0)
        assert p.eta == 0.5

    def test_consistent_eta_and_omega_accepted(self):
        """Test that agreeing eta and omega are both accepted."""
        p = validate_params(G=0.3, N=4, Omega=2.0, omega=3.0, eta=1.5)
        assert p.eta == 1.5

    def test_inconsistent_eta_and_omega_rejected(self):
        """Test that contradicting eta and omega raise a field-level error."""
        with pytest.raises(ValidationError, match="inconsistent") as exc_info:
            validate_params(G=0.3, N=4, omega=2.0, eta=1.0)
        assert "eta" in exc_info.value.fields

    def test_negative_coupling_rejected(self):
        """Test that G < 0 is rejected and the field is named."""
        with pytest.raises(ValidationError) as exc_info:
            validate_params(G=-0.1, N=4)
        assert list(exc_info.value.fields) == ["G"]

    def test_all_offending_fields_listed(self):
        """Test that every bad field is reported at once."""
        with pytest.raises(ValidationError) as exc_info:
            validate_params(G=math.nan, N=0, Omega=-1.0)
        assert set(exc_info.value.fields) == {"G", "N", "Omega"}

    def test_validation_error_is_value_error(self):
        """Test that callers catching ValueError still see validation errors."""
        with pytest.raises(ValueError):
            validate_params(G=0.3, N=4, eta=0.0)

    def test_boolean_atom_count_rejected(self):
        """Test that N=True is not accepted as an integer."""
        with pytest.raises(ValidationError, match="atom count"):
            validate_params(G=0.3, N=True)

    def test_phase_reduced(self):
        """Test that phi = 7 pi / 3 reduces to pi / 3."""
        p = validate_params(G=0.3, N=4, phi=7 * math.pi / 3)
        assert p.phi == pytest.approx(math.pi / 3, abs=1e-12)

    def test_with_helpers_revalidate(self):
        """Test that the with_* helpers go through validation."""
        p = validate_params(G=0.3, N=4, eta=1.5)
        assert p.with_coupling(0.7).G == 0.7
        assert p.with_atoms(8).N == 8
        assert p.with_atoms(8).eta == 1.5
        with pytest.raises(ValidationError):
            p.with_coupling(-1.0)


class TestGaugeKind:
    """Test gauge name parsing."""

    @pytest.mark.parametrize("text,expected", [
        ("coulomb", GaugeKind.COULOMB),
        ("Dipole", GaugeKind.DIPOLE),
        (" unified ", GaugeKind.UNIFIED),
        ("nonhermitian", GaugeKind.NON_HERMITIAN_UNIFIED),
        ("non-hermitian", GaugeKind.NON_HERMITIAN_UNIFIED),
        ("non_hermitian_unified", GaugeKind.NON_HERMITIAN_UNIFIED),
    ])
    def test_parse(self, text, expected):
        """Test that accepted spellings map to the right gauge."""
        assert GaugeKind.parse(text) is expected

    def test_unknown_gauge_lists_valid_names(self):
        """Test that an unknown gauge gives a helpful error."""
        with pytest.raises(ValidationError, match="coulomb, dipole, unified, nonhermitian"):
            GaugeKind.parse("velocity")

    def test_hermiticity(self):
        """Test that only the non-Hermitian gauge reports is_hermitian False."""
        assert [g.is_hermitian for g in GaugeKind] == [True, True, True, False]


class TestPhaseFactor:
    """Test the phase-structure function and its gauge specializations."""

    def test_limits(self):
        """Test Phi at phi = 0 and phi = pi/2."""
        assert phase_factor(1.7, 0.0) == 1.0
        assert phase_factor(1.7, math.pi / 2) == pytest.approx(1.7**2)

    def test_resonance_is_one(self):
        """Test that Phi(1, phi) = 1 for every phase."""
        for phi in (0.1, 0.7, 2.3):
            assert phase_factor(1.0, phi) == pytest.approx(1.0, abs=1e-15)

    def test_bounds(self):
        """Test that Phi stays between min(1, eta^2) and max(1, eta^2)."""
        for eta in (0.3, 2.2):
            for phi in (0.2, 1.0, 2.9):
                value = phase_factor(eta, phi)
                assert min(1.0, eta**2) - 1e-15 <= value <= max(1.0, eta**2) + 1e-15

    def test_invalid_eta(self):
        """Test that a non-positive eta is a domain error."""
        with pytest.raises(DomainError):
            phase_factor(0.0, 0.3)

    def test_effective_factor_per_gauge(self):
        """Test that Coulomb uses 1, dipole eta^2 and unified Phi(eta, phi)."""
        p = validate_params(G=0.3, N=4, eta=1.5, phi=math.pi / 6)
        assert effective_phase_factor(GaugeKind.COULOMB, p) == 1.0
        assert effective_phase_factor(GaugeKind.DIPOLE, p) == pytest.approx(2.25)
        expected = math.cos(math.pi / 6) ** 2 + 2.25 * math.sin(math.pi / 6) ** 2
        assert effective_phase_factor(GaugeKind.UNIFIED, p) == pytest.approx(expected)
        assert effective_phase_factor(GaugeKind.NON_HERMITIAN_UNIFIED, p) == pytest.approx(expected)


class TestAngles:
    """Test angle parsing and reduction."""

    @pytest.mark.parametrize("text,expected", [
        ("pi/6", math.pi / 6),
        ("pi/4", math.pi / 4),
        ("pi/3", math.pi / 3),
        ("pi/2", math.pi / 2),
        ("2*pi/3", 2 * math.pi / 3),
        ("-pi/4", -math.pi / 4),
        ("0.5", 0.5),
    ])
    def test_parse_angle(self, text, expected):
        """Test that pi literals and plain numbers are parsed exactly."""
        assert parse_angle(text) == expected

    def test_parse_angle_names_field(self):
        """Test that an unparseable angle names the field."""
        with pytest.raises(ValidationError) as exc_info:
            parse_angle("third", field="params.phi")
        assert "params.phi" in exc_info.value.fields

    def test_reduce_phase(self):
        """Test reduction into [0, pi)."""
        assert reduce_phase(math.pi) == pytest.approx(0.0, abs=1e-15)
        assert reduce_phase(-math.pi / 4) == pytest.approx(3 * math.pi / 4)
        assert 0.0 <= reduce_phase(-1e-18) < math.pi


class TestSpinConvention:
    """Test the collective spin convention."""

    def test_spin_equals_atom_count(self):
        """Test that three-level atoms give s = N and dimension 2N + 1."""
        assert spin_value(5) == 5
        assert SpinConvention.for_atoms(5).dimension == 11

    def test_invalid_atom_count(self):
        """Test that N = 0 is rejected."""
        with pytest.raises(ValidationError):
            spin_value(0)
