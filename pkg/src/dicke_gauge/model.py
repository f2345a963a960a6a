"""Gauges, validated model parameters and the phase-structure function Phi(eta, phi).

Energies are measured in units of the atomic splitting Omega; the defaults set
Omega = 1 so that omega = eta.
"""

import math
import re
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any

from .errors import DomainError, ValidationError

# Absolute tolerance used when both omega/Omega and eta are supplied
ETA_CONSISTENCY_TOL = 1e-12


class GaugeKind(str, Enum):
    """Form of the light-matter interaction."""

    COULOMB = "coulomb"
    DIPOLE = "dipole"
    UNIFIED = "unified"
    NON_HERMITIAN_UNIFIED = "nonhermitian"

    @property
    def is_hermitian(self) -> bool:
        return self is not GaugeKind.NON_HERMITIAN_UNIFIED

    @classmethod
    def parse(cls, text: "str | GaugeKind") -> "GaugeKind":
        """
        Parse a gauge name, accepting a few spellings of the non-Hermitian gauge.

        Args:
            text: Gauge name such as "coulomb", "dipole", "unified", "nonhermitian"

        Returns:
            The matching GaugeKind

        Raises:
            ValidationError: If the name is unknown
        """
        if isinstance(text, GaugeKind):
            return text
        key = text.strip().lower().replace("_", "-")
        aliases = {
            "non-hermitian": cls.NON_HERMITIAN_UNIFIED,
            "non-hermitian-unified": cls.NON_HERMITIAN_UNIFIED,
            "nonhermitian-unified": cls.NON_HERMITIAN_UNIFIED,
            "nh": cls.NON_HERMITIAN_UNIFIED,
        }
        if key in aliases:
            return aliases[key]
        for gauge in cls:
            if gauge.value == key:
                return gauge
        valid = ", ".join(g.value for g in cls)
        raise ValidationError({"gauge": f"unknown gauge '{text}', expected one of: {valid}"})


@dataclass(frozen=True)
class SpinConvention:
    """Collective spin of N three-level atoms: s = N, dimension 2N + 1."""

    s: int

    @classmethod
    def for_atoms(cls, N: int) -> "SpinConvention":
        return cls(s=spin_value(N))

    @property
    def dimension(self) -> int:
        return 2 * self.s + 1


@dataclass(frozen=True)
class ModelParams:
    """
    Validated physical inputs. Build through validate_params, not directly.

    Attributes:
        omega: Cavity-field frequency
        Omega: Atomic level splitting
        eta: Detuning ratio omega / Omega
        G: Dimensionless coupling constant
        N: Number of atoms
        phi: Cavity-field phase, reduced to [0, pi)
    """

    omega: float
    Omega: float
    eta: float
    G: float
    N: int
    phi: float

    def with_coupling(self, G: float) -> "ModelParams":
        return validate_params(Omega=self.Omega, omega=self.omega, G=G, N=self.N, phi=self.phi)

    def with_eta(self, eta: float) -> "ModelParams":
        return validate_params(Omega=self.Omega, eta=eta, G=self.G, N=self.N, phi=self.phi)

    def with_phi(self, phi: float) -> "ModelParams":
        return validate_params(Omega=self.Omega, omega=self.omega, G=self.G, N=self.N, phi=phi)

    def with_atoms(self, N: int) -> "ModelParams":
        return validate_params(Omega=self.Omega, omega=self.omega, G=self.G, N=N, phi=self.phi)

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


def spin_value(N: int) -> int:
    """Collective spin value for N three-level atoms (s = N, not N/2)."""
    if isinstance(N, bool) or not isinstance(N, int) or N < 1:
        raise ValidationError({"N": f"atom count must be a positive integer, got {N!r}"})
    return N


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


def phase_factor(eta: float, phi: float) -> float:
    """
    Phase-structure function Phi(eta, phi) = cos^2 phi + eta^2 sin^2 phi.

    Args:
        eta: Detuning ratio omega / Omega (> 0)
        phi: Cavity-field phase in radians

    Returns:
        Phi, bounded by min(1, eta^2) and max(1, eta^2)

    Raises:
        DomainError: If an input is non-finite or eta <= 0
    """
    _check_finite("eta", eta)
    _check_finite("phi", phi)
    if eta <= 0:
        raise DomainError(f"eta must be positive, got {eta}")
    return math.cos(phi) ** 2 + eta**2 * math.sin(phi) ** 2


def effective_phase_factor(gauge: GaugeKind, p: ModelParams) -> float:
    """Weight of the coupling under the square root of the energy function for a gauge."""
    if gauge is GaugeKind.COULOMB:
        return 1.0
    if gauge is GaugeKind.DIPOLE:
        return p.eta**2
    return phase_factor(p.eta, p.phi)


def reduce_phase(phi: float) -> float:
    """Reduce an angle into [0, pi); Phi only sees cos^2 and sin^2."""
    reduced = phi % math.pi
    # A tiny negative angle rounds up to exactly pi
    if reduced >= math.pi:
        reduced = 0.0
    return reduced


_ANGLE_PATTERN = re.compile(
    r"^\s*(?P<sign>[+-])?\s*(?P<num>\d+(?:\.\d*)?)?\s*\*?\s*pi\s*(?:/\s*(?P<den>\d+))?\s*$",
    re.IGNORECASE,
)


def parse_angle(text: "str | float", field: str = "phi") -> float:
    """
    Parse an angle in radians, accepting pi literals such as "pi/3" or "2*pi/3".

    Args:
        text: Number or literal
        field: Field name reported on failure

    Returns:
        Angle in radians

    Raises:
        ValidationError: If the text is neither a number nor a pi literal
    """
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(text)
    except ValueError:
        pass

    match = _ANGLE_PATTERN.match(text)
    if not match:
        raise ValidationError({field: f"cannot parse angle '{text}'. Use radians or forms like pi/6, 2*pi/3"})
    numerator = float(match.group("num")) if match.group("num") else 1.0
    denominator = int(match.group("den")) if match.group("den") else 1
    if denominator == 0:
        raise ValidationError({field: f"zero denominator in angle '{text}'"})
    value = numerator * math.pi / denominator
    return -value if match.group("sign") == "-" else value


def validate_params(
    G: float,
    N: int,
    Omega: float = 1.0,
    omega: float | None = None,
    eta: float | None = None,
    phi: float = 0.0,
) -> ModelParams:
    """
    Validate raw inputs and build a normalized ModelParams.

    The detuning may be given as eta directly or through (omega, Omega); when both
    are given they must agree to 1e-12. With neither, resonance (eta = 1) is used.

    Args:
        G: Coupling constant (>= 0)
        N: Atom count (positive integer)
        Omega: Atomic splitting (> 0), the energy unit
        omega: Field frequency (> 0)
        eta: Detuning ratio omega / Omega (> 0)
        phi: Cavity-field phase in radians (any real value)

    Returns:
        ModelParams with phi reduced to [0, pi) and eta = omega / Omega

    Raises:
        ValidationError: Listing every offending field
    """
    problems: dict[str, str] = {}

    def finite(name: str, value: Any) -> bool:
        if value is None:
            return True
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            problems[name] = f"must be a finite number, got {value!r}"
            return False
        return True

    for name, value in (("G", G), ("Omega", Omega), ("omega", omega), ("eta", eta), ("phi", phi)):
        finite(name, value)

    if "G" not in problems and G < 0:
        problems["G"] = f"coupling must be >= 0, got {G}"
    if "Omega" not in problems and Omega <= 0:
        problems["Omega"] = f"atomic splitting must be > 0, got {Omega}"
    if omega is not None and "omega" not in problems and omega <= 0:
        problems["omega"] = f"field frequency must be > 0, got {omega}"
    if eta is not None and "eta" not in problems and eta <= 0:
        problems["eta"] = f"detuning ratio must be > 0, got {eta}"
    if isinstance(N, bool) or not isinstance(N, int) or N < 1:
        problems["N"] = f"atom count must be a positive integer, got {N!r}"

    if not problems:
        if omega is not None and eta is not None:
            if abs(eta - omega / Omega) > ETA_CONSISTENCY_TOL:
                problems["eta"] = (
                    f"inconsistent with omega/Omega = {omega / Omega!r} (got {eta!r}); "
                    "supply eta or omega, not contradicting values"
                )
        elif omega is None:
            omega = (1.0 if eta is None else eta) * Omega

    if problems:
        raise ValidationError(problems)

    return ModelParams(
        omega=float(omega),
        Omega=float(Omega),
        eta=float(omega) / float(Omega),
        G=float(G),
        N=int(N),
        phi=reduce_phase(float(phi)),
    )
