"""
Spin-coherent-state variational treatment of the three-level Dicke model.

The cavity mode is replaced by a coherent state of amplitude gamma and the
collective spin by a rotated extremal state |s, +-s>, which gives per-atom
energy landscapes

    eps_pm(gamma) = omega gamma^2 / N +- Omega sqrt(1 + s 8 G^2 gamma^2 Phi_g / N)

with s = +1 for the Hermitian gauges and s = -1 for the non-Hermitian one. The
gauge enters only through Phi_g (see model.effective_phase_factor).
"""

import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError
from .model import GaugeKind, ModelParams, effective_phase_factor

logger = logging.getLogger(__name__)

VARIATIONAL_CONFIG = {
    "stability_tolerance": 1e-12,   # curvature within this of zero counts as marginal
    "minimizer_xatol": 1e-12,       # width stop of the bounded minimizer
    "bracket_scale": 10.0,          # gamma_max = scale * sqrt(N) * max(1, G)
    "max_bracket_doublings": 60,
}

_ROOT_RTOL = 4 * np.finfo(float).eps


class EnergyBranch(str, Enum):
    """Spin-down (|-u>) or spin-up (|+u>) energy landscape."""

    MINUS = "minus"
    PLUS = "plus"

    @property
    def sign(self) -> int:
        return -1 if self is EnergyBranch.MINUS else 1


class Phase(str, Enum):
    NP = "NP"
    SP = "SP"
    UNSTABLE_SP = "UnstableSP"


@dataclass(frozen=True)
class VariationalSolution:
    """
    Classified extremum of a per-atom energy landscape.

    Attributes:
        gauge: Gauge the solution was computed in
        phase: NP, SP or UnstableSP
        gamma_c: Coherent field amplitude at the extremum
        n_p: Photons per atom, gamma_c^2 / N
        energy: Per-atom energy in units of Omega (complex container, zero imaginary part)
        delta_na: Per-atom population imbalance <S_z>/N
        berry_per_atom: Geometric phase per atom, 2 pi n_p
        stability: Curvature d^2 eps / d gamma^2 at the extremum
        critical_coupling: G_c of the gauge at these parameters
        atom_energy: eps - omega n_p, reported on UnstableSP solutions
        companion: Unstable spin-up extremum coexisting with a non-Hermitian ground state
    """

    gauge: GaugeKind
    phase: Phase
    gamma_c: float
    n_p: float
    energy: complex
    delta_na: float
    berry_per_atom: float
    stability: float
    critical_coupling: float
    atom_energy: float | None = None
    companion: "VariationalSolution | None" = field(default=None, compare=False)


@dataclass(frozen=True)
class OffDiagResidual:
    """
    Off-diagonal coefficients left after rotating the effective spin Hamiltonian.

    Attributes:
        abs_B: |B|, coefficient of S_+
        abs_C: |C|, coefficient of S_-
        theta: Rotation angle (hyperbolic for the non-Hermitian gauge)
        chi: Rotation phase
        diagonal: Coefficient A of S_z evaluated at (theta, chi)
        diagonal_expected: Closed form Omega sqrt(1 +- 8 G^2 gamma^2 Phi_g / N)
    """

    abs_B: float
    abs_C: float
    theta: float
    chi: float
    diagonal: float
    diagonal_expected: float


def _landscape_sign(gauge: GaugeKind) -> int:
    return 1 if gauge.is_hermitian else -1


def _coupling_rate(gauge: GaugeKind, p: ModelParams) -> float:
    """a = 8 G^2 Phi_g / N, the coefficient of gamma^2 under the square root."""
    return 8.0 * p.G**2 * effective_phase_factor(gauge, p) / p.N


def _check_gamma(gamma: float) -> None:
    if not math.isfinite(gamma):
        raise DomainError(f"gamma must be finite, got {gamma!r}")
    if gamma < 0:
        raise DomainError(f"gamma must be >= 0, got {gamma}")


def energy_at_photon_number(
    gauge: GaugeKind, p: ModelParams, n_p: float, branch: EnergyBranch
) -> complex:
    """Per-atom energy as a function of the photon number per atom n_p = gamma^2 / N."""
    radicand = 1.0 + _landscape_sign(gauge) * 8.0 * p.G**2 * n_p * effective_phase_factor(gauge, p)
    if radicand >= 0:
        root = complex(math.sqrt(radicand), 0.0)
    else:
        # principal branch: +i sqrt(|r|), so the minus branch carries the negative imaginary part
        root = cmath.sqrt(complex(radicand, 0.0))
    value = p.omega * n_p + branch.sign * p.Omega * root
    return complex(value.real, value.imag)


def energy(gauge: GaugeKind, p: ModelParams, gamma: float, branch: EnergyBranch) -> complex:
    """
    Semiclassical per-atom energy eps_pm(gamma).

    Args:
        gauge: Gauge of the interaction
        p: Model parameters
        gamma: Coherent field amplitude (>= 0)
        branch: MINUS for the spin-down SCS, PLUS for spin-up

    Returns:
        Complex energy; the imaginary part is exactly zero except for the
        non-Hermitian gauge beyond its exceptional point

    Raises:
        DomainError: If gamma is negative or non-finite
    """
    _check_gamma(gamma)
    return energy_at_photon_number(gauge, p, gamma**2 / p.N, branch)


def _radicand(gauge: GaugeKind, p: ModelParams, gamma: float) -> float:
    return 1.0 + _landscape_sign(gauge) * _coupling_rate(gauge, p) * gamma**2


def _require_real_landscape(gauge: GaugeKind, p: ModelParams, gamma: float) -> float:
    radicand = _radicand(gauge, p, gamma)
    if radicand <= 0:
        raise DomainError(
            f"gamma={gamma} is at or beyond the exceptional point for G={p.G}; "
            "the energy landscape is complex there and has no real derivative"
        )
    return radicand


def first_derivative(gauge: GaugeKind, p: ModelParams, gamma: float, branch: EnergyBranch) -> float:
    """
    Extremum equation d eps / d gamma.

    Raises:
        DomainError: If gamma < 0, or for the non-Hermitian gauge at/beyond the EP
    """
    _check_gamma(gamma)
    radicand = _require_real_landscape(gauge, p, gamma)
    a = _coupling_rate(gauge, p)
    s = _landscape_sign(gauge)
    return 2.0 * p.omega * gamma / p.N + branch.sign * s * p.Omega * a * gamma / math.sqrt(radicand)


def second_derivative(gauge: GaugeKind, p: ModelParams, gamma: float, branch: EnergyBranch) -> float:
    """
    Curvature d^2 eps / d gamma^2, evaluated analytically.

    At gamma = 0 on the minus branch this is (2/N)(omega - 4 G^2 Omega Phi_g).

    Raises:
        DomainError: If gamma < 0, or for the non-Hermitian gauge at/beyond the EP
    """
    _check_gamma(gamma)
    radicand = _require_real_landscape(gauge, p, gamma)
    a = _coupling_rate(gauge, p)
    s = _landscape_sign(gauge)
    return 2.0 * p.omega / p.N + branch.sign * s * p.Omega * a / radicand**1.5


def critical_coupling(gauge: GaugeKind, p: ModelParams) -> float:
    """
    Coupling G_c = (1/2) sqrt(eta / Phi_g) where the gamma = 0 curvature changes sign.

    For the Hermitian gauges this is the NP -> SP boundary (sqrt(eta)/2 Coulomb,
    sqrt(1/eta)/2 dipole). For the non-Hermitian gauge it bounds the region
    where the zero-photon spin-up state is stable.
    """
    return 0.5 * math.sqrt(p.eta / effective_phase_factor(gauge, p))


def superradiant_photon_number(gauge: GaugeKind, p: ModelParams) -> float | None:
    """
    Closed-form photon number per atom of the nonzero extremum, or None when it does not exist.

    Hermitian gauges: ((4 G^2 Phi_g / eta)^2 - 1) / (8 G^2 Phi_g) on the spin-down
    branch for G > G_c. Non-Hermitian gauge: (1 - (4 G^2 Phi_g / eta)^2) / (8 G^2 Phi_g)
    on the spin-up branch for 0 < G < G_c. Independent of N.
    """
    G, eta = p.G, p.eta
    if G == 0:
        return None
    phi_g = effective_phase_factor(gauge, p)
    ratio = 4.0 * G**2 * phi_g / eta

    if gauge is GaugeKind.NON_HERMITIAN_UNIFIED:
        if G >= critical_coupling(gauge, p):
            return None
        n_p = (1.0 - ratio**2) / (8.0 * G**2 * phi_g)
    else:
        if G <= critical_coupling(gauge, p):
            return None
        n_p = (ratio**2 - 1.0) / (8.0 * G**2 * phi_g)
    return n_p if n_p > 0 else None


def superradiant_gamma(gauge: GaugeKind, p: ModelParams) -> float | None:
    """
    Closed-form nonzero extremum gamma_c = sqrt(N n_p), or None when it does not exist.

    Hermitian gauges: the spin-down extremum for G > G_c. Non-Hermitian gauge:
    the spin-up extremum for 0 < G < G_c.
    """
    n_p = superradiant_photon_number(gauge, p)
    return None if n_p is None else math.sqrt(p.N * n_p)


def _normal_solution(gauge: GaugeKind, p: ModelParams, g_c: float) -> VariationalSolution:
    return VariationalSolution(
        gauge=gauge,
        phase=Phase.NP,
        gamma_c=0.0,
        n_p=0.0,
        energy=complex(-p.Omega, 0.0),
        delta_na=-1.0,
        berry_per_atom=0.0,
        stability=second_derivative(gauge, p, 0.0, EnergyBranch.MINUS),
        critical_coupling=g_c,
    )


def unstable_branch(p: ModelParams) -> VariationalSolution | None:
    """
    Nonzero spin-up extremum of the non-Hermitian landscape (the unstable superradiant state).

    Args:
        p: Model parameters (interpreted in the non-Hermitian unified gauge)

    Returns:
        UnstableSP solution with atom_energy = eps_+ - omega n_p, or None when
        G = 0 or G >= G_c
    """
    gauge = GaugeKind.NON_HERMITIAN_UNIFIED
    n_p = superradiant_photon_number(gauge, p)
    if n_p is None:
        return None
    gamma_c = math.sqrt(p.N * n_p)
    radicand = 1.0 - 8.0 * p.G**2 * n_p * effective_phase_factor(gauge, p)
    eps = energy_at_photon_number(gauge, p, n_p, EnergyBranch.PLUS)
    return VariationalSolution(
        gauge=gauge,
        phase=Phase.UNSTABLE_SP,
        gamma_c=gamma_c,
        n_p=n_p,
        energy=eps,
        # biorthogonal <S_z>/N of the spin-up state, cosh(theta)
        delta_na=1.0 / math.sqrt(radicand),
        berry_per_atom=2.0 * math.pi * n_p,
        stability=second_derivative(gauge, p, gamma_c, EnergyBranch.PLUS),
        critical_coupling=critical_coupling(gauge, p),
        atom_energy=eps.real - p.omega * n_p,
    )


def solve_ground_state(gauge: GaugeKind, p: ModelParams) -> VariationalSolution:
    """
    Variational ground state of a gauge.

    Hermitian gauges give NP for G <= G_c and SP above. The non-Hermitian gauge
    always gives NP; its unstable spin-up extremum is attached as `companion`.

    Args:
        gauge: Gauge of the interaction
        p: Model parameters

    Returns:
        VariationalSolution
    """
    g_c = critical_coupling(gauge, p)

    if not gauge.is_hermitian:
        ground = _normal_solution(gauge, p, g_c)
        return replace(ground, companion=unstable_branch(p))

    n_p = superradiant_photon_number(gauge, p)
    if n_p is None:
        return _normal_solution(gauge, p, g_c)

    gamma_c = math.sqrt(p.N * n_p)
    spread = 1.0 + 8.0 * p.G**2 * n_p * effective_phase_factor(gauge, p)
    stability = second_derivative(gauge, p, gamma_c, EnergyBranch.MINUS)
    if stability < -VARIATIONAL_CONFIG["stability_tolerance"]:
        logger.warning(f"{gauge.value}: SP extremum at G={p.G} has negative curvature {stability}")
    return VariationalSolution(
        gauge=gauge,
        phase=Phase.SP,
        gamma_c=gamma_c,
        n_p=n_p,
        energy=energy_at_photon_number(gauge, p, n_p, EnergyBranch.MINUS),
        delta_na=-1.0 / math.sqrt(spread),
        berry_per_atom=2.0 * math.pi * n_p,
        stability=stability,
        critical_coupling=g_c,
    )


def upper_branch_stable(gauge: GaugeKind, p: ModelParams) -> bool:
    """Whether the zero-photon spin-up state is a stable extremum."""
    if gauge.is_hermitian:
        return True
    curvature = second_derivative(gauge, p, 0.0, EnergyBranch.PLUS)
    return curvature >= -VARIATIONAL_CONFIG["stability_tolerance"]


def phase_label(gauge: GaugeKind, p: ModelParams) -> str:
    """
    Phase-diagram label of a parameter point.

    Hermitian gauges: "NP" or "SP". Non-Hermitian gauge: "NP" where only the
    spin-down normal state is stable, "NP_co" where it coexists with the stable
    spin-up normal state and the unstable superradiant state.
    """
    if gauge.is_hermitian:
        return solve_ground_state(gauge, p).phase.value
    return "NP_co" if upper_branch_stable(gauge, p) else "NP"


def _field_phase(gauge: GaugeKind, p: ModelParams) -> tuple[float, float]:
    """(cos, sin) of the field phase a Hermitian gauge's effective Hamiltonian is built at."""
    if gauge is GaugeKind.COULOMB:
        return 1.0, 0.0
    if gauge is GaugeKind.DIPOLE:
        return 0.0, 1.0
    return math.cos(p.phi), math.sin(p.phi)


def offdiag_residuals(
    gauge: GaugeKind, p: ModelParams, gamma: float, sign: int = 1
) -> OffDiagResidual:
    """
    Solve the rotation (theta, chi) that diagonalizes the effective spin Hamiltonian
    and evaluate the remaining S_+ / S_- coefficients B and C.

    Hermitian gauges use the unitary rotation with cos chi = cos phi / sqrt(Phi)
    and cos theta = sign / sqrt(1 + 8 G^2 gamma^2 Phi / N). The non-Hermitian
    gauge uses the hyperbolic similarity transformation with
    cos chi = eta sin phi / sqrt(Phi) and cosh theta = 1 / sqrt(1 - 8 G^2 gamma^2 Phi / N).

    Args:
        gauge: Gauge of the interaction
        p: Model parameters
        gamma: Coherent field amplitude (>= 0)
        sign: +1 selects the rotation that makes eps_- the lower branch, -1 the other root

    Returns:
        OffDiagResidual

    Raises:
        DomainError: If gamma < 0, sign is not +-1, or the non-Hermitian
            transformation does not exist (at/beyond the EP)
    """
    _check_gamma(gamma)
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")

    Omega, omega, eta = p.Omega, p.omega, p.eta
    k = p.G * math.sqrt(2.0 / p.N) * gamma

    if gauge.is_hermitian:
        cos_f, sin_f = _field_phase(gauge, p)
        phi_f = cos_f**2 + eta**2 * sin_f**2
        root_phi = math.sqrt(phi_f)
        chi = math.atan2(-eta * sin_f, cos_f)
        theta = math.atan2(-sign * 2.0 * k * root_phi, sign)

        c2 = math.cos(theta / 2.0) ** 2
        s2 = math.sin(theta / 2.0) ** 2
        e_minus = cmath.exp(-2j * chi)
        e_plus = cmath.exp(2j * chi)
        B = (
            k * (Omega * cos_f * (c2 - e_minus * s2) + 1j * omega * sin_f * (c2 + e_minus * s2))
            + 0.5 * Omega * math.sin(theta) * cmath.exp(-1j * chi)
        )
        C = (
            k * (Omega * cos_f * (c2 - e_plus * s2) - 1j * omega * sin_f * (e_plus * s2 + c2))
            + 0.5 * Omega * math.sin(theta) * cmath.exp(1j * chi)
        )
        A = Omega * math.cos(theta) + 2.0 * k * math.sin(theta) * (
            omega * sin_f * math.sin(chi) - Omega * cos_f * math.cos(chi)
        )
        expected = sign * Omega * math.sqrt(1.0 + 4.0 * k**2 * phi_f)
        return OffDiagResidual(abs(B), abs(C), theta, chi, A, expected)

    cos_f, sin_f = math.cos(p.phi), math.sin(p.phi)
    phi_f = cos_f**2 + eta**2 * sin_f**2
    root_phi = math.sqrt(phi_f)
    tanh_theta = 2.0 * k * root_phi
    if tanh_theta >= 1.0:
        raise DomainError(
            f"similarity transformation does not exist: 8 G^2 gamma^2 Phi / N = {tanh_theta**2} >= 1 "
            f"(G={p.G}, gamma={gamma}); the point is at or beyond the exceptional point"
        )
    theta = math.atanh(tanh_theta)
    chi = math.atan2(-cos_f, eta * sin_f)
    if sign == -1:
        theta, chi = -theta, chi + math.pi

    ch2 = math.cosh(theta / 2.0) ** 2
    sh2 = math.sinh(theta / 2.0) ** 2
    e_minus = cmath.exp(-2j * chi)
    e_plus = cmath.exp(2j * chi)
    B = (
        k * (1j * Omega * cos_f * (ch2 - e_plus * sh2) - omega * sin_f * (ch2 + e_plus * sh2))
        + 0.5 * Omega * cmath.exp(1j * chi) * math.sinh(theta)
    )
    C = (
        k * (1j * Omega * cos_f * (ch2 - e_minus * sh2) + omega * sin_f * (ch2 + e_minus * sh2))
        - 0.5 * Omega * cmath.exp(-1j * chi) * math.sinh(theta)
    )
    A = Omega * math.cosh(theta) + 2.0 * k * (
        Omega * cos_f * math.sin(chi) - omega * sin_f * math.cos(chi)
    ) * math.sinh(theta)
    expected = Omega * math.sqrt(1.0 - 4.0 * k**2 * phi_f)
    return OffDiagResidual(abs(B), abs(C), theta, chi, A, expected)


def exceptional_point(p: ModelParams, gamma: float) -> float:
    """
    Coupling G_ep = sqrt(N) / (2 sqrt(2) gamma sqrt(Phi)) where the two
    non-Hermitian branches coalesce and turn into a complex-conjugate pair.

    Raises:
        DomainError: If gamma <= 0 (there is no EP at zero field)
    """
    _check_gamma(gamma)
    if gamma == 0:
        raise DomainError("gamma must be > 0: there is no exceptional point at zero field")
    phi_g = effective_phase_factor(GaugeKind.NON_HERMITIAN_UNIFIED, p)
    return math.sqrt(p.N) / (2.0 * math.sqrt(2.0) * gamma * math.sqrt(phi_g))


def exceptional_photon_number(p: ModelParams) -> float:
    """Photon number per atom 1 / (8 G^2 Phi) at which the branches coalesce for fixed G."""
    if p.G == 0:
        return math.inf
    phi_g = effective_phase_factor(GaugeKind.NON_HERMITIAN_UNIFIED, p)
    return 1.0 / (8.0 * p.G**2 * phi_g)


def _gamma_max(p: ModelParams) -> float:
    return VARIATIONAL_CONFIG["bracket_scale"] * math.sqrt(p.N) * max(1.0, p.G)


def numeric_extremum(
    gauge: GaugeKind, p: ModelParams, branch: EnergyBranch | None = None
) -> float | None:
    """
    Nonzero extremum found as a bracketed root of the extremum equation.

    d eps / d gamma = 2 gamma h(gamma); the root of h is located with Brent's
    method. Used to cross-check superradiant_gamma.

    Args:
        gauge: Gauge of the interaction
        p: Model parameters
        branch: Landscape to search; defaults to MINUS (Hermitian) / PLUS (non-Hermitian)

    Returns:
        gamma of the nonzero extremum, or None when h does not change sign
    """
    if branch is None:
        branch = EnergyBranch.MINUS if gauge.is_hermitian else EnergyBranch.PLUS
    a = _coupling_rate(gauge, p)
    s = _landscape_sign(gauge)
    if a == 0:
        return None

    def bracket_factor(gamma: float) -> float:
        return p.omega / p.N + branch.sign * s * p.Omega * a / (2.0 * math.sqrt(1.0 + s * a * gamma**2))

    low = bracket_factor(0.0)
    if s > 0:
        high_gamma = _gamma_max(p)
        for _ in range(VARIATIONAL_CONFIG["max_bracket_doublings"]):
            if np.sign(bracket_factor(high_gamma)) != np.sign(low):
                break
            high_gamma *= 2.0
        else:
            return None
    else:
        high_gamma = (1.0 / math.sqrt(a)) * (1.0 - 1e-12)

    if low == 0 or np.sign(bracket_factor(high_gamma)) == np.sign(low):
        return None
    return brentq(bracket_factor, 0.0, high_gamma, xtol=1e-300, rtol=_ROOT_RTOL, maxiter=500)


def numeric_minimum(gauge: GaugeKind, p: ModelParams) -> tuple[float, float]:
    """
    Minimize the spin-down landscape over gamma in [0, gamma_max] with a bounded Brent search.

    Returns:
        Tuple of (gamma at the minimum, minimum per-atom energy)

    Raises:
        DomainError: For the non-Hermitian gauge, whose landscape turns complex
    """
    if not gauge.is_hermitian:
        raise DomainError("numeric_minimum needs a real landscape; use a Hermitian gauge")

    result = minimize_scalar(
        lambda gamma: energy(gauge, p, abs(gamma), EnergyBranch.MINUS).real,
        bounds=(0.0, _gamma_max(p)),
        method="bounded",
        options={"xatol": VARIATIONAL_CONFIG["minimizer_xatol"], "maxiter": 2000},
    )
    gamma = float(abs(result.x))
    return gamma, energy(gauge, p, gamma, EnergyBranch.MINUS).real


def critical_coupling_numeric(gauge: GaugeKind, p: ModelParams) -> float:
    """
    Locate the sign change of the gamma = 0 curvature over G by bracketed root finding.

    The minus branch is used for Hermitian gauges, the plus branch for the
    non-Hermitian gauge. Used to cross-check critical_coupling.
    """
    branch = EnergyBranch.MINUS if gauge.is_hermitian else EnergyBranch.PLUS

    def curvature(G: float) -> float:
        return second_derivative(gauge, replace(p, G=G), 0.0, branch)

    high = 1.0
    while curvature(high) >= 0:
        high *= 2.0
    return brentq(curvature, 0.0, high, xtol=1e-300, rtol=_ROOT_RTOL, maxiter=500)
