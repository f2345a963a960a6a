"""
Randomized invariant suites behind `dicke-gauge verify`.

Every suite draws its samples from numpy.random.default_rng(seed), counts passes,
keeps every failure with the full parameter set needed to replay it, and tracks
the worst residual seen.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import sparse

from .ed_oracle import build_hamiltonian, cutoff_converge, parity_operator
from .errors import DickeError, ValidationError
from .model import GaugeKind, ModelParams, validate_params
from .sweep import gauge_deviation
from .variational import (
    EnergyBranch,
    critical_coupling,
    critical_coupling_numeric,
    energy,
    energy_at_photon_number,
    exceptional_photon_number,
    exceptional_point,
    numeric_extremum,
    numeric_minimum,
    offdiag_residuals,
    solve_ground_state,
    superradiant_gamma,
    unstable_branch,
)

logger = logging.getLogger(__name__)

HERMITIAN_GAUGES = (GaugeKind.COULOMB, GaugeKind.DIPOLE, GaugeKind.UNIFIED)

VERIFY_CONFIG = {
    "identity_tolerance": 1e-12,
    "offdiag_tolerance": 1e-12,
    "closed_form_tolerance": 1e-8,   # relative
    "ep_tolerance": 1e-10,
    "rayleigh_ritz_slack": 1e-9,
    "parity_tolerance": 1e-12,
    "ed_samples": 6,
    "deviation_cutoff": 40,
}


@dataclass
class CheckFailure:
    check: str
    residual: float
    tolerance: float
    params: dict[str, Any]


@dataclass
class SuiteReport:
    """Outcome of one verify scope."""

    scope: str
    seed: int
    samples: int
    passed: int = 0
    failures: list[CheckFailure] = field(default_factory=list)
    worst_residual: float = 0.0
    notes: list[dict[str, Any]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def check(self, name: str, residual: float, tolerance: float, **params: Any) -> bool:
        """Record one comparison; NaN residuals count as failures."""
        residual = float(residual)
        if math.isnan(residual) or residual > tolerance:
            self.failures.append(CheckFailure(name, residual, tolerance, params))
            if not math.isnan(residual):
                self.worst_residual = max(self.worst_residual, residual)
            return False
        self.passed += 1
        self.worst_residual = max(self.worst_residual, residual)
        return True

    def note(self, name: str, **values: Any) -> None:
        """Record a measured quantity that is reported but never fails the suite."""
        self.notes.append({"check": name, **values})

    def as_dict(self) -> dict[str, Any]:
        return {
            "scope": self.scope,
            "seed": self.seed,
            "samples": self.samples,
            "passed": self.passed,
            "failed": len(self.failures),
            "worst_residual": self.worst_residual,
            "failures": [
                {"check": f.check, "residual": f.residual, "tolerance": f.tolerance, "params": f.params}
                for f in self.failures
            ],
            "notes": self.notes,
        }


def _params(p: ModelParams) -> dict[str, Any]:
    return p.as_dict()


def _random_params(rng: np.random.Generator, eta: float | None = None, G_max: float = 2.0) -> ModelParams:
    return validate_params(
        G=float(rng.uniform(0.0, G_max)),
        N=int(rng.integers(1, 101)),
        eta=float(rng.uniform(0.2, 2.0)) if eta is None else eta,
        phi=float(rng.uniform(0.0, math.pi)),
    )


def _solution_residual(a, b) -> float:
    if a.phase is not b.phase:
        return math.inf
    return max(
        abs(a.gamma_c - b.gamma_c),
        abs(a.n_p - b.n_p),
        abs(a.energy - b.energy),
        abs(a.delta_na - b.delta_na),
        abs(a.berry_per_atom - b.berry_per_atom),
    )


def suite_gauge_reduction(report: SuiteReport, rng: np.random.Generator) -> None:
    """Unified at phi = 0 reproduces Coulomb, at phi = pi/2 reproduces dipole."""
    tol = VERIFY_CONFIG["identity_tolerance"]
    for _ in range(report.samples):
        p = _random_params(rng)
        gamma = float(rng.uniform(0.0, 3.0 * math.sqrt(p.N)))
        for phi, reference in ((0.0, GaugeKind.COULOMB), (math.pi / 2, GaugeKind.DIPOLE)):
            unified = p.with_phi(phi)
            for branch in EnergyBranch:
                residual = abs(energy(GaugeKind.UNIFIED, unified, gamma, branch) - energy(reference, p, gamma, branch))
                report.check(f"energy unified(phi={phi:.4f}) vs {reference.value}", residual, tol,
                             gamma=gamma, branch=branch.value, **_params(unified))
            residual = _solution_residual(solve_ground_state(GaugeKind.UNIFIED, unified), solve_ground_state(reference, p))
            report.check(f"ground state unified(phi={phi:.4f}) vs {reference.value}", residual, tol, **_params(unified))


def suite_resonance(report: SuiteReport, rng: np.random.Generator) -> None:
    """At eta = 1 the three Hermitian gauges give the same ground state for any phi."""
    tol = VERIFY_CONFIG["identity_tolerance"]
    for _ in range(report.samples):
        p = _random_params(rng, eta=1.0)
        reference = solve_ground_state(GaugeKind.COULOMB, p)
        for gauge in (GaugeKind.DIPOLE, GaugeKind.UNIFIED):
            residual = _solution_residual(solve_ground_state(gauge, p), reference)
            report.check(f"resonance {gauge.value} vs coulomb", residual, tol, gauge=gauge.value, **_params(p))
        report.check("resonance critical coupling", abs(critical_coupling(GaugeKind.UNIFIED, p) - 0.5), tol,
                     **_params(p))


def suite_berry(report: SuiteReport, rng: np.random.Generator) -> None:
    """Berry phase per atom equals 2 pi n_p exactly."""
    for _ in range(report.samples):
        p = _random_params(rng)
        for gauge in HERMITIAN_GAUGES:
            solution = solve_ground_state(gauge, p)
            report.check(f"berry {gauge.value}", abs(solution.berry_per_atom - 2.0 * math.pi * solution.n_p), 0.0,
                         gauge=gauge.value, **_params(p))


def suite_offdiag(report: SuiteReport, rng: np.random.Generator) -> None:
    """The solved rotation removes S_+ and S_- and leaves the closed-form S_z coefficient."""
    tol = VERIFY_CONFIG["offdiag_tolerance"]
    for _ in range(report.samples):
        p = _random_params(rng)
        for gauge in GaugeKind:
            if gauge.is_hermitian:
                x = float(rng.uniform(0.0, 4.0))
            else:
                x = float(rng.uniform(0.0, 0.95)) * min(exceptional_photon_number(p), 4.0)
            gamma = math.sqrt(p.N * x)
            for sign in (1, -1):
                r = offdiag_residuals(gauge, p, gamma, sign)
                scale = max(1.0, abs(r.diagonal_expected))
                replay = {"gauge": gauge.value, "gamma": gamma, "sign": sign, **_params(p)}
                report.check("offdiag |B|", r.abs_B, tol, **replay)
                report.check("offdiag |C|", r.abs_C, tol, **replay)
                report.check("offdiag diagonal", abs(r.diagonal - r.diagonal_expected) / scale, tol, **replay)


def suite_ep(report: SuiteReport, rng: np.random.Generator) -> None:
    """Branch merge at G_ep, real branches below it, a conjugate pair above it."""
    tol = VERIFY_CONFIG["ep_tolerance"]
    gauge = GaugeKind.NON_HERMITIAN_UNIFIED
    anchor = validate_params(G=0.0, N=1, eta=1.0, phi=math.pi / 3)
    for x, expected in ((1.0, 1.0 / (2.0 * math.sqrt(2.0))), (2.0, 0.25)):
        g_ep = exceptional_point(anchor, math.sqrt(x))
        report.check(f"G_ep at x={x}", abs(g_ep - expected), tol, x=x, **_params(anchor))
    merge = exceptional_photon_number(anchor.with_coupling(0.5))
    report.check("x_ep at G=0.5", abs(merge - 0.5), tol, **_params(anchor.with_coupling(0.5)))

    for _ in range(report.samples):
        p = _random_params(rng)
        x = float(rng.uniform(0.05, 3.0))
        g_ep = exceptional_point(p, math.sqrt(p.N * x))
        replay = {"x": x, "G_ep": g_ep, **_params(p)}

        at = p.with_coupling(g_ep)
        gap = abs(energy_at_photon_number(gauge, at, x, EnergyBranch.PLUS)
                  - energy_at_photon_number(gauge, at, x, EnergyBranch.MINUS))
        report.check("branches merge at G_ep", gap, 1e-6, **replay)

        below = p.with_coupling(g_ep * float(rng.uniform(0.0, 0.999)))
        for branch in EnergyBranch:
            value = energy_at_photon_number(gauge, below, x, branch)
            report.check(f"Im {branch.value} below G_ep", abs(value.imag), 0.0, **{**replay, "G": below.G})

        above = p.with_coupling(g_ep * float(rng.uniform(1.001, 3.0)))
        plus = energy_at_photon_number(gauge, above, x, EnergyBranch.PLUS)
        minus = energy_at_photon_number(gauge, above, x, EnergyBranch.MINUS)
        report.check("conjugate pair above G_ep", abs(minus - plus.conjugate()), tol, **{**replay, "G": above.G})
        report.check("Im nonzero above G_ep", 0.0 if plus.imag > 0 and minus.imag < 0 else math.inf, 0.0,
                     **{**replay, "G": above.G})


def suite_critical(report: SuiteReport, rng: np.random.Generator) -> None:
    """Closed-form G_c agrees with the sign change of the zero-photon curvature."""
    tol = VERIFY_CONFIG["closed_form_tolerance"]
    for _ in range(report.samples):
        p = _random_params(rng)
        for gauge in GaugeKind:
            closed = critical_coupling(gauge, p)
            numeric = critical_coupling_numeric(gauge, p)
            report.check(f"G_c {gauge.value}", abs(closed - numeric) / closed, tol, gauge=gauge.value, **_params(p))


def suite_closed_form(report: SuiteReport, rng: np.random.Generator) -> None:
    """Closed-form extrema agree with bracketed roots and with direct minimization."""
    tol = VERIFY_CONFIG["closed_form_tolerance"]
    for _ in range(report.samples):
        gauge = HERMITIAN_GAUGES[int(rng.integers(0, len(HERMITIAN_GAUGES)))]
        p = _random_params(rng)
        p = p.with_coupling(critical_coupling(gauge, p) * float(rng.uniform(1.05, 4.0)))
        replay = {"gauge": gauge.value, **_params(p)}
        closed = superradiant_gamma(gauge, p)
        numeric = numeric_extremum(gauge, p)
        if closed is None or numeric is None:
            report.check("SP extremum exists", math.inf, 0.0, **replay)
            continue
        report.check("gamma_c closed vs root", abs(closed - numeric) / closed, tol, **replay)
        _, minimum = numeric_minimum(gauge, p)
        expected = solve_ground_state(gauge, p).energy.real
        report.check("energy closed vs minimum", abs(minimum - expected), tol, **replay)

        nh = p.with_coupling(critical_coupling(GaugeKind.NON_HERMITIAN_UNIFIED, p) * float(rng.uniform(0.05, 0.95)))
        unstable = unstable_branch(nh)
        numeric = numeric_extremum(GaugeKind.NON_HERMITIAN_UNIFIED, nh, EnergyBranch.PLUS)
        replay = {"gauge": GaugeKind.NON_HERMITIAN_UNIFIED.value, **_params(nh)}
        if unstable is None or numeric is None:
            report.check("unstable extremum exists", math.inf, 0.0, **replay)
            continue
        report.check("unstable gamma closed vs root", abs(unstable.gamma_c - numeric) / unstable.gamma_c, tol, **replay)
        report.check("unstable curvature <= 0", max(unstable.stability, 0.0), 0.0, **replay)


def suite_np_plateau(report: SuiteReport, rng: np.random.Generator) -> None:
    """Below G_c the ground state is exactly the normal phase."""
    for _ in range(report.samples):
        gauge = list(GaugeKind)[int(rng.integers(0, len(GaugeKind)))]
        p = _random_params(rng)
        p = p.with_coupling(critical_coupling(gauge, p) * float(rng.uniform(0.0, 0.999)))
        s = solve_ground_state(gauge, p)
        exact = s.n_p == 0 and s.gamma_c == 0 and s.energy == -p.Omega and s.delta_na == -1 and s.berry_per_atom == 0
        report.check("normal phase values", 0.0 if exact else math.inf, 0.0, gauge=gauge.value, **_params(p))


def suite_ed(report: SuiteReport, rng: np.random.Generator) -> None:
    """Small-N exact diagonalization: Rayleigh-Ritz bound and parity symmetry."""
    slack = VERIFY_CONFIG["rayleigh_ritz_slack"]
    for _ in range(min(report.samples, VERIFY_CONFIG["ed_samples"])):
        gauge = HERMITIAN_GAUGES[int(rng.integers(0, len(HERMITIAN_GAUGES)))]
        p = validate_params(
            G=float(rng.uniform(0.0, 1.2)), N=int(rng.integers(1, 4)),
            eta=float(rng.uniform(0.5, 1.5)), phi=float(rng.uniform(0.0, math.pi)),
        )
        replay = {"gauge": gauge.value, **_params(p)}
        variational = solve_ground_state(gauge, p).energy.real
        try:
            result = cutoff_converge(gauge, p, 1e-8)
        except DickeError as e:
            logger.warning(f"ED sample skipped ({e})")
            report.check("ED solve", math.inf, 0.0, error=str(e), **replay)
            continue
        report.check("Rayleigh-Ritz bound", max(result.ground_energy_per_atom - variational, 0.0), slack, **replay)

        H = build_hamiltonian(gauge, p, 20)
        parity = parity_operator(p.N, 20)
        commutator = H @ parity - parity @ H
        residual = float(abs(sparse.csr_matrix(commutator)).max()) if commutator.nnz else 0.0
        report.check("parity commutes", residual, VERIFY_CONFIG["parity_tolerance"], **replay)

    # Full Hamiltonians differ between gauges even at eta = 1; the spread is measured, not gated
    resonant = p.with_eta(1.0)
    n_max = VERIFY_CONFIG["deviation_cutoff"]
    deviation = gauge_deviation(resonant, n_max)
    report.note("ED gauge spread at resonance", spread=deviation["spread"], agree=deviation["agree"],
                energies=deviation["energies"], n_max=n_max, **_params(resonant))


SUITES: dict[str, Callable[[SuiteReport, np.random.Generator], None]] = {
    "gauge-reduction": suite_gauge_reduction,
    "resonance": suite_resonance,
    "berry": suite_berry,
    "offdiag": suite_offdiag,
    "ep": suite_ep,
    "critical": suite_critical,
    "closed-form": suite_closed_form,
    "np-plateau": suite_np_plateau,
    "ed": suite_ed,
}

ALL_SCOPES = ("all", *SUITES)


def run_verify(scope: str = "all", samples: int = 200, seed: int = 0) -> list[SuiteReport]:
    """
    Run one verify scope, or every suite for "all".

    Args:
        scope: Suite name or "all"
        samples: Random samples per suite (>= 1)
        seed: Seed for numpy.random.default_rng; each suite restarts from it

    Returns:
        One SuiteReport per suite run

    Raises:
        ValidationError: Unknown scope or non-positive sample count
    """
    if scope not in ALL_SCOPES:
        raise ValidationError({"scope": f"unknown scope '{scope}'. Valid scopes: {', '.join(ALL_SCOPES)}"})
    if samples < 1:
        raise ValidationError({"samples": f"must be >= 1, got {samples}"})

    names = list(SUITES) if scope == "all" else [scope]
    reports = []
    for name in names:
        report = SuiteReport(scope=name, seed=seed, samples=samples)
        SUITES[name](report, np.random.default_rng(seed))
        status = "passed" if report.ok else f"FAILED ({len(report.failures)} failures)"
        logger.info(f"verify {name}: {report.passed} checks {status}, worst residual {report.worst_residual:.3e}")
        reports.append(report)
    return reports
