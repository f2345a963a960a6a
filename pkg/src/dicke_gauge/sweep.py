"""
Grid scans behind the figure data: observable-vs-G curves, G-eta phase diagrams,
exceptional-point scans and variational-vs-ED tables.

Records are produced in row-major axis order (first axis outermost) and carry a
cell index, so parallel and serial runs give the same stream.
"""

import csv
import json
import logging
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from io import StringIO
from itertools import product, repeat
from typing import Any

import numpy as np

from .config import SWEEP_CONFIG, limit_setting
from .ed_oracle import EDLimits, cutoff_converge, solve_point
from .errors import BudgetError, EigensolverError, ResourceError, ValidationError
from .model import GaugeKind, ModelParams, validate_params
from .variational import (
    EnergyBranch,
    critical_coupling,
    energy_at_photon_number,
    exceptional_photon_number,
    exceptional_point,
    phase_label,
    solve_ground_state,
    unstable_branch,
)

logger = logging.getLogger(__name__)

# Axis names: coupling, detuning ratio, field phase, photons per atom (gamma^2 / N)
AXIS_NAMES = ("G", "eta", "phi", "x")

SWEEP_KINDS = ("coupling", "diagram", "ep", "ed")

DEFAULT_FIXED = {"Omega": 1.0, "eta": 1.0, "phi": 0.0, "G": 0.5, "N": 10}


@dataclass(frozen=True)
class Axis:
    """Linear axis of `count` points from start to stop inclusive."""

    name: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        label = f"axis {self.name}"
        if self.name not in AXIS_NAMES:
            raise ValidationError({label: f"unknown axis. Valid axes: {', '.join(AXIS_NAMES)}"})
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValidationError({label: "start and stop must be finite"})
        if isinstance(self.count, bool) or not isinstance(self.count, int) or self.count < 2:
            raise ValidationError({label: f"count must be an integer >= 2, got {self.count!r}"})
        if not self.start < self.stop:
            raise ValidationError({label: f"start must be below stop, got [{self.start}, {self.stop}]"})

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class SweepSpec:
    """
    Description of one scan.

    Attributes:
        kind: coupling, diagram, ep or ed
        gauge: Gauge of every cell
        axes: Axes, outermost first
        fixed: Parameters held constant (Omega, eta, phi, G, N, x)
        observables: Observable names to keep; empty keeps all
        atoms: Atom counts of an ed table
        tol: ED cutoff tolerance per atom
        sink: Output name of the scan (panel file stem)
    """

    kind: str
    gauge: GaugeKind
    axes: tuple[Axis, ...] = ()
    fixed: dict[str, float] = field(default_factory=dict)
    observables: tuple[str, ...] = ()
    atoms: tuple[int, ...] = ()
    tol: float = 1e-8
    sink: str | None = None

    @property
    def cells(self) -> int:
        if self.kind == "ed":
            return len(self.atoms)
        return math.prod(axis.count for axis in self.axes)

    def coordinates(self) -> list[dict[str, float]]:
        """Cell coordinates in row-major order."""
        names = [axis.name for axis in self.axes]
        grids = [axis.values() for axis in self.axes]
        return [dict(zip(names, (float(v) for v in values))) for values in product(*grids)]


@dataclass(frozen=True)
class SweepRecord:
    """One grid cell: its inputs and every emitted observable."""

    index: int
    inputs: dict[str, Any]
    observables: dict[str, Any]

    def as_row(self) -> dict[str, Any]:
        return {**self.inputs, **self.observables}


def check_budget(spec: SweepSpec, max_cells: int | None = None, max_ed_solves: int | None = None) -> int:
    """
    Refuse a plan before any computation when it exceeds its budget.

    Raises:
        BudgetError: If the number of cells (or ED solves) exceeds the budget
    """
    cells = spec.cells
    if spec.kind == "ed":
        budget = limit_setting("max_ed_solves") if max_ed_solves is None else max_ed_solves
        if cells > budget:
            raise BudgetError(cells, budget, what="ED solves")
    else:
        budget = limit_setting("max_cells") if max_cells is None else max_cells
        if cells > budget:
            raise BudgetError(cells, budget)
    return cells


def _cell_params(spec: SweepSpec, coords: dict[str, float]) -> ModelParams:
    merged = {**DEFAULT_FIXED, **spec.fixed, **coords}
    return validate_params(
        G=merged["G"], N=int(merged["N"]), Omega=merged["Omega"], eta=merged["eta"], phi=merged["phi"]
    )


def _coupling_cell(spec: SweepSpec, coords: dict[str, float]) -> dict[str, Any]:
    p = _cell_params(spec, coords)
    solution = solve_ground_state(spec.gauge, p)
    observables = {
        "phase": solution.phase.value,
        "gamma_c": solution.gamma_c,
        "n_p": solution.n_p,
        "energy": solution.energy.real,
        "delta_na": solution.delta_na,
        "berry": solution.berry_per_atom,
        "G_c": solution.critical_coupling,
        "stability": solution.stability,
    }
    if not spec.gauge.is_hermitian:
        unstable = solution.companion
        observables.update(
            label=phase_label(spec.gauge, p),
            energy_upper=energy_at_photon_number(spec.gauge, p, 0.0, EnergyBranch.PLUS).real,
            n_p_unstable=unstable.n_p if unstable else math.nan,
            energy_unstable=unstable.energy.real if unstable else math.nan,
            atom_energy=unstable.atom_energy if unstable else math.nan,
            stability_unstable=unstable.stability if unstable else math.nan,
        )
    return observables


def _diagram_cell(spec: SweepSpec, coords: dict[str, float]) -> dict[str, Any]:
    p = _cell_params(spec, coords)
    solution = solve_ground_state(spec.gauge, p)
    observables = {
        "label": phase_label(spec.gauge, p),
        "n_p": solution.n_p,
        "G_c": solution.critical_coupling,
    }
    if not spec.gauge.is_hermitian:
        unstable = unstable_branch(p)
        observables["unstable"] = int(unstable is not None)
        observables["n_p_unstable"] = unstable.n_p if unstable else math.nan
        observables["stability_unstable"] = unstable.stability if unstable else math.nan
    return observables


def _ep_cell(spec: SweepSpec, coords: dict[str, float]) -> dict[str, Any]:
    merged = {**DEFAULT_FIXED, **spec.fixed, **coords}
    p = _cell_params(spec, coords)
    x = float(merged["x"])
    minus = energy_at_photon_number(spec.gauge, p, x, EnergyBranch.MINUS)
    plus = energy_at_photon_number(spec.gauge, p, x, EnergyBranch.PLUS)
    observables = {
        "re_minus": minus.real,
        "im_minus": minus.imag,
        "re_plus": plus.real,
        "im_plus": plus.imag,
    }
    if "x" in coords:
        observables["x_ep"] = exceptional_photon_number(p)
    else:
        observables["G_ep"] = exceptional_point(p, math.sqrt(p.N * x)) if x > 0 else math.inf
    return observables


_CELL_EVALUATORS = {
    "coupling": _coupling_cell,
    "diagram": _diagram_cell,
    "ep": _ep_cell,
}


def _evaluate_chunk(spec: SweepSpec, chunk: list[tuple[int, dict[str, float]]]) -> list[SweepRecord]:
    evaluate = _CELL_EVALUATORS[spec.kind]
    records = []
    for index, coords in chunk:
        observables = evaluate(spec, coords)
        if spec.observables:
            observables = {name: observables[name] for name in spec.observables if name in observables}
        records.append(SweepRecord(index=index, inputs=dict(coords), observables=observables))
    return records


def run_cells(spec: SweepSpec, workers: int | None = None, max_cells: int | None = None) -> list[SweepRecord]:
    """
    Evaluate every cell of a variational scan.

    workers=1 runs inline; more workers map cell chunks over a process pool
    whose map preserves order.
    """
    if spec.kind not in _CELL_EVALUATORS:
        raise ValidationError({"kind": f"'{spec.kind}' is not a grid scan. Valid kinds: {', '.join(_CELL_EVALUATORS)}"})
    check_budget(spec, max_cells=max_cells)
    workers = limit_setting("workers") if workers is None else workers

    cells = list(enumerate(spec.coordinates()))
    size = SWEEP_CONFIG["chunk_size"]
    chunks = [cells[i:i + size] for i in range(0, len(cells), size)]
    logger.debug(f"{spec.kind} sweep ({spec.gauge.value}): {len(cells)} cells in {len(chunks)} chunks, workers={workers}")

    if workers <= 1 or len(chunks) <= 1:
        results = [_evaluate_chunk(spec, chunk) for chunk in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_chunk, repeat(spec), chunks))
    return [record for chunk in results for record in chunk]


def _require_axes(spec: SweepSpec, names: Sequence[str], operation: str) -> None:
    present = [axis.name for axis in spec.axes]
    if present != list(names):
        raise ValidationError({"axes": f"{operation} needs axes {list(names)} in that order, got {present}"})


def coupling_sweep(spec: SweepSpec, workers: int | None = None, max_cells: int | None = None) -> list[SweepRecord]:
    """
    Ground-state observables along a G axis.

    Args:
        spec: Spec of kind "coupling" with a single G axis
        workers: Process count (default from DICKE_WORKERS)
        max_cells: Cell budget (default from DICKE_SWEEP_MAX_CELLS)

    Returns:
        One record per G value, in increasing G

    Raises:
        ValidationError: If the spec has the wrong axes
        BudgetError: If the cell budget is exceeded
    """
    _require_axes(spec, ["G"], "coupling_sweep")
    return run_cells(spec, workers, max_cells)


def phase_diagram(spec: SweepSpec, workers: int | None = None, max_cells: int | None = None) -> list[SweepRecord]:
    """
    Phase labels over an (eta, G) grid at fixed phi, eta-major.

    The boundary curve is produced separately by boundary_series.
    """
    _require_axes(spec, ["eta", "G"], "phase_diagram")
    return run_cells(spec, workers, max_cells)


def boundary_series(gauge: GaugeKind, phi: float, eta_axis: Axis, Omega: float = 1.0) -> list[dict[str, float]]:
    """G_c(eta) along an eta axis, emitted next to every phase diagram."""
    series = []
    for eta in eta_axis.values():
        p = validate_params(G=0.0, N=1, Omega=Omega, eta=float(eta), phi=phi)
        series.append({"eta": float(eta), "G_c": critical_coupling(gauge, p)})
    return series


def ep_scan(spec: SweepSpec, workers: int | None = None, max_cells: int | None = None) -> list[SweepRecord]:
    """
    Real and imaginary parts of both non-Hermitian branches.

    With a G axis, gamma^2/N is held at fixed["x"] and G_ep is reported; with an
    x axis, G is held fixed and the merge point x_ep = 1 / (8 G^2 Phi) is reported.
    """
    if spec.gauge is not GaugeKind.NON_HERMITIAN_UNIFIED:
        raise ValidationError({"gauge": "ep_scan applies to the nonhermitian gauge only"})
    names = [axis.name for axis in spec.axes]
    if names == ["G"]:
        if "x" not in spec.fixed:
            raise ValidationError({"x": "an ep scan over G needs a fixed photon number x = gamma^2/N"})
    elif names != ["x"]:
        raise ValidationError({"axes": f"ep_scan needs a single G or x axis, got {names}"})
    return run_cells(spec, workers, max_cells)


def _ed_row(gauge: GaugeKind, p: ModelParams, tol: float, limits: EDLimits) -> dict[str, Any]:
    variational = solve_ground_state(gauge, p)
    row: dict[str, Any] = {
        "energy_var": variational.energy.real,
        "n_p_var": variational.n_p,
        "delta_na_var": variational.delta_na,
    }
    try:
        result = cutoff_converge(gauge, p, tol, limits=limits)
    except (ResourceError, EigensolverError) as e:
        logger.warning(f"ED row N={p.N} failed: {e}")
        row.update(
            energy_ed=math.nan, gap=math.nan, n_p_ed=math.nan, delta_na_ed=math.nan,
            n_max_used=-1, tail=math.nan, status="unconverged",
            detail=str(e),
        )
        return row

    row.update(
        energy_ed=result.ground_energy_per_atom,
        gap=variational.energy.real - result.ground_energy_per_atom,
        n_p_ed=result.n_p_ed,
        delta_na_ed=result.delta_na_ed,
        n_max_used=result.n_max_used,
        tail=result.tail_population,
        status="converged" if result.converged else "unconverged",
        detail="",
    )
    return row


def _ed_task(args: tuple[GaugeKind, ModelParams, float, EDLimits]) -> dict[str, Any]:
    return _ed_row(*args)


def ed_compare(
    spec: SweepSpec,
    workers: int | None = None,
    limits: EDLimits | None = None,
    max_solves: int | None = None,
) -> list[SweepRecord]:
    """
    Variational vs exact-diagonalization table, one row per atom count.

    A row whose cutoff search hits the dimension guard or an eigensolver
    failure is annotated "unconverged" instead of aborting the table.

    Args:
        spec: Spec of kind "ed" with atoms and tol
        workers: ED process count (default from DICKE_ED_WORKERS)
        limits: Dimension limits passed to cutoff_converge
        max_solves: Solve budget (default from DICKE_ED_MAX_SOLVES)

    Returns:
        One record per N with energy_ed, energy_var, gap, n_p_ed, n_p_var, n_max_used, status

    Raises:
        ValidationError: For the non-Hermitian gauge or an empty atom list
        BudgetError: If more solves are requested than DICKE_ED_MAX_SOLVES allows
    """
    if not spec.gauge.is_hermitian:
        raise ValidationError({"gauge": "ed comparisons need a Hermitian gauge (coulomb, dipole, unified)"})
    if not spec.atoms:
        raise ValidationError({"n": "no atom counts given"})
    check_budget(spec, max_ed_solves=max_solves)
    limits = limits or EDLimits.from_settings()
    workers = limit_setting("ed_workers") if workers is None else workers

    tasks = [(spec.gauge, _cell_params(spec, {"N": n}), spec.tol, limits) for n in spec.atoms]
    if workers <= 1 or len(tasks) <= 1:
        rows = [_ed_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_ed_task, tasks))

    return [
        SweepRecord(index=index, inputs={"N": task[1].N}, observables=row)
        for index, (task, row) in enumerate(zip(tasks, rows))
    ]


def gauge_deviation(
    p: ModelParams,
    n_max: int,
    gauges: Sequence[GaugeKind] = (GaugeKind.COULOMB, GaugeKind.DIPOLE, GaugeKind.UNIFIED),
    tolerance: float = 1e-8,
) -> dict[str, Any]:
    """
    Compare ED ground energies of several Hermitian gauges at equal (G, N, n_max).

    The full Hamiltonians differ, so a spread above `tolerance` is logged and
    reported rather than treated as a failure.

    Returns:
        Dict with per-gauge energies, the max pairwise spread and an agree flag
    """
    energies = {gauge.value: solve_point(gauge, p, n_max).ground_energy_per_atom for gauge in gauges}
    spread = max(energies.values()) - min(energies.values())
    agree = spread <= tolerance
    if not agree:
        logger.warning(
            f"ED gauge spread {spread:.3e} per atom at eta={p.eta}, G={p.G}, N={p.N}, n_max={n_max}: {energies}"
        )
    return {"energies": energies, "spread": spread, "agree": agree}


def format_value(value: Any) -> str:
    """Render one CSV field: floats with 17 significant digits, everything else via str."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def record_columns(records: Iterable[SweepRecord]) -> list[str]:
    """Inputs first, then observables, in first-seen order."""
    inputs: list[str] = []
    observables: list[str] = []
    for record in records:
        for name in record.inputs:
            if name not in inputs:
                inputs.append(name)
        for name in record.observables:
            if name not in observables:
                observables.append(name)
    return inputs + [name for name in observables if name not in inputs]


def records_to_csv(records: Sequence[SweepRecord], columns: Sequence[str] | None = None) -> str:
    """
    Render records as CSV text with a header row.

    Args:
        records: Records in cell order
        columns: Column order; defaults to record_columns(records)

    Returns:
        CSV text using ',' separators and '\\n' line endings
    """
    columns = list(columns) if columns is not None else record_columns(records)
    output = StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(columns)
    for record in records:
        row = record.as_row()
        writer.writerow([format_value(row.get(name, "")) for name in columns])
    return output.getvalue()


def rows_to_csv(rows: Sequence[dict[str, Any]]) -> str:
    """CSV text for plain dict rows such as boundary_series output."""
    columns = list(rows[0]) if rows else []
    output = StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[name]) for name in columns])
    return output.getvalue()


def json_safe(value: Any) -> Any:
    """Replace NaN/inf with None and numpy scalars with Python ones, recursively."""
    if isinstance(value, dict):
        return {key: json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, complex):
        return {"re": json_safe(value.real), "im": json_safe(value.imag)}
    return value


def records_to_json(records: Sequence[SweepRecord], metadata: dict[str, Any] | None = None) -> str:
    """JSON document with metadata and one object per record."""
    data = {
        "metadata": json_safe(metadata or {}),
        "records": [json_safe({"index": r.index, **r.as_row()}) for r in records],
    }
    return json.dumps(data, indent=2)


def run_sweep(
    spec: SweepSpec,
    workers: int | None = None,
    limits: EDLimits | None = None,
    budget: int | None = None,
) -> list[SweepRecord]:
    """Dispatch a spec to the matching scan; `budget` bounds cells, or solves for ed tables."""
    if spec.kind == "coupling":
        return coupling_sweep(spec, workers, budget)
    if spec.kind == "diagram":
        return phase_diagram(spec, workers, budget)
    if spec.kind == "ep":
        return ep_scan(spec, workers, budget)
    if spec.kind == "ed":
        return ed_compare(spec, workers, limits, budget)
    raise ValidationError({"kind": f"unknown sweep kind '{spec.kind}'. Valid kinds: {', '.join(SWEEP_KINDS)}"})
