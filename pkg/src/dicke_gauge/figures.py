"""Figure registry: every reproducible figure expands into named data panels."""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

from .config import SWEEP_CONFIG
from .errors import ValidationError
from .model import GaugeKind, validate_params
from .sweep import (
    Axis,
    SweepRecord,
    SweepSpec,
    boundary_series,
    record_columns,
    records_to_csv,
    records_to_json,
    rows_to_csv,
    run_sweep,
)
from .variational import critical_coupling, exceptional_photon_number, exceptional_point

logger = logging.getLogger(__name__)

DETUNINGS = (0.5, 1.0, 1.5)
FIELD_PHASES = {"pi6": math.pi / 6, "pi4": math.pi / 4, "pi3": math.pi / 3}
CURVE_OBSERVABLES = ("energy", "n_p", "delta_na")


@dataclass(frozen=True)
class GridOptions:
    """Axis overrides applied to every panel: a common point count and/or per-axis ranges."""

    points: int | None = None
    axes: dict[str, tuple[float, float, int]] = field(default_factory=dict)

    def axis(self, name: str, default_range: tuple[float, float], default_count: int) -> Axis:
        if name in self.axes:
            start, stop, count = self.axes[name]
            return Axis(name, float(start), float(stop), int(count))
        count = self.points if self.points is not None else default_count
        return Axis(name, default_range[0], default_range[1], count)


@dataclass(frozen=True)
class Panel:
    """
    One data file of a figure.

    Attributes:
        name: File stem
        columns: CSV columns, inputs first
        series: (labels, spec) pairs whose records are concatenated; labels become input columns
        boundary: (gauge, phi, eta axis) when a G_c(eta) curve is written next to the panel
        annotations: G_c / G_ep values recorded in the sidecar
    """

    name: str
    columns: tuple[str, ...]
    series: tuple[tuple[dict[str, float], SweepSpec], ...]
    boundary: tuple[GaugeKind, float, Axis] | None = None
    annotations: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class FigureDef:
    name: str
    description: str
    build: Callable[[GridOptions], list[Panel]]


@dataclass
class PanelOutput:
    """Rendered panel: records, file bodies and annotations."""

    name: str
    columns: list[str]
    records: list[SweepRecord]
    body: str
    boundary_body: str | None = None
    annotations: dict[str, Any] = field(default_factory=dict)


def _curve_axis(grid: GridOptions, name: str = "G", key: str = "curve_G") -> Axis:
    return grid.axis(name, SWEEP_CONFIG[key], SWEEP_CONFIG["curve_points"])


def _diagram_axes(grid: GridOptions) -> tuple[Axis, Axis]:
    return (
        grid.axis("eta", SWEEP_CONFIG["diagram_eta"], SWEEP_CONFIG["diagram_points"]),
        grid.axis("G", SWEEP_CONFIG["diagram_G"], SWEEP_CONFIG["diagram_points"]),
    )


def _critical(gauge: GaugeKind, eta: float, phi: float = 0.0) -> float:
    return critical_coupling(gauge, validate_params(G=0.0, N=1, eta=eta, phi=phi))


def _detuning_curves(figure: str, gauge: GaugeKind) -> Callable[[GridOptions], list[Panel]]:
    def build(grid: GridOptions) -> list[Panel]:
        panels = []
        for eta in DETUNINGS:
            spec = SweepSpec(kind="coupling", gauge=gauge, axes=(_curve_axis(grid),), fixed={"eta": eta})
            for observable in CURVE_OBSERVABLES:
                panels.append(Panel(
                    name=f"{figure}_{observable}_eta{eta:g}",
                    columns=("G", observable),
                    series=(({}, spec),),
                    annotations={"eta": eta, "G_c": _critical(gauge, eta)},
                ))
        return panels
    return build


def _diagram(name: str, gauge: GaugeKind, phi: float, grid: GridOptions, columns: tuple[str, ...]) -> Panel:
    eta_axis, g_axis = _diagram_axes(grid)
    spec = SweepSpec(kind="diagram", gauge=gauge, axes=(eta_axis, g_axis), fixed={"phi": phi})
    return Panel(
        name=name,
        columns=columns,
        series=(({}, spec),),
        boundary=(gauge, phi, eta_axis),
        annotations={"phi": phi},
    )


def _fig4(grid: GridOptions) -> list[Panel]:
    return [
        _diagram(f"fig4_{gauge.value}", gauge, 0.0, grid, ("eta", "G", "label", "n_p"))
        for gauge in (GaugeKind.COULOMB, GaugeKind.DIPOLE)
    ]


def _fig5(grid: GridOptions) -> list[Panel]:
    panels = []
    for eta in DETUNINGS:
        series = tuple(
            ({"phi": phi}, SweepSpec(kind="coupling", gauge=GaugeKind.UNIFIED, axes=(_curve_axis(grid),),
                                     fixed={"eta": eta, "phi": phi}))
            for phi in FIELD_PHASES.values()
        )
        critical = {label: _critical(GaugeKind.UNIFIED, eta, phi) for label, phi in FIELD_PHASES.items()}
        for observable in CURVE_OBSERVABLES:
            panels.append(Panel(
                name=f"fig5_{observable}_eta{eta:g}",
                columns=("phi", "G", observable),
                series=series,
                annotations={"eta": eta, "G_c": critical},
            ))
    return panels


def _fig6(grid: GridOptions) -> list[Panel]:
    return [
        _diagram(f"fig6_phi_{label}", GaugeKind.UNIFIED, phi, grid, ("eta", "G", "label", "n_p"))
        for label, phi in FIELD_PHASES.items()
    ]


def _fig7(grid: GridOptions) -> list[Panel]:
    panels = []
    phi = FIELD_PHASES["pi3"]
    for x in (1.0, 2.0):
        spec = SweepSpec(
            kind="ep",
            gauge=GaugeKind.NON_HERMITIAN_UNIFIED,
            axes=(_curve_axis(grid, key="nonhermitian_G"),),
            fixed={"eta": 1.0, "phi": phi, "x": x, "N": 1},
        )
        p = validate_params(G=0.0, N=1, eta=1.0, phi=phi)
        annotations = {"x": x, "G_ep": exceptional_point(p, math.sqrt(x))}
        for part in ("re", "im"):
            panels.append(Panel(
                name=f"fig7_{part}_x{x:g}",
                columns=("G", f"{part}_minus", f"{part}_plus"),
                series=(({}, spec),),
                annotations=annotations,
            ))
    return panels


def _fig8(grid: GridOptions) -> list[Panel]:
    panels = []
    phi = FIELD_PHASES["pi3"]
    for G in (0.5, 1.0):
        spec = SweepSpec(
            kind="ep",
            gauge=GaugeKind.NON_HERMITIAN_UNIFIED,
            axes=(_curve_axis(grid, name="x", key="ep_x"),),
            fixed={"eta": 1.0, "phi": phi, "G": G, "N": 1},
        )
        annotations = {"G": G, "x_ep": exceptional_photon_number(validate_params(G=G, N=1, eta=1.0, phi=phi))}
        for part in ("re", "im"):
            panels.append(Panel(
                name=f"fig8_{part}_G{G:g}",
                columns=("x", f"{part}_minus", f"{part}_plus"),
                series=(({}, spec),),
                annotations=annotations,
            ))
    return panels


def _fig9(grid: GridOptions) -> list[Panel]:
    phi = FIELD_PHASES["pi3"]
    spec = SweepSpec(
        kind="coupling",
        gauge=GaugeKind.NON_HERMITIAN_UNIFIED,
        axes=(_curve_axis(grid, key="nonhermitian_G"),),
        fixed={"eta": 1.0, "phi": phi},
    )
    annotations = {"eta": 1.0, "phi": phi, "G_c": _critical(GaugeKind.NON_HERMITIAN_UNIFIED, 1.0, phi)}
    layout = {
        "fig9_energy": ("G", "energy", "energy_upper", "energy_unstable"),
        "fig9_n_p": ("G", "n_p", "n_p_unstable"),
        "fig9_atom_energy": ("G", "atom_energy"),
    }
    return [Panel(name=name, columns=columns, series=(({}, spec),), annotations=annotations)
            for name, columns in layout.items()]


def _fig10(grid: GridOptions) -> list[Panel]:
    return [_diagram("fig10_diagram", GaugeKind.NON_HERMITIAN_UNIFIED, FIELD_PHASES["pi3"], grid,
                     ("eta", "G", "label", "n_p_unstable"))]


FIGURE_FIG2 = FigureDef("fig2", "Coulomb gauge: energy, photon number, population imbalance vs G at eta = 0.5, 1, 1.5",
                        _detuning_curves("fig2", GaugeKind.COULOMB))
FIGURE_FIG3 = FigureDef("fig3", "Dipole gauge: energy, photon number, population imbalance vs G at eta = 0.5, 1, 1.5",
                        _detuning_curves("fig3", GaugeKind.DIPOLE))
FIGURE_FIG4 = FigureDef("fig4", "G-eta phase diagrams in the Coulomb and dipole gauges", _fig4)
FIGURE_FIG5 = FigureDef("fig5", "Unified gauge curves at phi = pi/6, pi/4, pi/3 for eta = 0.5, 1, 1.5", _fig5)
FIGURE_FIG6 = FigureDef("fig6", "Unified gauge G-eta phase diagrams at phi = pi/6, pi/4, pi/3", _fig6)
FIGURE_FIG7 = FigureDef("fig7", "Non-Hermitian branches (Re, Im) vs G at gamma^2/N = 1, 2", _fig7)
FIGURE_FIG8 = FigureDef("fig8", "Non-Hermitian branches (Re, Im) vs gamma^2/N at G = 0.5, 1", _fig8)
FIGURE_FIG9 = FigureDef("fig9", "Normal states and the unstable superradiant state vs G at eta = 1, phi = pi/3", _fig9)
FIGURE_FIG10 = FigureDef("fig10", "Non-Hermitian G-eta phase diagram at phi = pi/3", _fig10)

ALL_FIGURES = [
    FIGURE_FIG2,
    FIGURE_FIG3,
    FIGURE_FIG4,
    FIGURE_FIG5,
    FIGURE_FIG6,
    FIGURE_FIG7,
    FIGURE_FIG8,
    FIGURE_FIG9,
    FIGURE_FIG10,
]

FIGURES: dict[str, FigureDef] = {figure.name: figure for figure in ALL_FIGURES}


def get_figure(figure_id: str) -> FigureDef:
    """
    Look up a figure.

    Raises:
        ValidationError: If the id is unknown, listing valid ids
    """
    figure = FIGURES.get(figure_id.strip().lower())
    if figure is None:
        raise ValidationError({"figure": f"unknown figure '{figure_id}'. Valid ids: {', '.join(FIGURES)}"})
    return figure


def render_figure(
    figure_id: str,
    grid: GridOptions | None = None,
    workers: int | None = None,
    output_format: str = "csv",
    max_cells: int | None = None,
) -> list[PanelOutput]:
    """
    Compute every panel of a figure.

    Specs shared by several panels are computed once.

    Args:
        figure_id: One of fig2 .. fig10
        grid: Axis overrides
        workers: Process count for the sweeps
        output_format: "csv" or "json" panel bodies
        max_cells: Cell budget per sweep (default from DICKE_SWEEP_MAX_CELLS)

    Returns:
        One PanelOutput per panel, in registry order

    Raises:
        ValidationError: Unknown figure or invalid override
        BudgetError: If a panel exceeds the cell budget
    """
    figure = get_figure(figure_id)
    panels = figure.build(grid or GridOptions())
    computed: dict[str, list[SweepRecord]] = {}
    outputs = []

    for panel in panels:
        records: list[SweepRecord] = []
        for labels, spec in panel.series:
            key = repr(spec)
            if key not in computed:
                computed[key] = run_sweep(spec, workers, budget=max_cells)
            for record in computed[key]:
                records.append(SweepRecord(
                    index=len(records),
                    inputs={**labels, **record.inputs},
                    observables=record.observables,
                ))

        available = record_columns(records)
        missing = [name for name in panel.columns if name not in available]
        if missing:
            raise ValidationError({"columns": f"panel {panel.name} has no columns {missing}"})
        columns = list(panel.columns)

        if output_format == "json":
            trimmed = [SweepRecord(r.index, {k: v for k, v in r.inputs.items() if k in columns},
                                   {k: v for k, v in r.observables.items() if k in columns}) for r in records]
            body = records_to_json(trimmed, {"panel": panel.name, "columns": columns})
        else:
            body = records_to_csv(records, columns)

        boundary_body = None
        if panel.boundary is not None:
            gauge, phi, eta_axis = panel.boundary
            boundary_body = rows_to_csv(boundary_series(gauge, phi, eta_axis))

        outputs.append(PanelOutput(
            name=panel.name,
            columns=columns,
            records=records,
            body=body,
            boundary_body=boundary_body,
            annotations=dict(panel.annotations),
        ))
        logger.debug(f"{figure.name}: panel {panel.name} has {len(records)} rows")

    return outputs
