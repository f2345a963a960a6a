"""
Command-line front end: single points, figure data, ED tables and the verify suites.

Exit codes: 0 ok, 2 invalid input, 3 budget exceeded, 4 every ED row failed,
5 a verify invariant failed.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from . import __version__
from .config import OUTPUT_FORMATS, RunConfig, load_run_config
from .ed_oracle import EDLimits, build_hamiltonian, dump_matrix_market
from .errors import BudgetError, DickeError, EigensolverError, ResourceError, ValidationError
from .figures import FIGURES, GridOptions, get_figure, render_figure
from .model import GaugeKind, ModelParams, parse_angle, validate_params
from .sweep import AXIS_NAMES, SweepSpec, ed_compare, json_safe, records_to_csv, records_to_json
from .variational import VariationalSolution, phase_label, solve_ground_state
from .verify import ALL_SCOPES, run_verify

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_ED_FAILED = 4
EXIT_INVARIANT = 5

COMMANDS = ("point", "figure", "ed", "verify")

# Error fields reported under the flag that sets them
FLAG_NAMES = {
    "G": "--g",
    "N": "--n",
    "n": "--n",
    "atoms": "--n",
    "Omega": "--Omega",
    "omega": "--omega",
    "eta": "--eta",
    "phi": "--phi",
    "gauge": "--gauge",
    "tol": "--tol",
    "points": "--points",
    "workers": "--workers",
    "samples": "--samples",
    "seed": "--seed",
    "axes": "--axis",
    "format": "--format",
    "config": "--config",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dicke-gauge",
        description="Variational and exact ground states of the three-level Dicke model in four gauges.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs")
    parser.add_argument("--config", help="INI run file; flags override its values")
    parser.add_argument("--out", help="Output directory (default: current directory)")
    parser.add_argument("--format", choices=OUTPUT_FORMATS, help="Data file format (default: csv)")

    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    point = commands.add_parser("point", help="Variational ground state at one parameter point")
    _add_model_flags(point)
    point.add_argument("--n", dest="N", type=int, help="Atom count (default: 10)")
    point.add_argument("--json", action="store_true", help="Also write point.json into --out")

    figure = commands.add_parser("figure", help="Write the data files of one figure")
    figure.add_argument("figure_id", metavar="FIGURE", help=f"One of: {', '.join(FIGURES)}")
    figure.add_argument("--points", type=int, help="Points per axis for every panel")
    figure.add_argument("--workers", type=int, help="Sweep processes (default: DICKE_WORKERS or 1)")
    figure.add_argument(
        "--axis", action="append", nargs=4, metavar=("NAME", "START", "STOP", "COUNT"), default=[],
        help=f"Override one axis range; NAME is one of {', '.join(AXIS_NAMES)}",
    )

    ed = commands.add_parser("ed", help="Variational vs exact-diagonalization table")
    _add_model_flags(ed)
    ed.add_argument("--n", dest="atoms", help="Comma-separated atom counts (default: 2,4,8)")
    ed.add_argument("--tol", type=float, help="Per-atom cutoff convergence tolerance (default: 1e-8)")
    ed.add_argument("--workers", type=int, help="ED processes (default: DICKE_ED_WORKERS or 1)")
    ed.add_argument("--dump", metavar="DIR", help="Write each converged Hamiltonian as Matrix Market")

    verify = commands.add_parser("verify", help="Run the invariant suites on random samples")
    verify.add_argument("scope", nargs="?", default="all", help=f"One of: {', '.join(ALL_SCOPES)}")
    verify.add_argument("--samples", type=int, help="Random samples per suite (default: 200)")
    verify.add_argument("--seed", type=int, help="Sampler seed (default: 0)")
    verify.add_argument("--json", action="store_true", help="Also write verify.json into --out")

    return parser


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gauge", help="coulomb, dipole, unified or nonhermitian (default: coulomb)")
    parser.add_argument("--Omega", type=float, help="Atomic splitting, the energy unit (default: 1)")
    parser.add_argument("--omega", type=float, help="Field frequency")
    parser.add_argument("--eta", type=float, help="Detuning ratio omega/Omega (default: 1)")
    parser.add_argument("--g", dest="G", type=float, help="Coupling constant (default: 0.5)")
    parser.add_argument("--phi", help="Field phase in radians or as pi/6, 2*pi/3 ... (default: 0)")


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _parse_atoms(text: str) -> tuple[int, ...]:
    try:
        atoms = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValidationError({"atoms": f"expected comma-separated integers such as 2,4,8, got '{text}'"}) from None
    if not atoms or any(n < 1 for n in atoms):
        raise ValidationError({"atoms": f"atom counts must be positive integers, got '{text}'"})
    return atoms


def _parse_axes(raw: list[list[str]]) -> dict[str, tuple[float, float, int]]:
    axes = {}
    for name, start, stop, count in raw:
        if name not in AXIS_NAMES:
            raise ValidationError({"axes": f"unknown axis '{name}'. Valid axes: {', '.join(AXIS_NAMES)}"})
        try:
            axes[name] = (float(start), float(stop), int(count))
        except ValueError:
            raise ValidationError({"axes": f"cannot parse '{name} {start} {stop} {count}'"}) from None
    return axes


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """
    Effective run configuration: defaults < run file < environment limits < flags.

    Raises:
        ValidationError: On a malformed run file or flag value
    """
    config = RunConfig()
    if args.config:
        config = load_run_config(args.config, base=config)
    config = config.with_env_limits()

    overrides: dict[str, Any] = {
        "command": args.command,
        "out": args.out,
        "format": args.format,
    }
    for name in ("gauge", "Omega", "G", "N", "tol", "points", "samples", "seed"):
        overrides[name] = getattr(args, name, None)

    # Setting one of eta/omega on the command line replaces both from the run file
    eta, omega = getattr(args, "eta", None), getattr(args, "omega", None)
    if eta is not None or omega is not None:
        config = replace(config, eta=eta, omega=omega)

    if getattr(args, "phi", None) is not None:
        overrides["phi"] = parse_angle(args.phi, field="phi")
    if getattr(args, "atoms", None) is not None:
        overrides["atoms"] = _parse_atoms(args.atoms)
    if args.command == "figure":
        overrides["target"] = args.figure_id
        if args.axis:
            overrides["axes"] = {**config.axes, **_parse_axes(args.axis)}
    elif args.command == "verify":
        overrides["target"] = args.scope

    workers = getattr(args, "workers", None)
    if workers is not None:
        if workers < 1:
            raise ValidationError({"workers": f"must be >= 1, got {workers}"})
        key = "ed_workers" if args.command == "ed" else "workers"
        overrides["limits"] = {**config.limits, key: workers}

    return config.with_overrides(**overrides)


def _params(config: RunConfig, N: int | None = None) -> ModelParams:
    return validate_params(
        G=config.G,
        N=config.N if N is None else N,
        Omega=config.Omega,
        omega=config.omega,
        eta=config.eta,
        phi=config.phi,
    )


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def _sidecar(config: RunConfig, **extra: Any) -> str:
    data = {
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "config": config.echo(),
        **extra,
    }
    return json.dumps(json_safe(data), indent=2)


def solution_record(solution: VariationalSolution) -> dict[str, Any]:
    """JSON-ready view of a solution, companion included."""
    record = {
        "gauge": solution.gauge.value,
        "phase": solution.phase.value,
        "gamma_c": solution.gamma_c,
        "n_p": solution.n_p,
        "energy": solution.energy.real,
        "energy_imag": solution.energy.imag,
        "delta_na": solution.delta_na,
        "berry_per_atom": solution.berry_per_atom,
        "stability": solution.stability,
        "G_c": solution.critical_coupling,
    }
    if solution.atom_energy is not None:
        record["atom_energy"] = solution.atom_energy
    if solution.companion is not None:
        record["companion"] = solution_record(solution.companion)
    return record


def cmd_point(config: RunConfig, write_json: bool = False) -> int:
    """Print the variational ground state of one parameter point."""
    gauge = GaugeKind.parse(config.gauge)
    p = _params(config)
    solution = solve_ground_state(gauge, p)
    record = solution_record(solution)

    print(f"gauge     {gauge.value}  (eta={p.eta:g}, G={p.G:g}, N={p.N}, phi={p.phi:.6g})")
    print(f"label     {phase_label(gauge, p)}")
    for key in ("phase", "gamma_c", "n_p", "energy", "delta_na", "berry_per_atom", "stability", "G_c"):
        value = record[key]
        print(f"{key:<9} {value:.12g}" if isinstance(value, float) else f"{key:<9} {value}")
    companion = record.get("companion")
    if companion is not None:
        print(f"unstable  n_p={companion['n_p']:.12g} energy={companion['energy']:.12g} "
              f"delta_na={companion['delta_na']:.12g} atom_energy={companion['atom_energy']:.12g}")

    if write_json:
        _write(Path(config.out) / "point.json",
               _sidecar(config, params=p.as_dict(), label=phase_label(gauge, p), solution=record))
    return EXIT_OK


def cmd_figure(config: RunConfig) -> int:
    """Write one data file per panel plus the <figure>.json sidecar."""
    figure = get_figure(config.target or "")
    grid = GridOptions(points=config.points, axes=dict(config.axes))
    outputs = render_figure(
        figure.name,
        grid,
        workers=config.limits["workers"],
        output_format=config.format,
        max_cells=config.limits["max_cells"],
    )

    out = Path(config.out)
    panels = []
    for output in outputs:
        data_file = _write(out / f"{output.name}.{config.format}", output.body)
        entry = {
            "name": output.name,
            "file": data_file.name,
            "rows": len(output.records),
            "columns": output.columns,
            "annotations": output.annotations,
        }
        if output.boundary_body is not None:
            entry["boundary_file"] = _write(out / f"{output.name}_boundary.csv", output.boundary_body).name
        panels.append(entry)

    _write(out / f"{figure.name}.json",
           _sidecar(config, figure=figure.name, description=figure.description, panels=panels))
    print(f"{figure.name}: wrote {len(outputs)} panels to {out}")
    logger.info(f"Figure {figure.name} finished with {len(outputs)} panels")
    return EXIT_OK


def cmd_ed(config: RunConfig, dump_dir: str | None = None) -> int:
    """Write the variational vs ED comparison table and its sidecar."""
    gauge = GaugeKind.parse(config.gauge)
    p = _params(config, N=1)
    spec = SweepSpec(
        kind="ed",
        gauge=gauge,
        fixed={"Omega": p.Omega, "eta": p.eta, "phi": p.phi, "G": p.G},
        atoms=tuple(config.atoms),
        tol=config.tol,
    )
    limits = EDLimits(config.limits["max_dimension"], config.limits["dense_limit"])
    records = ed_compare(spec, workers=config.limits["ed_workers"], limits=limits,
                         max_solves=config.limits["max_ed_solves"])

    out = Path(config.out)
    stem = f"ed_{gauge.value}"
    if config.format == "json":
        _write(out / f"{stem}.json", records_to_json(records, {"gauge": gauge.value}))
    else:
        _write(out / f"{stem}.csv", records_to_csv(records))
    rows = [{"N": r.inputs["N"], **r.observables} for r in records]
    _write(out / f"{stem}_meta.json", _sidecar(config, gauge=gauge.value, rows=rows))

    failed = [row for row in rows if row["n_max_used"] < 0]
    for row in rows:
        print(f"N={row['N']:<5} {row['status']:<12} E_var={row['energy_var']:.12g} "
              f"E_ed={row['energy_ed']:.12g} gap={row['gap']:.3e} n_max={row['n_max_used']}")
    for row in failed:
        logger.warning(f"ED row N={row['N']} unconverged: {row['detail']}")

    if dump_dir is not None:
        for row in rows:
            if row["n_max_used"] < 0:
                continue
            H = build_hamiltonian(gauge, p.with_atoms(row["N"]), row["n_max_used"], limits)
            dump_matrix_market(
                H,
                Path(dump_dir) / f"H_{gauge.value}_N{row['N']}_nmax{row['n_max_used']}.mtx",
                comment=f"{gauge.value} eta={p.eta!r} G={p.G!r} phi={p.phi!r} N={row['N']}",
            )

    if rows and len(failed) == len(rows):
        logger.error(f"All {len(rows)} ED rows failed")
        return EXIT_ED_FAILED
    return EXIT_OK


def cmd_verify(config: RunConfig, write_json: bool = False) -> int:
    """Run verify suites; exit 5 with the first failing sample when any check fails."""
    reports = run_verify(config.target or "all", samples=config.samples, seed=config.seed)
    for report in reports:
        status = "ok" if report.ok else f"FAILED {len(report.failures)}"
        print(f"{report.scope:<16} {status:<10} passed={report.passed:<6} worst={report.worst_residual:.3e}")
        for note in report.notes:
            print(f"{'':<16} note: {note['check']} spread={note['spread']:.3e} (G={note['G']:.6g}, N={note['N']})")

    if write_json:
        _write(Path(config.out) / "verify.json",
               _sidecar(config, reports=[report.as_dict() for report in reports]))

    failing = [report for report in reports if not report.ok]
    if failing:
        first = failing[0].failures[0]
        replay = {"scope": failing[0].scope, "check": first.check, "residual": first.residual,
                  "tolerance": first.tolerance, "params": first.params}
        print(json.dumps(json_safe(replay), indent=2))
        logger.error(f"{sum(len(r.failures) for r in failing)} invariant checks failed")
        return EXIT_INVARIANT
    return EXIT_OK


def _handle_command(config: RunConfig, args: argparse.Namespace) -> int:
    """Route a resolved configuration to its command."""
    if config.command == "point":
        return cmd_point(config, write_json=args.json)
    elif config.command == "figure":
        return cmd_figure(config)
    elif config.command == "ed":
        return cmd_ed(config, dump_dir=args.dump)
    elif config.command == "verify":
        return cmd_verify(config, write_json=args.json)
    else:
        raise ValidationError({"command": f"unknown command '{config.command}'. Valid: {', '.join(COMMANDS)}"})


def _report_validation(error: ValidationError) -> None:
    for name, reason in error.fields.items():
        flag = FLAG_NAMES.get(name, name)
        print(f"error: {flag}: {reason}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    """Entry point of the dicke-gauge command."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)

    try:
        config = resolve_config(args)
        return _handle_command(config, args)
    except ValidationError as e:
        logger.error(str(e))
        _report_validation(e)
        return EXIT_VALIDATION
    except BudgetError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ResourceError, EigensolverError) as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ED_FAILED
    except DickeError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
