"""
Run configuration: resource limits, environment overrides and INI run files.

Precedence is defaults < run file < environment (limits only) < CLI flags.
"""

import configparser
import io
import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import ValidationError
from .model import GaugeKind, parse_angle

logger = logging.getLogger(__name__)

ED_CONFIG = {
    "dense_limit": 4000,            # dense eigh up to this dimension, eigsh above
    "max_dimension": 250_000,       # (2N+1)(n_max+1) guard
    "tail_levels": 5,
    "tail_tolerance": 1e-10,
    "hermitian_tolerance": 1e-10,
    "norm_tolerance": 1e-8,
    "max_doublings": 6,
    "cutoff_margin": 20,
}

SWEEP_CONFIG = {
    "max_cells": 1_000_000,
    "max_ed_solves": 64,
    "workers": 1,
    "ed_workers": 1,
    "chunk_size": 512,
    "curve_points": 201,
    "diagram_points": 201,
    "curve_G": (0.0, 2.0),
    "diagram_G": (0.0, 1.5),
    "diagram_eta": (0.2, 2.0),
    "nonhermitian_G": (0.0, 1.0),
    "ep_x": (0.0, 2.0),
}

# Only resource limits may come from the environment
ENV_OVERRIDES = {
    "max_dimension": "DICKE_ED_MAX_DIM",
    "dense_limit": "DICKE_ED_DENSE_LIMIT",
    "max_cells": "DICKE_SWEEP_MAX_CELLS",
    "max_ed_solves": "DICKE_ED_MAX_SOLVES",
    "workers": "DICKE_WORKERS",
    "ed_workers": "DICKE_ED_WORKERS",
}

LIMIT_DEFAULTS = {
    "max_dimension": ED_CONFIG["max_dimension"],
    "dense_limit": ED_CONFIG["dense_limit"],
    "max_cells": SWEEP_CONFIG["max_cells"],
    "max_ed_solves": SWEEP_CONFIG["max_ed_solves"],
    "workers": SWEEP_CONFIG["workers"],
    "ed_workers": SWEEP_CONFIG["ed_workers"],
}

OUTPUT_FORMATS = ("csv", "json")


def _positive_int(name: str, raw: Any) -> int:
    try:
        value = int(str(raw).strip())
    except ValueError:
        raise ValidationError({name: f"expected a positive integer, got '{raw}'"}) from None
    if value < 1:
        raise ValidationError({name: f"expected a positive integer, got '{raw}'"})
    return value


def env_limit(key: str) -> int | None:
    """Value of a limit's environment override, or None when unset."""
    env_name = ENV_OVERRIDES[key]
    raw = os.environ.get(env_name, "").strip()
    if not raw:
        return None
    return _positive_int(env_name, raw)


def limit_setting(key: str) -> int:
    """Effective value of one resource limit: environment override, else default."""
    value = env_limit(key)
    return LIMIT_DEFAULTS[key] if value is None else value


def resource_limits(file_values: dict[str, int] | None = None) -> dict[str, int]:
    """
    Effective resource limits.

    Args:
        file_values: Limits read from a run file; environment variables win over them

    Returns:
        Dict with max_dimension, dense_limit, max_cells, max_ed_solves, workers, ed_workers
    """
    limits = dict(LIMIT_DEFAULTS)
    for key, value in (file_values or {}).items():
        if key not in limits:
            raise ValidationError({f"limits.{key}": f"unknown limit. Valid limits: {', '.join(limits)}"})
        limits[key] = _positive_int(f"limits.{key}", value)
    for key in limits:
        value = env_limit(key)
        if value is not None:
            limits[key] = value
    return limits


@dataclass
class RunConfig:
    """
    Everything that influences one CLI run.

    Attributes:
        command: Subcommand (point, figure, ed, verify)
        gauge: Gauge name
        target: Figure id or verify scope
        Omega, omega, eta, G, N, phi: Model parameters (omega/eta optional)
        atoms: Atom counts for ED tables
        tol: ED cutoff tolerance per atom
        points: Points per sweep axis override
        samples: Random samples per verify suite
        seed: Seed of the verify sampler
        axes: Axis overrides, name -> (start, stop, count)
        out: Output directory
        format: csv or json
        limits: Resource limits
    """

    command: str = "point"
    gauge: str = GaugeKind.COULOMB.value
    target: str | None = None
    Omega: float = 1.0
    omega: float | None = None
    eta: float | None = None
    G: float = 0.5
    N: int = 10
    phi: float = 0.0
    atoms: tuple[int, ...] = (2, 4, 8)
    tol: float = 1e-8
    points: int | None = None
    samples: int = 200
    seed: int = 0
    axes: dict[str, tuple[float, float, int]] = field(default_factory=dict)
    out: str = "."
    format: str = "csv"
    limits: dict[str, int] = field(default_factory=lambda: dict(LIMIT_DEFAULTS))

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with every non-None override applied (CLI flags sit on top of everything)."""
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})

    def with_env_limits(self) -> "RunConfig":
        return replace(self, limits=resource_limits(self.limits))

    def echo(self) -> dict[str, Any]:
        """Effective configuration as written into every JSON sidecar."""
        data = asdict(self)
        data["atoms"] = list(self.atoms)
        data["axes"] = {name: list(spec) for name, spec in sorted(self.axes.items())}
        return data

    def to_ini(self) -> str:
        """Serialize to INI text; floats use repr so from_ini restores them exactly."""
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str

        run = {"command": self.command, "gauge": self.gauge, "tol": repr(self.tol),
               "samples": str(self.samples), "seed": str(self.seed),
               "atoms": ",".join(str(n) for n in self.atoms)}
        if self.target is not None:
            run["target"] = self.target
        if self.points is not None:
            run["points"] = str(self.points)
        parser["run"] = run

        params = {"Omega": repr(self.Omega), "G": repr(self.G), "N": str(self.N), "phi": repr(self.phi)}
        if self.omega is not None:
            params["omega"] = repr(self.omega)
        if self.eta is not None:
            params["eta"] = repr(self.eta)
        parser["params"] = params

        parser["axes"] = {
            name: f"{start!r}, {stop!r}, {count}" for name, (start, stop, count) in sorted(self.axes.items())
        }
        parser["output"] = {"out": self.out, "format": self.format}
        parser["limits"] = {key: str(value) for key, value in self.limits.items()}

        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()

    @classmethod
    def from_ini(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        """
        Parse INI text on top of `base` (defaults when omitted).

        Raises:
            ValidationError: On unknown sections/keys or unparseable values
        """
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ValidationError({"config": f"cannot parse run file: {e}"}) from e

        config = base or cls()
        updates: dict[str, Any] = {}
        problems: dict[str, str] = {}

        def convert(section: str, key: str, raw: str, kind: str) -> Any:
            try:
                if kind == "float":
                    value = float(raw)
                    if not math.isfinite(value):
                        raise ValueError(raw)
                    return value
                if kind == "angle":
                    return parse_angle(raw, field=f"{section}.{key}")
                if kind == "int":
                    return int(raw)
                if kind == "atoms":
                    return tuple(int(part) for part in raw.split(",") if part.strip())
                return raw.strip()
            except ValidationError as e:
                problems.update(e.fields)
            except ValueError:
                problems[f"{section}.{key}"] = f"cannot parse '{raw}' as {kind}"
            return None

        schema = {
            "run": {"command": "str", "gauge": "str", "target": "str", "tol": "float",
                    "samples": "int", "seed": "int", "atoms": "atoms", "points": "int"},
            "params": {"Omega": "float", "omega": "float", "eta": "float", "G": "float",
                       "N": "int", "phi": "angle"},
            "output": {"out": "str", "format": "str"},
        }

        for section in parser.sections():
            if section == "axes":
                axes = dict(config.axes)
                for name, raw in parser.items(section):
                    parts = [part.strip() for part in raw.split(",")]
                    try:
                        if len(parts) != 3:
                            raise ValueError(raw)
                        axes[name] = (float(parts[0]), float(parts[1]), int(parts[2]))
                    except ValueError:
                        problems[f"axes.{name}"] = f"expected 'start, stop, count', got '{raw}'"
                updates["axes"] = axes
            elif section == "limits":
                try:
                    limits = dict(config.limits)
                    for key, raw in parser.items(section):
                        if key not in LIMIT_DEFAULTS:
                            problems[f"limits.{key}"] = f"unknown limit. Valid limits: {', '.join(LIMIT_DEFAULTS)}"
                            continue
                        limits[key] = _positive_int(f"limits.{key}", raw)
                    updates["limits"] = limits
                except ValidationError as e:
                    problems.update(e.fields)
            elif section in schema:
                for key, raw in parser.items(section):
                    kind = schema[section].get(key)
                    if kind is None:
                        problems[f"{section}.{key}"] = f"unknown key. Valid keys: {', '.join(schema[section])}"
                        continue
                    value = convert(section, key, raw, kind)
                    if value is not None:
                        updates[key] = value
            else:
                problems[section] = "unknown section. Valid sections: run, params, axes, output, limits"

        if problems:
            raise ValidationError(problems)
        result = replace(config, **updates)
        if result.format not in OUTPUT_FORMATS:
            raise ValidationError({"output.format": f"expected one of {', '.join(OUTPUT_FORMATS)}, got '{result.format}'"})
        return result


def load_run_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    """
    Read a run file.

    Raises:
        ValidationError: If the file is missing or malformed
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError({"config": f"run file '{path}' does not exist"})
    logger.info(f"Loading run configuration from {path}")
    return RunConfig.from_ini(path.read_text(encoding="utf-8"), base=base)
