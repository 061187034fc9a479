# src/yamabe_flow/export.py
"""Bit-stable result files: long-format CSV, JSON sidecar, rendered summaries."""

import csv
import io
import json
import logging
import math
from enum import Enum
from importlib.resources import files
from pathlib import Path

import numpy as np
from jinja2 import Environment, FileSystemLoader, StrictUndefined

from yamabe_flow.boundary_data import BoundaryProfile, boundary_table
from yamabe_flow.errors import ExportError
from yamabe_flow.geometry import BackgroundKind, RadialMesh
from yamabe_flow.initial_data import scalar_curvature
from yamabe_flow.radial_solver import FlowTrajectory

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
CSV_HEADER = ("t", "r", "u", "U", "R_elliptic")
NUMBER = "%.17g"


def _fmt(value) -> str:
    return NUMBER % value


def _csv_text(header, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([_fmt(x) for x in row] for row in rows)
    return buffer.getvalue()


def _write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise ExportError(path, e) from e
    logger.info(f"✅ Wrote: {path}")
    return path


def jsonable(value):
    """Plain JSON types; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def dumps(payload: dict) -> str:
    return json.dumps(jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def mesh_to_dict(mesh: RadialMesh) -> dict:
    return {
        "background": mesh.background.value,
        "m": mesh.m,
        "r_min": mesh.r_min,
        "r_max": mesh.r_max,
        "n": mesh.n,
    }


def trajectory_csv(traj: FlowTrajectory) -> str:
    mesh = traj.mesh
    rows = []
    for state in traj.states():
        curvature = scalar_curvature(state.field, form="eta").values
        big_u = state.U
        for i, r in enumerate(mesh.nodes):
            rows.append((state.t, r, state.u[i], big_u[i], curvature[i]))
    return _csv_text(CSV_HEADER, rows)


def export_trajectory(
    traj: FlowTrajectory,
    path,
    config: dict | None = None,
    bounds=None,
    diagnostics=None,
) -> tuple[Path, Path]:
    """Write `<path>` (CSV) and `<path>.json`; equal inputs give equal bytes."""
    csv_path = Path(path)
    json_path = csv_path.with_suffix(".json")
    _write_text(csv_path, trajectory_csv(traj))
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "mesh": mesh_to_dict(traj.mesh),
        "n_times": len(traj),
        "data_bounds": None if bounds is None else bounds.to_dict(),
        "diagnostics": None if diagnostics is None else diagnostics.to_dict(),
        "legs": [leg.to_dict() for leg in traj.legs],
        "max_substeps": max((rec.substeps for rec in traj.records), default=1),
    }
    _write_text(json_path, dumps(sidecar))
    return csv_path, json_path


def export_report(path, config: dict | None = None, diagnostics=None) -> Path:
    """report.json for commands that do not leave a single trajectory."""
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "diagnostics": None if diagnostics is None else diagnostics.to_dict(),
    }
    return _write_text(Path(path), dumps(payload))


def import_trajectory(csv_path) -> FlowTrajectory:
    """Rebuild a trajectory from its CSV and the sidecar's mesh block."""
    csv_path = Path(csv_path)
    try:
        sidecar = json.loads(csv_path.with_suffix(".json").read_text())
        rows = csv_path.read_text().splitlines()[1:]
        table = (
            np.loadtxt(rows, delimiter=",", ndmin=2)
            if rows
            else np.empty((0, len(CSV_HEADER)))
        )
    except (OSError, ValueError) as e:
        raise ExportError(csv_path, e) from e
    block = sidecar["mesh"]
    mesh = RadialMesh(
        BackgroundKind(block["background"]),
        block["m"],
        block["r_min"],
        block["r_max"],
        block["n"],
    )
    n_times = len(table) // mesh.n
    times = table[:: mesh.n, 0] if n_times else np.empty(0)
    values = table[:, 2].reshape(n_times, mesh.n)
    return FlowTrajectory(mesh, times, values)


def export_boundary_table(profile: BoundaryProfile, t_grid, path) -> Path:
    table = boundary_table(profile, t_grid)
    columns = ("t", "phi", "dphi_dt", "R_boundary")
    rows = zip(*(table[c] for c in columns))
    return _write_text(Path(path), _csv_text(columns, rows))


def _environment() -> Environment:
    artifacts_dir = str(files("yamabe_flow").joinpath("artifacts"))
    return Environment(
        loader=FileSystemLoader(artifacts_dir),
        undefined=StrictUndefined,
        keep_trailing_newline=True,
    )


def render_template(template_file: str, output_path, context: dict) -> Path:
    template = _environment().get_template(template_file)
    return _write_text(Path(output_path), template.render(context))


def render_summary(output_path, context: dict) -> Path:
    """summary.md from report.md.j2."""
    return render_template("report.md.j2", output_path, context)


def write_run_env(output_path, env: dict[str, str]) -> Path:
    """The resolved configuration in the flat KEY=value format."""
    return render_template("run.env.j2", output_path, {"values": env})
