# src/yamabe_flow/core.py
import logging
import math
import os

from yamabe_flow.boundary_data import (
    BoundaryProfile,
    admissible_epsilon,
    check_profile_bounds,
    default_boundary,
)
from yamabe_flow.config import RunConfig
from yamabe_flow.diagnostics import (
    DiagnosticsReport,
    check_barriers,
    check_incompleteness_barrier,
    compare_flows,
    completeness_scan,
)
from yamabe_flow.errors import ConfigurationError
from yamabe_flow.exhaustion import ExhaustionPlan, run_exhaustion
from yamabe_flow.export import (
    export_boundary_table,
    export_report,
    export_trajectory,
    render_summary,
    write_run_env,
)
from yamabe_flow.geometry import BackgroundKind, RadialMesh
from yamabe_flow.initial_data import PresetKind, make_initial
from yamabe_flow.radial_solver import (
    SolveConfig,
    comparison_dt_threshold,
    divergence_residual,
    evo_r_residual,
    solve,
)


def setup_logger(log_file_path: str | None = None):
    logger = logging.getLogger("yamabe_flow")
    logger.setLevel(logging.INFO)
    logger.handlers.clear()

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(logging.Formatter("🔧 %(levelname)s: %(message)s"))
    logger.addHandler(console_handler)

    if log_file_path is not None:
        file_handler = logging.FileHandler(log_file_path)
        file_handler.setFormatter(
            logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")
        )
        logger.addHandler(file_handler)

    return logger


def build_mesh(config: RunConfig, preset=None) -> RadialMesh:
    preset = preset or config.preset
    background = preset.background or BackgroundKind.HYPERBOLIC
    return RadialMesh(background, config.dimension, config.r_min, config.ell, config.nodes)


def solve_config(config: RunConfig, t_final: float | None = None) -> SolveConfig:
    return SolveConfig(
        dt=config.dt,
        t_final=config.t_final if t_final is None else t_final,
        gradient_treatment=config.gradient,
        theta=config.theta,
    )


def _flow_checks(traj, bounds, config: RunConfig, logger) -> DiagnosticsReport:
    """Residuals and boundary-profile checks shared by run and barriers."""
    report = DiagnosticsReport()
    boundary = traj.boundary
    if isinstance(boundary, BoundaryProfile):
        t_grid = traj.times - traj.times[0]
        eps = admissible_epsilon(boundary, t_grid, bounds.eps_floor)
        report.profile = check_profile_bounds(boundary, bounds.K0, eps, t_grid)
    report.extra["curvature_pair_discrepancy"] = max(
        (rec.discrepancy for rec in traj.records), default=0.0
    )
    if len(traj) >= 3:
        report.extra["evo_r_residual"] = float(evo_r_residual(traj).max())
    report.extra["divergence_residual"] = float(divergence_residual(traj).max())
    report.extra["comparison_dt_threshold"] = comparison_dt_threshold(traj.state(0))
    if config.preset.kind is PresetKind.POWER_LAW:
        report.checks.append(
            check_incompleteness_barrier(traj, config.preset.params[0])
        )
    logger.info(
        f"📈 max curvature discrepancy "
        f"{report.extra['curvature_pair_discrepancy']:.3g}"
    )
    return report


def _solve_preset(config: RunConfig, preset, t_final=None):
    u0 = make_initial(preset, build_mesh(config, preset))
    boundary, bounds, _ = default_boundary(u0)
    return solve(u0, boundary, solve_config(config, t_final)), bounds


def run_command(config: RunConfig, logger):
    traj, bounds = _solve_preset(config, config.preset)
    report = _flow_checks(traj, bounds, config, logger)
    return traj, bounds, report


def barriers_command(config: RunConfig, logger):
    mesh = build_mesh(config)
    if not mesh.is_hyperbolic:
        raise ConfigurationError("barrier checks run on hyperbolic presets only")
    u0 = make_initial(config.preset, mesh)
    _, bounds, _ = default_boundary(u0)
    # the curvature bounds only hold for t < 1/K0
    t_final = config.t_final
    if bounds.K0 > 0:
        t_final = min(t_final, 0.9 / bounds.K0)
        t_final = max(config.dt, math.floor(t_final / config.dt) * config.dt)
    traj, bounds = _solve_preset(config, config.preset, t_final)
    report = _flow_checks(traj, bounds, config, logger)
    b_flat = config.b_flat if config.b_flat is not None else config.preset.flat_scale
    report.barriers = check_barriers(traj, bounds, b_flat=b_flat, tolerance=config.tolerance)
    return traj, bounds, report


def compare_command(config: RunConfig, logger):
    traj_a, bounds = _solve_preset(config, config.preset)
    traj_b, _ = _solve_preset(config, config.compare_preset)
    report = DiagnosticsReport(comparison=compare_flows(traj_a, traj_b))
    logger.info(
        f"⚖️ Ordering violation {report.comparison.ordering_violation:.3g} "
        f"({report.comparison.label})"
    )
    return traj_a, bounds, report, traj_b


def exhaust_command(config: RunConfig, logger):
    plan = ExhaustionPlan(
        ladder=config.ladder,
        spacing=config.ladder[0] / (config.nodes - 1),
        m=config.dimension,
        dt=config.dt,
        theta=config.theta,
        gradient_treatment=config.gradient,
        t_final=config.t_final,
    )
    traj, convergence = run_exhaustion(config.preset, plan)
    report = DiagnosticsReport(convergence=convergence)
    return traj, convergence.levels[-1].bounds, report


def incompleteness_command(config: RunConfig, logger):
    preset = config.preset
    euclidean = preset.background is BackgroundKind.EUCLIDEAN
    base = config.r_min if euclidean else 1.0
    domains = config.domains
    spacing = (domains[-1] - (config.r_min if euclidean else 0.0)) / (config.nodes - 1)
    completeness = completeness_scan(
        preset,
        domains,
        config.t_samples,
        m=config.dimension,
        spacing=spacing,
        dt=config.dt,
        base_radius=base,
    )
    logger.info(f"📏 Verdict: {completeness.verdict_trend.value}")
    return DiagnosticsReport(completeness=completeness)


def execute(config: RunConfig) -> DiagnosticsReport:
    """Run one command, write every output file, return the diagnostics."""
    target_dir = str(config.output)
    os.makedirs(target_dir, exist_ok=True)
    logger = setup_logger(os.path.join(target_dir, "run.log"))
    logger.info(f"🚀 Starting '{config.command}' ({config.profile} profile)...")

    files = ["run.log", "run.env", "summary.md"]
    write_run_env(os.path.join(target_dir, "run.env"), config.as_env())
    traj = bounds = None
    if config.command == "run":
        traj, bounds, report = run_command(config, logger)
    elif config.command == "barriers":
        traj, bounds, report = barriers_command(config, logger)
    elif config.command == "compare":
        traj, bounds, report, other = compare_command(config, logger)
        export_trajectory(
            other,
            os.path.join(target_dir, "comparison.csv"),
            config=config.to_dict(),
        )
        files += ["comparison.csv", "comparison.json"]
    elif config.command == "exhaust":
        traj, bounds, report = exhaust_command(config, logger)
    else:
        report = incompleteness_command(config, logger)

    if traj is not None:
        export_trajectory(
            traj,
            os.path.join(target_dir, "trajectory.csv"),
            config=config.to_dict(),
            bounds=bounds,
            diagnostics=report,
        )
        files += ["trajectory.csv", "trajectory.json"]
        if isinstance(traj.boundary, BoundaryProfile):
            export_boundary_table(
                traj.boundary,
                traj.times - traj.times[0],
                os.path.join(target_dir, "boundary.csv"),
            )
            files.append("boundary.csv")
    else:
        export_report(
            os.path.join(target_dir, "report.json"),
            config=config.to_dict(),
            diagnostics=report,
        )
        files.append("report.json")

    checks = []
    if report.barriers is not None:
        checks += [check.to_dict() for check in report.barriers.checks]
    checks += [check.to_dict() for check in report.checks]
    notes = [f"{key}: {value}" for key, value in sorted(report.extra.items())]
    if traj is not None and not traj.mesh.has_origin:
        notes.append("inner boundary: Dirichlet, initial value held")
    render_summary(
        os.path.join(target_dir, "summary.md"),
        {
            "command": config.command,
            "passed": report.passed,
            "config": config.as_env(),
            "bounds": None if bounds is None else bounds.to_dict(),
            "checks": checks,
            "notes": notes,
            "files": sorted(files),
        },
    )
    logger.info(f"{'✅' if report.passed else '❌'} '{config.command}' finished")
    return report

