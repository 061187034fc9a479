# src/yamabe_flow/exhaustion.py
"""Nested-ball exhaustion and restart legs.

Each ladder level solves the Dirichlet problem on B_ell with boundary data
built from that ball's own kappa; the levels share one radial spacing so the
inner-ball nodes coincide and can be compared directly.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from yamabe_flow.boundary_data import default_boundary
from yamabe_flow.diagnostics import (
    BARRIER_TOLERANCE,
    CheckRecord,
    gradient_quantity_sup,
    sandwich_slacks,
    slack_record,
)
from yamabe_flow.errors import ConfigurationError, LevelFailure, YamabeFlowError
from yamabe_flow.geometry import BackgroundKind, RadialMesh
from yamabe_flow.initial_data import DataBounds, InitialPreset, make_initial
from yamabe_flow.radial_solver import (
    FlowTrajectory,
    GradientTreatment,
    Leg,
    SolveConfig,
    curvature_pair,
    solve,
)

logger = logging.getLogger(__name__)

HORIZON_FACTOR = 0.9
GRADIENT_GROWTH_LIMIT = 1.1
DIFFERENCE_FLOOR = 1e-10


@dataclass(frozen=True)
class ExhaustionPlan:
    ladder: tuple[float, ...]
    spacing: float = 0.02
    m: int = 3
    dt: float = 1e-3
    theta: float = 1.0
    gradient_treatment: GradientTreatment = GradientTreatment.IMPLICIT_LINEARIZED
    horizon_factor: float = HORIZON_FACTOR
    t_final: float | None = None
    inner_radius: float | None = None
    checkpoints: int = 10
    gradient_margin: float = 1.0
    max_workers: int = 1

    def __post_init__(self):
        ladder = tuple(float(x) for x in self.ladder)
        if len(ladder) < 3:
            raise ConfigurationError(f"the ladder needs >= 3 levels, got {len(ladder)}")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigurationError(f"ladder radii must increase strictly: {ladder}")
        if not 0 < self.horizon_factor < 1:
            raise ConfigurationError(
                f"horizon factor must lie in (0, 1), got {self.horizon_factor}"
            )
        if self.checkpoints < 1:
            raise ConfigurationError("need at least one checkpoint")
        object.__setattr__(self, "ladder", ladder)
        inner = ladder[0] if self.inner_radius is None else float(self.inner_radius)
        if not 0 < inner <= ladder[0]:
            raise ConfigurationError(
                f"inner radius {inner} must lie in (0, ell_1 = {ladder[0]}]"
            )
        object.__setattr__(self, "inner_radius", inner)

    def mesh(self, ell: float) -> RadialMesh:
        return RadialMesh.with_spacing(
            BackgroundKind.HYPERBOLIC, self.m, 0.0, ell, self.spacing
        )

    def horizon(self, bounds: Sequence[DataBounds]) -> float:
        """First-leg length: horizon_factor / max K0, capped by t_final, on the dt grid."""
        K0 = max(b.K0 for b in bounds)
        horizon = self.horizon_factor / K0 if K0 > 0 else math.inf
        if self.t_final is not None:
            horizon = min(horizon, self.t_final)
        if not math.isfinite(horizon):
            raise ConfigurationError(
                "K0 = 0 on every level: give t_final to bound the first leg"
            )
        steps = math.floor(horizon / self.dt + 1e-9)
        if steps < 1:
            raise ConfigurationError(f"horizon {horizon:.6g} is shorter than dt")
        return steps * self.dt

    def solve_config(self, horizon: float) -> SolveConfig:
        return SolveConfig(
            dt=self.dt,
            t_final=horizon,
            gradient_treatment=self.gradient_treatment,
            theta=self.theta,
        )


@dataclass(frozen=True)
class LevelResult:
    level: int
    radius: float
    bounds: DataBounds
    trajectory: FlowTrajectory
    gradient_sup: float
    sandwich: tuple[CheckRecord, CheckRecord]

    @property
    def sandwich_passed(self) -> bool:
        return all(record.passed for record in self.sandwich)

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "radius": self.radius,
            "bounds": self.bounds.to_dict(),
            "gradient_sup": self.gradient_sup,
            "sandwich": [record.to_dict() for record in self.sandwich],
        }


@dataclass(frozen=True)
class ConvergenceReport:
    levels: tuple[LevelResult, ...]
    differences: np.ndarray
    checkpoint_times: np.ndarray
    inner_radius: float
    horizon: float

    @property
    def radii(self) -> tuple[float, ...]:
        return tuple(level.radius for level in self.levels)

    @property
    def gradient_sups(self) -> np.ndarray:
        return np.array([level.gradient_sup for level in self.levels])

    @property
    def monotone(self) -> bool:
        """d_k non-increasing, up to differences that are rounding noise."""
        d = self.differences
        return bool(np.all(d[1:] <= d[:-1] + DIFFERENCE_FLOOR))

    @property
    def gradient_spread(self) -> float:
        g = self.gradient_sups
        if g.max() == 0:
            return 0.0
        return float((g.max() - g.min()) / g.max())

    @property
    def gradient_bounded(self) -> bool:
        g = self.gradient_sups
        return bool(g[-1] <= GRADIENT_GROWTH_LIMIT * g[1] + DIFFERENCE_FLOOR)

    @property
    def sup_u0_finest(self) -> float:
        return self.levels[-1].bounds.C0

    @property
    def passed(self) -> bool:
        return (
            all(level.sandwich_passed for level in self.levels)
            and self.monotone
            and self.gradient_bounded
        )

    def to_dict(self) -> dict:
        return {
            "radii": list(self.radii),
            "inner_radius": self.inner_radius,
            "horizon": self.horizon,
            "checkpoint_times": self.checkpoint_times.tolist(),
            "differences": self.differences.tolist(),
            "monotone": self.monotone,
            "gradient_sups": self.gradient_sups.tolist(),
            "gradient_spread": self.gradient_spread,
            "gradient_bounded": self.gradient_bounded,
            "sup_u0_finest": self.sup_u0_finest,
            "passed": self.passed,
            "levels": [level.to_dict() for level in self.levels],
        }


def _solve_level(level, ell, u0, boundary, bounds, plan, horizon) -> LevelResult:
    try:
        traj = solve(u0, boundary, plan.solve_config(horizon))
    except YamabeFlowError as e:
        raise LevelFailure(level, ell, e) from e
    lower, upper = sandwich_slacks(traj, bounds.min_u0, bounds.C0)
    sandwich = (
        slack_record("sandwich_lower", lower, traj.mesh, traj.times, BARRIER_TOLERANCE),
        slack_record("sandwich_upper", upper, traj.mesh, traj.times, BARRIER_TOLERANCE),
    )
    gradient_sup = float(gradient_quantity_sup(traj, plan.gradient_margin).max())
    logger.info(
        f"🪜 Level {level} (ell = {ell:g}): K0 = {bounds.K0:.6g}, "
        f"sup w = {gradient_sup:.6g}"
    )
    return LevelResult(level, ell, bounds, traj, gradient_sup, sandwich)


def run_exhaustion(
    preset: InitialPreset, plan: ExhaustionPlan
) -> tuple[FlowTrajectory, ConvergenceReport]:
    """Solve every ladder level and measure convergence on the inner ball.

    Returns the finest level restricted to the inner ball and the report.
    """
    if preset.background is BackgroundKind.EUCLIDEAN:
        raise ConfigurationError("exhaustion runs on hyperbolic space only")

    setups = []
    for level, ell in enumerate(plan.ladder, start=1):
        u0 = make_initial(preset, plan.mesh(ell))
        boundary, bounds, _ = default_boundary(u0)
        setups.append((level, ell, u0, boundary, bounds))
    horizon = plan.horizon([setup[-1] for setup in setups])
    logger.info(f"🚀 Exhausting {len(setups)} levels to t = {horizon:.6g}")

    if plan.max_workers > 1:
        with ThreadPoolExecutor(max_workers=plan.max_workers) as pool:
            futures = [
                pool.submit(_solve_level, *setup, plan, horizon) for setup in setups
            ]
            levels = tuple(future.result() for future in futures)
    else:
        levels = tuple(_solve_level(*setup, plan, horizon) for setup in setups)

    n_steps = len(levels[0].trajectory) - 1
    picks = np.unique(
        np.round(np.arange(1, plan.checkpoints + 1) * n_steps / plan.checkpoints)
    ).astype(int)
    n_inner = levels[0].trajectory.mesh.truncated(plan.inner_radius).n
    differences = np.array(
        [
            np.max(
                np.abs(
                    a.trajectory.values[picks, :n_inner]
                    - b.trajectory.values[picks, :n_inner]
                )
            )
            for a, b in zip(levels, levels[1:])
        ]
    )
    report = ConvergenceReport(
        levels=levels,
        differences=differences,
        checkpoint_times=levels[0].trajectory.times[picks],
        inner_radius=plan.inner_radius,
        horizon=horizon,
    )
    logger.info(
        f"{'✅' if report.passed else '❌'} Interior differences "
        f"{np.array2string(differences, precision=3)}"
    )
    return levels[-1].trajectory.restricted(plan.inner_radius), report


def _time_step(flow: FlowTrajectory) -> float:
    if flow.records:
        return flow.records[-1].dt
    if len(flow) < 2:
        raise ConfigurationError("cannot infer dt from a single-state trajectory")
    return float(flow.times[-1] - flow.times[-2])


def restart_curvature_bound(flow: FlowTrajectory, k: int) -> float:
    """K1 = max(0, sup R) over the curvature pair of the step ending at state k."""
    if len(flow) < 2:
        raise ConfigurationError("a restart needs at least two computed states")
    lo = max(k - 1, 0)
    pair = curvature_pair(flow.state(lo), flow.state(lo + 1))
    return max(0.0, float(np.max(pair.R_elliptic.values)))


def extend_time(
    flow: FlowTrajectory,
    restart_epsilon: float | None = None,
    next_horizon: float | None = None,
    solve_config: SolveConfig | None = None,
    until: float | None = None,
    horizon_factor: float = HORIZON_FACTOR,
    overlap_tolerance: float = 1e-2,
) -> FlowTrajectory:
    """Restart at T - eps from the computed state and append one more leg.

    eps defaults to a tenth of the last leg and must stay below T/5. The new
    leg runs for min(next_horizon, horizon_factor / K1) with K1 the positive
    part of the spatial curvature from the curvature pair at the restart.
    next_horizon defaults to the last leg's length, or reaches `until` when
    that is given. The solutions are compared on the overlap [T - eps, T].
    """
    T = float(flow.times[-1])
    last_start = flow.legs[-1].start if flow.legs else float(flow.times[0])
    eps = (T - last_start) / 10 if restart_epsilon is None else restart_epsilon
    if not 0 < eps < T / 5:
        raise ConfigurationError(f"restart epsilon must lie in (0, T/5), got {eps}")
    dt = _time_step(flow)
    k = flow.index_of_time(T - eps)
    restart = flow.state(k)

    u1 = restart.field
    boundary, _, _ = default_boundary(u1)
    K1 = restart_curvature_bound(flow, k)
    if until is not None:
        length = until - restart.t
    elif next_horizon is not None:
        length = next_horizon
    else:
        length = T - last_start
    if K1 > 0:
        length = min(length, horizon_factor / K1)
    steps = math.floor(length / dt + 1e-9)
    if steps < 1:
        raise ConfigurationError(f"next leg ({length:.6g}) is shorter than dt")

    template = solve_config or SolveConfig(dt=dt, t_final=dt)
    config = replace(template, dt=dt, t_final=steps * dt)
    leg = solve(u1, boundary, config, t_start=restart.t)

    overlap = min(len(flow) - k, len(leg))
    difference = float(
        np.max(np.abs(flow.values[k : k + overlap] - leg.values[:overlap]))
    )
    if difference > overlap_tolerance:
        logger.warning(
            f"⚠️ Overlap on [{restart.t:.6g}, {T:.6g}] differs by {difference:.3g}"
        )
    logger.info(
        f"🔁 Restarted at t = {restart.t:.6g} with K1 = {K1:.6g}; "
        f"new leg ends at t = {leg.times[-1]:.6g}"
    )
    return FlowTrajectory(
        flow.mesh,
        np.concatenate([flow.times[: k + 1], leg.times[1:]]),
        np.concatenate([flow.values[: k + 1], leg.values[1:]]),
        flow.records[:k] + leg.records,
        flow.legs
        + (Leg(restart.t, float(leg.times[-1]), K1, difference, boundary),),
    )


def extend_to(
    flow: FlowTrajectory,
    target_time: float,
    restart_fraction: float = 0.1,
    solve_config: SolveConfig | None = None,
    max_legs: int = 100,
) -> FlowTrajectory:
    """Restart repeatedly until the flow reaches target_time."""
    if not 0 < restart_fraction < 0.2:
        raise ConfigurationError(
            f"restart fraction must lie in (0, 0.2), got {restart_fraction}"
        )
    for _ in range(max_legs):
        T = float(flow.times[-1])
        if T >= target_time - 1e-9:
            return flow
        last_start = flow.legs[-1].start if flow.legs else float(flow.times[0])
        eps = restart_fraction * (T - last_start)
        flow = extend_time(
            flow,
            restart_epsilon=eps,
            until=target_time,
            solve_config=solve_config,
        )
        if flow.times[-1] <= T:
            raise ConfigurationError(f"restart at t = {T:.6g} made no progress")
    raise ConfigurationError(f"target t = {target_time} not reached in {max_legs} legs")
