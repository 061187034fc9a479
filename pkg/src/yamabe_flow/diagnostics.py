# src/yamabe_flow/diagnostics.py
"""Barrier, comparison and length checks on computed flows.

Every check reports slack (positive = inequality holds) instead of raising;
exceptions are reserved for malformed inputs.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gamma

from yamabe_flow.boundary_data import (
    BoundaryProfile,
    ProfileReport,
    admissible_epsilon,
    boundary_curvature,
    default_boundary,
)
from yamabe_flow.errors import ConfigurationError
from yamabe_flow.geometry import (
    BackgroundKind,
    RadialField,
    RadialMesh,
    coord_r_from_s,
    coord_s_from_r,
    flat_conformal_factor,
    radial_gradient,
    radial_length,
)
from yamabe_flow.initial_data import DataBounds, InitialPreset, PresetKind, make_initial
from yamabe_flow.radial_solver import FlowTrajectory, SolveConfig, curvature_series, solve

logger = logging.getLogger(__name__)

BARRIER_TOLERANCE = 1e-8
COMPARISON_TOLERANCE = 1e-10
SYMMETRIC_CASE = "symmetric case"


@dataclass(frozen=True)
class CheckRecord:
    name: str
    worst_slack: float
    worst_node: float
    worst_time: float
    status: str
    label: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "worst_slack": self.worst_slack,
            "worst_node": self.worst_node,
            "worst_time": self.worst_time,
            "status": self.status,
            "label": self.label,
        }


def slack_record(name, slack, mesh, times, tolerance, label="") -> CheckRecord:
    """Reduce a (time x node) slack table to its worst entry."""
    slack = np.asarray(slack, dtype=float)
    if slack.size == 0 or not np.isfinite(slack).any():
        return CheckRecord(name, math.inf, math.nan, math.nan, "skipped", label)
    masked = np.where(np.isfinite(slack), slack, np.inf)
    k, i = np.unravel_index(int(np.argmin(masked)), masked.shape)
    worst = float(masked[k, i])
    status = "pass" if worst >= -tolerance else "fail"
    return CheckRecord(
        name, worst, float(mesh.nodes[i]), float(times[k]), status, label
    )


@dataclass(frozen=True)
class BarrierReport:
    checks: tuple[CheckRecord, ...]
    tolerance: float
    epsilon: float

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def get(self, name: str) -> CheckRecord:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "epsilon": self.epsilon,
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
        }


def sandwich_slacks(
    traj: FlowTrajectory, min_u0: float, max_u0: float
) -> tuple[np.ndarray, np.ndarray]:
    m = traj.mesh.m
    big_bang = m * (m - 1) * traj.times[:, None]
    lower = traj.values - (big_bang + min_u0 / 3)
    upper = (big_bang + 5 * max_u0 / 3) - traj.values
    return lower, upper


def check_barriers(
    traj: FlowTrajectory,
    bounds: DataBounds,
    b_flat: float | None = None,
    epsilon: float | None = None,
    tolerance: float = BARRIER_TOLERANCE,
) -> BarrierReport:
    """The big-bang sandwich on u, the curvature bounds and the two barriers.

    Checks, slack >= 0 when the inequality holds:

        sandwich_lower/upper   m(m-1)t + min u0/3 <= u <= m(m-1)t + 5 max u0/3
        curvature_lower/upper  -1/(t + eps) <= R <= K0/(1 - K0 t)
        flat_barrier_upper     u^eta <= (m(m-1)t)^eta + (b h^-2)^eta
        big_bang_lower         u >= m(m-1)t

    The curvature bounds are checked on the first leg for t < 1/K0 with the
    eta-form curvature; the Dirichlet node takes the exact boundary
    curvature -phi'/phi when the boundary is the constructed profile.
    """
    mesh = traj.mesh
    if not mesh.is_hyperbolic:
        raise ConfigurationError("barrier checks need a hyperbolic trajectory")
    m, eta = mesh.m, mesh.eta
    times = traj.times
    records = []

    lower, upper = sandwich_slacks(traj, bounds.min_u0, bounds.C0)
    records.append(slack_record("sandwich_lower", lower, mesh, times, tolerance))
    records.append(slack_record("sandwich_upper", upper, mesh, times, tolerance))

    first_leg = times <= traj.first_leg_end + 1e-12
    if bounds.K0 > 0:
        first_leg &= times < 1.0 / bounds.K0
    leg_times = times[first_leg]
    curvature = curvature_series(traj, form="eta")[first_leg]
    boundary = traj.boundary
    if isinstance(boundary, BoundaryProfile):
        curvature[:, -1] = boundary_curvature(boundary, leg_times - times[0])
    eps = epsilon
    if eps is None:
        eps = bounds.eps_floor
        if isinstance(boundary, BoundaryProfile):
            eps = admissible_epsilon(boundary, leg_times - times[0], eps)
    t_col = leg_times[:, None] - times[0]
    records.append(
        slack_record("curvature_lower", curvature + 1 / (t_col + eps), mesh, leg_times, tolerance)
    )
    w = bounds.K0 / (1 - bounds.K0 * t_col)
    records.append(slack_record("curvature_upper", w - curvature, mesh, leg_times, tolerance))

    if b_flat is None:
        records.append(
            CheckRecord("flat_barrier_upper", math.inf, math.nan, math.nan, "skipped")
        )
    else:
        f = flat_conformal_factor(mesh.nodes, b_flat)
        if np.any(traj.values[0] > f * (1 + 1e-12)):
            records.append(
                CheckRecord(
                    "flat_barrier_upper",
                    math.inf,
                    math.nan,
                    math.nan,
                    "skipped",
                    "initial data not below b g_E",
                )
            )
        else:
            barrier = (m * (m - 1) * times[:, None]) ** eta + f[None, :] ** eta
            slack = barrier - traj.values**eta
            records.append(slack_record("flat_barrier_upper", slack, mesh, times, tolerance))

    big_bang = m * (m - 1) * times[:, None]
    records.append(
        slack_record(
            "big_bang_lower",
            traj.values - big_bang,
            mesh,
            times,
            tolerance,
            SYMMETRIC_CASE,
        )
    )
    report = BarrierReport(tuple(records), tolerance, eps)
    logger.info(
        f"{'✅' if report.passed else '❌'} Barrier checks: "
        + ", ".join(f"{c.name}={c.status}" for c in report.checks)
    )
    return report


def check_incompleteness_barrier(
    traj: FlowTrajectory, b: float, tolerance: float = 1e-2
) -> CheckRecord:
    """u <= b |x|^-4 on the flat background, the barrier behind incompleteness.

    Slack is relative to the barrier, so the tolerance bounds the relative
    discretization error of the static profile.
    """
    mesh = traj.mesh
    if mesh.is_hyperbolic or mesh.r_min <= 0:
        raise ConfigurationError("the power-law barrier needs a flat annulus mesh")
    barrier = b * mesh.nodes**-4.0
    # compare relative to the barrier: it spans many decades across the annulus
    slack = (barrier[None, :] - traj.values) / barrier[None, :]
    return slack_record("power_law_upper", slack, mesh, traj.times, tolerance)


# -- area-difference functional on the log-polar cylinder ---------------------


def sphere_area(m: int) -> float:
    """|S^(m-1)|, the area of the unit sphere in R^m."""
    return 2 * math.pi ** (m / 2) / gamma(m / 2)


def cutoff(s, S: float, s0: float):
    """C^2 cutoff: 0 on [0, S], 1 on [s0, inf), quintic smoothstep between."""
    x = np.clip((np.asarray(s, dtype=float) - S) / (s0 - S), 0.0, 1.0)
    return x**3 * (10 - 15 * x + 6 * x**2)


def _check_window(S: float, s0: float):
    if not (0 < S <= s0 / 3 and s0 <= math.log(2)):
        raise ConfigurationError(
            f"need 0 < S <= s0/3 < s0 <= ln 2, got S = {S}, s0 = {s0}"
        )


def log_polar_grid(mesh: RadialMesh, S: float, n_s: int = 2001) -> np.ndarray:
    """Uniform s-grid on [S, s_max], s_max the image of the first positive node."""
    positive = mesh.nodes[mesh.nodes > 0]
    s_edge = coord_s_from_r(mesh.r_max)
    if s_edge > S:
        raise ConfigurationError(
            f"the mesh edge r = {mesh.r_max:g} sits at s = {s_edge:.4g} > S = {S:g}"
        )
    return np.linspace(S, coord_s_from_r(positive[0]), n_s)


def log_polar_view(u: RadialField, s_grid: np.ndarray) -> np.ndarray:
    """U(s) = u(r(s)) / sinh(s)^2, the factor against ds^2 + g_sphere."""
    r = coord_r_from_s(s_grid)
    return u.at(r) / np.sinh(s_grid) ** 2


def area_difference_j(
    U: np.ndarray,
    V: np.ndarray,
    s_grid: np.ndarray,
    S: float,
    s0: float,
    eta: float,
    m: int,
) -> float:
    """J = int_{s>S} (V^(eta+1) - U^(eta+1))_+ cutoff ds, times |S^(m-1)|."""
    _check_window(S, s0)
    integrand = np.maximum(V ** (eta + 1) - U ** (eta + 1), 0.0) * cutoff(s_grid, S, s0)
    keep = s_grid >= S
    return sphere_area(m) * float(trapezoid(integrand[keep], s_grid[keep]))


@dataclass(frozen=True)
class ComparisonReport:
    ordering_violation: float
    worst_time: float
    worst_node: float
    times: np.ndarray
    J_series: np.ndarray
    S: float
    s0: float
    initial_ordered: bool
    tolerance: float = COMPARISON_TOLERANCE

    @property
    def label(self) -> str:
        return "ordered-initial" if self.initial_ordered else "unordered-initial"

    @property
    def passed(self) -> bool:
        return self.ordering_violation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "ordering_violation": self.ordering_violation,
            "worst_time": self.worst_time,
            "worst_node": self.worst_node,
            "label": self.label,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "parameters": {"S": self.S, "s0": self.s0, "cutoff": "quintic C2 bridge"},
            "J_max": float(np.max(self.J_series)) if self.J_series.size else 0.0,
            "J_series": self.J_series.tolist(),
            "times": self.times.tolist(),
        }


def compare_flows(
    traj_a: FlowTrajectory,
    traj_b: FlowTrajectory,
    S: float = math.log(2) / 3,
    s0: float = math.log(2),
    n_s: int = 2001,
    tolerance: float = COMPARISON_TOLERANCE,
) -> ComparisonReport:
    """Ordering of g (traj_a, factor u) over g~ (traj_b, factor u~).

    Reports max (u~ - u)_+ over all nodes and times and the J series.
    """
    if traj_a.mesh != traj_b.mesh:
        raise ConfigurationError("compared flows live on different meshes")
    if traj_a.times.shape != traj_b.times.shape or not np.allclose(
        traj_a.times, traj_b.times, rtol=0, atol=1e-12
    ):
        raise ConfigurationError("compared flows use different time grids")
    _check_window(S, s0)
    mesh = traj_a.mesh
    gap = traj_b.values - traj_a.values
    k, i = np.unravel_index(int(np.argmax(gap)), gap.shape)
    violation = max(0.0, float(gap[k, i]))
    initial_ordered = bool(np.all(traj_b.values[0] <= traj_a.values[0]))

    s_grid = log_polar_grid(mesh, S, n_s)
    J = np.array(
        [
            area_difference_j(
                log_polar_view(RadialField(mesh, traj_a.values[j]), s_grid),
                log_polar_view(RadialField(mesh, traj_b.values[j]), s_grid),
                s_grid,
                S,
                s0,
                mesh.eta,
                mesh.m,
            )
            for j in range(len(traj_a))
        ]
    )
    return ComparisonReport(
        ordering_violation=violation,
        worst_time=float(traj_a.times[k]),
        worst_node=float(mesh.nodes[i]),
        times=traj_a.times,
        J_series=J,
        S=S,
        s0=s0,
        initial_ordered=initial_ordered,
        tolerance=tolerance,
    )


# -- completeness -------------------------------------------------------------


class VerdictTrend(str, Enum):
    DIVERGING_WITH_DOMAIN = "DivergingWithDomain"
    UNIFORMLY_BOUNDED = "UniformlyBounded"


@dataclass(frozen=True)
class CompletenessReport:
    background: BackgroundKind
    domain_sizes: tuple[float, ...]
    times: np.ndarray
    lengths: np.ndarray  # (times, domain sizes)
    reference: np.ndarray  # closed-form barrier length per entry
    base_radius: float
    growth: float
    divergence_threshold: float
    barrier_slack: float
    slack_tolerance: float

    @property
    def verdict_trend(self) -> VerdictTrend:
        if self.growth > self.divergence_threshold:
            return VerdictTrend.DIVERGING_WITH_DOMAIN
        return VerdictTrend.UNIFORMLY_BOUNDED

    @property
    def passed(self) -> bool:
        return self.barrier_slack >= -self.slack_tolerance

    def to_dict(self) -> dict:
        return {
            "background": self.background.value,
            "domain_sizes": list(self.domain_sizes),
            "times": self.times.tolist(),
            "lengths": self.lengths.tolist(),
            "reference": self.reference.tolist(),
            "base_radius": self.base_radius,
            "growth": self.growth,
            "divergence_threshold": self.divergence_threshold,
            "barrier_slack": self.barrier_slack,
            "slack_tolerance": self.slack_tolerance,
            "verdict_trend": self.verdict_trend.value,
            "passed": self.passed,
        }


def _static_reference_length(
    preset: InitialPreset, base_radius: float, size: float
) -> float:
    """Initial radial length of a flat-background preset; an upper bound while R >= 0."""
    if preset.kind is PresetKind.PUNCTURED_SPHERE:
        return 2.0 * (math.atan(size) - math.atan(base_radius))
    if preset.kind is PresetKind.POWER_LAW:
        b = preset.params[0]
        return math.sqrt(b) * (1 / base_radius - 1 / size)
    raise ConfigurationError(
        f"no reference length for preset '{preset.kind.value}' on R^m"
    )


def completeness_scan(
    preset: InitialPreset,
    domain_sizes: Sequence[float],
    t_samples: Sequence[float],
    m: int = 3,
    spacing: float = 0.02,
    dt: float = 1e-3,
    base_radius: float = 1.0,
    divergence_threshold: float = 1.0,
    slack_tolerance: float = 1e-2,
) -> CompletenessReport:
    """Radial lengths from base_radius to the domain edge across domains and times.

    Hyperbolic runs are measured against sqrt(m(m-1)t)(ell - base), the
    big-bang lower barrier. Flat-background runs are measured against their
    initial length, sqrt(b)(1/base - 1/R) for b|x|^-4 and 2(arctan R - arctan base)
    for the punctured sphere. The verdict compares the growth of the length
    between the smallest and the largest domain at the last sample time with
    divergence_threshold.
    """
    sizes = tuple(float(x) for x in domain_sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigurationError("domain sizes must be strictly increasing")
    samples = np.asarray(sorted(t_samples), dtype=float)
    background = preset.background or BackgroundKind.HYPERBOLIC
    hyperbolic = background is BackgroundKind.HYPERBOLIC
    r_min = 0.0 if hyperbolic else base_radius
    horizon = float(samples[-1])

    lengths = np.empty((len(samples), len(sizes)))
    reference = np.empty_like(lengths)
    for j, size in enumerate(sizes):
        n = max(4, int(round((size - r_min) / spacing)) + 1)
        mesh = RadialMesh(background, m, r_min, size, n)
        u0 = make_initial(preset, mesh)
        boundary, _, _ = default_boundary(u0)
        if horizon > 0:
            traj = solve(u0, boundary, SolveConfig(dt=dt, t_final=horizon))
        else:
            traj = FlowTrajectory(mesh, [0.0], [u0.values])
        for k, t in enumerate(samples):
            state = traj.state(traj.index_of_time(t))
            lengths[k, j] = radial_length(state.field, base_radius, size)
            if hyperbolic:
                reference[k, j] = math.sqrt(m * (m - 1) * t) * (size - base_radius)
            else:
                reference[k, j] = _static_reference_length(preset, base_radius, size)
        logger.info(f"📏 Lengths on domain {size:g}: {np.round(lengths[:, j], 6)}")

    if hyperbolic:
        barrier_slack = float(np.min(lengths - reference))
    else:
        barrier_slack = float(np.min(reference - lengths))
    return CompletenessReport(
        background=background,
        domain_sizes=sizes,
        times=samples,
        lengths=lengths,
        reference=reference,
        base_radius=base_radius,
        growth=float(lengths[-1, -1] - lengths[-1, 0]),
        divergence_threshold=divergence_threshold,
        barrier_slack=barrier_slack,
        slack_tolerance=slack_tolerance,
    )


# -- interior gradient quantity ------------------------------------------------


def gradient_quantity(u: np.ndarray, mesh: RadialMesh) -> np.ndarray:
    """w = U^(-1/2) |grad U|^2 with U = u^eta."""
    big_u = u**mesh.eta
    return big_u**-0.5 * radial_gradient(big_u, mesh) ** 2


def gradient_quantity_sup(traj: FlowTrajectory, margin: float = 1.0) -> np.ndarray:
    """Per-time sup of w over the ball of radius ell - margin."""
    mesh = traj.mesh
    if not mesh.is_hyperbolic:
        raise ConfigurationError("the gradient quantity is defined on H^m")
    if margin < 1.0 or mesh.r_max - margin <= mesh.r_min:
        raise ConfigurationError(f"bad margin {margin} for ell = {mesh.r_max}")
    inside = mesh.nodes <= mesh.r_max - margin + 1e-12 * mesh.spacing
    return np.array(
        [gradient_quantity(values, mesh)[inside].max() for values in traj.values]
    )


# -- refinement harness -------------------------------------------------------


def static_drift(traj: FlowTrajectory) -> float:
    """Sup over nodes and times of |u(t) - u(0)|."""
    return float(np.max(np.abs(traj.values - traj.values[0])))


def convergence_ratio(coarse_error: float, fine_error: float) -> float:
    return coarse_error / fine_error


def observed_order(coarse_error: float, fine_error: float, refinement: float = 2.0) -> float:
    return math.log(coarse_error / fine_error) / math.log(refinement)


@dataclass
class DiagnosticsReport:
    """Everything a command checked, serialized into the JSON sidecar."""

    barriers: BarrierReport | None = None
    profile: ProfileReport | None = None
    comparison: ComparisonReport | None = None
    completeness: CompletenessReport | None = None
    convergence: object | None = None
    checks: list[CheckRecord] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        parts = (
            self.barriers,
            self.profile,
            self.comparison,
            self.completeness,
            self.convergence,
        )
        return all(part.passed for part in parts if part is not None) and all(
            check.passed for check in self.checks
        )

    def to_dict(self) -> dict:
        out = {"passed": self.passed}
        for name in ("barriers", "profile", "comparison", "completeness", "convergence"):
            part = getattr(self, name)
            out[name] = None if part is None else part.to_dict()
        out["checks"] = [check.to_dict() for check in self.checks]
        out.update(self.extra)
        return out
