# src/yamabe_flow/boundary_data.py
"""Parabolic boundary data on the sphere r = ell.

phi(t) = u0 + m(m-1) t + v psi(kappa t) / kappa, where v = -u0 R_g0 - m(m-1)
is the initial velocity relative to the big-bang flow m(m-1) t g_H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from yamabe_flow.errors import ConfigurationError, DomainError, InvalidFieldError
from yamabe_flow.geometry import RadialField
from yamabe_flow.initial_data import DataBounds, data_bounds, scalar_curvature

SLACK_TOLERANCE = 1e-12


class DirichletData(Protocol):
    def value(self, t: float) -> float: ...

    def derivative(self, t: float) -> float: ...

    def to_dict(self) -> dict: ...


def _checked(s):
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise DomainError(f"psi is defined for s >= 0, got {s}")
    return s_arr


def psi(s):
    s_arr = _checked(s)
    ramp = (s_arr <= 1.0).astype(float)
    out = 1.0 / 3.0 + (s_arr - 1.0) ** 3 / 3.0 * ramp
    return float(out) if out.ndim == 0 else out


def psi_prime(s):
    s_arr = _checked(s)
    ramp = (s_arr <= 1.0).astype(float)
    out = (s_arr - 1.0) ** 2 * ramp
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BoundaryProfile:
    u0_boundary: float
    v_boundary: float
    kappa: float
    m: int

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigurationError(f"kappa must be positive, got {self.kappa}")
        if not self.u0_boundary > 0:
            raise InvalidFieldError(
                f"boundary value of u0 must be positive, got {self.u0_boundary}"
            )
        limit = 2 * self.u0_boundary * self.kappa
        if abs(self.v_boundary) > limit * (1 + 1e-12):
            raise ConfigurationError(
                f"|v| = {abs(self.v_boundary):.6g} exceeds 2 u0 kappa = {limit:.6g}"
            )

    @classmethod
    def from_fields(
        cls, u0: RadialField, Rg0: RadialField, bounds: DataBounds
    ) -> BoundaryProfile:
        m = u0.mesh.m
        u_b = float(u0.values[-1])
        v = -u_b * float(Rg0.values[-1]) - m * (m - 1)
        return cls(u0_boundary=u_b, v_boundary=v, kappa=bounds.kappa, m=m)

    @property
    def big_bang_rate(self) -> float:
        return float(self.m * (self.m - 1))

    def value(self, t):
        return phi(self, t)

    def derivative(self, t):
        return phi_prime(self, t)

    def to_dict(self) -> dict:
        return {
            "kind": "profile",
            "u0_boundary": self.u0_boundary,
            "v_boundary": self.v_boundary,
            "kappa": self.kappa,
            "m": self.m,
        }


@dataclass(frozen=True)
class StaticBoundary:
    """Dirichlet data held at a fixed value for all times."""

    u_boundary: float

    def value(self, t):
        return self.u_boundary + 0.0 * np.asarray(t, dtype=float)

    def derivative(self, t):
        return 0.0 * np.asarray(t, dtype=float)

    def to_dict(self) -> dict:
        return {"kind": "static", "u_boundary": self.u_boundary}


def phi(profile: BoundaryProfile, t):
    t_arr = np.asarray(t, dtype=float)
    k = profile.kappa
    out = (
        profile.u0_boundary
        + profile.big_bang_rate * t_arr
        + profile.v_boundary * psi(k * t_arr) / k
    )
    return float(out) if np.ndim(out) == 0 else out


def phi_prime(profile: BoundaryProfile, t):
    t_arr = np.asarray(t, dtype=float)
    out = profile.big_bang_rate + profile.v_boundary * psi_prime(profile.kappa * t_arr)
    return float(out) if np.ndim(out) == 0 else out


def boundary_curvature(profile: BoundaryProfile, t):
    """R on the boundary sphere, -phi'(t)/phi(t)."""
    value = np.asarray(phi(profile, t))
    if np.any(value <= 0):
        raise InvalidFieldError(f"boundary data became non-positive at t = {t}")
    out = -np.asarray(phi_prime(profile, t)) / value
    return float(out) if out.ndim == 0 else out


def default_boundary(u0: RadialField) -> tuple[DirichletData, DataBounds, RadialField]:
    """The big-bang boundary profile on H^m; initial values held on the flat background."""
    Rg0 = scalar_curvature(u0, form="eta")
    bounds = data_bounds(u0, Rg0)
    if u0.mesh.is_hyperbolic:
        return BoundaryProfile.from_fields(u0, Rg0, bounds), bounds, Rg0
    return StaticBoundary(float(u0.values[-1])), bounds, Rg0


@dataclass(frozen=True)
class BoundaryCheck:
    name: str
    slack: np.ndarray
    worst_slack: float
    worst_time: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "worst_slack": self.worst_slack,
            "worst_time": self.worst_time,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ProfileReport:
    checks: tuple[BoundaryCheck, ...]
    epsilon: float
    K0: float

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def get(self, name: str) -> BoundaryCheck:
        return next(check for check in self.checks if check.name == name)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "K0": self.K0,
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
        }


def _summarize(name, t_grid, slack, tolerance) -> BoundaryCheck:
    finite = np.isfinite(slack)
    if not finite.any():
        return BoundaryCheck(name, slack, math.inf, math.nan, True)
    idx = int(np.nanargmin(np.where(finite, slack, np.nan)))
    worst = float(slack[idx])
    return BoundaryCheck(name, slack, worst, float(t_grid[idx]), worst >= -tolerance)


def check_profile_bounds(
    profile: BoundaryProfile,
    K0: float,
    eps: float,
    t_grid,
    tolerance: float = SLACK_TOLERANCE,
) -> ProfileReport:
    t = np.asarray(t_grid, dtype=float)
    value = phi(profile, t)
    rate = profile.big_bang_rate * t
    curvature = boundary_curvature(profile, t)
    u_b = profile.u0_boundary

    lower_phi = value - (u_b / 3 + rate)
    upper_phi = (5 * u_b / 3 + rate) - value
    lower_R = curvature + 1.0 / (t + eps)
    if K0 > 0:
        valid = t < 1.0 / K0
        bound = np.where(valid, K0 / np.where(valid, 1 - K0 * t, 1.0), np.nan)
        upper_R = np.where(valid, bound - curvature, np.nan)
    else:
        upper_R = -curvature

    checks = (
        _summarize("phi_lower", t, lower_phi, tolerance),
        _summarize("phi_upper", t, upper_phi, tolerance),
        _summarize("curvature_lower", t, lower_R, tolerance),
        _summarize("curvature_upper", t, upper_R, tolerance),
    )
    return ProfileReport(checks, eps, K0)


def admissible_epsilon(profile: BoundaryProfile, t_grid, cap: float) -> float:
    """Largest eps <= cap with -phi'/phi >= -1/(t + eps) on the grid."""
    t = np.asarray(t_grid, dtype=float)
    value = np.asarray(phi(profile, t))
    rate = np.asarray(phi_prime(profile, t))
    rising = rate > 0
    if not rising.any():
        return cap
    return float(min(cap, np.min(value[rising] / rate[rising] - t[rising])))


def boundary_table(profile: BoundaryProfile, t_grid) -> dict[str, np.ndarray]:
    t = np.asarray(t_grid, dtype=float)
    return {
        "t": t,
        "phi": np.asarray(phi(profile, t)),
        "dphi_dt": np.asarray(phi_prime(profile, t)),
        "R_boundary": np.asarray(boundary_curvature(profile, t)),
    }
