# src/yamabe_flow/geometry.py
"""Radial background geometry: hyperbolic space H^m and flat R^m.

Fields are sampled in the geodesic radius r. The Poincare radius
rho = tanh(r/2) and the log-polar coordinate s = -ln(rho) are derived views.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid

from yamabe_flow.errors import ConfigurationError, DomainError, InvalidFieldError

# coth(0) and 1/0: marks the node that takes the regularized origin stencil
ORIGIN = math.inf
LN2 = math.log(2.0)
# exact for the polynomial densities r^(m-1) up to m = 16
CELL_QUADRATURE_POINTS = 8


class BackgroundKind(str, Enum):
    HYPERBOLIC = "hyperbolic"
    EUCLIDEAN = "euclidean"


def _log_coth_half(x: np.ndarray) -> np.ndarray:
    # ln coth(x/2) = ln(1 + e^-x) - ln(1 - e^-x); an involution on (0, inf)
    tail = np.exp(-x)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_gap = np.where(x > LN2, np.log1p(-tail), np.log(-np.expm1(-x)))
    return np.log1p(tail) - log_gap


def coord_s_from_r(r):
    """Log-polar coordinate s = -ln(tanh(r/2)), defined for r > 0."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError(f"log-polar coordinate needs r > 0, got {r}")
    s = _log_coth_half(r_arr)
    return float(s) if s.ndim == 0 else s


def coord_r_from_s(s):
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0):
        raise DomainError(f"geodesic radius needs s > 0, got {s}")
    r = _log_coth_half(s_arr)
    return float(r) if r.ndim == 0 else r


@dataclass(frozen=True)
class RadialCoordinate:
    r: float

    def __post_init__(self):
        if self.r < 0:
            raise DomainError(f"geodesic radius must be >= 0, got {self.r}")

    @property
    def rho(self) -> float:
        return float(poincare_radius(self.r))

    @property
    def s(self) -> float:
        return math.inf if self.r == 0 else coord_s_from_r(self.r)

    @classmethod
    def from_s(cls, s: float) -> RadialCoordinate:
        return cls(coord_r_from_s(s))


@dataclass(frozen=True)
class RadialMesh:
    """Uniform radial grid on [r_min, r_max] with n nodes."""

    background: BackgroundKind
    m: int
    r_min: float
    r_max: float
    n: int

    def __post_init__(self):
        if self.m < 3:
            raise ConfigurationError(f"dimension m must be >= 3, got {self.m}")
        if self.r_min < 0:
            raise ConfigurationError(f"r_min must be >= 0, got {self.r_min}")
        if self.r_max <= self.r_min:
            raise ConfigurationError(
                f"r_max must exceed r_min, got [{self.r_min}, {self.r_max}]"
            )
        if self.n < 4:
            raise ConfigurationError(f"a radial mesh needs >= 4 nodes, got {self.n}")
        object.__setattr__(self, "background", BackgroundKind(self.background))

    @classmethod
    def with_spacing(
        cls,
        background: BackgroundKind,
        m: int,
        r_min: float,
        r_max: float,
        spacing: float,
    ) -> RadialMesh:
        intervals = (r_max - r_min) / spacing
        if abs(intervals - round(intervals)) > 1e-9 * max(1.0, intervals):
            raise ConfigurationError(
                f"spacing {spacing} does not divide [{r_min}, {r_max}] evenly"
            )
        return cls(background, m, r_min, r_max, int(round(intervals)) + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = np.linspace(self.r_min, self.r_max, self.n)
        nodes.setflags(write=False)
        return nodes

    @property
    def spacing(self) -> float:
        return (self.r_max - self.r_min) / (self.n - 1)

    @property
    def eta(self) -> float:
        return (self.m - 2) / 4

    @property
    def has_origin(self) -> bool:
        return self.r_min == 0.0

    @property
    def is_hyperbolic(self) -> bool:
        return self.background is BackgroundKind.HYPERBOLIC

    @property
    def zeroth_order_rate(self) -> float:
        """The constant m in the flow equation; absent on the flat background."""
        return float(self.m) if self.is_hyperbolic else 0.0

    @cached_property
    def interior(self) -> np.ndarray:
        """Mask of nodes that are not Dirichlet nodes."""
        mask = np.ones(self.n, dtype=bool)
        mask[-1] = False
        if not self.has_origin:
            mask[0] = False
        mask.setflags(write=False)
        return mask

    def index_of(self, r: float) -> int:
        return int(np.argmin(np.abs(self.nodes - r)))

    def truncated(self, r_max: float) -> RadialMesh:
        """The sub-mesh of nodes with radius <= r_max."""
        last = int(np.searchsorted(self.nodes, r_max + 1e-12 * self.spacing, "right"))
        return RadialMesh(
            self.background, self.m, self.r_min, float(self.nodes[last - 1]), last
        )


@dataclass(frozen=True)
class RadialField:
    """A rotationally symmetric scalar sampled on a RadialMesh."""

    mesh: RadialMesh
    values: np.ndarray
    label: str = "u"

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.mesh.n,):
            raise InvalidFieldError(
                f"field '{self.label}' has shape {values.shape}, "
                f"mesh has {self.mesh.n} nodes"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def at(self, r):
        return np.interp(r, self.mesh.nodes, self.values)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def require_positive(self) -> RadialField:
        bad = np.flatnonzero(~(self.values > 0))
        if bad.size:
            node = int(bad[0])
            raise InvalidFieldError(
                f"field '{self.label}' must be positive, found "
                f"{self.values[node]:.6g} at r = {self.mesh.nodes[node]:.6g}"
            )
        return self


def poincare_radius(r):
    """rho = tanh(r/2), the Euclidean radius in the Poincare ball."""
    return np.tanh(0.5 * np.asarray(r, dtype=float))


def conformal_scale_h(r):
    """h with g_E = h^-2 g_H on the Poincare ball, h = 2/(1 - rho^2)."""
    return 2.0 * np.cosh(0.5 * np.asarray(r, dtype=float)) ** 2


def flat_conformal_factor(r, b: float):
    """f = b h^-2, so that f g_H = b g_E."""
    if b <= 0:
        raise DomainError(f"flat scale b must be positive, got {b}")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError(f"geodesic radius must be >= 0, got {r}")
    f = b / conformal_scale_h(r_arr) ** 2
    return float(f) if f.ndim == 0 else f


def flat_conformal_factor_from_s(s, b: float):
    s_arr = np.asarray(s, dtype=float)
    # e^-s sinh s = (1 - e^-2s)/2
    f = b * (0.5 * np.expm1(-2.0 * s_arr)) ** 2
    return float(f) if f.ndim == 0 else f


def radial_laplacian_coefficient(r: float, mesh: RadialMesh) -> float:
    """First-order coefficient of the radial Laplacian, f'' + coeff(r) f'.

    Returns ORIGIN at r = 0, where the stencil m f''(0) takes over.
    """
    if r < 0:
        raise DomainError(f"geodesic radius must be >= 0, got {r}")
    if r == 0:
        return ORIGIN
    if mesh.is_hyperbolic:
        return (mesh.m - 1) / math.tanh(r)
    return (mesh.m - 1) / r


def laplacian_coefficients(mesh: RadialMesh) -> np.ndarray:
    r = mesh.nodes
    coeff = np.full(mesh.n, ORIGIN)
    positive = r > 0
    if mesh.is_hyperbolic:
        coeff[positive] = (mesh.m - 1) / np.tanh(r[positive])
    else:
        coeff[positive] = (mesh.m - 1) / r[positive]
    return coeff


def radial_derivatives(f: np.ndarray, mesh: RadialMesh) -> tuple[np.ndarray, np.ndarray]:
    """Second-order first and second r-derivatives on the full closed mesh.

    Interior nodes use centered differences, end nodes one-sided stencils,
    and the origin the even-symmetry ghost node f(-h) = f(h).
    """
    f = np.asarray(f, dtype=float)
    h = mesh.spacing
    d1 = np.empty_like(f)
    d2 = np.empty_like(f)
    d1[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    d2[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    d1[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    d2[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    if mesh.has_origin:
        d1[0] = 0.0
        d2[0] = 2 * (f[1] - f[0]) / h**2
    else:
        d1[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
        d2[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
    return d1, d2


def radial_gradient(f: np.ndarray, mesh: RadialMesh) -> np.ndarray:
    return radial_derivatives(f, mesh)[0]


def radial_laplacian(f: np.ndarray, mesh: RadialMesh) -> np.ndarray:
    d1, d2 = radial_derivatives(f, mesh)
    coeff = laplacian_coefficients(mesh)
    lap = np.empty_like(d2)
    regular = np.isfinite(coeff)
    lap[regular] = d2[regular] + coeff[regular] * d1[regular]
    lap[~regular] = mesh.m * d2[~regular]
    return lap


def area_density(r, mesh: RadialMesh) -> np.ndarray:
    """Radial area density: sinh^(m-1) r on H^m, r^(m-1) on R^m."""
    r_arr = np.asarray(r, dtype=float)
    base = np.sinh(r_arr) if mesh.is_hyperbolic else r_arr
    return base ** (mesh.m - 1)


def face_weights(mesh: RadialMesh) -> np.ndarray:
    """Area density at the n - 1 cell faces r_i + h/2."""
    return area_density(mesh.nodes[:-1] + 0.5 * mesh.spacing, mesh)


def cell_volumes(mesh: RadialMesh) -> np.ndarray:
    """Integral of the area density over each node's cell, clipped to [r_min, r_max]."""
    half_h = 0.5 * mesh.spacing
    lo = np.maximum(mesh.nodes - half_h, mesh.r_min)
    hi = np.minimum(mesh.nodes + half_h, mesh.r_max)
    points, weights = np.polynomial.legendre.leggauss(CELL_QUADRATURE_POINTS)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    samples = area_density(mid[:, None] + half[:, None] * points, mesh)
    return half * (samples @ weights)


def radial_length(u: RadialField, r0: float, r1: float) -> float:
    """Length of the radial ray from r0 to r1 in the metric u * g_background."""
    mesh = u.mesh
    if not r0 < r1:
        raise DomainError(f"need r0 < r1, got [{r0}, {r1}]")
    tol = 1e-12 * max(1.0, mesh.r_max)
    if r0 < mesh.r_min - tol or r1 > mesh.r_max + tol:
        raise DomainError(
            f"[{r0}, {r1}] is not inside the mesh [{mesh.r_min}, {mesh.r_max}]"
        )
    r0, r1 = max(r0, mesh.r_min), min(r1, mesh.r_max)
    if np.any(u.values <= 0):
        raise InvalidFieldError(f"field '{u.label}' must be positive for lengths")
    root = np.sqrt(u.values)
    inside = (mesh.nodes > r0) & (mesh.nodes < r1)
    r = np.concatenate(([r0], mesh.nodes[inside], [r1]))
    integrand = np.interp(r, mesh.nodes, root)
    return float(trapezoid(integrand, r))
