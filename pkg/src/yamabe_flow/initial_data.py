# src/yamabe_flow/initial_data.py
"""Initial conformal factors, their scalar curvature and the run constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from yamabe_flow.errors import ConfigurationError, InvalidFieldError
from yamabe_flow.geometry import (
    BackgroundKind,
    RadialField,
    RadialMesh,
    flat_conformal_factor,
    radial_gradient,
    radial_laplacian,
)

POWER_LAW_R_MIN = 0.1
EPS_FLOOR_CAP = 10.0


class PresetKind(str, Enum):
    CONSTANT = "constant"
    FLAT_STATIC = "flat"
    BUMP = "bump"
    PUNCTURED_SPHERE = "sphere"
    POWER_LAW = "powerlaw"


_ARITY = {
    PresetKind.CONSTANT: 1,
    PresetKind.FLAT_STATIC: 1,
    PresetKind.BUMP: 4,
    PresetKind.PUNCTURED_SPHERE: 0,
    PresetKind.POWER_LAW: 1,
}

# presets tied to one background; the others live on either
_BACKGROUND = {
    PresetKind.FLAT_STATIC: BackgroundKind.HYPERBOLIC,
    PresetKind.PUNCTURED_SPHERE: BackgroundKind.EUCLIDEAN,
    PresetKind.POWER_LAW: BackgroundKind.EUCLIDEAN,
}


@dataclass(frozen=True)
class InitialPreset:
    kind: PresetKind
    params: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", PresetKind(self.kind))
        params = tuple(float(p) for p in self.params)
        if len(params) != _ARITY[self.kind]:
            raise ConfigurationError(
                f"preset '{self.kind.value}' takes {_ARITY[self.kind]} "
                f"parameter(s), got {len(params)}"
            )
        if any(not p > 0 for p in params):
            raise ConfigurationError(
                f"preset '{self.kind.value}' parameters must be positive, got {params}"
            )
        object.__setattr__(self, "params", params)

    @classmethod
    def constant(cls, c: float) -> InitialPreset:
        return cls(PresetKind.CONSTANT, (c,))

    @classmethod
    def flat_static(cls, b: float) -> InitialPreset:
        return cls(PresetKind.FLAT_STATIC, (b,))

    @classmethod
    def bump(
        cls, base: float, amplitude: float, center: float, width: float
    ) -> InitialPreset:
        return cls(PresetKind.BUMP, (base, amplitude, center, width))

    @classmethod
    def punctured_sphere(cls) -> InitialPreset:
        return cls(PresetKind.PUNCTURED_SPHERE)

    @classmethod
    def power_law(cls, b: float) -> InitialPreset:
        return cls(PresetKind.POWER_LAW, (b,))

    @classmethod
    def parse(cls, text: str) -> InitialPreset:
        """Parse `kind` or `kind:p1,p2,...`, e.g. `bump:1,1,2,0.5`."""
        name, _, rest = text.strip().partition(":")
        try:
            kind = PresetKind(name.strip().lower())
        except ValueError:
            known = ", ".join(k.value for k in PresetKind)
            raise ConfigurationError(
                f"unknown preset '{name}' (known: {known})"
            ) from None
        try:
            params = tuple(float(p) for p in rest.split(",") if p.strip())
        except ValueError:
            raise ConfigurationError(f"bad preset parameters in '{text}'") from None
        return cls(kind, params)

    @property
    def background(self) -> BackgroundKind | None:
        return _BACKGROUND.get(self.kind)

    @property
    def flat_scale(self) -> float | None:
        """The b with u0 <= b g_E / g_H, when the preset supplies it exactly."""
        if self.kind is PresetKind.FLAT_STATIC:
            return self.params[0]
        return None

    def __str__(self) -> str:
        if not self.params:
            return self.kind.value
        return f"{self.kind.value}:" + ",".join(repr(p) for p in self.params)


def make_initial(preset: InitialPreset, mesh: RadialMesh) -> RadialField:
    required = preset.background
    if required is not None and required is not mesh.background:
        raise ConfigurationError(
            f"preset '{preset.kind.value}' needs a {required.value} background, "
            f"mesh is {mesh.background.value}"
        )
    r = mesh.nodes
    kind, p = preset.kind, preset.params
    if kind is PresetKind.CONSTANT:
        values = np.full(mesh.n, p[0])
    elif kind is PresetKind.FLAT_STATIC:
        values = flat_conformal_factor(r, p[0])
    elif kind is PresetKind.BUMP:
        base, amplitude, center, width = p
        values = base + amplitude * np.exp(-((r - center) ** 2) / width**2)
    elif kind is PresetKind.PUNCTURED_SPHERE:
        values = 4.0 / (1.0 + r**2) ** 2
    else:
        if mesh.r_min < POWER_LAW_R_MIN:
            raise ConfigurationError(
                f"power-law data are singular at the origin; "
                f"r_min must be >= {POWER_LAW_R_MIN}, got {mesh.r_min}"
            )
        values = p[0] * r**-4.0
    return RadialField(mesh, values, "u").require_positive()


def scalar_curvature(u: RadialField, form: str = "eta") -> RadialField:
    """Scalar curvature of g = u g_background.

    form="eta":    R = -(m-1) u^(-eta-1) ((1/eta) Lap u^eta + m u^eta)
    form="direct": -u R/(m-1) = m + Lap u/u + ((m-6)/4) |grad u|^2/u^2
    The zeroth-order m terms drop on the flat background.
    """
    mesh = u.mesh
    if np.any(u.values <= 0):
        raise InvalidFieldError(f"field '{u.label}' must be positive for curvature")
    m, eta = mesh.m, mesh.eta
    rate = mesh.zeroth_order_rate
    values = u.values
    if form == "eta":
        big_u = values**eta
        bracket = radial_laplacian(big_u, mesh) / eta + rate * big_u
        curvature = -(m - 1) * values ** (-eta - 1) * bracket
    elif form == "direct":
        grad = radial_gradient(values, mesh)
        bracket = (
            rate
            + radial_laplacian(values, mesh) / values
            + (m - 6) / 4 * grad**2 / values**2
        )
        curvature = -(m - 1) * bracket / values
    else:
        raise ConfigurationError(f"unknown curvature form '{form}'")
    return RadialField(mesh, curvature, "R")


def initial_scalar_curvature(u0: RadialField, mesh: RadialMesh | None = None) -> RadialField:
    if mesh is not None and mesh != u0.mesh:
        raise ConfigurationError("initial data and mesh disagree")
    return scalar_curvature(u0, form="eta")


@dataclass(frozen=True)
class DataBounds:
    C0: float
    K0: float
    kappa: float
    eps_floor: float
    min_u0: float
    m: int

    @property
    def first_horizon(self) -> float:
        """1/K0, the guaranteed existence time of the first leg."""
        return math.inf if self.K0 == 0 else 1.0 / self.K0

    def to_dict(self) -> dict:
        return {
            "C0": self.C0,
            "K0": self.K0,
            "kappa": self.kappa,
            "eps_floor": self.eps_floor,
            "min_u0": self.min_u0,
            "m": self.m,
            "first_horizon": self.first_horizon,
        }


def data_bounds(
    u0: RadialField, Rg0: RadialField, eps_cap: float = EPS_FLOOR_CAP
) -> DataBounds:
    if u0.mesh != Rg0.mesh:
        raise ConfigurationError("u0 and R_g0 live on different meshes")
    m = u0.mesh.m
    u, R = u0.values, Rg0.values
    kappa = float(np.max(np.maximum(np.abs(R), m * (m - 1) / u)))
    eps = 1.0 / max(1e-12, -float(R.min()))
    return DataBounds(
        C0=float(u.max()),
        K0=max(0.0, float(R.max())),
        kappa=kappa,
        eps_floor=min(eps_cap, eps),
        min_u0=float(u.min()),
        m=m,
    )
