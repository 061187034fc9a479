# src/yamabe_flow/config.py
import os
from dataclasses import dataclass, fields
from pathlib import Path

from dotenv import dotenv_values

from yamabe_flow.errors import ConfigurationError
from yamabe_flow.initial_data import InitialPreset
from yamabe_flow.radial_solver import GradientTreatment

COMMANDS = ("run", "compare", "exhaust", "incompleteness", "barriers")


class Config:
    # Geometry
    DIMENSION = 3
    R_MIN = 0.0
    ELL = 6.0
    NODES = 400

    # Initial data
    PRESET = "constant:1"
    COMPARE_PRESET = "constant:0.8"
    B_FLAT = ""

    # Time stepping
    DT = 1e-3
    T_FINAL = 0.5
    THETA = 1.0
    GRADIENT = "implicit"

    # Exhaustion and length scans
    LADDER = "3,4,5,6"
    DOMAINS = "4,6,8"
    T_SAMPLES = "0.05,0.1"

    # Reports
    TOLERANCE = 1e-8
    OUTPUT = "yamabe_run"


class DeskConfig(Config):
    pass


class FineConfig(Config):
    NODES = 800
    DT = 5e-4


# Dictionary to map profile names
config_by_name = dict(desk=DeskConfig, fine=FineConfig)

KEYS = tuple(name for name in vars(Config) if name.isupper())


def get_config_name():
    """Profile name from YAMABE_FLOW_PROFILE, or the desk profile."""
    return os.getenv("YAMABE_FLOW_PROFILE", "desk")


def _floats(value, key) -> tuple[float, ...]:
    if isinstance(value, (tuple, list)):
        return tuple(float(x) for x in value)
    try:
        return tuple(float(x) for x in str(value).split(",") if x.strip())
    except ValueError:
        raise ConfigurationError(f"{key}: expected comma-separated numbers, got '{value}'") from None


def _number(kind, value, key):
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{key}: expected {kind.__name__}, got '{value}'") from None


@dataclass(frozen=True)
class RunConfig:
    command: str
    dimension: int
    r_min: float
    ell: float
    nodes: int
    preset: InitialPreset
    compare_preset: InitialPreset
    b_flat: float | None
    dt: float
    t_final: float
    theta: float
    gradient: GradientTreatment
    ladder: tuple[float, ...]
    domains: tuple[float, ...]
    t_samples: tuple[float, ...]
    tolerance: float
    output: Path
    profile: str = "desk"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(
                f"command: unknown '{self.command}' (known: {', '.join(COMMANDS)})"
            )
        if self.dimension < 3:
            raise ConfigurationError(
                f"DIMENSION: must be >= 3, got {self.dimension}; "
                "the two-dimensional flow behaves differently"
            )
        if self.nodes < 16:
            raise ConfigurationError(f"NODES: need >= 16, got {self.nodes}")
        if not self.dt > 0:
            raise ConfigurationError(f"DT: must be positive, got {self.dt}")
        if self.t_final < self.dt:
            raise ConfigurationError(f"T_FINAL: must be >= DT, got {self.t_final}")
        if not 0.5 <= self.theta <= 1.0:
            raise ConfigurationError(f"THETA: must lie in [0.5, 1], got {self.theta}")
        if not 0 <= self.r_min < self.ell:
            raise ConfigurationError(
                f"R_MIN/ELL: need 0 <= r_min < ell, got [{self.r_min}, {self.ell}]"
            )
        if self.b_flat is not None and not self.b_flat > 0:
            raise ConfigurationError(f"B_FLAT: must be positive, got {self.b_flat}")
        if not self.tolerance > 0:
            raise ConfigurationError(f"TOLERANCE: must be positive, got {self.tolerance}")
        parent = self.output if self.output.exists() else self.output.parent
        if parent.exists() and not os.access(parent, os.W_OK):
            raise ConfigurationError(f"OUTPUT: '{self.output}' is not writable")

    @property
    def spacing(self) -> float:
        return (self.ell - self.r_min) / (self.nodes - 1)

    def as_env(self) -> dict[str, str]:
        """Flat KEY -> text mapping, the format read back by load_config."""
        return {
            "DIMENSION": str(self.dimension),
            "R_MIN": repr(self.r_min),
            "ELL": repr(self.ell),
            "NODES": str(self.nodes),
            "PRESET": str(self.preset),
            "COMPARE_PRESET": str(self.compare_preset),
            "B_FLAT": "" if self.b_flat is None else repr(self.b_flat),
            "DT": repr(self.dt),
            "T_FINAL": repr(self.t_final),
            "THETA": repr(self.theta),
            "GRADIENT": self.gradient.value,
            "LADDER": ",".join(repr(x) for x in self.ladder),
            "DOMAINS": ",".join(repr(x) for x in self.domains),
            "T_SAMPLES": ",".join(repr(x) for x in self.t_samples),
            "TOLERANCE": repr(self.tolerance),
            "OUTPUT": str(self.output),
        }

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["preset"] = str(self.preset)
        out["compare_preset"] = str(self.compare_preset)
        out["gradient"] = self.gradient.value
        out["output"] = str(self.output)
        out["ladder"] = list(self.ladder)
        out["domains"] = list(self.domains)
        out["t_samples"] = list(self.t_samples)
        return out


def read_config_file(path) -> dict[str, str]:
    """Read a flat KEY=value file; keys are case-insensitive."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    values = {}
    for key, value in dotenv_values(path).items():
        name = key.strip().upper()
        if name not in KEYS:
            raise ConfigurationError(f"unknown config key '{key}' in {path}")
        values[name] = "" if value is None else value
    return values


def load_config(
    command: str,
    profile: str | None = None,
    config_file=None,
    overrides: dict | None = None,
) -> RunConfig:
    """Profile defaults, then the config file, then explicit overrides."""
    profile = profile or get_config_name()
    if profile not in config_by_name:
        raise ConfigurationError(
            f"unknown profile '{profile}' (known: {', '.join(config_by_name)})"
        )
    base = config_by_name[profile]
    values = {key: getattr(base, key) for key in KEYS}
    if config_file is not None:
        values.update(read_config_file(config_file))
    for key, value in (overrides or {}).items():
        name = key.upper()
        if name not in KEYS:
            raise ConfigurationError(f"unknown config key '{key}'")
        if value is not None:
            values[name] = value

    b_flat = values["B_FLAT"]
    try:
        gradient = GradientTreatment(str(values["GRADIENT"]).strip().lower())
    except ValueError:
        raise ConfigurationError(
            f"GRADIENT: expected 'implicit' or 'explicit', got '{values['GRADIENT']}'"
        ) from None
    return RunConfig(
        command=command,
        dimension=_number(int, values["DIMENSION"], "DIMENSION"),
        r_min=_number(float, values["R_MIN"], "R_MIN"),
        ell=_number(float, values["ELL"], "ELL"),
        nodes=_number(int, values["NODES"], "NODES"),
        preset=InitialPreset.parse(str(values["PRESET"])),
        compare_preset=InitialPreset.parse(str(values["COMPARE_PRESET"])),
        b_flat=None if b_flat in ("", None) else _number(float, b_flat, "B_FLAT"),
        dt=_number(float, values["DT"], "DT"),
        t_final=_number(float, values["T_FINAL"], "T_FINAL"),
        theta=_number(float, values["THETA"], "THETA"),
        gradient=gradient,
        ladder=_floats(values["LADDER"], "LADDER"),
        domains=_floats(values["DOMAINS"], "DOMAINS"),
        t_samples=_floats(values["T_SAMPLES"], "T_SAMPLES"),
        tolerance=_number(float, values["TOLERANCE"], "TOLERANCE"),
        output=Path(str(values["OUTPUT"])),
        profile=profile,
    )

