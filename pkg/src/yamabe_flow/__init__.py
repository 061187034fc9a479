# src/yamabe_flow/__init__.py
from .geometry import BackgroundKind, RadialField, RadialMesh  # noqa: F401
from .initial_data import InitialPreset, make_initial  # noqa: F401
from .radial_solver import FlowTrajectory, SolveConfig, solve  # noqa: F401

__version__ = "0.1.0"
