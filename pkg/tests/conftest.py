import logging

import pytest

from yamabe_flow.boundary_data import default_boundary
from yamabe_flow.geometry import BackgroundKind, RadialMesh
from yamabe_flow.initial_data import InitialPreset, make_initial
from yamabe_flow.radial_solver import SolveConfig, solve

BUMP = InitialPreset.bump(1.0, 1.0, 2.0, 0.5)


def hyperbolic_mesh(ell=6.0, n=400, m=3):
    return RadialMesh(BackgroundKind.HYPERBOLIC, m, 0.0, ell, n)


def euclidean_mesh(r_min, r_max, n, m=3):
    return RadialMesh(BackgroundKind.EUCLIDEAN, m, r_min, r_max, n)


def run_preset(preset, mesh, dt=1e-3, t_final=0.1, **kwargs):
    u0 = make_initial(preset, mesh)
    boundary, bounds, _ = default_boundary(u0)
    traj = solve(u0, boundary, SolveConfig(dt=dt, t_final=t_final, **kwargs))
    return traj, bounds


@pytest.fixture(autouse=True)
def _quiet_logger():
    # command runs attach handlers to the package logger
    yield
    logger = logging.getLogger("yamabe_flow")
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)


@pytest.fixture(scope="session")
def constant_flow():
    """u0 = 1 on B_3, m = 3: the exact solution is u = 1 + 6t."""
    return run_preset(
        InitialPreset.constant(1.0), hyperbolic_mesh(3.0, 200), t_final=0.5
    )


@pytest.fixture(scope="session")
def bump_flow():
    """Bump data with K0 > 0, solved to just below the first horizon."""
    mesh = hyperbolic_mesh(6.0, 400)
    u0 = make_initial(BUMP, mesh)
    boundary, bounds, _ = default_boundary(u0)
    steps = int(0.9 / max(bounds.K0, 2.0) / 1e-3)
    traj = solve(u0, boundary, SolveConfig(dt=1e-3, t_final=steps * 1e-3))
    return traj, bounds
