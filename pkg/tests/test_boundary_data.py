import numpy as np
import pytest

from conftest import BUMP, hyperbolic_mesh
from yamabe_flow.boundary_data import (
    BoundaryProfile,
    StaticBoundary,
    admissible_epsilon,
    boundary_curvature,
    boundary_table,
    check_profile_bounds,
    default_boundary,
    phi,
    phi_prime,
    psi,
    psi_prime,
)
from yamabe_flow.errors import ConfigurationError, DomainError, InvalidFieldError
from yamabe_flow.geometry import BackgroundKind, RadialMesh
from yamabe_flow.initial_data import InitialPreset, make_initial

T_GRID = np.linspace(0.0, 2.0, 1001)


def test_psi_endpoints():
    assert psi(0.0) == 0.0
    assert psi_prime(0.0) == 1.0
    assert psi(1.0) == pytest.approx(1 / 3)
    assert psi(3.5) == pytest.approx(1 / 3)
    assert psi_prime(3.5) == 0.0
    assert psi(0.5) == pytest.approx(7 / 24)


def test_psi_rejects_negative_arguments():
    with pytest.raises(DomainError):
        psi(-0.1)
    with pytest.raises(DomainError):
        psi_prime(np.array([0.5, -1.0]))


def test_psi_shape_bounds():
    s = np.linspace(0.0, 3.0, 10001)
    values, slopes = psi(s), psi_prime(s)
    assert np.all((values >= 0) & (values <= 1 / 3 + 1e-15))
    assert np.all((slopes >= 0) & (slopes <= 1))
    assert np.max(np.abs(values - s * slopes)) <= 1 / 3 + 1e-12


def test_profile_of_unit_constant_is_the_big_bang_line():
    u0 = make_initial(InitialPreset.constant(1.0), hyperbolic_mesh(3.0, 50))
    profile, bounds, _ = default_boundary(u0)
    assert isinstance(profile, BoundaryProfile)
    assert profile.v_boundary == pytest.approx(0.0, abs=1e-12)
    assert profile.kappa == pytest.approx(6.0)
    np.testing.assert_allclose(phi(profile, T_GRID), 1 + 6 * T_GRID, rtol=0, atol=1e-12)


def test_profile_value_inside_the_ramp():
    profile = BoundaryProfile(1.0, -10.0, 6.0, 3)
    expected = 1 + 6 / 12 - 10 * (7 / 24) / 6
    assert profile.value(1 / 12) == pytest.approx(expected)
    assert profile.value(1 / 12) == pytest.approx(1.0138889, abs=1e-7)


def test_profile_is_affine_after_the_ramp():
    profile = BoundaryProfile(1.0, -10.0, 6.0, 3)
    t = np.linspace(1 / 6, 3.0, 50)
    np.testing.assert_allclose(phi_prime(profile, t), 6.0)
    np.testing.assert_allclose(
        phi(profile, t) - phi(profile, 1 / 6), 6 * (t - 1 / 6), rtol=0, atol=1e-12
    )


def test_profile_rejects_fast_initial_velocity():
    with pytest.raises(ConfigurationError, match="exceeds"):
        BoundaryProfile(1.0, 13.0, 6.0, 3)
    with pytest.raises(ConfigurationError):
        BoundaryProfile(1.0, 0.0, 0.0, 3)
    with pytest.raises(InvalidFieldError):
        BoundaryProfile(0.0, 0.0, 6.0, 3)


def test_profile_is_compatible_with_initial_data():
    u0 = make_initial(BUMP, hyperbolic_mesh())
    profile, _, Rg0 = default_boundary(u0)
    assert profile.value(0.0) == u0.values[-1]
    assert profile.derivative(0.0) == pytest.approx(-u0.values[-1] * Rg0.values[-1])
    assert boundary_curvature(profile, 0.0) == pytest.approx(Rg0.values[-1], rel=1e-12)


def test_boundary_curvature_series():
    profile = BoundaryProfile(1.0, 0.0, 6.0, 3)
    np.testing.assert_allclose(
        boundary_curvature(profile, T_GRID), -6 / (1 + 6 * T_GRID), rtol=1e-14
    )


def test_flat_background_holds_the_initial_value():
    mesh = RadialMesh(BackgroundKind.EUCLIDEAN, 3, 1.0, 5.0, 100)
    u0 = make_initial(InitialPreset.power_law(1.0), mesh)
    boundary, _, _ = default_boundary(u0)
    assert isinstance(boundary, StaticBoundary)
    assert boundary.value(3.0) == pytest.approx(5.0**-4)
    assert boundary.derivative(3.0) == 0.0


def test_unit_constant_profile_meets_every_bound():
    profile = BoundaryProfile(1.0, 0.0, 6.0, 3)
    eps = admissible_epsilon(profile, T_GRID, cap=1 / 6)
    assert eps == pytest.approx(1 / 6)
    report = check_profile_bounds(profile, 0.0, eps, T_GRID)
    assert report.passed
    assert report.get("phi_lower").worst_slack == pytest.approx(2 / 3, abs=1e-12)
    assert report.get("phi_upper").worst_slack == pytest.approx(2 / 3, abs=1e-12)
    assert report.get("curvature_lower").worst_slack == pytest.approx(0.0, abs=1e-12)


def test_positive_boundary_curvature_profile_meets_every_bound():
    # u0 = 1 and R = 4 on the boundary sphere, m = 3
    profile = BoundaryProfile(1.0, -10.0, 6.0, 3)
    K0 = 4.0
    t = np.linspace(0.0, 0.999 / K0, 2001)
    eps = admissible_epsilon(profile, t, cap=10.0)
    report = check_profile_bounds(profile, K0, eps, t)
    assert report.passed, report.to_dict()
    assert report.get("curvature_upper").worst_slack == pytest.approx(0.0, abs=1e-12)


def test_bump_profile_meets_every_bound():
    u0 = make_initial(BUMP, hyperbolic_mesh())
    profile, bounds, _ = default_boundary(u0)
    t = np.linspace(0.0, 0.9 / bounds.K0, 901)
    eps = admissible_epsilon(profile, t, bounds.eps_floor)
    assert 0 < eps <= bounds.eps_floor
    assert check_profile_bounds(profile, bounds.K0, eps, t).passed


def test_too_large_epsilon_breaks_the_lower_curvature_bound():
    profile = BoundaryProfile(1.0, 0.0, 6.0, 3)
    report = check_profile_bounds(profile, 0.0, 1.0, T_GRID)
    assert not report.passed
    assert report.get("curvature_lower").worst_slack < 0


def test_boundary_table_columns():
    profile = BoundaryProfile(1.0, -10.0, 6.0, 3)
    table = boundary_table(profile, T_GRID[:5])
    assert list(table) == ["t", "phi", "dphi_dt", "R_boundary"]
    np.testing.assert_allclose(table["R_boundary"], -table["dphi_dt"] / table["phi"])
