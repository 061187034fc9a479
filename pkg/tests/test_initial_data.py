import math

import numpy as np
import pytest

from conftest import BUMP, euclidean_mesh, hyperbolic_mesh
from yamabe_flow.errors import ConfigurationError
from yamabe_flow.geometry import BackgroundKind, RadialField
from yamabe_flow.initial_data import (
    EPS_FLOOR_CAP,
    InitialPreset,
    PresetKind,
    data_bounds,
    initial_scalar_curvature,
    make_initial,
    scalar_curvature,
)


def test_constant_preset():
    u0 = make_initial(InitialPreset.constant(1.0), hyperbolic_mesh(3.0, 50))
    np.testing.assert_array_equal(u0.values, np.ones(50))


def test_punctured_sphere_at_unit_radius():
    mesh = euclidean_mesh(0.0, 2.0, 201)
    u0 = make_initial(InitialPreset.punctured_sphere(), mesh)
    assert u0.values[mesh.index_of(1.0)] == pytest.approx(1.0, rel=1e-14)
    assert u0.values[0] == 4.0


def test_power_law_value():
    mesh = euclidean_mesh(1.0, 3.0, 201)
    u0 = make_initial(InitialPreset.power_law(1.0), mesh)
    assert u0.values[mesh.index_of(2.0)] == pytest.approx(1 / 16, rel=1e-14)


def test_presets_check_background():
    with pytest.raises(ConfigurationError, match="hyperbolic"):
        make_initial(InitialPreset.flat_static(1.0), euclidean_mesh(0.0, 2.0, 50))
    with pytest.raises(ConfigurationError, match="euclidean"):
        make_initial(InitialPreset.power_law(1.0), hyperbolic_mesh())
    with pytest.raises(ConfigurationError, match="r_min"):
        make_initial(InitialPreset.power_law(1.0), euclidean_mesh(0.05, 2.0, 50))


@pytest.mark.parametrize(
    "build",
    [
        lambda: InitialPreset.constant(0.0),
        lambda: InitialPreset.flat_static(-1.0),
        lambda: InitialPreset.bump(1.0, 1.0, 2.0, 0.0),
        lambda: InitialPreset(PresetKind.CONSTANT, (1.0, 2.0)),
    ],
)
def test_preset_parameters_are_validated(build):
    with pytest.raises(ConfigurationError):
        build()


def test_preset_parse_and_text():
    preset = InitialPreset.parse("bump:1,1,2,0.5")
    assert preset == BUMP
    assert InitialPreset.parse(str(preset)) == preset
    assert InitialPreset.parse("sphere").kind is PresetKind.PUNCTURED_SPHERE
    assert InitialPreset.parse(" Constant:0.1 ").params == (0.1,)
    with pytest.raises(ConfigurationError, match="unknown preset"):
        InitialPreset.parse("torus:1")
    with pytest.raises(ConfigurationError, match="parameter"):
        InitialPreset.parse("constant")
    with pytest.raises(ConfigurationError):
        InitialPreset.parse("constant:abc")


def test_preset_background_and_flat_scale():
    assert InitialPreset.flat_static(2.0).background is BackgroundKind.HYPERBOLIC
    assert InitialPreset.power_law(1.0).background is BackgroundKind.EUCLIDEAN
    assert BUMP.background is None
    assert InitialPreset.flat_static(2.0).flat_scale == 2.0
    assert BUMP.flat_scale is None


@pytest.mark.parametrize("m", [3, 4, 5])
@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("form", ["eta", "direct"])
def test_constant_data_has_constant_negative_curvature(m, c, form):
    u0 = make_initial(InitialPreset.constant(c), hyperbolic_mesh(4.0, 100, m=m))
    R = scalar_curvature(u0, form=form)
    np.testing.assert_allclose(R.values, -m * (m - 1) / c, rtol=1e-10)


def test_unit_constant_on_h3_has_curvature_minus_six():
    u0 = make_initial(InitialPreset.constant(1.0), hyperbolic_mesh())
    np.testing.assert_allclose(initial_scalar_curvature(u0).values, -6.0, rtol=1e-12)


def test_curvature_forms_agree_on_smooth_data():
    u0 = make_initial(BUMP, hyperbolic_mesh(6.0, 801))
    eta = scalar_curvature(u0, form="eta").values
    direct = scalar_curvature(u0, form="direct").values
    assert np.max(np.abs(eta[1:-1] - direct[1:-1])) < 1e-2
    with pytest.raises(ConfigurationError):
        scalar_curvature(u0, form="weyl")


def _flat_curvature_error(n):
    u0 = make_initial(InitialPreset.flat_static(1.0), hyperbolic_mesh(5.0, n))
    return np.max(np.abs(initial_scalar_curvature(u0).values))


def test_flat_static_data_is_flat_to_second_order():
    coarse, fine = _flat_curvature_error(201), _flat_curvature_error(401)
    assert fine < coarse
    assert 3.0 < coarse / fine < 5.0


def test_round_sphere_curvature():
    mesh = euclidean_mesh(0.0, 2.0, 401)
    u0 = make_initial(InitialPreset.punctured_sphere(), mesh)
    R = initial_scalar_curvature(u0).values
    np.testing.assert_allclose(R[:-1], 6.0, rtol=1e-3)


def test_initial_curvature_rejects_foreign_mesh():
    u0 = make_initial(InitialPreset.constant(1.0), hyperbolic_mesh(3.0, 50))
    with pytest.raises(ConfigurationError):
        initial_scalar_curvature(u0, hyperbolic_mesh(3.0, 60))


def test_data_bounds_of_unit_constant():
    u0 = make_initial(InitialPreset.constant(1.0), hyperbolic_mesh(3.0, 50))
    bounds = data_bounds(u0, initial_scalar_curvature(u0))
    assert bounds.kappa == pytest.approx(6.0)
    assert bounds.K0 == 0.0
    assert bounds.C0 == 1.0
    assert bounds.min_u0 == 1.0
    assert bounds.eps_floor == pytest.approx(1 / 6)
    assert bounds.first_horizon == math.inf


def test_data_bounds_kappa_takes_the_curvature_branch():
    mesh = hyperbolic_mesh(3.0, 50)
    u0 = RadialField(mesh, np.full(mesh.n, 2.0))
    bounds = data_bounds(u0, RadialField(mesh, np.full(mesh.n, -3.0)))
    assert bounds.kappa == pytest.approx(3.0)
    assert bounds.eps_floor == pytest.approx(1 / 3)


def test_data_bounds_caps_eps_floor():
    mesh = hyperbolic_mesh(3.0, 50)
    u0 = RadialField(mesh, np.ones(mesh.n))
    bounds = data_bounds(u0, RadialField(mesh, np.full(mesh.n, -0.01)))
    assert bounds.eps_floor == EPS_FLOOR_CAP


def test_data_bounds_of_bump():
    u0 = make_initial(BUMP, hyperbolic_mesh())
    R = initial_scalar_curvature(u0)
    bounds = data_bounds(u0, R)
    assert bounds.K0 == pytest.approx(R.max())
    assert bounds.K0 > 0
    assert bounds.kappa >= bounds.K0
    assert bounds.first_horizon == pytest.approx(1 / bounds.K0)
    assert bounds.C0 == pytest.approx(2.0, abs=1e-3)


def test_data_bounds_rejects_mismatched_meshes():
    u0 = make_initial(InitialPreset.constant(1.0), hyperbolic_mesh(3.0, 50))
    other = make_initial(InitialPreset.constant(1.0), hyperbolic_mesh(3.0, 60))
    with pytest.raises(ConfigurationError):
        data_bounds(u0, initial_scalar_curvature(other))
