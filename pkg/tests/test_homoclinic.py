import math

import pytest

from gshe import homoclinic
from gshe.model import ModelParams
from gshe.mpnum import Precision


def test_auto_digits_rule():
    assert homoclinic.auto_digits(-0.002, 1e-5) >= 45
    assert homoclinic.auto_digits(-0.05) < homoclinic.auto_digits(-0.01)


def test_branch0_sign_positive(orbit_005):
    assert orbit_005.omega_bar > 0


def test_fixed_plane_residual(orbit_005):
    x = orbit_005.x_sym
    assert max(abs(x[1]), abs(x[2])) <= 1e-24


def test_orbit_on_zero_energy_level(orbit_005):
    assert abs(orbit_005.energy) < 1e-26


def test_omega_hat_relation(orbit_005):
    res = orbit_005
    with res.params.precision.activate():
        w = homoclinic.omega_from_definition(res)
        assert abs(res.omega + res.alpha ** 2 * w) <= 1e-26 * abs(res.omega)


def test_flow_derivative_form_matches_definition(orbit_005):
    res = orbit_005
    with res.params.precision.activate():
        a = homoclinic.omega_flow_derivative(res)
        b = homoclinic.omega_from_definition(res)
        assert abs(a - b) <= 1e-24 * abs(b)


def test_omega_z_balance_vanishes(orbit_005):
    res = orbit_005
    with res.params.precision.activate():
        assert abs(homoclinic.omega_z_balance(res)) <= 1e-24 * abs(res.omega)


def test_seed_is_close(orbit_005):
    assert homoclinic.seed_relative_error(orbit_005) < 0.05


def test_invariant_independent_of_T0(orbit_005):
    p = orbit_005.params
    T0 = homoclinic.default_T0(p) + 20
    other = homoclinic.homoclinic_invariant("-0.05", 2, 0, 30, T0=T0)
    with p.precision.activate():
        assert abs(other.omega_bar - orbit_005.omega_bar) <= 1e-20 * abs(orbit_005.omega_bar)
        assert abs(other.psi_star - orbit_005.psi_star) <= 1e-20


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        homoclinic.homoclinic_invariant("-0.2", 2, 0, 20)
    with pytest.raises(ValueError):
        homoclinic.homoclinic_invariant("-0.05", 0.5, 0, 20)
    p = ModelParams.create(2, "-0.05", Precision(20))
    with pytest.raises(ValueError):
        homoclinic.newton_symmetric(p, branch=2)


def test_tail_decay_rate_synthetic():
    rows = [(x / 4, math.exp(-0.3 * x / 4) * math.cos(x / 4)) for x in range(0, 400)]
    assert homoclinic.tail_decay_rate(rows, 10, 90) == pytest.approx(-0.3, rel=1e-3)
