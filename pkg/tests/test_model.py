from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gshe import model
from gshe.model import ModelParams
from gshe.mpnum import Precision


def test_nf_params_exact_at_kappa_2():
    nf = model.nf_params(2)
    assert nf.eta == Fraction(125, 288)
    assert nf.mu == Fraction(439, 864)


def test_eta_root():
    assert model.nf_params(Fraction(model.eta_root())).eta == pytest.approx(0, abs=1e-15)


def test_spectral_small_eps():
    p = ModelParams.create(2, "-0.05", Precision(30))
    sp = model.spectral(p)
    with p.precision.activate():
        # alpha^2 - beta^2 = 1, alpha beta = delta
        assert abs(sp.alpha ** 2 - sp.beta ** 2 - 1) < 1e-28
        assert abs(sp.alpha * sp.beta - p.delta) < 1e-28


def test_positive_eps_rejected():
    with pytest.raises(ValueError):
        ModelParams.create(2, 0.01, Precision(16))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(-0.1, 0))
def test_field_is_hamiltonian(x, e):
    p = ModelParams.create(2.0, e, Precision(16, guard_bits=0))
    x = np.array(x)
    h = 1e-6
    grad = np.array([(model.hamiltonian(x + h * np.eye(4)[i], p) - model.hamiltonian(x - h * np.eye(4)[i], p)) / (2 * h)
                     for i in range(4)])
    # q' = dH/dp, p' = -dH/dq
    f = model.vector_field(x, p)
    assert np.allclose(f, [grad[2], grad[3], -grad[0], -grad[1]], atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_reversibility(x):
    p = ModelParams.create(2.0, -0.03, Precision(16, guard_bits=0))
    x = np.array(x)
    # S X_H(x) = -X_H(S x)
    assert np.allclose(model.involution(model.vector_field(x, p)),
                       -model.vector_field(model.involution(x), p))


def test_jacobian_matches_field():
    p = ModelParams.create(2.0, -0.03, Precision(16, guard_bits=0))
    x = np.array([0.3, -0.1, 0.2, 0.05])
    h = 1e-6
    num = np.column_stack([(model.vector_field(x + h * e, p) - model.vector_field(x - h * e, p)) / (2 * h)
                           for e in np.eye(4)])
    assert np.allclose(model.jacobian(x, p).astype(float), num, atol=1e-8)


def test_lift_scalar():
    assert list(model.lift_scalar(1.0, 2.0, 3.0, 4.0)) == [1.0, 2.0, -6.0, 4.0]
