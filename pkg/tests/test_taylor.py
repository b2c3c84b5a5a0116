import os

import numpy as np
import pytest

from gshe import taylor
from gshe.model import ModelParams, symplectic_form, vector_field
from gshe.mpnum import Precision


def _start(prec, q1="0.01"):
    with prec.activate():
        x0 = prec.array([q1, 0, 0, 0], complex_=False)
        v0 = np.array([[prec.real(int(i == j)) for j in range(4)] for i in range(4)], dtype=x0.dtype)
    return x0, v0


def _pairing_error(v):
    e = np.eye(4)
    return max(abs(symplectic_form(v[:, i], v[:, j]) - symplectic_form(e[i], e[j]))
               for i in range(4) for j in range(4))


@pytest.mark.parametrize("digits,guard", [(16, 0), (40, 32)])
def test_energy_and_pairing_long_span(digits, guard):
    # small-amplitude orbit at the bifurcation value stays bounded up to t = 1200
    prec = Precision(digits, guard_bits=guard)
    p = ModelParams.create(2, 0, prec)
    x0, v0 = _start(prec)
    fr = taylor.flow(x0, v0, 1200, p)
    tol = 10.0 ** (4 - digits)
    with prec.activate():
        assert abs(fr.energy_drift) <= tol
        assert _pairing_error(fr.v_end) <= tol


def test_jet_first_coefficient_is_field():
    prec = Precision(30)
    p = ModelParams.create(2, "-0.03", prec)
    x0, v0 = _start(prec, "0.2")
    jet = taylor.jet_expand(x0, v0, p)
    with prec.activate():
        f = vector_field(x0, p)
        assert max(abs(a - b) for a, b in zip(jet.coeffs[1], f)) < 1e-28


def test_forward_backward_returns():
    prec = Precision(30)
    p = ModelParams.create(2, "-0.02", prec)
    x0, _ = _start(prec, "0.05")
    fwd = taylor.flow(x0, None, 7.5, p)
    back = taylor.flow(fwd.x_end, None, -7.5, p)
    with prec.activate():
        assert max(abs(a - b) for a, b in zip(back.x_end, x0)) < 1e-26


def test_numba_and_numpy_lanes_agree(monkeypatch):
    prec = Precision(16, guard_bits=0)
    p = ModelParams.create(2.0, -0.05, prec)
    x0 = np.array([1e-3, 0.0, 0.0, -2e-4])
    out = {}
    for flag in ("1", "0"):
        monkeypatch.setenv("GSHE_NUMBA", flag)
        out[flag] = taylor.flow(x0, np.eye(4), 20.0, p)
    assert np.allclose(out["1"].x_end, out["0"].x_end, rtol=1e-13, atol=1e-17)
    assert np.allclose(out["1"].v_end, out["0"].v_end, rtol=1e-12, atol=1e-14)


def test_step_underflow_on_blowup():
    prec = Precision(16, guard_bits=0)
    p = ModelParams.create(2.0, -0.05, prec)
    with pytest.raises(taylor.StepUnderflow):
        taylor.flow(np.array([0.3, 0.0, 0.0, -0.05]), None, 200.0, p)
