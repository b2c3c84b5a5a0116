import gmpy2
import pytest

from gshe import outer
from gshe.model import ModelParams, spectral
from gshe.mpnum import Precision
from gshe.taylor import flow

PREC = Precision(40)


def _params(eps="-0.04"):
    return ModelParams.create(2, eps, PREC)


def test_initial_match_values():
    import mpmath
    r0, psi0 = outer.initial_match(_params("-0.04"))
    with mpmath.workdps(50):
        eta, mu, d = mpmath.mpf(125) / 288, mpmath.mpf(439) / 864, mpmath.mpf("0.1")
        g = 1 + 2 * mu / eta
        assert abs(g - mpmath.mpf("3.341333333333333333333333")) < 1e-20
        psi_ref = mpmath.atan(-g * d / 2)
        r_ref = 2 * d / mpmath.sqrt(eta) * mpmath.sqrt(1 + g * g * d * d / 4)
        assert abs(mpmath.mpf(str(psi0)) - psi_ref) < 1e-35
        assert abs(mpmath.mpf(str(r0)) - r_ref) < 1e-35
    assert float(psi0) == pytest.approx(-0.1655378, abs=5e-8)
    assert float(r0) == pytest.approx(0.3077861, abs=5e-8)


def test_initial_match_vanishes_at_zero():
    r0, psi0 = outer.initial_match(_params("-1e-30"))
    assert abs(float(r0)) < 1e-14 and abs(float(psi0)) < 1e-14


def test_first_layer_and_zero_modes():
    p = _params()
    r0, psi0 = outer.initial_match(p)
    s = outer.compute_outer_series(p, psi0, 5)
    with PREC.activate():
        assert s.c[1][1] == 0
        # a cos + b sin with a = r cos psi, b = r sin psi
        a = 2 * s.c[1][2].real
        b = -2 * s.c[1][2].imag
        assert abs(a - r0 * gmpy2.cos(psi0)) < 1e-38
        assert abs(b - r0 * gmpy2.sin(psi0)) < 1e-38


def test_real_and_psi_derivative():
    p = _params()
    _, psi0 = outer.initial_match(p)
    h = "1e-10"
    with PREC.activate():
        hp = PREC.real(h)
        s0 = outer.compute_outer_series(p, psi0, 5)
        sp_ = outer.compute_outer_series(p, psi0 + hp, 5)
        sm = outer.compute_outer_series(p, psi0 - hp, 5)
        x, dphi, dpsi, imag = outer.eval_outer(s0, "0.3", "-4")
        xp = outer.eval_outer(sp_, "0.3", "-4")[0]
        xm = outer.eval_outer(sm, "0.3", "-4")[0]
        assert imag < 1e-36
        fd = (xp - xm) / (2 * hp)
        assert max(abs(a - b) for a, b in zip(fd, dpsi)) < 1e-18


def test_series_follows_the_flow():
    # x(phi + alpha t, z + beta t) = flow_t(x(phi, z)) up to the e^{(N+1) z} tail
    p = _params()
    sp = spectral(p)
    _, psi0 = outer.initial_match(p)
    s = outer.compute_outer_series(p, psi0, 5)
    errs = []
    for z in (-10, -14):
        with PREC.activate():
            x0 = outer.eval_outer(s, 0, z)[0]
            t = PREC.real(1)
            x1 = outer.eval_outer(s, sp.alpha * t, z + sp.beta * t)[0]
        fr = flow(x0, None, 1, p)
        with PREC.activate():
            errs.append(float(max(abs(a - b) for a, b in zip(fr.x_end, x1))))
    # four units of z buy about e^{-24}
    assert errs[1] < errs[0] * 1e-8
    assert errs[1] < 1e-30


def test_positive_epsilon_rejected():
    p = ModelParams.create(2, 0, PREC)
    with pytest.raises(ValueError):
        outer.compute_outer_series(p, 0, 5)
