import math

import pytest

from gshe import stokes
from gshe.inner import get_inner_series
from gshe.model import nf_params

PREC = stokes.stokes_precision(16)


@pytest.fixture(scope="module")
def series():
    return get_inner_series(2, 40, PREC)


def test_theta_hat_close_to_reference(series):
    r = stokes.theta_hat(series, 20, 350, 9, PREC)
    # at sigma = 20 the remainder C1 e^-sigma is a few 1e-5
    assert abs(r.theta_hat.imag - 10.472161956944398) < 1e-4
    assert abs(r.theta_hat.real) < 1e-3
    assert r.steps > 0


def test_theta_hat_input_checks(series):
    with pytest.raises(ValueError):
        stokes.theta_hat(series, 20, 351, 9, PREC)
    with pytest.raises(ValueError):
        stokes.theta_hat(series, -1, 350, 9, PREC)
    with pytest.raises(ValueError):
        stokes.theta_hat(series, 20, 350, 41, PREC)


def test_truncation_warning(series):
    with pytest.warns(stokes.TruncationDominated):
        stokes.theta_hat(series, 3, 100, 2, PREC)


def test_error_model_recovers_synthetic_constants():
    D, C, C0, C1 = 16, 2.0, 10.47, -1.7e4
    eta = float(nf_params(2).eta)
    sig = [20 + 0.25 * i for i in range(36)]
    samples = []
    for s in sig:
        if s <= 24:
            samples.append((s, C0 + C1 * math.exp(-s)))
        else:
            samples.append((s, C0 + C1 * math.exp(-s) + C * 10.0 ** -D / eta * math.exp(s) / s ** 2))
    Cf, C0f, C1f, sstar = stokes.fit_error_model(samples, D, eta)
    assert C0f == pytest.approx(C0, rel=1e-10)
    assert C1f == pytest.approx(C1, rel=1e-6)
    assert Cf == pytest.approx(C, rel=1e-3)
    # balance C e^s / s^2 10^-D / eta = |C1| e^-s at sigma*
    lhs = Cf * 10.0 ** -D / eta * math.exp(sstar) / sstar ** 2
    assert lhs == pytest.approx(abs(C1f) * math.exp(-sstar), rel=1e-6)


def test_error_model_needs_both_branches():
    with pytest.raises(stokes.InsufficientSpan):
        stokes.fit_error_model([(20, 1.0), (21, 1.0)], 16, 0.43)


def test_default_grid_brackets_knee():
    g = stokes.default_sigma_grid(16)
    lo, hi = stokes.default_knee(16)
    assert g[0] < lo < hi < g[-1]


def test_scan_records_failures():
    rows = stokes.stokes_scan([0.5], 16)
    assert rows[0]["error"] and math.isnan(rows[0]["im_theta0"])
