import gmpy2
import pytest

from gshe import inner
from gshe.mpnum import Precision

PREC = Precision(40)


@pytest.fixture(scope="module")
def series():
    return inner.compute_inner_series(2, 12, PREC)


def _closed():
    with PREC.activate():
        eta = gmpy2.mpfr(125) / 288
        mu = gmpy2.mpfr(439) / 864
        k = gmpy2.mpfr(2)
        se = gmpy2.sqrt(eta)
        return eta, mu, k, se


def test_first_layer_closed_form(series):
    eta, mu, k, se = _closed()
    with PREC.activate():
        # u_1 = i cos(phi)/sqrt(eta)
        target = gmpy2.mpc(0, 1) / (2 * se)
        assert abs(series.coeff(1, 1) - target) < 1e-38
        assert abs(series.coeff(1, -1) - target) < 1e-38
        assert abs(series.coeff(1, 0)) < 1e-38


def test_second_layer_closed_form(series):
    eta, mu, k, se = _closed()
    with PREC.activate():
        assert abs(series.coeff(2, 2) + k / (36 * eta)) < 1e-38
        assert abs(series.coeff(2, -2) + k / (36 * eta)) < 1e-38
        assert abs(series.coeff(2, 0) + k / (2 * eta)) < 1e-38
        c1 = (mu / eta + gmpy2.mpfr(1) / 2) / (2 * se)
        assert abs(series.coeff(2, 1) - c1) < 1e-38
        assert abs(series.coeff(2, -1) + c1) < 1e-38


def test_one_term_evaluation(series):
    eta, _, _, se = _closed()
    with PREC.activate():
        x, _ = inner.eval_inner(series, 0, gmpy2.mpc(0, -20), terms=1)
        assert abs(x[0] + 1 / (20 * se)) < 1e-38


def test_reflection_symmetry(series):
    # (phi, tau) -> (pi - phi, -tau) preserves the equation and the cos(phi) normalization
    with PREC.activate():
        for k in range(1, series.N + 1):
            for j in range(-k, k + 1):
                a = series.coeff(k, j)
                b = series.coeff(k, -j)
                assert abs(a - (-1) ** (k + j) * b) <= 1e-30 * (1 + abs(a))


def test_cache_roundtrip(tmp_path, monkeypatch):
    monkeypatch.setenv("GSHE_CACHE_DIR", str(tmp_path))
    a = inner.get_inner_series(2, 8, PREC)
    assert list(tmp_path.iterdir())
    b = inner.get_inner_series(2, 8, PREC)
    assert all(a.coeff(k, j) == b.coeff(k, j) for k in range(1, 9) for j in range(-k, k + 1))


def test_least_term_profile_decreasing(series):
    prof = inner.least_term_profile(series, 350 * 3.141592653589793)
    assert all(b < a for a, b in zip(prof, prof[1:]))
