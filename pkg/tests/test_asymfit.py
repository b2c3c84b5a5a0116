import gmpy2
import pytest
from hypothesis import given, settings, strategies as st

from gshe import asymfit, mpnum
from gshe.mpnum import Precision

PREC = Precision(50)


def test_common_digits_examples():
    assert asymfit.common_digits([gmpy2.mpfr("10.4721621"), gmpy2.mpfr("10.4721619")]) == "10.47216"
    assert asymfit.common_digits([1.0, -1.0]) == ""
    assert asymfit.common_digits([2.5, 2.5]).startswith("2.5")
    assert asymfit.significant_digits("10.47216") == 7
    assert asymfit.significant_digits("-0.00123") == 3


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=4, max_size=6))
def test_windows_recover_polynomial(coeffs):
    with PREC.activate():
        c = [PREC.real(v) / 7 for v in coeffs]
        pts = [(PREC.real(-i) / 1000, mpnum.polyval(c, PREC.real(-i) / 1000)) for i in range(1, 10)]
    deg = len(c) - 1
    fits = asymfit.window_fits(pts, deg, PREC)
    assert len(fits) == len(pts) - deg
    for f in fits:
        assert all(abs(a - b) < 1e-25 * (1 + abs(b)) for a, b in zip(f, c))


def significant_digits_ok(prefix):
    return prefix.startswith("10.333333333") and asymfit.significant_digits(prefix) >= 40


def test_report_and_validity(tmp_path):
    with PREC.activate():
        c = [PREC.real(31) / 3, PREC.real(9), PREC.real(-40)]
        pts = [asymfit.Point(PREC.real(-i) / 200, mpnum.polyval(c, PREC.real(-i) / 200)) for i in range(1, 9)]
    rep = asymfit.build_report(pts, [2, 3], PREC, n_coeffs=3)
    assert significant_digits_ok(rep.common[2][0])
    v = asymfit.validity_tests(pts, rep.fits[2][0], rep, 2, c[0], 1e-10)
    assert v.subset_stable and v.matches_stokes and v.within_bound
    path = tmp_path / "fit.csv"
    asymfit.write_csv(rep, path, PREC)
    assert path.read_text().splitlines()[0] == "degree,k,coefficient,common_digits,stable_digits"
    assert "w0" in asymfit.format_table(rep)


def test_read_points_skips_comments(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("epsilon,omega_bar,branch\n-0.01,10.1,0\n-0.02,10.2,0\n# manifest: x\n")
    pts = asymfit.read_points(path, PREC)
    assert [float(p.omega_bar) for p in pts] == [10.1, 10.2]
    assert pts[0].provenance["branch"] == "0"


def test_windows_too_large():
    with pytest.raises(ValueError):
        asymfit.windows([(0, 1), (1, 2)], 3)


def test_leave_one_out_exact_for_polynomial():
    with PREC.activate():
        pts = [(PREC.real(i), PREC.real(3) + 2 * PREC.real(i)) for i in range(4)]
    assert asymfit.leave_one_out_spread(pts, 2, PREC) < 1e-40
