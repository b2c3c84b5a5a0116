"""Polynomial fits of the normalized homoclinic invariant in epsilon.

Each fit interpolates exactly through degree+1 consecutive points; the
digits shared by all windows of one degree are taken as the reliable part
of each coefficient.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import gmpy2

from . import mpnum
from .mpnum import Precision


@dataclass
class Point:
    epsilon: object
    omega_bar: object
    provenance: dict = field(default_factory=dict)


@dataclass
class FitReport:
    points: list
    degrees: list
    fits: dict                    # degree -> list of coefficient lists, one per window
    common: dict                  # degree -> list of common-digit strings per coefficient
    n_coeffs: int
    max_rel_error: float | None = None
    validation_interval: tuple | None = None


@dataclass
class ValidityReport:
    subset_stable: bool
    stable_digits: int
    matches_stokes: bool
    omega0_error: float
    within_bound: bool
    max_rel_error: float
    error_curve: list


def _pairs(points):
    out = []
    for p in points:
        if isinstance(p, Point):
            out.append((p.epsilon, p.omega_bar))
        else:
            out.append((p[0], p[1]))
    return out


def fit_expansion(points, degree: int, prec: Precision):
    """Coefficients w_0..w_degree of the polynomial through degree+1 points."""
    pairs = _pairs(points)
    with prec.activate():
        pairs = [(prec.real(e), prec.real(w)) for e, w in pairs]
    return mpnum.vandermonde_interpolate(pairs, degree, prec)


def windows(points, size: int):
    pts = sorted(_pairs(points), key=lambda q: q[0])
    if size > len(pts):
        raise ValueError(f"window of {size} needs at least {size} points, have {len(pts)}")
    return [pts[i:i + size] for i in range(len(pts) - size + 1)]


def window_fits(points, degree: int, prec: Precision, workers: int | None = None):
    wins = windows(points, degree + 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda w: fit_expansion(w, degree, prec), wins))


def _positional(x, sig: int = 60) -> str:
    """Plain decimal expansion of x (no exponent), ``sig`` significant digits."""
    if isinstance(x, gmpy2.mpfr):
        if x == 0:
            return "0"
        mant, e, _ = x.digits(10, sig)
    else:
        x = float(x)
        if x == 0:
            return "0"
        s = f"{x:.{min(sig, 17) - 1}e}"
        head, ex = s.split("e")
        mant = head.replace(".", "")
        e = int(ex) + 1
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    if e <= 0:
        body = "0." + "0" * (-e) + mant
    elif e >= len(mant):
        body = mant + "0" * (e - len(mant))
    else:
        body = mant[:e] + "." + mant[e:]
    return sign + body


def common_digits(values) -> str:
    """Longest common decimal prefix; empty when signs or integer parts differ."""
    vals = list(values)
    if not vals:
        raise ValueError("no values")
    strs = [_positional(v) for v in vals]
    prefix = strs[0]
    for s in strs[1:]:
        n = 0
        for a, b in zip(prefix, s):
            if a != b:
                break
            n += 1
        prefix = prefix[:n]
    ints = {s.split(".")[0] for s in strs}
    if len(ints) > 1:
        return ""
    prefix = prefix.rstrip(".")
    if prefix in ("", "-"):
        return ""
    return prefix


def significant_digits(prefix: str) -> int:
    digits = prefix.lstrip("-").replace(".", "").lstrip("0")
    return len(digits)


def build_report(points, degrees, prec: Precision, n_coeffs: int = 6,
                 workers: int | None = None) -> FitReport:
    fits = {}
    common = {}
    for deg in degrees:
        fs = window_fits(points, deg, prec, workers)
        fits[deg] = fs
        common[deg] = [common_digits([f[k] for f in fs]) for k in range(min(n_coeffs, deg + 1))]
    return FitReport(list(points), list(degrees), fits, common, n_coeffs)


def relative_error_curve(coeffs, points):
    """(epsilon, |P(eps) - w| / |w|) for each point."""
    out = []
    for e, w in _pairs(points):
        pe = mpnum.polyval(coeffs, e)
        out.append((float(e), float(abs(pe - w) / abs(w))))
    return out


def validity_tests(points_all, fit_coeffs, report: FitReport, degree: int, theta0_im,
                   tolerance: float, *, min_digits: int = 10, bound: float = 0.06,
                   interval=(-0.1, 0.0)) -> ValidityReport:
    """Subset stability, constant term vs the Stokes constant, and the
    relative error of ``fit_coeffs`` on points inside ``interval``."""
    prefix = report.common[degree][0]
    nd = significant_digits(prefix)
    err0 = abs(float(fit_coeffs[0] - theta0_im)) if mpnum.is_mp(fit_coeffs[0]) \
        else abs(float(fit_coeffs[0]) - float(theta0_im))
    lo, hi = interval
    inside = [q for q in _pairs(points_all) if lo <= float(q[0]) < hi]
    curve = relative_error_curve(fit_coeffs, inside)
    worst = max((r for _, r in curve), default=math.nan)
    return ValidityReport(nd >= min_digits, nd, err0 <= tolerance, err0,
                          worst <= bound, worst, curve)


def leave_one_out_spread(points, degree: int, prec: Precision) -> float:
    """Largest change of w_0 when one of degree+2 points is dropped."""
    pairs = _pairs(points)
    if len(pairs) != degree + 2:
        raise ValueError(f"need {degree + 2} points")
    c0 = [fit_expansion(pairs[:i] + pairs[i + 1:], degree, prec)[0] for i in range(len(pairs))]
    return float(max(c0) - min(c0))


def write_csv(report: FitReport, path, prec: Precision):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["degree", "k", "coefficient", "common_digits", "stable_digits"])
        for deg in report.degrees:
            last = report.fits[deg][-1]
            for k, pre in enumerate(report.common[deg]):
                w.writerow([deg, k, mpnum.serialize(last[k], prec), pre, significant_digits(pre)])


def format_table(report: FitReport, max_chars: int = 22) -> str:
    """Common digits per degree; with a single window nothing is cross-checked,
    so long entries are clipped to ``max_chars``."""
    n = report.n_coeffs
    head = ["deg", "windows"] + [f"w{k}" for k in range(n)]
    rows = [[str(d), str(len(report.fits[d]))]
            + [c[:max_chars] for c in report.common[d]] + [""] * (n - len(report.common[d]))
            for d in report.degrees]
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(n + 2)]
    lines = ["  ".join(c.ljust(wd) for c, wd in zip(r, widths)).rstrip() for r in [head] + rows]
    return "\n".join(lines) + "\n"


def read_points(path, prec: Precision):
    """Points from a CSV with columns epsilon, omega_bar (comment lines skipped)."""
    pts = []
    with open(path) as fh:
        rows = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(rows)
    for row in reader:
        prov = {k: v for k, v in row.items() if k not in ("epsilon", "omega_bar")}
        pts.append(Point(mpnum.parse(row["epsilon"], prec), mpnum.parse(row["omega_bar"], prec), prov))
    return pts
