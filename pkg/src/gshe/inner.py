"""Formal separatrix of the inner equation (1 + (d_phi + d_tau)^2)^2 u = kappa u^2 - u^3.

The scalar profile is u = sum_{k>=1} sum_{|j|<=k} u[k, j] e^{i j phi} tau^{-k}.
Collecting tau^{-m} e^{i j phi} gives, with c_n(j) the coefficients of
(1 + (ij + D)^2)^2 = sum_n c_n(j) D^n and D^n tau^{-k} = (-1)^n (k)_n tau^{-k-n},

    sum_n c_n(j) (-1)^n (m-n)_n u[m-n, j] = kappa (u^2)[m, j] - (u^3)[m, j].

For |j| != 1 the leading symbol c_0(j) = (1-j^2)^2 is nonzero and the
equation gives u[m, j].  For j = +-1 both c_0 and c_1 vanish, so u[k, +-1]
is fixed only by the equation at order k+2.  Level 1 is nonlinear (it fixes
the amplitude); later levels are affine in the two unknowns.  Level 2 has
a one-dimensional kernel (translation in tau) which is pinned by requiring
no cos(phi) term at that order.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import gmpy2
import numpy as np
from filelock import FileLock

from . import mpnum
from .model import nf_params
from .mpnum import NumericalError, Precision


class ResonanceClosureFailure(NumericalError):
    pass


CACHE_FORMAT = 1


def _symbol_coeffs(j: int):
    jj = j * j
    return (
        complex((1 - jj) ** 2),
        complex(0, 4 * j * (1 - jj)),
        complex(2 * (1 - jj) - 4 * jj),
        complex(0, 4 * j),
        complex(1),
    )


def _rising(k: int, n: int) -> int:
    out = 1
    for i in range(n):
        out *= k + i
    return out


@dataclass
class InnerSeries:
    kappa: object
    N: int
    precision: Precision
    u: list            # u[k] is an array of length 2k+1 indexed by j+k
    gamma: list = field(default_factory=list)  # gamma[k]: (2k+1, 4) array
    closure_log: list = field(default_factory=list)

    def coeff(self, k: int, j: int):
        if abs(j) > k:
            return 0 * self.u[1][0]
        return self.u[k][j + k]

    def gamma_max(self, k: int):
        return max(abs(v) for v in self.gamma[k].ravel())


class _Builder:
    def __init__(self, kappa, N, prec: Precision):
        self.prec = prec
        self.kappa = kappa
        self.N = N
        self.zero = prec.complex(0)
        self.U = [None] + [self._blank(k) for k in range(1, N + 3)]
        self.final = 0
        self._sq = {}
        self._cu = {}

    def _blank(self, k):
        a = np.empty(2 * k + 1, dtype=object)
        a.fill(self.zero)
        return a

    def get(self, k, j):
        if k < 1 or abs(j) > k:
            return None
        return self.U[k][j + k]

    # (u^2)[m] and (u^3)[m] as arrays over modes -m..m; entries whose inputs
    # are all final (levels <= self.final) are memoised
    def square(self, m):
        if m in self._sq:
            return self._sq[m]
        out = self._blank(m)
        for k1 in range(1, m):
            out += np.convolve(self.U[k1], self.U[m - k1])
        if m - 1 <= self.final:
            self._sq[m] = out
        return out

    def cube(self, m):
        if m in self._cu:
            return self._cu[m]
        out = self._blank(m)
        for k1 in range(1, m - 1):
            out += np.convolve(self.U[k1], self.square(m - k1))
        if m - 2 <= self.final:
            self._cu[m] = out
        return out

    def linear_lower(self, m, j):
        """Linear operator terms at order m, mode j, excluding u[m, j] itself."""
        c = _symbol_coeffs(j)
        acc = self.zero
        for n in range(1, 5):
            val = self.get(m - n, j)
            if val is None or c[n] == 0:
                continue
            coef = c[n] * ((-1) ** n) * _rising(m - n, n)
            acc += val * coef
        return acc

    def rhs(self, m):
        out = self.kappa * self.square(m)
        if m >= 3:
            out = out - self.cube(m)
        return out

    def solve_nonresonant(self, m):
        r = self.rhs(m)
        for j in range(-m, m + 1):
            if abs(j) == 1:
                continue
            c0 = _symbol_coeffs(j)[0]
            self.U[m][j + m] = (r[j + m] - self.linear_lower(m, j)) / c0

    def resonant_residual(self, m):
        r = self.rhs(m)
        return [self.linear_lower(m, j) - r[j + m] for j in (-1, 1)]


def _work_precision(prec: Precision) -> Precision:
    # coefficients are built with ten spare digits and rounded to the run
    # precision, so series roundoff never competes with integration roundoff
    return Precision(prec.digits + 10)


def compute_inner_series(kappa, N: int, prec: Precision) -> InnerSeries:
    """Coefficients u[k, j] for 1 <= k <= N at the given precision."""
    series = _compute(kappa, N, _work_precision(prec))
    return series if series.precision is prec else convert_series(series, prec)


def _compute(kappa, N: int, work: Precision) -> InnerSeries:
    if N < 2:
        raise ValueError("N must be >= 2")
    with work.activate():
        k_val = work.real(kappa)
        eta = nf_params(k_val).eta
        if eta <= 0:
            raise ValueError("eta(kappa) must be positive")
        b = _Builder(k_val, N, work)
        log = []

        # level 1: u[1, +-1] = s, residual at order 3 is A s + B s^3
        def r1(s):
            b.U[1][0] = b.U[1][2] = s
            b.U[1][1] = b.zero
            b.solve_nonresonant(2)
            return b.resonant_residual(3)[1]

        one = work.complex(1)
        R1, R2 = r1(one), r1(2 * one)
        B = (R2 - 2 * R1) / 6
        A = R1 - B
        s = gmpy2.sqrt(-A / B)
        if s.imag < 0:
            s = -s
        r1(s)
        b.final = 1
        log.append(("level", 1, "amplitude", s))

        guard = work.real(f"1e{-(work.digits // 2)}")
        for k in range(2, N + 1):
            def residual(a, bb, k=k):
                b.U[k][k - 1] = a
                b.U[k][k + 1] = bb
                b.U[k + 1].fill(b.zero)
                b.solve_nonresonant(k + 1)
                return b.resonant_residual(k + 2)

            z = b.zero
            r0 = residual(z, z)
            # probe with a step of the size of the expected solution so the
            # differences below do not cancel against the large residual
            t = max(abs(r0[0]), abs(r0[1])) / (4 * k * k)
            t = one * (t if t > 0 else 1)
            ra = residual(t, z)
            rb = residual(z, t)
            m = [[(ra[0] - r0[0]) / t, (rb[0] - r0[0]) / t],
                 [(ra[1] - r0[1]) / t, (rb[1] - r0[1]) / t]]
            n1 = max(abs(m[0][0]), abs(m[0][1]))
            n2 = max(abs(m[1][0]), abs(m[1][1]))
            det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
            if abs(det) > guard * n1 * n2:
                a, bb = mpnum.solve2x2(m, (-r0[0], -r0[1]), work)
            else:
                # kernel direction (1, 1) is a shift in tau; impose a + b = 0
                rows = [m[0][0] - m[0][1], m[1][0] - m[1][1]]
                i = 0 if abs(rows[0]) >= abs(rows[1]) else 1
                if rows[i] == 0:
                    raise ResonanceClosureFailure(f"level {k}: fully degenerate")
                a = -r0[i] / rows[i]
                bb = -a
                other = 1 - i
                mis = rows[other] * a + r0[other]
                scale = max(abs(r0[other]), abs(rows[other] * a), work.real(1))
                if abs(mis) > guard * scale:
                    raise ResonanceClosureFailure(
                        f"level {k}: inconsistent solvability condition ({float(abs(mis)):.3e})")
                log.append(("level", k, "kernel", "tau-shift fixed by zero cos term"))
            residual(a, bb)
            b.final = k
        u = [None] + [b.U[k].copy() for k in range(1, N + 1)]
    series = InnerSeries(k_val, N, work, u, closure_log=log)
    series.gamma = lift_coefficients(series)
    return series


def _d_apply(coeffs, N):
    """Coefficients of D u with D = d_phi + d_tau, orders 1..N."""
    out = [None]
    for m in range(1, N + 1):
        arr = np.empty(2 * m + 1, dtype=object)
        for j in range(-m, m + 1):
            v = coeffs[m][j + m] * complex(0, j) if abs(j) <= m else 0
            if m >= 2 and abs(j) <= m - 1:
                v = v - coeffs[m - 1][j + m - 1] * (m - 1)
            arr[j + m] = v
        out.append(arr)
    return out


def lift_coefficients(series: InnerSeries):
    """Gamma[k] with shape (2k+1, 4): (u, Du, -(Du + D^3 u), u + D^2 u)."""
    N = series.N
    with series.precision.activate():
        d1 = _d_apply(series.u, N)
        d2 = _d_apply(d1, N)
        d3 = _d_apply(d2, N)
        gam = [None]
        for k in range(1, N + 1):
            g = np.empty((2 * k + 1, 4), dtype=object)
            g[:, 0] = series.u[k]
            g[:, 1] = d1[k]
            g[:, 2] = -(d1[k] + d3[k])
            g[:, 3] = series.u[k] + d2[k]
            gam.append(g)
    return gam


def convert_series(series: InnerSeries, prec: Precision) -> InnerSeries:
    conv = (lambda a: np.array([complex(v) for v in a.ravel()], dtype=np.complex128).reshape(a.shape)) \
        if prec.hardware else (lambda a: prec.coerce_array(a))
    out = InnerSeries(prec.real(series.kappa), series.N, prec,
                      [None] + [conv(series.u[k]) for k in range(1, series.N + 1)],
                      closure_log=list(series.closure_log))
    out.gamma = [None] + [conv(series.gamma[k]) for k in range(1, series.N + 1)]
    return out


def eval_inner(series: InnerSeries, phi, tau, terms: int | None = None):
    """(Gamma_n(phi, tau), d_phi Gamma_n(phi, tau)) as 4-vectors."""
    n = terms or series.N
    if n > series.N:
        raise ValueError("terms exceeds series order")
    prec = series.precision
    with prec.activate():
        phi = prec.real(phi)
        tau = prec.complex(tau)
        if prec.hardware:
            e1 = complex(math.cos(phi), math.sin(phi))
        else:
            e1 = gmpy2.mpc(gmpy2.cos(phi), gmpy2.sin(phi))
        # phases e^{ijphi} for j = -n..n
        ph = [None] * (2 * n + 1)
        ph[n] = prec.complex(1)
        inv1 = 1 / e1
        for j in range(1, n + 1):
            ph[n + j] = ph[n + j - 1] * e1
            ph[n - j] = ph[n - j + 1] * inv1
        itau = 1 / tau
        x = prec.zeros(4)
        v = prec.zeros(4)
        p = prec.complex(1)
        for k in range(1, n + 1):
            p = p * itau
            g = series.gamma[k]
            for j in range(-k, k + 1):
                w = ph[n + j] * p
                term = g[j + k] * w
                x = x + term
                if j:
                    v = v + term * complex(0, j)
    return x, v


def optimal_truncation(series: InnerSeries, tau):
    """Index of the least term max_j |Gamma_{k,j}| |tau|^{-k} and its size."""
    lt = mpnum.log10_abs(tau)
    best_k, best = 1, math.inf
    for k in range(1, series.N + 1):
        val = mpnum.log10_abs(series.gamma_max(k)) - k * lt
        if val < best:
            best_k, best = k, val
    return best_k, 10.0 ** best


def least_term_profile(series: InnerSeries, radius) -> list:
    """log10(max_j |Gamma_{k,j}| / radius^k) for k = 1..N."""
    lr = mpnum.log10_abs(radius)
    return [mpnum.log10_abs(series.gamma_max(k)) - k * lr for k in range(1, series.N + 1)]


# -- cache -----------------------------------------------------------------
def cache_dir() -> Path:
    root = os.environ.get("GSHE_CACHE_DIR")
    return Path(root) if root else Path.home() / ".cache" / "gshe"


def _cache_name(kind, kappa_str, N, digits, extra=""):
    safe = kappa_str.replace("/", "_").replace("-", "m")
    return f"{kind}_k{safe}_N{N}_D{digits}{extra}.txt"


def save_series(series: InnerSeries, path: Path, kappa_str: str):
    prec = series.precision
    lines = [f"format={CACHE_FORMAT}", "kind=inner", f"kappa={kappa_str}",
             f"N={series.N}", f"digits={prec.digits}", f"guard_bits={prec.guard_bits}"]
    for k in range(1, series.N + 1):
        for j in range(-k, k + 1):
            lines.append(f"{k} {j} {mpnum.serialize(series.u[k][j + k], prec)}")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp_", suffix=".txt")
    with os.fdopen(fd, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_series(path: Path, prec: Precision) -> InnerSeries:
    header = {}
    u = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if "=" in line:
                key, val = line.split("=", 1)
                header[key] = val
                continue
            k, j, re, im = line.split()
            u[(int(k), int(j))] = mpnum.parse(f"{re} {im}", prec)
    if int(header.get("format", -1)) != CACHE_FORMAT or header.get("kind") != "inner":
        raise ValueError(f"{path}: not an inner-series cache")
    if int(header["digits"]) != prec.digits or int(header.get("guard_bits", -1)) != prec.guard_bits:
        raise ValueError(f"{path}: precision mismatch")
    N = int(header["N"])
    arrs = [None]
    for k in range(1, N + 1):
        a = prec.zeros(2 * k + 1)
        for j in range(-k, k + 1):
            a[j + k] = u[(k, j)]
        arrs.append(a)
    kstr = header["kappa"]
    kappa = prec.real(Fraction(kstr)) if "/" in kstr else prec.real(kstr)
    s = InnerSeries(kappa, N, prec, arrs)
    s.gamma = lift_coefficients(s)
    return s


def get_inner_series(kappa, N: int, prec: Precision, use_cache: bool = True) -> InnerSeries:
    """Load the series from the on-disk cache or compute and store it."""
    kstr = str(kappa)
    if not use_cache:
        return compute_inner_series(kappa, N, prec)
    work = _work_precision(prec)
    path = cache_dir() / _cache_name("inner", kstr, N, work.digits, f"_g{work.guard_bits}")
    path.parent.mkdir(parents=True, exist_ok=True)
    series = None
    with FileLock(str(path) + ".lock"):
        if path.exists():
            try:
                series = load_series(path, work)
            except (ValueError, KeyError):
                series = None
        if series is None:
            series = _compute(kappa, N, work)
            save_series(series, path, kstr)
    return series if work is prec else convert_series(series, prec)
