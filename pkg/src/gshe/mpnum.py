"""Working-precision arithmetic shared by every pipeline.

A :class:`Precision` decides which number type carries the computation.
Requests of at most 16 digits with no guard bits run on IEEE binary64
(Python floats, numpy float64/complex128), which is what a "16 digit" run
means in practice and what the compiled kernels accept.  Everything else
runs on gmpy2 ``mpfr``/``mpc`` values, held in numpy object arrays when
vectorised.  gmpy2 rounds to the precision of the *active context*, so
multiprecision work must happen inside ``with prec.activate():``.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np

LOG2_10 = math.log2(10.0)
DEFAULT_GUARD_BITS = 32


class NumericalError(Exception):
    """Base class of all numerical failures raised by the package."""


class SingularMatrix(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class DuplicateAbscissa(NumericalError):
    pass


@dataclass(frozen=True)
class Precision:
    """Decimal working precision plus the derived integration settings."""

    digits: int
    guard_bits: int = DEFAULT_GUARD_BITS

    def __post_init__(self):
        if int(self.digits) != self.digits or self.digits < 16:
            raise ValueError(f"digits must be an integer >= 16, got {self.digits}")
        if self.guard_bits < 0:
            raise ValueError("guard_bits must be non-negative")

    @property
    def binary_bits(self) -> int:
        if self.hardware:
            return 53
        return math.ceil(self.digits * LOG2_10) + self.guard_bits

    @property
    def taylor_order(self) -> int:
        return max(22, (3 * self.digits) // 2)

    @property
    def hardware(self) -> bool:
        return self.guard_bits == 0 and self.digits <= 16

    @property
    def tol(self):
        return self.real(f"1e-{self.digits}")

    @property
    def log10_tol(self) -> float:
        return -float(self.digits)

    def with_digits(self, digits: int) -> "Precision":
        return Precision(digits, self.guard_bits)

    def activate(self):
        """Context manager setting the gmpy2 precision (no-op on hardware)."""
        if self.hardware:
            return contextlib.nullcontext()
        return gmpy2.context(gmpy2.get_context(), precision=self.binary_bits)

    # -- scalar constructors -------------------------------------------
    def real(self, x):
        if self.hardware:
            if isinstance(x, Fraction):
                return x.numerator / x.denominator
            return float(x)
        with self.activate():
            if isinstance(x, Fraction):
                return gmpy2.mpfr(x.numerator) / x.denominator
            if isinstance(x, (gmpy2.mpc().__class__, complex)):
                raise TypeError("complex value where a real was expected")
            return gmpy2.mpfr(x)

    def complex(self, re, im=0):
        if self.hardware:
            if isinstance(re, (complex, type(gmpy2.mpc()))):
                return complex(re)
            return complex(self.real(re), self.real(im))
        with self.activate():
            if isinstance(re, complex):
                return gmpy2.mpc(re)
            if isinstance(re, type(gmpy2.mpc())):
                return gmpy2.mpc(re)
            return gmpy2.mpc(self.real(re), self.real(im))

    def zeros(self, shape, complex_=True):
        if self.hardware:
            return np.zeros(shape, dtype=np.complex128 if complex_ else np.float64)
        with self.activate():
            z = gmpy2.mpc(0) if complex_ else gmpy2.mpfr(0)
        out = np.empty(shape, dtype=object)
        out.fill(z)
        return out

    def array(self, values, complex_=True):
        vals = [self.complex(v) if complex_ else self.real(v) for v in values]
        if self.hardware:
            return np.array(vals, dtype=np.complex128 if complex_ else np.float64)
        out = np.empty(len(vals), dtype=object)
        out[:] = vals
        return out

    def pi(self):
        if self.hardware:
            return math.pi
        with self.activate():
            return gmpy2.const_pi()

    def coerce_array(self, a, complex_=True):
        """Convert an array-like to this precision's storage."""
        a = np.asarray(a)
        flat = [self.complex(v) if complex_ else self.real(v) for v in a.ravel()]
        if self.hardware:
            dt = np.complex128 if complex_ else np.float64
            return np.array(flat, dtype=dt).reshape(a.shape)
        out = np.empty(a.size, dtype=object)
        out[:] = flat
        return out.reshape(a.shape)


def is_mp(x) -> bool:
    return isinstance(x, (type(gmpy2.mpfr()), type(gmpy2.mpc())))


def _is_complex(x) -> bool:
    return isinstance(x, (complex, np.complexfloating, type(gmpy2.mpc())))


# -- elementary functions dispatching on the argument type -------------
def exp(x):
    if is_mp(x):
        return gmpy2.exp(x)
    return np.exp(x) if isinstance(x, np.ndarray) else (
        complex(np.exp(x)) if _is_complex(x) else math.exp(x))


def log(x):
    if is_mp(x):
        return gmpy2.log(x)
    return math.log(x)


def sqrt(x):
    if is_mp(x):
        return gmpy2.sqrt(x)
    if _is_complex(x):
        return complex(np.sqrt(complex(x)))
    return math.sqrt(x)


def atan(x):
    return gmpy2.atan(x) if is_mp(x) else math.atan(x)


def cos(x):
    if is_mp(x):
        return gmpy2.cos(x)
    return complex(np.cos(x)) if _is_complex(x) else math.cos(x)


def sin(x):
    if is_mp(x):
        return gmpy2.sin(x)
    return complex(np.sin(x)) if _is_complex(x) else math.sin(x)


def cosh(x):
    return gmpy2.cosh(x) if is_mp(x) else math.cosh(x)


def sinh(x):
    return gmpy2.sinh(x) if is_mp(x) else math.sinh(x)


def tanh(x):
    return gmpy2.tanh(x) if is_mp(x) else math.tanh(x)


def real_part(x):
    if isinstance(x, type(gmpy2.mpc())):
        return x.real
    if _is_complex(x):
        return float(x.real)
    return x


def imag_part(x):
    if isinstance(x, type(gmpy2.mpc())):
        return x.imag
    if _is_complex(x):
        return float(x.imag)
    return 0 * x


def log10_abs(x) -> float:
    """log10|x| as a float, usable far outside the double exponent range."""
    a = abs(x)
    if a == 0:
        return -math.inf
    if is_mp(a):
        return float(gmpy2.log10(a))
    return math.log10(a)


# -- decimal serialization ---------------------------------------------
def roundtrip_digits(prec: Precision) -> int:
    """Significant digits that make decimal output reparse bit-exactly."""
    if prec.hardware:
        return 17
    return math.ceil(prec.binary_bits * math.log10(2.0)) + 1


def format_real(x, ndigits: int) -> str:
    """Scientific notation with exactly ``ndigits`` significant digits."""
    if is_mp(x):
        if gmpy2.is_nan(x) or gmpy2.is_infinite(x):
            return str(float(x))
        if x == 0:
            mant, e = "0" * ndigits, 1
            sign = "-" if gmpy2.is_signed(x) else ""
        else:
            mant, e, _ = x.digits(10, ndigits)
            sign = ""
            if mant.startswith("-"):
                sign, mant = "-", mant[1:]
        exp10 = e - 1
    else:
        x = float(x)
        if not math.isfinite(x):
            return repr(x)
        s = f"{x:.{ndigits - 1}e}"
        head, ex = s.split("e")
        sign = "-" if head.startswith("-") else ""
        mant = head.lstrip("-").replace(".", "")
        exp10 = int(ex)
    frac = mant[1:]
    return f"{sign}{mant[0]}.{frac}e{exp10:+d}" if frac else f"{sign}{mant[0]}.e{exp10:+d}"


def serialize(x, prec: Precision, ndigits: int | None = None) -> str:
    """Decimal text for a real or complex value; complex as 're im'."""
    n = ndigits or roundtrip_digits(prec)
    if _is_complex(x):
        return f"{format_real(real_part(x), n)} {format_real(imag_part(x), n)}"
    return format_real(x, n)


def parse(text: str, prec: Precision):
    parts = text.split()
    if len(parts) == 1:
        return prec.real(parts[0]) if prec.hardware else _mpfr_from_str(parts[0], prec)
    if len(parts) == 2:
        if prec.hardware:
            return complex(float(parts[0]), float(parts[1]))
        with prec.activate():
            return gmpy2.mpc(_mpfr_from_str(parts[0], prec), _mpfr_from_str(parts[1], prec))
    raise ValueError(f"cannot parse number from {text!r}")


def _mpfr_from_str(s: str, prec: Precision):
    return gmpy2.mpfr(s, prec.binary_bits)


# -- small dense linear algebra ----------------------------------------
def _mag(x):
    return abs(x)


def solve2x2(m, rhs, prec: Precision):
    """Solve a 2x2 system by Cramer's rule with a conditioning guard."""
    (a, b), (c, d) = m
    r1, r2 = rhs
    with prec.activate():
        det = a * d - b * c
        n1 = max(_mag(a), _mag(b))
        n2 = max(_mag(c), _mag(d))
        guard = prec.real(f"1e{-prec.digits + 4}") * n1 * n2
        if n1 == 0 or n2 == 0 or _mag(det) <= guard:
            raise SingularMatrix(f"|det|={float(_mag(det)):.3e} below guard")
        x1 = (d * r1 - b * r2) / det
        x2 = (a * r2 - c * r1) / det
    return x1, x2


def solve_dense(a, b, prec: Precision, rel_pivot=None):
    """Gaussian elimination with partial pivoting on lists of scalars."""
    n = len(a)
    with prec.activate():
        m = [list(row) + [b[i]] for i, row in enumerate(a)]
        scale = max((_mag(v) for row in a for v in row), default=0)
        thresh = (rel_pivot if rel_pivot is not None
                  else prec.real(f"1e{-prec.digits + 4}")) * scale
        for col in range(n):
            piv = max(range(col, n), key=lambda r: _mag(m[r][col]))
            if scale == 0 or _mag(m[piv][col]) <= thresh:
                raise SingularMatrix(f"pivot {col} vanishes")
            m[col], m[piv] = m[piv], m[col]
            p = m[col][col]
            for r in range(col + 1, n):
                f = m[r][col] / p
                if f != 0:
                    for k in range(col, n + 1):
                        m[r][k] -= f * m[col][k]
        x = [None] * n
        for i in range(n - 1, -1, -1):
            s = m[i][n]
            for k in range(i + 1, n):
                s -= m[i][k] * x[k]
            x[i] = s / m[i][i]
    return x


def least_squares_fit(basis, samples, prec: Precision):
    """Least-squares coefficients of ``sum c_i basis[i](x)`` via normal equations.

    ``basis`` is a sequence of callables mapping an abscissa to a value.
    """
    nb = len(basis)
    if len(samples) < nb:
        raise RankDeficient(f"{len(samples)} samples for {nb} basis functions")
    with prec.activate():
        # plain ints/floats from the basis would drop the sums to double precision
        lift = lambda v: v if _is_complex(v) or is_mp(v) else prec.real(v)
        rows = [[lift(f(x)) for f in basis] for x, _ in samples]
        ys = [y for _, y in samples]
        ata = [[sum(r[i] * r[j] for r in rows) for j in range(nb)] for i in range(nb)]
        aty = [sum(r[i] * y for r, y in zip(rows, ys)) for i in range(nb)]
        # equilibrate so the pivot guard is scale free
        d = [sqrt(ata[i][i]) if ata[i][i] != 0 else 1 for i in range(nb)]
        ata_s = [[ata[i][j] / (d[i] * d[j]) for j in range(nb)] for i in range(nb)]
        aty_s = [aty[i] / d[i] for i in range(nb)]
        try:
            c = solve_dense(ata_s, aty_s, prec)
        except SingularMatrix as exc:
            raise RankDeficient(str(exc)) from None
        return [c[i] / d[i] for i in range(nb)]


def vandermonde_interpolate(points, degree: int, prec: Precision):
    """Coefficients (c_0..c_n) of the polynomial through exactly n+1 points."""
    if len(points) != degree + 1:
        raise ValueError(f"need exactly {degree + 1} points, got {len(points)}")
    xs = [x for x, _ in points]
    for i in range(len(xs)):
        for j in range(i):
            if xs[i] == xs[j]:
                raise DuplicateAbscissa(f"abscissa {xs[i]} repeated")
    with prec.activate():
        # Newton divided differences, then expand into the monomial basis
        coef = [y for _, y in points]
        n = degree + 1
        for lvl in range(1, n):
            for i in range(n - 1, lvl - 1, -1):
                coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - lvl])
        poly = [coef[-1]]
        for i in range(n - 2, -1, -1):
            # poly <- poly*(x - xs[i]) + coef[i]
            new = [0 * coef[0]] * (len(poly) + 1)
            for k, c in enumerate(poly):
                new[k + 1] = new[k + 1] + c
                new[k] = new[k] - c * xs[i]
            new[0] = new[0] + coef[i]
            poly = new
    return poly


def polyval(coeffs, x):
    acc = 0 * x
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc
