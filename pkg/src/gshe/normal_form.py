"""Exact normalization of the GSHE Hamiltonian through weighted degree five.

Polynomials live in Q[q1, q2, p1, p2, eps, kappa, s] with s^2 = 2, so the
sqrt(2) entries of the linear reduction stay exact.  The grading is
w(q) = 2, w(p) = 1, w(eps) = 2, w(kappa) = w(s) = 0; a Poisson bracket
lowers the total weight by w(q) + w(p) = 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .mpnum import NumericalError

NVARS = 7
Q1, Q2, P1, P2, EPS, KAPPA, S = range(NVARS)
NAMES = ("q1", "q2", "p1", "p2", "eps", "kappa", "s")
WEIGHTS = (2, 2, 1, 1, 2, 0, 0)
CANONICAL = ((Q1, P1), (Q2, P2))


class NotSymplectic(NumericalError):
    pass


class NonincreasingWeight(NumericalError):
    pass


class NormalizationMismatch(NumericalError):
    pass


class ExactPoly:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        for mono, c in (terms or {}).items():
            self._add_term(tuple(mono), Fraction(c))

    def _add_term(self, mono, c):
        if mono[S] >= 2:
            c = c * 2 ** (mono[S] // 2)
            mono = mono[:S] + (mono[S] % 2,)
        if c == 0:
            return
        v = self.terms.get(mono, 0) + c
        if v == 0:
            self.terms.pop(mono, None)
        else:
            self.terms[mono] = v

    @classmethod
    def const(cls, c):
        return cls({(0,) * NVARS: c})

    @classmethod
    def var(cls, i, power=1):
        mono = [0] * NVARS
        mono[i] = power
        return cls({tuple(mono): 1})

    def copy(self):
        out = ExactPoly()
        out.terms = dict(self.terms)
        return out

    def __add__(self, other):
        other = _lift(other)
        out = self.copy()
        for m, c in other.terms.items():
            out._add_term(m, c)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = ExactPoly()
        out.terms = {m: -c for m, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        other = _lift(other)
        out = ExactPoly()
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                out._add_term(tuple(a + b for a, b in zip(m1, m2)), c1 * c2)
        return out

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = ExactPoly.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        return (self - _lift(other)).is_zero()

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self):
        return not self.terms

    def diff(self, i):
        out = ExactPoly()
        for m, c in self.terms.items():
            if m[i]:
                mm = list(m)
                mm[i] -= 1
                out._add_term(tuple(mm), c * m[i])
        return out

    def coefficient(self, mono_phase):
        """Coefficient of a phase-space monomial (q1, q2, p1, p2) as a
        polynomial in eps, kappa, s."""
        out = ExactPoly()
        for m, c in self.terms.items():
            if m[:4] == tuple(mono_phase):
                out._add_term((0, 0, 0, 0) + m[4:], c)
        return out

    def truncate(self, wmax):
        out = ExactPoly()
        out.terms = {m: c for m, c in self.terms.items() if weight(m) <= wmax}
        return out

    def min_weight(self):
        return min((weight(m) for m in self.terms), default=math.inf)

    def substitute(self, images):
        """Replace each phase variable i < 4 by the polynomial images[i]."""
        out = ExactPoly()
        cache = {}
        for m, c in self.terms.items():
            term = ExactPoly({(0, 0, 0, 0) + m[4:]: c})
            for i in range(4):
                if m[i]:
                    key = (i, m[i])
                    if key not in cache:
                        cache[key] = images[i] ** m[i]
                    term = term * cache[key]
            out = out + term
        return out

    def evaluate(self, **values):
        """Exact value when every variable present is given (s defaults to sqrt 2)."""
        vals = [values.get(n) for n in NAMES]
        tot = 0
        for m, c in self.terms.items():
            t = c
            for i, e in enumerate(m):
                if e:
                    if i == S and vals[i] is None:
                        t = t * math.sqrt(2) ** e
                        continue
                    if vals[i] is None:
                        raise ValueError(f"no value for {NAMES[i]}")
                    t = t * vals[i] ** e
            tot = tot + t
        return tot

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items()):
            mono = "*".join(f"{NAMES[i]}^{e}" if e > 1 else NAMES[i] for i, e in enumerate(m) if e)
            parts.append(f"({c})*{mono}" if mono else f"({c})")
        return " + ".join(parts)


def _lift(x):
    return x if isinstance(x, ExactPoly) else ExactPoly.const(x)


def weight(mono) -> int:
    return sum(w * e for w, e in zip(WEIGHTS, mono))


q1, q2, p1, p2 = (ExactPoly.var(i) for i in (Q1, Q2, P1, P2))
eps, kappa, s = ExactPoly.var(EPS), ExactPoly.var(KAPPA), ExactPoly.var(S)
I1 = q2 * p1 - q1 * p2
I2 = q1 ** 2 + q2 ** 2
I3 = p1 ** 2 + p2 ** 2


def poisson(F: ExactPoly, G: ExactPoly) -> ExactPoly:
    """{F, G} = sum_i dF/dq_i dG/dp_i - dF/dp_i dG/dq_i."""
    out = ExactPoly()
    for qi, pi in CANONICAL:
        out = out + F.diff(qi) * G.diff(pi) - F.diff(pi) * G.diff(qi)
    return out


def original_hamiltonian() -> ExactPoly:
    return (p1 * q2 - p2 * q1 + p2 ** 2 * Fraction(1, 2) + eps * q1 ** 2 * Fraction(1, 2)
            + kappa * q1 ** 3 * Fraction(1, 3) - q1 ** 4 * Fraction(1, 4))


def reduction_matrix():
    """Rows give the old (q1, q2, p1, p2) in terms of the new ones."""
    h, q = s * Fraction(1, 2), s * Fraction(1, 4)
    z = ExactPoly()
    return [[z, -q, -h, z],
            [q, z, z, h],
            [s, z, z, z],
            [z, -s, z, z]]


def _standard_j():
    one, z = ExactPoly.const(1), ExactPoly()
    return [[z, z, one, z], [z, z, z, one], [-one, z, z, z], [z, -one, z, z]]


def check_symplectic(T) -> None:
    J = _standard_j()
    n = 4
    TtJ = [[sum((T[k][i] * J[k][j] for k in range(n)), ExactPoly()) for j in range(n)] for i in range(n)]
    M = [[sum((TtJ[i][k] * T[k][j] for k in range(n)), ExactPoly()) for j in range(n)] for i in range(n)]
    bad = [(i, j) for i in range(n) for j in range(n) if not (M[i][j] - J[i][j]).is_zero()]
    if bad:
        raise NotSymplectic(f"T^T J T differs from J at entries {bad}")


def linear_reduce(H: ExactPoly, T=None) -> ExactPoly:
    T = T or reduction_matrix()
    check_symplectic(T)
    new = [q1, q2, p1, p2]
    images = [sum((T[i][j] * new[j] for j in range(4)), ExactPoly()) for i in range(4)]
    return H.substitute(images)


def lie_flow(H: ExactPoly, F: ExactPoly, wcut: int, max_terms: int = 200) -> ExactPoly:
    """H o Phi_F^1 = sum_m L^m H / m! with L G = {G, F}, truncated at weight wcut.

    Weight-3 parts of F keep the weight but lower the q-degree, so the sum
    still terminates; any part below weight 3 would lower the weight."""
    if F.is_zero():
        return H.truncate(wcut)
    if F.min_weight() < 3:
        raise NonincreasingWeight(f"generator has weight {F.min_weight()} < 3")
    out = H.truncate(wcut)
    term = out
    for m in range(1, max_terms + 1):
        term = poisson(term, F).truncate(wcut) * Fraction(1, m)
        if term.is_zero():
            return out
        out = out + term
    raise NonincreasingWeight(f"Lie series did not terminate after {max_terms} terms")


def generators():
    """F0..F4 of the degree-five normalizing transformation."""
    R = Fraction
    k, k2 = kappa, kappa ** 2
    F0 = eps * (-R(5, 32) * q1 * p1 + R(3, 32) * q2 * p2 + R(1, 8) * p1 * p2)
    F1 = k * s * (R(7, 216) * q1 ** 2 * p2 + R(95, 216) * q1 * q2 * p1 + R(17, 72) * q1 * p1 ** 2
                  + R(5, 36) * q1 * p2 ** 2 + R(175, 432) * q2 ** 2 * p2 + R(1, 36) * q2 * p1 * p2
                  - R(1, 12) * p1 ** 2 * p2 - R(1, 18) * p2 ** 3)
    F2 = ((-R(517, 20736) * k2 + R(29, 512)) * q1 * p1 ** 3
          + (-R(217, 20736) * k2 + R(17, 512)) * q1 * p1 * p2 ** 2
          + (R(2327, 20736) * k2 - R(31, 512)) * q2 * p1 ** 2 * p2
          + (-R(19, 512) + R(2027, 20736) * k2) * q2 * p2 ** 3
          + (-R(5, 128) + R(7, 192) * k2) * p1 ** 3 * p2
          + (R(19, 576) * k2 - R(3, 128)) * p1 * p2 ** 3)
    F3 = eps * k * s * (-R(143, 1152) * p1 ** 2 * p2 - R(167, 1728) * p2 ** 3)
    F4 = (-R(2, 1215) * s * k * (37 * k2 - 27) * p2 ** 5
          - R(1, 648) * s * k * (-45 + 52 * k2) * p1 ** 4 * p2
          - R(1, 243) * s * k * (-27 + 34 * k2) * p1 ** 2 * p2 ** 3)
    return [F0, F1, F2, F3, F4]


def eta_exact() -> ExactPoly:
    return 4 * (Fraction(19, 576) * kappa ** 2 - Fraction(3, 128))


def mu_exact() -> ExactPoly:
    return 2 * (Fraction(65, 864) * kappa ** 2 - Fraction(3, 64))


def target_normal_form(eta: ExactPoly, mu: ExactPoly) -> ExactPoly:
    return (-I1 + I2 * Fraction(1, 2) + eps * I3 * Fraction(1, 8) + eta * I3 ** 2 * Fraction(1, 4)
            + eps * I1 * Fraction(1, 8) + mu * I1 * I3 * Fraction(1, 2))


@dataclass
class NormalizationReport:
    eta: ExactPoly
    mu: ExactPoly
    residual: ExactPoly
    eta_matches: bool
    mu_matches: bool
    wcut: int

    def lines(self):
        out = [f"eta = {self.eta!r}", f"mu = {self.mu!r}",
               f"eta matches closed form: {self.eta_matches}",
               f"mu matches closed form: {self.mu_matches}",
               f"residual monomials of weight <= {self.wcut}: {len(self.residual.terms)}"]
        for m, c in sorted(self.residual.terms.items()):
            out.append(f"  {c} * {ExactPoly({m: 1})!r}")
        return out


def _solve_rational(A, b):
    n = len(b)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            raise NormalizationMismatch("homological equation is singular")
        M[c], M[piv] = M[piv], M[c]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c] / M[c][c]
                M[r] = [a - f * bb for a, bb in zip(M[r], M[c])]
    return [M[i][n] / M[i][i] for i in range(n)]


def derived_f4(wcut: int = 5) -> ExactPoly:
    """Pure-momentum quintic generator that removes what F0..F3 leave at
    weight 5 outside the normal form, from {-I1, G} = -(leftover)."""
    H = linear_reduce(original_hamiltonian())
    for F in generators()[:4]:
        H = lie_flow(H, F, wcut + 3)
    H = H.truncate(wcut)
    left = H - target_normal_form(4 * H.coefficient((0, 0, 4, 0)), 2 * H.coefficient((0, 1, 3, 0)))
    left = left.truncate(wcut)
    groups = {}
    for m, c in left.terms.items():
        if m[Q1] or m[Q2] or m[P1] + m[P2] != 5:
            continue
        groups.setdefault(m[4:], {})[(m[P1], m[P2])] = c
    basis = [(a, 5 - a) for a in range(6)]
    out = ExactPoly()
    for par, coeffs in groups.items():
        # column j: image of p1^a p2^b under G -> {-I1, G}
        A = [[Fraction(0)] * 6 for _ in range(6)]
        for j, (a, b) in enumerate(basis):
            img = poisson(-I1, ExactPoly({(0, 0, a, b, 0, 0, 0): 1}))
            for m, c in img.terms.items():
                A[basis.index((m[P1], m[P2]))][j] += c
        rhs = [-coeffs.get(bm, Fraction(0)) for bm in basis]
        sol = _solve_rational(A, rhs)
        for (a, b), c in zip(basis, sol):
            out = out + ExactPoly({(0, 0, a, b) + par: c})
    return out


def psi5_normalize(wcut: int = 5, f4: str = "transcribed"):
    """Apply the five Lie flows to the reduced Hamiltonian and check that it
    matches the degree-five normal form.  Returns (H_normalized, report).

    ``f4="derived"`` replaces the last generator by ``derived_f4()``."""
    gens = generators()
    if f4 == "derived":
        gens[4] = derived_f4(wcut)
    elif f4 != "transcribed":
        raise ValueError("f4 must be 'transcribed' or 'derived'")
    H = linear_reduce(original_hamiltonian())
    work = wcut + 3
    for F in gens:
        H = lie_flow(H, F, work)
    H = H.truncate(wcut)
    eta = 4 * H.coefficient((0, 0, 4, 0))
    mu = 2 * H.coefficient((0, 1, 3, 0))
    residual = (H - target_normal_form(eta, mu)).truncate(wcut)
    rep = NormalizationReport(eta, mu, residual, eta == eta_exact(), mu == mu_exact(), wcut)
    if not residual.is_zero():
        raise NormalizationMismatch("\n".join(rep.lines()))
    return H, rep


@dataclass
class NFSeparatrix:
    r5: float
    R5: float
    theta5: float
    u_leading: float


def nf_separatrix(delta, kappa_value, phi, z) -> NFSeparatrix:
    """Closed-form separatrix of the truncated normal form and the two-term
    approximation of the scalar u on the unstable manifold.  Works with any
    numbers supporting the cmath/math functions (complex z allowed)."""
    import cmath
    fn = cmath if isinstance(z, complex) or isinstance(phi, complex) else math
    k2 = kappa_value * kappa_value
    eta = 4 * (19 * k2 / 576 - 3 / 128)
    mu = 2 * (65 * k2 / 864 - 3 / 64)
    if eta <= 0:
        raise ValueError("eta must be positive")
    amp = math.sqrt(2 / eta)
    ch, sh = fn.cosh(z), fn.sinh(z)
    r5 = amp / ch
    R5 = amp * sh / ch ** 2
    theta5 = phi - delta * mu / eta * sh / ch
    u = (-fn.cos(phi) / (math.sqrt(eta) * ch) * delta
         + ((9 * kappa_value + kappa_value * fn.cos(2 * phi)) / (18 * eta) / ch ** 2
            - (mu / eta + 0.5) / math.sqrt(eta) * fn.sin(phi) * sh / ch ** 2) * delta ** 2)
    return NFSeparatrix(r5, R5, theta5, u)
