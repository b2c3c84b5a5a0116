"""Exponential-Fourier expansion of the unstable manifold for epsilon < 0.

    u(phi, z) = sum_{k=1}^N sum_{|j|<=k} c[k, j] e^{kz} e^{i j phi}

solves ((alpha d_phi + beta d_z)^2 + 1)^2 u = eps u + kappa u^2 - u^3.  The
symbol on e^{kz} e^{ijphi} is L(k, j) = ((i j alpha + k beta)^2 + 1)^2 - eps,
which vanishes at (1, +-1); those two modes carry the free data
a cos(phi) + b sin(phi) with (a, b) = r (cos psi, sin psi).  Every other
coefficient follows from lower layers, together with its psi-derivative.
Reality of u is c[k, -j] = conj(c[k, j]).
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
import numpy as np

from . import mpnum
from .model import ModelParams, nf_params, spectral
from .mpnum import NumericalError


class NearResonantSymbol(NumericalError):
    pass


@dataclass
class OuterSeries:
    epsilon: object
    kappa: object
    psi: object
    r: object
    N: int
    alpha: object
    beta: object
    c: list      # c[k]: complex array over j = -k..k
    dc: list     # psi-derivatives, same layout
    params: ModelParams

    def coeff(self, k, j):
        return self.c[k][j + k]


def initial_match(p: ModelParams):
    """(r0, psi0) from the leading-order matching with the normal form."""
    prec = p.precision
    with prec.activate():
        nf = nf_params(p.kappa)
        d = p.delta
        g = 1 + 2 * nf.mu / nf.eta
        psi0 = mpnum.atan(-g * d / 2)
        r0 = 2 * d / mpnum.sqrt(nf.eta) * mpnum.sqrt(1 + g * g * d * d / 4)
    return r0, psi0


def _conv(a, b):
    return np.convolve(a, b)


def compute_outer_series(p: ModelParams, psi, N: int = 5, r=None) -> OuterSeries:
    prec = p.precision
    if not p.epsilon < 0:
        raise ValueError("epsilon must be negative")
    if N < 1:
        raise ValueError("N must be >= 1")
    sp = spectral(p)
    with prec.activate():
        if r is None:
            r, _ = initial_match(p)
        psi = prec.real(psi)
        alpha, beta = sp.alpha, sp.beta
        zero = prec.complex(0)
        guard = prec.real(10) ** (-(prec.digits // 2))

        def blank(k):
            a = np.empty(2 * k + 1, dtype=object)
            a.fill(zero)
            return a

        c = [None, blank(1)]
        dc = [None, blank(1)]
        # a cos + b sin = (a - i b)/2 e^{i phi} + (a + i b)/2 e^{-i phi}
        e = gmpy2.mpc(mpnum.cos(psi), -mpnum.sin(psi)) if not prec.hardware else \
            complex(np.cos(psi), -np.sin(psi))
        c[1][2] = r * e / 2
        c[1][0] = c[1][2].conjugate()
        dc[1][2] = c[1][2] * complex(0, -1)
        dc[1][0] = dc[1][2].conjugate()
        sq = {}
        dsq = {}
        for k in range(2, N + 1):
            s = blank(k)
            ds = blank(k)
            for k1 in range(1, k):
                s += _conv(c[k1], c[k - k1])
                ds += 2 * _conv(dc[k1], c[k - k1])
            sq[k], dsq[k] = s, ds
            cu = blank(k)
            dcu = blank(k)
            for k1 in range(1, k - 1):
                cu += _conv(c[k1], sq[k - k1])
                dcu += _conv(dc[k1], sq[k - k1]) + _conv(c[k1], dsq[k - k1])
            rhs = p.kappa * s - cu
            drhs = p.kappa * ds - dcu
            ck, dck = blank(k), blank(k)
            for j in range(-k, k + 1):
                lam = prec.complex(k * beta, j * alpha)
                sym = (lam * lam + 1) ** 2 - p.epsilon
                if abs(sym) < guard:
                    raise NearResonantSymbol(f"|L({k},{j})| = {float(abs(sym)):.3e}")
                ck[j + k] = rhs[j + k] / sym
                dck[j + k] = drhs[j + k] / sym
            c.append(ck)
            dc.append(dck)
    return OuterSeries(p.epsilon, p.kappa, psi, r, N, alpha, beta, c, dc, p)


def _lift_row(coef, lam):
    lam2 = lam * lam
    return [coef, coef * lam, -(coef * lam + coef * lam2 * lam), coef + coef * lam2]


def eval_outer(series: OuterSeries, phi, z, terms: int | None = None):
    """(x, d_phi x, d_psi x) as real 4-vectors at real (phi, z)."""
    n = terms or series.N
    p = series.params
    prec = p.precision
    with prec.activate():
        phi = prec.real(phi)
        z = prec.real(z)
        ez = mpnum.exp(z)
        if prec.hardware:
            e1 = complex(np.cos(phi), np.sin(phi))
        else:
            e1 = gmpy2.mpc(gmpy2.cos(phi), gmpy2.sin(phi))
        x = [prec.complex(0)] * 4
        dx = [prec.complex(0)] * 4
        px = [prec.complex(0)] * 4
        ekz = prec.complex(1)
        for k in range(1, n + 1):
            ekz = ekz * ez
            ph = e1 ** (-k)
            for j in range(-k, k + 1):
                if j > -k:
                    ph = ph * e1
                w = ekz * ph
                lam = prec.complex(k * series.beta, j * series.alpha)
                row = _lift_row(series.c[k][j + k] * w, lam)
                drow = _lift_row(series.dc[k][j + k] * w, lam)
                for i in range(4):
                    x[i] += row[i]
                    dx[i] += row[i] * complex(0, j)
                    px[i] += drow[i]
        out = []
        for vec in (x, dx, px):
            out.append(prec.array([mpnum.real_part(v) for v in vec], complex_=False))
        imag = max(abs(mpnum.imag_part(v)) for v in x + dx + px)
    return out[0], out[1], out[2], imag
