"""The stationary GSHE as a reversible Hamiltonian system in R^4.

State vectors are ordered (q1, q2, p1, p2) everywhere.  With the canonical
pairs (q_i, p_i) the equations of motion are x' = (dH/dp, -dH/dq), and the
symplectic form is Omega(v, w) = sum_i v_qi w_pi - v_pi w_qi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import mpnum
from .mpnum import Precision

KAPPA0_SQ = Fraction(27, 38)


@dataclass(frozen=True)
class ModelParams:
    kappa: object
    epsilon: object
    delta: object
    precision: Precision

    @classmethod
    def create(cls, kappa, epsilon, precision: Precision):
        with precision.activate():
            k = precision.real(kappa)
            e = precision.real(epsilon)
            if e > 0:
                raise ValueError("epsilon must be <= 0")
            d = mpnum.sqrt(-e) / 2 if e != 0 else 0 * e
        return cls(k, e, d, precision)

    def require_stable_regime(self):
        if self.kappa * self.kappa <= float(KAPPA0_SQ):
            raise ValueError(f"|kappa| must exceed sqrt(27/38); got {self.kappa}")


@dataclass(frozen=True)
class SpectralData:
    alpha: object
    beta: object
    exp_factor: object  # exp(pi*alpha/(2*beta)); None when beta == 0


@dataclass(frozen=True)
class NFParams:
    eta: object
    mu: object


def spectral(p: ModelParams) -> SpectralData:
    prec = p.precision
    with prec.activate():
        r = mpnum.sqrt(1 - p.epsilon)
        alpha = mpnum.sqrt(2 * r + 2) / 2
        b2 = 2 * r - 2
        beta = mpnum.sqrt(b2) / 2 if b2 > 0 else 0 * alpha
        ef = mpnum.exp(prec.pi() * alpha / (2 * beta)) if beta > 0 else None
    return SpectralData(alpha, beta, ef)


def nf_params(kappa) -> NFParams:
    """eta and mu of the order-five normal form; exact for rational kappa."""
    if isinstance(kappa, int):
        kappa = Fraction(kappa)
    k2 = kappa * kappa
    one = k2 * 0 + 1
    eta = 4 * (19 * k2 / 576 - 3 * one / 128)
    mu = 2 * (65 * k2 / 864 - 3 * one / 64)
    return NFParams(eta, mu)


def nf_params_at(p: ModelParams) -> NFParams:
    with p.precision.activate():
        return nf_params(p.kappa)


def vector_field(x, p: ModelParams):
    q1, q2, p1, p2 = x
    f = np.empty(4, dtype=np.asarray(x).dtype)
    f[0] = q2
    f[1] = p2 - q1
    f[2] = p2 - p.epsilon * q1 - p.kappa * q1 * q1 + q1 * q1 * q1
    f[3] = -p1
    return f


def jacobian(x, p: ModelParams):
    q1 = x[0]
    zero = q1 * 0
    one = zero + 1
    g = p.epsilon + 2 * p.kappa * q1 - 3 * q1 * q1
    rows = [
        [zero, one, zero, zero],
        [-one, zero, zero, one],
        [-g, zero, zero, one],
        [zero, zero, -one, zero],
    ]
    out = np.empty((4, 4), dtype=np.asarray(x).dtype)
    for i in range(4):
        for j in range(4):
            out[i, j] = rows[i][j]
    return out


def hamiltonian(x, p: ModelParams):
    q1, q2, p1, p2 = x
    return (p1 * q2 - p2 * q1 + p2 * p2 / 2 + p.epsilon * q1 * q1 / 2
            + p.kappa * q1 ** 3 / 3 - q1 ** 4 / 4)


def involution(x):
    out = np.array(x, copy=True)
    out[1] = -out[1]
    out[2] = -out[2]
    return out


involution_tangent = involution


def symplectic_form(v, w):
    return v[0] * w[2] - v[2] * w[0] + v[1] * w[3] - v[3] * w[1]


def lift_scalar(u, du, d2u, d3u):
    """(u, u', u'', u''') -> (q1, q2, p1, p2)."""
    out = np.empty(4, dtype=object if mpnum.is_mp(u) else np.result_type(u, du, d2u, d3u, float))
    out[0] = u
    out[1] = du
    out[2] = -(du + d3u)
    out[3] = u + d2u
    return out


def eta_root() -> float:
    return math.sqrt(float(KAPPA0_SQ))
