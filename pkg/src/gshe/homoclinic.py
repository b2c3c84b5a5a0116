"""Symmetric homoclinic orbits for epsilon < 0 and their homoclinic invariant.

A point x(0; psi) on the outer expansion at (phi, z) = (-alpha T0, -beta T0)
is flowed for time T; Newton on (T, psi) drives x(T) onto Fix(S) =
{q2 = 0, p1 = 0}.  The phi-tangent alpha d_phi Gamma^u is transported along,
its reflection by S is the stable tangent, and

    omega_hat = Omega(v, S v),   omega_bar = (omega_hat / 2) exp(pi alpha / (2 beta)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mpnum
from .model import (ModelParams, hamiltonian, involution, spectral, symplectic_form,
                    vector_field)
from .mpnum import NumericalError, Precision
from .outer import compute_outer_series, eval_outer, initial_match
from .taylor import FlowResult, flow


class NewtonDiverged(NumericalError):
    pass


@dataclass
class NewtonResult:
    T: object
    psi: object
    flow: FlowResult
    T0: object
    psi0: object
    iterations: int
    residuals: list = field(default_factory=list)


@dataclass
class HomoclinicResult:
    epsilon: object
    kappa: object
    branch: int
    digits: int
    T_star: object
    psi_star: object
    T0: object
    psi0: object
    x_sym: np.ndarray
    v_u: np.ndarray
    omega: object
    omega_bar: object
    newton_iters: int
    residual: object
    residuals: list
    alpha: object
    beta: object
    energy: object
    params: ModelParams = None

    def record(self) -> dict:
        prec = self.params.precision
        ser = lambda v: mpnum.serialize(v, prec)
        return {
            "epsilon": ser(self.epsilon), "kappa": ser(self.kappa), "branch": self.branch,
            "digits": self.digits, "binary_bits": prec.binary_bits,
            "taylor_order": prec.taylor_order,
            "T0": ser(self.T0), "psi0": ser(self.psi0),
            "T_star": ser(self.T_star), "psi_star": ser(self.psi_star),
            "newton_iters": self.newton_iters, "residual": ser(self.residual),
            "x_sym": [ser(v) for v in self.x_sym], "v_u": [ser(v) for v in self.v_u],
            "omega_hat": ser(self.omega), "omega_bar": ser(self.omega_bar),
            "energy": ser(self.energy),
        }


def auto_digits(epsilon, accuracy: float = 1e-5) -> int:
    """Digits so that exp(pi alpha/(2 beta)) 10^(10-D) stays below ``accuracy``."""
    e = float(epsilon)
    r = math.sqrt(1 - e)
    alpha = math.sqrt(2 * r + 2) / 2
    beta = math.sqrt(2 * r - 2) / 2
    log10_factor = math.pi * alpha / (2 * beta) / math.log(10)
    return max(16, math.ceil(10 + log10_factor - math.log10(accuracy)))


def default_T0(p: ModelParams, N: int = 5):
    sp = spectral(p)
    d = float(p.delta)
    b = float(sp.beta)
    t_loop = (math.log(1 / d) + 3) / b
    t_guard = (p.precision.digits + 5) * math.log(10) / ((N + 1) * b)
    return max(t_loop, t_guard)


def _start(p, psi, T0, N):
    sp = spectral(p)
    series = compute_outer_series(p, psi, N)
    with p.precision.activate():
        T0 = p.precision.real(T0)
        x0, dphi, dpsi, _ = eval_outer(series, -sp.alpha * T0, -sp.beta * T0)
        v0 = p.precision.zeros((4, 2), complex_=False)
        v0[:, 0] = dpsi
        v0[:, 1] = dphi * sp.alpha
    return x0, v0


def _shoot(p, psi, T, T0, N):
    x0, v0 = _start(p, psi, T0, N)
    return flow(x0, v0, T, p)


def _residual(fr: FlowResult):
    return max(abs(fr.x_end[1]), abs(fr.x_end[2]))


def newton_symmetric(p: ModelParams, branch: int = 0, *, T0=None, N: int = 5,
                     max_iter: int = 50, log=None) -> NewtonResult:
    prec = p.precision
    if not (-0.1 <= float(p.epsilon) < 0):
        raise ValueError("epsilon must lie in [-0.1, 0)")
    if branch not in (0, 1):
        raise ValueError("branch must be 0 or 1")
    r0, psi0 = initial_match(p)
    with prec.activate():
        if branch == 1:
            psi0 = psi0 + prec.pi()
        T0 = prec.real(T0 if T0 is not None else default_T0(p, N))
        tol = prec.real(10) ** (4 - prec.digits)
    T, psi = T0, psi0
    fr = _shoot(p, psi, T, T0, N)
    res = _residual(fr)
    history = [res]
    stalled = 0
    it = 0
    while it < max_iter:
        scale = max(abs(v) for v in fr.x_end)
        if res <= tol * scale:
            break
        it += 1
        with prec.activate():
            f = vector_field(fr.x_end, p)
            jac = [[f[1], fr.v_end[1, 0]], [f[2], fr.v_end[2, 0]]]
            dT, dpsi = mpnum.solve2x2(jac, (fr.x_end[1], fr.x_end[2]), prec)
        lam = 1
        best = None
        for _ in range(11):
            with prec.activate():
                Tn, psin = T - lam * dT, psi - lam * dpsi
            frn = _shoot(p, psin, Tn, T0, N)
            rn = _residual(frn)
            if best is None or rn < best[3]:
                best = (Tn, psin, frn, rn)
            if rn < res:
                break
            lam = lam / 2
        T, psi, fr, rn = best
        stalled = stalled + 1 if rn >= res else 0
        res = rn
        history.append(res)
        if log:
            log(it, T, psi, res)
        if stalled >= 5:
            raise NewtonDiverged(f"residual stuck at {float(res):.3e} after {it} iterations")
    return NewtonResult(T, psi, fr, T0, psi0, it, history)


def homoclinic_invariant(epsilon, kappa=2, branch: int = 0, digits: int | None = None, *,
                         accuracy: float = 1e-5, N: int = 5, T0=None, log=None) -> HomoclinicResult:
    digits = digits or auto_digits(epsilon, accuracy)
    prec = Precision(digits)
    p = ModelParams.create(kappa, epsilon, prec)
    p.require_stable_regime()
    nr = newton_symmetric(p, branch, T0=T0, N=N, log=log)
    sp = spectral(p)
    x = nr.flow.x_end
    v = nr.flow.v_end[:, 1]
    with prec.activate():
        w = symplectic_form(v, involution(v))
        wbar = w / 2 * sp.exp_factor
        energy = hamiltonian(x, p)
    return HomoclinicResult(p.epsilon, p.kappa, branch, digits, nr.T, nr.psi, nr.T0, nr.psi0,
                            x, v, w, wbar, nr.iterations, nr.residuals[-1], nr.residuals,
                            sp.alpha, sp.beta, energy, p)


def omega_from_definition(res: HomoclinicResult):
    """Omega(d_phi Gamma^u, d_phi Gamma^s) with d_phi Gamma^s = -S d_phi Gamma^u."""
    with res.params.precision.activate():
        wu = res.v_u / res.alpha
        ws = -involution(wu)
        return symplectic_form(wu, ws)


def cross_check_scalar(res: HomoclinicResult, v=None):
    """2 d_phi(u^2 + u d^2 u) = 2 d_phi(q1 p2) at the symmetric point."""
    v = res.v_u if v is None else v
    x = res.x_sym
    with res.params.precision.activate():
        w = v / res.alpha
        return 2 * (w[0] * x[3] + x[0] * w[3])


def omega_flow_derivative(res: HomoclinicResult, v=None):
    """-2 D((d_phi u)^2 + d_phi u D^2 d_phi u), D the derivative along the flow.

    The derivatives of d_phi u come from the lifted tangent w = v/alpha:
    D w1 = w2, D^2 w1 = w4 - w1, D^3 w1 = -w3 - w2."""
    v = res.v_u if v is None else v
    with res.params.precision.activate():
        w = v / res.alpha
        u, du, d2u, d3u = w[0], w[1], w[3] - w[0], -w[2] - w[1]
        return -2 * (2 * u * du + du * d2u + u * d3u)


def seed_relative_error(res: HomoclinicResult) -> float:
    """|(T0 - T*, psi0 - psi*)| / |(T*, psi*)|."""
    dT = float(res.T0 - res.T_star)
    dp = float(res.psi0 - res.psi_star)
    return math.hypot(dT, dp) / math.hypot(float(res.T_star), float(res.psi_star))


def _omega_z(res: HomoclinicResult, beta):
    p = res.params
    with p.precision.activate():
        X = vector_field(res.x_sym, p)
        wu = res.v_u / res.alpha
        ws = -involution(wu)
        zu = (X - res.alpha * wu) / beta
        zs = (X - res.alpha * ws) / beta
        return symplectic_form(zu, zs), symplectic_form(wu, ws)


def cross_check_omega_z(res: HomoclinicResult, beta=None):
    """alpha^2 omega + beta^2 omega_z, the combination stated to vanish."""
    beta = res.beta if beta is None else beta
    with res.params.precision.activate():
        oz, om = _omega_z(res, beta)
        return res.alpha ** 2 * om + beta ** 2 * oz


def omega_z_balance(res: HomoclinicResult, beta=None):
    """alpha^2 omega - beta^2 omega_z, which the Lagrangian property forces to zero."""
    beta = res.beta if beta is None else beta
    with res.params.precision.activate():
        oz, om = _omega_z(res, beta)
        return res.alpha ** 2 * om - beta ** 2 * oz


def omega_z_value(res: HomoclinicResult):
    return _omega_z(res, res.beta)[0]


def orbit_profile(res: HomoclinicResult, x_max: float = 100.0, dx: float = 0.25):
    """Samples (x, u(x)) on [-x_max, x_max], x = 0 at the symmetric point."""
    p = res.params
    n = int(round(x_max / dx))
    fwd = [(0.0, res.x_sym[0])]
    bwd = []
    for sign, out in ((1, fwd), (-1, bwd)):
        x = res.x_sym
        for i in range(1, n + 1):
            fr = flow(x, None, sign * dx, p)
            x = fr.x_end
            out.append((sign * i * dx, x[0]))
    rows = list(reversed(bwd)) + fwd
    return rows


def tail_decay_rate(rows, x_lo: float, x_hi: float) -> float:
    """Slope of log|u| through the local maxima of |u| on [x_lo, x_hi]."""
    xs = [r[0] for r in rows]
    us = [abs(float(r[1])) for r in rows]
    peaks = [(xs[i], us[i]) for i in range(1, len(xs) - 1)
             if x_lo <= xs[i] <= x_hi and us[i] >= us[i - 1] and us[i] >= us[i + 1] and us[i] > 0]
    if len(peaks) < 3:
        raise ValueError("not enough oscillation peaks in the tail window")
    px = np.array([q[0] for q in peaks])
    py = np.log(np.array([q[1] for q in peaks]))
    slope, _ = np.polyfit(px, py, 1)
    return float(slope)
