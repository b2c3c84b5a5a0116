"""Adaptive Taylor-series integration of the GSHE flow with tangent transport.

The state jet and any number K of tangent jets are generated together, so a
single call advances x and the K columns of v with the same step sequence.
Time is real (possibly negative); states may be complex.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, mpnum
from .model import ModelParams, hamiltonian
from .mpnum import NumericalError, Precision


class StepUnderflow(NumericalError):
    pass


class DegenerateJet(NumericalError):
    pass


@dataclass
class Jet:
    coeffs: np.ndarray          # (M+1, 4)
    tangents: np.ndarray | None  # (M+1, 4, K)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1


@dataclass
class FlowResult:
    x_end: np.ndarray
    v_end: np.ndarray | None
    t_elapsed: object
    steps: int
    max_h: float
    energy_drift: object


def _is_complex_array(a) -> bool:
    if a.dtype == object:
        return any(mpnum._is_complex(v) for v in a.ravel())
    return np.iscomplexobj(a)


def _prepare(x0, v0, prec: Precision):
    x = np.asarray(x0)
    v = None if v0 is None else np.asarray(v0)
    if v is not None and v.ndim == 1:
        v = v.reshape(4, 1)
    cplx = _is_complex_array(x) or (v is not None and _is_complex_array(v))
    x = prec.coerce_array(x, complex_=cplx)
    if v is not None:
        v = prec.coerce_array(v, complex_=cplx)
    return x, v


def _scalars(p: ModelParams):
    if p.precision.hardware:
        return float(p.epsilon), float(p.kappa)
    return p.epsilon, p.kappa


def jet_expand(x0, v0, p: ModelParams, order: int | None = None) -> Jet:
    prec = p.precision
    M = order or prec.taylor_order
    if M < 2:
        raise ValueError("order must be >= 2")
    x, v = _prepare(x0, v0, prec)
    eps, kappa = _scalars(p)
    if prec.hardware and _kernels.numba_enabled():
        X, V = _kernels.jet_numba(x, v, eps, kappa, M)
    else:
        with prec.activate():
            X, V = _kernels.jet_numpy(x, v, eps, kappa, M)
    return Jet(X, V)


def _trailing_norm(jet: Jet, m: int):
    r = _kernels.max_abs(jet.coeffs[m])
    if jet.tangents is not None and jet.tangents.shape[2]:
        rv = _kernels.max_abs(jet.tangents[m])
        r = max(r, rv)
    return r


def step_size(jet: Jet, log10_tol: float, hmax: float = 1.0) -> float:
    """0.9 * min_{m in {M-1, M}} (tol/|x_m|)^(1/m), capped at ``hmax``.

    The tolerance is passed as its base-10 logarithm so that tiny values
    never meet the double exponent range.
    """
    M = jet.order
    h = None
    for m in (M - 1, M):
        r = _trailing_norm(jet, m)
        if r == 0:
            continue
        hm = 10.0 ** ((log10_tol - mpnum.log10_abs(r)) / m)
        h = hm if h is None else min(h, hm)
    if h is None:
        raise DegenerateJet("last two Taylor coefficients vanish")
    return min(0.9 * h, hmax)


def flow(x0, v0, t_total, p: ModelParams, *, order: int | None = None,
         hmax: float = 1.0, trace: list | None = None) -> FlowResult:
    """Integrate x' = X_H(x), v' = DX_H(x) v for time ``t_total``."""
    prec = p.precision
    M = order or prec.taylor_order
    x, v = _prepare(x0, v0, prec)
    eps, kappa = _scalars(p)
    hmin = 10.0 ** (-prec.digits)
    with prec.activate():
        t_total = prec.real(t_total)
        h_start = hamiltonian(x, p)
    if prec.hardware and _kernels.numba_enabled() and trace is None:
        vv = v if v is not None else np.zeros((4, 0), dtype=x.dtype)
        if vv.dtype != x.dtype:
            dt = np.result_type(x.dtype, vv.dtype)
            x, vv = x.astype(dt), vv.astype(dt)
        xe, ve, steps, max_h, status, elapsed = _kernels.flow_numba(
            x, vv, eps, kappa, M, t_total, prec.log10_tol, hmax, hmin)
        if status == 1:
            raise StepUnderflow(f"step below 1e-{prec.digits} at t={elapsed}")
        drift = hamiltonian(xe, p) - h_start
        return FlowResult(xe, ve if v is not None else None, elapsed, steps, max_h, drift)
    with prec.activate():
        return _flow_python(x, v, t_total, p, M, eps, kappa, hmax, hmin, h_start, trace)


def _flow_python(x, v, t_total, p, M, eps, kappa, hmax, hmin, h_start, trace):
    prec = p.precision
    direction = 1 if t_total >= 0 else -1
    remaining = abs(t_total)
    done = 0 * remaining
    steps = 0
    max_h = 0.0
    while remaining > 0:
        X, V = _kernels.jet_numpy(x, v, eps, kappa, M)
        try:
            hf = step_size(Jet(X, V), prec.log10_tol, hmax)
        except DegenerateJet:
            hf = math.inf
        h = remaining if hf >= float(remaining) else prec.real(hf)
        last = h >= remaining
        if last:
            h = remaining
        elif hf < hmin:
            raise StepUnderflow(f"step {hf:.3e} below 1e-{prec.digits}")
        t = h if direction > 0 else -h
        x = _kernels.horner(X, t)
        if V is not None:
            v = _kernels.horner(V, t)
        steps += 1
        max_h = max(max_h, float(h))
        remaining = 0 * remaining if last else remaining - h
        done = done + h
        if trace is not None:
            trace.append((direction * done, hamiltonian(x, p) - h_start, h))
    drift = hamiltonian(x, p) - h_start
    return FlowResult(x, v, direction * done, steps, max_h, drift)


def write_trace(trace, path, prec: Precision):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "energy_drift", "h"])
        for t, dh, h in trace:
            w.writerow([mpnum.serialize(t, prec, 20), mpnum.serialize(dh, prec, 6),
                        mpnum.serialize(h, prec, 20)])
