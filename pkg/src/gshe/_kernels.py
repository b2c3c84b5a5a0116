"""Taylor-jet kernels for the GSHE flow and its variational equations.

Two interchangeable implementations of the same recurrence:

* loop kernels compiled by numba, for float64/complex128 arrays;
* numpy versions built on ``np.dot`` that also work on object arrays of
  gmpy2 numbers (the multiprecision lane).

Set ``GSHE_NUMBA=0`` to route hardware-precision work through the numpy
path as well (useful for debugging and for the benchmark).

Recurrence: with S = q1*q1 and C = S*q1 as Cauchy products,

    q1[m+1] = q2[m] / (m+1)
    q2[m+1] = (p2[m] - q1[m]) / (m+1)
    p1[m+1] = (p2[m] - eps q1[m] - kappa S[m] + C[m]) / (m+1)
    p2[m+1] = -p1[m] / (m+1)

and the tangent jets use g = eps + 2 kappa q1 - 3 S in place of the
nonlinear row, g*v1 again by Cauchy product.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def numba_enabled() -> bool:
    flag = os.environ.get("GSHE_NUMBA", "1").strip().lower()
    return HAVE_NUMBA and flag not in ("0", "false", "no", "off")


# ---------------------------------------------------------------------------
# numpy path (any dtype, including object arrays of mpfr/mpc)

def jet_numpy(x0, v0, eps, kappa, order):
    """Return (X, V): X has shape (order+1, 4), V shape (order+1, 4, K)."""
    M = order
    K = 0 if v0 is None else v0.shape[1]
    X = np.empty((M + 1, 4), dtype=x0.dtype)
    X[0] = x0
    S = np.empty(M + 1, dtype=x0.dtype)
    C = np.empty(M + 1, dtype=x0.dtype)
    V = None
    G = None
    if K:
        V = np.empty((M + 1, 4, K), dtype=x0.dtype)
        V[0] = v0
        G = np.empty(M + 1, dtype=x0.dtype)
    q1 = X[:, 0]
    for m in range(M):
        S[m] = np.dot(q1[: m + 1], q1[m::-1])
        C[m] = np.dot(S[: m + 1], q1[m::-1])
        inv = 1.0 / (m + 1) if X.dtype != object else _inv_obj(x0[0], m + 1)
        xm = X[m]
        X[m + 1, 0] = xm[1] * inv
        X[m + 1, 1] = (xm[3] - xm[0]) * inv
        X[m + 1, 2] = (xm[3] - eps * xm[0] - kappa * S[m] + C[m]) * inv
        X[m + 1, 3] = -xm[2] * inv
        if K:
            g = 2 * kappa * xm[0] - 3 * S[m]
            if m == 0:
                g = g + eps
            G[m] = g
            gv = np.dot(G[: m + 1], V[m::-1, 0, :])
            vm = V[m]
            V[m + 1, 0] = vm[1] * inv
            V[m + 1, 1] = (vm[3] - vm[0]) * inv
            V[m + 1, 2] = (vm[3] - gv) * inv
            V[m + 1, 3] = -vm[2] * inv
    return X, V


def _inv_obj(sample, n):
    # exact-rounded 1/n in the working precision of ``sample``'s context
    import gmpy2
    return gmpy2.mpfr(1) / n


def horner(coeffs, h):
    acc = coeffs[-1].copy()
    for m in range(coeffs.shape[0] - 2, -1, -1):
        acc = acc * h + coeffs[m]
    return acc


def max_abs(a) -> object:
    if a.dtype == object:
        return max(abs(v) for v in a.ravel())
    return float(np.max(np.abs(a)))


# ---------------------------------------------------------------------------
# compiled path (float64 / complex128 only)

if HAVE_NUMBA:

    @njit(cache=True)
    def _jet_nb(x0, v0, eps, kappa, M, X, V, S, C, G):
        K = v0.shape[1]
        for i in range(4):
            X[0, i] = x0[i]
            for k in range(K):
                V[0, i, k] = v0[i, k]
        for m in range(M):
            s = X[0, 0] * 0.0
            for i in range(m + 1):
                s += X[i, 0] * X[m - i, 0]
            S[m] = s
            c = X[0, 0] * 0.0
            for i in range(m + 1):
                c += S[i] * X[m - i, 0]
            C[m] = c
            inv = 1.0 / (m + 1)
            X[m + 1, 0] = X[m, 1] * inv
            X[m + 1, 1] = (X[m, 3] - X[m, 0]) * inv
            X[m + 1, 2] = (X[m, 3] - eps * X[m, 0] - kappa * s + c) * inv
            X[m + 1, 3] = -X[m, 2] * inv
            if K > 0:
                g = 2.0 * kappa * X[m, 0] - 3.0 * s
                if m == 0:
                    g += eps
                G[m] = g
                for k in range(K):
                    gv = X[0, 0] * 0.0
                    for i in range(m + 1):
                        gv += G[i] * V[m - i, 0, k]
                    V[m + 1, 0, k] = V[m, 1, k] * inv
                    V[m + 1, 1, k] = (V[m, 3, k] - V[m, 0, k]) * inv
                    V[m + 1, 2, k] = (V[m, 3, k] - gv) * inv
                    V[m + 1, 3, k] = -V[m, 2, k] * inv

    @njit(cache=True)
    def _norm_row(X, V, m):
        r = 0.0
        for i in range(4):
            a = abs(X[m, i])
            if a > r:
                r = a
            for k in range(V.shape[2]):
                a = abs(V[m, i, k])
                if a > r:
                    r = a
        return r

    @njit(cache=True)
    def _step_nb(X, V, M, log10_tol, hmax):
        h = hmax
        found = False
        for m in (M - 1, M):
            r = _norm_row(X, V, m)
            if r > 0.0:
                hm = 10.0 ** ((log10_tol - math.log10(r)) / m)
                if not found or hm < h:
                    h = hm
                found = True
        if not found:
            return -1.0
        h = 0.9 * h
        if h > hmax:
            h = hmax
        return h

    @njit(cache=True)
    def _flow_nb(x0, v0, eps, kappa, M, t_total, log10_tol, hmax, hmin):
        K = v0.shape[1]
        X = np.empty((M + 1, 4), dtype=x0.dtype)
        V = np.empty((M + 1, 4, K), dtype=x0.dtype)
        S = np.empty(M + 1, dtype=x0.dtype)
        C = np.empty(M + 1, dtype=x0.dtype)
        G = np.empty(M + 1, dtype=x0.dtype)
        x = x0.copy()
        v = v0.copy()
        direction = 1.0 if t_total >= 0 else -1.0
        remaining = abs(t_total)
        steps = 0
        max_h = 0.0
        status = 0
        while remaining > 0.0:
            _jet_nb(x, v, eps, kappa, M, X, V, S, C, G)
            h = _step_nb(X, V, M, log10_tol, hmax)
            if h < 0.0:
                # equilibrium: the state does not move
                h = remaining
            last = h >= remaining
            if last:
                h = remaining
            elif h < hmin:
                status = 1
                break
            t = direction * h
            for i in range(4):
                acc = X[M, i]
                for m in range(M - 1, -1, -1):
                    acc = acc * t + X[m, i]
                x[i] = acc
                for k in range(K):
                    acc = V[M, i, k]
                    for m in range(M - 1, -1, -1):
                        acc = acc * t + V[m, i, k]
                    v[i, k] = acc
            steps += 1
            if h > max_h:
                max_h = h
            remaining = 0.0 if last else remaining - h
        elapsed = direction * (abs(t_total) - remaining)
        return x, v, steps, max_h, status, elapsed

    def jet_numba(x0, v0, eps, kappa, order):
        dt = x0.dtype
        if v0 is None:
            v0 = np.zeros((4, 0), dtype=dt)
        M = order
        X = np.empty((M + 1, 4), dtype=dt)
        V = np.empty((M + 1, 4, v0.shape[1]), dtype=dt)
        S = np.empty(M + 1, dtype=dt)
        C = np.empty(M + 1, dtype=dt)
        G = np.empty(M + 1, dtype=dt)
        _jet_nb(x0, np.ascontiguousarray(v0), eps, kappa, M, X, V, S, C, G)
        return X, (V if v0.shape[1] else None)

    def flow_numba(x0, v0, eps, kappa, order, t_total, log10_tol, hmax, hmin):
        return _flow_nb(x0, np.ascontiguousarray(v0), eps, kappa, order,
                        float(t_total), log10_tol, hmax, hmin)
