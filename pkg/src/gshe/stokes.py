"""Stokes constant of the inner equation by integrating the truncated formal
separatrix forward and backward and measuring the symplectic gap.

    Theta(sigma) = Omega(z+(-d) - z-(d), v-(d)) e^sigma

with z-(0) = Gamma_n(-d, -i sigma - d), z+(0) = Gamma_n(d, -i sigma + d) and
v- the phi-tangent transported along the unstable side.  The value is
limited from below in sigma by the neglected e^{-sigma} corrections and
from above by roundoff amplified by e^sigma; the optimum sigma* balances a
fitted model of both.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

from . import mpnum
from .inner import InnerSeries, eval_inner, get_inner_series, optimal_truncation
from .model import ModelParams, nf_params, symplectic_form
from .mpnum import NumericalError, Precision
from .taylor import flow


class TruncationDominated(UserWarning):
    pass


class InsufficientSpan(NumericalError):
    pass


SIGMA_SHIFT_PER_DIGIT = 1.18


@dataclass
class StokesRun:
    kappa: object
    digits: int
    sigma: object
    d: object
    n_terms: int
    theta_hat: object
    truncation_estimate: float
    runtime: float
    steps: int = 0


@dataclass
class StokesEstimate:
    theta0: object
    err_est: float
    sigma_star: float
    C: float
    C0: float
    C1: float
    runs: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)


def stokes_precision(digits: int) -> Precision:
    """Working precision for this pipeline: no guard bits, so the roundoff
    model 10^-D describes the arithmetic actually used."""
    return Precision(digits, guard_bits=0)


def default_n_terms(digits: int) -> int:
    return 9 if digits <= 16 else 40


def default_series_order(digits: int) -> int:
    return 40 if digits <= 16 else 45


def default_sigma_grid(digits: int, step: float = 0.25):
    shift = SIGMA_SHIFT_PER_DIGIT * (digits - 16)
    lo, hi = 20.0 + shift, 28.89 + shift
    n = int(round((hi - lo) / step))
    return [lo + i * (hi - lo) / n for i in range(n + 1)]


def default_knee(digits: int):
    """(upper end of the small-sigma branch, lower end of the roundoff branch)."""
    shift = SIGMA_SHIFT_PER_DIGIT * (digits - 16)
    return 24.0 + shift, 25.0 + shift


def theta_hat(series: InnerSeries, sigma, d_over_pi: int, n_terms: int,
              prec: Precision | None = None, check_truncation: bool = True) -> StokesRun:
    """One evaluation of Theta(sigma); ``d = d_over_pi * pi`` with d_over_pi even."""
    prec = prec or series.precision
    if d_over_pi <= 0 or d_over_pi % 2:
        raise ValueError("d must be a positive multiple of 2*pi")
    if n_terms > series.N:
        raise ValueError("n_terms exceeds the series order")
    t0 = time.perf_counter()
    p = ModelParams.create(series.kappa, 0, prec)
    with prec.activate():
        sig = prec.real(sigma)
        d = prec.pi() * d_over_pi
        if sig <= 0:
            raise ValueError("sigma must be positive")
        tau_m = prec.complex(-d, -sig)
        tau_p = prec.complex(d, -sig)
        # d is a multiple of 2*pi, so the phases at phi = -d and phi = d are 1
        zm, vm = eval_inner(series, 0, tau_m, n_terms)
        zp, _ = eval_inner(series, 0, tau_p, n_terms)
        trunc = 0.0
        if check_truncation:
            # first omitted term of the evaluated sum
            k = n_terms + 1
            if k <= series.N:
                trunc = 10.0 ** (mpnum.log10_abs(series.gamma_max(k)) - k * mpnum.log10_abs(tau_m))
            if trunc > 10.0 ** (-prec.digits) * math.exp(float(sig)):
                warnings.warn(f"series truncation {trunc:.2e} exceeds roundoff level at sigma={float(sig)}",
                              TruncationDominated, stacklevel=2)
    fm = flow(zm, vm, d, p)
    fp = flow(zp, None, -d, p)
    with prec.activate():
        gap = fp.x_end - fm.x_end
        th = symplectic_form(gap, fm.v_end[:, 0]) * mpnum.exp(sig)
    return StokesRun(series.kappa, prec.digits, sig, d, n_terms, th, trunc,
                     time.perf_counter() - t0, fm.steps + fp.steps)


def _balance(sigma, log_rhs):
    return -2.0 * sigma + 2.0 * math.log(sigma) - log_rhs


def fit_error_model(samples, digits: int, eta, knee=None):
    """Fit (C0, C1) on the small-sigma branch and C on the roundoff branch.

    ``samples`` holds (sigma, |Theta(sigma)|) pairs.  Returns (C, C0, C1, sigma*).
    """
    lo_end, hi_start = knee or default_knee(digits)
    prec = Precision(max(digits, 30))
    small = [(s, a) for s, a in samples if s <= lo_end]
    large = [(s, a) for s, a in samples if s >= hi_start]
    if len(small) < 3 or len(large) < 3:
        raise InsufficientSpan(f"{len(small)} small-sigma and {len(large)} large-sigma samples")
    eta_abs = abs(float(eta))
    with prec.activate():
        sm = [(prec.real(s), prec.real(a)) for s, a in small]
        C0, C1 = mpnum.least_squares_fit(
            [lambda s: s * 0 + 1, lambda s: mpnum.exp(-s)], sm, prec)
        scale = prec.real(10) ** (-digits) / prec.real(eta_abs)
        lg = []
        for s, a in large:
            s = prec.real(s)
            lg.append((s, abs(prec.real(a) - C0 - C1 * mpnum.exp(-s))))
        (C,) = mpnum.least_squares_fit([lambda s: scale * mpnum.exp(s) / (s * s)], lg, prec)
    C, C0, C1 = float(C), float(C0), float(C1)
    if C <= 0 or C1 == 0:
        raise InsufficientSpan(f"degenerate error model fit C={C}, C1={C1}")
    log_rhs = math.log(C / (eta_abs * abs(C1))) - digits * math.log(10.0)
    a, b = 1.0, 400.0 + 3.0 * digits
    for _ in range(200):
        mid = 0.5 * (a + b)
        if _balance(mid, log_rhs) > 0:
            a = mid
        else:
            b = mid
    return C, C0, C1, 0.5 * (a + b)


def error_estimate(C, C1, eta, sigma_star, digits):
    return math.sqrt(C * abs(C1) / abs(float(eta))) / sigma_star * 10.0 ** (-digits / 2)


def stokes_constant(kappa, digits: int, *, d_over_pi: int = 350, n_terms: int | None = None,
                    series_order: int | None = None, sigmas=None, knee=None,
                    use_cache: bool = True, progress=None) -> StokesEstimate:
    prec = stokes_precision(digits)
    n_terms = n_terms or default_n_terms(digits)
    N = max(series_order or default_series_order(digits), n_terms + 1)
    series = get_inner_series(kappa, N, prec, use_cache=use_cache)
    sigmas = sigmas or default_sigma_grid(digits)
    runs = []
    for s in sigmas:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationDominated)
            r = theta_hat(series, s, d_over_pi, n_terms, prec)
        runs.append(r)
        if progress:
            progress(r)
    eta = nf_params(series.kappa).eta
    samples = [(float(r.sigma), float(abs(r.theta_hat))) for r in runs]
    C, C0, C1, sstar = fit_error_model(samples, digits, eta, knee)
    best = theta_hat(series, sstar, d_over_pi, n_terms, prec)
    est = StokesEstimate(best.theta_hat, error_estimate(C, C1, eta, sstar, digits), sstar,
                         C, C0, C1, runs)
    est.provenance = {
        "kappa": str(kappa), "digits": digits, "binary_bits": prec.binary_bits,
        "taylor_order": prec.taylor_order, "d": f"{d_over_pi}pi", "n_terms": n_terms,
        "series_order": N, "sigma_min": min(sigmas), "sigma_max": max(sigmas),
        "n_sigma": len(sigmas), "knee": list(knee or default_knee(digits)),
    }
    return est


def stokes_scan(kappas, digits: int, **kw):
    """Per-kappa Stokes constants; failures are recorded and the scan goes on."""
    rows = []
    for k in kappas:
        try:
            est = stokes_constant(k, digits, **kw)
            im = float(mpnum.imag_part(est.theta0))
            rows.append({"kappa": k, "im_theta0": im, "omega0": 2 * im,
                         "err_est": est.err_est, "sigma_star": est.sigma_star, "error": ""})
        except (NumericalError, ValueError) as exc:
            rows.append({"kappa": k, "im_theta0": math.nan, "omega0": math.nan,
                         "err_est": math.nan, "sigma_star": math.nan,
                         "error": f"{type(exc).__name__}: {exc}"})
    return rows
