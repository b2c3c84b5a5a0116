"""Command-line driver: gshe {stokes,homoclinic,omega-points,fit,scan,normal-form}.

Every command writes plain CSV/JSON files into --out together with a
<name>.manifest.json describing how they were produced.  Defaults may be
given in a key=value config file (--config); explicit flags win.
Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import re
import sys
import time
import warnings

import numpy as np

from . import __version__, asymfit, homoclinic, inner, mpnum, normal_form, stokes
from .mpnum import NumericalError, Precision

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


class UsageError(ValueError):
    pass


def parse_pi_multiple(text: str) -> int:
    """'350pi', '350*pi', '350π' -> 350."""
    m = re.fullmatch(r"\s*(\d+)\s*\*?\s*(pi|π)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected an integer multiple of pi such as 350pi, got {text!r}")
    return int(m.group(1))


def read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            k, v = (x.strip() for x in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _versions():
    import gmpy2
    import numba
    return {"gshe": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "gmpy2": gmpy2.version(), "mpfr": gmpy2.mpfr_version(), "numba": numba.__version__}


def write_manifest(out_dir, name, command, params, prec: Precision | None, t0, extra=None):
    man = {
        "command": command,
        "parameters": {k: (v if isinstance(v, (int, float, str, bool, type(None), list)) else str(v))
                       for k, v in params.items()},
        "precision": None if prec is None else {
            "digits": prec.digits, "guard_bits": prec.guard_bits,
            "binary_bits": prec.binary_bits, "taylor_order": prec.taylor_order,
            "hardware": prec.hardware},
        "cache_dir": str(inner.cache_dir()),
        "numba": os.environ.get("GSHE_NUMBA", "1"),
        "versions": _versions(),
        "wall_time_s": round(time.time() - t0, 3),
    }
    if extra:
        man.update(extra)
    path = os.path.join(out_dir, f"{name}.manifest.json")
    with open(path, "w") as fh:
        json.dump(man, fh, indent=2)
    return path


def write_csv(path, header, rows, manifest_name):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
        fh.write(f"# manifest: {manifest_name}.manifest.json\n")


def _say(args, msg):
    if not args.quiet:
        print(msg)


# -- commands -----------------------------------------------------------
def cmd_stokes(args):
    t0 = time.time()
    D = args.digits
    prec = stokes.stokes_precision(D)
    n_terms = args.terms or stokes.default_n_terms(D)
    N = max(args.series_order or stokes.default_series_order(D), n_terms + 1)
    params = dict(kappa=args.kappa, digits=D, d=f"{args.d}pi", terms=n_terms, series_order=N)
    ser = lambda v: mpnum.serialize(v, prec)
    if args.sigma is not None:
        series = inner.get_inner_series(args.kappa, N, prec, use_cache=not args.no_cache)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", stokes.TruncationDominated)
            r = stokes.theta_hat(series, args.sigma, args.d, n_terms, prec)
        params["sigma"] = args.sigma
        name = f"{args.prefix}theta_hat"
        write_csv(os.path.join(args.out, name + ".csv"),
                  ["sigma", "re_theta_hat", "im_theta_hat", "truncation_estimate", "steps", "runtime_s"],
                  [[args.sigma, ser(mpnum.real_part(r.theta_hat)), ser(mpnum.imag_part(r.theta_hat)),
                    f"{r.truncation_estimate:.3e}", r.steps, f"{r.runtime:.3f}"]], name)
        write_manifest(args.out, name, "stokes", params, prec, t0,
                       {"warnings": [str(w.message) for w in caught]})
        _say(args, f"Theta_hat({args.sigma}) = {ser(r.theta_hat)}")
        return EXIT_OK
    sigmas = None
    if args.sigma_min is not None or args.sigma_max is not None:
        grid = stokes.default_sigma_grid(D)
        lo = args.sigma_min if args.sigma_min is not None else grid[0]
        hi = args.sigma_max if args.sigma_max is not None else grid[-1]
        n = max(1, int(round((hi - lo) / args.sigma_step)))
        sigmas = [lo + i * (hi - lo) / n for i in range(n + 1)]
    knee = (args.knee_lo, args.knee_hi) if args.knee_lo is not None and args.knee_hi is not None else None
    progress = None if args.quiet else (lambda r: print(
        f"sigma={float(r.sigma):7.3f}  Theta_hat={mpnum.serialize(r.theta_hat, prec, 20)}", flush=True))
    est = stokes.stokes_constant(args.kappa, D, d_over_pi=args.d, n_terms=n_terms, series_order=N,
                                 sigmas=sigmas, knee=knee, use_cache=not args.no_cache,
                                 progress=progress)
    name = f"{args.prefix}stokes_D{D}"
    write_csv(os.path.join(args.out, name + "_sweep.csv"),
              ["sigma", "re_theta_hat", "im_theta_hat", "steps", "runtime_s"],
              [[f"{float(r.sigma):.6f}", ser(mpnum.real_part(r.theta_hat)), ser(mpnum.imag_part(r.theta_hat)),
                r.steps, f"{r.runtime:.3f}"] for r in est.runs], name)
    record = {"re_theta0": ser(mpnum.real_part(est.theta0)), "im_theta0": ser(mpnum.imag_part(est.theta0)),
              "err_est": est.err_est, "sigma_star": est.sigma_star, "C": est.C, "C0": est.C0,
              "C1": est.C1, "provenance": est.provenance}
    with open(os.path.join(args.out, name + ".json"), "w") as fh:
        json.dump(record, fh, indent=2)
    write_manifest(args.out, name, "stokes", params, prec, t0)
    _say(args, f"sigma* = {est.sigma_star:.4f}  C = {est.C:.4g}  C1 = {est.C1:.6g}")
    _say(args, f"Theta0 = {ser(est.theta0)}  (err_est {est.err_est:.2e})")
    return EXIT_OK


def _check_epsilon(text):
    try:
        e = float(text)
    except ValueError:
        raise UsageError(f"epsilon must be a number, got {text!r}")
    if not -0.1 <= e < 0:
        raise UsageError("epsilon must lie in [-0.1, 0)")
    return e


def _homoclinic_record(res):
    rec = res.record()
    prec = res.params.precision
    ser = lambda v: mpnum.serialize(v, prec)
    rec.update({
        "omega_definition": ser(homoclinic.omega_from_definition(res)),
        "omega_flow_derivative": ser(homoclinic.omega_flow_derivative(res)),
        "cross_check_scalar": ser(homoclinic.cross_check_scalar(res)),
        "cross_check_omega_z": ser(homoclinic.cross_check_omega_z(res)),
        "omega_z_balance": ser(homoclinic.omega_z_balance(res)),
        "seed_relative_error": homoclinic.seed_relative_error(res),
        "residuals": [f"{float(r):.3e}" for r in res.residuals],
    })
    return rec


def cmd_homoclinic(args):
    t0 = time.time()
    e = _check_epsilon(args.epsilon)
    need = homoclinic.auto_digits(e, args.accuracy)
    digits = args.digits or need
    if digits < need:
        print(f"warning: raising digits from {digits} to {need} for accuracy {args.accuracy:g}", file=sys.stderr)
        digits = need
    res = homoclinic.homoclinic_invariant(args.epsilon, args.kappa, args.branch, digits, N=args.N,
                                         T0=args.T0)
    tag = f"{args.prefix}homoclinic_eps{args.epsilon}_b{args.branch}"
    with open(os.path.join(args.out, tag + ".json"), "w") as fh:
        json.dump(_homoclinic_record(res), fh, indent=2)
    params = dict(epsilon=args.epsilon, kappa=args.kappa, branch=args.branch, digits=digits,
                  accuracy=args.accuracy, N=args.N, T0=args.T0)
    if args.profile:
        rows = homoclinic.orbit_profile(res, args.profile_xmax, args.profile_dx)
        prec = res.params.precision
        write_csv(os.path.join(args.out, tag + "_profile.csv"), ["x", "u"],
                  [[f"{x:.6f}", mpnum.serialize(u, prec, 20)] for x, u in rows], tag)
    write_manifest(args.out, tag, "homoclinic", params, res.params.precision, t0)
    _say(args, f"T* = {float(res.T_star):.10f}  psi* = {float(res.psi_star):.10f}  iters = {res.newton_iters}")
    _say(args, f"omega_hat = {mpnum.serialize(res.omega, res.params.precision, 25)}")
    _say(args, f"omega_bar = {mpnum.serialize(res.omega_bar, res.params.precision, 25)}")
    return EXIT_OK


def _eps_list(args):
    if args.epsilons:
        return [x.strip() for x in args.epsilons.split(",") if x.strip()]
    n = int(round((args.eps_max - args.eps_min) / args.eps_step))
    return [f"{args.eps_min + i * args.eps_step:.6g}" for i in range(n + 1)]


def cmd_omega_points(args):
    t0 = time.time()
    eps = _eps_list(args)
    for e in eps:
        _check_epsilon(e)
    rows = []
    for e in eps:
        digits = max(args.digits or 0, homoclinic.auto_digits(float(e), args.accuracy))
        res = homoclinic.homoclinic_invariant(e, args.kappa, args.branch, digits)
        prec = res.params.precision
        rows.append([e, mpnum.serialize(res.omega_bar, prec), args.branch, digits, res.newton_iters,
                     f"{float(res.residual):.3e}"])
        _say(args, f"eps={e}  D={digits}  omega_bar={mpnum.serialize(res.omega_bar, prec, 25)}")
    name = args.name or f"{args.prefix}omega_bar_points"
    write_csv(os.path.join(args.out, name + ".csv"),
              ["epsilon", "omega_bar", "branch", "digits", "newton_iters", "residual"], rows, name)
    write_manifest(args.out, name, "omega-points", dict(epsilons=eps, kappa=args.kappa, branch=args.branch,
                                                        accuracy=args.accuracy, digits=args.digits), None, t0)
    return EXIT_OK


def _parse_degrees(text):
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.|-|:)\s*(\d+)\s*", text)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        if a > b:
            raise argparse.ArgumentTypeError("empty degree range")
        return list(range(a, b + 1))
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad degree range {text!r}")


def cmd_fit(args):
    t0 = time.time()
    prec = Precision(args.digits)
    pts = asymfit.read_points(args.points, prec)
    if args.window_min is not None or args.window_max is not None:
        lo = args.window_min if args.window_min is not None else -math.inf
        hi = args.window_max if args.window_max is not None else math.inf
        pts = [p for p in pts if lo <= float(p.epsilon) <= hi]
    if len(pts) < max(args.degrees) + 1:
        raise UsageError(f"{len(pts)} points cannot support degree {max(args.degrees)}")
    rep = asymfit.build_report(pts, args.degrees, prec)
    name = f"{args.prefix}fit"
    asymfit.write_csv(rep, os.path.join(args.out, name + ".csv"), prec)
    with open(os.path.join(args.out, name + ".csv"), "a") as fh:
        fh.write(f"# manifest: {name}.manifest.json\n")
    table = asymfit.format_table(rep)
    with open(os.path.join(args.out, name + "_table.txt"), "w") as fh:
        fh.write(table)
    write_manifest(args.out, name, "fit", dict(points=args.points, degrees=args.degrees,
                                               n_points=len(pts)), prec, t0)
    _say(args, table.rstrip())
    return EXIT_OK


def cmd_scan(args):
    t0 = time.time()
    n = int(round((args.kappa_max - args.kappa_min) / args.kappa_step))
    kappas = [round(args.kappa_min + i * args.kappa_step, 12) for i in range(n + 1)]
    root = math.sqrt(27 / 38)
    bad = [k for k in kappas if abs(k) <= root]
    if bad:
        raise UsageError(f"kappa must exceed sqrt(27/38) = {root:.6f}; got {bad[0]}")
    rows = []
    for k in kappas:
        r = stokes.stokes_scan([k], args.digits, use_cache=not args.no_cache)[0]
        rows.append(r)
        _say(args, f"kappa={k:.6f}  Im Theta0={r['im_theta0']:.12g}  {r['error']}")
    name = f"{args.prefix}kappa_scan_D{args.digits}"
    write_csv(os.path.join(args.out, name + ".csv"),
              ["kappa", "im_theta0", "omega0", "err_est", "sigma_star", "error"],
              [[f"{r['kappa']:.12g}", repr(r["im_theta0"]), repr(r["omega0"]), f"{r['err_est']:.3e}",
                f"{r['sigma_star']:.4f}", r["error"]] for r in rows], name)
    write_manifest(args.out, name, "scan", dict(kappa_min=args.kappa_min, kappa_max=args.kappa_max,
                                                kappa_step=args.kappa_step, digits=args.digits),
                   stokes.stokes_precision(args.digits), t0)
    return EXIT_OK


def cmd_normal_form(args):
    t0 = time.time()
    lines = []
    normal_form.check_symplectic(normal_form.reduction_matrix())
    lines.append("T^T J T = J: exact")
    status = EXIT_OK
    for which in (["transcribed", "derived"] if args.f4 == "both" else [args.f4]):
        lines.append(f"-- F4 {which}")
        try:
            _, rep = normal_form.psi5_normalize(args.wcut, f4=which)
            lines.extend(rep.lines())
            lines.append(f"no residual monomials <= weight {args.wcut}")
        except normal_form.NormalizationMismatch as exc:
            lines.extend(str(exc).splitlines())
            if args.verify:
                status = EXIT_NUMERICAL
    name = f"{args.prefix}normal_form"
    with open(os.path.join(args.out, name + ".txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    write_manifest(args.out, name, "normal-form", dict(wcut=args.wcut, f4=args.f4, verify=args.verify),
                   None, t0)
    _say(args, "\n".join(lines))
    if status != EXIT_OK:
        print("error: NormalizationMismatch", file=sys.stderr)
    return status


# -- parser ---------------------------------------------------------------
def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value defaults file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--prefix", default="", help="prefix for output file names")
    common.add_argument("--cache-dir", help="inner-series cache (overrides GSHE_CACHE_DIR)")
    common.add_argument("--no-cache", action="store_true")
    common.add_argument("--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="gshe", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stokes", parents=[common], help="Stokes constant of the inner equation")
    s.add_argument("--kappa", type=float, default=2.0)
    s.add_argument("--digits", type=int, default=16)
    s.add_argument("--d", type=parse_pi_multiple, default="350pi")
    s.add_argument("--terms", type=int, default=None, help="series terms for initial data (9 at D<=16, else 40)")
    s.add_argument("--series-order", type=int, default=None, help="inner series order (40 at D<=16, else 45)")
    s.add_argument("--sigma", type=float, default=None, help="evaluate Theta_hat at one sigma only")
    s.add_argument("--sigma-min", type=float, default=None)
    s.add_argument("--sigma-max", type=float, default=None)
    s.add_argument("--sigma-step", type=float, default=0.25)
    s.add_argument("--knee-lo", type=float, default=None)
    s.add_argument("--knee-hi", type=float, default=None)
    s.set_defaults(func=cmd_stokes)

    h = sub.add_parser("homoclinic", parents=[common], help="symmetric homoclinic orbit and its invariant")
    h.add_argument("--epsilon", required=True)
    h.add_argument("--kappa", type=float, default=2.0)
    h.add_argument("--digits", type=int, default=None)
    h.add_argument("--accuracy", type=float, default=1e-5)
    h.add_argument("--branch", type=int, choices=(0, 1), default=0)
    h.add_argument("--N", type=int, default=5, help="outer series order")
    h.add_argument("--T0", type=float, default=None)
    h.add_argument("--profile", action="store_true", help="also write the orbit profile u(x)")
    h.add_argument("--profile-xmax", type=float, default=100.0)
    h.add_argument("--profile-dx", type=float, default=0.25)
    h.set_defaults(func=cmd_homoclinic)

    o = sub.add_parser("omega-points", parents=[common], help="normalized invariant on a list of epsilon")
    o.add_argument("--epsilons", help="comma separated list")
    o.add_argument("--eps-min", type=float, default=-0.01)
    o.add_argument("--eps-max", type=float, default=-0.004)
    o.add_argument("--eps-step", type=float, default=0.0005)
    o.add_argument("--kappa", type=float, default=2.0)
    o.add_argument("--branch", type=int, choices=(0, 1), default=0)
    o.add_argument("--digits", type=int, default=None, help="minimum digits (auto-raised)")
    o.add_argument("--accuracy", type=float, default=1e-5)
    o.add_argument("--name", default=None)
    o.set_defaults(func=cmd_omega_points)

    f = sub.add_parser("fit", parents=[common], help="window fits of the invariant expansion")
    f.add_argument("--points", required=True)
    f.add_argument("--degrees", type=_parse_degrees, default="5..6")
    f.add_argument("--digits", type=int, default=40)
    f.add_argument("--window-min", type=float, default=None)
    f.add_argument("--window-max", type=float, default=None)
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("scan", parents=[common], help="Stokes constant as a function of kappa")
    c.add_argument("--kappa-min", type=float, default=0.85)
    c.add_argument("--kappa-max", type=float, default=3.0)
    c.add_argument("--kappa-step", type=float, default=0.01)
    c.add_argument("--digits", type=int, default=16)
    c.set_defaults(func=cmd_scan)

    n = sub.add_parser("normal-form", parents=[common], help="exact degree-five normalization")
    n.add_argument("--verify", action="store_true", help="exit 3 if residual monomials remain")
    n.add_argument("--wcut", type=int, default=5)
    n.add_argument("--f4", choices=("transcribed", "derived", "both"), default="both")
    n.set_defaults(func=cmd_normal_form)
    return p, sub


def _apply_config(parser, sub, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    cmd = next((a for a in argv if not a.startswith("-") and a in sub.choices), None)
    if cmd is None:
        return
    sp = sub.choices[cmd]
    dests = {a.dest for a in sp._actions}
    unknown = sorted(set(cfg) - dests)
    if unknown:
        raise UsageError(f"unknown config keys for {cmd}: {', '.join(unknown)}")
    for a in sp._actions:
        if a.dest in cfg and a.required:
            a.required = False
    sp.set_defaults(**cfg)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, sub = build_parser()
    try:
        _apply_config(parser, sub, argv)
    except (OSError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.cache_dir:
        os.environ["GSHE_CACHE_DIR"] = args.cache_dir
    try:
        os.makedirs(args.out, exist_ok=True)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
