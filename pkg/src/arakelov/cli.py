"""Command-line front end.

Usage::

    arakelov periods    (--curve FILE | --coeffs C0,C1,..) [-o OUT]
    arakelov theta      (--curve FILE | --coeffs ..) --z Z1,..,Zg [--char A;B]
    arakelov green      (--curve FILE | --coeffs ..) --p PT --q PT [--log-s VALUE]
    arakelov invariants (--curve FILE | --coeffs ..)
    arakelov example

Structured output (``--format structured``) is a single JSON document with
sorted keys; it never contains timings, so fixed inputs and seed give
byte-identical output.  The exit status is 0 iff every requested
computation converged.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction

import numpy as np

from . import arithmetic, elliptic, invariants
from .errors import ArakelovError, ConvergenceError, InvalidInputError
from .numerics import QuadratureConfig, to_fraction
from .surface import RiemannSurface, build_curve, load_curve_file
from .theta import Characteristic, log_theta_normed, theta_eval, theta_with_char

# Reference values for the built-in genus-3 example with acceptance bands.
EXAMPLE_REFERENCE = (
    ("deg_det", -1.280295247656532068, 1e-9),
    ("log_T_modular", -4.44361200473681284, 1e-9),
    ("log_T_theta_deriv", -4.44361200473681284, 1e-6),
    ("log_S", 17.57, 0.05),
    ("delta", -33.40, 0.2),
    ("G(W0,W1)", 2.33, 0.02),
    ("omega_omega", 20.32, 0.2),
)


class Stage:
    """Times a pipeline stage and tags its errors with the stage name."""

    def __init__(self, name: str, timings: dict):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if exc is not None and isinstance(exc, ArakelovError) and not getattr(exc, "stage", None):
            exc.stage = self.name
        return False


# -- parsing ------------------------------------------------------------------


def parse_coeffs(text: str):
    try:
        return [to_fraction(tok.strip()) for tok in text.split(",") if tok.strip()]
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise InvalidInputError(f"--coeffs: cannot parse {text!r} as rationals ({exc})") from exc


def parse_complex(text: str, field: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise InvalidInputError(f"{field}: cannot parse {text!r} as a complex number") from exc


def parse_point(text: str, surface: RiemannSurface, field: str):
    """``x`` or ``x:sheet``, ``inf[:sheet]``, or ``W<i>`` for the i-th Weierstrass point."""
    text = text.strip()
    if text.upper().startswith("W"):
        try:
            return surface.curve.weierstrass_points()[int(text[1:])]
        except (ValueError, IndexError) as exc:
            raise InvalidInputError(f"{field}: no Weierstrass point {text!r}") from exc
    xs, _, sheet = text.partition(":")
    try:
        sheet = int(sheet) if sheet else 1
    except ValueError as exc:
        raise InvalidInputError(f"{field}: sheet must be +1 or -1") from exc
    x = math.inf if xs.lower() in ("inf", "infinity") else parse_complex(xs, field)
    return surface.curve.point(x, sheet)


def make_config(args) -> QuadratureConfig:
    return QuadratureConfig(theta_eps=args.theta_eps, quad_rel_tol=args.quad_rel_tol, max_depth=args.quad_depth,
                            nodes_per_panel=args.nodes)


def load_surface(args, cfg) -> RiemannSurface:
    if args.curve is not None:
        curve, ordering = load_curve_file(args.curve)
    else:
        curve, ordering = build_curve(parse_coeffs(args.coeffs)), None
    if getattr(args, "ordering", None):
        try:
            ordering = tuple(int(t) for t in args.ordering.split(","))
        except ValueError as exc:
            raise InvalidInputError("--ordering: expected comma-separated integers") from exc
    return RiemannSurface(curve, ordering=ordering, cfg=cfg)


# -- output -------------------------------------------------------------------


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": float(v.real), "im": float(v.imag)}
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, Fraction):
        return str(v)
    return v


def emit(doc: dict, args, timings: dict, human_lines, out=None) -> None:
    out = out or sys.stdout
    if args.format == "structured":
        out.write(json.dumps(_plain(doc), sort_keys=True, indent=2) + "\n")
        return
    for line in human_lines:
        out.write(line + "\n")
    if timings:
        out.write("timings: " + ", ".join(f"{k} {v:.2f}s" for k, v in timings.items()) + "\n")


def config_echo(args, cfg) -> dict:
    return {"command": args.command, "theta_eps": cfg.theta_eps, "quad_rel_tol": cfg.quad_rel_tol,
            "quad_depth": cfg.max_depth, "nodes": cfg.nodes_per_panel, "seed": args.seed}


# -- commands -----------------------------------------------------------------


def cmd_periods(args) -> int:
    cfg = make_config(args)
    timings = {}
    with Stage("periods", timings):
        X = load_surface(args, cfg)
    pd = X.periods
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(pd.to_json())
    doc = {"config": config_echo(args, cfg), "genus": X.g, "ordering": list(pd.ordering),
           "tau": pd.tau.tau, "symmetry_residual": pd.symmetry_residual,
           "bilinear_residual": pd.bilinear_residual, "deg_det": -0.5 * pd.log_det_gram(),
           "periods": json.loads(pd.to_json())}
    lines = [f"genus {X.g}, ordering {list(pd.ordering)}",
             "tau =", np.array2string(pd.tau.tau, precision=12, max_line_width=160),
             f"symmetry residual {pd.symmetry_residual:.2e}, bilinear residual {pd.bilinear_residual:.2e}",
             f"deg det = {doc['deg_det']:.15f}"]
    emit(doc, args, timings, lines)
    return 0


def cmd_theta(args) -> int:
    cfg = make_config(args)
    timings = {}
    with Stage("periods", timings):
        X = load_surface(args, cfg)
    z = np.array([parse_complex(t, "--z") for t in args.z.split(",")])
    if z.size != X.g:
        raise InvalidInputError(f"--z: expected {X.g} entries, got {z.size}")
    with Stage("theta", timings):
        if args.char:
            try:
                a, b = (tuple(float(Fraction(t)) for t in half.split(",")) for half in args.char.split(";"))
            except ValueError as exc:
                raise InvalidInputError("--char: expected 'a1,..,ag;b1,..,bg'") from exc
            tv = theta_with_char(Characteristic(a, b), z, X.tau, cfg.theta_eps)
        else:
            tv = theta_eval(z, X.tau, eps=cfg.theta_eps)
        lt = float(log_theta_normed(z[None, :], X.tau, cfg.theta_eps)[0])
    doc = {"config": config_echo(args, cfg), "z": z, "theta": tv.value, "error_bound": tv.error_bound,
           "log_theta_norm": lt}
    lines = [f"theta = {tv.value:.15e} (truncation bound {tv.error_bound:.1e})", f"log ||theta|| = {lt:.15f}"]
    emit(doc, args, timings, lines)
    return 0


def _log_s(X, args, cfg, timings, doc):
    if args.log_s is not None:
        doc["log_S"] = {"value": args.log_s, "error": 0.0, "source": "input"}
        return args.log_s
    with Stage("compute_s", timings):
        s = invariants.compute_s(X, cfg=cfg, seed=args.seed)
    doc["log_S"] = {"value": s.log_s, "error": s.error, "source": "quadrature", "nodes": s.n_nodes}
    return s.log_s


def cmd_green(args) -> int:
    cfg = make_config(args)
    timings = {}
    with Stage("periods", timings):
        X = load_surface(args, cfg)
    P = parse_point(args.p, X, "--p")
    Q = parse_point(args.q, X, "--q")
    doc = {"config": config_echo(args, cfg)}
    log_s = _log_s(X, args, cfg, timings, doc)
    with Stage("green", timings):
        if P.is_weierstrass:
            gl = invariants.green_limit_at_weierstrass(X, P, Q, log_s, cfg)
            lg, routes = gl.log_value, gl.routes
        else:
            lg = invariants.log_green(X, P, Q, log_s, cfg)
            routes = {}
    value = 0.0 if lg == -math.inf else math.exp(lg)
    doc.update({"log_G": lg, "G": value, "routes": routes})
    lines = [f"log S = {log_s:.12f}", f"G(P, Q) = {value:.12g}   (log G = {lg:.12f})"]
    lines += [f"  route {k}: {v:.12g}" for k, v in routes.items()]
    emit(doc, args, timings, lines)
    return 0


def run_invariants(X, args, cfg, timings) -> dict:
    doc = {"config": config_echo(args, cfg), "genus": X.g}
    with Stage("periods", timings):
        pd = X.periods
        doc["periods"] = {"symmetry_residual": pd.symmetry_residual, "bilinear_residual": pd.bilinear_residual,
                          "deg_det": -0.5 * pd.log_det_gram()}
    log_s = _log_s(X, args, cfg, timings, doc)
    lt = {}
    with Stage("T_modular", timings):
        lt["modular"] = invariants.log_t_modular(X, cfg).log_t
    with Stage("T_theta_deriv", timings):
        lt["theta_deriv"] = invariants.log_t_theta_deriv(X, cfg=cfg, seed=args.seed).log_t
    with Stage("T_wronskian", timings):
        tw = invariants.log_t_wronskian(X, cfg=cfg, seed=args.seed)
        lt["wronskian"] = tw.log_t
    doc["log_T"] = lt
    doc["log_T_wronskian_ray"] = tw.diagnostics["log_t_ray"]
    # error estimate for T: spread of the independent routes
    doc["log_T_error"] = max(lt.values()) - min(lt.values())
    delta = invariants.compute_delta(log_s, lt["modular"], X.g)
    doc["delta"] = delta
    doc["log_R"] = invariants.compute_r(log_s, delta)
    with Stage("residuals", timings):
        rng = np.random.default_rng(args.seed + 1)
        res = []
        for _ in range(3):
            pts, Q = invariants.generic_configuration(X, rng, log_s, cfg)
            res.append({"faltings": invariants.faltings_residual(X, pts, Q, log_s, delta, cfg),
                        "guardia": invariants.guardia_residual(X, pts, Q, log_s, delta, cfg)})
        doc["residuals"] = res
    if X.g == 1:
        t = complex(X.tau.tau[0, 0])
        doc["closed_form"] = {"log_S": elliptic.log_s_closed_form(t), "log_T": elliptic.log_t_closed_form(t),
                              "delta": elliptic.delta_closed_form(t)}
    return doc


def _invariant_lines(doc):
    lines = [f"genus {doc['genus']}", f"deg det      = {doc['periods']['deg_det']:.15f}",
             f"log S        = {doc['log_S']['value']:.12f}  (+- {doc['log_S']['error']:.1e})"]
    lines += [f"log T [{k:11s}] = {v:.15f}" for k, v in doc["log_T"].items()]
    lines.append(f"log T route spread = {doc['log_T_error']:.1e}")
    lines += [f"delta        = {doc['delta']:.12f}", f"log R        = {doc['log_R']:.12f}"]
    lines += [f"residuals: Faltings {r['faltings']:+.2e}, Guardia {r['guardia']:+.2e}" for r in doc["residuals"]]
    if "closed_form" in doc:
        cf = doc["closed_form"]
        lines.append("closed forms (genus 1):")
        lines.append(f"  log S {cf['log_S']:.12f}  diff {doc['log_S']['value'] - cf['log_S']:+.2e}")
        lines.append(f"  log T {cf['log_T']:.12f}  diff {doc['log_T']['modular'] - cf['log_T']:+.2e}")
        lines.append(f"  delta {cf['delta']:.12f}  diff {doc['delta'] - cf['delta']:+.2e}")
    return lines


def cmd_invariants(args) -> int:
    cfg = make_config(args)
    timings = {}
    with Stage("periods", timings):
        X = load_surface(args, cfg)
    doc = run_invariants(X, args, cfg, timings)
    emit(doc, args, timings, _invariant_lines(doc))
    return 0


def run_example(args, cfg, timings) -> dict:
    with Stage("family", timings):
        rep = arithmetic.check_family(arithmetic.EXAMPLE_F)
    with Stage("periods", timings):
        X = RiemannSurface.from_coeffs(arithmetic.family_curve(arithmetic.EXAMPLE_F), cfg=cfg)
    args.log_s = None
    doc = run_invariants(X, args, cfg, timings)
    doc["config"]["command"] = "example"
    doc["family"] = {"F": list(rep.F), "discriminant": rep.discriminant, "bad_primes": rep.bad_primes}
    log_s = doc["log_S"]["value"]
    with Stage("green", timings):
        W0, W1 = arithmetic.family_weierstrass_pair(X)
        gl = invariants.green_limit_at_weierstrass(X, W0, W1, log_s, cfg)
    omega = arithmetic.omega_self_intersection(X, log_s, cfg, log_green_w0w1=gl.log_value)
    log_g_err = abs(gl.routes["richardson"] - gl.log_value)
    doc["G(W0,W1)"] = gl.value
    doc["G(W0,W1)_error"] = gl.value * log_g_err
    doc["omega_omega_error"] = 24.0 * log_g_err
    doc["omega_omega"] = omega
    doc["bound"] = arithmetic.archimedean_bound_terms(X.g, doc["log_R"], doc["periods"]["deg_det"])
    computed = {"deg_det": doc["periods"]["deg_det"], "log_T_modular": doc["log_T"]["modular"],
                "log_T_theta_deriv": doc["log_T"]["theta_deriv"], "log_S": log_s, "delta": doc["delta"],
                "G(W0,W1)": gl.value, "omega_omega": omega}
    doc["comparison"] = [{"quantity": name, "computed": computed[name], "reference": ref, "band": band,
                          "pass": abs(computed[name] - ref) <= band} for name, ref, band in EXAMPLE_REFERENCE]
    return doc


def cmd_example(args) -> int:
    cfg = make_config(args)
    timings = {}
    doc = run_example(args, cfg, timings)
    lines = [f"y^2 = x(x-1)R(x), F = {doc['family']['F']}, bad primes {doc['family']['bad_primes']}"]
    lines += _invariant_lines(doc)
    lines.append(f"G(W0,W1)     = {doc['G(W0,W1)']:.12f}")
    lines.append(f"(omega,omega) = {doc['omega_omega']:.12f}")
    lines.append(f"{'quantity':18s} {'computed':>22s} {'reference':>22s} {'band':>8s}  result")
    for row in doc["comparison"]:
        lines.append(f"{row['quantity']:18s} {row['computed']:22.15f} {row['reference']:22.15f} "
                     f"{row['band']:8.0e}  {'PASS' if row['pass'] else 'FAIL'}")
    emit(doc, args, timings, lines)
    return 0


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    defaults = QuadratureConfig()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--theta-eps", type=float, default=defaults.theta_eps)
    common.add_argument("--quad-rel-tol", type=float, default=defaults.quad_rel_tol)
    common.add_argument("--quad-depth", type=int, default=defaults.max_depth)
    common.add_argument("--nodes", type=int, default=defaults.nodes_per_panel)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("human", "structured"), default="human")

    curve = argparse.ArgumentParser(add_help=False)
    src = curve.add_mutually_exclusive_group(required=True)
    src.add_argument("--curve", help="JSON curve file with 'f_coeffs' (and optional 'ordering')")
    src.add_argument("--coeffs", help="comma-separated coefficients of f, leading first")
    curve.add_argument("--ordering", help="comma-separated branch-point ordering")

    p = argparse.ArgumentParser(prog="arakelov", description="Arakelov invariants of hyperelliptic curves.")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("periods", parents=[common, curve], help="period matrices and tau")
    sp.add_argument("-o", "--output", help="write the period data file here")
    sp.set_defaults(func=cmd_periods)
    sp = sub.add_parser("theta", parents=[common, curve], help="Riemann theta at a point of C^g")
    sp.add_argument("--z", required=True, help="comma-separated complex entries")
    sp.add_argument("--char", help="characteristic 'a1,..,ag;b1,..,bg' with entries 0 or 1/2")
    sp.set_defaults(func=cmd_theta)
    sp = sub.add_parser("green", parents=[common, curve], help="Arakelov-Green function G(P, Q)")
    sp.add_argument("--p", required=True, help="x[:sheet], inf[:sheet] or W<i>")
    sp.add_argument("--q", required=True, help="x[:sheet], inf[:sheet] or W<i>")
    sp.add_argument("--log-s", type=float, help="skip the S quadrature and use this value")
    sp.set_defaults(func=cmd_green)
    sp = sub.add_parser("invariants", parents=[common, curve], help="S, T, delta, R and identity residuals")
    sp.add_argument("--log-s", type=float, help="skip the S quadrature and use this value")
    sp.set_defaults(func=cmd_invariants)
    sp = sub.add_parser("example", parents=[common], help="the built-in genus-3 example")
    sp.set_defaults(func=cmd_example)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error [{getattr(exc, 'stage', args.command)}]: not converged: {exc}", file=sys.stderr)
        return 1
    except (ArakelovError, ValueError) as exc:
        print(f"error [{getattr(exc, 'stage', args.command)}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
