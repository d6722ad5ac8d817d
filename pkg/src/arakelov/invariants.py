"""Arakelov invariants of a hyperelliptic Riemann surface.

All quantities are computed from theta values on ``Pic_{g-1}``, identified
with the Jacobian through the Riemann vector ``kappa`` of the surface:

* the Arakelov-Green function, from
  ``G(P,Q)^g = S^{1/g^2} ||theta||(gP - Q) / prod_W ||theta||(gP - W)^{1/g^3}``
  where the product over the Weierstrass divisor counts every branch point
  with weight ``g(g-1)/2``;
* ``log S`` by integrating ``log ||theta||(gP - Q)`` against ``mu(Q)``;
* ``log T`` by three independent routes (first theta derivatives, the
  hyperelliptic discriminant modular form, and the Wronskian limit);
* ``delta = 4 (log T - ((g-1)/g^2) log S)`` and ``log R = log S - delta/8``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceError,
    GenericityError,
    InvalidInputError,
    NumericDegeneracyError,
    ProximityError,
)
from .integration import SurfaceQuadrature
from .numerics import QuadratureConfig
from .surface import RiemannSurface, SurfacePoint
from .theta import Characteristic, log_j_norm, log_theta_normed, theta_batch, theta_with_char

GENERICITY_THRESHOLD = 1e-8
MAX_RESAMPLES = 10
SAMPLE_RADIUS = 2.0


# ---------------------------------------------------------------------------
# local Taylor expansions of theta along a chart


class ThetaExpansion:
    """Taylor expansion of ``zeta -> theta(z(zeta))`` about a chart centre.

    ``zfun`` maps chart coordinates (array) to argument vectors (m, g) and
    must be holomorphic.  Coefficients are obtained by FFT on a circle whose
    radius is shrunk until the leading term dominates there.

    Attributes
    ----------
    order : int
        Vanishing order at ``zeta = 0``.
    log_lead : float
        ``log`` of the leading coefficient of ``||theta||(z(zeta))`` in
        ``|zeta|``, i.e. ``lim log(||theta||(z(zeta)) / |zeta|^order)``.
    """

    def __init__(self, tau, zfun, radius: float, eps: float = 1e-13, n: int = 128,
                 order: int | None = None, rel_zero: float = 1e-9):
        self.tau = tau
        self.g = tau.g
        z0 = np.asarray(zfun(np.zeros(1, dtype=complex)))[0]
        zr, _, _ = tau.reduce(z0)
        self.shift = zr[0] - z0
        self.zfun = zfun
        self.eps = eps
        rho = 0.3 * radius
        j = np.arange(n)
        roots = np.exp(2j * np.pi * j / n)
        half = n // 2
        for attempt in range(10):
            F = self._theta(rho * roots)
            c = np.fft.fft(F) / n
            mags = np.abs(c[:half])
            top = float(mags.max())
            if order is None:
                nz = np.nonzero(mags > rel_zero * top)[0]
                k = int(nz[0]) if nz.size else half
            else:
                k = int(order)
            if k < half and mags[k] >= 0.05 * top:
                break
            rho *= 0.5
        else:
            raise ConvergenceError("leading Taylor coefficient of theta could not be isolated",
                                   diagnostics={"magnitudes": mags[: min(half, 12)].tolist()})
        self.rho = rho
        self.order = k
        self.coeffs = c[:half] / rho ** np.arange(half)
        self.lead_relative = float(mags[k] / top)
        y0 = zr[0].imag
        self.log_lead = (0.25 * math.log(tau.det_y) - math.pi * float(y0 @ tau.Yinv @ y0)
                         + math.log(abs(self.coeffs[k])))

    def _args(self, zeta):
        return np.asarray(self.zfun(np.asarray(zeta, dtype=complex))) + self.shift

    def _theta(self, zeta):
        b = theta_batch(self._args(zeta), self.tau, self.eps)
        return np.exp(b.log_scale) * b.tilde

    def log_normed(self, zeta):
        """``log ||theta||(z(zeta))`` from the series; valid for ``|zeta| <= rho/2``."""
        zeta = np.asarray(zeta, dtype=complex)
        y = self._args(zeta).imag
        gauss = np.einsum("mi,ij,mj->m", y, self.tau.Yinv, y)
        tail = self.coeffs[self.order:]
        acc = np.zeros(zeta.shape, dtype=complex)
        for a in tail[::-1]:
            acc = acc * zeta + a
        with np.errstate(divide="ignore"):
            return (0.25 * math.log(self.tau.det_y) - math.pi * gauss
                    + self.order * np.log(np.abs(zeta)) + np.log(np.abs(acc)))


# ---------------------------------------------------------------------------
# helpers


def _aj(surface: RiemannSurface, P: SurfacePoint) -> np.ndarray:
    return surface._aj_point(P)


def _log_theta(surface: RiemannSurface, z, eps) -> np.ndarray:
    return log_theta_normed(np.atleast_2d(z), surface.tau, eps)


def weierstrass_log_sum(surface: RiemannSurface, P: SurfacePoint, cfg: QuadratureConfig | None = None) -> float:
    """``sum_W w(W) log ||theta||(gP - W)`` over the Weierstrass divisor."""
    cfg = cfg or surface.cfg
    g = surface.g
    w = surface.curve.weierstrass_weight
    if w == 0:
        return 0.0
    z = g * _aj(surface, P) - surface.weierstrass_aj() + surface.riemann_vector
    return float(w * np.sum(_log_theta(surface, z, cfg.theta_eps)))


def chart_distance_to_weierstrass(surface: RiemannSurface, P: SurfacePoint) -> float:
    """Distance of P to the nearest Weierstrass point in its local chart parameter."""
    if P.is_weierstrass:
        return 0.0
    curve = surface.curve
    if P.is_infinity:
        return math.inf
    d = float(np.sqrt(np.abs(curve.branch_points - P.x)).min())
    if curve.has_infinity:
        d = min(d, abs(P.x) ** -0.5)
    return d


def random_generic_point(surface: RiemannSurface, rng, min_dist: float = 0.0) -> SurfacePoint:
    """Uniform x in the disc of radius 2 with a random sheet."""
    e = surface.curve.branch_points
    for _ in range(1000):
        r = SAMPLE_RADIUS * math.sqrt(rng.random())
        x = complex(r * np.exp(2j * np.pi * rng.random()))
        sheet = 1 if rng.random() < 0.5 else -1
        if float(np.abs(e - x).min()) > max(min_dist, 1e-6):
            return surface.curve.point(x, sheet)
    raise GenericityError("could not sample a point away from the branch points")


# ---------------------------------------------------------------------------
# Green function


def log_green(surface: RiemannSurface, P: SurfacePoint, Q: SurfacePoint, log_s: float,
              cfg: QuadratureConfig | None = None, check_proximity: bool = True) -> float:
    """``log G(P, Q)`` from the closed theta formula.

    Raises
    ------
    ProximityError
        P is a Weierstrass point or within ``sing_exclusion_radius`` of one
        (use :func:`green_limit_at_weierstrass`).
    """
    cfg = cfg or surface.cfg
    g = surface.g
    if P.is_weierstrass or (check_proximity and chart_distance_to_weierstrass(surface, P) < cfg.sing_exclusion_radius):
        raise ProximityError("P is at or near a Weierstrass point; use green_limit_at_weierstrass")
    if _same_point(P, Q):
        return -math.inf
    z = g * _aj(surface, P) - _aj(surface, Q) + surface.riemann_vector
    lt = float(_log_theta(surface, z, cfg.theta_eps)[0])
    wsum = weierstrass_log_sum(surface, P, cfg)
    return (log_s / g ** 2 + lt - wsum / g ** 3) / g


def green_function(surface: RiemannSurface, P: SurfacePoint, Q: SurfacePoint, log_s: float,
                   cfg: QuadratureConfig | None = None) -> float:
    """``G(P, Q)``; exactly 0 when ``P == Q``."""
    lg = log_green(surface, P, Q, log_s, cfg)
    return 0.0 if lg == -math.inf else math.exp(lg)


def _same_point(P: SurfacePoint, Q: SurfacePoint) -> bool:
    if P.is_weierstrass or Q.is_weierstrass:
        return P.is_weierstrass and Q.is_weierstrass and P.branch == Q.branch
    if P.is_infinity or Q.is_infinity:
        return P.is_infinity and Q.is_infinity and P.sheet == Q.sheet
    return abs(P.x - Q.x) <= 1e-14 * max(1.0, abs(P.x)) and P.sheet == Q.sheet


@dataclass
class GreenLimit:
    """``log G(W, Q)`` at a Weierstrass point W by several routes."""

    log_value: float
    routes: dict
    orders: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def green_limit_at_weierstrass(surface: RiemannSurface, W: SurfacePoint, Q: SurfacePoint, log_s: float,
                               cfg: QuadratureConfig | None = None, ray_angle: float = 0.3,
                               richardson: bool = True) -> GreenLimit:
    """``log G(W, Q)`` for a Weierstrass point W.

    Primary route: leading Taylor coefficients, in the chart parameter at
    W, of every theta factor of the Green formula as ``P -> W``.  The
    powers of the chart parameter cancel; the vanishing orders are checked
    for this.  Secondary routes: polynomial extrapolation of the regular
    formula along a ray into W, and the symmetric evaluation ``G(Q, W)``
    when Q is not a Weierstrass point.
    """
    cfg = cfg or surface.cfg
    if not W.is_weierstrass:
        raise InvalidInputError("W must be a Weierstrass point")
    if _same_point(W, Q):
        return GreenLimit(-math.inf, {"series": -math.inf})
    g = surface.g
    w = surface.curve.weierstrass_weight
    kappa = surface.riemann_vector
    ch = surface.chart(W)
    tau = surface.tau

    def make(target):
        return lambda zeta: g * ch.aj(zeta) - target + kappa

    aq = _aj(surface, Q)
    eq = ThetaExpansion(tau, make(aq), ch.radius, cfg.theta_eps)
    log_terms = eq.log_lead
    order_w = 0.0
    orders = {"Q": eq.order}
    if w:
        for i, aw in enumerate(surface.weierstrass_aj()):
            ew = ThetaExpansion(tau, make(aw), ch.radius, cfg.theta_eps)
            log_terms -= w * ew.log_lead / g ** 3
            order_w += w * ew.order / g ** 3
            orders[f"W{i}"] = ew.order
    if abs(eq.order - order_w) > 1e-9:
        raise ConvergenceError(
            f"vanishing orders inconsistent at the Weierstrass point ({eq.order} vs {order_w})",
            diagnostics={"orders": orders})
    series = (log_s / g ** 2 + log_terms) / g
    routes = {"series": series}
    if richardson:
        routes["richardson"], routes["richardson_error"] = _ray_extrapolate(
            surface, ch, Q, log_s, cfg, ray_angle)
    if not (Q.is_weierstrass or (Q.is_infinity and surface.curve.has_infinity)):
        routes["symmetric"] = log_green(surface, Q, W, log_s, cfg, check_proximity=False)
    return GreenLimit(series, routes, orders)


def _neville(ts, vals):
    """Neville extrapolation to t = 0; returns (value, change in the last order)."""
    n = len(ts)
    P = list(vals)
    diag = [P[-1]]
    for k in range(1, n):
        for i in range(n - 1, k - 1, -1):
            P[i] = (ts[i - k] * P[i] - ts[i] * P[i - 1]) / (ts[i - k] - ts[i])
        diag.append(P[n - 1])
    return diag[-1], abs(diag[-1] - diag[-2])


def _ray_nodes(radius, n: int = 9):
    # kept well away from the centre: the factors vanish to high order there
    return [0.5 * radius * 0.75 ** j for j in range(n)]


def _ray_extrapolate(surface, ch, Q, log_s, cfg, angle):
    ts = _ray_nodes(ch.radius)
    vals = []
    for t in ts:
        z = t * np.exp(1j * angle)
        x, y = complex(ch.x_of(z)), complex(ch.y_of(z))
        P = surface.curve.point_xy(x, y)
        vals.append(log_green(surface, P, Q, log_s, cfg, check_proximity=False))
    return _neville(ts, vals)


# ---------------------------------------------------------------------------
# S(X)


@dataclass
class SResult:
    log_s: float
    error: float
    point: SurfacePoint
    n_nodes: int
    diagnostics: dict = field(default_factory=dict)


def default_reference_point(surface: RiemannSurface, seed: int = 0) -> SurfacePoint:
    """A reproducible generic point reasonably far from the branch points."""
    e = surface.curve.branch_points
    sep = min(abs(a - b) for i, a in enumerate(e) for b in e[i + 1:])
    rng = np.random.default_rng(seed)
    return random_generic_point(surface, rng, min_dist=min(0.25, 0.5 * sep))


def _theta_log_integral(surface: RiemannSurface, P: SurfacePoint, cfg: QuadratureConfig):
    """``int log ||theta||(gP - Q) mu(Q)`` with a local series at ``Q = P``."""
    g = surface.g
    if P.is_weierstrass:
        raise InvalidInputError("the reference point must not be a Weierstrass point")
    zP = g * _aj(surface, P) + surface.riemann_vector
    chP = surface.chart(P)
    exp_P = ThetaExpansion(surface.tau, lambda zeta: zP - chP.aj(zeta), chP.radius, cfg.theta_eps, order=g)
    switch = 0.5 * exp_P.rho

    def integrand(block):
        vals = _log_theta(surface, zP - block.aj, cfg.theta_eps)
        if block.chart is chP:
            near = np.abs(block.local) <= switch
            if near.any():
                vals = vals.copy()
                vals[near] = exp_P.log_normed(block.local[near])
        return vals

    quad = SurfaceQuadrature(surface, singular_points=[P], cfg=cfg)
    return quad.integrate(integrand, scale=1.0)


def compute_s(surface: RiemannSurface, P: SurfacePoint | None = None, cfg: QuadratureConfig | None = None,
              seed: int = 0) -> SResult:
    """``log S = -g^2 int log ||theta||(gP - Q) mu(Q) + (1/g) sum_W w log ||theta||(gP - W)``."""
    cfg = cfg or surface.cfg
    g = surface.g
    if P is None:
        P = default_reference_point(surface, seed)
    res = _theta_log_integral(surface, P, cfg)
    integral = float(np.real(res.value))
    wsum = weierstrass_log_sum(surface, P, cfg)
    log_s = -g ** 2 * integral + wsum / g
    return SResult(log_s=log_s, error=g ** 2 * res.error, point=P, n_nodes=res.n_nodes,
                   diagnostics={"integral": integral, "weierstrass_term": wsum / g, **res.diagnostics})


def green_mean(surface: RiemannSurface, P: SurfacePoint, log_s: float, cfg: QuadratureConfig | None = None):
    """``(int log G(P, Q) mu(Q), error estimate)``; zero for the correct ``log S``."""
    cfg = cfg or surface.cfg
    g = surface.g
    res = _theta_log_integral(surface, P, cfg)
    wsum = weierstrass_log_sum(surface, P, cfg)
    value = (log_s / g ** 2 + float(np.real(res.value)) - wsum / g ** 3) / g
    return value, res.error / g


def compute_s_definitional(surface: RiemannSurface, Q: SurfacePoint | None = None,
                           cfg: QuadratureConfig | None = None, seed: int = 0) -> SResult:
    """``log S = -int log ||theta||(gP - Q) mu(P)`` (integration over P for fixed Q).

    The integrand is singular at ``P = Q`` and at every Weierstrass point;
    each of those gets a graded polar chart with a local theta expansion.
    """
    cfg = cfg or surface.cfg
    g = surface.g
    if Q is None:
        Q = default_reference_point(surface, seed)
    kappa = surface.riemann_vector
    zQ = _aj(surface, Q) - kappa
    expansions = {}
    singular = [Q] + surface.curve.weierstrass_points()
    for C in singular:
        ch = surface.chart(C)
        ex = ThetaExpansion(surface.tau, (lambda c: (lambda zeta: g * c.aj(zeta) - zQ))(ch), ch.radius,
                            cfg.theta_eps)
        expansions[id(ch)] = (ch, ex)

    def integrand(block):
        vals = _log_theta(surface, g * block.aj - zQ, cfg.theta_eps)
        hit = expansions.get(id(block.chart))
        if hit is not None:
            ch, ex = hit
            near = np.abs(block.local) <= 0.5 * ex.rho
            if near.any():
                vals = vals.copy()
                vals[near] = ex.log_normed(block.local[near])
        return vals

    quad = SurfaceQuadrature(surface, singular_points=singular, cfg=cfg)
    res = quad.integrate(integrand, scale=1.0)
    integral = float(np.real(res.value))
    return SResult(log_s=-integral, error=res.error, point=Q, n_nodes=res.n_nodes,
                   diagnostics=dict(res.diagnostics))


# ---------------------------------------------------------------------------
# T(X)


@dataclass
class TResult:
    log_t: float
    route: str
    diagnostics: dict = field(default_factory=dict)


def _theta_deriv_terms(surface, points, Q, cfg):
    """All theta factors of the first-derivative formula, with genericity data."""
    g = surface.g
    w = surface.curve.weierstrass_weight
    kappa = surface.riemann_vector
    eps = cfg.theta_eps
    A = np.array([_aj(surface, P) for P in points])
    aq = _aj(surface, Q)
    WA = surface.weierstrass_aj()
    sumP = A.sum(axis=0)
    lt_main = float(_log_theta(surface, sumP - aq + kappa, eps)[0])
    lt_pq = _log_theta(surface, g * A - aq + kappa, eps)
    cross = [g * A[k] - A[l] + kappa for k in range(g) for l in range(g) if k != l]
    lt_cross = _log_theta(surface, np.array(cross), eps) if cross else np.zeros(0)
    if w:
        zw = (g * A[:, None, :] - WA[None, :, :] + kappa).reshape(-1, g)
        lt_w = _log_theta(surface, zw, eps)
    else:
        lt_w = np.zeros(0)
    wk = np.array([sumP - A[k] + kappa for k in range(g)])
    lj = log_j_norm(wk, surface.tau, eps)
    factors = np.concatenate([[lt_main], lt_pq, lt_cross, lt_w, [lj]])
    return dict(main=lt_main, pq=lt_pq, cross=lt_cross, w=lt_w, j=lj, min_log=float(factors.min()))


def log_t_theta_deriv(surface: RiemannSurface, points=None, Q: SurfacePoint | None = None,
                      cfg: QuadratureConfig | None = None, seed: int = 0) -> TResult:
    """``log T`` from theta values and the determinant of first theta derivatives.

    With ``points``/``Q`` omitted, generic points are drawn (uniform in the
    disc of radius 2, random sheet).  Points are redrawn while any factor is
    below ``1e-8``, at most ``MAX_RESAMPLES`` times.
    """
    cfg = cfg or surface.cfg
    g = surface.g
    w = surface.curve.weierstrass_weight
    rng = np.random.default_rng(seed)
    thresh = math.log(GENERICITY_THRESHOLD)
    for attempt in range(MAX_RESAMPLES + 1):
        if points is None or attempt > 0:
            # degenerate supplied points are replaced by random ones
            pts = [random_generic_point(surface, rng, 1e-3) for _ in range(g)]
            q = random_generic_point(surface, rng, 1e-3)
        else:
            pts, q = list(points), Q
        if q is None:
            q = random_generic_point(surface, rng, 1e-3)
        t = _theta_deriv_terms(surface, pts, q, cfg)
        if t["min_log"] > thresh:
            break
    else:
        raise GenericityError(f"no generic configuration after {MAX_RESAMPLES} resamples")
    log_t = ((2 * g - 2) * (t["main"] - float(np.sum(t["pq"])) / g)
             + float(np.sum(t["cross"])) / g - 2.0 * t["j"]
             + (g - 1) * w * float(np.sum(t["w"])) / g ** 4)
    return TResult(log_t, "theta_deriv", {"points": [complex(P.x) for P in pts], "Q": complex(q.x),
                                          "log_j": t["j"], "attempts": attempt + 1})


def even_characteristic_of(z, tau) -> Characteristic:
    """Half-integer characteristic ``[a, b]`` with ``z = b + tau a`` modulo the lattice."""
    z = np.asarray(z, dtype=complex)
    a = (tau.Yinv @ z.imag)
    a2 = np.rint(2 * a)
    if np.abs(2 * a - a2).max() > 1e-6:
        raise NumericDegeneracyError("point is not a half-period")
    b = z - tau.tau @ (a2 / 2)
    a = np.mod(a2, 2) / 2
    b2 = np.rint(2 * b.real)
    if np.abs(2 * b.real - b2).max() > 1e-6 or np.abs(b.imag).max() > 1e-6:
        raise NumericDegeneracyError("point is not a half-period")
    b = np.mod(b2, 2) / 2
    return Characteristic(tuple(a), tuple(b))


def balanced_characteristics(surface: RiemannSurface):
    """The ``C(2g+1, g+1)`` even characteristics attached to splittings of the branch points.

    For a set T of ``g+1`` Weierstrass points, the class of
    ``sum_{W in T} W - (hyperelliptic g^1_2)`` is an even theta
    characteristic with non-vanishing theta constant; T and its complement
    give the same class.
    """
    g = surface.g
    WA = surface.weierstrass_aj()
    n = WA.shape[0]
    kappa = surface.riemann_vector
    chars = []
    for T in itertools.combinations(range(1, n), g):
        T = (0,) + T
        z = WA[list(T)].sum(axis=0) - 2.0 * WA[0] + kappa
        chars.append(even_characteristic_of(z, surface.tau))
    return chars


def log_t_modular(surface: RiemannSurface, cfg: QuadratureConfig | None = None) -> TResult:
    """``log T`` from the discriminant modular form of a hyperelliptic period matrix.

    ``T = (2 pi)^{-2g} ((det Im tau)^{2r} |Delta_g(tau)|)^{-(3g-1)/(8ng)}`` with
    ``r = C(2g+1, g+1)``, ``n = C(2g, g+1)``, ``Delta_g = 2^{-(4g+4)n} phi_g``
    and ``phi_g`` the product of ``theta[eta](0)^8`` over the balanced
    characteristics.
    """
    cfg = cfg or surface.cfg
    g = surface.g
    r = math.comb(2 * g + 1, g + 1)
    n = math.comb(2 * g, g + 1)
    chars = balanced_characteristics(surface)
    if len(set(chars)) != len(chars) or len(chars) != r:
        raise NumericDegeneracyError(f"expected {r} distinct characteristics, found {len(set(chars))}")
    if any(not ch.is_even for ch in chars):
        raise NumericDegeneracyError("a balanced characteristic is odd: basis/ordering inconsistency")
    zero = np.zeros(g, dtype=complex)
    logs = []
    for ch in chars:
        v = theta_with_char(ch, zero, surface.tau, cfg.theta_eps).value
        if abs(v) < 1e-10:
            raise NumericDegeneracyError(f"theta constant {ch} vanishes: basis/ordering inconsistency")
        logs.append(math.log(abs(v)))
    log_delta = -(4 * g + 4) * n * math.log(2.0) + 8.0 * math.fsum(logs)
    log_det_y = math.log(surface.tau.det_y)
    log_t = -2 * g * math.log(2 * math.pi) - (3 * g - 1) / (8.0 * n * g) * (2 * r * log_det_y + log_delta)
    return TResult(log_t, "modular", {"count": len(chars), "r": r, "n": n,
                                      "min_abs_theta": math.exp(min(logs)), "log_abs_delta_g": log_delta})


def log_f_norm(surface: RiemannSurface, P: SurfacePoint, cfg: QuadratureConfig | None = None,
               chart_scale: complex = 1.0):
    """``log ||F_z||(P)`` in the coordinate ``z = chart_scale * x``.

    Returns ``(series value, ray-extrapolated value)``.
    """
    cfg = cfg or surface.cfg
    g = surface.g
    ch = surface.chart(P)
    if ch.kind != "regular":
        raise InvalidInputError("||F_z|| needs a non-Weierstrass point with finite x")
    zP = g * _aj(surface, P) + surface.riemann_vector
    ex = ThetaExpansion(surface.tau, lambda zeta: zP - ch.aj(zeta), ch.radius, cfg.theta_eps)
    if ex.order != g:
        raise ConvergenceError(f"||theta||(gP - Q) vanishes to order {ex.order}, expected {g}")
    lam = math.log(abs(chart_scale))
    series = ex.log_lead - g * lam
    # independent check: extrapolate ||theta||(gP - Q_t) / |t|^g along a ray
    ts = _ray_nodes(ch.radius)
    vals = []
    for t in ts:
        z = t * np.exp(0.7j)
        lt = float(_log_theta(surface, zP - ch.aj(np.array([z]))[0], cfg.theta_eps)[0])
        vals.append(lt - g * math.log(t))
    ray, ray_err = _neville(ts, vals)
    return series, ray - g * lam, ray_err


def log_t_wronskian(surface: RiemannSurface, P: SurfacePoint | None = None, cfg: QuadratureConfig | None = None,
                    chart_scale: complex = 1.0, seed: int = 0) -> TResult:
    """``log T = -(g+1) log ||F_z||(P) + ((g-1)/g^3) sum_W w log ||theta||(gP-W) + 2 log |W_z(nu)(P)|``."""
    cfg = cfg or surface.cfg
    g = surface.g
    if P is None:
        P = default_reference_point(surface, seed)
    lf, lf_ray, lf_ray_err = log_f_norm(surface, P, cfg, chart_scale)
    wsum = weierstrass_log_sum(surface, P, cfg)
    lw = math.log(surface.wronskian_orthonormal(P.x, P.sheet)) - g * (g + 1) / 2 * math.log(abs(chart_scale))
    log_t = -(g + 1) * lf + (g - 1) / g ** 3 * wsum + 2 * lw
    alt = -(g + 1) * lf_ray + (g - 1) / g ** 3 * wsum + 2 * lw
    return TResult(log_t, "wronskian", {"log_F_series": lf, "log_F_ray": lf_ray, "log_F_ray_error": lf_ray_err,
                                        "log_t_ray": alt, "point": complex(P.x)})


# ---------------------------------------------------------------------------
# derived invariants


def compute_delta(log_s: float, log_t: float, g: int) -> float:
    """``delta = 4 (log T - ((g-1)/g^2) log S)``."""
    return 4.0 * (log_t - (g - 1) / g ** 2 * log_s)


def compute_r(log_s: float, delta: float) -> float:
    """``log R = log S - delta / 8``."""
    return log_s - delta / 8.0


def log_dz_arakelov(surface: RiemannSurface, P: SurfacePoint, log_s: float, cfg=None, chart_scale=1.0) -> float:
    """``log ||dz||_Ar(P)``, the adjunction limit of ``|z(Q) - z(P)| / G(P, Q)``."""
    cfg = cfg or surface.cfg
    g = surface.g
    lf = log_f_norm(surface, P, cfg, chart_scale)[0]
    wsum = weierstrass_log_sum(surface, P, cfg)
    return -(log_s / g ** 2 + lf - wsum / g ** 3) / g


def faltings_residual(surface: RiemannSurface, points, Q: SurfacePoint, log_s: float, delta: float,
                      cfg: QuadratureConfig | None = None) -> float:
    """Residual of Faltings' identity relating ``||theta||``, ``G`` and the Arakelov-normed determinant.

    ``log||theta||(sum P_k - Q) + delta/8 - log||det omega_k(P_l)||_Ar
    + sum_{k<l} log G(P_k,P_l) - sum_k log G(P_k,Q)`` for an orthonormal basis.
    """
    cfg = cfg or surface.cfg
    g = surface.g
    A = np.array([_aj(surface, P) for P in points])
    lt = float(_log_theta(surface, A.sum(axis=0) - _aj(surface, Q) + surface.riemann_vector, cfg.theta_eps)[0])
    xs = np.array([complex(P.x) for P in points])
    ys = np.array([complex(P.y) for P in points])
    M = (xs[None, :] ** np.arange(g)[:, None]) / ys[None, :]
    _, logdet = np.linalg.slogdet(M)
    log_norm_det = float(logdet) - 0.5 * surface.periods.log_det_gram() + sum(
        log_dz_arakelov(surface, P, log_s, cfg) for P in points)
    gkl = sum(log_green(surface, points[k], points[l], log_s, cfg) for k in range(g) for l in range(k + 1, g))
    gq = sum(log_green(surface, P, Q, log_s, cfg) for P in points)
    return lt + delta / 8.0 - log_norm_det + gkl - gq


def guardia_residual(surface: RiemannSurface, points, Q: SurfacePoint, log_s: float, delta: float,
                     cfg: QuadratureConfig | None = None, j_scale: float = 1.0) -> float:
    """Residual of Guardia's identity involving ``||J||``.

    ``(g-1) log||theta||(sum P_k - Q) - delta/8 - log||J||(P_1..P_g)
    - (g-1) sum_k log G(P_k,Q) + sum_{k<l} log G(P_k,P_l)``.
    ``j_scale`` multiplies ``||J||`` (sensitivity checks).
    """
    cfg = cfg or surface.cfg
    g = surface.g
    kappa = surface.riemann_vector
    A = np.array([_aj(surface, P) for P in points])
    sumP = A.sum(axis=0)
    lt = float(_log_theta(surface, sumP - _aj(surface, Q) + kappa, cfg.theta_eps)[0])
    wk = np.array([sumP - A[k] + kappa for k in range(g)])
    lj = log_j_norm(wk, surface.tau, cfg.theta_eps) + math.log(j_scale)
    gkl = sum(log_green(surface, points[k], points[l], log_s, cfg) for k in range(g) for l in range(k + 1, g))
    gq = sum(log_green(surface, P, Q, log_s, cfg) for P in points)
    return (g - 1) * lt - delta / 8.0 - lj - (g - 1) * gq + gkl


def generic_configuration(surface: RiemannSurface, rng, log_s: float = 0.0, cfg=None):
    """g points and a further point Q in general position (all factors above 1e-8)."""
    cfg = cfg or surface.cfg
    g = surface.g
    thresh = math.log(GENERICITY_THRESHOLD)
    for _ in range(MAX_RESAMPLES + 1):
        pts = [random_generic_point(surface, rng, 1e-2) for _ in range(g)]
        Q = random_generic_point(surface, rng, 1e-2)
        if any(chart_distance_to_weierstrass(surface, P) < cfg.sing_exclusion_radius for P in pts):
            continue
        t = _theta_deriv_terms(surface, pts, Q, cfg)
        if t["min_log"] > thresh:
            return pts, Q
    raise GenericityError(f"no generic configuration after {MAX_RESAMPLES} resamples")


# ---------------------------------------------------------------------------
# report


@dataclass
class InvariantReport:
    """All invariants of one surface with error estimates and residual checks."""

    genus: int
    log_s: float
    log_s_error: float
    log_t: dict
    delta: float
    log_r: float
    deg_det: float
    green_values: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"genus": self.genus, "log_S": self.log_s, "log_S_error": self.log_s_error,
                "log_T": dict(self.log_t), "delta": self.delta, "log_R": self.log_r,
                "deg_det": self.deg_det, "green": dict(self.green_values),
                "diagnostics": dict(self.diagnostics)}


def compute_invariants(surface: RiemannSurface, cfg: QuadratureConfig | None = None, seed: int = 0,
                       n_residual_sets: int = 2, log_s: float | None = None) -> InvariantReport:
    """Run S, the applicable T routes, delta, R and the residual checks."""
    cfg = cfg or surface.cfg
    g = surface.g
    diagnostics = {}
    if log_s is None:
        sres = compute_s(surface, cfg=cfg, seed=seed)
        log_s, s_err = sres.log_s, sres.error
        diagnostics["S_nodes"] = sres.n_nodes
    else:
        s_err = 0.0
    lt = {"theta_deriv": log_t_theta_deriv(surface, cfg=cfg, seed=seed).log_t,
          "wronskian": log_t_wronskian(surface, cfg=cfg, seed=seed).log_t,
          "modular": log_t_modular(surface, cfg).log_t}
    primary = lt["modular"]
    delta = compute_delta(log_s, primary, g)
    log_r = compute_r(log_s, delta)
    rng = np.random.default_rng(seed + 1)
    fres, gres = [], []
    for _ in range(n_residual_sets):
        pts, Q = generic_configuration(surface, rng, log_s, cfg)
        fres.append(faltings_residual(surface, pts, Q, log_s, delta, cfg))
        gres.append(guardia_residual(surface, pts, Q, log_s, delta, cfg))
    diagnostics["faltings_residuals"] = fres
    diagnostics["guardia_residuals"] = gres
    diagnostics["T_route_spread"] = max(lt.values()) - min(lt.values())
    greens = {}
    W = surface.curve.weierstrass_points()
    if len(W) >= 2 and g >= 1:
        gl = green_limit_at_weierstrass(surface, W[0], W[1], log_s, cfg, richardson=False)
        greens["G(W0,W1)"] = gl.value
    return InvariantReport(genus=g, log_s=log_s, log_s_error=s_err, log_t=lt, delta=delta, log_r=log_r,
                           deg_det=-0.5 * surface.periods.log_det_gram(), green_values=greens,
                           diagnostics=diagnostics)
