"""Integration of functions over a hyperelliptic Riemann surface.

The surface is covered by a smooth partition of unity:

* a disc chart around every finite branch point (``x = e + w^2``), around
  infinity, and around every requested singular point and its image under
  the hyperelliptic involution;
* the remaining part of the x-plane, taken on both sheets and integrated
  by adaptive tensor Gauss-Legendre cells.

Chart pieces use polar coordinates (trapezoid rule in the angle, Gauss
panels in the radius) with panels graded geometrically towards the centre
when the integrand has a logarithmic singularity there.  The bump functions
are built from ``exp(-1/t)`` and are constant near each centre, so
everything the cells see is smooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .numerics import QuadratureConfig, gauss_legendre
from .surface import RiemannSurface, SurfacePoint, _branch_line_integrals, _infinity_line_integrals

CORE_FRACTION = 0.5
BUMP_FRACTION = 0.45


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


@dataclass
class NodeBlock:
    """Quadrature nodes handed to integrands.

    ``aj`` are Abel-Jacobi coordinates (surface base point), ``forms`` the
    values of ``omega_k / dz`` in the local coordinate whose area element the
    weights refer to.
    """

    x: np.ndarray
    y: np.ndarray
    aj: np.ndarray
    forms: np.ndarray
    chart: object = None
    local: np.ndarray | None = None


@dataclass
class QuadResult:
    value: object
    error: float
    n_nodes: int
    diagnostics: dict = field(default_factory=dict)


@dataclass
class _Center:
    point: SurfacePoint
    x: complex
    radius: float  # bump support in |x - x0| (or the outer radius for infinity)
    singular: bool


class SurfaceQuadrature:
    """Integrate functions against ``mu`` (or the plain area form) on X.

    Parameters
    ----------
    surface : RiemannSurface
    singular_points : sequence of SurfacePoint
        Points where the integrand may have a logarithmic singularity.
        Weierstrass points and infinity are always chart centres.
    cfg : QuadratureConfig, optional
    """

    def __init__(self, surface: RiemannSurface, singular_points=(), cfg: QuadratureConfig | None = None,
                 cell_nodes: int = 8, initial_cells: int = 12):
        self.surface = surface
        self.cfg = cfg or surface.cfg
        self.cell_nodes = cell_nodes
        self.initial_cells = initial_cells
        curve = surface.curve
        singular = list(singular_points)
        sing_keys = {self._key(P) for P in singular}

        finite = []
        for W in curve.weierstrass_points():
            if not W.is_infinity:
                finite.append((W, self._key(W) in sing_keys))
        inf_pts = []
        if curve.has_infinity:
            W = curve.weierstrass_points()[-1]
            inf_pts.append((W, self._key(W) in sing_keys))
        else:
            for s in (1, -1):
                P = curve.point(math.inf, s)
                inf_pts.append((P, self._key(P) in sing_keys))
        seen = {self._key(P) for P, _ in finite + inf_pts}
        for P in singular:
            if P.is_weierstrass or P.is_infinity or self._key(P) in seen:
                continue
            for Q in (P, surface.involution(P)):
                if self._key(Q) not in seen:
                    finite.append((Q, self._key(Q) in sing_keys))
                    seen.add(self._key(Q))

        xs = np.array([complex(P.x) for P, _ in finite])
        self.centers = []
        for i, (P, sing) in enumerate(finite):
            d = np.abs(xs - xs[i])
            # the two sheets over the same x share one bump radius
            d = d[d > 1e-14 * max(1.0, abs(xs[i]))]
            r = BUMP_FRACTION * float(d.min())
            self.centers.append(_Center(P, complex(P.x), r, sing))
        reach = max(abs(c.x) + c.radius for c in self.centers)
        emax = float(np.abs(curve.branch_points).max())
        self.R1 = max(1.5 * reach, 2.0 * emax, 1.0)
        self.R2 = 2.0 * self.R1
        self.inf_centers = [_Center(P, complex("inf"), self.R1, sing) for P, sing in inf_pts]

    @staticmethod
    def _key(P: SurfacePoint):
        if P.is_infinity:
            return ("inf", P.sheet)
        if P.is_weierstrass:
            return ("w", P.branch)
        return ("p", round(P.x.real, 13), round(P.x.imag, 13), P.sheet)

    # -- partition of unity -------------------------------------------------

    def _bump(self, c: _Center, dist):
        """Bump of centre c as a function of ``|x - x_c|``."""
        return _smooth_step((c.radius - dist) / ((1.0 - CORE_FRACTION) * c.radius))

    def _infinity_weight(self, absx):
        return _smooth_step((absx - self.R1) / (self.R2 - self.R1))

    def rest_weight(self, x):
        x = np.asarray(x, dtype=complex)
        w = 1.0 - self._infinity_weight(np.abs(x))
        done = set()
        for c in self.centers:
            key = (round(c.x.real, 13), round(c.x.imag, 13))
            if key in done:
                continue
            done.add(key)
            w = w - self._bump(c, np.abs(x - c.x))
        return w

    # -- node generation -------------------------------------------------------

    def _radial_rule(self, s_core, s_max, singular, n):
        edges = []
        if singular:
            levels = 34
            edges = [s_core * 0.35 ** k for k in range(levels, 0, -1)] + [s_core]
            edges = [0.0] + edges
        else:
            edges = [0.0, 0.5 * s_core, s_core]
        trans = np.linspace(s_core, s_max, 5)[1:]
        edges = np.array(list(edges) + list(trans))
        x, w = gauss_legendre(n)
        a, b = edges[:-1, None], edges[1:, None]
        s = (a + 0.5 * (b - a) * (x + 1.0)).ravel()
        ws = (0.5 * (b - a) * w).ravel()
        return s, ws

    def _chart_blocks(self, level: int):
        n = self.cfg.nodes_per_panel + 6 * level
        n_theta = 48 + 24 * level
        theta = 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
        blocks = []
        for c in self.centers + self.inf_centers:
            ch = self.surface.chart(c.point)
            if ch.kind == "branch":
                s_core, s_max = math.sqrt(CORE_FRACTION * c.radius), math.sqrt(c.radius)
            elif ch.kind == "regular":
                s_core, s_max = CORE_FRACTION * c.radius, c.radius
            elif ch.kind == "infinity":
                s_core, s_max = self.R2 ** -0.5, self.R1 ** -0.5
            else:
                s_core, s_max = 1.0 / self.R2, 1.0 / self.R1
            s, ws = self._radial_rule(s_core, s_max, c.singular, n)
            z = (s[:, None] * np.exp(1j * theta)[None, :]).ravel()
            wz = (ws * s)[:, None] * np.full(n_theta, 2.0 * np.pi / n_theta)[None, :]
            wz = wz.ravel()
            x = ch.x_of(z)
            if ch.kind in ("branch", "regular"):
                bump = self._bump(c, np.abs(x - c.x))
            else:
                bump = self._infinity_weight(np.abs(x))
            keep = bump > 0
            z, wz, x, bump = z[keep], wz[keep], x[keep], bump[keep]
            blocks.append((ch, z, wz * bump))
        return blocks

    # -- evaluation ----------------------------------------------------------------

    def _weights(self, forms, w, measure):
        if measure == "area":
            return w
        h = self.surface.periods.mu_coefficients
        dens = np.einsum("mk,kl,ml->m", forms, h, forms.conj()).real / self.surface.g
        return w * dens

    def _apply(self, func, block: NodeBlock, w, measure):
        vals = np.asarray(func(block))
        wt = self._weights(block.forms, w, measure)
        if vals.ndim == 1:
            return np.tensordot(wt, vals, axes=(0, 0))
        return np.einsum("m,m...->...", wt, vals)

    def _charts_integral(self, func, level, measure):
        total = 0.0
        count = 0
        for ch, z, w in self._chart_blocks(level):
            block = NodeBlock(x=ch.x_of(z), y=ch.y_of(z), aj=ch.aj(z), forms=ch.forms(z),
                              chart=ch, local=z)
            total = total + self._apply(func, block, w, measure)
            count += z.size
        return total, count

    def _rest_nodes_aj(self, x):
        """AJ on both sheets over x (sheet +1 first)."""
        S = self.surface
        curve = S.curve
        inv = S.periods.Omega1_inv
        y = curve.y_principal(x)
        e = curve.branch_points
        ajp = np.empty((x.size, S.g), dtype=complex)
        ajm = np.empty_like(ajp)
        far = np.zeros(x.size, dtype=bool)
        if curve.has_infinity:
            far = np.abs(x) > S._infinity_radius()
            if far.any():
                I = _infinity_line_integrals(curve, x[far], y[far], S.aj_tol) @ inv.T
                ajp[far] = S._raw_infinity_aj + I
                ajm[far] = S._raw_infinity_aj - I
        near = np.argmin(np.abs(x[:, None] - e[None, :]), axis=1)
        for a in np.unique(near[~far]):
            sel = (~far) & (near == a)
            I = _branch_line_integrals(curve, int(a), x[sel], y[sel], S.aj_tol) @ inv.T
            ajp[sel] = S._raw_branch_aj[a] + I
            ajm[sel] = S._raw_branch_aj[a] - I
        return y, ajp - S._origin, ajm - S._origin

    def _cell_eval(self, func, cells, measure):
        """Integral over each cell (both sheets); cells is (k, 4) of [x0, x1, y0, y1]."""
        n = self.cell_nodes
        gx, gw = gauss_legendre(n)
        u = 0.5 * (gx + 1.0)
        x0, x1, y0, y1 = cells.T
        X = x0[:, None, None] + (x1 - x0)[:, None, None] * u[None, :, None]
        Yc = y0[:, None, None] + (y1 - y0)[:, None, None] * u[None, None, :]
        pts = (X + 1j * Yc).reshape(-1)
        W = (0.25 * (x1 - x0) * (y1 - y0))[:, None, None] * gw[None, :, None] * gw[None, None, :]
        W = W.reshape(-1) * self.rest_weight(pts)
        live = W != 0
        out_shape = None
        per_node = None
        if live.any():
            xs = pts[live]
            y, ajp, ajm = self._rest_nodes_aj(xs)
            g = self.surface.g
            pw = xs[:, None] ** np.arange(g)
            acc = None
            for yy, aj in ((y, ajp), (-y, ajm)):
                forms = pw / yy[:, None]
                block = NodeBlock(x=xs, y=yy, aj=aj, forms=forms)
                vals = np.asarray(func(block))
                wt = self._weights(forms, W[live], measure)
                contrib = vals * (wt if vals.ndim == 1 else wt[:, None])
                acc = contrib if acc is None else acc + contrib
            out_shape = acc.shape[1:]
            per_node = np.zeros((pts.size,) + out_shape, dtype=acc.dtype)
            per_node[live] = acc
        if per_node is None:
            return np.zeros((cells.shape[0], self._n_out)), int(live.sum())
        vals = per_node.reshape((cells.shape[0], n * n) + out_shape).sum(axis=1)
        return vals.reshape(cells.shape[0], -1), int(live.sum())

    def _cell_active(self, cells):
        """Cells that intersect the support of the rest weight."""
        x0, x1, y0, y1 = cells.T
        far = np.maximum.reduce([np.hypot(x0, y0), np.hypot(x0, y1), np.hypot(x1, y0), np.hypot(x1, y1)])
        nearest = np.hypot(np.clip(0.0, x0, x1), np.clip(0.0, y0, y1))
        active = nearest < self.R2
        for c in self.centers:
            cx, cy = c.x.real, c.x.imag
            fd = np.maximum.reduce([np.hypot(x0 - cx, y0 - cy), np.hypot(x0 - cx, y1 - cy),
                                    np.hypot(x1 - cx, y0 - cy), np.hypot(x1 - cx, y1 - cy)])
            active &= ~(fd <= CORE_FRACTION * c.radius)
        del far
        return active

    def _prerefine(self, cells, beta: float = 0.5):
        """Split cells crossing a bump transition until they are small against that bump."""
        for _ in range(40):
            x0, x1, y0, y1 = cells.T
            size = np.maximum(x1 - x0, y1 - y0)
            split = np.zeros(cells.shape[0], dtype=bool)
            for c in self.centers:
                cx, cy = c.x.real, c.x.imag
                near = np.hypot(np.clip(cx, x0, x1) - cx, np.clip(cy, y0, y1) - cy)
                far = np.maximum(np.maximum(np.abs(x0 - cx), np.abs(x1 - cx)) ** 2
                                 + np.maximum(np.abs(y0 - cy), np.abs(y1 - cy)) ** 2, 0.0) ** 0.5
                crosses = (near <= c.radius) & (far >= CORE_FRACTION * c.radius)
                split |= crosses & (size > beta * c.radius)
            if not split.any():
                break
            cells = np.concatenate([cells[~split], self._split(cells[split])])
            cells = cells[self._cell_active(cells)]
        return cells

    @staticmethod
    def _split(cells):
        x0, x1, y0, y1 = cells.T
        xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        kids = np.stack([
            np.stack([x0, xm, y0, ym], 1), np.stack([xm, x1, y0, ym], 1),
            np.stack([x0, xm, ym, y1], 1), np.stack([xm, x1, ym, y1], 1)], axis=1)
        return kids.reshape(-1, 4)

    def _rest_integral(self, func, measure, tol_abs):
        B = self.R2
        k = self.initial_cells
        edges = np.linspace(-B, B, k + 1)
        cells = np.array([[edges[i], edges[i + 1], edges[j], edges[j + 1]]
                          for i in range(k) for j in range(k)])
        cells = self._prerefine(cells[self._cell_active(cells)])
        parent, count = self._cell_eval(func, cells, measure)
        accepted = 0.0
        err_acc = 0.0
        max_depth = int(self.cfg.max_depth)
        history = []
        worst = None
        for depth in range(max_depth + 1):
            kids = self._split(cells)
            kid_vals, c = self._cell_eval(func, kids, measure)
            count += c
            kid_vals = kid_vals.reshape(cells.shape[0], 4, -1)
            fine = kid_vals.sum(axis=1)
            err = np.abs(fine - parent).max(axis=1)
            history.append(float(err.sum()))
            current = accepted + fine.sum(axis=0)
            budget = tol_abs
            remaining = budget - err_acc
            if err.sum() <= remaining or depth == max_depth:
                if depth == max_depth and err.sum() > remaining:
                    order = np.argsort(err)[::-1][:5]
                    worst = [(cells[i].tolist(), float(err[i])) for i in order]
                    raise ConvergenceError(
                        f"surface quadrature did not reach tolerance within max_depth={max_depth} "
                        f"(remaining error {err.sum():.3g} > {remaining:.3g})",
                        diagnostics={"worst_cells": worst, "history": history})
                accepted = current
                err_acc += float(err.sum())
                break
            # accept cells whose error is small relative to a per-cell share
            share = max(remaining, 0.0) / max(4 * cells.shape[0], 1)
            ok = err <= share
            accepted = accepted + fine[ok].sum(axis=0)
            err_acc += float(err[ok].sum())
            keep = ~ok
            cells = kids.reshape(-1, 4, 4)[keep].reshape(-1, 4)
            parent = kid_vals[keep].reshape(-1, kid_vals.shape[-1])
        return accepted, err_acc, count, history

    def integrate(self, func, measure: str = "mu", scale: float | None = None) -> QuadResult:
        """Integrate ``func`` over X against ``mu`` or the area form.

        ``func(block: NodeBlock)`` returns shape (m,) or (m, K).  For
        ``measure='area'`` the integrand should include the forms it needs,
        e.g. ``forms[:, k] * conj(forms[:, l])`` integrates to
        ``(i/2) int omega_k ^ conj(omega_l)``.

        Returns the value, an error estimate (chart refinement difference plus
        the adaptive cell error) and node counts.
        """
        if measure not in ("mu", "area"):
            raise ValueError("measure must be 'mu' or 'area'")
        c0, n0 = self._charts_integral(func, 0, measure)
        c1, n1 = self._charts_integral(func, 1, measure)
        self._n_out = max(1, np.asarray(c1).size)
        chart_err = float(np.max(np.abs(np.asarray(c1) - np.asarray(c0))))
        ref = scale if scale is not None else max(1.0, float(np.max(np.abs(c1))))
        tol_abs = self.cfg.quad_rel_tol * ref
        rest, rest_err, n_rest, history = self._rest_integral(func, measure, tol_abs)
        rest = np.asarray(rest)
        c1 = np.asarray(c1)
        if c1.ndim == 0 or c1.size == 1:
            value = complex(np.ravel(c1)[0] + np.ravel(rest)[0])
            if value.imag == 0 or abs(value.imag) < 1e-300:
                value = value.real
        else:
            value = c1.reshape(-1) + rest.reshape(-1)
        return QuadResult(value=value, error=chart_err + rest_err, n_nodes=n1 + n_rest,
                          diagnostics={"chart_error": chart_err, "rest_error": rest_err,
                                       "rest_history": history, "chart_nodes": n1,
                                       "rest_nodes": n_rest, "R1": self.R1})
