"""Hyperelliptic curves ``y^2 = f(x)``: periods, Abel-Jacobi map and local charts.

Conventions
-----------
* ``f`` is given leading coefficient first and has degree ``2g+1`` or
  ``2g+2``.  The holomorphic differentials are ``omega_k = x^(k-1) dx / y``
  for ``k = 1..g``.
* ``sheet=+1`` at a finite point means ``y = sqrt(lc) * prod_j sqrt(x - e_j)``
  with principal square roots.  For real ``f`` with positive leading
  coefficient this is the branch with ``y > 0`` on the ray to the right of
  all branch points.
* The homology basis comes from a chain ``e_1 -> e_2 -> ... -> e_{2g+1}`` of
  straight segments through the finite branch points in a chosen ordering.
  The loop ``gamma_j`` runs along segment ``j`` on one sheet and back on the
  other, so its period is twice the segment integral.  After orienting the
  loops so that consecutive ones meet with intersection number +1, we take
  ``A_i = gamma_{2i-1}`` and ``B_i = gamma_{2i} + gamma_{2i+2} + ... + gamma_{2g}``.
* Abel-Jacobi coordinates are normalised by ``Omega1^{-1}`` and based at
  ``infinity`` for odd degree and at the first chain point otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import (
    InvalidInputError,
    NumericDegeneracyError,
    PathRefinementError,
    SingularChartError,
    SingularCurveError,
)
from .numerics import (
    QuadratureConfig,
    adaptive_path_quadrature,
    exact_discriminant,
    hermitian_inverse_det,
    poly_roots,
    poly_shift,
    series_eval,
    series_inv_sqrt,
    to_fraction,
)
from .theta import SiegelPoint, theta_normed

SERIES_ORDER = 160
PATH_CLEARANCE = 1e-8


# ---------------------------------------------------------------------------
# curve


@dataclass(frozen=True, eq=False)
class CurveSpec:
    """A smooth hyperelliptic curve ``y^2 = f(x)``.

    Build instances with :func:`build_curve`.

    Attributes
    ----------
    f_coeffs : tuple
        Coefficients as given (``Fraction`` when rational), leading first.
    f : ndarray of complex
        The same coefficients in floating point.
    genus : int
    branch_points : ndarray of complex
        Finite roots of ``f`` sorted by (real, imag).
    has_infinity : bool
        True for odd degree, where ``infinity`` is also a branch point.
    discriminant : Fraction or complex
    """

    f_coeffs: tuple
    f: np.ndarray
    genus: int
    branch_points: np.ndarray
    has_infinity: bool
    discriminant: object

    @property
    def degree(self) -> int:
        return self.f.size - 1

    @property
    def lc(self) -> complex:
        return complex(self.f[0])

    @property
    def sqrt_lc(self) -> complex:
        return complex(np.sqrt(self.lc + 0j))

    @property
    def n_branch_points(self) -> int:
        return self.branch_points.size + (1 if self.has_infinity else 0)

    @property
    def weierstrass_weight(self) -> int:
        """Weight ``g(g-1)/2`` of every branch point in the Weierstrass divisor."""
        return self.genus * (self.genus - 1) // 2

    @property
    def total_weierstrass_weight(self) -> int:
        return self.n_branch_points * self.weierstrass_weight

    @property
    def is_rational(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.f_coeffs)

    def f_eval(self, x):
        return np.polyval(self.f, np.asarray(x, dtype=complex))

    def y_principal(self, x):
        """``sqrt(lc) * prod_j sqrt(x - e_j)`` with principal roots."""
        x = np.asarray(x, dtype=complex)
        out = np.full(x.shape, self.sqrt_lc, dtype=complex)
        for e in self.branch_points:
            out = out * np.sqrt(x - e)
        return out

    def branch_index(self, x, tol: float = 1e-12):
        """Index of the finite branch point equal to ``x``, or None."""
        if not np.isfinite(x):
            return None
        d = np.abs(self.branch_points - x)
        k = int(np.argmin(d))
        return k if d[k] <= tol * max(1.0, abs(x)) else None

    def point(self, x, sheet: int = 1) -> "SurfacePoint":
        """The point over ``x`` on the given sheet (``x`` may be ``inf``)."""
        if sheet not in (1, -1):
            raise InvalidInputError(f"sheet must be +1 or -1, got {sheet}")
        if x is None or (isinstance(x, float) and math.isinf(x)) or (
                isinstance(x, complex) and not np.isfinite(x)):
            if self.has_infinity:
                return SurfacePoint(x=complex("inf"), y=complex("inf"), sheet=0, branch=-1)
            return SurfacePoint(x=complex("inf"), y=complex("inf"), sheet=sheet, branch=None)
        x = complex(x)
        k = self.branch_index(x)
        if k is not None:
            return SurfacePoint(x=complex(self.branch_points[k]), y=0j, sheet=0, branch=k)
        y = sheet * complex(self.y_principal(x))
        return SurfacePoint(x=x, y=y, sheet=sheet, branch=None)

    def point_xy(self, x, y) -> "SurfacePoint":
        """The point ``(x, y)``; ``y`` must satisfy ``y^2 = f(x)``."""
        x, y = complex(x), complex(y)
        fx = complex(self.f_eval(x))
        if abs(y * y - fx) > 1e-10 * max(1.0, abs(fx)):
            raise InvalidInputError(f"({x}, {y}) is not on the curve")
        k = self.branch_index(x)
        if k is not None:
            return SurfacePoint(x=complex(self.branch_points[k]), y=0j, sheet=0, branch=k)
        yp = complex(self.y_principal(x))
        sheet = 1 if abs(y - yp) <= abs(y + yp) else -1
        return SurfacePoint(x=x, y=sheet * yp, sheet=sheet, branch=None)

    def weierstrass_points(self) -> list:
        """All ``2g+2`` branch points (finite ones first, then infinity if odd)."""
        pts = [SurfacePoint(x=complex(e), y=0j, sheet=0, branch=k)
               for k, e in enumerate(self.branch_points)]
        if self.has_infinity:
            pts.append(SurfacePoint(x=complex("inf"), y=complex("inf"), sheet=0, branch=-1))
        return pts


@dataclass(frozen=True)
class SurfacePoint:
    """A point of the curve.

    ``branch`` is the index of the finite branch point, ``-1`` for the branch
    point at infinity and ``None`` for ordinary points.  ``sheet`` is 0 at
    branch points and +1/-1 elsewhere.
    """

    x: complex
    y: complex
    sheet: int
    branch: int | None = None

    @property
    def is_infinity(self) -> bool:
        return not np.isfinite(self.x)

    @property
    def is_weierstrass(self) -> bool:
        return self.branch is not None


def build_curve(f_coeffs) -> CurveSpec:
    """Validate coefficients and locate the branch points.

    Raises
    ------
    InvalidInputError
        Degree below 3 or a vanishing leading coefficient.
    SingularCurveError
        ``f`` has a repeated root.
    """
    raw = list(f_coeffs)
    if not raw:
        raise InvalidInputError("empty coefficient list")
    parsed = []
    rational = True
    for c in raw:
        if isinstance(c, (complex, np.complexfloating)) and complex(c).imag != 0:
            rational = False
            parsed.append(complex(c))
            continue
        try:
            parsed.append(to_fraction(c if not isinstance(c, (np.floating,)) else float(c)))
        except InvalidInputError:
            rational = False
            parsed.append(complex(c))
    if not rational:
        parsed = [complex(c) for c in parsed]
    if parsed[0] == 0:
        raise InvalidInputError("leading coefficient of f is zero")
    deg = len(parsed) - 1
    if deg < 3:
        raise InvalidInputError(f"deg f must be >= 3, got {deg}")
    f = np.array([complex(c) for c in parsed], dtype=complex)

    if rational:
        disc = exact_discriminant(parsed)
        if disc == 0:
            raise SingularCurveError("f has a repeated root (discriminant is zero)")
    else:
        disc = None
    roots = poly_roots(f)
    scale = max(1.0, float(np.abs(roots).max()))
    sep = min(abs(a - b) for i, a in enumerate(roots) for b in roots[i + 1:])
    if sep < 1e-7 * scale:
        raise SingularCurveError(f"f has (numerically) repeated roots, separation {sep:.3g}")
    if disc is None:
        disc = complex(f[0] ** (2 * deg - 2) * np.prod(
            [(a - b) ** 2 for i, a in enumerate(roots) for b in roots[i + 1:]]))
    roots.setflags(write=False)
    f.setflags(write=False)
    return CurveSpec(f_coeffs=tuple(parsed), f=f, genus=(deg - 1) // 2, branch_points=roots,
                     has_infinity=(deg % 2 == 1), discriminant=disc)


# ---------------------------------------------------------------------------
# homology


def _seg_distance(p, a, b) -> float:
    ab = b - a
    t = ((p - a) * np.conj(ab)).real / max(abs(ab) ** 2, 1e-300)
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * ab))


def _cross(a, b) -> float:
    return (np.conj(a) * b).imag


def _segments_intersect(p1, p2, q1, q2, tol) -> bool:
    d1 = _cross(p2 - p1, q1 - p1)
    d2 = _cross(p2 - p1, q2 - p1)
    d3 = _cross(q2 - q1, p1 - q1)
    d4 = _cross(q2 - q1, p2 - q1)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and \
            ((d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)):
        return True
    # touching or collinear overlap
    return min(_seg_distance(q1, p1, p2), _seg_distance(q2, p1, p2),
               _seg_distance(p1, q1, q2), _seg_distance(p2, q1, q2)) <= tol


def _chain_problem(points, others, clearance):
    """Return a description of why a chain is unusable, or None."""
    n = len(points) - 1
    for j in range(n):
        a, b = points[j], points[j + 1]
        for p in others:
            if abs(p - a) > 0 and abs(p - b) > 0 and _seg_distance(p, a, b) <= clearance:
                return f"segment {j} passes within {clearance:g} of branch point {p}"
    for i in range(n):
        for j in range(i + 2, n):
            if _segments_intersect(points[i], points[i + 1], points[j], points[j + 1], clearance):
                return f"segments {i} and {j} intersect"
    return None


@dataclass(frozen=True)
class HomologyBasis:
    """Chain of branch points defining a canonical symplectic basis.

    Attributes
    ----------
    ordering : tuple of int
        Permutation of the finite branch point indices.
    chain : ndarray
        The ``2g+1`` chain points ``e_1..e_{2g+1}``.
    mid_y : ndarray
        ``y`` at each segment midpoint, fixing the sheet that ``gamma_j``
        uses on its way out.
    crossings : tuple of int
        Intersection numbers ``gamma_j . gamma_{j+1}`` of the raw loops.
    signs : tuple of int
        Orientation signs ``eps_j`` applied to the raw loops.
    """

    ordering: tuple
    chain: np.ndarray
    mid_y: np.ndarray
    crossings: tuple
    signs: tuple

    @property
    def genus(self) -> int:
        return (self.chain.size - 1) // 2

    def cycle_segments(self, j: int):
        """Oriented x-plane segments of loop ``j`` (0-based) with their sheet labels.

        Each entry is ``(start, end, y_at_midpoint)``.  The loop runs along the
        segment with ``y`` continued from the given midpoint value and returns
        with the opposite sign.
        """
        a, b = self.chain[j], self.chain[j + 1]
        s = self.signs[j]
        y = self.mid_y[j]
        return [(a, b, y), (b, a, -y)] if s > 0 else [(a, b, -y), (b, a, y)]

    def coefficient_matrix(self) -> np.ndarray:
        """Rows express ``A_1..A_g, B_1..B_g`` in the raw loops ``gamma_1..gamma_{2g}``."""
        g = self.genus
        C = np.zeros((2 * g, 2 * g), dtype=int)
        for i in range(g):
            C[i, 2 * i] = self.signs[2 * i]
            for j in range(i, g):
                C[g + i, 2 * j + 1] = self.signs[2 * j + 1]
        return C

    def raw_intersections(self) -> np.ndarray:
        n = self.chain.size - 1
        K = np.zeros((n, n), dtype=int)
        for j, k in enumerate(self.crossings):
            K[j, j + 1] = k
            K[j + 1, j] = -k
        return K

    def intersection_matrix(self) -> np.ndarray:
        """Intersection pairing of ``(A, B)``; equals the standard ``J_{2g}``."""
        C = self.coefficient_matrix()
        return C @ self.raw_intersections() @ C.T


def standard_symplectic(g: int) -> np.ndarray:
    J = np.zeros((2 * g, 2 * g), dtype=int)
    J[:g, g:] = np.eye(g, dtype=int)
    J[g:, :g] = -np.eye(g, dtype=int)
    return J


def _continuation_factor(curve: CurveSpec, anchor: int, x_target, x_eval):
    """``y / sqrt(x - e_anchor)`` continued along the segment towards ``x_target``.

    Uses ``sqrt(lc) prod_k sqrt(d_k) sqrt((x - e_k) / d_k)`` with
    ``d_k = x_target - e_k``; continuous along ``e_anchor -> x_target`` as
    long as no other branch point lies on that segment.
    """
    e = curve.branch_points
    others = np.delete(e, anchor)
    d = np.asarray(x_target, dtype=complex)[..., None] - others
    xe = np.asarray(x_eval, dtype=complex)
    out = curve.sqrt_lc * np.prod(np.sqrt(d) * np.sqrt((xe[..., None] - others) / d), axis=-1)
    return out


def _default_orderings(curve: CurveSpec):
    e = curve.branch_points
    n = e.size
    yield tuple(range(n))
    c = e.mean()
    yield tuple(int(i) for i in np.lexsort((np.abs(e - c), np.angle(e - c))))
    # greedy nearest-neighbour chains from each start
    for start in range(n):
        left = set(range(n)) - {start}
        seq = [start]
        while left:
            nxt = min(left, key=lambda k: (abs(e[k] - e[seq[-1]]), k))
            seq.append(nxt)
            left.remove(nxt)
        yield tuple(seq)


def homology_basis(curve: CurveSpec, ordering=None) -> HomologyBasis:
    """Canonical symplectic basis attached to an ordering of the branch points.

    Parameters
    ----------
    ordering : sequence of int, optional
        Permutation of ``range(len(curve.branch_points))``.  The first
        ``2g+1`` entries form the chain.  Default: sorted by (real, imag),
        falling back to angular or nearest-neighbour orderings when the
        straight-segment chain is not embedded.

    Raises
    ------
    InvalidInputError
        ``ordering`` is not a permutation.
    PathRefinementError
        A chain segment passes within ``1e-8`` of another branch point or
        meets a non-adjacent segment.
    """
    e = curve.branch_points
    g = curve.genus
    n = e.size
    if ordering is None:
        candidates = _default_orderings(curve)
        explicit = False
    else:
        ordering = tuple(int(k) for k in ordering)
        if sorted(ordering) != list(range(n)):
            raise InvalidInputError(f"ordering must be a permutation of 0..{n - 1}, got {ordering}")
        candidates = [ordering]
        explicit = True
    scale = max(1.0, float(np.abs(e).max()))
    problem = None
    for order in candidates:
        chain = e[list(order[: 2 * g + 1])]
        problem = _chain_problem(chain, e, PATH_CLEARANCE * scale)
        if problem is None:
            ordering = order
            break
    else:
        raise PathRefinementError(("ordering unusable: " if explicit else "no usable default chain: ")
                                  + str(problem))

    mids = 0.5 * (chain[:-1] + chain[1:])
    mid_y = curve.y_principal(mids)
    idx = [int(k) for k in ordering]

    crossings = []
    for j in range(2 * g - 1):
        b_idx = idx[j + 1]
        b = e[b_idx]
        s1 = _orient(curve, b_idx, mids[j], mid_y[j])
        s2 = _orient(curve, b_idx, mids[j + 1], mid_y[j + 1])
        t1 = -s1 * np.sqrt(mids[j] - b) * _continuation_factor(curve, b_idx, mids[j], b)
        t2 = s2 * np.sqrt(mids[j + 1] - b) * _continuation_factor(curve, b_idx, mids[j + 1], b)
        k = float((np.conj(t1) * t2).imag)
        if abs(k) <= 1e-12 * abs(t1) * abs(t2):
            raise PathRefinementError(f"loops {j} and {j + 1} meet tangentially; cannot orient")
        crossings.append(1 if k > 0 else -1)
    signs = [1]
    for k in crossings:
        signs.append(signs[-1] * k)
    chain = chain.copy()
    chain.setflags(write=False)
    mid_y.setflags(write=False)
    basis = HomologyBasis(ordering=tuple(idx), chain=chain, mid_y=mid_y,
                          crossings=tuple(crossings), signs=tuple(signs))
    if not np.array_equal(basis.intersection_matrix(), standard_symplectic(g)):
        raise NumericDegeneracyError("constructed basis is not symplectic")
    return basis


def _orient(curve, anchor, x_target, y_target) -> int:
    """Sign sigma with ``sigma sqrt(x - e) * factor(x) = y`` at the target."""
    e = curve.branch_points[anchor]
    y0 = np.sqrt(x_target - e) * _continuation_factor(curve, anchor, x_target, x_target)
    return np.where(np.abs(y0 - y_target) <= np.abs(y0 + y_target), 1, -1)


# ---------------------------------------------------------------------------
# periods


@dataclass(frozen=True, eq=False)
class PeriodData:
    """Period matrices and derived Hermitian data.

    ``gram[k, l] = (i/2) int omega_k ^ conj(omega_l)`` is computed from the
    bilinear relations ``(i/2)(Omega1 Omega2^H - Omega2 Omega1^H)``; the
    invariant check compares it with ``Omega1 Im(tau) Omega1^H``.
    """

    Omega1: np.ndarray
    Omega2: np.ndarray
    tau: SiegelPoint
    gram: np.ndarray
    ordering: tuple
    segment_periods: np.ndarray | None = None

    @classmethod
    def from_periods(cls, Omega1, Omega2, ordering=(), segment_periods=None) -> "PeriodData":
        Omega1 = np.asarray(Omega1, dtype=complex)
        Omega2 = np.asarray(Omega2, dtype=complex)
        g = Omega1.shape[0]
        if Omega1.shape != (g, g) or Omega2.shape != (g, g):
            raise InvalidInputError("period matrices must be square and of equal size")
        inv, _ = hermitian_inverse_det(Omega1)
        tau = inv @ Omega2
        scale = max(1.0, np.abs(tau).max())
        asym = float(np.abs(tau - tau.T).max())
        if asym > 1e-8 * scale:
            raise NumericDegeneracyError(f"Riemann relations fail: |tau - tau^T| = {asym:.3g}")
        sp = SiegelPoint(0.5 * (tau + tau.T))
        gram = 0.5j * (Omega1 @ Omega2.conj().T - Omega2 @ Omega1.conj().T)
        herm = float(np.abs(gram - gram.conj().T).max())
        if herm > 1e-8 * np.abs(gram).max():
            raise NumericDegeneracyError(f"gram matrix is not Hermitian (residual {herm:.3g})")
        gram = 0.5 * (gram + gram.conj().T)
        if np.linalg.eigvalsh(gram)[0] <= 0:
            raise NumericDegeneracyError("gram matrix is not positive definite")
        bil = Omega1 @ sp.Y @ Omega1.conj().T
        rel = float(np.abs(gram - bil).max() / np.abs(gram).max())
        if rel > 1e-8:
            raise NumericDegeneracyError(f"bilinear relation residual {rel:.3g} exceeds 1e-8")
        for arr in (Omega1, Omega2, gram):
            arr.setflags(write=False)
        return cls(Omega1=Omega1, Omega2=Omega2, tau=sp, gram=gram,
                   ordering=tuple(int(k) for k in ordering), segment_periods=segment_periods)

    @property
    def genus(self) -> int:
        return self.Omega1.shape[0]

    @cached_property
    def Omega1_inv(self) -> np.ndarray:
        return hermitian_inverse_det(self.Omega1)[0]

    @cached_property
    def mu_coefficients(self) -> np.ndarray:
        """``h = conj(gram)^{-1}``, so that ``mu = (i/2g) sum h_kl omega_k ^ conj(omega_l)``."""
        return hermitian_inverse_det(self.gram.conj(), hermitian=True)[0]

    @property
    def det_gram(self) -> float:
        return float(np.linalg.det(self.gram).real)

    @property
    def symmetry_residual(self) -> float:
        tau = self.Omega1_inv @ self.Omega2
        return float(np.abs(tau - tau.T).max())

    @property
    def bilinear_residual(self) -> float:
        bil = self.Omega1 @ self.tau.Y @ self.Omega1.conj().T
        return float(np.abs(self.gram - bil).max() / np.abs(self.gram).max())

    def log_det_gram(self) -> float:
        """``log det(gram) = log(|det Omega1|^2 det Im tau)``."""
        _, ld = np.linalg.slogdet(self.gram)
        return float(ld)

    # -- serialisation ----------------------------------------------------

    def to_json(self) -> str:
        def enc(M):
            return [[[repr(float(v.real)), repr(float(v.imag))] for v in row] for row in np.asarray(M)]

        doc = {"genus": self.genus, "ordering": list(self.ordering),
               "Omega1": enc(self.Omega1), "Omega2": enc(self.Omega2)}
        if self.segment_periods is not None:
            doc["segment_periods"] = enc(self.segment_periods)
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PeriodData":
        try:
            doc = json.loads(text)

            def dec(rows):
                return np.array([[complex(float(re), float(im)) for re, im in row] for row in rows])

            O1, O2 = dec(doc["Omega1"]), dec(doc["Omega2"])
            seg = dec(doc["segment_periods"]) if "segment_periods" in doc else None
            ordering = tuple(doc.get("ordering", ()))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed period data: {exc}") from exc
        return cls.from_periods(O1, O2, ordering=ordering, segment_periods=seg)


def _branch_line_integrals(curve: CurveSpec, anchor: int, xq, yq, tol: float, max_depth: int = 40):
    """``int_{e_anchor}^{(xq, yq)} omega_k`` along straight segments, shape (m, g).

    The substitution ``x = e + (xq - e) s^2`` removes the square-root
    singularity at the branch point.
    """
    g = curve.genus
    e0 = curve.branch_points[anchor]
    others = np.delete(curve.branch_points, anchor)
    xq = np.atleast_1d(np.asarray(xq, dtype=complex))
    yq = np.atleast_1d(np.asarray(yq, dtype=complex))
    if xq.size == 0:
        return np.zeros((0, g), dtype=complex)
    r = np.sqrt(xq - e0)
    d = xq[:, None] - others[None, :]
    sqd = np.sqrt(d)
    yend = r * curve.sqrt_lc * np.prod(sqd, axis=1)
    sig = np.where(np.abs(yend - yq) <= np.abs(yend + yq), 1.0, -1.0)
    pref = 2.0 * sig * r
    dx = xq - e0
    powers = np.arange(g)

    def integrand(pid, s):
        x = e0 + dx[pid][:, None] * s * s
        G = curve.sqrt_lc * np.prod(
            sqd[pid][:, None, :] * np.sqrt((x[..., None] - others) / d[pid][:, None, :]), axis=-1)
        base = pref[pid][:, None] / G
        return base[..., None] * x[..., None] ** powers

    vals, ok = adaptive_path_quadrature(integrand, xq.size, g, tol, max_depth=max_depth)
    if not ok:
        raise PathRefinementError("line integral from a branch point did not converge")
    return vals


def _infinity_line_integrals(curve: CurveSpec, xq, yq, tol: float, max_depth: int = 40):
    """``int_infinity^{(xq, yq)} omega_k`` in the chart ``x = w^-2`` (odd degree)."""
    g = curve.genus
    e = curve.branch_points
    xq = np.atleast_1d(np.asarray(xq, dtype=complex))
    yq = np.atleast_1d(np.asarray(yq, dtype=complex))
    w = 1.0 / np.sqrt(xq)

    def y_of(wv):
        return curve.sqrt_lc * wv ** (-(2 * g + 1)) * np.prod(np.sqrt(1.0 - e * (wv[..., None] ** 2)), axis=-1)

    yw = y_of(w)
    w = np.where(np.abs(yw - yq) <= np.abs(yw + yq), w, -w)
    powers = 2 * (g - 1 - np.arange(g))

    def integrand(pid, s):
        wv = w[pid][:, None] * s
        den = curve.sqrt_lc * np.prod(np.sqrt(1.0 - e * (wv[..., None] ** 2)), axis=-1)
        base = (-2.0 * w[pid][:, None]) / den
        return base[..., None] * wv[..., None] ** powers

    vals, ok = adaptive_path_quadrature(integrand, xq.size, g, tol, max_depth=max_depth)
    if not ok:
        raise PathRefinementError("line integral from infinity did not converge")
    return vals


def period_matrix(curve: CurveSpec, basis: HomologyBasis | None = None,
                  cfg: QuadratureConfig | None = None) -> PeriodData:
    """A- and B-periods of ``x^(k-1) dx / y`` over the chain basis."""
    basis = basis or homology_basis(curve)
    g = curve.genus
    tol = 1e-14
    idx = basis.ordering
    mids = 0.5 * (basis.chain[:-1] + basis.chain[1:])
    c = np.zeros((g, 2 * g), dtype=complex)
    for j in range(2 * g):
        left = _branch_line_integrals(curve, idx[j], mids[j], basis.mid_y[j], tol)[0]
        right = _branch_line_integrals(curve, idx[j + 1], mids[j], basis.mid_y[j], tol)[0]
        c[:, j] = left - right
    gam = 2.0 * c * np.asarray(basis.signs)[None, :]
    Omega1 = np.stack([gam[:, 2 * i] for i in range(g)], axis=1)
    Omega2 = np.stack([gam[:, 2 * i + 1:2 * g:2].sum(axis=1) for i in range(g)], axis=1)
    c.setflags(write=False)
    return PeriodData.from_periods(Omega1, Omega2, ordering=basis.ordering, segment_periods=c)


# ---------------------------------------------------------------------------
# local charts


@dataclass(frozen=True, eq=False)
class LocalChart:
    """Power-series chart around a point.

    ``kind`` is ``'regular'`` (``x = x0 + z``), ``'branch'`` (``x = e + z^2``),
    ``'infinity'`` (odd degree, ``x = z^-2``) or ``'infinity_sheet'`` (even
    degree, ``x = 1/z`` on one sheet).  ``coeffs[k]`` are the Taylor
    coefficients of ``omega_{k+1} / dz``; ``ycoeffs`` those of the series
    ``u`` from which ``y`` is recovered.
    """

    kind: str
    center: SurfacePoint
    coeffs: np.ndarray
    ycoeffs: np.ndarray
    radius: float
    center_aj: np.ndarray
    omega1_inv: np.ndarray
    genus: int
    sqrt_lc: complex = 1.0
    sheet: int = 1

    def x_of(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "regular":
            return self.center.x + z
        if self.kind == "branch":
            return self.center.x + z * z
        if self.kind == "infinity":
            return 1.0 / (z * z)
        return 1.0 / z

    def y_of(self, z):
        z = np.asarray(z, dtype=complex)
        g = self.genus
        if self.kind == "regular":
            return 1.0 / series_eval(self.ycoeffs, z)
        if self.kind == "branch":
            return z / series_eval(self.ycoeffs, z * z)
        if self.kind == "infinity":
            return self.sqrt_lc * z ** (-(2 * g + 1)) / series_eval(self.ycoeffs, z * z)
        return self.sheet * self.sqrt_lc * z ** (-(g + 1)) / series_eval(self.ycoeffs, z)

    def dx_dz(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "regular":
            return np.ones_like(z)
        if self.kind == "branch":
            return 2.0 * z
        if self.kind == "infinity":
            return -2.0 / z ** 3
        return -1.0 / (z * z)

    def forms(self, z) -> np.ndarray:
        """``omega_k / dz`` at points ``z``; shape ``z.shape + (g,)``."""
        z = np.asarray(z, dtype=complex)
        vals = series_eval(self.coeffs[:, None, :], z.reshape(1, -1))
        return vals.T.reshape(z.shape + (self.genus,))

    def integral(self, z) -> np.ndarray:
        """Raw ``int_center^z omega_k`` along the chart; shape ``z.shape + (g,)``."""
        z = np.asarray(z, dtype=complex)
        n = np.arange(1, self.coeffs.shape[1] + 1)
        prim = np.concatenate([np.zeros((self.genus, 1), dtype=complex), self.coeffs / n], axis=1)
        flat = z.reshape(1, -1)
        vals = series_eval(prim[:, None, :], flat)
        return vals.T.reshape(z.shape + (self.genus,))

    def aj(self, z) -> np.ndarray:
        """Abel-Jacobi coordinates of chart points (same base as the surface)."""
        return self.center_aj + self.integral(z) @ self.omega1_inv.T

    def locate(self, x, y) -> complex:
        """Chart coordinate of the point ``(x, y)``."""
        if self.kind == "regular":
            return complex(x - self.center.x)
        if self.kind == "branch":
            w = np.sqrt(complex(x - self.center.x))
        elif self.kind == "infinity":
            w = 1.0 / np.sqrt(complex(x))
        else:
            return complex(1.0 / x)
        yw = complex(self.y_of(w))
        return complex(w if abs(yw - y) <= abs(yw + y) else -w)


def _binomial_poly(x0, k: int) -> np.ndarray:
    """Coefficients (lowest first) of ``(x0 + h)^k``."""
    return np.array([math.comb(k, j) * x0 ** (k - j) for j in range(k + 1)], dtype=complex)


# ---------------------------------------------------------------------------
# the surface object


@dataclass(frozen=True)
class JacPoint:
    """A point of ``C^g / (Z^g + tau Z^g)``; ``shifted`` records whether kappa was added."""

    coords: np.ndarray
    shifted: bool = False

    def equals(self, other: "JacPoint", tau: SiegelPoint, tol: float = 1e-8) -> bool:
        if self.shifted != other.shifted:
            return False
        return lattice_congruent(self.coords, other.coords, tau, tol)


def lattice_distance(z, tau: SiegelPoint) -> float:
    """Sup-norm distance of z to the nearest lattice point."""
    zr, _, _ = tau.reduce(np.asarray(z, dtype=complex).reshape(1, -1))
    g = tau.g
    # the reduced representative may sit on a cell boundary: test neighbours
    offs = np.array(list(np.ndindex(*(3,) * (2 * g))), dtype=float) - 1.0
    lat = offs[:, :g] + offs[:, g:] @ tau.tau.T
    return float(np.abs(zr - lat).max(axis=1).min())


def lattice_congruent(z1, z2, tau: SiegelPoint, tol: float = 1e-8) -> bool:
    return lattice_distance(np.asarray(z1) - np.asarray(z2), tau) <= tol


class RiemannSurface:
    """A hyperelliptic curve with its period data, charts and Abel-Jacobi map.

    Parameters
    ----------
    curve : CurveSpec
    ordering : sequence of int, optional
        Branch-point ordering for the homology basis.
    cfg : QuadratureConfig, optional
    """

    def __init__(self, curve: CurveSpec, ordering=None, cfg: QuadratureConfig | None = None):
        self.curve = curve
        self.cfg = cfg or QuadratureConfig()
        self.basis = homology_basis(curve, ordering)
        self.periods = period_matrix(curve, self.basis, self.cfg)
        self.g = curve.genus
        self._charts = {}

    @classmethod
    def from_coeffs(cls, f_coeffs, ordering=None, cfg=None) -> "RiemannSurface":
        return cls(build_curve(f_coeffs), ordering=ordering, cfg=cfg)

    @property
    def tau(self) -> SiegelPoint:
        return self.periods.tau

    @property
    def aj_tol(self) -> float:
        return max(1e-13, min(1e-11, 1e-3 * self.cfg.quad_rel_tol))

    # -- Abel-Jacobi ---------------------------------------------------------

    @cached_property
    def _raw_branch_aj(self) -> np.ndarray:
        """AJ of the finite branch points relative to the first chain point."""
        e = self.curve.branch_points
        inv = self.periods.Omega1_inv
        c = self.periods.segment_periods
        out = np.zeros((e.size, self.g), dtype=complex)
        acc = np.zeros(self.g, dtype=complex)
        idx = self.basis.ordering
        for p in range(2 * self.g + 1):
            out[idx[p]] = inv @ acc
            if p < 2 * self.g:
                acc = acc + c[:, p]
        if e.size == 2 * self.g + 2:
            last = idx[-1]
            d = np.abs(e - e[last])
            d[last] = np.inf
            near = int(np.argmin(d))
            mid = 0.5 * (e[near] + e[last])
            ym = complex(self.curve.y_principal(mid))
            seg = (_branch_line_integrals(self.curve, near, mid, ym, 1e-14)[0]
                   - _branch_line_integrals(self.curve, last, mid, ym, 1e-14)[0])
            out[last] = out[near] + inv @ seg
        return out

    @cached_property
    def _raw_infinity_aj(self) -> np.ndarray:
        """AJ of infinity relative to the first chain point (odd degree)."""
        return self._raw_branch_aj.sum(axis=0)

    @cached_property
    def _origin(self) -> np.ndarray:
        return self._raw_infinity_aj if self.curve.has_infinity else np.zeros(self.g, dtype=complex)

    @property
    def base_point(self) -> SurfacePoint:
        if self.curve.has_infinity:
            return self.curve.weierstrass_points()[-1]
        return self.curve.weierstrass_points()[self.basis.ordering[0]]

    def _infinity_radius(self) -> float:
        return 2.0 * float(np.abs(self.curve.branch_points).max()) + 1.0

    def aj_xy(self, x, y) -> np.ndarray:
        """Abel-Jacobi coordinates of finite points ``(x, y)``; shape (m, g).

        Points with ``|x|`` beyond twice the branch-point radius are reached
        from infinity (odd degree); all others from the nearest finite
        branch point.
        """
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        y = np.atleast_1d(np.asarray(y, dtype=complex))
        out = np.empty((x.size, self.g), dtype=complex)
        inv = self.periods.Omega1_inv
        e = self.curve.branch_points
        far = np.zeros(x.size, dtype=bool)
        if self.curve.has_infinity:
            far = np.abs(x) > self._infinity_radius()
            if far.any():
                I = _infinity_line_integrals(self.curve, x[far], y[far], self.aj_tol)
                out[far] = self._raw_infinity_aj + I @ inv.T
        near = np.argmin(np.abs(x[:, None] - e[None, :]), axis=1)
        for a in np.unique(near[~far]):
            sel = (~far) & (near == a)
            I = _branch_line_integrals(self.curve, int(a), x[sel], y[sel], self.aj_tol)
            out[sel] = self._raw_branch_aj[a] + I @ inv.T
        return out - self._origin

    def abel_jacobi(self, P: SurfacePoint, base: SurfacePoint | None = None) -> JacPoint:
        """``Omega1^{-1} int_base^P omega`` (defaults to the surface base point)."""
        return JacPoint(coords=self._aj_point(P) - (self._aj_point(base) if base is not None else 0.0))

    def _aj_point(self, P: SurfacePoint) -> np.ndarray:
        if P.is_weierstrass:
            if P.branch == -1:
                return self._raw_infinity_aj - self._origin
            return self._raw_branch_aj[P.branch] - self._origin
        if P.is_infinity:
            return self.chart(P).center_aj
        return self.aj_xy(P.x, P.y)[0]

    def weierstrass_aj(self) -> np.ndarray:
        """AJ images of all branch points, ordered as ``curve.weierstrass_points()``."""
        return np.array([self._aj_point(W) for W in self.curve.weierstrass_points()])

    def involution(self, P: SurfacePoint) -> SurfacePoint:
        if P.is_weierstrass:
            return P
        return SurfacePoint(x=P.x, y=-P.y, sheet=-P.sheet, branch=None)

    # -- Riemann vector ------------------------------------------------------

    @cached_property
    def riemann_vector(self) -> np.ndarray:
        """The half-period kappa with ``Theta = W_{g-1} + kappa``.

        Found by testing all ``4^g`` half-periods against Riemann vanishing
        on random effective divisors of degree ``g-1``.
        """
        g = self.g
        rng = np.random.default_rng(12345)
        sums = []
        for _ in range(3 if g > 1 else 1):
            pts = [self.random_point(rng) for _ in range(g - 1)]
            sums.append(sum((self._aj_point(P) for P in pts), np.zeros(g, dtype=complex)))
        sums = np.array(sums)
        tau = self.tau
        scores = []
        cands = []
        for bits in np.ndindex(*(2,) * (2 * g)):
            m = np.array(bits[:g], dtype=float)
            n = np.array(bits[g:], dtype=float)
            kappa = 0.5 * (m + tau.tau @ n)
            vals = theta_normed(sums + kappa, tau, eps=1e-15)
            cands.append(kappa)
            scores.append(float(np.max(vals)))
        order = np.argsort(scores)
        best, second = scores[order[0]], scores[order[1]] if len(scores) > 1 else np.inf
        if not (best < 1e-8 and second > 1e3 * max(best, 1e-15)):
            raise NumericDegeneracyError(
                f"Riemann vector search inconclusive (best {best:.3g}, runner-up {second:.3g})")
        return cands[order[0]]

    def random_point(self, rng, radius: float = 2.0, min_dist: float = 1e-2) -> SurfacePoint:
        """A random ordinary point with ``|x| <= radius`` away from branch points."""
        e = self.curve.branch_points
        while True:
            r = radius * math.sqrt(rng.random())
            x = complex(r * np.exp(2j * np.pi * rng.random()))
            if np.min(np.abs(e - x)) > min_dist:
                return self.curve.point(x, 1 if rng.random() < 0.5 else -1)

    def divisor_to_pic(self, divisor) -> JacPoint:
        """Image of a degree ``g-1`` divisor in ``Pic_{g-1}``, identified with the Jacobian.

        ``divisor`` is a sequence of ``(coefficient, SurfacePoint)`` pairs.
        """
        pairs = list(divisor)
        deg = sum(int(c) for c, _ in pairs)
        if deg != self.g - 1:
            raise InvalidInputError(f"divisor must have degree {self.g - 1}, got {deg}")
        z = self.riemann_vector.copy()
        for c, P in pairs:
            z = z + int(c) * self._aj_point(P)
        return JacPoint(coords=z, shifted=True)

    # -- charts ----------------------------------------------------------------

    def chart(self, P: SurfacePoint, order: int = SERIES_ORDER) -> LocalChart:
        """Power-series chart centred at P."""
        key = (P.branch, P.sheet, None if P.is_infinity else complex(P.x), order)
        if key not in self._charts:
            self._charts[key] = self._build_chart(P, order)
        return self._charts[key]

    def _build_chart(self, P: SurfacePoint, M: int) -> LocalChart:
        g = self.g
        curve = self.curve
        e = curve.branch_points
        inv = self.periods.Omega1_inv
        f = curve.f
        if P.is_weierstrass and P.branch >= 0:
            e0 = e[P.branch]
            f1, rem = np.polydiv(f, np.array([1.0, -e0]))
            f1low = poly_shift(f1, e0)
            G0 = np.sqrt(f1low[0])
            v = series_inv_sqrt(f1low, M, lead=1.0 / G0)
            coeffs = np.zeros((g, 2 * M), dtype=complex)
            for k in range(g):
                ck = 2.0 * np.convolve(_binomial_poly(e0, k), v)[:M]
                coeffs[k, 0::2] = ck
            others = np.delete(e, P.branch)
            radius = math.sqrt(float(np.abs(others - e0).min()))
            return LocalChart("branch", P, coeffs, v, radius, self._aj_point(P), inv, g)
        if P.is_infinity:
            p = curve.f / curve.lc  # p(t) = prod (1 - e_j t), lowest first
            v = series_inv_sqrt(p, M, lead=1.0)
            emax = float(np.abs(e).max())
            if curve.has_infinity:
                coeffs = np.zeros((g, 2 * M), dtype=complex)
                for k in range(g):
                    shift = 2 * (g - 1 - k)
                    coeffs[k, shift::2] = (-2.0 / curve.sqrt_lc) * v[: (2 * M - shift + 1) // 2]
                radius = 1.0 / math.sqrt(emax)
                return LocalChart("infinity", P, coeffs, v, radius, self._aj_point(P), inv, g,
                                  sqrt_lc=curve.sqrt_lc)
            s = P.sheet
            coeffs = np.zeros((g, M), dtype=complex)
            for k in range(g):
                shift = g - 1 - k
                coeffs[k, shift:] = (-s / curve.sqrt_lc) * v[: M - shift]
            radius = 1.0 / emax
            chart = LocalChart("infinity_sheet", P, coeffs, v, radius, np.zeros(g, dtype=complex),
                               inv, g, sqrt_lc=curve.sqrt_lc, sheet=s)
            # anchor the chart by integrating to a point at half the radius
            t0 = 0.5 * radius
            x0 = 1.0 / t0
            y0 = complex(chart.y_of(t0))
            center = self.aj_xy(x0, y0)[0] - chart.integral(np.array([t0]))[0] @ inv.T
            return LocalChart("infinity_sheet", P, coeffs, v, radius, center, inv, g,
                              sqrt_lc=curve.sqrt_lc, sheet=s)
        x0, y0 = complex(P.x), complex(P.y)
        u = series_inv_sqrt(poly_shift(f, x0), M, lead=1.0 / y0)
        coeffs = np.zeros((g, M), dtype=complex)
        for k in range(g):
            coeffs[k] = np.convolve(_binomial_poly(x0, k), u)[:M]
        radius = float(np.abs(e - x0).min())
        return LocalChart("regular", P, coeffs, u, radius, self._aj_point(P), inv, g)

    # -- Wronskian and the canonical form -----------------------------------------

    def wronskian_x(self, x, sheet: int = 1) -> complex:
        """Wronskian of ``(omega_1, .., omega_g)`` in the coordinate x at a regular point.

        Columns are Taylor coefficients, i.e. derivatives scaled by ``1/(l-1)!``.
        """
        P = self.curve.point(x, sheet)
        if P.is_weierstrass or P.is_infinity:
            raise SingularChartError("the x-coordinate is not a local chart at a branch point")
        g = self.g
        y0 = complex(P.y)
        u = series_inv_sqrt(poly_shift(self.curve.f, complex(P.x)), g, lead=1.0 / y0)
        D = np.zeros((g, g), dtype=complex)
        for k in range(g):
            ck = np.convolve(_binomial_poly(complex(P.x), k), u)[:g]
            D[:, k] = ck
        return complex(np.linalg.det(D))

    def wronskian_orthonormal(self, x, sheet: int = 1) -> float:
        """``|W_x(nu)|`` for an orthonormal basis nu of holomorphic differentials."""
        return abs(self.wronskian_x(x, sheet)) / math.sqrt(self.periods.det_gram)

    def mu_density(self, x):
        """Density of the canonical (1,1)-form in ``du dv`` (``x = u + iv``) on either sheet."""
        x = np.asarray(x, dtype=complex)
        if np.any(np.min(np.abs(x[..., None] - self.curve.branch_points), axis=-1) == 0):
            raise SingularChartError("mu density is singular at a branch point")
        h = self.periods.mu_coefficients
        powers = x[..., None] ** np.arange(self.g)
        q = np.einsum("...k,kl,...l->...", powers, h, powers.conj()).real
        return q / (self.g * np.abs(self.curve.f_eval(x)))


# ---------------------------------------------------------------------------
# module-level operations


def abel_jacobi(P: SurfacePoint, base: SurfacePoint, surface: RiemannSurface) -> JacPoint:
    return surface.abel_jacobi(P, base)


def divisor_to_pic(divisor, surface: RiemannSurface) -> JacPoint:
    return surface.divisor_to_pic(divisor)


def wronskian_orthonormal(x, sheet: int, surface: RiemannSurface) -> float:
    return surface.wronskian_orthonormal(x, sheet)


def mu_density(x, surface: RiemannSurface):
    return surface.mu_density(x)


# ---------------------------------------------------------------------------
# files


def load_curve_file(path):
    """Read ``{"f_coeffs": [...], "ordering": [...]}``; returns ``(CurveSpec, ordering)``."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read curve file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "f_coeffs" not in doc:
        raise InvalidInputError("curve file needs an 'f_coeffs' field")
    coeffs = doc["f_coeffs"]
    if not isinstance(coeffs, list) or not all(isinstance(c, (str, int)) for c in coeffs):
        raise InvalidInputError("f_coeffs must be a list of rationals written as strings")
    curve = build_curve([to_fraction(str(c)) for c in coeffs])
    ordering = doc.get("ordering")
    return curve, (tuple(ordering) if ordering is not None else None)
