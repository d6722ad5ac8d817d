"""Shared numerical kernels.

Polynomial root finding (Aberth iteration with Newton polishing), complex
dense linear algebra with conditioning checks, Gauss-Legendre rules, a few
truncated power-series operations, and exact rational polynomial
arithmetic used for discriminants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError, NumericDegeneracyError

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class QuadratureConfig:
    """Truncation and tolerance parameters governing all numerical error.

    Attributes
    ----------
    theta_eps : float
        Absolute truncation target for theta series (normalised scale).
    quad_rel_tol : float
        Relative tolerance of adaptive 1-D and 2-D quadrature.
    max_depth : int
        Maximum subdivision depth of adaptive quadrature.
    nodes_per_panel : int
        Gauss-Legendre nodes per panel (per direction in 2-D).
    sing_exclusion_radius : float
        Radius, in local-chart units, around Weierstrass points inside which
        the regular Green formula is refused.
    """

    theta_eps: float = 1e-13
    quad_rel_tol: float = 1e-9
    max_depth: int = 14
    nodes_per_panel: int = 16
    sing_exclusion_radius: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.theta_eps < 1.0):
            raise InvalidInputError(f"theta_eps must lie in (0, 1), got {self.theta_eps}")
        if not self.quad_rel_tol > 0.0:
            raise InvalidInputError(f"quad_rel_tol must be positive, got {self.quad_rel_tol}")
        if int(self.max_depth) < 1:
            raise InvalidInputError(f"max_depth must be >= 1, got {self.max_depth}")
        if int(self.nodes_per_panel) < 4:
            raise InvalidInputError(f"nodes_per_panel must be >= 4, got {self.nodes_per_panel}")
        if not self.sing_exclusion_radius > 0.0:
            raise InvalidInputError("sing_exclusion_radius must be positive")


# ---------------------------------------------------------------------------
# polynomial roots


def _as_complex_coeffs(coeffs) -> np.ndarray:
    c = np.asarray([complex(v) for v in coeffs], dtype=complex)
    if c.ndim != 1 or c.size < 2:
        raise InvalidInputError("polynomial must have degree >= 1")
    if c[0] == 0:
        raise InvalidInputError("leading coefficient is zero")
    return c


def poly_roots(coeffs, tol: float = 1e-15, max_iter: int = 500) -> np.ndarray:
    """All complex roots of a polynomial, repeated according to multiplicity.

    Parameters
    ----------
    coeffs : sequence of complex
        Coefficients, leading coefficient first.

    Returns
    -------
    ndarray of complex, shape (degree,)
        Roots sorted by (real, imag).

    Notes
    -----
    Simultaneous Aberth-Ehrlich iteration from points on a circle of radius
    given by the Fujiwara bound, followed by one or two Newton polishing
    steps on the original polynomial (accepted only if they decrease the
    residual).
    """
    c = _as_complex_coeffs(coeffs)
    n = c.size - 1
    monic = c / c[0]
    if n == 1:
        return np.array([-monic[1]])
    deriv = np.polyder(monic)

    # Fujiwara bound on the root moduli
    ratios = [abs(monic[k]) ** (1.0 / k) for k in range(1, n + 1)]
    ratios[-1] = (abs(monic[n]) / 2.0) ** (1.0 / n)
    radius = 2.0 * max(max(ratios), 1e-3)
    angles = 2.0 * np.pi * np.arange(n) / n + 0.4
    z = radius * np.exp(1j * angles)

    for _ in range(max_iter):
        p = np.polyval(monic, z)
        dp = np.polyval(deriv, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        s = inv.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            step = ratio / (1.0 - ratio * s)
        step = np.where(np.isfinite(step), step, 0.0)
        z = z - step
        if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(z))):
            break

    for _ in range(2):
        p = np.polyval(monic, z)
        dp = np.polyval(deriv, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = z - p / dp
        better = np.isfinite(cand) & (np.abs(np.polyval(monic, cand)) < np.abs(p))
        z = np.where(better, cand, z)

    # real-coefficient inputs: snap tiny imaginary parts
    if np.all(c.imag == 0):
        scale = np.maximum(1.0, np.abs(z))
        z = np.where(np.abs(z.imag) < 1e-14 * scale, z.real + 0j, z)
    order = np.lexsort((z.imag, z.real))
    return z[order]


def root_multiplicities(roots, tol: float = 1e-6):
    """Group numerically coincident roots into (root, multiplicity) pairs."""
    roots = list(np.asarray(roots, dtype=complex))
    groups = []
    while roots:
        r = roots.pop(0)
        members = [r]
        keep = []
        for s in roots:
            if abs(s - r) <= tol * max(1.0, abs(r)):
                members.append(s)
            else:
                keep.append(s)
        roots = keep
        groups.append((complex(np.mean(members)), len(members)))
    return groups


# ---------------------------------------------------------------------------
# linear algebra


def hermitian_inverse_det(M, hermitian: bool = False):
    """Inverse and determinant of a square complex matrix.

    For ``hermitian=True`` the matrix must be positive definite and a
    Cholesky factorisation is used (the determinant is then real).
    Raises :class:`NumericDegeneracyError` when the 2-norm condition number
    exceeds ``1e12``.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if hermitian:
        scale = max(np.abs(M).max(), 1e-300)
        if np.abs(M - M.conj().T).max() > 1e-12 * scale:
            raise InvalidInputError("matrix flagged Hermitian is not Hermitian")
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NumericDegeneracyError(f"matrix is ill-conditioned (cond ~ {cond:.3g})", condition=cond)
    if hermitian:
        H = 0.5 * (M + M.conj().T)
        try:
            L = np.linalg.cholesky(H)
        except np.linalg.LinAlgError as exc:
            raise NumericDegeneracyError("Hermitian matrix is not positive definite", condition=cond) from exc
        d = np.prod(np.abs(np.diag(L)) ** 2)
        Linv = np.linalg.solve(L, np.eye(n))
        inv = Linv.conj().T @ Linv
        return inv, complex(d)
    inv = np.linalg.solve(M, np.eye(n))
    return inv, complex(np.linalg.det(M))


def cholesky_real(Y) -> np.ndarray:
    """Upper-triangular ``T`` with ``Y = T^T T`` for a real SPD matrix."""
    return np.linalg.cholesky(np.asarray(Y, dtype=float)).T


# ---------------------------------------------------------------------------
# quadrature rules


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    n = int(n)
    if n < 1:
        raise InvalidInputError(f"node count must be >= 1, got {n}")
    return _leggauss(n)


def gauss_legendre_interval(n: int, a: float, b: float):
    """Gauss-Legendre rule mapped to [a, b]."""
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def graded_panels(r_max: float, levels: int, ratio: float = 0.5):
    """Panel edges ``[0, r_max]`` refined geometrically towards 0."""
    edges = [r_max * ratio ** k for k in range(levels + 1)]
    edges.append(0.0)
    return np.array(edges[::-1])


def composite_rule(edges, n: int):
    """Concatenated Gauss-Legendre rule over consecutive panels."""
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre_interval(n, a, b)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def stable_sum(values) -> float:
    """Correctly rounded sum of real values in fixed order."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


# ---------------------------------------------------------------------------
# truncated power series (coefficients lowest order first)


def series_mul(a, b, order: int):
    """Product of two truncated series, kept to ``order`` terms."""
    return np.convolve(a[:order], b[:order])[:order]


def series_inv_sqrt(poly_low_first, order: int, lead=None):
    """Taylor coefficients of ``p(h)^(-1/2)`` for a polynomial ``p``.

    ``poly_low_first`` holds p's coefficients in increasing degree with
    ``p(0) != 0``; ``lead`` optionally fixes the branch of ``p(0)^(-1/2)``.
    The recurrence follows from ``2 p u' + p' u = 0``.
    """
    a = np.asarray(poly_low_first, dtype=complex)
    if a[0] == 0:
        raise InvalidInputError("series_inv_sqrt needs p(0) != 0")
    d = a.size - 1
    da = np.array([(j + 1) * a[j + 1] for j in range(d)], dtype=complex)
    b = np.zeros(order, dtype=complex)
    b[0] = lead if lead is not None else 1.0 / np.sqrt(a[0])
    for n in range(order - 1):
        # coefficient of h^n in 2 p u' + p' u, solved for b[n+1]
        acc = 0j
        for j in range(1, min(d, n + 1) + 1):
            acc += 2.0 * a[j] * (n - j + 1) * b[n - j + 1]
        for j in range(0, min(d - 1, n) + 1):
            acc += da[j] * b[n - j]
        b[n + 1] = -acc / (2.0 * a[0] * (n + 1))
    return b


def poly_shift(coeffs_high_first, x0):
    """Coefficients (lowest first) of ``p(x0 + h)`` as a polynomial in h."""
    c = np.asarray(coeffs_high_first, dtype=complex)
    d = c.size - 1
    out = np.zeros(d + 1, dtype=complex)
    # repeated synthetic division (Taylor shift)
    work = c.copy()
    for k in range(d + 1):
        vals = np.zeros(work.size, dtype=complex)
        acc = 0j
        for i, coef in enumerate(work):
            acc = acc * x0 + coef
            vals[i] = acc
        out[k] = vals[-1]
        work = vals[:-1]
    return out


def series_eval(coeffs, z):
    """Evaluate ``sum_n coeffs[..., n] z^n`` by Horner along the last axis."""
    coeffs = np.asarray(coeffs)
    z = np.asarray(z)
    acc = np.zeros(np.broadcast_shapes(coeffs.shape[:-1], z.shape), dtype=complex)
    for n in range(coeffs.shape[-1] - 1, -1, -1):
        acc = acc * z + coeffs[..., n]
    return acc


# ---------------------------------------------------------------------------
# exact polynomial arithmetic over Q


def to_fraction(value) -> Fraction:
    """Parse ints, Fractions, decimal or 'p/q' strings into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"cannot parse rational number {value!r}") from exc
    if isinstance(value, float):
        return Fraction(value)
    raise InvalidInputError(f"not a rational number: {value!r}")


def bareiss_det(matrix):
    """Exact determinant of a square matrix of Fractions (fraction-free)."""
    A = [[to_fraction(v) for v in row] for row in matrix]
    n = len(A)
    if n == 0:
        return Fraction(1)
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) / prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def sylvester_matrix(p, q):
    """Sylvester matrix of two polynomials given leading coefficient first."""
    m, n = len(p) - 1, len(q) - 1
    size = m + n
    rows = []
    for i in range(n):
        rows.append([0] * i + list(p) + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + list(q) + [0] * (size - n - 1 - i))
    return rows


def poly_derivative(p):
    """Derivative of a polynomial given leading coefficient first."""
    d = len(p) - 1
    return [p[i] * (d - i) for i in range(d)]


def exact_discriminant(coeffs) -> Fraction:
    """Discriminant ``(-1)^(d(d-1)/2) Res(p, p') / lc`` computed exactly."""
    p = [to_fraction(c) for c in coeffs]
    if p[0] == 0:
        raise InvalidInputError("leading coefficient is zero")
    d = len(p) - 1
    if d < 1:
        raise InvalidInputError("discriminant needs degree >= 1")
    if d == 1:
        return Fraction(1)
    res = bareiss_det(sylvester_matrix(p, poly_derivative(p)))
    return (-1) ** (d * (d - 1) // 2) * res / p[0]


# ---------------------------------------------------------------------------
# adaptive line integrals over many paths at once


def adaptive_path_quadrature(func, n_paths: int, n_out: int, tol: float, n_nodes: int = 16,
                             max_depth: int = 40):
    """Integrate ``func`` over s in [0, 1] for many paths simultaneously.

    ``func(pid, s)`` receives path indices of shape (P,) and abscissae of
    shape (P, n) and returns values of shape (P, n, n_out).  Panels are
    bisected until the Gauss rule on a panel and on its two halves agree
    to ``tol * panel_length``.

    Returns
    -------
    values : ndarray, shape (n_paths, n_out)
    converged : bool
    """
    x, w = gauss_legendre(n_nodes)
    unit = 0.5 * (x + 1.0)

    def panel(pid, a, b):
        s = a[:, None] + (b - a)[:, None] * unit[None, :]
        vals = func(pid, s)
        return np.einsum("pnk,n->pk", vals, w) * (0.5 * (b - a))[:, None]

    out = np.zeros((n_paths, n_out), dtype=complex)
    pid = np.arange(n_paths)
    a = np.zeros(n_paths)
    b = np.ones(n_paths)
    whole = panel(pid, a, b)
    converged = True
    for depth in range(max_depth + 1):
        if pid.size == 0:
            break
        m = 0.5 * (a + b)
        left = panel(pid, a, m)
        right = panel(pid, m, b)
        fine = left + right
        err = np.abs(fine - whole).max(axis=1)
        done = err <= tol * (b - a)
        if depth == max_depth:
            converged = bool(np.all(done))
            done = np.ones_like(done)
        np.add.at(out, pid[done], fine[done])
        keep = ~done
        pid = np.concatenate([pid[keep], pid[keep]])
        a, b = np.concatenate([a[keep], m[keep]]), np.concatenate([m[keep], b[keep]])
        whole = np.concatenate([left[keep], right[keep]])
    return out, converged
