"""Riemann theta function on the Siegel upper half space.

Every evaluation first reduces ``z`` modulo ``Z^g + tau Z^g`` so that
``c = (Im tau)^{-1} Im z`` lies in ``[-1/2, 1/2]^g``.  The series is then
summed over an ellipsoid in the reduced frame, where each term has modulus
``exp(-pi (n + c)^T Y (n + c))`` after the Gaussian normalisation.  The
exponential factor removed by the reduction is returned separately in log
form, so values far from the fundamental domain never overflow.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import InvalidInputError
from .numerics import cholesky_real

_CHUNK = 1 << 21


@dataclass(frozen=True, eq=False)
class SiegelPoint:
    """A symmetric complex matrix with positive definite imaginary part."""

    tau: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        tau = np.array(self.tau, dtype=complex)
        if tau.ndim == 0:
            tau = tau.reshape(1, 1)
        if tau.ndim != 2 or tau.shape[0] != tau.shape[1]:
            raise InvalidInputError(f"tau must be square, got shape {tau.shape}")
        scale = max(1.0, np.abs(tau).max())
        asym = np.abs(tau - tau.T).max()
        if asym > 1e-10 * scale:
            raise InvalidInputError(f"tau is not symmetric (residual {asym:.3g})")
        tau = 0.5 * (tau + tau.T)
        Y = tau.imag.copy()
        eig = np.linalg.eigvalsh(Y)
        if eig[0] <= 0:
            raise InvalidInputError(f"Im tau is not positive definite (min eigenvalue {eig[0]:.3g})")
        tau.setflags(write=False)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Yinv", np.linalg.inv(Y))
        object.__setattr__(self, "T", cholesky_real(Y))
        object.__setattr__(self, "eigenvalues", eig)
        object.__setattr__(self, "det_y", float(np.prod(eig)))

    @property
    def g(self) -> int:
        return self.tau.shape[0]

    @property
    def condition(self) -> float:
        """Spectral condition number of Im tau (reported, never repaired)."""
        return float(self.eigenvalues[-1] / self.eigenvalues[0])

    def lattice_vector(self, m, n):
        """The period ``m + tau n`` for integer vectors m, n."""
        return np.asarray(m, dtype=float) + self.tau @ np.asarray(n, dtype=float)

    def reduce(self, z):
        """Reduce points modulo the lattice.

        Returns ``(z_red, n, k)`` with ``z = z_red + tau n + k`` for integer
        vectors n, k and ``(Im tau)^{-1} Im z_red`` in ``[-1/2, 1/2]^g``.
        """
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        c = z.imag @ self.Yinv.T
        n = np.rint(c)
        zr = z - n @ self.tau.T
        k = np.rint(zr.real)
        return zr - k, n, k

    def is_lattice_point(self, z, tol=1e-8) -> bool:
        zr, _, _ = self.reduce(z)
        return bool(np.all(np.abs(zr) < tol))


@dataclass(frozen=True)
class ThetaValue:
    """Theta value (and optionally its z-gradient) at one point.

    ``value = exp(log_scale) * reduced_value``; ``error_bound`` bounds the
    truncation error of ``reduced_value`` (the normalised series).
    """

    value: complex
    gradient: np.ndarray | None
    truncation_radius: float
    error_bound: float
    log_scale: complex = 0j
    reduced_value: complex = 0j


@dataclass(frozen=True)
class Characteristic:
    """Half-integer theta characteristic ``[a, b]`` with entries in {0, 1/2}."""

    a: tuple
    b: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        if len(a) != len(b):
            raise InvalidInputError("characteristic halves have different lengths")
        if any(v not in (0.0, 0.5) for v in a + b):
            raise InvalidInputError("characteristic entries must be 0 or 1/2")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def parity(self) -> int:
        return int(round(4.0 * float(np.dot(self.a, self.b)))) % 2

    @property
    def is_even(self) -> bool:
        return self.parity == 0


def all_characteristics(g: int, parity: int | None = None):
    """All ``4^g`` half-integer characteristics, optionally of one parity."""
    out = []
    for bits in itertools.product((0.0, 0.5), repeat=2 * g):
        ch = Characteristic(bits[:g], bits[g:])
        if parity is None or ch.parity == parity:
            out.append(ch)
    return out


def as_siegel(tau) -> SiegelPoint:
    """Coerce a matrix (or 1x1 scalar) to a validated :class:`SiegelPoint`."""
    return tau if isinstance(tau, SiegelPoint) else SiegelPoint(np.asarray(tau, dtype=complex))


# ---------------------------------------------------------------------------
# truncation


def _tail(R: float, g: int, rho: float, power: int = 0) -> float:
    """Bound on sum_{|x| > R} |x|^power exp(-|x|^2) over a lattice of minimum >= rho.

    Each lattice point owns a disjoint ball of radius rho/2; comparing the
    term with the ball average of ``(|u| + rho/2)^power exp(-(|u| - rho/2)^2)``
    gives an integral over ``|u| >= R - rho/2``.  Valid for ``R >= rho``.
    """
    half = 0.5 * rho
    lo = R - half

    def integrand(r):
        return math.exp(-((r - half) ** 2)) * r ** (g - 1) * (r + half) ** power

    val, _ = integrate.quad(integrand, lo, np.inf, epsabs=0.0, epsrel=1e-10, limit=200)
    return g * (2.0 / rho) ** g * val


def truncation_radius(tau: SiegelPoint, eps: float, gradient: bool = False) -> float:
    """Radius R (in the ``sqrt(pi) * T`` metric) guaranteeing a tail below eps.

    Lattice points with ``pi (n + c)^T Im(tau) (n + c) > R^2`` contribute less
    than ``eps`` in total to the normalised series, for any centre c.  With
    ``gradient=True`` the bound also covers the ``2 pi n_k`` weighted sums.
    """
    tau = as_siegel(tau)
    if not (0.0 < eps < 1.0):
        raise InvalidInputError(f"eps must lie in (0, 1), got {eps}")
    key = ("R", eps, gradient)
    if key in tau._cache:
        return tau._cache[key]
    g = tau.g
    lam = float(tau.eigenvalues[0])
    rho = math.sqrt(math.pi * lam)

    def bound(R):
        b = _tail(R, g, rho)
        if gradient:
            b = max(b, 2 * math.pi * (_tail(R, g, rho, 1) / math.sqrt(math.pi * lam)
                                      + 0.5 * math.sqrt(g) * b))
        return b

    lo = rho
    hi = max(2.0 * rho, 2.0)
    while bound(hi) > eps:
        lo, hi = hi, 2.0 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if bound(mid) > eps:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    tau._cache[key] = hi
    return hi


def _lattice_points(tau: SiegelPoint, R: float) -> np.ndarray:
    """Integer vectors n that may satisfy ``pi |n + c|_Y^2 <= R^2`` for a reduced c."""
    key = ("pts", R)
    if key in tau._cache:
        return tau._cache[key]
    g = tau.g
    # |c|_Y over the reduced box is at most sqrt(lambda_max * g) / 2
    reach = R / math.sqrt(math.pi) + 0.5 * math.sqrt(tau.eigenvalues[-1] * g)
    bounds = [int(math.floor(reach * math.sqrt(tau.Yinv[i, i]))) + 1 for i in range(g)]
    axes = [np.arange(-b, b + 1) for b in bounds]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, g).astype(float)
    q = np.einsum("ni,ij,nj->n", grid, tau.Y, grid)
    pts = grid[q <= reach ** 2 + 1e-12]
    # fixed enumeration order: sort by norm then lexicographically
    qn = np.einsum("ni,ij,nj->n", pts, tau.Y, pts)
    order = np.lexsort(tuple(pts[:, i] for i in range(g - 1, -1, -1)) + (np.round(qn, 12),))
    pts = np.ascontiguousarray(pts[order])
    pts.setflags(write=False)
    tau._cache[key] = pts
    return pts


# ---------------------------------------------------------------------------
# core batch evaluation


@dataclass
class ThetaBatch:
    """Batch evaluation result in reduced, normalised form.

    For each input point ``z``:
      ``theta(z) = exp(log_scale) * tilde``
      ``grad theta(z) = exp(log_scale) * tilde_grad``
    and ``||theta||(z) = det(Im tau)^{1/4} |tilde|``.
    """

    tilde: np.ndarray
    tilde_grad: np.ndarray | None
    log_scale: np.ndarray
    reduced_z: np.ndarray
    shift: np.ndarray
    radius: float
    error_bound: float


def theta_batch(z, tau: SiegelPoint, eps: float = 1e-13, gradient: bool = False) -> ThetaBatch:
    """Vectorised theta evaluation at points ``z`` of shape (m, g)."""
    tau = as_siegel(tau)
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    g = tau.g
    if z.shape[-1] != g:
        raise InvalidInputError(f"z must have {g} components, got shape {z.shape}")
    R = truncation_radius(tau, eps, gradient=gradient)
    pts = _lattice_points(tau, R)
    quad = np.einsum("ni,ij,nj->n", pts, tau.tau, pts)

    zr_pre = z - np.rint(z.imag @ tau.Yinv.T) @ tau.tau.T
    n = np.rint(z.imag @ tau.Yinv.T)
    zr = zr_pre - np.rint(zr_pre.real)
    yr = zr.imag
    c = yr @ tau.Yinv.T
    gauss = np.einsum("mi,mi->m", c, yr)  # y'^T Y^{-1} y'

    m_pts = z.shape[0]
    tilde = np.empty(m_pts, dtype=complex)
    tgrad = np.empty((m_pts, g), dtype=complex) if gradient else None
    step = max(1, _CHUNK // max(1, pts.shape[0]))
    for lo in range(0, m_pts, step):
        hi = min(m_pts, lo + step)
        expo = (1j * math.pi) * quad[None, :] + (2j * math.pi) * (zr[lo:hi] @ pts.T) \
            - math.pi * gauss[lo:hi, None]
        terms = np.exp(expo)
        tilde[lo:hi] = terms.sum(axis=1)
        if gradient:
            tgrad[lo:hi] = (2j * math.pi) * (terms @ pts)
    log_scale = math.pi * gauss - 1j * math.pi * np.einsum("mi,ij,mj->m", n, tau.tau, n) \
        - 2j * math.pi * np.einsum("mi,mi->m", n, zr_pre)
    if gradient:
        tgrad = tgrad - (2j * math.pi) * n * tilde[:, None]
    return ThetaBatch(tilde=tilde, tilde_grad=tgrad, log_scale=log_scale, reduced_z=zr,
                      shift=n, radius=R, error_bound=eps)


def theta_eval(z, tau: SiegelPoint, want_gradient: bool = False, eps: float = 1e-13) -> ThetaValue:
    """Riemann theta function ``sum_n exp(pi i n^T tau n + 2 pi i n^T z)``."""
    tau = as_siegel(tau)
    z = np.asarray(z, dtype=complex).reshape(1, -1)
    b = theta_batch(z, tau, eps, gradient=want_gradient)
    scale = np.exp(b.log_scale[0])
    grad = scale * b.tilde_grad[0] if want_gradient else None
    return ThetaValue(value=complex(scale * b.tilde[0]), gradient=grad, truncation_radius=b.radius,
                      error_bound=b.error_bound, log_scale=complex(b.log_scale[0]),
                      reduced_value=complex(b.tilde[0]))


def log_theta_normed(z, tau: SiegelPoint, eps: float = 1e-13) -> np.ndarray:
    """``log ||theta||(z)`` for points of shape (m, g); ``-inf`` at zeros."""
    tau = as_siegel(tau)
    b = theta_batch(z, tau, eps)
    with np.errstate(divide="ignore"):
        return 0.25 * math.log(tau.det_y) + np.log(np.abs(b.tilde))


def theta_normed(z, tau: SiegelPoint, eps: float = 1e-13):
    """Faltings' normalised theta ``(det Y)^{1/4} exp(-pi y^T Y^{-1} y) |theta(z)|``.

    Accepts a single g-vector (returns float) or an (m, g) array.
    """
    tau = as_siegel(tau)
    arr = np.asarray(z, dtype=complex)
    b = theta_batch(arr.reshape(-1, tau.g), tau, eps)
    vals = tau.det_y ** 0.25 * np.abs(b.tilde)
    return float(vals[0]) if arr.ndim == 1 else vals


def theta_with_char(char: Characteristic, z, tau: SiegelPoint, eps: float = 1e-13,
                    want_gradient: bool = False) -> ThetaValue:
    """``theta[a,b](z) = exp(pi i a^T tau a + 2 pi i a^T (z + b)) theta(z + tau a + b)``."""
    tau = as_siegel(tau)
    a = np.asarray(char.a, dtype=float)
    bvec = np.asarray(char.b, dtype=float)
    z = np.asarray(z, dtype=complex).reshape(-1)
    if a.size != tau.g:
        raise InvalidInputError("characteristic length does not match genus")
    shifted = z + tau.tau @ a + bvec
    tb = theta_batch(shifted.reshape(1, -1), tau, eps, gradient=want_gradient)
    pre = 1j * math.pi * (a @ tau.tau @ a) + 2j * math.pi * (a @ (z + bvec))
    log_scale = complex(tb.log_scale[0] + pre)
    scale = np.exp(log_scale)
    grad = scale * tb.tilde_grad[0] if want_gradient else None
    return ThetaValue(value=complex(scale * tb.tilde[0]), gradient=grad, truncation_radius=tb.radius,
                      error_bound=tb.error_bound, log_scale=log_scale, reduced_value=complex(tb.tilde[0]))


def theta_constants(tau: SiegelPoint, chars, eps: float = 1e-13) -> np.ndarray:
    """Theta constants ``theta[a,b](0; tau)`` for a list of characteristics."""
    tau = as_siegel(tau)
    return np.array([theta_with_char(ch, np.zeros(tau.g), tau, eps).value for ch in chars])


def j_norm(w, tau: SiegelPoint, eps: float = 1e-13) -> float:
    """Guardia's normalised determinant of first theta derivatives.

    ``||J||(w_1..w_g) = det(Y)^{(g+2)/4} exp(-pi sum_k y_k^T Y^{-1} y_k)
    |det(d theta / d z_k (w_l))|``.
    """
    return math.exp(log_j_norm(w, tau, eps))


def log_j_norm(w, tau: SiegelPoint, eps: float = 1e-13) -> float:
    tau = as_siegel(tau)
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    g = tau.g
    if w.shape != (g, g):
        raise InvalidInputError(f"expected {g} vectors of length {g}, got shape {w.shape}")
    b = theta_batch(w, tau, eps, gradient=True)
    # the normalised columns exp(-pi y^T Y^-1 y) grad theta(w_l) differ from
    # tilde_grad by the unimodular phase of exp(log_scale) only
    cols = b.tilde_grad.T
    _, logdet = np.linalg.slogdet(cols)
    return (g + 2) / 4.0 * math.log(tau.det_y) + float(logdet)
