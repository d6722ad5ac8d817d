"""The genus-3 family ``y^2 = x(x-1)R(x)``, ``R = x(x-1) + 4F``, over the rationals.

Condition checking and bad-prime detection use exact integer arithmetic;
the archimedean quantities reuse the surface and invariants modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy

from .errors import FamilyConditionError, InvalidInputError
from .invariants import green_limit_at_weierstrass
from .numerics import bareiss_det, poly_derivative, poly_roots, sylvester_matrix

EXAMPLE_F = (1, 6, 4, -6, -5, -1)


def _eval(coeffs, x):
    acc = 0
    for c in coeffs:
        acc = acc * x + c
    return acc


def family_r(F) -> list[int]:
    """``R = x(x-1) + 4F`` (coefficients leading first)."""
    F = [int(c) for c in F]
    R = [4 * c for c in F]
    R[-3] += 1
    R[-2] -= 1
    return R


def family_curve(F) -> list[int]:
    """``f = x(x-1)R(x)`` (degree 7)."""
    return [int(c) for c in np.polymul([1, -1, 0], family_r(F)).tolist()]


def integer_discriminant(p) -> int:
    """Discriminant of an integer polynomial via the Sylvester resultant ``Res(p, p')``."""
    p = [int(c) for c in p]
    n = len(p) - 1
    if n < 1 or p[0] == 0:
        raise InvalidInputError("need a polynomial of positive degree with non-zero leading coefficient")
    res = bareiss_det(sylvester_matrix(p, poly_derivative(p)))
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    q, r = divmod(sign * int(res), p[0])
    assert r == 0
    return q


def numeric_discriminant(p) -> int:
    """``lc^{2n-2} prod_{i<j} (r_i - r_j)^2`` from numerical roots, rounded."""
    p = [complex(c) for c in p]
    roots = poly_roots(p)
    n = len(roots)
    acc = complex(p[0]) ** (2 * n - 2)
    for i in range(n):
        for j in range(i + 1, n):
            acc *= (roots[i] - roots[j]) ** 2
    return int(round(acc.real))


# -- polynomial arithmetic over F_p ------------------------------------------


def _trim(a):
    i = 0
    while i < len(a) and a[i] == 0:
        i += 1
    return a[i:]


def _poly_mod(a, b, p):
    """Remainder of a by b over F_p (leading-first lists, reduced)."""
    a = list(a)
    inv = pow(b[0], -1, p)
    while len(a) >= len(b):
        q = a[0] * inv % p
        for i in range(len(b)):
            a[i] = (a[i] - q * b[i]) % p
        a = _trim(a[1:]) if a[0] == 0 else _trim(a)
    return a


def poly_gcd_mod(a, b, p):
    """Monic gcd of two polynomials over F_p."""
    a = _trim([c % p for c in a])
    b = _trim([c % p for c in b])
    while b:
        a, b = b, _poly_mod(a, b, p)
    if not a:
        return []
    inv = pow(a[0], -1, p)
    return [c * inv % p for c in a]


def _multiplicity_mod(poly, root, p):
    """Multiplicity of ``root`` as a zero of ``poly`` over F_p (synthetic division)."""
    a = [c % p for c in poly]
    m = 0
    while len(a) > 1 and _eval(a, root) % p == 0:
        out = [a[0]]
        for c in a[1:-1]:
            out.append((out[-1] * root + c) % p)
        a = out
        m += 1
    return m


def unique_double_root_mod(poly, p) -> tuple[bool, str]:
    """Whether ``poly mod p`` has exactly one multiple root and it is a double root.

    The multiple roots are the roots of ``gcd(poly, poly')``; the condition
    holds iff that gcd is linear, ``x - a``, and ``a`` has multiplicity 2.
    """
    red = _trim([c % p for c in poly])
    if len(red) != len(poly):
        return False, "degree drops modulo p"
    d = poly_gcd_mod(red, poly_derivative(red), p)
    if len(d) - 1 != 1:
        return False, f"gcd(R, R') has degree {len(d) - 1} modulo p"
    root = (-d[1]) % p
    m = _multiplicity_mod(red, root, p)
    if m != 2:
        return False, f"root {root} has multiplicity {m} modulo p"
    return True, f"double root at {root}"


@dataclass
class PrimeData:
    prime: int
    valuation: int
    bad: bool
    note: str = ""


@dataclass
class ReductionReport:
    """Outcome of the family conditions for one quintic F."""

    F: tuple
    R: tuple
    discriminant: int
    conditions: dict
    primes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.conditions.values())

    @property
    def bad_primes(self) -> list[int]:
        return sorted(d.prime for d in self.primes if d.bad)


def check_family(F, raise_on_failure: bool = True) -> ReductionReport:
    """Check the conditions on ``F`` and find the primes of bad reduction.

    Raises
    ------
    FamilyConditionError
        A condition fails (the offending prime, if any, is attached) and
        ``raise_on_failure`` is set.
    """
    F = tuple(int(c) for c in F)
    if len(F) != 6 or F[0] != 1:
        raise InvalidInputError("F must be a monic quintic with integer coefficients")
    R = family_r(F)
    conditions = {"F(0) unit": abs(_eval(F, 0)) == 1, "F(1) unit": abs(_eval(F, 1)) == 1}
    disc = integer_discriminant(R)
    conditions["disc(R) != 0"] = disc != 0
    report = ReductionReport(F, tuple(R), disc, conditions)

    def fail(msg, prime=None):
        if raise_on_failure:
            raise FamilyConditionError(msg, prime=prime)

    for name in ("F(0) unit", "F(1) unit", "disc(R) != 0"):
        if not conditions[name]:
            fail(f"family condition '{name}' fails")
            return report
    conditions["valuations <= 1"] = True
    conditions["double-root condition"] = True
    for p, v in sorted(sympy.factorint(abs(disc)).items()):
        if p == 2:
            report.primes.append(PrimeData(2, v, False, "residue characteristic 2"))
            continue
        if v >= 2:
            conditions["valuations <= 1"] = False
            report.primes.append(PrimeData(p, v, False, "valuation >= 2"))
            fail(f"v_{p}(disc R) = {v} >= 2", prime=p)
            continue
        good, note = unique_double_root_mod(R, p)
        if not good:
            conditions["double-root condition"] = False
            fail(f"R mod {p}: {note}", prime=p)
        report.primes.append(PrimeData(p, v, good, note))
    return report


# -- archimedean quantities ------------------------------------------------


def deg_det_pushforward(periods_per_embedding) -> float:
    """``-(1/2) sum_sigma log(|det Omega_1|^2 det Im tau)``."""
    total = 0.0
    for pd in periods_per_embedding:
        _, logabs = np.linalg.slogdet(pd.Omega1)
        total += 2.0 * float(logabs) + math.log(pd.tau.det_y)
    return -0.5 * total


def family_weierstrass_pair(surface):
    """The Weierstrass points ``W0`` (x = 0) and ``W1`` (x = 1)."""
    W0 = W1 = None
    for W in surface.curve.weierstrass_points():
        if W.is_infinity:
            continue
        if abs(W.x) < 1e-12:
            W0 = W
        elif abs(W.x - 1) < 1e-12:
            W1 = W
    if W0 is None or W1 is None:
        raise InvalidInputError("the curve has no branch points at x = 0 and x = 1")
    return W0, W1


def omega_self_intersection(surface, log_s: float, cfg=None, log_green_w0w1: float | None = None) -> float:
    """``(omega, omega) = 24 log G(W0, W1)`` for a single embedding."""
    if log_green_w0w1 is None:
        W0, W1 = family_weierstrass_pair(surface)
        log_green_w0w1 = green_limit_at_weierstrass(surface, W0, W1, log_s, cfg, richardson=False).log_value
    return 24.0 * log_green_w0w1


def bound_coefficient(g: int) -> float:
    """``8(g-1) / ((2g-1)(g+1))``."""
    return 8.0 * (g - 1) / ((2 * g - 1) * (g + 1))


def archimedean_bound_terms(g: int, log_r: float, deg_det: float) -> dict:
    """Archimedean part of the lower bound for ``(omega, omega)``.

    The finite contributions ``log R_b`` are non-negative and not evaluated;
    the returned value is a lower bound modulo them.
    """
    if g < 2:
        raise InvalidInputError("the bound needs g >= 2")
    c = bound_coefficient(g)
    return {"coefficient": c, "bracket": log_r + deg_det, "value": c * (log_r + deg_det),
            "label": "lower bound modulo finite contributions >= 0"}


def self_intersection_archimedean(surface, P, log_s: float, log_r: float, deg_det: float, cfg=None) -> float:
    """Archimedean sum ``-sum_W w log G(P, W) + log R + deg det`` for a point P."""
    from .invariants import log_green

    w = surface.curve.weierstrass_weight
    s = sum(log_green(surface, P, W, log_s, cfg) for W in surface.curve.weierstrass_points())
    return -w * s + log_r + deg_det
