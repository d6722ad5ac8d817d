"""Genus-one closed forms: Dedekind eta, the discriminant, and curves from tau."""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError


def _q(tau: complex) -> complex:
    tau = complex(tau)
    if tau.imag <= 0:
        raise InvalidInputError(f"tau must lie in the upper half plane, got {tau}")
    return complex(np.exp(2j * np.pi * tau))


def log_eta(tau: complex) -> complex:
    """``log eta(tau) = 2 pi i tau / 24 + sum_n log(1 - q^n)``."""
    q = _q(tau)
    acc = 2j * np.pi * complex(tau) / 24.0
    qn = q
    while abs(qn) > 1e-18:
        acc += np.log(1.0 - qn)
        qn *= q
    return complex(acc)


def eta(tau: complex) -> complex:
    return complex(np.exp(log_eta(tau)))


def log_abs_delta(tau: complex) -> float:
    """``log |Delta(tau)|`` with ``Delta = eta^24``."""
    return 24.0 * log_eta(tau).real


def eisenstein(k: int, tau: complex) -> complex:
    """Normalised Eisenstein series ``E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n`` for k = 4, 6."""
    if k == 4:
        c = 240.0
    elif k == 6:
        c = -504.0
    else:
        raise InvalidInputError("only E4 and E6 are provided")
    q = _q(tau)
    acc = 1.0 + 0j
    n = 1
    qn = q
    while abs(qn) * n ** (k - 1) > 1e-18:
        acc += c * n ** (k - 1) * qn / (1.0 - qn)
        n += 1
        qn *= q
    return complex(acc)


def weierstrass_invariants(tau: complex):
    """``(g2, g3)`` of the lattice ``Z + tau Z``."""
    g2 = 60.0 * (math.pi ** 4 / 45.0) * eisenstein(4, tau)
    g3 = 140.0 * (2.0 * math.pi ** 6 / 945.0) * eisenstein(6, tau)
    return g2, g3


def curve_from_tau(tau: complex):
    """Coefficients (leading first) of ``y^2 = 4x^3 - g2 x - g3`` for ``C / (Z + tau Z)``."""
    g2, g3 = weierstrass_invariants(tau)
    return [4.0, 0.0, -g2, -g3]


def log_s_closed_form(tau: complex) -> float:
    """``log S = -log((Im tau)^{1/4} |eta(tau)|)``."""
    tau = complex(tau)
    return -(0.25 * math.log(tau.imag) + log_eta(tau).real)


def log_t_closed_form(tau: complex) -> float:
    """``log T = -2 log(2 pi) - (1/4) log((Im tau)^6 |Delta|)``."""
    tau = complex(tau)
    return -2.0 * math.log(2 * math.pi) - 0.25 * (6.0 * math.log(tau.imag) + log_abs_delta(tau))


def delta_closed_form(tau: complex) -> float:
    """Faltings delta of ``C / (Z + tau Z)``: ``-log((Im tau)^6 |Delta|) - 8 log(2 pi)``."""
    tau = complex(tau)
    return -(6.0 * math.log(tau.imag) + log_abs_delta(tau)) - 8.0 * math.log(2 * math.pi)
