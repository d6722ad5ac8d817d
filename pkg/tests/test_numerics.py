import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from arakelov.errors import InvalidInputError, NumericDegeneracyError
from arakelov.numerics import (
    QuadratureConfig,
    adaptive_path_quadrature,
    bareiss_det,
    composite_rule,
    exact_discriminant,
    gauss_legendre,
    graded_panels,
    hermitian_inverse_det,
    poly_roots,
    poly_shift,
    root_multiplicities,
    series_eval,
    series_inv_sqrt,
    stable_sum,
)


# -- configuration -------------------------------------------------------------


def test_config_rejects_bad_values():
    with pytest.raises(InvalidInputError):
        QuadratureConfig(theta_eps=1.5)
    with pytest.raises(InvalidInputError):
        QuadratureConfig(nodes_per_panel=3)
    with pytest.raises(InvalidInputError):
        QuadratureConfig(max_depth=0)


# -- roots -------------------------------------------------------------------


def test_roots_of_x2_plus_1():
    r = poly_roots([1, 0, 1])
    assert np.allclose(sorted(r, key=lambda z: z.imag), [-1j, 1j], atol=1e-14)


def test_roots_of_example_septic():
    f = np.polymul([1, -1, 0], [4, 24, 16, -23, -21, -4])
    r = poly_roots(f)
    assert len(r) == 7
    assert min(abs(r)) < 1e-14 and min(abs(r - 1)) < 1e-14
    assert all(m == 1 for _, m in root_multiplicities(r))
    assert np.allclose(4 * np.poly(r), f, rtol=0, atol=1e-10 * np.abs(f).max())


def test_zero_leading_coefficient_rejected():
    with pytest.raises(InvalidInputError):
        poly_roots([0, 1, 2])


def test_multiplicities_sum_to_degree():
    r = poly_roots(np.poly([1.0, 1.0, 2.0, -3.0]))
    groups = root_multiplicities(r, tol=1e-5)
    assert sum(m for _, m in groups) == 4
    assert sorted(m for _, m in groups) == [1, 1, 2]


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=10), st.integers(min_value=0, max_value=2 ** 31))
def test_root_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    # separated roots: jittered points on a few circles
    k = np.arange(n)
    roots = (0.5 + k % 3) * np.exp(2j * np.pi * (k / n + 0.05 * rng.random(n)))
    found = poly_roots(np.poly(roots))
    err = max(np.min(np.abs(found - r)) for r in roots)
    assert err <= 1e-9


# -- linear algebra ------------------------------------------------------------


def test_inverse_identity_and_diagonal():
    inv, det = hermitian_inverse_det(np.eye(3))
    assert np.allclose(inv, np.eye(3)) and det == 1
    inv, det = hermitian_inverse_det(np.diag([2.0, 3.0]), hermitian=True)
    assert np.allclose(inv, np.diag([0.5, 1 / 3])) and abs(det - 6) < 1e-14


def test_singular_matrix_reports_condition():
    with pytest.raises(NumericDegeneracyError) as exc:
        hermitian_inverse_det(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert exc.value.condition is None or exc.value.condition > 1e12


def test_mu_coefficients_real_symmetric_for_real_curve(example_surface):
    h = example_surface.periods.mu_coefficients
    assert np.abs(h.imag).max() < 1e-10 * np.abs(h).max()
    assert np.allclose(h, h.T, atol=1e-10 * np.abs(h).max())


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31))
def test_inverse_residual_random(seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)) + 4 * np.eye(6)
    inv, det = hermitian_inverse_det(M)
    assert np.abs(M @ inv - np.eye(6)).max() <= 1e-10
    assert abs(det - np.prod(np.linalg.eigvals(M))) <= 1e-9 * abs(det)


# -- quadrature ----------------------------------------------------------------


def test_gauss_legendre_small_rules():
    x, w = gauss_legendre(1)
    assert x[0] == 0 and w[0] == 2
    x, w = gauss_legendre(2)
    assert np.allclose(np.sort(x), [-1 / math.sqrt(3), 1 / math.sqrt(3)]) and np.allclose(w, 1)


@pytest.mark.parametrize("n", [1, 3, 8, 16, 40])
def test_gauss_legendre_exactness(n):
    x, w = gauss_legendre(n)
    assert abs(w.sum() - 2) < 1e-14
    k = 2 * n - 2  # even power of highest degree integrated exactly
    assert abs(np.dot(w, x ** k) - 2 / (k + 1)) < 1e-12
    assert abs(np.dot(w, x ** (2 * n - 1))) < 1e-12


def test_gauss_legendre_exp():
    x, w = gauss_legendre(16)
    assert abs(np.dot(w, np.exp(x)) - (math.e - 1 / math.e)) < 1e-14


def test_refinement_convergence():
    f = lambda t: np.cos(3 * t) / (1.2 + t)
    edges = np.linspace(0.0, 2.0, 65)
    x, w = composite_rule(edges, 20)
    exact = np.dot(w, f(x))
    errs = []
    for n in (2, 4, 8):
        x, w = composite_rule(np.linspace(0.0, 2.0, 3), n)
        errs.append(abs(np.dot(w, f(x)) - exact))
    assert errs[1] <= errs[0] / 1e3 or errs[1] < 1e-14
    assert errs[2] <= errs[1] / 1e3 or errs[2] < 1e-14


def test_graded_panels_log_singularity():
    x, w = composite_rule(graded_panels(1.0, 40, 0.3), 12)
    assert abs(np.dot(w, np.log(x)) + 1.0) < 1e-13


def test_adaptive_path_quadrature():
    def func(pid, s):
        a = (pid + 1.0)[:, None]
        return (np.sqrt(s) * a)[..., None]

    vals, ok = adaptive_path_quadrature(func, 3, 1, 1e-10)
    assert ok
    assert np.allclose(vals[:, 0], [2 / 3, 4 / 3, 2.0], rtol=0, atol=1e-10)


def test_stable_sum():
    assert stable_sum([1e16, 1.0, -1e16]) == 1.0


# -- series ----------------------------------------------------------------------


def test_series_inv_sqrt_matches_direct():
    p = poly_shift([1, 0, -2, 5], 0.3 + 0.2j)  # p(0.3 + 0.2i + h)
    b = series_inv_sqrt(p, 30)
    h = 0.05 + 0.02j
    direct = 1 / np.sqrt(np.polyval([1, 0, -2, 5], 0.3 + 0.2j + h))
    assert abs(series_eval(b, h) - direct) < 1e-14


# -- exact arithmetic ----------------------------------------------------------


def test_bareiss_det():
    M = [[2, 1, 0], [1, 3, 1], [0, 1, 4]]
    assert bareiss_det(M) == Fraction(18)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(min_value=-20, max_value=20), min_size=3, max_size=8).filter(lambda c: c[0] != 0))
def test_discriminant_matches_sympy(c):
    x = sympy.symbols("x")
    assert exact_discriminant(c) == Fraction(int(sympy.discriminant(sympy.Poly(c, x))))
