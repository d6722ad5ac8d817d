import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from arakelov import arithmetic as ar
from arakelov.errors import FamilyConditionError, InvalidInputError
from arakelov.integration import SurfaceQuadrature
from arakelov.surface import RiemannSurface

from conftest import EXAMPLE_CURVE

X_SYM = sympy.Symbol("x")


def unit_quintic(c1, c2, c3, f0, f1):
    """Monic quintic with ``F(0) = f0`` and ``F(1) = f1``: the x coefficient absorbs the constraint."""
    c4 = f1 - (1 + c1 + c2 + c3 + f0)
    return (1, c1, c2, c3, c4, f0)


def oracle_bad_primes(F):
    """Odd p with v_p(disc R) = 1 whose reduction has one double root and no other multiple root."""
    R = sympy.Poly(ar.family_r(F), X_SYM)
    disc = int(sympy.discriminant(R))
    bad, violations = set(), set()
    for p, v in sympy.factorint(abs(disc)).items():
        if p == 2:
            continue
        if v >= 2:
            violations.add(p)
            continue
        _, factors = sympy.Poly(R.all_coeffs(), X_SYM, modulus=p).sqf_list()
        multiple = [(f, m) for f, m in factors if m > 1]
        if len(multiple) == 1 and multiple[0][1] == 2 and multiple[0][0].degree() == 1:
            bad.add(p)
        else:
            violations.add(p)
    return disc, bad, violations


# -- the example member -----------------------------------------------------------------


def test_example_curve_from_family():
    assert ar.family_curve(ar.EXAMPLE_F) == EXAMPLE_CURVE


def test_example_bad_primes():
    rep = ar.check_family(ar.EXAMPLE_F)
    assert rep.ok
    assert rep.bad_primes == [37, 701, 14717]
    assert rep.discriminant == ar.numeric_discriminant(rep.R)
    assert rep.discriminant == int(sympy.discriminant(sympy.Poly(rep.R, X_SYM)))


def test_unit_conditions_rejected():
    F = (1, 6, 4, -6, -5, 2)  # F(0) = 2
    with pytest.raises(FamilyConditionError):
        ar.check_family(F)
    rep = ar.check_family(F, raise_on_failure=False)
    assert not rep.conditions["F(0) unit"] and not rep.ok
    with pytest.raises(FamilyConditionError):
        ar.check_family((1, 0, 0, 0, 0, 1))  # F(1) = 2
    with pytest.raises(InvalidInputError):
        ar.check_family((2, 0, 0, 0, 0, 1))


def test_zero_discriminant_rejected(monkeypatch):
    # R = x(x-1) + 4F is squarefree for every integer F, so the branch is reached by patching
    monkeypatch.setattr(ar, "integer_discriminant", lambda p: 0)
    with pytest.raises(FamilyConditionError):
        ar.check_family(ar.EXAMPLE_F)
    rep = ar.check_family(ar.EXAMPLE_F, raise_on_failure=False)
    assert rep.conditions["disc(R) != 0"] is False


def test_valuation_two_names_prime():
    # search a small box for a member with a square prime factor in disc(R)
    for c in np.ndindex(7, 7, 7):
        F = unit_quintic(*(int(v) - 3 for v in c), 1, 1)
        disc = ar.integer_discriminant(ar.family_r(F))
        odd_sq = [p for p, v in sympy.factorint(abs(disc)).items() if p > 2 and v >= 2]
        if odd_sq:
            with pytest.raises(FamilyConditionError) as exc:
                ar.check_family(F)
            assert exc.value.prime is not None
            return
    pytest.fail("no member with a repeated odd prime factor found")


@settings(max_examples=20, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6), st.integers(-6, 6),
       st.sampled_from([-1, 1]), st.sampled_from([-1, 1]))
def test_bad_primes_match_oracle(c1, c2, c3, f0, f1):
    F = unit_quintic(c1, c2, c3, f0, f1)
    disc, bad, violations = oracle_bad_primes(F)
    rep = ar.check_family(F, raise_on_failure=False)
    assert rep.discriminant == disc != 0
    assert set(rep.bad_primes) == bad
    assert rep.ok == (not violations)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=5, max_size=5))
def test_r_always_squarefree(tail):
    R = ar.family_r([1] + tail)
    assert ar.integer_discriminant(R) != 0


def test_double_root_helper():
    p = 7
    assert ar.unique_double_root_mod([1, -2, 1, 0], p)[0]  # x (x - 1)^2
    assert not ar.unique_double_root_mod([1, -3, 3, -1], p)[0]  # (x - 1)^3
    assert not ar.unique_double_root_mod([1, 0, -1], p)[0]  # squarefree


# -- archimedean quantities ------------------------------------------------------------------


def test_deg_det_genus_one_direct_integral():
    X = RiemannSurface.from_coeffs([1, 0, -1, 0])
    res = SurfaceQuadrature(X).integrate(lambda b: np.abs(b.forms[:, 0]) ** 2, measure="area")
    direct = -0.5 * math.log(res.value)
    assert abs(ar.deg_det_pushforward([X.periods]) - direct) <= 1e-6


def test_deg_det_sums_embeddings(example_surface):
    one = ar.deg_det_pushforward([example_surface.periods])
    assert abs(ar.deg_det_pushforward([example_surface.periods] * 2) - 2 * one) < 1e-12


def test_weierstrass_pair(example_surface):
    W0, W1 = ar.family_weierstrass_pair(example_surface)
    assert abs(W0.x) < 1e-14 and abs(W1.x - 1) < 1e-14
    with pytest.raises(InvalidInputError):
        ar.family_weierstrass_pair(RiemannSurface.from_coeffs([1, 0, 0, 0, 0, -1]))


def test_omega_self_intersection_linear(example_surface):
    assert ar.omega_self_intersection(example_surface, 0.0, log_green_w0w1=0.5) == 12.0
    a = ar.omega_self_intersection(example_surface, 0.0)
    b = ar.omega_self_intersection(example_surface, 2.7)
    # log G carries log S / g^3
    assert abs((b - a) - 24 * 2.7 / 27) < 1e-10


def test_bound_coefficient_and_terms():
    assert ar.bound_coefficient(3) == 16 / 20
    assert ar.bound_coefficient(2) == 8 / 9
    t = ar.archimedean_bound_terms(3, 4.86, -1.28)
    assert abs(t["value"] - 0.8 * (4.86 - 1.28)) < 1e-14
    assert "modulo finite contributions" in t["label"]
    assert ar.archimedean_bound_terms(3, 5.0, -1.28)["value"] > t["value"]
    with pytest.raises(InvalidInputError):
        ar.archimedean_bound_terms(1, 0.0, 0.0)


def test_self_intersection_archimedean(example_surface):
    from arakelov.invariants import log_green, random_generic_point

    X = example_surface
    P = random_generic_point(X, np.random.default_rng(0), 0.2)
    val = ar.self_intersection_archimedean(X, P, 2.0, 4.0, -1.28)
    direct = -3 * sum(log_green(X, P, W, 2.0) for W in X.curve.weierstrass_points()) + 4.0 - 1.28
    assert abs(val - direct) < 1e-12
