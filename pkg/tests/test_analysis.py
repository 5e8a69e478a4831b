from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dpwcmc.analysis import (
    MONODROMY_LAMBDAS,
    MuPolynomial,
    NotNormalized,
    Obstructed,
    OddOrderAt,
    Pole,
    PoleAtOrigin,
    Potential,
    Zero,
    ZeroE,
    classify_singularity,
    frobenius_obstruction,
    indicial_roots,
    monodromy_oracle,
    ode_residual,
    quadratic_form_check,
    residue_test,
    second_solution,
    second_solution_by_reduction,
    singular_points,
    symmetry_shortcut,
    validate_potential,
)
from dpwcmc.ratfun import CRat, RationalMap, parse_rational
from strategies import crats, nonzero_crats

Z0 = CRat(Fraction(1, 2))
w = RationalMap.linear(Z0)


def P(f, E):
    return Potential(parse_rational(f) if isinstance(f, str) else f, parse_rational(E) if isinstance(E, str) else E)


def E_series(coeffs, z0=Z0):
    """E = sum c_k (z - z0)^k."""
    out = RationalMap()
    base = RationalMap.linear(z0)
    for k, c in enumerate(coeffs):
        out = out + base**k * c
    return out


# --- indicial roots -------------------------------------------------------
@pytest.mark.parametrize("kind, roots", [(Pole(2), (0, -1)), (Zero(2), (3, 0)), (Pole(6), (0, -5))])
def test_indicial_roots(kind, roots):
    assert indicial_roots(kind) == roots


# --- obstruction ----------------------------------------------------------
@settings(max_examples=30, deadline=None)
@given(st.lists(crats, min_size=3, max_size=3))
def test_second_order_pole_never_obstructed(E):
    p = Potential(w**-2, E_series(E))
    assert frobenius_obstruction(p, Z0).obstruction.is_zero()


def test_fourth_order_pole_needs_E1_zero():
    assert not frobenius_obstruction(Potential(w**-4, E_series([1, 1])), Z0).integrable
    assert frobenius_obstruction(Potential(w**-4, E_series([1, 0, 3])), Z0).integrable


def test_sixth_order_pole_with_simple_zero_of_E():
    rep = frobenius_obstruction(P("(z-1/2)^-6", "z-1/2"), Z0)
    assert rep.integrable
    assert (rep.r1, rep.r2) == (0, -5)


@settings(max_examples=30, deadline=None)
@given(nonzero_crats, nonzero_crats, crats, crats)
def test_top_coefficient_law_pole(E0, E1, E2, E3):
    for n in (4, 6, 8):
        rep = frobenius_obstruction(Potential(w**-n, E_series([E0, E1, E2, E3])), Z0)
        ratio = rep.obstruction.leading() / (E1 * E0 ** ((n - 4) // 2))
        assert rep.obstruction.degree == (n - 2) // 2
        assert ratio and ratio.is_real()


@settings(max_examples=30, deadline=None)
@given(nonzero_crats, nonzero_crats, crats, crats)
def test_top_coefficient_law_zero(E0, E1, E2, E3):
    for n in (2, 4):
        rep = frobenius_obstruction(Potential(w**n, E_series([E0, E1, E2, E3])), Z0)
        ratio = rep.obstruction.leading() / (E1 * E0 ** ((n - 2) // 2))
        assert ratio and ratio.is_real()


@settings(max_examples=20, deadline=None)
@given(nonzero_crats, nonzero_crats, crats, crats, crats, crats)
def test_degree_law(E0, E1, E2, E3, E4, E5):
    # degree of a~_k in lambda^-1 is k (k even) or k - 1 (k odd); mu = lambda^-2
    E = E_series([E0, E1, E2, E3, E4, E5])
    for f, last in ((w**-6, 4), (w**-8, 6), (w**4, 4)):
        low = frobenius_obstruction(Potential(f, E), Z0).low_series
        assert len(low) == last + 1
        for k, a in enumerate(low):
            if k == 1:
                assert a.is_zero()  # normalized f: q_j = 0 for j > 0
                continue
            assert 2 * a.degree == (k if k % 2 == 0 else k - 1)


# --- residue test ---------------------------------------------------------
def test_residue_test_examples():
    assert residue_test(Potential(w**-2, RationalMap.const(1)), Z0).is_zero()
    assert not residue_test(Potential(w**-4, w), Z0).is_zero()
    assert residue_test(Potential(w**-4, w**2 + 3), Z0).is_zero()


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([-6, -4, -2, 2, 4, 6]), st.lists(crats, min_size=6, max_size=6))
def test_residue_and_obstruction_agree(n, E):
    p = Potential(w**n, E_series(E))
    assume(not p.E.is_zero())
    rep = frobenius_obstruction(p, Z0)
    assert rep.obstruction.is_zero() == residue_test(p, Z0, list(rep.top_series)).is_zero()


# --- second solution ------------------------------------------------------
def test_second_solution_zero_case_vanishes_to_order_n_plus_1():
    p = Potential(w**2, RationalMap.const(1))
    rep = frobenius_obstruction(p, Z0)
    assert rep.r1 == 3 and rep.integrable
    y2 = second_solution(rep, 6, p)
    # y2 = w^0 (1 + ...): holomorphic; the solution space contains the
    # combination y2 - c y1 and y1 itself has a zero of order n + 1 = 3
    assert y2[0] == MuPolynomial.const(1)
    assert all(v.is_zero() for v in ode_residual(p, Z0, rep.r2, y2))


def test_second_solution_pole_case():
    p = Potential(w**-4, RationalMap.const(1))
    rep = frobenius_obstruction(p, Z0)
    y2 = second_solution(rep, 6, p)
    assert rep.r2 == -3  # pole of order n - 1
    assert all(v.is_zero() for v in ode_residual(p, Z0, rep.r2, y2))


def test_second_solution_against_reduction_of_order():
    p = Potential(w**-2, RationalMap.const(1))
    rep = frobenius_obstruction(p, Z0)
    direct = second_solution(rep, 3, p)
    reduced = second_solution_by_reduction(p, Z0, 3)
    # they may differ by a multiple of y1 = w^0 (...), i.e. from index K = 1 on
    assert direct[0] == reduced[0]
    assert all(v.is_zero() for v in ode_residual(p, Z0, rep.r2, reduced))


def test_second_solution_refuses_obstructed():
    p = Potential(w**-4, w)
    with pytest.raises(Obstructed):
        second_solution(frobenius_obstruction(p, Z0), 5, p)


# --- symmetry shortcut ----------------------------------------------------
def test_symmetry_shortcut_examples():
    assert symmetry_shortcut(Potential(w**-4, RationalMap.const(1)), Z0)
    assert not symmetry_shortcut(Potential(w**-4, 1 + w), Z0)
    assert symmetry_shortcut(Potential(w**-2, w**2), Z0)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([-8, -6, -4, 2, 4]), st.lists(crats, min_size=4, max_size=4))
def test_even_data_is_never_obstructed(n, c):
    E = E_series([c[0], 0, c[1], 0, c[2], 0, c[3]])
    assume(not E.is_zero())
    p = Potential(w**n, E)
    assert symmetry_shortcut(p, Z0)
    assert frobenius_obstruction(p, Z0).integrable


# --- quadratic form -------------------------------------------------------
def test_quadratic_form_pole4():
    q = quadratic_form_check([2, 5, 7], Pole(4))
    assert q == MuPolynomial.const(5)  # E_1 alone


def test_quadratic_form_zero2():
    q = quadratic_form_check([2, 5, 7], Zero(2))
    assert q == MuPolynomial.const(5)


def test_quadratic_form_pole6_leaves_E2_free():
    a = quadratic_form_check([2, 0, 11, 0], Pole(6))
    b = quadratic_form_check([2, 0, -3, 0], Pole(6))
    assert a.is_zero() and b.is_zero()
    assert not quadratic_form_check([2, 1, 0, 0], Pole(6)).is_zero()
    assert not quadratic_form_check([0, 0, 0, 1], Pole(6)).is_zero()


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([Pole(4), Pole(6), Pole(8), Zero(2), Zero(4)]), st.lists(crats, min_size=8, max_size=8))
def test_quadratic_form_matches_recursion(kind, E):
    f = w ** (-kind.n if isinstance(kind, Pole) else kind.n)
    p = Potential(f, E_series(E))
    assume(not p.E.is_zero())
    obs = frobenius_obstruction(p, Z0).obstruction
    qf = quadratic_form_check(E, kind)
    assert obs == -(qf * MuPolynomial.mu())


def test_quadratic_form_rejects_non_normalized():
    with pytest.raises(NotNormalized):
        quadratic_form_check([1, 2, 3], Pole(4), f_local=RationalMap.z() ** -4 * 2)


# --- monodromy ------------------------------------------------------------
def test_monodromy_examples():
    assert monodromy_oracle(Potential(w**-2, RationalMap.const(1)), 0.5, 1.0).defect < 1e-8
    assert monodromy_oracle(Potential(w**-4, w), 0.5, 1j).defect > 1e-3
    # regular point: nothing to go around
    assert monodromy_oracle(Potential(RationalMap.const(1), RationalMap.const(1)), 0.5, 1.0, radius=0.3).defect < 1e-10


# --- classification -------------------------------------------------------
def test_classify_examples():
    v = classify_singularity(P("(z-1/2)^-6", "z-1/2"), Z0)
    assert v.smooth and v.witness_r == 1
    v = classify_singularity(P("(z-1/2)^-2", "1"), Z0)
    assert v.smooth and v.witness_r is None
    v = classify_singularity(Potential(w**2, RationalMap.const(1)), Z0)
    assert v.smooth and v.witness_r == 1
    v = classify_singularity(Potential(w**2, w), Z0)
    assert not v.integrable and not v.smooth


def test_branch_point():
    v = classify_singularity(Potential(w**2, w**3), Z0)
    assert v.branch and v.integrable and not v.smooth


def test_irrational_location_uses_numeric_oracle():
    # roots of z^2 - 1/2 are irrational; f has a residue at each double pole
    p = Potential(parse_rational("(z^2-1/2)^-2"), RationalMap.const(1))
    verdicts = [classify_singularity(p, sp) for sp in singular_points(p)]
    assert len(verdicts) == 2
    assert all(v.method == "monodromy" and not v.integrable for v in verdicts)
    # residue-free double poles at the same irrational points
    q = Potential(parse_rational("(z^2-1/2)^-2*(z^2+1/2)"), RationalMap.const(1))
    verdicts = [classify_singularity(q, sp) for sp in singular_points(q) if sp.n == -2]
    assert len(verdicts) == 2
    assert all(v.method == "monodromy" and v.integrable for v in verdicts)


def test_double_pole_with_residue_is_obstructed():
    f = parse_rational("(z-1/4)^-2*(z-2)^-2")
    p = Potential(f, RationalMap.const(1))
    z0 = CRat(Fraction(1, 4))
    assert not frobenius_obstruction(p, z0).integrable
    assert monodromy_oracle(p, 0.25, 1.0).defect > 1e-3


@settings(max_examples=20, deadline=None)
@given(
    st.sampled_from([-6, -4, -2, 2, 4]),
    st.lists(st.integers(-2, 2), min_size=6, max_size=6),
    nonzero_crats,
    st.builds(CRat, st.fractions(-1, 1, max_denominator=4), st.fractions(-1, 1, max_denominator=4)),
)
def test_coordinate_invariance(n, E, alpha, z0):
    """Affine change z = z0 + alpha w: f dz and E dz^2 pull back, the verdict is unchanged."""
    assume(abs(complex(z0)) > 1e-9)
    base = RationalMap.linear(z0)
    f = base**n
    Ez = RationalMap()
    for k, c in enumerate(E):
        Ez = Ez + base**k * c
    assume(not Ez.is_zero())
    v1 = classify_singularity(Potential(f, Ez), z0)
    fw = f.compose_affine(alpha, z0) * alpha
    Ew = Ez.compose_affine(alpha, z0) * alpha**2
    v2 = classify_singularity(Potential(fw, Ew), 0)
    assert (v1.integrable, v1.smooth, v1.branch, v1.witness_r) == (v2.integrable, v2.smooth, v2.branch, v2.witness_r)


# --- validation -----------------------------------------------------------
def test_validation():
    assert validate_potential(RationalMap.const(1), RationalMap.const(1)).f == RationalMap.const(1)
    with pytest.raises(OddOrderAt):
        validate_potential(RationalMap.z(), RationalMap.const(1))
    with pytest.raises(PoleAtOrigin):
        validate_potential(parse_rational("1/z^2"), RationalMap.const(1))
    with pytest.raises(ZeroE):
        validate_potential(RationalMap.const(1), RationalMap())
    assert validate_potential(RationalMap.const(1), RationalMap(), allow_zero_hopf=True).E.is_zero()


def test_validation_collects_all_violations():
    with pytest.raises(OddOrderAt) as info:
        validate_potential(parse_rational("1/z"), RationalMap.const(1))
    assert len(info.value.violations) >= 2


def test_monodromy_lambdas():
    assert np.allclose(np.abs(MONODROMY_LAMBDAS), 1.0)
