import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from psklie.classify4d import abelian_structure, builtin_family
from psklie.conic_lift import (
    ConicSpace,
    LiftedForm,
    LiftPreconditionError,
    RingElem,
    anti_hermitian_residual,
    build_lift,
    degenerate_lift,
    exact_constants,
    flat_connection_check,
    kahler_form,
    lift_report,
    lifted_metric,
    torsion_residual,
)

SQ2 = np.sqrt(2)

ACCEPTED = {
    "III": (lambda: builtin_family("III", a=SQ2, b=2), [0, 1.5, 0, 0]),
    "VII": (lambda: builtin_family("VII"), None),
    "VIII": (lambda: builtin_family("VIII", a=SQ2, delta=sp.Rational(1, 2)), None),
    "IX": (lambda: builtin_family("IX", a=1 / SQ2, delta=2), None),
}


@pytest.fixture(scope="module", params=sorted(ACCEPTED))
def accepted_lift(request):
    make, cubic = ACCEPTED[request.param]
    lift = build_lift(make(), cubic)
    return request.param, lift, lift_report(lift)


def test_lift_residuals_are_exact_zeros(accepted_lift):
    case, lift, rep = accepted_lift
    assert rep.torsion == 0 and rep.curvature == 0
    assert rep.flatness.exact_zero, (case, rep.flatness)
    assert all(v == 0 for v in rep.invariants.residuals().values()), rep.invariants
    assert rep.invariants.eta_degree_ok
    assert rep.invariants.signature == (4, 2)
    assert rep.exact_zero


def test_connection_is_anti_hermitian(accepted_lift):
    _, lift, _ = accepted_lift
    assert anti_hermitian_residual(lift.connection, lift.n) == 0


def test_phase_rotated_deviance_still_flat():
    ks = builtin_family("III", a=SQ2, b=2)
    cubic = 1.5 * np.exp(1j * np.pi / 3) * np.array([0, 1, 0, 0])
    assert flat_connection_check(build_lift(ks, cubic)).exact_zero


def test_missing_deviance_is_not_flat():
    rep = lift_report(build_lift(builtin_family("III", a=SQ2, b=2)))
    assert rep.torsion == 0 and rep.curvature == 0
    assert rep.flatness.flat == 2


def test_wrong_deviance_is_not_flat():
    rep = flat_connection_check(build_lift(builtin_family("III", a=SQ2, b=2), [0, 1, 0, 0]))
    assert rep.flat > 0.1


def test_abelian_formal_lift_is_not_flat():
    rep = lift_report(build_lift(abelian_structure(), lam="formal"))
    assert rep.torsion == 0 and rep.curvature == 0
    assert rep.flatness.flat == 4
    assert not rep.exact_zero


def test_formal_mode_rejects_deviance():
    with pytest.raises(LiftPreconditionError):
        build_lift(abelian_structure(), [1, 0, 0, 0], lam="formal")
    with pytest.raises(ValueError):
        build_lift(abelian_structure(), lam="guess")


def test_bad_potential_rejected():
    with pytest.raises(LiftPreconditionError):
        build_lift(builtin_family("III", a=SQ2, b=2), [0, 1.5, 0, 0], lam=[0, 0, 0, 0])


def test_torsion_detects_broken_connection():
    lift = build_lift(builtin_family("VII"))
    conn = [row[:] for row in lift.connection]
    n = lift.n
    conn[n][n] = lift.space.zero()
    assert torsion_residual(conn, lift.theta) > 0.5


def test_degenerate_lift():
    lift = degenerate_lift()
    rep = lift_report(lift)
    assert rep.exact_zero and rep.invariants.signature == (0, 2)
    assert len(lift.theta) == 1


def test_contractions_with_euler_field():
    lift = build_lift(builtin_family("III", a=SQ2, b=2), [0, 1.5, 0, 0])
    s = lift.space
    om = kahler_form(lift)
    r2 = RingElem.monomial(1, 2, 0)
    # i_xi omega = -r^2 phi and i_{I xi} omega = r dr = d(r^2 / 2)
    assert s.interior(s.xi(), om) == lift.phi * (-r2)
    assert s.interior(s.i_xi(), om) == s.dr * RingElem.monomial(1, 1, 0)
    assert lift.lam == [0, -sp.sqrt(2) / 2, 0, -sp.Rational(1, 2)]


def test_metric_signature_at_other_points():
    g = lifted_metric(build_lift(builtin_family("VII")))
    for r, t in ((0.3, 1.0), (2.5, -2.0)):
        G = g.gram(r, t)
        ev = np.linalg.eigvalsh((G + G.conj().T) / 2)
        assert (np.sum(ev > 0), np.sum(ev < 0)) == (4, 2)


# ------------------------------------------------------------- ring and forms


def test_ring_canonical_form():
    a = RingElem.monomial(2, 1, 1)
    assert (a - a).is_zero() and (a - a).terms == {}
    assert RingElem.const(sp.sqrt(2)) * RingElem.const(sp.sqrt(2)) == RingElem.const(2)
    assert RingElem.const(0.5).terms == {(0, 0): sp.Rational(1, 2)}
    b = a * a.conj()
    assert b.degrees() == {(2, 0)}
    assert a.r_derivative() == a and a.theta_derivative() == a * sp.I
    assert np.isclose(a.evaluate(2.0, 0.3), 4 * np.exp(0.3j))


ring_terms = st.dictionaries(st.tuples(st.integers(-2, 2), st.integers(-2, 2)),
                             st.integers(-3, 3), max_size=3)


def _random_form(space, draw_terms, degree):
    terms = {}
    for gens, (k, m), c in draw_terms:
        gens = tuple(sorted(set(g % (space.D + 2) for g in gens)))
        if len(gens) == degree and c:
            terms[(gens, k, m)] = terms.get((gens, k, m), 0) + c
    return LiftedForm(space, terms)


@settings(max_examples=40)
@given(st.sampled_from(["III", "VI", "VIII"]), st.integers(0, 3),
       st.lists(st.tuples(st.lists(st.integers(0, 5), min_size=3, max_size=3),
                          st.tuples(st.integers(-2, 2), st.integers(-2, 2)),
                          st.integers(-3, 3)), max_size=6))
def test_d_squared_zero(case, degree, raw):
    space = ConicSpace(exact_constants(builtin_family(case)))
    raw = [(g[:degree], km, c) for g, km, c in raw]
    f = _random_form(space, raw, degree)
    assert f.d().d().is_zero()


@settings(max_examples=30)
@given(st.integers(0, 5), st.integers(0, 5), ring_terms, ring_terms)
def test_d_is_graded_leibniz(g1, g2, t1, t2):
    space = ConicSpace(exact_constants(builtin_family("VII")))
    a = space.gen(g1, RingElem(t1))
    b = space.gen(g2, RingElem(t2))
    lhs = (a ^ b).d()
    rhs = (a.d() ^ b) - (a ^ b.d())
    assert (lhs - rhs).is_zero()
