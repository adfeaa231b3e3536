"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (criterion 7 takes about two
minutes).  Each line is written straight to the terminal so it shows up
without ``-s``.
"""
import time
from itertools import permutations
from math import comb

import numpy as np
import pytest
import sympy as sp

from oracles import random_lie_algebra
from psklie.classify4d import (
    brute_force_solutions,
    builtin_family,
    classify,
    curvature_table,
    hausdorff_mod_phase,
    render_sigma,
    solve_type_i,
    solve_type_ii,
)
from psklie.conic_lift import (
    ConicSpace,
    LiftedForm,
    build_lift,
    definition_invariants,
    exact_constants,
    flat_connection_check,
    lift_curvature_check,
    torsion_residual,
)
from psklie.deviance import (
    bracket_blocks,
    cubic_to_eta,
    eta_norm,
    model_curvature,
    phase_rotate,
    proj_blocks,
    zero_deviance,
)
from psklie.lie_kahler import CurvatureTensor, LieAlgebraData, levi_civita, realify_blocks, ricci_scalar
from psklie.psk_verify import d1_residual, ricci_identity, scalar_bound_check, scalar_identity, verify
from psklie.tensor_core import AlternatingForm, FormMatrix, basis, ce_differential

TAU = 1e-9
SQ2 = np.sqrt(2)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def _mat(rows):
    M = np.zeros((4, 4, 4))
    for i, row in enumerate(rows):
        for j, entry in enumerate(row):
            for k, v in entry.items():
                M[i, j, k - 1] = v
    return M


def test_criterion_1_curvature_table(report):
    t0 = time.perf_counter()
    rows = curvature_table()
    elapsed = time.perf_counter() - t0
    bad = [(r.case, r.params) for r in rows if not (r.fit.residual < TAU and r.matches)]
    worst = max(r.fit.residual for r in rows)
    vi = next(r for r in rows if r.case == "VI").fit.coefficients
    ok = not bad and elapsed < 1 and np.allclose(vi, (0, -6, -1), atol=TAU)
    report(1, ok, f"{len(rows)} samples, mismatches {bad}, max fit residual {worst:.1e}, "
                  f"VI -> {vi}, {elapsed:.2f}s")


def test_criterion_2_levi_civita_tables(report):
    _ = {}
    q = 2.0
    expected = {
        "III": (dict(a=SQ2, b=2), [[_, {2: SQ2}, _, _], [{2: -SQ2}, _, _, _],
                                  [_, _, _, {4: 2}], [_, _, {4: -2}, _]]),
        "VI": (dict(a=1), [[_, {1: -2}, {4: 1}, {3: 1}], [{1: 2}, _, {3: -1}, {4: 1}],
                           [{4: -1}, {3: 1}, _, {1: -1}], [{3: -1}, {4: -1}, {1: 1}, _]]),
        # rows 3-4 in antisymmetric form; see the decisions ledger
        "VII": (dict(a=1), [[_, {4: 1}, {1: -1}, {2: 1}], [{4: -1}, _, {2: -1}, {1: -1}],
                            [{1: 1}, {2: 1}, _, {4: 2}], [{2: -1}, {1: 1}, {4: -2}, _]]),
        "VIII": (dict(a=1, delta=1), [[_, {3: q, 4: 1}, {1: -1}, {2: 1}], [{3: -q, 4: -1}, _, {2: -1}, {1: -1}],
                                      [{1: 1}, {2: 1}, _, {4: 2}], [{2: -1}, {1: 1}, {4: -2}, _]]),
        "IX": (dict(a=1, delta=1), [[_, {4: -q, 3: -1}, {2: -1}, {1: -1}], [{4: q, 3: 1}, _, {1: 1}, {2: -1}],
                                    [{2: 1}, {1: -1}, _, {3: -2}], [{1: 1}, {2: 1}, {3: 2}, _]]),
    }
    diffs = {}
    for case, (params, rows) in expected.items():
        conn = levi_civita(builtin_family(case, **params))
        diffs[case] = float(np.max(np.abs(conn.data - _mat(rows))))
    ok = all(v < 1e-12 for v in diffs.values())
    report(2, ok, "max |difference| " + ", ".join(f"{k} {v:.1e}" for k, v in diffs.items()))


def test_criterion_3_classification(report):
    t0 = time.perf_counter()
    rows = classify()
    elapsed = time.perf_counter() - t0
    halves = (sp.Rational(1, 2), 1, 2)
    accepted = sorted((r.case, str(r.params.get("delta", "-"))) for r in rows if r.status == "accepted")
    want = sorted([("III", "-"), ("VII", "-")] + [(c, str(d)) for c in ("VIII", "IX") for d in halves])
    iii = next(r for r in rows if r.case == "III")
    sigma_ok = (iii.status == "accepted" and iii.params == {"a": sp.sqrt(2), "b": 2}
                and iii.family.phase_parameterized and np.allclose(iii.cubic, [0, 1.5, 0, 0], atol=TAU))
    zero_ok = all(render_sigma(r) == "0" for r in rows if r.case in ("VII", "VIII", "IX"))
    reasons = {r.case: r.reason for r in rows if r.status == "rejected"}
    reasons_ok = reasons == {"VI": "D2 infeasible", **{c: "D1 unsolvable" for c in ("I", "II", "IV", "V")}}
    ok = accepted == want and sigma_ok and zero_ok and reasons_ok and elapsed < 10
    report(3, ok, f"accepted {len(accepted)} rows ({', '.join(sorted({c for c, _ in accepted}))}), "
                  f"III sigma {render_sigma(iii)}, rejections {reasons}, {elapsed:.2f}s")


def test_criterion_4_d2_witness(report):
    cases = [
        ("III", builtin_family("III", a=SQ2, b=2), [0, 1.5, 0, 0], [0, -1 / SQ2, 0, -0.5]),
        ("VII", builtin_family("VII"), None, [0, 0, 0, -0.5]),
    ]
    for d in (0.5, 1, 2):
        a = 1 / np.sqrt(d)
        cases.append((f"VIII({d})", builtin_family("VIII", a=a, delta=d), None, [0, 0, 0, -0.5]))
        cases.append((f"IX({d})", builtin_family("IX", a=a, delta=d), None, [0, 0, 0.5, 0]))
    errs = {}
    for name, ks, cubic, lam in cases:
        v = verify(ks, cubic_to_eta(cubic) if cubic else None)
        errs[name] = float(np.max(np.abs(v.d2_lambda.coeffs - lam))) if v.d2_feasible else np.inf
    ok = all(e < TAU for e in errs.values())
    report(4, ok, "max lambda error " + f"{max(errs.values()):.1e} over {', '.join(errs)}")


def test_criterion_5_scalar_identities(report):
    d3 = cubic_to_eta([0, 1.5, 0, 0])
    v3 = verify(builtin_family("III", a=SQ2, b=2), d3)
    v7 = verify(builtin_family("VII"))
    iii_ok = abs(v3.scal + 3) < TAU and v3.scalar_residual < TAU and abs(eta_norm(d3) - 3) < TAU
    vii_ok = abs(v7.scal + 6) < TAU and abs(scalar_bound_check(2, zero_deviance(2)) + 6) < TAU
    rng = np.random.default_rng(5)
    bound_ok, eq_ok = True, True
    for k in range(1000):
        scale = 0.0 if k == 0 else 10.0 ** rng.uniform(-8, 1)
        d = cubic_to_eta(scale * (rng.normal(size=4) + 1j * rng.normal(size=4)))
        s = scalar_bound_check(2, d)
        bound_ok &= s >= -6 - 1e-12
        eq_ok &= (abs(s + 6) < 1e-12) == (eta_norm(d) < 1e-12)
    ok = iii_ok and vii_ok and bound_ok and eq_ok
    report(5, ok, f"scal III {v3.scal:.12g} (|eta|^2 {eta_norm(d3):.12g}, residual {v3.scalar_residual:.1e}), "
                  f"scal VII {v7.scal:.12g}, 1000 random deviances: bound {bound_ok}, equality iff zero {eq_ok}")


def test_criterion_6_lift_exactness(report):
    structs = {
        "III": (builtin_family("III", a=SQ2, b=2), [0, 1.5, 0, 0]),
        "VII": (builtin_family("VII"), None),
        "VIII": (builtin_family("VIII", a=SQ2, delta=sp.Rational(1, 2)), None),
        "IX": (builtin_family("IX", a=1 / SQ2, delta=2), None),
    }
    details, ok = [], True
    for name, (ks, cubic) in structs.items():
        t0 = time.perf_counter()
        lift = build_lift(ks, cubic)
        tors = torsion_residual(lift.connection, lift.theta)
        curv = lift_curvature_check(lift)
        flat = flat_connection_check(lift)
        inv = definition_invariants(lift)
        elapsed = time.perf_counter() - t0
        exact = (tors == 0 and curv == 0 and flat.exact_zero and inv.exact_zero(lift.n))
        ok &= exact and elapsed < 5
        details.append(f"{name} {'exact' if exact else 'NONZERO'} {elapsed:.2f}s")
    report(6, ok, "; ".join(details))


def _type_i_grid():
    vals = [0.5, 1.0, SQ2, 1.7, 2.0]
    return [(a, b) for a in vals for b in vals]


def test_criterion_7_oracle_equivalence(report):
    t0 = time.perf_counter()
    h1, h2, proj = (model_curvature(k).real.data for k in ("h1", "h2", "proj"))
    cases = [("i", a, b, solve_type_i(a, b), a * a * h1 + b * b * h2) for a, b in _type_i_grid()]
    for a, b in ((1.0, 1), (1.0, 0), (1 / SQ2, 0), (1 / SQ2, 1), (0.5, 1)):
        cases.append(("ii", a, b, solve_type_ii(a, b), -a * a * (proj + 6 * b * h2)))
    bad, nonempty, worst = [], 0, 0.0
    for kind, a, b, fam, data in cases:
        res = brute_force_solutions(CurvatureTensor(FormMatrix(4, 2, data)), trials=10_000, seed=1)
        agree = (len(res.points) > 0) == fam.nonempty
        dist = hausdorff_mod_phase(res.points, fam) if agree else np.inf
        if fam.nonempty:
            nonempty += 1
            worst = max(worst, dist)
        if not agree or dist >= 1e-3:
            bad.append((kind, round(a, 4), b))
    ok = not bad
    report(7, ok, f"{len(cases)} grid points ({nonempty} nonempty), disagreements {bad}, "
                  f"max distance {worst:.1e}, {time.perf_counter() - t0:.0f}s")


def test_criterion_8_property_suites(report):
    rng = np.random.default_rng(8)
    checks = {}

    def form(D, k):
        m = len(basis(D, k))
        return AlternatingForm(D, k, rng.normal(size=m) + 1j * rng.normal(size=m))

    err = 0.0
    for _ in range(100):
        p, q, r = rng.integers(0, 4, size=3)
        x, y, z = form(6, p), form(6, q), form(6, r)
        err = max(err, float(np.max(np.abs(((x ^ y) ^ z).coeffs - (x ^ (y ^ z)).coeffs), initial=0)),
                  float(np.max(np.abs((x ^ y).coeffs - (-1) ** (p * q) * (y ^ x).coeffs), initial=0)))
    checks["wedge"] = err < 1e-12

    err = 0.0
    for _ in range(50):
        D = int(rng.integers(3, 7))
        alg = LieAlgebraData(random_lie_algebra(rng, D))
        f = form(D, int(rng.integers(0, D - 1)))
        err = max(err, ce_differential(ce_differential(f, alg), alg).max_abs())
    checks["d^2 base"] = err < 1e-11

    space = ConicSpace(exact_constants(builtin_family("VIII", delta=1)))
    lifted_ok = True
    for _ in range(30):
        deg = int(rng.integers(0, 4))
        terms = {}
        for _ in range(4):
            gens = tuple(sorted(rng.choice(space.D + 2, size=deg, replace=False).tolist()))
            terms[(gens, int(rng.integers(-2, 3)), int(rng.integers(-2, 3)))] = int(rng.integers(-3, 4))
        lifted_ok &= LiftedForm(space, terms).d().d().is_zero()
    checks["d^2 lifted"] = lifted_ok

    err = 0.0
    for _ in range(100):
        d = cubic_to_eta(rng.normal(size=4) + 1j * rng.normal(size=4))
        a, b = bracket_blocks(phase_rotate(d, rng.uniform(0, 2 * np.pi))), bracket_blocks(d)
        err = max(err, max(float(np.max(np.abs(a[k] - b[k]))) for k in a))
    checks["phase invariance"] = err < 1e-12

    sym_ok, herm = True, 0.0
    for t in range(1000):
        n = 1 + t % 3
        m = comb(n + 2, 3)
        d = cubic_to_eta(rng.normal(size=m) + 1j * rng.normal(size=m), n)
        sym_ok &= all(np.array_equal(d.eta, d.eta.transpose(p)) for p in permutations(range(3)))
        B = bracket_blocks(d)
        herm = max(herm, max(float(np.max(np.abs(B[(k, h)] - B[(h, k)].conj().T))) for k, h in B))
    checks["total symmetry"] = sym_ok
    checks["hermitian blocks"] = herm < 1e-13

    err = 0.0
    for t in range(100):
        n = 1 + t % 3
        m = comb(n + 2, 3)
        d = cubic_to_eta(rng.normal(size=m) + 1j * rng.normal(size=m), n)
        P, B = proj_blocks(n), bracket_blocks(d)
        R = realify_blocks({k: -(P[k] + B[k]) for k in P}, n)
        Ric, scal = ricci_scalar(R)
        err = max(err, d1_residual(R, d), ricci_identity(Ric, np.eye(2 * n), d), scalar_identity(scal, n, d))
    checks["trace consistency"] = err < TAU

    ok = all(checks.values())
    report(8, ok, ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items()))
