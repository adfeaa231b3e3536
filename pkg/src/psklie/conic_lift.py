"""Exact exterior calculus on the conic space M x R+ x S^1 over a Lie-group base.

Lifted forms live over the generators pi*u^1..pi*u^D, dr, dtheta (indices
0..D-1, D, D+1) with coefficients in the Laurent-Fourier ring spanned by
r^k e^{i m theta}.  Coefficients are sympy expressions, so every residual
computed here is either an exact zero or visibly nonzero.

With lambda a potential for the Kähler form (d lambda = omega) the lift uses

    phi = dtheta - 2 pi*lambda,
    Theta^k = r pi*theta^k (k <= n),  Theta^{n+1} = dr + i r phi,

and the Levi-Civita matrix [[pi*W + i phi Id, pi*theta], [pi*theta^*, i phi]]
for the base complex connection W (d theta = -W ^ theta).  The deviance
enters through the (n+1) x (n+1) block E[j, h] = e^{2 i theta} eta^j_{kh}
pi*theta^k of the complexified connection; in the lifted frame its
components carry the factor r^{-1} e^{2 i theta}.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Optional, Sequence

import numpy as np
import sympy as sp

from .deviance import Deviance, monomials
from .lie_kahler import KahlerStructure, christoffel, unitary_coframe
from .psk_verify import d2_system, sigma_real
from .tensor_core import _sort_sign, basis


class LiftPreconditionError(ValueError):
    """The base data does not admit the requested lift."""


def _canon(c):
    c = sp.expand(c)
    if c != 0 and c.is_number and abs(complex(c.evalf(40))) < 1e-30:
        c = sp.nsimplify(sp.simplify(c))
    return c


def exact(v):
    """Sympy form of a number; floats that are ints or simple radicals are recognised."""
    if isinstance(v, sp.Basic):
        return v
    if isinstance(v, (int, np.integer)):
        return sp.Integer(int(v))
    v = complex(v)
    parts = []
    for x in (v.real, v.imag):
        if x == int(x):
            parts.append(sp.Integer(int(x)))
        else:
            guess = sp.nsimplify(x, [sp.sqrt(2), sp.sqrt(3)], tolerance=1e-13)
            parts.append(guess if abs(float(guess) - x) < 1e-14 else sp.Float(x, 17))
    return parts[0] + sp.I * parts[1]


class RingElem:
    """Finite sum of coeff * r^k * e^{i m theta}, one term per (k, m)."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        out = {}
        for key, c in (terms or {}).items():
            c = _canon(c)
            if c != 0:
                out[key] = c
        self.terms = out

    @classmethod
    def const(cls, c) -> "RingElem":
        return cls({(0, 0): exact(c)})

    @classmethod
    def monomial(cls, c, k: int, m: int) -> "RingElem":
        return cls({(k, m): exact(c)})

    def __add__(self, other) -> "RingElem":
        other = _as_ring(other)
        t = dict(self.terms)
        for key, c in other.terms.items():
            t[key] = t.get(key, 0) + c
        return RingElem(t)

    __radd__ = __add__

    def __neg__(self) -> "RingElem":
        return RingElem({k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "RingElem":
        return self + (-_as_ring(other))

    def __mul__(self, other) -> "RingElem":
        other = _as_ring(other)
        t = {}
        for (k1, m1), a in self.terms.items():
            for (k2, m2), b in other.terms.items():
                key = (k1 + k2, m1 + m2)
                t[key] = t.get(key, 0) + a * b
        return RingElem(t)

    __rmul__ = __mul__

    def conj(self) -> "RingElem":
        return RingElem({(k, -m): sp.conjugate(c) for (k, m), c in self.terms.items()})

    def r_derivative(self) -> "RingElem":
        """r d/dr, i.e. the derivative along xi = r d_r."""
        return RingElem({(k, m): k * c for (k, m), c in self.terms.items()})

    def theta_derivative(self) -> "RingElem":
        return RingElem({(k, m): sp.I * m * c for (k, m), c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def degrees(self) -> set:
        return set(self.terms)

    def max_abs(self) -> float:
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    def evaluate(self, r: float, theta: float) -> complex:
        return sum(complex(c) * r**k * np.exp(1j * m * theta) for (k, m), c in self.terms.items())

    def __eq__(self, other) -> bool:
        return (self - _as_ring(other)).is_zero()

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*r^{k}*e^({m}i t)" for (k, m), c in sorted(self.terms.items()))


def _as_ring(x) -> RingElem:
    return x if isinstance(x, RingElem) else RingElem.const(x)


class LiftedForm:
    """Differential form on the conic space; terms {(gens, k, m): coeff}."""

    __slots__ = ("space", "terms")

    def __init__(self, space: "ConicSpace", terms=None):
        self.space = space
        out = {}
        for key, c in (terms or {}).items():
            c = _canon(c)
            if c != 0:
                out[key] = c
        self.terms = out

    def _new(self, terms) -> "LiftedForm":
        return LiftedForm(self.space, terms)

    def __add__(self, other: "LiftedForm") -> "LiftedForm":
        t = dict(self.terms)
        for key, c in other.terms.items():
            t[key] = t.get(key, 0) + c
        return self._new(t)

    def __neg__(self) -> "LiftedForm":
        return self._new({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "LiftedForm") -> "LiftedForm":
        return self + (-other)

    def __mul__(self, f) -> "LiftedForm":
        f = _as_ring(f)
        t = {}
        for (g, k, m), c in self.terms.items():
            for (k2, m2), a in f.terms.items():
                key = (g, k + k2, m + m2)
                t[key] = t.get(key, 0) + a * c
        return self._new(t)

    __rmul__ = __mul__

    def __xor__(self, other: "LiftedForm") -> "LiftedForm":
        t = {}
        for (g1, k1, m1), a in self.terms.items():
            for (g2, k2, m2), b in other.terms.items():
                s, g = _sort_sign(g1 + g2)
                if s:
                    key = (g, k1 + k2, m1 + m2)
                    t[key] = t.get(key, 0) + s * a * b
        return self._new(t)

    def conj(self) -> "LiftedForm":
        return self._new({(g, k, -m): sp.conjugate(c) for (g, k, m), c in self.terms.items()})

    def d(self) -> "LiftedForm":
        return self.space.d(self)

    def degrees(self) -> set:
        return {len(g) for g, _, _ in self.terms}

    def coefficient(self, gens: Sequence[int]) -> RingElem:
        s, g = _sort_sign(tuple(gens))
        return RingElem({(k, m): s * c for (gg, k, m), c in self.terms.items() if gg == g})

    def is_zero(self) -> bool:
        return not self.terms

    def max_abs(self) -> float:
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    def __eq__(self, other) -> bool:
        return (self - other).is_zero()

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        names = self.space.names
        parts = []
        for (g, k, m), c in sorted(self.terms.items()):
            mono = "^".join(names[i] for i in g) or "1"
            parts.append(f"({c})*r^{k}*e^({m}i t)*{mono}")
        return " + ".join(parts)


class ConicSpace:
    """Generators and exterior derivative of the conic space over a Lie algebra."""

    def __init__(self, c_exact, formal_omega: Optional[dict] = None):
        c = np.asarray(c_exact, dtype=object)
        self.D = c.shape[0] if c.ndim == 3 else 0
        self.c = c
        self.DR, self.DT = self.D, self.D + 1
        # formal mode: the last generator is phi itself, with d phi = -2 pi*omega
        self.formal = formal_omega is not None
        self._dphi = {g: _canon(-2 * exact(v)) for g, v in (formal_omega or {}).items()}
        self.names = [f"u{i + 1}" for i in range(self.D)] + ["dr", "phi" if self.formal else "dt"]
        self._du = []
        for k in range(self.D):
            self._du.append({(p, q): _canon(-c[k, p, q]) for p, q in basis(self.D, 2) if _canon(c[k, p, q]) != 0})

    def zero(self) -> LiftedForm:
        return LiftedForm(self)

    def function(self, f) -> LiftedForm:
        f = _as_ring(f)
        return LiftedForm(self, {((), k, m): c for (k, m), c in f.terms.items()})

    def gen(self, i: int, f=1) -> LiftedForm:
        f = _as_ring(f)
        return LiftedForm(self, {((i,), k, m): c for (k, m), c in f.terms.items()})

    @property
    def dr(self) -> LiftedForm:
        return self.gen(self.DR)

    @property
    def dtheta(self) -> LiftedForm:
        return self.gen(self.DT)

    def pullback(self, values: Sequence) -> LiftedForm:
        """pi* of the base 1-form sum values[p] u^p."""
        return LiftedForm(self, {((p,), 0, 0): exact(v) for p, v in enumerate(values)})

    def pullback_form(self, comps: dict) -> LiftedForm:
        """pi* of a base form given as {increasing index tuple: coeff}."""
        return LiftedForm(self, {(tuple(g), 0, 0): exact(v) for g, v in comps.items()})

    def d(self, form: LiftedForm) -> LiftedForm:
        t = {}

        def add(key, v):
            t[key] = t.get(key, 0) + v

        for (g, k, m), c in form.terms.items():
            if k:
                s, gg = _sort_sign((self.DR,) + g)
                if s:
                    add((gg, k - 1, m), s * k * c)
            if m:
                if self.formal:
                    raise LiftPreconditionError("phase factors need a potential, not a formal connection form")
                s, gg = _sort_sign((self.DT,) + g)
                if s:
                    add((gg, k, m), s * sp.I * m * c)
            for pos, i in enumerate(g):
                if i == self.DT and self.formal:
                    du = self._dphi
                elif i >= self.D:
                    continue
                else:
                    du = self._du[i]
                for pq, a in du.items():
                    s, gg = _sort_sign(g[:pos] + pq + g[pos + 1:])
                    if s:
                        add((gg, k, m), (-1) ** pos * s * a * c)
        return LiftedForm(self, t)

    def interior(self, vec: dict, form: LiftedForm) -> LiftedForm:
        """Contraction with the vector whose generator values are vec[g] (RingElems)."""
        out = self.zero()
        for (g, k, m), c in form.terms.items():
            for pos, i in enumerate(g):
                if i in vec:
                    rest = g[:pos] + g[pos + 1:]
                    term = LiftedForm(self, {(rest, k, m): (-1) ** pos * c})
                    out = out + term * vec[i]
        return out

    def lie(self, vec: dict, form: LiftedForm) -> LiftedForm:
        """Cartan formula L_V = i_V d + d i_V."""
        return self.interior(vec, self.d(form)) + self.d(self.interior(vec, form))

    def xi(self) -> dict:
        """The Euler field r d_r."""
        return {self.DR: RingElem.monomial(1, 1, 0)}

    def i_xi(self) -> dict:
        """I xi = d_theta."""
        return {self.DT: RingElem.const(1)}


# ----------------------------------------------------------- symmetric tensors


class SymTensor:
    """Symmetric 2-tensor; entries {(g, h, k, m): coeff} with g <= h hold S[g, h]."""

    __slots__ = ("space", "terms")

    def __init__(self, space: ConicSpace, terms=None):
        self.space = space
        out = {}
        for key, c in (terms or {}).items():
            c = _canon(c)
            if c != 0:
                out[key] = c
        self.terms = out

    @classmethod
    def product(cls, a: LiftedForm, b: LiftedForm) -> "SymTensor":
        """(a (x) b + b (x) a) / 2 for 1-forms a, b."""
        t = {}
        half = sp.Rational(1, 2)
        for ((g,), k1, m1), x in a.terms.items():
            for ((h,), k2, m2), y in b.terms.items():
                key = (min(g, h), max(g, h), k1 + k2, m1 + m2)
                t[key] = t.get(key, 0) + (x * y if g == h else half * x * y)
        return cls(a.space, t)

    def __add__(self, other: "SymTensor") -> "SymTensor":
        t = dict(self.terms)
        for key, c in other.terms.items():
            t[key] = t.get(key, 0) + c
        return SymTensor(self.space, t)

    def __neg__(self) -> "SymTensor":
        return SymTensor(self.space, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        return self + (-other)

    def __mul__(self, s) -> "SymTensor":
        return SymTensor(self.space, {k: exact(s) * c for k, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def max_abs(self) -> float:
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    def gram(self, r: float = 1.0, theta: float = 0.0) -> np.ndarray:
        N = self.space.D + 2
        G = np.zeros((N, N), dtype=complex)
        for (g, h, k, m), c in self.terms.items():
            v = complex(c) * r**k * np.exp(1j * m * theta)
            G[g, h] += v
            if g != h:
                G[h, g] += v
        return G


# ------------------------------------------------------------- matrix helpers

Matrix = list  # list of rows of LiftedForm


def mat_wedge(A: Matrix, B: Matrix) -> Matrix:
    if not A or not B or not B[0]:
        return [[] for _ in A] if not B or not B[0] else []
    space = A[0][0].space if A[0] else B[0][0].space
    out = []
    for i in range(len(A)):
        row = []
        for k in range(len(B[0])):
            acc = space.zero()
            for j in range(len(B)):
                if A[i][j].terms and B[j][k].terms:
                    acc = acc + (A[i][j] ^ B[j][k])
            row.append(acc)
        out.append(row)
    return out


def mat_add(A: Matrix, B: Matrix) -> Matrix:
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_sub(A: Matrix, B: Matrix) -> Matrix:
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_d(A: Matrix) -> Matrix:
    return [[a.d() for a in row] for row in A]


def mat_conj(A: Matrix) -> Matrix:
    return [[a.conj() for a in row] for row in A]


def mat_max_abs(A: Matrix) -> float:
    return max((a.max_abs() for row in A for a in row), default=0.0)


def mat_is_zero(A: Matrix) -> bool:
    return all(a.is_zero() for row in A for a in row)


def _blocks2(A: Matrix, B: Matrix, C: Matrix, Dm: Matrix) -> Matrix:
    return [ra + rb for ra, rb in zip(A, B)] + [rc + rd for rc, rd in zip(C, Dm)]


# ---------------------------------------------------------- exact base data


def exact_constants(ks: KahlerStructure) -> np.ndarray:
    alg = ks.alg
    if alg.exact is not None:
        return np.asarray(alg.exact, dtype=object)
    return np.vectorize(exact, otypes=[object])(alg.c)


def exact_coframe(ks: KahlerStructure) -> np.ndarray:
    return np.vectorize(exact, otypes=[object])(unitary_coframe(ks))


def exact_sigma(cubic: Sequence, n: int) -> np.ndarray:
    """Totally symmetric sigma tensor (object array) from monomial coefficients."""
    sig = np.full((n, n, n), sp.Integer(0), dtype=object)
    cubic = [exact(c) for c in cubic]
    mons = monomials(n)
    if len(cubic) != len(mons):
        raise ValueError(f"expected {len(mons)} cubic coefficients, got {len(cubic)}")
    for val, M in zip(cubic, mons):
        perms = set(permutations(M))
        for P in perms:
            sig[P] = val / len(perms)
    return sig


def _conj_arr(a: np.ndarray) -> np.ndarray:
    return np.vectorize(sp.conjugate, otypes=[object])(a)


def _canon_arr(a: np.ndarray) -> np.ndarray:
    return np.vectorize(_canon, otypes=[object])(a)


def exact_potential(ks: KahlerStructure, sigma: np.ndarray, c=None, Z=None) -> list:
    """Minimal-norm lambda with d lambda = omega solving the D2 equation, exactly."""
    c = exact_constants(ks) if c is None else c
    Z = exact_coframe(ks) if Z is None else Z
    G = christoffel(c)
    d = Deviance(ks.n, sigma)
    S = _canon_arr(sigma_real(d, Z))
    A1, b1, A2, b2 = d2_system(ks, d, G=G, Z=Z, S=S, unit=sp.I)
    rows = {}
    for a_row, b in list(zip(A1, b1)) + [(r, v) for r, v in zip(A2, b2)]:
        vals = [_canon(x) for x in list(a_row) + [b]]
        re = tuple(_canon(sp.re(x)) for x in vals)
        im = tuple(_canon(sp.im(x)) for x in vals)
        for row in (re, im):
            if any(x != 0 for x in row):
                rows[row] = None
    if not rows:
        return [sp.Integer(0)] * ks.dim
    M = sp.Matrix([list(r) for r in rows])
    A, b = M[:, :-1], M[:, -1]
    lam = A.pinv() * b
    lam = [sp.nsimplify(sp.simplify(x)) for x in lam]
    res = [_canon(x) for x in (A * sp.Matrix(lam) - b)]
    if any(x != 0 for x in res):
        raise LiftPreconditionError("no left-invariant potential solves the D2 equation")
    return lam


def _base_connection(G: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Complex connection W[k, l, s] with d theta = -W ^ theta (object array)."""
    conn = G.transpose(0, 2, 1)  # conn[p, q, s] = w^p_q(e_s)
    half = _conj_arr(Z) / 2
    return _canon_arr(np.einsum("pk,pqs,ql->kls", Z, conn, half))


# ------------------------------------------------------------------ the lift


@dataclass
class ConicLift:
    space: ConicSpace
    n: int
    Z: np.ndarray
    lam: list
    sigma: np.ndarray
    theta: list  # lifted coframe, n + 1 entries
    phi: LiftedForm
    W: np.ndarray  # base complex connection coefficients
    connection: Matrix  # lifted Levi-Civita matrix

    @property
    def N(self) -> int:
        return self.n + 1

    @property
    def eta(self) -> np.ndarray:
        return 2 * self.sigma


def lift_coframe(space: ConicSpace, Z: np.ndarray, lam: Sequence, omega=None) -> tuple[list, LiftedForm]:
    """Lifted coframe (Theta^1..Theta^{n+1}) and phi = dtheta - 2 pi*lambda."""
    D = space.D
    n = D // 2
    lam = [exact(x) for x in lam]
    if D and not space.formal:
        if omega is None:
            omega = {(2 * k, 2 * k + 1): 1 for k in range(n)}
        dlam = space.d(space.pullback(lam))
        if not (dlam - space.pullback_form(omega)).is_zero():
            raise LiftPreconditionError("d lambda differs from the Kähler form")
    if space.formal:
        phi = space.dtheta
    elif D:
        phi = space.dtheta - space.pullback(lam) * 2
    else:
        phi = space.dtheta
    r = RingElem.monomial(1, 1, 0)
    theta = [space.pullback([Z[p, k] for p in range(D)]) * r for k in range(n)]
    theta.append(space.dr + phi * RingElem.monomial(sp.I, 1, 0))
    return theta, phi


def lifted_lc(space: ConicSpace, Z: np.ndarray, W: np.ndarray, phi: LiftedForm) -> Matrix:
    n = Z.shape[1] if Z.size else 0
    D = space.D
    iphi = phi * sp.I
    M = [[space.zero() for _ in range(n + 1)] for _ in range(n + 1)]
    for k in range(n):
        for h in range(n):
            M[k][h] = space.pullback([W[k, h, s] for s in range(D)])
        M[k][k] = M[k][k] + iphi
        th = space.pullback([Z[p, k] for p in range(D)])
        M[k][n] = th
        M[n][k] = th.conj()
    M[n][n] = iphi
    return M


def build_lift(ks: KahlerStructure, cubic: Optional[Sequence] = None, lam=None) -> ConicLift:
    """Lift of a Kähler Lie algebra with constant deviance given by cubic coefficients.

    `lam` defaults to the exact minimal-norm D2 potential.  ``lam="formal"``
    replaces dtheta by a generator phi with d phi = -2 pi*omega, which works
    when omega has no left-invariant potential (e.g. abelian bases) but
    forbids phase-dependent coefficients.
    """
    c = exact_constants(ks)
    Z = exact_coframe(ks)
    n = ks.n
    sigma = exact_sigma(cubic, n) if cubic is not None else np.full((n, n, n), sp.Integer(0), dtype=object)
    omega = {(i, j): sp.re(exact(v)) for (i, j), v in ks.omega.components().items() if v != 0}
    if isinstance(lam, str):
        if lam != "formal":
            raise ValueError(f"unknown potential mode {lam!r}")
        if any(x != 0 for x in sigma.ravel()):
            raise LiftPreconditionError("a formal connection form supports zero deviance only")
        space = ConicSpace(c, omega)
        lam = [sp.Integer(0)] * ks.dim
    else:
        if lam is None:
            lam = exact_potential(ks, sigma, c, Z)
        space = ConicSpace(c)
    theta, phi = lift_coframe(space, Z, lam, omega)
    W = _base_connection(christoffel(c), Z)
    conn = lifted_lc(space, Z, W, phi)
    return ConicLift(space, n, Z, [exact(x) for x in lam], sigma, theta, phi, W, conn)


def degenerate_lift() -> ConicLift:
    """The n = 0 lift: a single coframe element dr + i r dtheta."""
    space = ConicSpace(np.zeros((0, 0, 0), dtype=object))
    Z = np.zeros((0, 0), dtype=object)
    theta, phi = lift_coframe(space, Z, [])
    W = np.zeros((0, 0, 0), dtype=object)
    return ConicLift(space, 0, Z, [], np.zeros((0, 0, 0), dtype=object), theta, phi, W,
                     lifted_lc(space, Z, W, phi))


# ------------------------------------------------------------------ residuals


def torsion(connection: Matrix, theta: list) -> list:
    col = [[t] for t in theta]
    wt = mat_wedge(connection, col)
    return [t.d() + wt[i][0] for i, t in enumerate(theta)]


def torsion_residual(connection: Matrix, theta: list) -> float:
    return max((t.max_abs() for t in torsion(connection, theta)), default=0.0)


def lift_curvature(connection: Matrix) -> Matrix:
    return mat_add(mat_d(connection), mat_wedge(connection, connection))


def base_curvature_matrix(lift: ConicLift) -> Matrix:
    """pi* of the base complex curvature, via the real Levi-Civita curvature."""
    space, D, n = lift.space, lift.space.D, lift.n
    G = christoffel(space.c)
    real_conn = [[space.pullback([G[p, s, q] for s in range(D)]) for q in range(D)] for p in range(D)]
    R = lift_curvature(real_conn)
    Z = lift.Z
    half = _conj_arr(Z) / 2
    out = []
    for k in range(n):
        row = []
        for l in range(n):
            acc = space.zero()
            for p in range(D):
                for q in range(D):
                    coef = _canon(Z[p, k] * half[q, l])
                    if coef != 0 and R[p][q].terms:
                        acc = acc + R[p][q] * coef
            row.append(acc)
        out.append(row)
    return out


def _bar_theta_theta(lift: ConicLift, k: int, h: int) -> LiftedForm:
    space, D = lift.space, lift.space.D
    th = lambda j: space.pullback([lift.Z[p, j] for p in range(D)])
    return th(k).conj() ^ th(h)


def projective_curvature_matrix(lift: ConicLift) -> Matrix:
    """pi* of sum conj(theta^k) ^ theta^h (x) (-E_{hk} - delta_{kh} Id)."""
    n, space = lift.n, lift.space
    M = [[space.zero() for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for h in range(n):
            f = _bar_theta_theta(lift, k, h)
            M[h][k] = M[h][k] - f
            if k == h:
                for a in range(n):
                    M[a][a] = M[a][a] - f
    return M


def _pad(M: Matrix, space: ConicSpace) -> Matrix:
    n = len(M)
    out = [[space.zero() for _ in range(n + 1)] for _ in range(n + 1)]
    for i in range(n):
        for j in range(n):
            out[i][j] = M[i][j]
    return out


def lift_curvature_check(lift: ConicLift) -> float:
    """Residual of curv(lifted LC) = blockdiag(pi*(Omega^LC + Omega_P), 0)."""
    target = _pad(mat_add(base_curvature_matrix(lift), projective_curvature_matrix(lift)), lift.space)
    return mat_max_abs(mat_sub(lift_curvature(lift.connection), target))


def deviance_block(lift: ConicLift) -> Matrix:
    """E[j, h] = e^{2 i theta} sum_k eta^j_{kh} pi*theta^k, padded to (n+1) x (n+1)."""
    n, space, D = lift.n, lift.space, lift.space.D
    E = [[space.zero() for _ in range(n + 1)] for _ in range(n + 1)]
    phase = RingElem.monomial(1, 0, 2)
    eta = lift.eta
    for j in range(n):
        for h in range(n):
            vals = [sum(eta[j, k, h] * lift.Z[p, k] for k in range(n)) for p in range(D)]
            E[j][h] = space.pullback(vals) * phase
    return E


def full_connection(lift: ConicLift, with_deviance: bool = True) -> Matrix:
    """2(n+1) x 2(n+1) complex connection on (e_1..e_{n+1}, conj e_1..conj e_{n+1})."""
    W = lift.connection
    E = deviance_block(lift)
    if not with_deviance:
        E = [[lift.space.zero() for _ in row] for row in E]
    return _blocks2(W, mat_conj(E), E, mat_conj(W))


@dataclass(frozen=True)
class FlatnessReport:
    flat: float  # max coefficient of the curvature of the full connection
    bracket_identity: float  # conj(E) ^ E = pi*[eta ^ conj(eta)]
    derivative_identity: float  # lifted covariant derivative of E = e^{2 i theta} pi*(d^LC eta + 4 i lambda ^ eta)

    @property
    def exact_zero(self) -> bool:
        return self.flat == 0 and self.bracket_identity == 0 and self.derivative_identity == 0


def _base_bracket_matrix(lift: ConicLift) -> Matrix:
    n, space = lift.n, lift.space
    eta = lift.eta
    blocks = np.einsum("akj,jhb->khab", _conj_arr(eta), eta)
    M = [[space.zero() for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for h in range(n):
            f = _bar_theta_theta(lift, k, h)
            for a in range(n):
                for b in range(n):
                    coef = _canon(blocks[k, h, a, b])
                    if coef != 0:
                        M[a][b] = M[a][b] + f * coef
    return M


def _base_eta_derivative(lift: ConicLift) -> Matrix:
    """pi*(d E0 + E0 ^ W + conj(W) ^ E0 + 4 i lambda ^ E0) with E0 the base deviance matrix."""
    n, space, D = lift.n, lift.space, lift.space.D
    eta = lift.eta
    E0 = [[space.pullback([sum(eta[j, k, h] * lift.Z[p, k] for k in range(n)) for p in range(D)])
           for h in range(n)] for j in range(n)]
    Wb = [[space.pullback([lift.W[k, h, s] for s in range(D)]) for h in range(n)] for k in range(n)]
    lam = space.pullback(lift.lam) * (4 * sp.I)
    out = mat_add(mat_d(E0), mat_add(mat_wedge(E0, Wb), mat_wedge(mat_conj(Wb), E0)))
    return [[out[j][h] + (lam ^ E0[j][h]) for h in range(n)] for j in range(n)]


def flat_connection_check(lift: ConicLift) -> FlatnessReport:
    N = lift.N
    F = full_connection(lift)
    curv = lift_curvature(F)
    E = deviance_block(lift)
    top = mat_wedge(mat_conj(E), E)
    target_top = _pad(_base_bracket_matrix(lift), lift.space)
    bracket = mat_max_abs(mat_sub(top, target_top))
    W = lift.connection
    lower = mat_add(mat_d(E), mat_add(mat_wedge(E, W), mat_wedge(mat_conj(W), E)))
    phase = RingElem.monomial(1, 0, 2)
    target_low = _pad([[f * phase for f in row] for row in _base_eta_derivative(lift)], lift.space)
    derivative = mat_max_abs(mat_sub(lower, target_low))
    flat = max(mat_max_abs([row[:N] for row in curv[:N]]), mat_max_abs(curv))
    return FlatnessReport(flat, bracket, derivative)


# ------------------------------------------------------- definition invariants


def lifted_metric(lift: ConicLift) -> SymTensor:
    """sum_{k <= n} conj(Theta^k) Theta^k - conj(Theta^{n+1}) Theta^{n+1}."""
    g = SymTensor(lift.space)
    for k, t in enumerate(lift.theta):
        term = SymTensor.product(t.conj(), t)
        g = g - term if k == lift.n else g + term
    return g


def metric_from_base(lift: ConicLift) -> SymTensor:
    """r^2 pi*g - r^2 phi^2 - dr^2."""
    space, D = lift.space, lift.space.D
    r2 = RingElem.monomial(1, 2, 0)
    g = SymTensor(space)
    for p in range(D):
        u = space.gen(p)
        g = g + SymTensor.product(u * r2, u)
    g = g - SymTensor.product(lift.phi * r2, lift.phi)
    return g - SymTensor.product(space.dr, space.dr)


def kahler_form(lift: ConicLift) -> LiftedForm:
    """(i/2) sum eps_k Theta^k ^ conj(Theta^k), eps = (1, .., 1, -1)."""
    out = lift.space.zero()
    for k, t in enumerate(lift.theta):
        term = (t ^ t.conj()) * (sp.I / 2)
        out = out - term if k == lift.n else out + term
    return out


def kahler_form_from_base(lift: ConicLift) -> LiftedForm:
    """r^2 pi*omega + r phi ^ dr."""
    space = lift.space
    om = space.pullback_form({(2 * k, 2 * k + 1): 1 for k in range(lift.n)})
    return om * RingElem.monomial(1, 2, 0) + (lift.phi ^ space.dr) * RingElem.monomial(1, 1, 0)


def _covariant(F: Matrix, comps: list) -> list:
    space = F[0][0].space
    out = []
    for i in range(len(F)):
        acc = space.function(comps[i]).d()
        for j in range(len(F)):
            if not comps[j].is_zero():
                acc = acc + F[i][j] * comps[j]
        out.append(acc)
    return out


@dataclass(frozen=True)
class InvariantReport:
    nabla_lc_xi: float
    nabla_xi: float
    nabla_i_xi: float
    homothety: float
    moment_map: float
    anti_hermitian: float
    metric_routes: float
    kahler_form_routes: float
    eta_degree_ok: bool
    eta_scaling: float
    signature: tuple

    def residuals(self) -> dict:
        return {
            "nabla_lc_xi": self.nabla_lc_xi,
            "nabla_xi": self.nabla_xi,
            "nabla_i_xi": self.nabla_i_xi,
            "homothety": self.homothety,
            "moment_map": self.moment_map,
            "anti_hermitian": self.anti_hermitian,
            "metric_routes": self.metric_routes,
            "kahler_form_routes": self.kahler_form_routes,
            "eta_scaling": self.eta_scaling,
        }

    def exact_zero(self, n: int) -> bool:
        return (all(v == 0 for v in self.residuals().values()) and self.eta_degree_ok
                and self.signature == (2 * n, 2))


def anti_hermitian_residual(connection: Matrix, n: int) -> float:
    """Residual of w + G^{-1} conj(w)^T G with G = diag(1, .., 1, -1)."""
    N = len(connection)
    eps = [1] * n + [-1]
    worst = 0.0
    for i in range(N):
        for j in range(N):
            s = eps[i] * eps[j]
            e = connection[i][j] + connection[j][i].conj() * s
            worst = max(worst, e.max_abs())
    return worst


def definition_invariants(lift: ConicLift) -> InvariantReport:
    space, n, N = lift.space, lift.n, lift.N
    r = RingElem.monomial(1, 1, 0)
    zero = RingElem()
    xi = [zero] * n + [r]
    ixi = [zero] * n + [r * sp.I]
    # nabla xi = id and nabla (I xi) = I, checked on the full complexified frame
    res = {}
    for name, F in (("lc", full_connection(lift, False)), ("full", full_connection(lift))):
        v = _covariant(F, xi + [c.conj() for c in xi])
        target = lift.theta + [t.conj() for t in lift.theta]
        res[name] = max(((a - b).max_abs() for a, b in zip(v, target)), default=0.0)
    v = _covariant(full_connection(lift), ixi + [c.conj() for c in ixi])
    target = [t * sp.I for t in lift.theta] + [t.conj() * (-sp.I) for t in lift.theta]
    res["ixi"] = max(((a - b).max_abs() for a, b in zip(v, target)), default=0.0)
    # L_xi g = 2 g through the Cartan formula on each coframe factor
    g = lifted_metric(lift)
    Lg = SymTensor(space)
    for k, t in enumerate(lift.theta):
        Lt = space.lie(space.xi(), t)
        term = SymTensor.product(Lt.conj(), t) + SymTensor.product(t.conj(), Lt)
        Lg = Lg - term if k == n else Lg + term
    homothety = (Lg - g * 2).max_abs()
    om = kahler_form(lift)
    mu = space.function(RingElem.monomial(sp.Rational(1, 2), 2, 0))
    moment = (space.interior(space.i_xi(), om) - mu.d()).max_abs()
    # eta components in the lifted frame carry r^{-1} e^{2 i theta}
    f = RingElem.monomial(1, -1, 2)
    triple = f * RingElem.monomial(1, 3, 0)
    degree_ok = triple.degrees() == {(2, 2)}
    scaling = max((f.r_derivative() + f).max_abs(), (f.theta_derivative() - f * (2 * sp.I)).max_abs())
    G = g.gram(1.0, 0.0)
    ev = np.linalg.eigvalsh((G + G.conj().T) / 2)
    signature = (int(np.sum(ev > 1e-12)), int(np.sum(ev < -1e-12)))
    return InvariantReport(
        nabla_lc_xi=res["lc"],
        nabla_xi=res["full"],
        nabla_i_xi=res["ixi"],
        homothety=homothety,
        moment_map=moment,
        anti_hermitian=anti_hermitian_residual(lift.connection, n),
        metric_routes=(g - metric_from_base(lift)).max_abs(),
        kahler_form_routes=(om - kahler_form_from_base(lift)).max_abs(),
        eta_degree_ok=degree_ok,
        eta_scaling=scaling,
        signature=signature,
    )


@dataclass(frozen=True)
class LiftReport:
    torsion: float
    curvature: float
    flatness: FlatnessReport
    invariants: InvariantReport
    n: int

    @property
    def exact_zero(self) -> bool:
        return (self.torsion == 0 and self.curvature == 0 and self.flatness.exact_zero
                and self.invariants.exact_zero(self.n))


def lift_report(lift: ConicLift) -> LiftReport:
    return LiftReport(
        torsion=torsion_residual(lift.connection, lift.theta),
        curvature=lift_curvature_check(lift),
        flatness=flat_connection_check(lift),
        invariants=definition_invariants(lift),
        n=lift.n,
    )
