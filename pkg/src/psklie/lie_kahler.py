"""Kähler Lie algebras: validation, Levi-Civita connection, curvature.

Frames are g-orthonormal.  Structure constants are stored as ``c[k, i, j]``
with ``[e_i, e_j] = c[k, i, j] e_k`` (0-based).  A complex structure is a
real matrix ``I`` acting on frame components, ``I e_j = sum_i I[i, j] e_i``.

Scalar curvature follows the dimension-normalised convention
``scal = tr(Ric) / dim``; multiply by ``dim`` for the usual scalar curvature.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .tensor_core import (
    TOL,
    AlternatingForm,
    FormMatrix,
    basis,
    ce_differential,
    ce_matrix,
    matrix_wedge,
    wedge,
)


class AdaptationError(ValueError):
    """The frame cannot be reordered into I-adapted pairs."""


class NotKahlerCurvatureError(ValueError):
    """A curvature tensor has components outside the (1,1) forms."""


@dataclass(frozen=True, eq=False)
class LieAlgebraData:
    """Real Lie algebra in a fixed basis.

    ``exact`` optionally carries the same constants as sympy expressions;
    it is used only by the exact conic-lift calculus.
    """

    c: np.ndarray
    exact: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise ValueError(f"structure constants must be (D, D, D), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite structure constant")
        if np.max(np.abs(c + c.transpose(0, 2, 1)), initial=0.0) > 0:
            raise ValueError("structure constants are not antisymmetric in (i, j)")
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @classmethod
    def from_brackets(cls, dim: int, brackets: dict, exact: Optional[dict] = None) -> "LieAlgebraData":
        """``brackets[(i, j)] = {k: value}`` with 1-based indices."""
        c = np.zeros((dim, dim, dim))
        ex = None
        if exact is not None:
            import sympy as sp
            ex = np.full((dim, dim, dim), sp.Integer(0), dtype=object)
        for (i, j), rhs in brackets.items():
            for k, v in rhs.items():
                c[k - 1, i - 1, j - 1] += v
                c[k - 1, j - 1, i - 1] -= v
                if ex is not None:
                    e = exact[(i, j)][k]
                    ex[k - 1, i - 1, j - 1] += e
                    ex[k - 1, j - 1, i - 1] -= e
        return cls(c, ex)

    @classmethod
    def abelian(cls, dim: int) -> "LieAlgebraData":
        import sympy as sp
        return cls(np.zeros((dim, dim, dim)), np.full((dim, dim, dim), sp.Integer(0), dtype=object))

    def bracket(self, X, Y) -> np.ndarray:
        return np.einsum("kij,i,j->k", self.c, np.asarray(X), np.asarray(Y))

    @cached_property
    def _ce(self) -> dict:
        return {}

    def d_matrix(self, degree: int) -> np.ndarray:
        if degree not in self._ce:
            self._ce[degree] = ce_matrix(self.c, degree)
        return self._ce[degree]


def jacobi_residual(alg: LieAlgebraData) -> float:
    c = alg.c
    # [[e_i,e_j],e_k]^l = c^m_ij c^l_mk
    t = np.einsum("mij,lmk->lijk", c, c)
    cyc = t + t.transpose(0, 2, 3, 1) + t.transpose(0, 3, 1, 2)
    return float(np.max(np.abs(cyc), initial=0.0))


def standard_complex_structure(dim: int) -> np.ndarray:
    I = np.zeros((dim, dim))
    for k in range(0, dim, 2):
        I[k + 1, k] = 1.0
        I[k, k + 1] = -1.0
    return I


def omega_from_I(I: np.ndarray) -> AlternatingForm:
    """omega(e_i, e_j) = g(I e_i, e_j) = I[j, i]."""
    D = I.shape[0]
    return AlternatingForm(D, 2, [I[j, i] for i, j in basis(D, 2)])


@dataclass(frozen=True, eq=False)
class KahlerStructure:
    alg: LieAlgebraData
    Imat: np.ndarray
    omega: Optional[AlternatingForm] = None

    def __post_init__(self):
        I = np.asarray(self.Imat, dtype=float)
        D = self.alg.dim
        if I.shape != (D, D) or D % 2:
            raise ValueError("complex structure must be a square matrix of even size matching the algebra")
        object.__setattr__(self, "Imat", I)
        if self.omega is None:
            object.__setattr__(self, "omega", omega_from_I(I))

    @property
    def dim(self) -> int:
        return self.alg.dim

    @property
    def n(self) -> int:
        return self.alg.dim // 2

    @property
    def g(self) -> np.ndarray:
        return np.eye(self.dim)


@dataclass(frozen=True)
class KahlerReport:
    dOmega: float
    nijenhuis: float
    compat: float
    closed_ok: bool

    @property
    def ok(self) -> bool:
        return self.closed_ok and self.nijenhuis < TOL and self.compat < TOL


def nijenhuis_residual(ks: KahlerStructure) -> float:
    I, D = ks.Imat, ks.dim
    E = np.eye(D)
    worst = 0.0
    for i in range(D):
        for j in range(i + 1, D):
            X, Y = E[i], E[j]
            IX, IY = I @ X, I @ Y
            N = (ks.alg.bracket(IX, IY) - I @ ks.alg.bracket(IX, Y)
                 - I @ ks.alg.bracket(X, IY) - ks.alg.bracket(X, Y))
            worst = max(worst, float(np.max(np.abs(N))))
    return worst


def kahler_check(ks: KahlerStructure, tol: float = TOL) -> KahlerReport:
    I = ks.Imat
    D = ks.dim
    d_omega = ce_differential(ks.omega, ks.alg).max_abs()
    compat = max(
        float(np.max(np.abs(I @ I + np.eye(D)))),
        float(np.max(np.abs(I.T @ I - np.eye(D)))),
        (ks.omega - omega_from_I(I)).max_abs(),
    )
    return KahlerReport(d_omega, nijenhuis_residual(ks), compat, d_omega < tol)


def christoffel(c: np.ndarray) -> np.ndarray:
    """G[k, i, j] = g(nabla_{e_i} e_j, e_k) from the Koszul formula.

    Works on float or sympy object arrays.
    """
    # 2 g(nabla_X Y, Z) = g([X,Y],Z) - g([Y,Z],X) + g([Z,X],Y)
    return (c - c.transpose(2, 0, 1) + c.transpose(1, 2, 0)) / 2


def levi_civita(ks: KahlerStructure) -> FormMatrix:
    """Connection matrix with nabla e_j = sum_i w[i, j] (x) e_i."""
    G = christoffel(ks.alg.c)
    # w^k_j(e_i) = G[k, i, j]
    return FormMatrix(ks.dim, 1, G.transpose(0, 2, 1).astype(complex))


def torsion_residual(conn: FormMatrix, alg: LieAlgebraData) -> float:
    D = alg.dim
    coframe = FormMatrix(D, 1, np.eye(D, dtype=complex)[:, None, :])
    d_coframe = coframe.d(alg.c)
    return (d_coframe + matrix_wedge(conn, coframe)).max_abs()


def metric_residual(conn: FormMatrix) -> float:
    return (conn + conn.transpose()).max_abs()


@dataclass(frozen=True, eq=False)
class CurvatureTensor:
    """End-valued 2-form R^l_k with R(X,Y) e_k = sum_l R^l_k(X,Y) e_l."""

    real: FormMatrix

    @property
    def dim(self) -> int:
        return self.real.frame_dim

    def __add__(self, other: "CurvatureTensor") -> "CurvatureTensor":
        return CurvatureTensor(self.real + other.real)

    def __sub__(self, other: "CurvatureTensor") -> "CurvatureTensor":
        return CurvatureTensor(self.real - other.real)

    def __mul__(self, s: float) -> "CurvatureTensor":
        return CurvatureTensor(self.real * s)

    __rmul__ = __mul__

    def __neg__(self) -> "CurvatureTensor":
        return CurvatureTensor(-self.real)

    def max_abs(self) -> float:
        return self.real.max_abs()

    def components(self) -> np.ndarray:
        """R[l, k, p, q] = R^l_k(e_p, e_q) as a real array."""
        D = self.dim
        out = np.zeros((D, D, D, D))
        for n, (p, q) in enumerate(basis(D, 2)):
            out[:, :, p, q] = self.real.data[:, :, n].real
            out[:, :, q, p] = -self.real.data[:, :, n].real
        return out

    def blocks(self, theta: Optional[np.ndarray] = None) -> dict:
        return complexify(self, theta)

    def first_bianchi(self) -> float:
        D = self.dim
        coframe = FormMatrix(D, 1, np.eye(D, dtype=complex)[:, None, :])
        return matrix_wedge(self.real, coframe).max_abs()


def curvature(conn: FormMatrix, alg: LieAlgebraData) -> CurvatureTensor:
    """Omega = d(omega) + omega ^ omega."""
    return CurvatureTensor(conn.d(alg.c) + matrix_wedge(conn, conn))


def ricci_scalar(R: CurvatureTensor, ks: Optional[KahlerStructure] = None) -> tuple[np.ndarray, float]:
    """Ric(e_j, e_k) = sum_i R^i_k(e_i, e_j); scal = tr(Ric) / dim."""
    comp = R.components()
    Ric = np.einsum("ikij->jk", comp)
    Ric = (Ric + Ric.T) / 2
    return Ric, float(np.trace(Ric) / R.dim)


def unitary_coframe(ks: KahlerStructure) -> np.ndarray:
    """Complex coframe as a (D, n) matrix Z with theta^k(e_p) = Z[p, k].

    Frame vectors are paired greedily as (e_p, I e_p); in the standard
    block form this gives theta^k = u^{2k-1} + i u^{2k}.
    """
    I, D = ks.Imat, ks.dim
    used: set[int] = set()
    pairs = []
    for p in range(D):
        if p in used:
            continue
        col = I[:, p]
        q = int(np.argmax(np.abs(col)))
        unit = np.zeros(D)
        unit[q] = col[q]
        if abs(abs(col[q]) - 1) > TOL or np.max(np.abs(col - unit)) > TOL or q in used or q == p:
            raise AdaptationError(f"frame vector e{p + 1} is not mapped by I onto a frame vector")
        if col[q] > 0:
            pairs.append((p, q))
        else:
            pairs.append((q, p))
        used.update((p, q))
    Z = np.zeros((D, D // 2), dtype=complex)
    for k, (p, q) in enumerate(pairs):
        Z[p, k] = 1.0
        Z[q, k] = 1j
    return Z


def _standard_coframe(D: int) -> np.ndarray:
    Z = np.zeros((D, D // 2), dtype=complex)
    for k in range(D // 2):
        Z[2 * k, k] = 1.0
        Z[2 * k + 1, k] = 1j
    return Z


def complex_two_form_basis(Z: np.ndarray) -> tuple[list, np.ndarray]:
    """Complex 2-form basis adapted to Z and its coefficient matrix.

    Returns labels and a matrix whose columns give each basis form in the
    real u^{pq} basis.  Labels are ('11', k, h) for conj(theta^k) ^ theta^h,
    ('20', a, b) for theta^a ^ theta^b and ('02', a, b) for the conjugates.
    """
    D, n = Z.shape
    th = [AlternatingForm.covector(D, Z[:, k]) for k in range(n)]
    tb = [t.conj() for t in th]
    labels, cols = [], []
    for k in range(n):
        for h in range(n):
            labels.append(("11", k, h))
            cols.append(wedge(tb[k], th[h]).coeffs)
    for a in range(n):
        for b in range(a + 1, n):
            labels.append(("20", a, b))
            cols.append(wedge(th[a], th[b]).coeffs)
            labels.append(("02", a, b))
            cols.append(wedge(tb[a], tb[b]).coeffs)
    return labels, np.array(cols).T


def _to_complex_matrices(R: FormMatrix, Z: np.ndarray) -> tuple[np.ndarray, float]:
    """Complex n x n matrix per real 2-form slot, plus the anti-linear defect."""
    # A = Z^T L (1/2) conj(Z) projects a complex-linear real endomorphism
    half = 0.5 * Z.conj()
    data = R.data.real if np.iscomplexobj(R.data) else R.data
    M = np.einsum("pk,pqs,ql->kls", Z, data, half)
    back = np.einsum("pk,kls,ql->pqs", Z.conj(), M, Z).real
    return M, float(np.max(np.abs(back - data), initial=0.0))


def complexify(R: CurvatureTensor, theta: Optional[np.ndarray] = None, tol: float = TOL) -> dict:
    """Blocks A[(k, h)] with R = realify(sum conj(theta^k) ^ theta^h (x) A[(k, h)])."""
    D = R.dim
    Z = _standard_coframe(D) if theta is None else np.asarray(theta)
    n = Z.shape[1]
    M, defect = _to_complex_matrices(R.real, Z)
    if defect > tol:
        raise NotKahlerCurvatureError(f"curvature does not commute with I (defect {defect:.3g})")
    labels, B = complex_two_form_basis(Z)
    coef = np.linalg.solve(B, M.reshape(n * n, -1).T).T.reshape(n, n, -1)
    blocks = {}
    off = 0.0
    for idx, lab in enumerate(labels):
        if lab[0] == "11":
            blocks[(lab[1], lab[2])] = coef[:, :, idx]
        else:
            off = max(off, float(np.max(np.abs(coef[:, :, idx]))))
    if off > tol:
        raise NotKahlerCurvatureError(f"curvature has (2,0)+(0,2) part of size {off:.3g}")
    return blocks


def realify_blocks(blocks: dict, n: int, theta: Optional[np.ndarray] = None) -> CurvatureTensor:
    """Inverse of complexify."""
    D = 2 * n
    Z = _standard_coframe(D) if theta is None else np.asarray(theta)
    labels, B = complex_two_form_basis(Z)
    S = B.shape[0]
    M = np.zeros((n, n, S), dtype=complex)
    for idx, lab in enumerate(labels):
        if lab[0] == "11" and (lab[1], lab[2]) in blocks:
            M += np.asarray(blocks[(lab[1], lab[2])], dtype=complex)[:, :, None] * B[:, idx][None, None, :]
    real = np.einsum("pk,kls,ql->pqs", Z.conj(), M, Z).real
    return CurvatureTensor(FormMatrix(D, 2, real.astype(complex)))


def complex_connection(conn: FormMatrix, Z: np.ndarray) -> np.ndarray:
    """Complex n x n matrix of 1-forms W with d theta = -W ^ theta, as (n, n, D)."""
    return np.einsum("pk,pqs,ql->kls", Z, conn.data.real, 0.5 * Z.conj())
