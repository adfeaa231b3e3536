"""Dense exterior algebra over a fixed finite coframe.

Forms are stored as coefficient vectors over the strictly increasing
multi-indices of their degree, so a degree-k form in dimension D carries
C(D, k) complex numbers.  Everything here is constant-coefficient: the
exterior derivative is the Lie-algebra (Chevalley-Eilenberg) differential
determined by structure constants.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

TOL = 1e-9


class FrameMismatchError(ValueError):
    pass


class ShapeMismatchError(ValueError):
    pass


@lru_cache(maxsize=None)
def basis(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing index tuples (0-based) of length `degree`."""
    if degree < 0 or degree > dim:
        return ()
    return tuple(combinations(range(dim), degree))


@lru_cache(maxsize=None)
def basis_index(dim: int, degree: int) -> dict[tuple[int, ...], int]:
    return {idx: n for n, idx in enumerate(basis(dim, degree))}


def _sort_sign(idx: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the sorting permutation and the sorted tuple; sign 0 on repeats."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


@lru_cache(maxsize=None)
def _wedge_table(dim: int, p: int, q: int):
    ia, ib, ic, sg = [], [], [], []
    out = basis_index(dim, p + q)
    for a, I in enumerate(basis(dim, p)):
        for b, J in enumerate(basis(dim, q)):
            s, K = _sort_sign(I + J)
            if s:
                ia.append(a)
                ib.append(b)
                ic.append(out[K])
                sg.append(s)
    return (np.array(ia, dtype=int), np.array(ib, dtype=int),
            np.array(ic, dtype=int), np.array(sg, dtype=float))


class AlternatingForm:
    """Constant-coefficient alternating form in a D-dimensional coframe."""

    __slots__ = ("frame_dim", "degree", "coeffs")

    def __init__(self, frame_dim: int, degree: int, coeffs=None):
        self.frame_dim = int(frame_dim)
        self.degree = int(degree)
        n = len(basis(frame_dim, degree))
        if coeffs is None:
            coeffs = np.zeros(n, dtype=complex)
        coeffs = np.asarray(coeffs, dtype=complex).reshape(n)
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("non-finite form coefficient")
        self.coeffs = coeffs

    @classmethod
    def from_dict(cls, frame_dim: int, degree: int,
                  comps: Mapping[Sequence[int], complex]) -> "AlternatingForm":
        """Build from {index tuple: value}; tuples may be unsorted (0-based)."""
        out = np.zeros(len(basis(frame_dim, degree)), dtype=complex)
        table = basis_index(frame_dim, degree)
        for idx, val in comps.items():
            if len(idx) != degree:
                raise ValueError(f"index {idx} has wrong length for degree {degree}")
            s, key = _sort_sign(idx)
            if s:
                out[table[key]] += s * val
        return cls(frame_dim, degree, out)

    @classmethod
    def covector(cls, frame_dim: int, values: Sequence[complex]) -> "AlternatingForm":
        return cls(frame_dim, 1, np.asarray(values, dtype=complex))

    @classmethod
    def unit(cls, frame_dim: int, *idx: int) -> "AlternatingForm":
        """The basis form u^{i1} ^ ... ^ u^{ik} (0-based indices)."""
        return cls.from_dict(frame_dim, len(idx), {tuple(idx): 1.0})

    def components(self) -> dict[tuple[int, ...], complex]:
        return {I: complex(v) for I, v in zip(basis(self.frame_dim, self.degree), self.coeffs) if v != 0}

    def __getitem__(self, idx) -> complex:
        if isinstance(idx, int):
            idx = (idx,)
        s, key = _sort_sign(idx)
        if not s:
            return 0j
        return s * complex(self.coeffs[basis_index(self.frame_dim, self.degree)[key]])

    def _check(self, other: "AlternatingForm") -> None:
        if self.frame_dim != other.frame_dim:
            raise FrameMismatchError(f"frame dims {self.frame_dim} and {other.frame_dim}")

    def __add__(self, other: "AlternatingForm") -> "AlternatingForm":
        self._check(other)
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        return AlternatingForm(self.frame_dim, self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other: "AlternatingForm") -> "AlternatingForm":
        return self + (-other)

    def __neg__(self) -> "AlternatingForm":
        return AlternatingForm(self.frame_dim, self.degree, -self.coeffs)

    def __mul__(self, s: complex) -> "AlternatingForm":
        return AlternatingForm(self.frame_dim, self.degree, self.coeffs * s)

    __rmul__ = __mul__

    def __xor__(self, other: "AlternatingForm") -> "AlternatingForm":
        return wedge(self, other)

    def conj(self) -> "AlternatingForm":
        return AlternatingForm(self.frame_dim, self.degree, self.coeffs.conj())

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def is_zero(self, tol: float = TOL) -> bool:
        return self.max_abs() <= tol

    def evaluate(self, *vectors: Sequence[complex]) -> complex:
        """Value on `degree` vectors given by frame components."""
        if len(vectors) != self.degree:
            raise ValueError("wrong number of arguments")
        if self.degree == 0:
            return complex(self.coeffs[0])
        V = np.array(vectors, dtype=complex)
        total = 0j
        for I, c in zip(basis(self.frame_dim, self.degree), self.coeffs):
            if c != 0:
                total += c * np.linalg.det(V[:, list(I)])
        return complex(total)

    def __repr__(self) -> str:
        terms = [f"{v:.6g}*u^{''.join(str(i + 1) for i in I)}" for I, v in self.components().items()]
        return f"AlternatingForm(deg={self.degree}, {' + '.join(terms) or '0'})"


def zero_form(frame_dim: int, degree: int) -> AlternatingForm:
    return AlternatingForm(frame_dim, degree)


def wedge(a: AlternatingForm, b: AlternatingForm) -> AlternatingForm:
    a._check(b)
    D, p, q = a.frame_dim, a.degree, b.degree
    if p + q > D:
        return _overflow(D, p + q)
    ia, ib, ic, sg = _wedge_table(D, p, q)
    out = np.zeros(len(basis(D, p + q)), dtype=complex)
    np.add.at(out, ic, sg * a.coeffs[ia] * b.coeffs[ib])
    return AlternatingForm(D, p + q, out)


def _overflow(D: int, degree: int) -> AlternatingForm:
    # degree beyond the frame: the zero form, kept with an empty coefficient vector
    f = object.__new__(AlternatingForm)
    f.frame_dim, f.degree, f.coeffs = D, degree, np.zeros(0, dtype=complex)
    return f


def realify(t):
    """t + conj(t), applied to forms, form matrices or plain arrays."""
    if isinstance(t, (AlternatingForm, FormMatrix)):
        return t + t.conj()
    t = np.asarray(t)
    return t + np.conj(t)


def _c_array(alg) -> np.ndarray:
    return np.asarray(getattr(alg, "c", alg), dtype=float)


def ce_matrix(c: np.ndarray, degree: int) -> np.ndarray:
    """Matrix of the CE differential from degree to degree+1 forms.

    `c[k, i, j]` holds c^k_{ij} with [e_i, e_j] = c^k_{ij} e_k.
    """
    D = c.shape[0]
    rows = len(basis(D, degree + 1))
    cols = len(basis(D, degree))
    M = np.zeros((rows, cols), dtype=complex)
    if degree + 1 > D or cols == 0 or degree == 0:
        return M
    # du^k = -sum_{i<j} c^k_ij u^ij
    du = []
    for k in range(D):
        du.append(AlternatingForm(D, 2, [-c[k, i, j] for i, j in basis(D, 2)]))
    for col, I in enumerate(basis(D, degree)):
        acc = AlternatingForm(D, degree + 1)
        for m, i in enumerate(I):
            left = AlternatingForm.unit(D, *I[:m]) if m else None
            right = AlternatingForm.unit(D, *I[m + 1:]) if m + 1 < len(I) else None
            term = du[i]
            if left is not None:
                term = wedge(left, term)
            if right is not None:
                term = wedge(term, right)
            acc = acc + term * ((-1) ** m)
        M[:, col] = acc.coeffs
    return M


def ce_differential(a: AlternatingForm, alg) -> AlternatingForm:
    """Exterior derivative of a left-invariant form; du^k(e_i,e_j) = -u^k([e_i,e_j])."""
    c = _c_array(alg)
    if c.shape[0] != a.frame_dim:
        raise FrameMismatchError(f"form dim {a.frame_dim} vs algebra dim {c.shape[0]}")
    if a.degree + 1 > a.frame_dim:
        return _overflow(a.frame_dim, a.degree + 1)
    return AlternatingForm(a.frame_dim, a.degree + 1, ce_matrix(c, a.degree) @ a.coeffs)


class FormMatrix:
    """Matrix of alternating forms of a common degree, stored as (rows, cols, C(D,k))."""

    __slots__ = ("frame_dim", "degree", "data")

    def __init__(self, frame_dim: int, degree: int, data):
        self.frame_dim = int(frame_dim)
        self.degree = int(degree)
        data = np.asarray(data, dtype=complex)
        if data.ndim != 3 or data.shape[2] != len(basis(frame_dim, degree)):
            raise ShapeMismatchError(f"bad coefficient array shape {data.shape}")
        self.data = data

    @classmethod
    def zeros(cls, rows: int, cols: int, frame_dim: int, degree: int) -> "FormMatrix":
        return cls(frame_dim, degree, np.zeros((rows, cols, len(basis(frame_dim, degree))), dtype=complex))

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[AlternatingForm]]) -> "FormMatrix":
        first = entries[0][0]
        for row in entries:
            for e in row:
                if e.degree != first.degree or e.frame_dim != first.frame_dim:
                    raise ShapeMismatchError("entries must share degree and frame dimension")
        data = np.array([[e.coeffs for e in row] for row in entries], dtype=complex)
        return cls(first.frame_dim, first.degree, data)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]

    def __getitem__(self, ij) -> AlternatingForm:
        i, j = ij
        return AlternatingForm(self.frame_dim, self.degree, self.data[i, j])

    def entries(self) -> list[list[AlternatingForm]]:
        r, c = self.shape
        return [[self[i, j] for j in range(c)] for i in range(r)]

    def _like(self, data) -> "FormMatrix":
        return FormMatrix(self.frame_dim, self.degree, data)

    def __add__(self, other: "FormMatrix") -> "FormMatrix":
        if other.shape != self.shape or other.degree != self.degree:
            raise ShapeMismatchError("shape or degree mismatch")
        return self._like(self.data + other.data)

    def __sub__(self, other: "FormMatrix") -> "FormMatrix":
        return self + (-other)

    def __neg__(self) -> "FormMatrix":
        return self._like(-self.data)

    def __mul__(self, s: complex) -> "FormMatrix":
        return self._like(self.data * s)

    __rmul__ = __mul__

    def conj(self) -> "FormMatrix":
        return self._like(self.data.conj())

    def transpose(self) -> "FormMatrix":
        return self._like(self.data.transpose(1, 0, 2))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data))) if self.data.size else 0.0

    def d(self, alg) -> "FormMatrix":
        c = _c_array(alg)
        M = ce_matrix(c, self.degree)
        return FormMatrix(self.frame_dim, self.degree + 1, self.data @ M.T)


def matrix_wedge(A: FormMatrix, B: FormMatrix) -> FormMatrix:
    """(A ^ B)_{ik} = sum_j A_ij ^ B_jk."""
    if A.frame_dim != B.frame_dim:
        raise FrameMismatchError("frame dimension mismatch")
    if A.shape[1] != B.shape[0]:
        raise ShapeMismatchError(f"cannot wedge {A.shape} by {B.shape}")
    D, p, q = A.frame_dim, A.degree, B.degree
    rows, cols = A.shape[0], B.shape[1]
    if p + q > D:
        raise ShapeMismatchError("result degree exceeds frame dimension")
    ia, ib, ic, sg = _wedge_table(D, p, q)
    prod = np.einsum("ijt,jkt->ikt", A.data[:, :, ia], B.data[:, :, ib]) * sg
    out = np.zeros((rows, cols, len(basis(D, p + q))), dtype=complex)
    np.add.at(out, (slice(None), slice(None), ic), prod)
    return FormMatrix(D, p + q, out)


def forms_from_values(frame_dim: int, values: Iterable[complex]) -> AlternatingForm:
    return AlternatingForm.covector(frame_dim, list(values))
