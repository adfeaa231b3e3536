"""Symmetric cubic deviance tensors and the model curvatures.

A cubic form sigma = sum c_M theta^M is given by its monomial coefficients
in graded-lex order of index multisets; for n = 2 that is (c1, c2, c3, c4)
for (theta^1)^3, (theta^1)^2 theta^2, theta^1 (theta^2)^2, (theta^2)^3.
Raising the middle slot doubles the symmetric tensor, so eta = 2 sigma
componentwise in the unitary coframe.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement, permutations
from math import comb
from typing import Mapping, Sequence, Union

import numpy as np

from .lie_kahler import CurvatureTensor, realify_blocks


class UnsupportedDimensionError(ValueError):
    pass


def monomials(n: int) -> list[tuple[int, ...]]:
    return list(combinations_with_replacement(range(n), 3))


def _n_from_count(count: int) -> int:
    n = 1
    while comb(n + 2, 3) < count:
        n += 1
    if comb(n + 2, 3) != count:
        raise ValueError(f"{count} coefficients do not form a cubic in any dimension")
    return n


@dataclass(frozen=True, eq=False)
class Deviance:
    n: int
    sigma: np.ndarray  # (n, n, n) totally symmetric

    @property
    def eta(self) -> np.ndarray:
        """eta[j, k, h] = eta^j_{k,h}."""
        return 2 * self.sigma

    @property
    def cubic(self) -> np.ndarray:
        out = []
        for M in monomials(self.n):
            out.append(self.sigma[M] * len(set(permutations(M))))
        return np.array(out, dtype=complex)

    def is_zero(self, tol: float = 0.0) -> bool:
        return float(np.max(np.abs(self.sigma), initial=0.0)) <= tol


CubicInput = Union[Sequence[complex], Mapping[tuple, complex], np.ndarray, Deviance]


def cubic_to_eta(c: CubicInput, n: int | None = None) -> Deviance:
    """Build a deviance from cubic coefficients.

    Accepts a coefficient sequence (graded-lex monomial order), a mapping
    from 1-based index triples to coefficients (requires `n`), or an
    (n, n, n) symmetric tensor of sigma components.
    """
    if isinstance(c, Deviance):
        return c
    if isinstance(c, Mapping):
        if n is None:
            raise ValueError("dimension required for mapping input")
        coeffs = np.zeros(comb(n + 2, 3), dtype=complex)
        order = {M: i for i, M in enumerate(monomials(n))}
        for key, v in c.items():
            coeffs[order[tuple(sorted(k - 1 for k in key))]] += v
        c = coeffs
    arr = np.asarray(c, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite cubic coefficient")
    if arr.ndim == 3:
        m = arr.shape[0]
        sym = sum(arr.transpose(p) for p in permutations(range(3))) / 6
        return Deviance(m, sym)
    if n is None:
        n = _n_from_count(arr.size)
    if arr.size != comb(n + 2, 3):
        raise ValueError(f"expected {comb(n + 2, 3)} coefficients for n={n}, got {arr.size}")
    sigma = np.zeros((n, n, n), dtype=complex)
    for val, M in zip(arr, monomials(n)):
        perms = set(permutations(M))
        for P in perms:
            sigma[P] = val / len(perms)
    return Deviance(n, sigma)


def zero_deviance(n: int) -> Deviance:
    return Deviance(n, np.zeros((n, n, n), dtype=complex))


def v_vectors(d: Deviance) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if d.n != 2:
        raise UnsupportedDimensionError("v-vectors are defined for n = 2 only")
    e = d.eta
    x, y, z, w = e[0, 0, 0], e[0, 0, 1], e[0, 1, 1], e[1, 1, 1]
    return np.array([x, y]), np.array([y, z]), np.array([z, w])


def bracket_blocks(d: Deviance) -> dict:
    """Blocks of [eta ^ conj(eta)] by direct contraction, any n.

    A[(k, h)][a, b] = sum_j conj(eta^a_{k j}) eta^j_{h b}.
    """
    e = d.eta
    A = np.einsum("akj,jhb->khab", e.conj(), e)
    return {(k, h): A[k, h] for k in range(d.n) for h in range(d.n)}


def bracket_blocks_n2(d: Deviance) -> dict:
    """The same blocks from pairwise Hermitian products of the v-vectors."""
    v1, v2, v3 = v_vectors(d)

    def ip(p, q):
        return np.vdot(p, q)

    a11 = np.array([[ip(v1, v1), ip(v1, v2)], [ip(v2, v1), ip(v2, v2)]])
    a12 = np.array([[ip(v1, v2), ip(v1, v3)], [ip(v2, v2), ip(v2, v3)]])
    a22 = np.array([[ip(v2, v2), ip(v2, v3)], [ip(v3, v2), ip(v3, v3)]])
    return {(0, 0): a11, (0, 1): a12, (1, 0): a12.conj().T, (1, 1): a22}


def eta_bracket(d: Deviance) -> CurvatureTensor:
    blocks = bracket_blocks_n2(d) if d.n == 2 else bracket_blocks(d)
    return realify_blocks(blocks, d.n)


def eta_norm(d: Deviance) -> float:
    """sum eta^j_{k,h} conj(eta^h_{k,j})."""
    e = d.eta
    return float(np.einsum("jkh,hkj->", e, e.conj()).real)


def phase_rotate(d: Deviance, alpha: float) -> Deviance:
    return Deviance(d.n, d.sigma * np.exp(1j * alpha))


def proj_blocks(n: int) -> dict:
    """Fubini-Study curvature blocks: A[(k, h)] = -E_{hk} - delta_{kh} Id."""
    blocks = {}
    for k in range(n):
        for h in range(n):
            A = np.zeros((n, n), dtype=complex)
            A[h, k] -= 1
            if k == h:
                A -= np.eye(n)
            blocks[(k, h)] = A
    return blocks


def model_blocks(kind: str, n: int = 2) -> dict:
    if kind == "proj":
        return proj_blocks(n)
    if kind in ("h1", "h2"):
        if n != 2:
            raise UnsupportedDimensionError("h1/h2 exist in dimension 4 only")
        k = 0 if kind == "h1" else 1
        blocks = {(a, b): np.zeros((2, 2), dtype=complex) for a in range(2) for b in range(2)}
        blocks[(k, k)][k, k] = 0.5
        return blocks
    raise ValueError(f"unknown model curvature {kind!r}")


def model_curvature(kind: str, n: int = 2) -> CurvatureTensor:
    """'proj' (Fubini-Study, any n), 'h1' or 'h2' (dimension 4)."""
    return realify_blocks(model_blocks(kind, n), n)


def real_deviance(d: Deviance) -> np.ndarray:
    """Realified eta as N[p, q, s]: output p, input q, direction s."""
    D = 2 * d.n
    Z = np.zeros((D, d.n), dtype=complex)
    for k in range(d.n):
        Z[2 * k, k], Z[2 * k + 1, k] = 1, 1j
    return np.einsum("jkh,sk,qh,pj->pqs", d.eta, Z, Z, Z).real
