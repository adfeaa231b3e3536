"""Projective special Kähler conditions on a Kähler Lie algebra.

Two conditions are checked for a constant deviance eta in the unitary
coframe:

* the curvature equation  Omega^LC + Omega_P + [eta ^ conj(eta)] = 0;
* the differential equation  d^LC sigma = -4i lambda ^ sigma  for a
  left-invariant real 1-form lambda with d(lambda) = omega.

The second is linear in lambda and is solved by least squares; the witness
returned is the minimal-norm solution.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .deviance import Deviance, bracket_blocks, eta_norm, proj_blocks, zero_deviance
from .lie_kahler import (
    CurvatureTensor,
    KahlerStructure,
    christoffel,
    complexify,
    curvature,
    levi_civita,
    ricci_scalar,
    unitary_coframe,
)
from .tensor_core import TOL, AlternatingForm, basis


@dataclass(frozen=True)
class PskVerdict:
    d1_residual: float
    d2_feasible: bool
    d2_lambda: Optional[AlternatingForm]
    d2_residual: float
    ricci_residual: float
    scalar_residual: float
    scal: float
    accepted: bool

    @property
    def tau(self) -> Optional[AlternatingForm]:
        return None if self.d2_lambda is None else self.d2_lambda * -2


def d1_blocks(Rlc: CurvatureTensor, d: Deviance, theta=None) -> dict:
    A = complexify(Rlc, theta)
    P = proj_blocks(d.n)
    B = bracket_blocks(d)
    return {k: A[k] + P[k] + B[k] for k in A}


def d1_residual(Rlc: CurvatureTensor, d: Deviance, theta=None) -> float:
    return max(float(np.max(np.abs(v))) for v in d1_blocks(Rlc, d, theta).values())


def sigma_real(d: Deviance, Z: np.ndarray) -> np.ndarray:
    """S[p, q, r] = sigma(e_p, e_q, e_r)."""
    return np.einsum("kjh,pk,qj,rh->pqr", d.sigma, Z, Z, Z)


def covariant_sigma(G: np.ndarray, S: np.ndarray) -> np.ndarray:
    """(nabla_{e_i} sigma)_{pqr} for constant coefficients; G[l, i, p] = Gamma^l_{ip}."""
    return -(np.einsum("lip,lqr->ipqr", G, S)
             + np.einsum("liq,plr->ipqr", G, S)
             + np.einsum("lir,pql->ipqr", G, S))


def d2_system(ks: KahlerStructure, d: Deviance, G=None, Z=None, S=None, unit=1j):
    """Real linear system A lam = b encoding d(lam) = omega and the D2 equation.

    Accepts float or sympy object arrays for G, Z and S; pass ``unit=sympy.I``
    to keep object arrays exact.
    """
    D = ks.dim
    c = ks.alg.c if G is None else None
    G = christoffel(c) if G is None else G
    Z = unitary_coframe(ks) if Z is None else Z
    S = sigma_real(d, Z) if S is None else S
    pairs = basis(D, 2)
    # d(lam) = -sum_p lam_p sum_{i<j} c^p_ij u^ij ; torsion-free: c^p_ij = G[p,i,j] - G[p,j,i]
    A1 = np.array([[-(G[p, i, j] - G[p, j, i]) for p in range(D)] for i, j in pairs], dtype=object)
    b1 = np.array([ks.omega[(i, j)].real for i, j in pairs], dtype=object)
    if unit != 1j:
        b1 = np.array([int(round(v)) if float(v).is_integer() else v for v in b1], dtype=object)
    nab = covariant_sigma(G, S)
    dS = nab - nab.transpose(1, 0, 2, 3)
    # dS + 4i (lam_i S_pqr - lam_p S_iqr) = 0
    eye = np.eye(D, dtype=int)
    coef = 4 * unit * (np.einsum("mi,pqr->ipqrm", eye, S) - np.einsum("mp,iqr->ipqrm", eye, S))
    A2 = coef.reshape(-1, D)
    b2 = -dS.reshape(-1)
    return A1, b1, A2, b2


def d2_check(ks: KahlerStructure, d: Deviance, tol: float = TOL):
    """Returns (feasible, lambda or None, residual)."""
    A1, b1, A2, b2 = d2_system(ks, d)
    A = np.vstack([A1.astype(float), A2.real.astype(float), A2.imag.astype(float)])
    b = np.concatenate([b1.astype(float), b2.real.astype(float), b2.imag.astype(float)])
    lam, *_ = np.linalg.lstsq(A, b, rcond=None)
    lam[np.abs(lam) < 1e-15] = 0.0
    res = float(np.max(np.abs(A @ lam - b), initial=0.0))
    if res < tol:
        return True, AlternatingForm.covector(ks.dim, lam), res
    return False, None, res


def hermitian_term(d: Deviance, Z: np.ndarray) -> np.ndarray:
    """T[p, q] = Re h(conj(eta_{e_p}), eta_{e_q}) in the real frame."""
    e = d.eta
    N = np.einsum("jkh,juh->ku", e, e.conj())
    return 2 * np.einsum("ku,qk,pu->pq", N, Z, Z.conj()).real


def ricci_identity(Ric: np.ndarray, g: np.ndarray, d: Deviance, theta=None) -> float:
    D = Ric.shape[0]
    Z = theta
    if Z is None:
        Z = np.zeros((D, D // 2), dtype=complex)
        for k in range(D // 2):
            Z[2 * k, k], Z[2 * k + 1, k] = 1, 1j
    n = D // 2
    return float(np.max(np.abs(Ric + 2 * (n + 1) * g - hermitian_term(d, Z))))


def scalar_identity(scal: float, n: int, d: Deviance) -> float:
    return abs(scal + 2 * (n + 1) - (2 / n) * eta_norm(d))


def scalar_bound_check(n: int, d: Deviance) -> float:
    """Scalar curvature forced by the scalar identity; never below -2(n+1)."""
    scal = -2 * (n + 1) + (2 / n) * eta_norm(d)
    bound = -2 * (n + 1)
    if scal < bound - TOL or (abs(scal - bound) < 1e-12) != (eta_norm(d) < 1e-12):
        raise ArithmeticError("scalar bound violated")
    return scal


def verify(ks: KahlerStructure, d: Optional[Deviance] = None, tol: float = TOL) -> PskVerdict:
    d = zero_deviance(ks.n) if d is None else d
    Z = unitary_coframe(ks)
    conn = levi_civita(ks)
    R = curvature(conn, ks.alg)
    r1 = d1_residual(R, d, Z)
    feasible, lam, r2 = d2_check(ks, d, tol)
    Ric, scal = ricci_scalar(R, ks)
    return PskVerdict(
        d1_residual=r1,
        d2_feasible=feasible,
        d2_lambda=lam,
        d2_residual=r2,
        ricci_residual=ricci_identity(Ric, ks.g, d, Z),
        scalar_residual=scalar_identity(scal, ks.n, d),
        scal=scal,
        accepted=bool(r1 < tol and feasible),
    )
