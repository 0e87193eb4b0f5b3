"""Standard root V (spectrum in the upper half plane) of a monic quadratic pencil
A11 + 2 A12 beta + beta^2, and its split V = C + iD = (S + iI) D."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .config import DEFAULT, Tolerances
from .core_types import EllipticTuple, is_positive_definite
from .errors import (
    DimensionMismatch,
    IllConditionedEigenbasis,
    InvariantViolation,
    NotElliptic,
    NotMonic,
    ResidualTooLarge,
)


@dataclass(frozen=True, eq=False)
class StandardRoot:
    v: np.ndarray
    c: np.ndarray
    d: np.ndarray
    s: np.ndarray
    residual: float
    cond_x: float = 1.0
    method: str = "eigen"

    @property
    def ell(self) -> int:
        return self.v.shape[0]


def companion_linearization(t: EllipticTuple) -> np.ndarray:
    if not t.is_monic:
        raise NotMonic("companion linearization needs A22 = I")
    n = t.ell
    top = np.hstack([np.zeros((n, n)), np.eye(n)])
    bottom = np.hstack([-t.a11, -2.0 * t.a12])
    return np.vstack([top, bottom]).astype(complex)


def root_residual(t: EllipticTuple, v) -> float:
    v = np.asarray(v)
    if v.shape != t.a11.shape:
        raise DimensionMismatch(f"V has shape {v.shape}, expected {t.a11.shape}")
    r = t.a11 + 2.0 * t.a12 @ v + v @ v
    return float(np.linalg.norm(r, 2) / np.linalg.norm(t.a11, 2))


def _root_from_eigvecs(comp, n, tol):
    w, vecs = np.linalg.eig(comp)
    if np.any(np.abs(w.imag) <= tol.real_axis_tol):
        raise NotElliptic("pencil has a real root")
    upper = w.imag > 0
    if upper.sum() != n:
        raise NotElliptic("roots are not split evenly between the half planes")
    x = vecs[:n, upper]
    cond = np.linalg.cond(x)
    if not np.isfinite(cond) or cond > tol.cond_max:
        raise IllConditionedEigenbasis(f"eigenvector basis has condition {cond:.3g}")
    v = x @ np.diag(w[upper]) @ np.linalg.inv(x)
    return v, float(cond)


def _root_from_schur(comp, n, tol):
    w = np.linalg.eigvals(comp)
    if np.any(np.abs(w.imag) <= tol.real_axis_tol):
        raise NotElliptic("pencil has a real root")
    t, z, sdim = sla.schur(comp, output="complex", sort=lambda x: x.imag > 0)
    if sdim != n:
        raise NotElliptic("roots are not split evenly between the half planes")
    x1, x2 = z[:n, :n], z[n:, :n]
    cond = np.linalg.cond(x1)
    if not np.isfinite(cond) or cond > tol.cond_max:
        raise IllConditionedEigenbasis(f"invariant subspace basis has condition {cond:.3g}")
    return x2 @ np.linalg.inv(x1), float(cond)


def split_root(v, tol: Tolerances = DEFAULT):
    """Return (C, D, S) with S = C D^{-1} symmetrised."""
    c = v.real.copy()
    d = v.imag.copy()
    d = 0.5 * (d + d.T)
    s = c @ np.linalg.inv(d)
    asym = np.linalg.norm(s - s.T) / max(np.linalg.norm(s), 1.0)
    if asym > tol.root_tol:
        raise InvariantViolation(f"C D^-1 is not symmetric (relative asymmetry {asym:.3g})")
    return c, d, 0.5 * (s + s.T)


def compute_standard_root(t: EllipticTuple, tol: Tolerances = DEFAULT, method: str = "auto") -> StandardRoot:
    """Standard root of a monic tuple.

    ``method`` is ``"eigen"``, ``"schur"`` or ``"auto"`` (eigenvectors first,
    ordered Schur subspace when the eigenvector basis is ill conditioned).
    """
    comp = companion_linearization(t)
    n = t.ell
    if method == "schur":
        v, cond = _root_from_schur(comp, n, tol)
        used = "schur"
    else:
        try:
            v, cond = _root_from_eigvecs(comp, n, tol)
            used = "eigen"
        except IllConditionedEigenbasis:
            if method == "eigen":
                raise
            v, cond = _root_from_schur(comp, n, tol)
            used = "schur"
    # Newton polish on the quadratic: (2 A12 + V) dV + dV V = -R
    for _ in range(2):
        r = t.a11 + 2.0 * t.a12 @ v + v @ v
        if np.linalg.norm(r) <= 1e-15 * np.linalg.norm(t.a11):
            break
        v = v + sla.solve_sylvester(2.0 * t.a12 + v, v, -r)
    c, d, s = split_root(v, tol)
    if not is_positive_definite(d, tol):
        raise InvariantViolation("imaginary part of the standard root is not positive definite")
    res = root_residual(t, v)
    if res > tol.root_tol:
        raise ResidualTooLarge(f"standard root residual {res:.3g}")
    return StandardRoot(v=v, c=c, d=d, s=s, residual=res, cond_x=cond, method=used)
