"""Problem data: elliptic tuples, opening angles and boundary-condition selectors."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import DimensionMismatch, InputError, NotPositiveDefinite, NotSymmetric
from .matfun import hermitian_sqrt

TWO_PI = 2.0 * math.pi


class BoundaryCondition(enum.Enum):
    """Boundary operators on the two rays.

    ``flags`` is ``(d_plus, d_minus)``: 1 selects the Neumann operator, 0 Dirichlet;
    ``d_plus`` acts on the ray phi = alpha, ``d_minus`` on phi = 0. ``MIXED`` is
    Neumann at phi = 0 and Dirichlet at phi = alpha.
    """

    DIRICHLET = "dirichlet"
    MIXED = "mixed"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value) -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InputError(f"unknown boundary condition {value!r}") from None

    @property
    def flags(self) -> tuple[int, int]:
        return {"dirichlet": (0, 0), "mixed": (0, 1), "neumann": (1, 1)}[self.value]


class Regime(enum.Enum):
    SUB_PI = "SubPi"
    PI = "Pi"
    SUPER_PI = "SuperPi"
    TWO_PI = "TwoPi"


@dataclass(frozen=True)
class AngleConfig:
    alpha: float
    regime: Regime

    @classmethod
    def make(cls, alpha: float, tol: Tolerances = DEFAULT) -> "AngleConfig":
        alpha = float(alpha)
        if not (alpha > 0.0) or alpha > TWO_PI + tol.angle_snap_tol:
            raise InputError(f"opening angle must lie in (0, 2pi], got {alpha!r}")
        if abs(alpha - math.pi) <= tol.angle_snap_tol:
            return cls(math.pi, Regime.PI)
        if abs(alpha - TWO_PI) <= tol.angle_snap_tol:
            return cls(TWO_PI, Regime.TWO_PI)
        return cls(alpha, Regime.SUB_PI if alpha < math.pi else Regime.SUPER_PI)


def _as_matrix(m, name: str) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} has non-finite entries")
    return a


def _symmetrized(a: np.ndarray, name: str, tol: Tolerances) -> np.ndarray:
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > tol.sym_tol * max(scale, np.finfo(float).tiny):
        raise NotSymmetric(f"{name} is not symmetric")
    return 0.5 * (a + a.T)


def is_positive_definite(m: np.ndarray, tol: Tolerances = DEFAULT) -> bool:
    """Cholesky attempt with a relative pivot threshold."""
    scale = np.linalg.norm(m, 2)
    if scale == 0.0:
        return False
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return bool(np.min(np.diag(chol).real ** 2) > tol.pd_pivot * scale)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EllipticTuple:
    """Coefficients (A11, A12, A22) of L_A = A11 dx^2 + 2 A12 dx dy + A22 dy^2.

    ``pullback`` is A22^{1/2} when the tuple was produced by :func:`monic_reduction`
    (solutions of the reduced problem map back through its inverse), else None.
    """

    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    pullback: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def ell(self) -> int:
        return self.a11.shape[0]

    @property
    def is_monic(self) -> bool:
        return bool(np.array_equal(self.a22, np.eye(self.ell)))

    def symbol(self, xi1, xi2) -> np.ndarray:
        """L_A(xi) = A11 xi1^2 + 2 A12 xi1 xi2 + A22 xi2^2."""
        return self.a11 * xi1 * xi1 + 2.0 * self.a12 * xi1 * xi2 + self.a22 * xi2 * xi2

    def to_dict(self) -> dict:
        return {
            "ell": self.ell,
            "A11": self.a11.tolist(),
            "A12": self.a12.tolist(),
            "A22": self.a22.tolist(),
        }


def make_elliptic_tuple(a11, a12, a22, tol: Tolerances = DEFAULT) -> EllipticTuple:
    mats = {"A11": _as_matrix(a11, "A11"), "A12": _as_matrix(a12, "A12"), "A22": _as_matrix(a22, "A22")}
    shapes = {m.shape for m in mats.values()}
    if len(shapes) != 1:
        raise DimensionMismatch(f"A11, A12, A22 must share one shape, got {sorted(shapes)}")
    mats = {k: _symmetrized(v, k, tol) for k, v in mats.items()}
    for name in ("A11", "A22"):
        if not is_positive_definite(mats[name], tol):
            raise NotPositiveDefinite(f"{name} is not positive definite")
    return EllipticTuple(_frozen(mats["A11"]), _frozen(mats["A12"]), _frozen(mats["A22"]))


def monic_reduction(t: EllipticTuple) -> EllipticTuple:
    """Conjugate by A22^{-1/2} so that the last coefficient becomes the identity."""
    if t.is_monic:
        return t if t.pullback is not None else EllipticTuple(t.a11, t.a12, t.a22, _frozen(np.eye(t.ell)))
    root = hermitian_sqrt(t.a22).real
    inv = np.linalg.inv(root)
    inv = 0.5 * (inv + inv.T)
    a11 = inv @ t.a11 @ inv
    a12 = inv @ t.a12 @ inv
    return EllipticTuple(
        _frozen(0.5 * (a11 + a11.T)),
        _frozen(0.5 * (a12 + a12.T)),
        _frozen(np.eye(t.ell)),
        _frozen(root),
    )


def tuple_from_standard_root(s, d, tol: Tolerances = DEFAULT) -> EllipticTuple:
    """Monic tuple whose standard root is V = (S + iI) D."""
    s = _symmetrized(_as_matrix(s, "S"), "S", tol)
    d = _symmetrized(_as_matrix(d, "D"), "D", tol)
    if s.shape != d.shape:
        raise DimensionMismatch("S and D must have the same shape")
    if not is_positive_definite(d, tol):
        raise NotPositiveDefinite("D is not positive definite")
    v = (s + 1j * np.eye(s.shape[0])) @ d
    a11 = (v.conj().T @ v).real
    a12 = -0.5 * (v + v.conj().T).real
    return make_elliptic_tuple(a11, a12, np.eye(s.shape[0]), tol)


def laplacian(ell: int = 1) -> EllipticTuple:
    eye = np.eye(ell)
    return make_elliptic_tuple(eye, np.zeros((ell, ell)), eye)
