"""Ellipticity ladder: strong ellipticity, Neumann well-posedness (plain and
contractive), formal positivity, and the Legendre-Hadamard constant."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .config import DEFAULT, Tolerances
from .core_types import EllipticTuple, monic_reduction
from .errors import ImplicationViolation, InvariantViolation, NotElliptic
from .standard_root import StandardRoot, companion_linearization, compute_standard_root


@dataclass(frozen=True)
class Verdict:
    ok: bool
    margin: float

    def __post_init__(self):
        object.__setattr__(self, "ok", bool(self.ok))
        object.__setattr__(self, "margin", float(self.margin))

    def __bool__(self):
        return self.ok


@dataclass
class EllipticityReport:
    strongly_elliptic: bool
    neumann_wellposed: Optional[bool] = None
    contractive_nwp: Optional[bool] = None
    formally_positive: Optional[bool] = None
    commutator_radius: Optional[float] = None
    kappa: Optional[float] = None
    margins: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def commutator(root: StandardRoot) -> np.ndarray:
    """[D^{-1}, C]."""
    dinv = np.linalg.inv(root.d)
    return dinv @ root.c - root.c @ dinv


def commutator_spectrum(root: StandardRoot) -> np.ndarray:
    """Spectrum of [D^{-1}, C], computed from the similar skew-symmetric matrix
    [D^{-1/2} S D^{-1/2}, D] so that it is exactly imaginary and conjugation closed."""
    w, u = np.linalg.eigh(root.d)
    dmh = (u / np.sqrt(w)) @ u.T
    a = dmh @ root.s @ dmh
    k = a @ root.d - root.d @ a
    k = 0.5 * (k - k.T)
    return np.linalg.eigvals(k)


def _lambda_min_symbol(t: EllipticTuple, theta: float) -> float:
    return float(np.linalg.eigvalsh(t.symbol(math.cos(theta), math.sin(theta)))[0])


def ellipticity_constant(t: EllipticTuple, tol: Tolerances = DEFAULT, strict: bool = False) -> float:
    """min over unit xi of the smallest eigenvalue of L_A(xi).

    Grid search on [0, pi) followed by bounded golden-section refinement around
    the best grid point. With ``strict`` a non-positive value raises NotElliptic.
    """
    grid = np.linspace(0.0, math.pi, tol.kappa_grid, endpoint=False)
    vals = np.array([_lambda_min_symbol(t, th) for th in grid])
    i = int(np.argmin(vals))
    h = math.pi / tol.kappa_grid
    res = minimize_scalar(
        lambda th: _lambda_min_symbol(t, th),
        bracket=None,
        bounds=(grid[i] - h, grid[i] + h),
        method="bounded",
        options={"xatol": 1e-12},
    )
    kappa = float(min(vals[i], res.fun))
    if strict and kappa <= _kappa_floor(t, tol):
        raise NotElliptic(f"Legendre-Hadamard constant {kappa:.3g} is not positive")
    return max(kappa, 0.0)


def _kappa_floor(t, tol):
    return tol.nwp_tol * max(np.linalg.norm(t.a11, 2), np.linalg.norm(t.a22, 2))


def is_strongly_elliptic(t: EllipticTuple, tol: Tolerances = DEFAULT) -> Verdict:
    """Margin is the smallest |Im beta| over roots of det L_A(1, beta)."""
    mt = monic_reduction(t)
    beta = np.linalg.eigvals(companion_linearization(mt))
    margin = float(np.min(np.abs(beta.imag)))
    kappa = ellipticity_constant(t, tol)
    ok = margin > tol.real_axis_tol and kappa > _kappa_floor(t, tol)
    return Verdict(ok, margin)


def _root(t, tol):
    if not is_strongly_elliptic(t, tol):
        raise NotElliptic("tuple is not strongly elliptic")
    return compute_standard_root(monic_reduction(t), tol)


def neumann_wellposed(t: EllipticTuple, tol: Tolerances = DEFAULT, root: StandardRoot | None = None) -> Verdict:
    root = root or _root(t, tol)
    spec = commutator_spectrum(root)
    margin = float(np.min(np.abs(spec - 2j)))
    ok = margin > tol.nwp_tol
    # A12 + V = [S, D]/2 + iD is invertible exactly when 2i is not in the spectrum
    mt = monic_reduction(t)
    smin = np.linalg.svd(mt.a12 + root.v, compute_uv=False)[-1]
    scale = np.linalg.norm(root.d, 2)
    if (margin > 1e3 * tol.nwp_tol) != (smin > 1e-3 * tol.nwp_tol * scale) and not (
        tol.nwp_tol < margin <= 1e3 * tol.nwp_tol
    ):
        raise InvariantViolation("invertibility of A12 + V disagrees with the commutator test")
    return Verdict(ok, margin)


def commutator_radius(t: EllipticTuple, tol: Tolerances = DEFAULT, root: StandardRoot | None = None) -> float:
    root = root or _root(t, tol)
    return float(np.max(np.abs(commutator_spectrum(root)), initial=0.0))


def contractive_nwp(t: EllipticTuple, tol: Tolerances = DEFAULT, root: StandardRoot | None = None) -> Verdict:
    margin = 2.0 - commutator_radius(t, tol, root)
    return Verdict(margin > tol.nwp_tol, margin)


def formally_positive(t: EllipticTuple, tol: Tolerances = DEFAULT) -> Verdict:
    m = np.block([[t.a11, t.a12], [t.a12, t.a22]])
    lam = float(np.linalg.eigvalsh(m)[0])
    return Verdict(lam > tol.pd_pivot * np.linalg.norm(m, 2), lam)


def classify(t: EllipticTuple, tol: Tolerances = DEFAULT) -> EllipticityReport:
    se = is_strongly_elliptic(t, tol)
    kappa = ellipticity_constant(t, tol)
    report = EllipticityReport(strongly_elliptic=se.ok, kappa=kappa, margins={"strongly_elliptic": se.margin})
    if not se:
        return report
    root = compute_standard_root(monic_reduction(t), tol)
    nwp = neumann_wellposed(t, tol, root)
    cnwp = contractive_nwp(t, tol, root)
    fp = formally_positive(t, tol)
    report.neumann_wellposed = nwp.ok
    report.contractive_nwp = cnwp.ok
    report.formally_positive = fp.ok
    report.commutator_radius = 2.0 - cnwp.margin
    report.margins.update(
        neumann_wellposed=nwp.margin, contractive_nwp=cnwp.margin, formally_positive=fp.margin
    )
    if fp.ok and not cnwp.ok:
        raise ImplicationViolation("formally positive tuple is not contractive Neumann well-posed")
    if cnwp.ok and not nwp.ok:
        raise ImplicationViolation("contractive tuple is not Neumann well-posed")
    return report
