"""Boundary matrices M(lambda, alpha) whose singularity characterises the exponents.

Every boundary condition is built from the pair

    P = Z^lambda,  Q = conj(Z)^lambda       (alpha < pi, principal branch)
    P = Y^(2 lambda), Q = conj(Y)^(2 lambda) (pi < alpha < 2 pi, Y = -Z^(1/2))
    P = e^{+i pi lambda}, Q = e^{-i pi lambda}       (alpha = pi)
    P = e^{+2 i pi lambda}, Q = e^{-2 i pi lambda}   (alpha = 2 pi)

and then combined as

    Dirichlet: P - Q
    mixed:     K (P - Q) + i (P + Q),    K = [D^{-1/2} S D^{-1/2}, D] / 2
    Neumann:   E P E^{-1} - conj(E) Q conj(E)^{-1},   E = K + iI
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import DEFAULT, Tolerances
from .core_types import AngleConfig, BoundaryCondition, EllipticTuple, Regime, monic_reduction
from .errors import NotNeumannWellPosed, RangeViolation, ZeroLambda
from .matfun import Branch, PowerEvaluator, hermitian_sqrt, matrix_power, numerical_range_boundary
from .standard_root import StandardRoot, compute_standard_root

_EPS = np.finfo(float).eps
SENTINEL_FACTOR = 64.0


def z_alpha(root: StandardRoot, alpha: float) -> np.ndarray:
    """cos(a) I + sin(a) D^{1/2} S D^{1/2} + i sin(a) D."""
    dh = hermitian_sqrt(root.d)
    n = root.ell
    z = math.cos(alpha) * np.eye(n) + math.sin(alpha) * (dh @ root.s @ dh) + 1j * math.sin(alpha) * root.d
    return 0.5 * (z + z.T)


def commutator_block(root: StandardRoot) -> np.ndarray:
    """K = [D^{-1/2} S D^{-1/2}, D] / 2 (real skew-symmetric)."""
    w, u = np.linalg.eigh(root.d)
    dmh = (u / np.sqrt(w)) @ u.T
    a = dmh @ root.s @ dmh
    k = 0.5 * (a @ root.d - root.d @ a)
    return 0.5 * (k - k.T)


@dataclass(eq=False)
class BCContext:
    angle: AngleConfig
    bc: BoundaryCondition
    root: StandardRoot
    z_alpha: np.ndarray
    comm_half: np.ndarray
    y_alpha: Optional[np.ndarray] = None
    e_matrix: Optional[np.ndarray] = None
    tol: Tolerances = DEFAULT
    _p: Optional[PowerEvaluator] = field(default=None, repr=False)
    _q: Optional[PowerEvaluator] = field(default=None, repr=False)
    _e_inv: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def alpha(self) -> float:
        return self.angle.alpha

    @property
    def ell(self) -> int:
        return self.root.ell

    def pq_many(self, lams):
        """P and Q stacked over an array of exponents, shape (k, ell, ell)."""
        lams = np.asarray(lams, dtype=complex).ravel()
        eye = np.eye(self.ell)
        regime = self.angle.regime
        if regime is Regime.SUB_PI:
            return self._p.power_many(lams), self._q.power_many(lams)
        if regime is Regime.SUPER_PI:
            return self._p.power_many(2.0 * lams), self._q.power_many(2.0 * lams)
        turn = math.pi if regime is Regime.PI else 2.0 * math.pi
        p = np.exp(1j * turn * lams)[:, None, None] * eye
        q = np.exp(-1j * turn * lams)[:, None, None] * eye
        return p, q

    def matrices(self, lams):
        """Boundary matrices and their cancellation scales for an array of exponents."""
        p, q = self.pq_many(lams)
        pn = np.linalg.norm(p, axis=(1, 2)) + np.linalg.norm(q, axis=(1, 2))
        if self.bc is BoundaryCondition.DIRICHLET:
            return p - q, pn
        if self.bc is BoundaryCondition.MIXED:
            k = self.comm_half
            m = k @ (p - q) + 1j * (p + q)
            return m, pn * (1.0 + np.linalg.norm(k))
        e, ei = self.e_matrix, self._e_inv
        ec, eic = e.conj(), ei.conj()
        m = e @ p @ ei - ec @ q @ eic
        return m, pn * np.linalg.norm(e) * np.linalg.norm(ei)


    def balanced(self, lams):
        """Well-scaled factor R of M with det M = det R * exp(log_factor).

        For |Im lambda| large one of P, Q dominates and both are far from normal, so M
        itself is numerically rank deficient even where it is invertible. Dividing out
        the dominant power (whose determinant is exp(lambda * sum log mu)) leaves a
        factor whose smallest singular value is meaningful. Returns (R, scale, log_factor).
        """
        lams = np.asarray(lams, dtype=complex).ravel()
        regime = self.angle.regime
        if regime in (Regime.PI, Regime.TWO_PI):
            m, scale = self.matrices(lams)
            return m, scale, np.zeros(lams.size, dtype=complex)
        expo = lams if regime is Regime.SUB_PI else 2.0 * lams
        with np.errstate(over="ignore", invalid="ignore"):
            p, q = self.pq_many(lams)
            use_q = np.linalg.norm(p, axis=(1, 2)) <= np.linalg.norm(q, axis=(1, 2))
            n = self.ell
            out = np.empty((lams.size, n, n), dtype=complex)
            scale = np.empty(lams.size)
            log_factor = np.empty(lams.size, dtype=complex)
            eye = np.eye(n)
            for flag, small, big_ev, sign in ((True, p, self._q, 1.0), (False, q, self._p, -1.0)):
                idx = np.flatnonzero(use_q == flag)
                if idx.size == 0:
                    continue
                inv = big_ev.power_many(-expo[idx])
                g = small[idx] @ inv
                log_factor[idx] = expo[idx] * big_ev.log_det()
                gn = np.linalg.norm(g, axis=(1, 2))
                if self.bc is BoundaryCondition.DIRICHLET:
                    out[idx] = sign * (g - eye)
                    scale[idx] = gn + math.sqrt(n)
                elif self.bc is BoundaryCondition.MIXED:
                    k = self.comm_half
                    if flag:
                        # M = ((K + iI) g - (K - iI)) Q
                        out[idx] = (k + 1j * eye) @ g - (k - 1j * eye)
                    else:
                        # M = ((K + iI) - (K - iI) g) P
                        out[idx] = (k + 1j * eye) - (k - 1j * eye) @ g
                    scale[idx] = (gn + math.sqrt(n)) * (1.0 + np.linalg.norm(k))
                else:
                    e, ei = self.e_matrix, self._e_inv
                    ec, eic = e.conj(), ei.conj()
                    if flag:
                        # M = (E P E^-1 Ec Q^-1 Ec^-1 - I) Ec Q Ec^-1
                        out[idx] = e @ small[idx] @ ei @ ec @ inv @ eic - eye
                    else:
                        # M = (I - Ec Q Ec^-1 E P^-1 E^-1) E P E^-1
                        out[idx] = eye - ec @ small[idx] @ eic @ e @ inv @ ei
                    cond_e = np.linalg.norm(e) * np.linalg.norm(ei)
                    scale[idx] = gn * cond_e**2 + math.sqrt(n)
        return out, scale, log_factor


def build_context(
    root: StandardRoot, alpha, bc, tol: Tolerances = DEFAULT
) -> BCContext:
    angle = alpha if isinstance(alpha, AngleConfig) else AngleConfig.make(alpha, tol)
    bc = BoundaryCondition.parse(bc)
    z = z_alpha(root, angle.alpha)
    k = commutator_block(root)
    ctx = BCContext(angle=angle, bc=bc, root=root, z_alpha=z, comm_half=k, tol=tol)
    if angle.regime is Regime.SUB_PI:
        ctx._p = PowerEvaluator(z, Branch.PRINCIPAL, tol)
        ctx._q = PowerEvaluator(z.conj(), Branch.PRINCIPAL, tol)
    elif angle.regime is Regime.SUPER_PI:
        y = -matrix_power(z, 0.5, Branch.PRINCIPAL, tol)
        y = 0.5 * (y + y.T)
        wr = numerical_range_boundary(y, tol.n_range)
        if not wr.in_upper_half_plane(0.0):
            raise RangeViolation(f"numerical range of Y reaches Im = {wr.min_imag():.3g}")
        ctx.y_alpha = y
        ctx._p = PowerEvaluator(y, Branch.PRINCIPAL, tol)
        ctx._q = PowerEvaluator(y.conj(), Branch.PRINCIPAL, tol)
    if bc is BoundaryCondition.NEUMANN:
        rho = np.max(np.abs(np.linalg.eigvals(k)), initial=0.0)
        spec = np.linalg.eigvals(2.0 * k)
        if np.min(np.abs(spec - 2j)) <= tol.nwp_tol:
            raise NotNeumannWellPosed(f"2i is in the commutator spectrum (radius {2 * rho:.6g})")
        e = k + 1j * np.eye(root.ell)
        ctx.e_matrix = e
        ctx._e_inv = np.linalg.inv(e)
    return ctx


class ContextFactory:
    """Memoised contexts for one tuple: monic reduction and standard root are computed once."""

    def __init__(self, t: EllipticTuple, tol: Tolerances = DEFAULT, root: StandardRoot | None = None):
        self.tuple = t
        self.tol = tol
        self.monic = monic_reduction(t)
        self.root = root or compute_standard_root(self.monic, tol)
        self._cache: dict = {}

    def __call__(self, alpha, bc) -> BCContext:
        angle = alpha if isinstance(alpha, AngleConfig) else AngleConfig.make(alpha, self.tol)
        bc = BoundaryCondition.parse(bc)
        key = (angle.alpha, bc)
        if key not in self._cache:
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = build_context(self.root, angle, bc, self.tol)
        return self._cache[key]


def _check_lambda(lam):
    if lam == 0:
        raise ZeroLambda("lambda = 0 is handled separately (constant or trivial solutions)")


def m_matrix(ctx: BCContext, lam) -> np.ndarray:
    lam = complex(lam)
    _check_lambda(lam)
    return ctx.matrices([lam])[0][0]


def m_dirichlet(ctx: BCContext, lam) -> np.ndarray:
    return _with_bc(ctx, BoundaryCondition.DIRICHLET, lam)


def m_mixed(ctx: BCContext, lam) -> np.ndarray:
    return _with_bc(ctx, BoundaryCondition.MIXED, lam)


def m_neumann(ctx: BCContext, lam) -> np.ndarray:
    return _with_bc(ctx, BoundaryCondition.NEUMANN, lam)


def _with_bc(ctx, bc, lam):
    if ctx.bc is not bc:
        ctx = build_context(ctx.root, ctx.angle, bc, ctx.tol)
    return m_matrix(ctx, lam)


def relative_residual(ctx: BCContext, lam) -> float:
    """Smallest singular value of the balanced factor of M relative to its scale."""
    r, scale, _ = ctx.balanced([complex(lam)])
    if not (np.all(np.isfinite(r)) and np.isfinite(scale[0])):
        return math.inf
    return float(np.linalg.svd(r[0], compute_uv=False)[-1] / scale[0])


def slogdet_many(ctx: BCContext, lams):
    """(sign, log|det|) of M over an array of exponents.

    The determinant is taken from the balanced factor, so it stays accurate when
    M is dominated by one power. A factor whose smallest singular value is at
    rounding level relative to its scale is reported as log|det| = -inf.
    """
    lams = np.asarray(lams, dtype=complex).ravel()
    with np.errstate(over="ignore", invalid="ignore"):
        r, scale, log_factor = ctx.balanced(lams)
        sign, logabs = np.linalg.slogdet(np.where(np.isfinite(r), r, np.nan))
        logabs = logabs + log_factor.real
        sign = sign * np.exp(1j * log_factor.imag)
    ell = ctx.ell
    suspicious = logabs - log_factor.real - ell * np.log(scale) < np.log(1e-8)
    for i in np.flatnonzero(suspicious):
        if not np.all(np.isfinite(r[i])):
            continue
        smin = np.linalg.svd(r[i], compute_uv=False)[-1]
        if smin <= SENTINEL_FACTOR * _EPS * scale[i]:
            logabs[i] = -np.inf
            sign[i] = 0.0
    return sign, logabs


def det_m(ctx: BCContext, lam, bc=None):
    """(log|det M|, arg det M); exact zeros give log|det| = -inf."""
    if bc is not None and BoundaryCondition.parse(bc) is not ctx.bc:
        ctx = build_context(ctx.root, ctx.angle, bc, ctx.tol)
    lam = complex(lam)
    _check_lambda(lam)
    sign, logabs = slogdet_many(ctx, [lam])
    return float(logabs[0]), float(np.angle(sign[0]))
