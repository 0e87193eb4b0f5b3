"""Independent check of the exponents by shooting.

For fixed lambda the angular part v(phi) of u = r^lambda v solves

    b2 v'' + (lambda - 1) b1 v' + (lambda (lambda - 1) b0 + lambda b2) v = 0

with trigonometric coefficients b0, b1, b2. We integrate the 2l x 2l
fundamental matrix from phi = 0 to phi = alpha and test whether some
combination of its columns satisfies the boundary conditions on both rays.
No standard root or matrix power is used on this path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .config import DEFAULT, Tolerances
from .core_types import BoundaryCondition, EllipticTuple, monic_reduction
from .errors import Mismatch, NonConvergence, PhaseJump, StepUnderflow
from .matfun import Branch, PowerEvaluator


@dataclass(frozen=True, eq=False)
class PencilCoefficients:
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray

    @classmethod
    def from_tuple(cls, t: EllipticTuple) -> "PencilCoefficients":
        return cls(np.asarray(t.a11), np.asarray(t.a12), np.asarray(t.a22))

    @property
    def ell(self) -> int:
        return self.a11.shape[0]

    def b0(self, phi):
        c, s = math.cos(phi), math.sin(phi)
        return self.a11 * c * c + self.a22 * s * s + 2.0 * self.a12 * s * c

    def b1(self, phi):
        c, s = math.cos(phi), math.sin(phi)
        return 2.0 * (self.a22 - self.a11) * s * c + 2.0 * self.a12 * (c * c - s * s)

    def b2(self, phi):
        c, s = math.cos(phi), math.sin(phi)
        return self.a11 * s * s + self.a22 * c * c - 2.0 * self.a12 * c * s


def pencil_coefficients(t: EllipticTuple) -> PencilCoefficients:
    return PencilCoefficients.from_tuple(t)


def first_order_system(pc: PencilCoefficients, lam):
    """phi -> A(phi) with (v, v')' = A (v, v')."""
    lam = complex(lam)
    n = pc.ell
    eye = np.eye(n)

    def a(phi):
        b2inv = np.linalg.inv(pc.b2(phi))
        lower_left = -b2inv @ (lam * (lam - 1.0) * pc.b0(phi)) - lam * eye
        lower_right = -(lam - 1.0) * b2inv @ pc.b1(phi)
        return np.block([[np.zeros((n, n)), eye], [lower_left, lower_right]])

    return a


@dataclass(eq=False)
class FundamentalMatrix:
    y: np.ndarray
    alpha: float
    lam: complex
    step_stats: dict = field(default_factory=dict)


def _integrate(pc: PencilCoefficients, lams, alpha, tol: Tolerances, dense=False, y0=None):
    """Integrate the fundamental matrices for a batch of exponents in one solve."""
    lams = np.asarray(lams, dtype=complex).ravel()
    k = lams.size
    n = pc.ell
    m = 2 * n
    c2 = (lams * (lams - 1.0))[:, None, None]
    c1 = (lams - 1.0)[:, None, None]
    c0 = lams[:, None, None]
    if y0 is None:
        y0 = np.broadcast_to(np.eye(m, dtype=complex), (k, m, m))
    cols = y0.shape[2]

    def rhs(phi, flat):
        y = flat.reshape(k, m, cols)
        top, bottom = y[:, :n, :], y[:, n:, :]
        b2inv = np.linalg.inv(pc.b2(phi))
        g0 = b2inv @ pc.b0(phi)
        g1 = b2inv @ pc.b1(phi)
        d_bottom = -c2 * np.einsum("ij,kjc->kic", g0, top) - c0 * top - c1 * np.einsum("ij,kjc->kic", g1, bottom)
        return np.concatenate([bottom, d_bottom], axis=1).ravel()

    sol = solve_ivp(
        rhs,
        (0.0, float(alpha)),
        np.ascontiguousarray(y0).ravel().astype(complex),
        method="DOP853",
        rtol=tol.ode_tol,
        atol=tol.ode_tol * 1e-2,
        dense_output=dense,
    )
    if sol.status != 0:
        raise StepUnderflow(f"integration failed: {sol.message}")
    return sol, sol.y[:, -1].reshape(k, m, cols)


def fundamental_matrix(pc: PencilCoefficients, lam, alpha, tol: Tolerances = DEFAULT) -> FundamentalMatrix:
    sol, y = _integrate(pc, [lam], alpha, tol)
    return FundamentalMatrix(y[0], float(alpha), complex(lam), {"nfev": int(sol.nfev), "steps": len(sol.t) - 1})


def _bc_rows(pc: PencilCoefficients, kind_neumann: bool, phi, lams):
    """Row blocks (k, l, 2l) of the boundary operator at angle phi."""
    n = pc.ell
    lams = np.asarray(lams, dtype=complex)
    if not kind_neumann:
        rows = np.hstack([np.eye(n), np.zeros((n, n))]).astype(complex)
        return np.broadcast_to(rows, (lams.size, n, 2 * n))
    left = 0.5 * lams[:, None, None] * pc.b1(phi)
    right = np.broadcast_to(pc.b2(phi), (lams.size, n, n))
    return np.concatenate([left, right], axis=2)


def boundary_matrices(pc: PencilCoefficients, ys, lams, alpha, bc) -> np.ndarray:
    """2l x 2l matrices whose rows apply the ray conditions to the fundamental solutions.

    ``bc.flags`` is (d_plus, d_minus): the first acts on phi = alpha, the second on
    phi = 0; for ``MIXED`` this is Neumann at 0 and Dirichlet at alpha.
    """
    bc = BoundaryCondition.parse(bc)
    at_alpha, at_zero = bc.flags
    r0 = _bc_rows(pc, bool(at_zero), 0.0, lams)
    ra = _bc_rows(pc, bool(at_alpha), float(alpha), lams) @ ys
    return np.concatenate([r0, ra], axis=1)


def boundary_determinant(fm: FundamentalMatrix, bc, pc: PencilCoefficients) -> complex:
    m = boundary_matrices(pc, fm.y[None], [fm.lam], fm.alpha, bc)
    return complex(np.linalg.det(m[0]))


class ShootingOracle:
    """Boundary determinant of the shooting problem for one tuple, angle and condition."""

    def __init__(self, t: EllipticTuple, alpha: float, bc, tol: Tolerances = DEFAULT):
        self.tuple = t
        self.pc = pencil_coefficients(t)
        self.alpha = float(alpha)
        self.bc = BoundaryCondition.parse(bc)
        self.tol = tol
        self.evaluations = 0

    def det_many(self, lams) -> np.ndarray:
        lams = np.asarray(lams, dtype=complex).ravel()
        out = np.empty(lams.size, dtype=complex)
        chunk = 64
        for s in range(0, lams.size, chunk):
            part = lams[s : s + chunk]
            _, ys = _integrate(self.pc, part, self.alpha, self.tol)
            out[s : s + chunk] = np.linalg.det(boundary_matrices(self.pc, ys, part, self.alpha, self.bc))
        self.evaluations += lams.size
        return out

    def det(self, lam) -> complex:
        return complex(self.det_many([lam])[0])

    def refine(self, lam0, multiplicity: int = 1, iters: int = 30):
        """Modified Newton on the oracle determinant (finite-difference derivative)."""
        lam = complex(lam0)
        h = 1e-5 * max(1.0, abs(lam))
        for it in range(iters):
            f0, fp, fm = self.det_many([lam, lam + h, lam - h])
            if f0 == 0:
                return lam, it
            d = (fp - fm) / (2 * h)
            if d == 0:
                break
            step = multiplicity * f0 / d
            lam -= step
            if abs(step) <= 1e-12 * max(1.0, abs(lam)):
                return lam, it + 1
        return lam, iters

    def winding(self, re_min, re_max, im_min, im_max, n_per_side=48, max_refine=8) -> int:
        """Winding number of the oracle determinant along a rectangle, with phase refinement."""
        corners = [complex(re_min, im_min), complex(re_max, im_min), complex(re_max, im_max), complex(re_min, im_max)]
        pts = []
        for a, b in zip(corners, corners[1:] + corners[:1]):
            s = np.linspace(0.0, 1.0, n_per_side, endpoint=False)
            pts.append(a + (b - a) * s)
        z = np.concatenate(pts)
        f = self.det_many(z)
        for _ in range(max_refine):
            zc = np.append(z, z[0])
            fc = np.append(f, f[0])
            darg = np.angle(fc[1:] / fc[:-1])
            bad = np.flatnonzero(np.abs(darg) >= math.pi / 4)
            if bad.size == 0:
                return int(round(np.sum(darg) / (2 * math.pi)))
            mids = 0.5 * (zc[bad] + zc[bad + 1])
            fm = self.det_many(mids)
            z = np.insert(z, bad + 1, mids)
            f = np.insert(f, bad + 1, fm)
        raise PhaseJump("oracle phase did not resolve along the contour")


@dataclass
class AgreementReport:
    matches: list
    oracle_count: int
    algebraic_count: int
    max_distance: float
    ok: bool

    def to_dict(self):
        return {
            "matches": [
                {"algebraic": [a.real, a.imag], "oracle": [o.real, o.imag], "distance": d} for a, o, d in self.matches
            ],
            "oracle_count": self.oracle_count,
            "algebraic_count": self.algebraic_count,
            "max_distance": self.max_distance,
            "ok": self.ok,
        }


def cross_check(t: EllipticTuple, bc, alpha, roots, region=None, tol: Tolerances = DEFAULT, raise_on_mismatch=True):
    """Refine every algebraic root on the oracle and compare root counts over ``region``.

    ``roots`` is a sequence of objects with ``lam`` and ``multiplicity`` attributes;
    ``region`` is (re_min, re_max, im_min, im_max) or None to skip the count check.
    """
    oracle = ShootingOracle(t, alpha, bc, tol)
    matches = []
    offending = []
    for r in roots:
        lam_o, _ = oracle.refine(r.lam, r.multiplicity)
        dist = abs(lam_o - r.lam)
        matches.append((complex(r.lam), lam_o, float(dist)))
        if not dist <= tol.oracle_match_tol:
            offending.append(complex(r.lam))
    alg_count = int(sum(r.multiplicity for r in roots))
    if region is not None:
        oracle_count = oracle.winding(*region)
    else:
        oracle_count = alg_count
    max_d = max((m[2] for m in matches), default=0.0)
    ok = not offending and oracle_count == alg_count
    if not ok and raise_on_mismatch:
        msg = f"oracle disagrees: {len(offending)} unmatched roots, oracle count {oracle_count} vs {alg_count}"
        raise Mismatch(msg, offending=offending)
    return AgreementReport(matches, oracle_count, alg_count, max_d, ok)


def _null_solution(t, lam, alpha, bc, phis, tol):
    pc = pencil_coefficients(t)
    sol, ys = _integrate(pc, [lam], alpha, tol, dense=True)
    m = boundary_matrices(pc, ys, [lam], alpha, bc)[0]
    _, sv, vh = np.linalg.svd(m)
    init = vh[-1].conj()
    n = pc.ell
    vals = np.array([(sol.sol(p).reshape(2 * n, 2 * n) @ init)[:n] for p in phis])
    return vals, init, float(sv[-1] / sv[0])


def null_vector_solution(t: EllipticTuple, lam, alpha, bc, phis, tol: Tolerances = DEFAULT):
    """v(phi) at ``phis`` for the null vector of the shooting boundary matrix at ``lam``,
    and the singular value ratio of that matrix."""
    vals, _, ratio = _null_solution(t, complex(lam), alpha, bc, phis, tol)
    return vals, ratio


def representation_error(t: EllipticTuple, root, lam, alpha, bc, n_samples=50, tol: Tolerances = DEFAULT) -> float:
    """Sup-distance between the shooting solution and the closed form
    (cos phi + sin phi V)^{lam,+} c1 + (cos phi + sin phi conj V)^{lam,-} c2.

    ``t`` must be monic and ``root`` its standard root. Both sides are normalised to
    unit sup norm and aligned by the least-squares complex phase.
    """
    lam = complex(lam)
    phis = np.linspace(0.0, float(alpha), n_samples)
    v_ode, init, _ = _null_solution(t, lam, alpha, bc, phis, tol)
    n = t.ell
    v = root.v
    # v(0) = c1 + c2 and v'(0) = lam (V c1 + conj(V) c2)
    lhs = np.block([[np.eye(n), np.eye(n)], [lam * v, lam * v.conj()]])
    c = np.linalg.solve(lhs, init)
    c1, c2 = c[:n], c[n:]
    closed = []
    for p in phis:
        w = math.cos(p) * np.eye(n) + math.sin(p) * v
        plus = PowerEvaluator(w, Branch.PLUS, tol, on_cut="convention").power(lam)
        minus = PowerEvaluator(w.conj(), Branch.MINUS, tol, on_cut="convention").power(lam)
        closed.append(plus @ c1 + minus @ c2)
    closed = np.array(closed)
    a = v_ode.ravel()
    b = closed.ravel()
    a = a / np.max(np.abs(a))
    b = b / np.max(np.abs(b))
    phase = np.vdot(b, a)
    phase = phase / abs(phase) if abs(phase) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))
