"""Root location for det M(lambda, alpha) = 0: argument-principle counting,
quadrisection with Newton polishing, branch continuation in alpha, and the
exponent bounds check."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bc_matrices import BCContext, ContextFactory, relative_residual, slogdet_many
from .config import DEFAULT, Tolerances
from .core_types import AngleConfig, BoundaryCondition, EllipticTuple, Regime
from .errors import (
    BoundaryZero,
    InputError,
    MaxDepthExceeded,
    NonConvergence,
    PhaseJump,
    SeedInvalid,
)

log = logging.getLogger(__name__)

_MAX_CONTOUR_POINTS = 400_000


@dataclass(frozen=True)
class SearchRegion:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    max_depth: int = 40

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise InputError(f"degenerate search region {self}")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def diameter(self) -> float:
        return math.hypot(self.re_max - self.re_min, self.im_max - self.im_min)

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (
            self.re_min - pad <= z.real <= self.re_max + pad and self.im_min - pad <= z.imag <= self.im_max + pad
        )

    def inflate(self, d: float) -> "SearchRegion":
        return SearchRegion(self.re_min - d, self.re_max + d, self.im_min - d, self.im_max + d, self.max_depth)

    def split(self, fx: float = 0.5, fy: float = 0.5):
        xm = self.re_min + fx * (self.re_max - self.re_min)
        ym = self.im_min + fy * (self.im_max - self.im_min)
        d = self.max_depth
        return [
            SearchRegion(self.re_min, xm, self.im_min, ym, d),
            SearchRegion(xm, self.re_max, self.im_min, ym, d),
            SearchRegion(self.re_min, xm, ym, self.im_max, d),
            SearchRegion(xm, self.re_max, ym, self.im_max, d),
        ]

    def corners(self):
        return [
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        ]


@dataclass(frozen=True)
class ExponentRoot:
    lam: complex
    alpha: float
    bc: BoundaryCondition
    multiplicity: int = 1
    residual: float = 0.0
    newton_iters: int = 0

    def to_dict(self) -> dict:
        return {
            "re": self.lam.real,
            "im": self.lam.imag,
            "alpha": self.alpha,
            "bc": self.bc.value,
            "multiplicity": self.multiplicity,
            "residual": self.residual,
            "newton_iters": self.newton_iters,
        }


@dataclass
class BranchCurve:
    bc: BoundaryCondition
    points: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    status: str = "complete"

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for a, _ in self.points])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([lam for _, lam in self.points], dtype=complex)


# ---------------------------------------------------------------- determinant


class DetFunction:
    """log det M(lambda) for one context, with the l-fold zero at lambda = 0 divided out
    for Dirichlet and Neumann conditions (there M vanishes identically at lambda = 0)."""

    def __init__(self, ctx: BCContext):
        self.ctx = ctx
        self.deflate = ctx.bc is not BoundaryCondition.MIXED
        self.evaluations = 0

    def log_many(self, lams) -> np.ndarray:
        """Complex log of the (deflated) determinant; -inf real part for exact zeros."""
        lams = np.asarray(lams, dtype=complex).ravel()
        sign, logabs = slogdet_many(self.ctx, lams)
        self.evaluations += lams.size
        out = logabs + 1j * np.angle(sign)
        if self.deflate:
            with np.errstate(divide="ignore"):
                out = out - self.ctx.ell * np.log(lams)
        out[np.isnan(out.real)] = -np.inf
        return out

    def log(self, lam) -> complex:
        return complex(self.log_many([lam])[0])


# ---------------------------------------------------------------- counting


def _winding(fn: DetFunction, region: SearchRegion, tol: Tolerances) -> int:
    corners = region.corners()
    ell = fn.ctx.ell
    rate = 4.0 + 2.0 * ell * fn.ctx.alpha
    seg_min = 1e-3 * tol.boundary_clearance
    pts = []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        n = int(min(4096, max(16, math.ceil(abs(b - a) * rate))))
        pts.append(a + (b - a) * np.arange(n) / n)
    z = np.concatenate(pts)
    f = fn.log_many(z)
    while True:
        if np.any(np.isinf(f.real)):
            raise BoundaryZero("determinant vanishes on the contour")
        zc = np.append(z, z[0])
        fc = np.append(f, f[0])
        darg = np.angle(np.exp(1j * (fc[1:].imag - fc[:-1].imag)))
        bad = np.flatnonzero(np.abs(darg) >= math.pi / 3)
        if bad.size == 0:
            total = np.sum(darg) / (2.0 * math.pi)
            k = int(round(total))
            if abs(total - k) > 1e-3:
                raise PhaseJump(f"non-integer winding {total}")
            return k
        seg = np.abs(zc[bad + 1] - zc[bad])
        if np.min(seg) < seg_min:
            raise BoundaryZero("phase refinement stalled near a zero on the contour")
        if z.size + bad.size > _MAX_CONTOUR_POINTS:
            raise PhaseJump("contour refinement exceeded the point budget")
        mids = 0.5 * (zc[bad] + zc[bad + 1])
        fm = fn.log_many(mids)
        z = np.insert(z, bad + 1, mids)
        f = np.insert(f, bad + 1, fm)


def _count(fn: DetFunction, region: SearchRegion, tol: Tolerances, retries: int = 3):
    """(count, region actually used); the region is inflated when a zero sits on its edge."""
    step = tol.boundary_clearance
    for attempt in range(retries + 1):
        try:
            return _winding(fn, region, tol), region
        except BoundaryZero:
            if attempt == retries:
                raise
            region = region.inflate(step)
            step *= 10.0
    raise AssertionError("unreachable")


def _context(source, alpha, bc, tol):
    if isinstance(source, BCContext):
        return source
    if isinstance(source, EllipticTuple):
        source = ContextFactory(source, tol)
    return source(alpha, bc)


def count_roots(source, region: SearchRegion, alpha=None, bc=None, tol: Tolerances = DEFAULT) -> int:
    """Number of exponents (with multiplicity) inside ``region``.

    ``source`` is a :class:`ContextFactory`, an :class:`EllipticTuple` or a ready
    :class:`BCContext` (then ``alpha`` and ``bc`` are ignored).
    """
    ctx = _context(source, alpha, bc, tol)
    return _count(DetFunction(ctx), region, tol)[0]


# ---------------------------------------------------------------- Newton


def _log_derivative(fn: DetFunction, lam: complex, tol: Tolerances) -> complex:
    """f'/f with f' from a central difference of f itself (scaled by f(lam)),
    which stays accurate when lam is closer to a zero than the step."""
    h = tol.fd_step * max(1.0, abs(lam))
    f0, fp, fm = fn.log_many([lam, lam + h, lam - h])
    if f0.real == -np.inf:
        return complex(np.inf)
    with np.errstate(over="ignore"):
        return (np.exp(fp - f0) - np.exp(fm - f0)) / (2.0 * h)


def newton(fn: DetFunction, lam0: complex, multiplicity: int = 1, tol: Tolerances = DEFAULT, max_iter: int = 60):
    """Modified Newton on det with log-derivative by central differences.

    Returns (lambda, iterations) or raises NonConvergence.
    """
    lam = complex(lam0)
    for it in range(1, max_iter + 1):
        d = _log_derivative(fn, lam, tol)
        if np.isinf(d):
            return lam, it
        if not np.isfinite(d) or d == 0:
            raise NonConvergence("vanishing log-derivative")
        step = multiplicity / d
        lam -= step
        if abs(step) <= 1e-14 * max(1.0, abs(lam)):
            return lam, it
        if abs(step) <= 1e-11 * max(1.0, abs(lam)) and relative_residual(fn.ctx, lam) <= 1e-3 * tol.root_residual_tol:
            return lam, it
    if relative_residual(fn.ctx, lam) <= tol.root_residual_tol:
        return lam, max_iter
    raise NonConvergence(f"Newton did not converge from {lam0}")


# ---------------------------------------------------------------- root finding


# split lines slightly off the midpoint: symmetric regions would otherwise cut
# along the real axis, where roots are common
_SPLITS = ((0.4931, 0.5069), (0.4731, 0.5219), (0.5379, 0.4627), (0.4413, 0.5587))


class _EdgeRoot(PhaseJump):
    """A sub-region holds part of a multiple root that sits on its edge."""


def _try_isolated(fn, region, count, tol):
    """Newton from the region centre; accept when a small box around the result holds all roots."""
    try:
        lam, iters = newton(fn, region.center, count, tol)
    except NonConvergence:
        return None
    if not region.contains(lam) or abs(lam) <= tol.zero_exclusion:
        return None
    r = max(1e-4 * max(1.0, abs(lam)), 10 * tol.dedup_tol)
    r = min(r, 0.25 * region.diameter) if region.diameter > 40 * tol.dedup_tol else r
    box = SearchRegion(lam.real - r, lam.real + r, lam.imag - r, lam.imag + r)
    try:
        local, _ = _count(fn, box, tol, retries=1)
    except (BoundaryZero, PhaseJump):
        return None
    if local > count:
        raise _EdgeRoot(f"{local} roots near {lam} but {count} counted in {region}")
    if local != count:
        return None
    res = relative_residual(fn.ctx, lam)
    if res > tol.root_residual_tol:
        return None
    return ExponentRoot(lam, fn.ctx.alpha, fn.ctx.bc, count, res, iters)


def _search(fn, region, count, depth, tol, out):
    if count == 0:
        return
    if count < 0:
        raise PhaseJump(f"negative root count in {region}")
    found = _try_isolated(fn, region, count, tol)
    if found is not None:
        out.append(found)
        return
    if depth >= region.max_depth:
        raise MaxDepthExceeded(f"subdivision depth {depth} reached in {region}")
    last_error = None
    for fx, fy in _SPLITS:
        subs = region.split(fx, fy)
        try:
            counts = [_winding(fn, s, tol) for s in subs]
        except (BoundaryZero, PhaseJump) as exc:
            last_error = exc
            continue
        if sum(counts) != count:
            last_error = PhaseJump(f"sub-counts {counts} do not add up to {count}")
            continue
        found: list = []
        try:
            for s, c in zip(subs, counts):
                _search(fn, s, c, depth + 1, tol, found)
        except _EdgeRoot as exc:
            last_error = exc
            continue
        out.extend(found)
        return
    raise last_error


def dedup_roots(roots: Sequence[ExponentRoot], tol: Tolerances = DEFAULT) -> list:
    merged: list = []
    for r in sorted(roots, key=lambda r: (r.lam.real, r.lam.imag)):
        for i, m in enumerate(merged):
            if abs(m.lam - r.lam) <= tol.dedup_tol * max(1.0, abs(r.lam)):
                merged[i] = ExponentRoot(
                    m.lam, m.alpha, m.bc, m.multiplicity + r.multiplicity, max(m.residual, r.residual), m.newton_iters
                )
                break
        else:
            merged.append(r)
    return sorted(merged, key=lambda r: (round(r.lam.real, 9), round(r.lam.imag, 9)))


def find_roots(source, region: SearchRegion, alpha=None, bc=None, tol: Tolerances = DEFAULT) -> list:
    """All exponents in ``region``, sorted by (Re, Im), with multiplicities."""
    ctx = _context(source, alpha, bc, tol)
    fn = DetFunction(ctx)
    total, used = _count(fn, region, tol)
    out: list = []
    _search(fn, used, total, 0, tol, out)
    roots = dedup_roots(out, tol)
    if sum(r.multiplicity for r in roots) != total:
        raise PhaseJump("root multiplicities do not add up to the contour count")
    return roots


# ---------------------------------------------------------------- continuation


def _correct(factory, alpha, bc, guess, tol):
    fn = DetFunction(factory(alpha, bc))
    lam, iters = newton(fn, guess, 1, tol, max_iter=80)
    res = relative_residual(fn.ctx, lam)
    if res > tol.root_residual_tol:
        raise NonConvergence(f"residual {res:.3g} after correction")
    return lam, res


def _alpha_grid(a0, a1, steps):
    grid = np.linspace(a0, a1, steps + 1)
    return [float(a) for a in grid]


def trace_branches(
    factory: ContextFactory,
    seeds: Sequence[ExponentRoot],
    alpha_end: float,
    steps: int,
    tol: Tolerances = DEFAULT,
    min_step_frac: float = 1e-6,
    upper_only: bool = False,
) -> list:
    """Continue several branches in lockstep over an equispaced alpha grid.

    Each step uses a secant predictor in alpha and a Newton corrector in lambda;
    a failed or jumping correction halves the alpha step. A branch that lands on
    another live branch is marked ``merged``; one whose step underflows is ``lost``.
    Before giving up, a stalled branch is re-located by a local root search at the
    target angle (this is what carries it through a collision of two real roots).
    With ``upper_only`` the re-located root must have Im >= 0.
    """
    if not seeds:
        return []
    bc = seeds[0].bc
    a0 = seeds[0].alpha
    for s in seeds:
        if s.bc is not bc or abs(s.alpha - a0) > 1e-12:
            raise SeedInvalid("seeds must share boundary condition and angle")
        if s.residual > tol.root_residual_tol:
            raise SeedInvalid(f"seed {s.lam} has residual {s.residual:.3g}")
    curves = [BranchCurve(bc, [(a0, s.lam)], [s.residual]) for s in seeds]
    live = [True] * len(curves)
    grid = _alpha_grid(a0, alpha_end, steps)
    min_step = abs(alpha_end - a0) * min_step_frac
    for target in grid[1:]:
        for i, cur in enumerate(curves):
            if not live[i]:
                continue
            ok = _advance(factory, cur, target, bc, tol, min_step)
            if not ok:
                ok = _relocate(factory, cur, target, bc, tol, upper_only)
            if not ok:
                cur.status = "lost"
                live[i] = False
        # collisions
        for i in range(len(curves)):
            if not live[i]:
                continue
            for j in range(i):
                if live[j] and abs(curves[i].points[-1][1] - curves[j].points[-1][1]) <= tol.dedup_tol * 10:
                    if not _snapped(target, tol):
                        curves[i].status = "merged"
                        live[i] = False
                        break
    return curves


def _relocate(factory, cur: BranchCurve, target: float, bc, tol, upper_only) -> bool:
    a_prev, lam_prev = cur.points[-1]
    move = abs(lam_prev - cur.points[-2][1]) if len(cur.points) >= 2 else 0.0
    r = max(0.05 * max(1.0, abs(lam_prev)), 3.0 * move)
    re_min = lam_prev.real - r
    if lam_prev.real > 0:
        re_min = max(re_min, 1e-3)
    region = SearchRegion(re_min, lam_prev.real + r, lam_prev.imag - r, lam_prev.imag + r)
    try:
        roots = find_roots(factory, region, target, bc, tol)
    except ArithmeticError:
        return False
    if upper_only:
        roots = [q for q in roots if q.lam.imag >= -1e-9]
    if not roots:
        return False
    best = min(roots, key=lambda q: abs(q.lam - lam_prev))
    cur.points.append((target, best.lam))
    cur.residuals.append(best.residual)
    return True


def _snapped(alpha, tol):
    return AngleConfig.make(alpha, tol).regime in (Regime.PI, Regime.TWO_PI)


def _forward_slope(factory, a, lam, h, bc, tol):
    """d lambda / d alpha from a short secant step in the direction of h."""
    delta = 1e-3 * h
    try:
        lam_d, _ = _correct(factory, a + delta, bc, lam, tol)
    except ArithmeticError:
        return None
    return (lam_d - lam) / delta


def _advance(factory, cur: BranchCurve, target: float, bc, tol, min_step) -> bool:
    a_prev, lam_prev = cur.points[-1]
    h = target - a_prev
    slope = None
    if len(cur.points) >= 2:
        a_pp, lam_pp = cur.points[-2]
        if a_prev != a_pp:
            slope = (lam_prev - lam_pp) / (a_prev - a_pp)
    if slope is None:
        slope = _forward_slope(factory, a_prev, lam_prev, h, bc, tol)
        if slope is None:
            return False
    a_cur, lam_cur = a_prev, lam_prev
    fresh = False
    while abs(target - a_cur) > 1e-15:
        h = math.copysign(min(abs(h), abs(target - a_cur)), target - a_cur)
        a_new = a_cur + h
        if abs(target - a_new) < 1e-12:
            a_new = target
        if abs(slope * (a_new - a_cur)) > 0.05 * max(0.5, abs(lam_cur)) and abs(h) > min_step:
            # keep the predicted move small compared with the gap to neighbouring branches
            h *= 0.5
            continue
        guess = lam_cur + slope * (a_new - a_cur)
        lam_new = None
        allowed = 0.2 * abs(slope * h) + 0.02 * abs(h) * max(1.0, abs(lam_cur)) + 1e-9
        for offset in (0.0, 1e-6j, -1e-6j):
            try:
                cand, _ = _correct(factory, a_new, bc, guess + offset, tol)
            except (NonConvergence, BoundaryZero, ArithmeticError):
                continue
            if abs(cand - guess) <= allowed:
                lam_new = cand
                break
        if lam_new is None:
            if not fresh:
                # the secant may be stale across a kink of the branch
                fresh = True
                new_slope = _forward_slope(factory, a_cur, lam_cur, h, bc, tol)
                if new_slope is not None:
                    slope = new_slope
                    continue
            h *= 0.5
            if abs(h) < min_step:
                return False
            continue
        fresh = False
        slope = (lam_new - lam_cur) / (a_new - a_cur)
        a_cur, lam_cur = a_new, lam_new
        h *= 2.0
    cur.points.append((target, lam_cur))
    cur.residuals.append(relative_residual(factory(target, bc), lam_cur))
    return True


def trace_branch(factory: ContextFactory, seed: ExponentRoot, alpha_end: float, steps: int, tol: Tolerances = DEFAULT):
    return trace_branches(factory, [seed], alpha_end, steps, tol)[0]


# ---------------------------------------------------------------- bounds


@dataclass
class RootVerdict:
    lam: complex
    multiplicity: int
    clause: str
    ok: bool


@dataclass
class BoundsReport:
    bc: BoundaryCondition
    alpha: float
    contractive: Optional[bool]
    verdicts: list
    ok: bool

    def to_dict(self) -> dict:
        return {
            "bc": self.bc.value,
            "alpha": self.alpha,
            "contractive_nwp": self.contractive,
            "ok": self.ok,
            "roots": [
                {"re": v.lam.real, "im": v.lam.imag, "multiplicity": v.multiplicity, "clause": v.clause, "ok": v.ok}
                for v in self.verdicts
            ],
        }


def _near_lattice(x: float, offset: float, spacing: float, tol: float) -> bool:
    k = round((x - offset) / spacing)
    return abs(x - offset - k * spacing) <= tol


def bound_clause(bc: BoundaryCondition, angle: AngleConfig, contractive: Optional[bool]) -> tuple[str, Callable]:
    """Name and predicate of the exponent statement that applies to (bc, angle)."""
    re_tol = 1e-7
    regime = angle.regime
    if bc is BoundaryCondition.DIRICHLET:
        table = {
            Regime.SUB_PI: ("|Re| > 1", lambda z: abs(z.real) > 1.0 - re_tol),
            Regime.PI: ("lambda in Z \\ {0}", lambda z: abs(z - round(z.real)) <= re_tol and round(z.real) != 0),
            Regime.SUPER_PI: ("|Re| > 1/2", lambda z: abs(z.real) > 0.5 - re_tol),
            Regime.TWO_PI: (
                "lambda in Z/2 \\ {0}",
                lambda z: abs(2 * z - round(2 * z.real)) <= 2 * re_tol and round(2 * z.real) != 0,
            ),
        }
        return table[regime]
    if bc is BoundaryCondition.NEUMANN:
        if regime is Regime.PI:
            return "lambda in Z \\ {0}", lambda z: abs(z - round(z.real)) <= re_tol and round(z.real) != 0
        if regime is Regime.TWO_PI:
            return (
                "lambda in Z/2 \\ {0}",
                lambda z: abs(2 * z - round(2 * z.real)) <= 2 * re_tol and round(2 * z.real) != 0,
            )
        return "no statement", lambda z: True
    if contractive:
        table = {
            Regime.SUB_PI: ("|Re| > 1/2", lambda z: abs(z.real) > 0.5 - re_tol),
            Regime.PI: ("Re in 1/2 + Z", lambda z: _near_lattice(z.real, 0.5, 1.0, re_tol)),
            Regime.SUPER_PI: ("|Re| > 1/4", lambda z: abs(z.real) > 0.25 - re_tol),
            Regime.TWO_PI: ("Re in 1/4 + Z/2", lambda z: _near_lattice(z.real, 0.25, 0.5, re_tol)),
        }
        return table[regime]
    table = {
        Regime.SUB_PI: ("|Re| > 1/2 or Re = 0", lambda z: abs(z.real) > 0.5 - re_tol or abs(z.real) <= re_tol),
        Regime.PI: ("Re in Z/2", lambda z: _near_lattice(z.real, 0.0, 0.5, re_tol)),
        Regime.SUPER_PI: ("|Re| > 1/4 or Re = 0", lambda z: abs(z.real) > 0.25 - re_tol or abs(z.real) <= re_tol),
        Regime.TWO_PI: ("Re in Z/4", lambda z: _near_lattice(z.real, 0.0, 0.25, re_tol)),
    }
    return table[regime]


def verify_bounds(factory: ContextFactory, bc, alpha, region: SearchRegion, tol: Tolerances = DEFAULT) -> BoundsReport:
    from .ellipticity import contractive_nwp

    bc = BoundaryCondition.parse(bc)
    angle = AngleConfig.make(alpha, tol)
    contractive = None
    if bc is BoundaryCondition.MIXED:
        contractive = contractive_nwp(factory.monic, tol, factory.root).ok
    clause, pred = bound_clause(bc, angle, contractive)
    roots = find_roots(factory, region, angle.alpha, bc, tol)
    verdicts = [RootVerdict(r.lam, r.multiplicity, clause, bool(pred(r.lam))) for r in roots]
    return BoundsReport(bc, angle.alpha, contractive, verdicts, all(v.ok for v in verdicts))


def zero_exponent_behaviour(bc) -> str:
    """Solutions with lambda = 0: constants for Neumann, none otherwise."""
    bc = BoundaryCondition.parse(bc)
    return "constants" if bc is BoundaryCondition.NEUMANN else "trivial"
