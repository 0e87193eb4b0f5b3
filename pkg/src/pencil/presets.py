"""Built-in tuples and the branch-family generator used by ``pencil figure``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bc_matrices import ContextFactory
from .config import DEFAULT, Tolerances
from .core_types import BoundaryCondition, EllipticTuple, make_elliptic_tuple, tuple_from_standard_root
from .exponent_solver import BranchCurve, ExponentRoot, SearchRegion, find_roots, trace_branches

TWO_PI = 2.0 * math.pi


def fig1_tuple() -> EllipticTuple:
    return make_elliptic_tuple([[5.0, 0.6], [0.6, 1.5]], [[0.25, -0.4], [-0.4, -0.2]], np.eye(2))


def fig2left_tuple() -> EllipticTuple:
    return tuple_from_standard_root([[0.0, 0.0], [0.0, 2.0]], [[2.0, 1.0], [1.0, 2.0]])


def scalar_tuple(k: float) -> EllipticTuple:
    """Scalar tuple with standard root V = -k + i."""
    return tuple_from_standard_root([[-float(k)]], [[1.0]])


def fig2right_tuple() -> EllipticTuple:
    return scalar_tuple(10.0)


@dataclass(frozen=True)
class FigurePreset:
    name: str
    tuple_factory: object
    bcs: tuple
    alpha_start: float
    alpha_end: float
    re_max: float = 4.0
    im_max: float = 3.0


PRESETS = {
    "fig1": FigurePreset("fig1", fig1_tuple, tuple(BoundaryCondition), 1.0, TWO_PI),
    "fig2left": FigurePreset("fig2left", fig2left_tuple, (BoundaryCondition.NEUMANN,), math.pi, TWO_PI),
    "fig2right": FigurePreset("fig2right", fig2right_tuple, tuple(BoundaryCondition), 1.0, TWO_PI),
}


@dataclass
class BranchFamily:
    bc: BoundaryCondition
    branches: list = field(default_factory=list)

    def rows(self):
        for i, b in enumerate(self.branches):
            for (a, lam), res in zip(b.points, b.residuals):
                yield i, a, lam.real, lam.imag, res

    def leading(self, alphas, atol: float = 1e-9) -> np.ndarray:
        """Smallest positive Re(lambda) over all branches at each requested angle (nan if none)."""
        out = np.full(len(alphas), np.nan)
        for b in self.branches:
            for a, lam in b.points:
                if lam.real <= 0:
                    continue
                idx = np.flatnonzero(np.abs(np.asarray(alphas) - a) <= atol)
                for j in idx:
                    if not lam.real >= out[j]:
                        out[j] = lam.real
        return out


def _seed_alpha(a: float, direction: float) -> float:
    """Step off the closed-form angles, where all roots are multiple."""
    for special in (math.pi, TWO_PI):
        if abs(a - special) < 1e-9:
            return a + direction * 1e-3
    return a


def branch_family(
    t: EllipticTuple,
    bc,
    alpha_start: float,
    alpha_end: float,
    steps: int = 256,
    re_max: float = 4.0,
    im_max: float = 3.0,
    checkpoint: int = 16,
    tol: Tolerances = DEFAULT,
    factory: ContextFactory | None = None,
) -> BranchFamily:
    """Trace every exponent with Re in (0, re_max], 0 <= Im <= im_max over the angle range.

    Roots are seeded at the first angle and re-scanned every ``checkpoint`` steps so
    that branches entering the window later are picked up.
    """
    bc = BoundaryCondition.parse(bc)
    factory = factory or ContextFactory(t, tol)
    direction = 1.0 if alpha_end >= alpha_start else -1.0
    grid = np.linspace(alpha_start, alpha_end, steps + 1)
    grid[0] = _seed_alpha(grid[0], direction)
    region = SearchRegion(0.02, re_max, -0.5, im_max)
    family = BranchFamily(bc)
    live: list[BranchCurve] = []

    def scan(a):
        roots = find_roots(factory, region, float(a), bc, tol)
        return [r for r in roots if r.lam.imag >= -1e-9]

    seeds = scan(grid[0])
    for s in seeds:
        c = BranchCurve(bc, [(float(grid[0]), s.lam)], [s.residual])
        live.append(c)
        family.branches.append(c)
    k = 0
    while k < steps:
        k_next = min(steps, k + checkpoint)
        a_next = float(grid[k_next])
        active = [c for c in live if c.status == "complete"]
        if active:
            seeds = [ExponentRoot(c.points[-1][1], c.points[-1][0], bc, 1, c.residuals[-1]) for c in active]
            traced = trace_branches(factory, seeds, a_next, k_next - k, tol, upper_only=True)
            for c, tr in zip(active, traced):
                c.points.extend(tr.points[1:])
                c.residuals.extend(tr.residuals[1:])
                c.status = tr.status
        k = k_next
        if k < steps:
            ends = [c.points[-1][1] for c in live if c.status == "complete" and abs(c.points[-1][0] - a_next) < 1e-12]
            for r in scan(a_next):
                if any(min(abs(r.lam - e), abs(r.lam - np.conj(e))) <= 1e-6 for e in ends):
                    continue
                c = BranchCurve(bc, [(a_next, r.lam)], [r.residual])
                live.append(c)
                family.branches.append(c)
    return family
