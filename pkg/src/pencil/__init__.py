"""Singular exponents of second-order elliptic systems in plane angles."""

__version__ = "0.1.0"

from .config import DEFAULT, Tolerances
from .core_types import (
    AngleConfig,
    BoundaryCondition,
    EllipticTuple,
    Regime,
    laplacian,
    make_elliptic_tuple,
    monic_reduction,
    tuple_from_standard_root,
)
from .standard_root import StandardRoot, compute_standard_root
from .ellipticity import classify
from .bc_matrices import ContextFactory, build_context, det_m, m_matrix
from .exponent_solver import SearchRegion, count_roots, find_roots, trace_branch, verify_bounds

__all__ = [
    "DEFAULT",
    "Tolerances",
    "AngleConfig",
    "BoundaryCondition",
    "EllipticTuple",
    "Regime",
    "laplacian",
    "make_elliptic_tuple",
    "monic_reduction",
    "tuple_from_standard_root",
    "StandardRoot",
    "compute_standard_root",
    "classify",
    "ContextFactory",
    "build_context",
    "det_m",
    "m_matrix",
    "SearchRegion",
    "count_roots",
    "find_roots",
    "trace_branch",
    "verify_bounds",
]
