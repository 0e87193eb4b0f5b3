"""Numerical tolerances.

Every tolerance lives here so tests and the CLI pin the same values.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # core types
    sym_tol: float = 1e-12
    angle_snap_tol: float = 1e-9
    pd_pivot: float = 1e-13
    # matrix functions
    eig_tol: float = 1e-10
    cut_tol: float = 1e-10
    range_tol: float = 1e-9
    cluster_rel: float = 1e-3
    n_range: int = 256
    # standard root
    real_axis_tol: float = 1e-9
    root_tol: float = 1e-9
    cond_max: float = 1e10
    # ellipticity
    nwp_tol: float = 1e-9
    kappa_grid: int = 720
    # exponent solver
    root_residual_tol: float = 1e-9
    dedup_tol: float = 1e-7
    fd_step: float = 1e-7
    boundary_clearance: float = 1e-6
    max_depth: int = 40
    zero_exclusion: float = 1e-8
    # ODE oracle
    ode_tol: float = 1e-10
    oracle_zero_tol: float = 1e-7
    oracle_match_tol: float = 1e-6


DEFAULT = Tolerances()
