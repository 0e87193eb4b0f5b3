"""Matrix functional calculus: branch-aware powers and logarithms, square roots,
spectra and numerical-range samples.

Powers and logarithms are evaluated by a block Schur-Parlett scheme. Eigenvalues
are grouped into clusters, each cluster is evaluated by a Taylor series about its
mean, and the coupling blocks are filled in from Sylvester equations. When every
cluster is a single eigenvalue the result is linear in the eigenvalue images, so
the spectral projectors are computed once and reused for every exponent.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .config import DEFAULT, Tolerances
from .errors import BranchCut, NonConvergence, NotPositiveDefinite, SingularMatrix

_EPS = np.finfo(float).eps


class Branch(enum.Enum):
    """Argument ranges: principal (-pi, pi], plus [0, 2pi), minus (-2pi, 0]."""

    PRINCIPAL = "principal"
    PLUS = "plus"
    MINUS = "minus"


def arg_branch(z, branch: Branch = Branch.PRINCIPAL):
    """Argument of ``z`` in the range of ``branch`` (vectorised)."""
    a = np.angle(np.asarray(z, dtype=complex))
    a = np.where(a == -math.pi, math.pi, a)
    if branch is Branch.PLUS:
        a = np.where(a < 0.0, a + 2.0 * math.pi, a)
    elif branch is Branch.MINUS:
        a = np.where(a > 0.0, a - 2.0 * math.pi, a)
    return a


def log_branch(z, branch: Branch = Branch.PRINCIPAL):
    z = np.asarray(z, dtype=complex)
    return np.log(np.abs(z)) + 1j * arg_branch(z, branch)


def distance_to_cut(z, branch: Branch = Branch.PRINCIPAL):
    """Distance from ``z`` to the cut ray of ``branch`` (negative or positive reals)."""
    z = np.asarray(z, dtype=complex)
    outward = -z.real if branch is Branch.PRINCIPAL else z.real
    return np.where(outward >= 0.0, np.abs(z.imag), np.abs(z))


# ---------------------------------------------------------------- spectra


def spectrum(m, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Eigenvalues with algebraic multiplicity, checked for backward error."""
    m = np.asarray(m)
    try:
        w = sla.eigvals(m)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonConvergence(f"eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise NonConvergence("eigensolver returned non-finite values")
    scale = max(np.linalg.norm(m, 2), np.finfo(float).tiny)
    eye = np.eye(m.shape[0])
    for mu in w:
        smin = np.linalg.svd(m - mu * eye, compute_uv=False)[-1]
        if smin > tol.eig_tol * scale:
            raise NonConvergence(f"eigenvalue {mu} has backward error {smin / scale:.3g}")
    return w


def spectral_radius(m) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    try:
        return float(np.max(np.abs(sla.eigvals(m))))
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc


def hermitian_sqrt(p, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Unique Hermitian positive definite square root."""
    p = np.asarray(p)
    herm = 0.5 * (p + p.conj().T)
    w, u = np.linalg.eigh(herm)
    if w[0] <= tol.pd_pivot * max(abs(w[-1]), np.finfo(float).tiny):
        raise NotPositiveDefinite("matrix is not positive definite")
    q = (u * np.sqrt(w)) @ u.conj().T
    q = 0.5 * (q + q.conj().T)
    if np.isrealobj(p):
        q = q.real
    return q


# ---------------------------------------------------------------- Schur-Parlett


class _PowerFn:
    def __init__(self, lam, branch):
        self.lam = complex(lam)
        self.branch = branch

    def value(self, mu):
        return np.exp(self.lam * log_branch(mu, self.branch))

    def taylor(self, sigma, log_sigma, kmax):
        c = np.empty(kmax, dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            c[0] = np.exp(self.lam * log_sigma)
            for k in range(1, kmax):
                c[k] = c[k - 1] * (self.lam - k + 1) / (k * sigma)
        return c


class _LogFn:
    def __init__(self, branch):
        self.branch = branch

    def value(self, mu):
        return log_branch(mu, self.branch)

    def taylor(self, sigma, log_sigma, kmax):
        c = np.empty(kmax, dtype=complex)
        c[0] = log_sigma
        k = np.arange(1, kmax)
        c[1:] = (-1.0) ** (k + 1) / (k * sigma ** k)
        return c


def _union_find_clusters(w, rel):
    n = len(w)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) <= rel * max(abs(w[i]), abs(w[j])):
                parent[find(i)] = find(j)
    return [find(i) for i in range(n)]


def _split_by_sheet(w, labels, branch):
    """Separate cluster members that sit on different sides of the branch cut."""
    out = list(labels)
    groups: dict = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    next_label = max(labels, default=0) + 1
    for members in groups.values():
        if len(members) < 2:
            continue
        sigma = np.mean(w[members])
        base = log_branch(sigma, branch)
        sheets = {}
        for i in members:
            jump = (log_branch(w[i], branch) - base - np.log(w[i] / sigma)).imag
            sheets.setdefault(int(round(jump / (2 * math.pi))), []).append(i)
        if len(sheets) > 1:
            for idx in list(sheets.values())[1:]:
                for i in idx:
                    out[i] = next_label
                next_label += 1
    return out


def _reorder(t, q, labels):
    """Make equal labels contiguous on the Schur diagonal (adjacent swaps)."""
    labels = list(labels)
    order = list(dict.fromkeys(labels))
    pos = 0
    for lab in order:
        j = pos
        while j < len(labels):
            if labels[j] == lab:
                if j != pos:
                    t, q, info = lapack.ztrexc(t, q, j + 1, pos + 1)
                    if info != 0:
                        raise NonConvergence("Schur reordering failed")
                    labels.insert(pos, labels.pop(j))
                pos += 1
            j += 1
    blocks = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            blocks.append((start, i))
            start = i
    return t, q, blocks


def _taylor_block(fn, tblock, branch, kmax=400):
    m = tblock.shape[0]
    diag = np.diag(tblock)
    sigma = diag.mean()
    log_sigma = complex(log_branch(sigma, branch))
    n = tblock - sigma * np.eye(m)
    coeffs = fn.taylor(sigma, log_sigma, kmax)
    f = coeffs[0] * np.eye(m, dtype=complex)
    term = np.eye(m, dtype=complex)
    small = 0
    if not np.isfinite(coeffs[0]):
        # the power itself overflows; report it instead of iterating on inf/nan
        return np.full((m, m), coeffs[0], dtype=complex)
    for k in range(1, kmax):
        term = term @ n
        with np.errstate(over="ignore", invalid="ignore"):
            inc = coeffs[k] * term
        if not np.all(np.isfinite(inc)):
            return f + inc
        f += inc
        if k >= m and np.linalg.norm(inc) <= _EPS * np.linalg.norm(f):
            small += 1
            if small >= 2:
                return f
        else:
            small = 0
    raise NonConvergence("Taylor series on eigenvalue cluster did not converge")


def _block_parlett(t, blocks, diag_blocks):
    n = t.shape[0]
    f = np.zeros((n, n), dtype=complex)
    for (a, b), fb in zip(blocks, diag_blocks):
        f[a:b, a:b] = fb
    nb = len(blocks)
    for d in range(1, nb):
        for i in range(nb - d):
            j = i + d
            ai, bi = blocks[i]
            aj, bj = blocks[j]
            rhs = f[ai:bi, ai:bi] @ t[ai:bi, aj:bj] - t[ai:bi, aj:bj] @ f[aj:bj, aj:bj]
            for k in range(i + 1, j):
                ak, bk = blocks[k]
                rhs += f[ai:bi, ak:bk] @ t[ak:bk, aj:bj] - t[ai:bi, ak:bk] @ f[ak:bk, aj:bj]
            tii = t[ai:bi, ai:bi]
            tjj = t[aj:bj, aj:bj]
            if bi - ai == 1 and bj - aj == 1:
                f[ai, aj] = rhs[0, 0] / (tii[0, 0] - tjj[0, 0])
            else:
                f[ai:bi, aj:bj] = sla.solve_sylvester(tii, -tjj, rhs)
    return f


class PowerEvaluator:
    """Cached evaluator of ``z**lam`` (and ``log z``) on a fixed branch.

    The Schur form, clustering and, in the semisimple-separated case, the
    spectral projectors are computed once; :meth:`power` is then cheap.

    Parameters
    ----------
    z : (n, n) complex array
    branch : Branch
    on_cut : {"raise", "convention"}
        What to do with an eigenvalue within ``cut_tol`` of the cut ray.
        ``"convention"`` applies the half-open argument range as is.
    """

    def __init__(self, z, branch: Branch = Branch.PRINCIPAL, tol: Tolerances = DEFAULT, on_cut="raise"):
        z = np.asarray(z, dtype=complex)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise ValueError("square matrix expected")
        self.n = z.shape[0]
        self.branch = branch
        self.tol = tol
        scale = max(np.linalg.norm(z, 2), np.finfo(float).tiny)
        t, q = sla.schur(z, output="complex")
        w = np.diag(t).copy()
        if np.any(np.abs(w) <= tol.eig_tol * scale):
            raise SingularMatrix("matrix has an eigenvalue at zero")
        if on_cut == "raise":
            near = distance_to_cut(w, branch) <= tol.cut_tol * np.abs(w)
            if np.any(near):
                raise BranchCut(f"eigenvalue {w[near][0]} lies on the {branch.value} branch cut")
        labels = _union_find_clusters(w, tol.cluster_rel)
        labels = _split_by_sheet(w, labels, branch)
        t, q, blocks = _reorder(t, q, labels)
        self._t, self._q, self._blocks = t, q, blocks
        self.eigenvalues = np.diag(t).copy()
        self._logs = log_branch(self.eigenvalues, branch)
        self._projectors = None
        if all(b - a == 1 for a, b in blocks):
            proj = np.empty((self.n, self.n, self.n), dtype=complex)
            for j in range(self.n):
                unit = [np.array([[1.0 + 0j if i == j else 0j]]) for i in range(self.n)]
                proj[j] = q @ _block_parlett(t, blocks, unit) @ q.conj().T
            self._projectors = proj

    def _apply(self, fn, values):
        if self._projectors is not None:
            return np.tensordot(values, self._projectors, axes=(0, 0))
        diag_blocks = [_taylor_block(fn, self._t[a:b, a:b], self.branch) for a, b in self._blocks]
        f = _block_parlett(self._t, self._blocks, diag_blocks)
        return self._q @ f @ self._q.conj().T

    def power(self, lam) -> np.ndarray:
        lam = complex(lam)
        with np.errstate(over="ignore", invalid="ignore"):
            return self._apply(_PowerFn(lam, self.branch), np.exp(lam * self._logs))

    def power_many(self, lams: Sequence[complex]) -> np.ndarray:
        lams = np.asarray(lams, dtype=complex).ravel()
        if self._projectors is not None:
            with np.errstate(over="ignore", invalid="ignore"):
                vals = np.exp(np.outer(lams, self._logs))
                return np.einsum("kj,jab->kab", vals, self._projectors)
        return np.stack([self.power(lam) for lam in lams])

    def log_det(self) -> complex:
        """log det of z on the chosen branch (sum of branch logs of the eigenvalues)."""
        return complex(np.sum(self._logs))

    def log(self) -> np.ndarray:
        return self._apply(_LogFn(self.branch), self._logs)


def matrix_power(z, lam, branch: Branch = Branch.PRINCIPAL, tol: Tolerances = DEFAULT, on_cut="raise"):
    """``exp(lam * log_branch(z))``."""
    return PowerEvaluator(z, branch, tol, on_cut).power(lam)


def matrix_log(z, branch: Branch = Branch.PRINCIPAL, tol: Tolerances = DEFAULT, on_cut="raise"):
    return PowerEvaluator(z, branch, tol, on_cut).log()


# ---------------------------------------------------------------- numerical range


@dataclass(frozen=True)
class NumericalRangeBoundary:
    points: np.ndarray
    n_samples: int

    def min_imag(self) -> float:
        return float(np.min(self.points.imag))

    def in_upper_half_plane(self, margin: float = 0.0) -> bool:
        return self.min_imag() > margin

    def is_convex(self, tol: float = 1e-9) -> bool:
        """Cross products of consecutive edges never turn clockwise beyond ``tol``."""
        p = self.points
        scale = max(np.max(np.abs(p)), 1.0)
        e = np.roll(p, -1) - p
        cross = (e.conj() * np.roll(e, -1)).imag
        return bool(np.all(cross >= -tol * scale * scale))

    def contains(self, z, tol: float = 1e-9) -> bool:
        """Half-plane test against every supporting line of the sampled boundary."""
        theta = 2.0 * np.pi * np.arange(self.n_samples) / self.n_samples
        rot = np.exp(-1j * theta)
        support = (rot * self.points).real
        scale = max(np.max(np.abs(self.points)), 1.0)
        return bool(np.all((rot * z).real <= support + tol * scale))


def numerical_range_boundary(z, n: int = 256) -> NumericalRangeBoundary:
    """Boundary samples of W(z) from the top eigenvectors of rotated Hermitian parts."""
    if n < 8:
        raise ValueError("at least 8 samples are required")
    z = np.asarray(z, dtype=complex)
    zh = z.conj().T
    pts = np.empty(n, dtype=complex)
    for k in range(n):
        rot = np.exp(1j * 2.0 * np.pi * k / n)
        h = 0.5 * (z / rot + rot * zh)
        try:
            _, u = np.linalg.eigh(h)
        except np.linalg.LinAlgError as exc:
            raise NonConvergence(str(exc)) from exc
        x = u[:, -1]
        pts[k] = np.vdot(x, z @ x)
    return NumericalRangeBoundary(pts, n)
