"""Randomised property checks for numerical ranges, complex powers of matrices with
positive definite imaginary part, accretive powers, the K_t contraction and the
cotangent identity behind the half-integer exponent lines."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvariantViolation
from .matfun import Branch, PowerEvaluator, matrix_power, numerical_range_boundary

MARGIN = 1e-8
ELLS = (1, 2, 3, 5)
CHAOTISCH_LAMBDAS = (-1.0, -2.0, -4.0, -8.0, -16.0)

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass(frozen=True, eq=False)
class MatPlusI:
    z: np.ndarray

    def __post_init__(self):
        if np.linalg.norm(self.z - self.z.T) > 1e-12 * max(1.0, np.linalg.norm(self.z)):
            raise InvariantViolation("matrix is not complex symmetric")
        if np.linalg.eigvalsh(self.z.imag)[0] <= 0:
            raise InvariantViolation("imaginary part is not positive definite")

    @property
    def ell(self) -> int:
        return self.z.shape[0]


def random_mat_plus_i(ell: int, rng_seed) -> MatPlusI:
    """A + iB with A symmetric uniform[-1, 1] and B = G^T G + 0.1 I."""
    rng = np.random.default_rng(rng_seed)
    a = rng.uniform(-1.0, 1.0, (ell, ell))
    a = 0.5 * (a + a.T)
    g = rng.standard_normal((ell, ell))
    b = g.T @ g + 0.1 * np.eye(ell)
    return MatPlusI(a + 1j * b)


def _grade(value: float, scale: float = 1.0) -> str:
    """Outcome of an open condition ``value > 0``; a violation smaller than the
    margin cannot be told apart from rounding and is inconclusive."""
    if value > 0:
        return PASS
    if value > -MARGIN * max(scale, 1.0):
        return INCONCLUSIVE
    return FAIL


def _grade_closed(value: float) -> str:
    """Outcome of a tolerance check ``value >= 0`` (the tolerance is already in ``value``)."""
    return PASS if value >= 0 else FAIL


def _worst(*outcomes: str) -> str:
    if FAIL in outcomes:
        return FAIL
    if INCONCLUSIVE in outcomes:
        return INCONCLUSIVE
    return PASS


# ---------------------------------------------------------------- numerical range properties


def check_lemma_symm(z, n: int = 256) -> bool:
    """Positive definite imaginary part agrees with W(z) lying in the upper half plane."""
    z = np.asarray(z, dtype=complex)
    scale = max(np.linalg.norm(z, 2), 1.0)
    pd = np.linalg.eigvalsh(0.5 * (z - z.conj().T) / 1j)[0] > MARGIN * scale
    upper = numerical_range_boundary(z, n).min_imag() > MARGIN * scale
    return bool(pd == upper)


def lemma_numrang_margin(z: MatPlusI, lam: float, n: int = 256) -> float:
    """sgn(lam) * min Im over W'(Z^lam); positive when the property holds."""
    p = matrix_power(z.z, lam, Branch.PRINCIPAL)
    p = p / np.linalg.norm(p, 2)
    w = numerical_range_boundary(p, n)
    return float(w.min_imag() if lam > 0 else -np.max(w.points.imag))


def check_lemma_numrang(z: MatPlusI, lam: float) -> bool:
    return _grade(lemma_numrang_margin(z, lam)) != FAIL


def lemma_uspis_margin(z: MatPlusI) -> float:
    return float(np.linalg.eigvalsh(-np.linalg.inv(z.z).imag)[0])


def support_function(z, thetas) -> np.ndarray:
    """h(theta) = max Re(e^{-i theta} w) over w in W(z), i.e. the top eigenvalue of
    the rotated Hermitian part."""
    z = np.asarray(z, dtype=complex)
    zh = z.conj().T
    return np.array([np.linalg.eigvalsh(0.5 * (np.exp(-1j * th) * z + np.exp(1j * th) * zh))[-1] for th in thetas])


def n_properties(z, rng, n: int = 256) -> dict:
    """Margins (positive = holds) for the standard numerical-range properties."""
    z = np.asarray(z, dtype=complex)
    ell = z.shape[0]
    scale = max(np.linalg.norm(z, 2), 1.0)
    dirs = 2 * np.pi * np.arange(64) / 64
    hz = support_function(z, dirs)
    out = {}
    # W(a z + b) = a W(z) + b
    a = complex(rng.standard_normal(), rng.standard_normal())
    b = complex(rng.standard_normal(), rng.standard_normal())
    lhs = support_function(a * z + b * np.eye(ell), dirs)
    rhs = abs(a) * support_function(z, dirs - np.angle(a)) + (np.exp(-1j * dirs) * b).real
    out["affine"] = 1e-9 * (abs(a) + 1) * scale - float(np.max(np.abs(lhs - rhs)))
    # W(z + y) within W(z) + W(y)
    y = rng.standard_normal((ell, ell)) + 1j * rng.standard_normal((ell, ell))
    slack = hz + support_function(y, dirs) - support_function(z + y, dirs)
    out["subadditive"] = float(np.min(slack)) + 1e-9 * scale
    # Hermitian matrices give the segment [lmin, lmax]
    h = 0.5 * (z + z.conj().T)
    wh = numerical_range_boundary(h, n)
    ev = np.linalg.eigvalsh(h)
    seg = max(np.max(np.abs(wh.points.imag)), abs(wh.points.real.min() - ev[0]), abs(wh.points.real.max() - ev[-1]))
    out["hermitian_segment"] = 1e-9 * scale - seg
    # W(conj z) = conj W(z)
    out["conjugate"] = 1e-9 * scale - float(np.max(np.abs(support_function(z.conj(), dirs) - support_function(z, -dirs))))
    # spectrum inside W, sampled boundary convex
    eig = np.linalg.eigvals(z)
    reach = (np.exp(-1j * dirs)[:, None] * eig[None, :]).real.max(axis=1)
    out["spectrum_inside"] = float(min(np.min(hz - reach), 1.0)) + 1e-9 * scale
    out["convex"] = 1.0 if numerical_range_boundary(z, n).is_convex(1e-9) else -1.0
    return out


# ---------------------------------------------------------------- powers Z^{i lambda}


def chaotisch_margin_i(z: MatPlusI, lam: float) -> float:
    """lambda_min of sgn(lam) (I - (Z^{i lam})^* Z^{i lam}); positive when the property holds."""
    p = matrix_power(z.z, 1j * lam, Branch.PRINCIPAL)
    g = p.conj().T @ p
    return float(np.linalg.eigvalsh(np.sign(lam) * (np.eye(z.ell) - g))[0])


def chaotisch_growth(z: MatPlusI, lams=CHAOTISCH_LAMBDAS) -> np.ndarray:
    """lambda_min((Z^{i lam})^* Z^{i lam}) at the given exponents.

    Evaluated as 1 / ||Z^{-i lam}||^2, which keeps full relative accuracy when
    Z^{i lam} is badly conditioned.
    """
    ev = PowerEvaluator(z.z, Branch.PRINCIPAL)
    return np.array([1.0 / np.linalg.norm(ev.power(-1j * lam), 2) ** 2 for lam in lams])


def check_lemma_chaotisch(z: MatPlusI, lam: float) -> bool:
    part_i = _grade(chaotisch_margin_i(z, lam)) != FAIL
    growth = chaotisch_growth(z)
    return part_i and bool(np.all(np.diff(growth) > 0))


def contraction_norm(z: MatPlusI, lam: float) -> float:
    return float(np.linalg.norm(matrix_power(z.z, 1j * lam, Branch.PRINCIPAL), 2))


# ---------------------------------------------------------------- K_t


@dataclass(frozen=True, eq=False)
class KtOperator:
    z: MatPlusI
    t: float
    k: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.k, 2))


def _kt_factor(z: MatPlusI, t: float):
    """Z^{it} for t >= 0, Z^{-it} otherwise; in both cases a contraction for Mat_+i input,
    so every formula below only involves matrices of norm at most one."""
    return matrix_power(z.z, 1j * t if t >= 0 else -1j * t, Branch.PRINCIPAL)


def kt_matrix(z: MatPlusI, t: float) -> np.ndarray:
    """(P - I)(P + I)^{-1} with P = Z^{it} (Z^{it})^*.

    With Q = Z^{it}, K = -I + 2 Q (I + Q^*Q)^{-1} Q^*; for t < 0 the same is written with
    R = Q^{-1} as K = I - 2 R^* (I + R R^*)^{-1} R. P itself is never formed: its
    singular values spread like e^{2|t| arg} and would swamp the small ones.
    """
    q = _kt_factor(z, t)
    eye = np.eye(z.ell)
    if t >= 0:
        k = -eye + 2.0 * q @ np.linalg.solve(eye + q.conj().T @ q, q.conj().T)
    else:
        k = eye - 2.0 * q.conj().T @ np.linalg.solve(eye + q @ q.conj().T, q)
    return 0.5 * (k + k.conj().T)


def kt_margins(z: MatPlusI, t: float) -> dict:
    k = kt_matrix(z, t)
    s = np.linalg.svd(_kt_factor(z, t), compute_uv=False)
    # eigenvalues of K are tanh(+-log s); 1 - |tanh(log s)| = 2 s^2 / (1 + s^2) for s <= 1
    gap = np.where(s <= 1.0, 2.0 * s * s / (1.0 + s * s), 2.0 / (1.0 + s * s))
    return {
        "contraction": float(np.min(gap)),
        "sign": float(np.linalg.eigvalsh(-np.sign(t) * k)[0]) if t != 0 else 0.0,
    }


def build_kt(z: MatPlusI, t: float) -> KtOperator:
    k = kt_matrix(z, t)
    m = kt_margins(z, t)
    if m["contraction"] <= 0:
        raise InvariantViolation(f"||K_t|| = {1 - m['contraction']:.6g} is not below 1")
    if t != 0 and m["sign"] <= 0:
        raise InvariantViolation("-sgn(t) K_t is not positive definite")
    return KtOperator(z, float(t), k)


def kt_limits(z: MatPlusI) -> dict:
    """||K_t|| near t = 0 and ||K_t - I|| far out on the negative axis."""
    eye = np.eye(z.ell)
    return {
        "near_zero": float(np.linalg.norm(kt_matrix(z, -1e-3), 2)),
        "far": float(np.linalg.norm(kt_matrix(z, -50.0) - eye, 2)),
    }


# ---------------------------------------------------------------- cotangent identity


def mix2_closed_form(k: int, t: float) -> complex:
    """-i (cosh 2 pi t + (-1)^k) / sinh 2 pi t."""
    return -1j * (math.cosh(2 * math.pi * t) + (-1) ** k) / math.sinh(2 * math.pi * t)


def mix2_direct(k: int, t: float) -> complex:
    lam = complex(k / 2.0, t)
    return 1.0 / np.tan(lam * math.pi)


def check_mix2_tangent(a_mat, b_mat, k: int, t: float) -> bool:
    """Cotangent identity at lambda = k/2 + it, and |cot| > 1 for even k.

    For ``t = 0`` only odd ``k`` is meaningful (the cotangent vanishes). The
    commutator [A, B] of the given symmetric pair has spectrum on the imaginary
    axis; for contractive pairs an even ``k`` root is impossible, which is what
    the modulus bound expresses.
    """
    a_mat = np.asarray(a_mat, dtype=float)
    b_mat = np.asarray(b_mat, dtype=float)
    comm = a_mat @ b_mat - b_mat @ a_mat
    if np.max(np.abs(np.linalg.eigvals(comm).real), initial=0.0) > 1e-9 * max(1.0, np.linalg.norm(comm)):
        return False
    if t == 0.0:
        return k % 2 == 1 and abs(mix2_direct(k, t)) <= 1e-12
    direct = mix2_direct(k, t)
    closed = mix2_closed_form(k, t)
    if abs(direct - closed) > 1e-12 * max(1.0, abs(closed)):
        return False
    if k % 2 == 0:
        return abs(direct) > 1.0
    return abs(direct) < 1.0


# ---------------------------------------------------------------- accretive powers


def random_accretive(ell: int, rng) -> np.ndarray:
    """Positive definite plus skew-Hermitian plus a small positive shift."""
    g = rng.standard_normal((ell, ell)) + 1j * rng.standard_normal((ell, ell))
    p = g @ g.conj().T / ell
    s = rng.standard_normal((ell, ell)) + 1j * rng.standard_normal((ell, ell))
    skew = 0.5 * (s - s.conj().T)
    return p + skew + 0.05 * np.eye(ell)


def sector_margin(a, lam: float, n: int = 256) -> float:
    """lam pi / 2 - max |arg| over sampled W(A^lam)."""
    p = matrix_power(a, lam, Branch.PRINCIPAL)
    w = numerical_range_boundary(p, n)
    return float(lam * math.pi / 2 - np.max(np.abs(np.angle(w.points))))


# ---------------------------------------------------------------- suites


@dataclass
class SuiteResult:
    suite: str
    seed: int
    count: int
    passed: int = 0
    failed: int = 0
    inconclusive: int = 0
    failures: list = field(default_factory=list)

    @property
    def inconclusive_rate(self) -> float:
        return self.inconclusive / self.count if self.count else 0.0

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "count": self.count,
            "pass": self.passed,
            "fail": self.failed,
            "inconclusive": self.inconclusive,
            "failures": self.failures,
        }


def _instance_numrange(rng, i):
    ell = ELLS[i % len(ELLS)]
    z = random_mat_plus_i(ell, rng.integers(2**63))
    lam = float(rng.choice([-1, 1]) * rng.uniform(0.05, 1.0))
    scale = np.linalg.norm(z.z, 2)
    outcomes = [
        PASS if check_lemma_symm(z.z) else FAIL,
        _grade(lemma_numrang_margin(z, lam)),
        _grade(lemma_uspis_margin(z)),
    ]
    outcomes += [_grade_closed(v) for v in n_properties(z.z, rng).values()]
    return _worst(*outcomes), {"z": z.z, "lambda": lam}


def _instance_accretive(rng, i):
    ell = ELLS[i % len(ELLS)]
    a = random_accretive(ell, rng)
    lam = float(rng.uniform(0.05, 1.0))
    margin = sector_margin(a, lam)
    return _grade(margin), {"a": a, "lambda": lam}


def _instance_chaotisch(rng, i):
    ell = ELLS[i % len(ELLS)]
    z = random_mat_plus_i(ell, rng.integers(2**63))
    lam = float(rng.choice([-1, 1]) * rng.uniform(0.05, 3.0))
    growth = chaotisch_growth(z)
    outcomes = [_grade(chaotisch_margin_i(z, lam))]
    outcomes += [_grade(g1 - g0, g1) for g0, g1 in zip(growth[:-1], growth[1:])]
    outcomes += [_grade(1.0 - contraction_norm(z, mu)) for mu in (0.1, 1.0, 5.0)]
    return _worst(*outcomes), {"z": z.z, "lambda": lam}


def _instance_kt(rng, i):
    ell = ELLS[i % len(ELLS)]
    z = random_mat_plus_i(ell, rng.integers(2**63))
    t = float(rng.choice([-1, 1]) * rng.uniform(0.01, 5.0))
    m = kt_margins(z, t)
    lim = kt_limits(z)
    outcomes = [
        _grade(m["contraction"]),
        _grade(m["sign"]),
        PASS if lim["near_zero"] < 0.1 else FAIL,
        PASS if lim["far"] < 0.1 else FAIL,
    ]
    return _worst(*outcomes), {"z": z.z, "t": t}


def _instance_mix2(rng, i):
    ell = ELLS[i % len(ELLS)]
    a = rng.standard_normal((ell, ell))
    b = rng.standard_normal((ell, ell))
    a, b = 0.5 * (a + a.T), 0.5 * (b + b.T)
    k = int(rng.integers(-4, 5))
    t = float(rng.uniform(-3.0, 3.0))
    if i % 10 == 0:
        k, t = 2 * int(rng.integers(-2, 3)) + 1, 0.0
    ok = check_mix2_tangent(a, b, k, t)
    return (PASS if ok else FAIL), {"a": a, "b": b, "k": k, "t": t}


SUITES: dict[str, Callable] = {
    "numrange": _instance_numrange,
    "accretive": _instance_accretive,
    "chaotisch": _instance_chaotisch,
    "kt": _instance_kt,
    "mix2": _instance_mix2,
}


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def run_suite(name: str, seed: int = 0, count: int = 100) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    rng = np.random.default_rng(seed)
    res = SuiteResult(name, seed, count)
    for i in range(count):
        outcome, instance = SUITES[name](rng, i)
        if outcome == PASS:
            res.passed += 1
        elif outcome == INCONCLUSIVE:
            res.inconclusive += 1
        else:
            res.failed += 1
            res.failures.append({"index": i, **_jsonable(instance)})
    return res
