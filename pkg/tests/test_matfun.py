import cmath
import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, strategies as st

from pencil.bc_matrices import ContextFactory
from pencil.errors import BranchCut, SingularMatrix
from pencil.matfun import (
    Branch,
    PowerEvaluator,
    arg_branch,
    hermitian_sqrt,
    log_branch,
    matrix_log,
    matrix_power,
    numerical_range_boundary,
    spectral_radius,
    spectrum,
)

from conftest import random_spd, random_sym, seeds


def _sorted(z):
    z = np.asarray(z)
    return z[np.lexsort((z.imag.round(8), z.real.round(8)))]


def random_mat_plus(rng, n):
    return random_sym(rng, n) + 1j * random_spd(rng, n, shift=0.2)


# ---- scalar branches


def test_branches_agree_where_promised():
    up = np.array([1 + 1j, -2 + 0.5j, 1j])
    lo = up.conj()
    np.testing.assert_allclose(arg_branch(up, Branch.PRINCIPAL), arg_branch(up, Branch.PLUS))
    np.testing.assert_allclose(arg_branch(lo, Branch.PRINCIPAL), arg_branch(lo, Branch.MINUS))
    assert arg_branch(-1.0, Branch.PRINCIPAL) == pytest.approx(math.pi)
    assert arg_branch(1.0, Branch.PLUS) == 0.0
    assert arg_branch(-1j, Branch.PLUS) == pytest.approx(1.5 * math.pi)
    assert arg_branch(1j, Branch.MINUS) == pytest.approx(-1.5 * math.pi)


# ---- spectra and square roots


def test_spectrum_examples(fig1_factory):
    np.testing.assert_allclose(spectrum(np.eye(2)), [1, 1])
    np.testing.assert_allclose(_sorted(spectrum([[0.0, 1.0], [-1.0, 0.0]])), [-1j, 1j], atol=1e-15)
    assert np.all(spectrum(fig1_factory.root.v).imag > 0)


def test_spectral_radius_examples(fig2left_factory):
    assert spectral_radius(np.eye(3)) == pytest.approx(1.0)
    assert spectral_radius([[0.0, 1.0], [0.0, 0.0]]) == 0.0
    from pencil.ellipticity import commutator

    rho = spectral_radius(commutator(fig2left_factory.root))
    assert 0.0 < rho < 2.0


def test_hermitian_sqrt_examples():
    np.testing.assert_allclose(hermitian_sqrt(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(hermitian_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    d = np.array([[2.0, 1.0], [1.0, 2.0]])
    q = hermitian_sqrt(d)
    assert np.linalg.norm(q @ q - d) < 1e-12
    # eigenvalues 1 and 3 of D give eigenvalues 1 and sqrt(3) of the root
    np.testing.assert_allclose(np.linalg.eigvalsh(q), [1.0, math.sqrt(3.0)])


# ---- powers and logarithms


def test_power_examples():
    lam = 0.3 + 0.2j
    np.testing.assert_allclose(
        matrix_power(-np.eye(2), lam, Branch.PLUS), cmath.exp(1j * math.pi * lam) * np.eye(2), atol=1e-14
    )
    np.testing.assert_allclose(matrix_power(1j * np.eye(2), 0.5), cmath.exp(1j * math.pi / 4) * np.eye(2))


@pytest.mark.parametrize("alpha, t", [(0.4, 1.3), (1.0, -0.7), (2.5, 2.0)])
def test_imaginary_power_modulus(alpha, t):
    z = cmath.exp(1j * alpha) * np.eye(2)
    p = matrix_power(z, 1j * t)
    expected = abs(cmath.exp(1j * t * cmath.log(cmath.exp(1j * alpha)))) ** 2
    np.testing.assert_allclose(p @ p.conj().T, expected * np.eye(2), rtol=1e-13)


def test_power_errors():
    with pytest.raises(SingularMatrix):
        matrix_power(np.diag([1.0, 0.0]), 0.5)
    with pytest.raises(BranchCut):
        matrix_power(-np.eye(2), 0.5)
    with pytest.raises(BranchCut):
        matrix_power(np.eye(2), 0.5, Branch.PLUS)
    # the half-open convention is available on request
    p = matrix_power(-np.eye(2), 0.5, on_cut="convention")
    np.testing.assert_allclose(p, 1j * np.eye(2), atol=1e-15)


def test_log_examples(fig1_factory):
    np.testing.assert_allclose(matrix_log(np.eye(2)), np.zeros((2, 2)), atol=1e-15)
    np.testing.assert_allclose(matrix_log(math.e * np.eye(2)), np.eye(2), atol=1e-15)
    z = fig1_factory(1.0, "dirichlet").z_alpha
    assert np.linalg.norm(sla.expm(matrix_log(z)) - z) < 1e-11


def test_defective_block():
    # Jordan block: f(J) = [[f(a), f'(a)], [0, f(a)]]
    a, lam = 2.0 + 1.0j, 0.7
    j = np.array([[a, 1.0], [0.0, a]])
    p = matrix_power(j, lam)
    fa = a**lam
    np.testing.assert_allclose(p, [[fa, lam * a ** (lam - 1)], [0.0, fa]], rtol=1e-12)


def test_near_defective_cluster_matches_scipy():
    a = np.array([[1.0 + 1j, 1.0], [1e-12, 1.0 + 1j]])
    np.testing.assert_allclose(matrix_power(a, 0.5), sla.sqrtm(a), rtol=1e-9, atol=1e-14)


def test_power_many_matches_power(rng):
    z = random_mat_plus(rng, 3)
    ev = PowerEvaluator(z)
    lams = [0.5, -1.2 + 0.3j, 2.0j]
    stack = ev.power_many(lams)
    for lam, p in zip(lams, stack):
        np.testing.assert_allclose(p, matrix_power(z, lam), rtol=1e-12, atol=1e-14)


@given(seeds, st.sampled_from([1, 2, 3, 5]), st.floats(-2.0, 2.0), st.floats(-1.0, 1.0))
def test_spectral_mapping(seed, n, re, im):
    rng = np.random.default_rng(seed)
    z = random_mat_plus(rng, n)
    lam = complex(re, im)
    for branch in Branch:
        p = matrix_power(z, lam, branch, on_cut="convention")
        mapped = np.exp(lam * log_branch(np.linalg.eigvals(z), branch))
        scale = max(1.0, np.max(np.abs(mapped)))
        np.testing.assert_allclose(_sorted(np.linalg.eigvals(p)), _sorted(mapped), atol=1e-8 * scale)


@given(seeds, st.sampled_from([2, 3]), st.floats(-1.5, 1.5))
def test_conjugation_rule(seed, n, lam):
    rng = np.random.default_rng(seed)
    z = random_mat_plus(rng, n)
    q = np.eye(n) + 0.3 * rng.standard_normal((n, n))
    qi = np.linalg.inv(q)
    lhs = matrix_power(q @ z @ qi, lam)
    rhs = q @ matrix_power(z, lam) @ qi
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * np.linalg.cond(q) * max(1.0, np.linalg.norm(rhs)))


@given(seeds, st.sampled_from([1, 2, 3]), st.floats(-2.0, 2.0))
def test_symmetry_and_adjoint_rules(seed, n, lam):
    rng = np.random.default_rng(seed)
    z = random_mat_plus(rng, n)
    p = matrix_power(z, 1j * lam)
    np.testing.assert_allclose(p, p.T, atol=1e-10 * max(1.0, np.linalg.norm(p)))
    # (Z^{i lam})^* = conj(Z)^{-i lam}
    np.testing.assert_allclose(p.conj().T, matrix_power(z.conj(), -1j * lam), atol=1e-10 * max(1.0, np.linalg.norm(p)))


@given(seeds, st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_exponent_rules(seed, a, b):
    rng = np.random.default_rng(seed)
    z = random_mat_plus(rng, 2)
    ev = PowerEvaluator(z)
    np.testing.assert_allclose(ev.power(a + b), ev.power(a) @ ev.power(b), rtol=1e-9, atol=1e-11)


# ---- numerical range


def test_numerical_range_hermitian_is_segment():
    w = numerical_range_boundary(np.diag([1.0, 3.0]), 64)
    assert np.max(np.abs(w.points.imag)) < 1e-14
    assert w.points.real.min() == pytest.approx(1.0)
    assert w.points.real.max() == pytest.approx(3.0)


def test_numerical_range_scalar_point():
    w = numerical_range_boundary(1j * np.eye(3), 32)
    np.testing.assert_allclose(w.points, 1j, atol=1e-15)


@given(seeds, st.sampled_from([1, 2, 3, 5]))
def test_mat_plus_i_range_in_uhp_and_contains_spectrum(seed, n):
    rng = np.random.default_rng(seed)
    z = random_mat_plus(rng, n)
    w = numerical_range_boundary(z, 256)
    assert w.in_upper_half_plane(0.0)
    assert w.is_convex()
    for mu in np.linalg.eigvals(z):
        assert w.contains(mu, 1e-9)


def test_numerical_range_requires_samples():
    with pytest.raises(ValueError):
        numerical_range_boundary(np.eye(2), 4)
