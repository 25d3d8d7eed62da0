import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kcsim.catspace import annihilation, coherent_state, number_operator
from kcsim.qops import (
    DensityMatrix,
    DimensionMismatch,
    NonHermitianInput,
    Operator,
    StateValidationError,
    StateVector,
    basis_state,
    expect,
    hermitian_eigensystem,
    identity,
    kron,
    outer_product,
)

from conftest import random_hermitian

SX = Operator(np.array([[0, 1], [1, 0]], dtype=complex))
SZ = Operator(np.array([[1, 0], [0, -1]], dtype=complex))


# ---------------------------------------------------------------------------
# kron
# ---------------------------------------------------------------------------

def test_kron_identity():
    npt.assert_array_equal(kron(identity(2), identity(2)).entries, np.eye(4))


def test_kron_sz_sx_hand_expanded():
    expected = np.array(
        [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, -1, 0]], dtype=complex
    )
    npt.assert_array_equal(kron(SZ, SX).entries, expected)


def test_kron_dimension_arithmetic():
    assert kron(identity(30), identity(2)).dim == 60


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_kron_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (Operator(random_hermitian(rng, d)) for d in (2, 3, 2))
    left = kron(kron(a, b), c).entries
    right = kron(a, kron(b, c)).entries
    assert np.abs(left - right).max() < 1e-12


# ---------------------------------------------------------------------------
# expect
# ---------------------------------------------------------------------------

def test_expect_trace_normalization():
    rho = DensityMatrix.maximally_mixed(6)
    assert expect(identity(6), rho) == pytest.approx(1.0, abs=1e-12)


def test_expect_eigenstate():
    rho = DensityMatrix.from_pure(basis_state(2, 0))
    assert expect(SZ, rho).real == pytest.approx(1.0, abs=1e-12)


def test_expect_coherent_photon_number_oracle():
    # independent oracle: truncated-renormalized Fock sum of |alpha|^2n / n!
    alpha, n_trunc = 1.3, 30
    weights = [alpha ** (2 * n) / math.factorial(n) for n in range(n_trunc)]
    oracle = sum(n * w for n, w in enumerate(weights)) / sum(weights)
    rho = DensityMatrix.from_pure(coherent_state(alpha, n_trunc))
    val = expect(number_operator(n_trunc), rho)
    assert val.imag == pytest.approx(0.0, abs=1e-10)
    assert val.real == pytest.approx(oracle, abs=1e-6)
    assert val.real == pytest.approx(1.69, abs=1e-6)


def test_expect_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        expect(identity(3), DensityMatrix.maximally_mixed(2))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_expect_linear_in_both_arguments(seed):
    rng = np.random.default_rng(seed)
    dim = 4
    o1, o2 = Operator(random_hermitian(rng, dim)), Operator(random_hermitian(rng, dim))
    r1 = DensityMatrix.maximally_mixed(dim)
    psi = StateVector(rng.standard_normal(dim) + 1j * rng.standard_normal(dim)).normalized()
    r2 = DensityMatrix.from_pure(psi)
    a, b = 0.3, 0.7
    mix = Operator(a * r1.entries + b * r2.entries)
    lhs = expect(Operator(o1.entries + o2.entries), mix)
    rhs = a * (expect(o1, r1) + expect(o2, r1)) + b * (expect(o1, r2) + expect(o2, r2))
    assert lhs == pytest.approx(rhs, abs=1e-10)


# ---------------------------------------------------------------------------
# hermitian_eigensystem
# ---------------------------------------------------------------------------

def test_eigensystem_sigma_x():
    w, _ = hermitian_eigensystem(SX)
    npt.assert_allclose(w, [-1.0, 1.0], atol=1e-12)


def test_eigensystem_number_operator():
    w, _ = hermitian_eigensystem(number_operator(5))
    npt.assert_allclose(w, np.arange(5), atol=1e-12)


def test_eigensystem_kerr_ladder_closed_form():
    # -K a^dag^2 a^2 is diagonal with entries -K n (n-1)
    k = 0.7
    a = annihilation(6).entries
    ad = a.conj().T
    h = Operator(-k * (ad @ ad @ a @ a))
    w, _ = hermitian_eigensystem(h)
    expected = sorted(-k * n * (n - 1) for n in range(6))
    npt.assert_allclose(w, expected, atol=1e-12)


def test_eigensystem_rejects_non_hermitian():
    with pytest.raises(NonHermitianInput):
        hermitian_eigensystem(annihilation(4))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_eigensystem_reconstructs(seed):
    rng = np.random.default_rng(seed)
    a = random_hermitian(rng, 6)
    w, v = hermitian_eigensystem(Operator(a))
    rebuilt = (v * w) @ v.conj().T
    assert np.abs(rebuilt - a).max() <= 1e-7 * np.linalg.norm(a)
    assert np.all(np.diff(w) >= -1e-12)
    for k in range(6):
        npt.assert_allclose(a @ v[:, k], w[k] * v[:, k], atol=1e-7 * np.linalg.norm(a))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_trace_cyclicity(seed):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(rng, 5), random_hermitian(rng, 5)
    tab = np.trace(a @ b)
    tba = np.trace(b @ a)
    assert abs(tab - tba) <= 1e-10 * max(abs(tab), 1.0)


# ---------------------------------------------------------------------------
# basic algebra
# ---------------------------------------------------------------------------

def test_adjoint_involution():
    a = annihilation(7)
    npt.assert_array_equal(a.adjoint().adjoint().entries, a.entries)


def test_outer_product_projector():
    p = outer_product(basis_state(4, 0), basis_state(4, 0))
    assert p.trace() == pytest.approx(1.0)
    npt.assert_allclose((p @ p).entries, p.entries, atol=1e-15)


def test_commutator_truncation_edge():
    # [a, a^dag] = I on the first N-1 levels; -(N-1) at the truncated edge
    n = 8
    a = annihilation(n)
    comm = (a @ a.adjoint() - a.adjoint() @ a).entries
    expected = np.eye(n)
    expected[-1, -1] = -(n - 1)
    npt.assert_allclose(comm, expected, atol=1e-12)


def test_mul_add_sub_scale():
    a = Operator(np.array([[1, 2], [3, 4]], dtype=complex))
    npt.assert_array_equal((2 * a).entries, 2 * a.entries)
    npt.assert_array_equal((a + a).entries, 2 * a.entries)
    npt.assert_array_equal((a - a).entries, np.zeros((2, 2)))
    npt.assert_array_equal((-a).entries, -a.entries)


def test_operator_entries_immutable():
    a = identity(3)
    with pytest.raises(ValueError):
        a.entries[0, 0] = 5.0


def test_operator_rejects_nonsquare_and_nonfinite():
    with pytest.raises(ValueError):
        Operator(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        Operator(np.array([[np.inf, 0], [0, 1]]))


# ---------------------------------------------------------------------------
# DensityMatrix validation
# ---------------------------------------------------------------------------

def test_density_matrix_rejects_non_hermitian():
    with pytest.raises(StateValidationError):
        DensityMatrix(Operator(np.array([[0.5, 0.5], [0.0, 0.5]])))


def test_density_matrix_rejects_bad_trace():
    with pytest.raises(StateValidationError):
        DensityMatrix(Operator(np.eye(2)))


def test_density_matrix_rejects_negative_eigenvalue():
    m = np.diag([1.5, -0.5]).astype(complex)
    with pytest.raises(StateValidationError):
        DensityMatrix(Operator(m))


def test_density_matrix_purity():
    assert DensityMatrix.from_pure(basis_state(3, 1)).purity() == pytest.approx(1.0)
    assert DensityMatrix.maximally_mixed(4).purity() == pytest.approx(0.25)
