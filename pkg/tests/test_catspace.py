import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kcsim.catspace import (
    TruncationError,
    annihilation,
    build_cat_frame,
    cat_normalization,
    cat_state,
    coherent_state,
    number_operator,
)
from kcsim.qops import DensityMatrix, basis_state, expect, hermitian_eigensystem


def test_annihilation_vacuum():
    a = annihilation(5)
    npt.assert_array_equal(a.entries @ basis_state(5, 0).amplitudes, np.zeros(5))


def test_annihilation_defining_relation():
    a = annihilation(6)
    out = a.entries @ basis_state(6, 3).amplitudes
    npt.assert_allclose(out, math.sqrt(3) * basis_state(6, 2).amplitudes, atol=1e-15)


def test_number_operator_diagonal():
    a = annihilation(7)
    npt.assert_allclose(
        (a.adjoint() @ a).entries, number_operator(7).entries, atol=1e-14
    )


def test_annihilation_rejects_tiny_space():
    with pytest.raises(ValueError):
        annihilation(1)


# ---------------------------------------------------------------------------
# coherent states
# ---------------------------------------------------------------------------

def test_coherent_alpha_zero_is_vacuum():
    npt.assert_array_equal(coherent_state(0.0, 10).amplitudes, basis_state(10, 0).amplitudes)


def test_coherent_truncation_tail_oracle():
    # independent tail sum: 1 - sum_{n<N} e^{-a^2} a^(2n)/n!  evaluated in
    # exact-ish python floats; the guard keeps it below 1e-12 at (1.3, 30)
    alpha, n_trunc = 1.3, 30
    kept = sum(
        math.exp(-(alpha**2)) * alpha ** (2 * n) / math.factorial(n)
        for n in range(n_trunc)
    )
    assert 1.0 - kept < 1e-12


def test_coherent_overlap_formula():
    alpha = 1.3
    plus = coherent_state(alpha, 30)
    minus = coherent_state(-alpha, 30)
    expected = math.exp(-2 * alpha**2)   # ~ 0.0340
    assert abs(plus.overlap(minus).real - expected) < 1e-8
    assert expected == pytest.approx(0.0340, abs=5e-4)


def test_coherent_displacement_expectation():
    for alpha in (0.5, 1.3, 2.4):
        rho = DensityMatrix.from_pure(coherent_state(alpha, 30))
        val = expect(annihilation(30), rho)
        assert abs(val - alpha) < 1e-6


def test_truncation_guard():
    with pytest.raises(TruncationError):
        coherent_state(3.0, 30)
    with pytest.raises(TruncationError):
        cat_state(2.8, "even", 30)


# ---------------------------------------------------------------------------
# cat states
# ---------------------------------------------------------------------------

def test_even_cat_parity_selection_exact():
    amps = cat_state(1.3, "even", 30).amplitudes
    npt.assert_array_equal(amps[1::2], np.zeros(15))


def test_odd_cat_parity_selection_exact():
    amps = cat_state(1.3, "odd", 30).amplitudes
    npt.assert_array_equal(amps[0::2], np.zeros(15))


def test_cat_normalization_value():
    # N+ = 1/sqrt(2 (1 + e^{-2 alpha^2})); cross-checked against the overlap
    # identity <C+|alpha> = N+ (1 + e^{-2 alpha^2})
    alpha = 1.3
    nplus = cat_normalization(alpha, "even")
    assert nplus == pytest.approx(0.69538, abs=2e-5)
    cat = cat_state(alpha, "even", 30)
    coh = coherent_state(alpha, 30)
    overlap = cat.overlap(coh).real
    assert overlap == pytest.approx(nplus * (1 + math.exp(-2 * alpha**2)), abs=1e-9)


def test_cat_small_alpha_limits():
    even = cat_state(0.0, "even", 10)
    npt.assert_allclose(even.amplitudes, basis_state(10, 0).amplitudes, atol=1e-15)
    odd = cat_state(1e-3, "odd", 10)
    assert abs(odd.overlap(basis_state(10, 1))) > 1 - 1e-6
    with pytest.raises(ValueError):
        cat_state(0.0, "odd", 10)


def test_cat_orthogonality_exact():
    f = build_cat_frame(1.3, 30)
    assert abs(f.cat_plus.overlap(f.cat_minus)) < 1e-14


# ---------------------------------------------------------------------------
# cat-qubit Pauli frame
# ---------------------------------------------------------------------------

def test_sigma_z_kc_defining_action(frame13):
    out = frame13.sigma_z_kc.entries @ frame13.cat_plus.amplitudes
    npt.assert_allclose(out, frame13.cat_minus.amplitudes, atol=1e-12)


def test_sigma_x_kc_subspace_eigenvalues(frame13):
    w, _ = hermitian_eigensystem(frame13.sigma_x_kc)
    big = sorted(np.abs(w))[-2:]
    npt.assert_allclose(big, [1.0, 1.0], atol=1e-10)
    assert np.sum(np.abs(w) > 1e-9) == 2


def test_z_eigenvectors_approach_coherent_states(frame13):
    # exact sigma_z_kc eigenvectors vs the displaced states they approximate
    zp, zm = frame13.z_plus, frame13.z_minus
    npt.assert_allclose(
        frame13.sigma_z_kc.entries @ zp.amplitudes, zp.amplitudes, atol=1e-10
    )
    plus = coherent_state(1.3, 30)
    minus = coherent_state(-1.3, 30)
    assert abs(zp.overlap(plus)) >= 0.999
    assert abs(zm.overlap(minus)) >= 0.999


def test_projector_fixes_cats_and_traces_to_two(frame13):
    p = frame13.projector
    npt.assert_allclose(
        p.entries @ frame13.cat_plus.amplitudes, frame13.cat_plus.amplitudes, atol=1e-12
    )
    assert p.trace().real == pytest.approx(2.0, abs=1e-8)
    npt.assert_allclose((p @ p).entries, p.entries, atol=1e-9)


def test_projector_leakage_scale(frame13):
    # a Fock state far above the manifold projects weakly
    fock9 = basis_state(30, 9)
    proj = frame13.projector.entries @ fock9.amplitudes
    assert np.linalg.norm(proj) < 0.3


@settings(max_examples=12, deadline=None)
@given(st.floats(0.5, 2.5))
def test_pauli_algebra_across_alpha(alpha):
    f = build_cat_frame(alpha, 30)
    paulis = (f.sigma_x_kc, f.sigma_y_kc, f.sigma_z_kc)
    p = f.projector.entries
    for i, si in enumerate(paulis):
        npt.assert_allclose((si @ si).entries, p, atol=1e-9)
        for j, sj in enumerate(paulis):
            if i < j:
                anti = si.entries @ sj.entries + sj.entries @ si.entries
                assert np.abs(anti).max() < 1e-9


def test_right_handed_triple(frame13):
    # sigma_x sigma_y = i sigma_z on the manifold
    lhs = frame13.sigma_x_kc.entries @ frame13.sigma_y_kc.entries
    rhs = 1j * frame13.sigma_z_kc.entries
    npt.assert_allclose(lhs, rhs, atol=1e-10)
