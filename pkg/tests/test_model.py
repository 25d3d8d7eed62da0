import math

import numpy as np
import numpy.testing as npt
import pytest

from kcsim.catspace import TruncationError, build_cat_frame
from kcsim.constants import TWO_PI
from kcsim.model import (
    SIGMA_MINUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DeviceEntry,
    DeviceReference,
    PulseSchedule,
    SystemParams,
    build_dissipators,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    build_kcq_hamiltonian,
    build_static_hamiltonian,
    default_device_reference,
    exchange_operator,
    parse_device_reference,
    project_to_cat_qubit,
    pulse_envelope,
)
from kcsim.qops import Operator, hermitian_eigensystem, kron, identity


# ---------------------------------------------------------------------------
# SystemParams
# ---------------------------------------------------------------------------

def test_params_epsilon2_derived():
    p = SystemParams(K_a=0.7, alpha=1.3)
    assert p.epsilon_2 == pytest.approx(0.7 * 1.69)


def test_params_validation():
    with pytest.raises(ValueError):
        SystemParams(K_a=-1)
    with pytest.raises(ValueError):
        SystemParams(T1_a=0.0)
    with pytest.raises(TruncationError):
        SystemParams(alpha=3.0, N=30)
    with pytest.raises(ValueError):
        SystemParams(N=1)


def test_params_without_dissipation():
    p = SystemParams().without_dissipation()
    assert all(
        getattr(p, k) == math.inf for k in ("T1_a", "T2R_a", "T1_b", "T2R_b")
    )


# ---------------------------------------------------------------------------
# stabilized-oscillator Hamiltonian
# ---------------------------------------------------------------------------

def test_kcq_spectrum_no_drive():
    p = SystemParams(alpha=0.0, K_a=0.7, N=8)
    w, _ = hermitian_eigensystem(build_kcq_hamiltonian(p))
    expected = sorted(-TWO_PI * 0.7 * n * (n - 1) for n in range(8))
    npt.assert_allclose(w, expected, atol=1e-10)


def test_kcq_hermitian():
    h = build_kcq_hamiltonian(SystemParams())
    assert np.abs(h.entries - h.entries.conj().T).max() < 1e-12


def test_kcq_manifold_energy_and_degeneracy(frame13):
    # identity: H = -K (a^dag^2 - a^2*)(a^2 - a^2) + K alpha^4 puts the cat
    # manifold at K alpha^4 (top of the spectrum), exactly degenerate
    p = SystemParams(K_a=0.7, alpha=1.3)
    h = build_kcq_hamiltonian(p)
    for cat in (frame13.cat_plus, frame13.cat_minus):
        e = np.vdot(cat.amplitudes, h.entries @ cat.amplitudes).real / TWO_PI
        assert e == pytest.approx(0.7 * 1.3**4, abs=2e-3)
        assert e == pytest.approx(1.999, abs=2e-3)
    w, _ = hermitian_eigensystem(h)
    split_mhz = (w[-1] - w[-2]) / TWO_PI
    assert abs(split_mhz) < 1e-6


# ---------------------------------------------------------------------------
# full Hamiltonian
# ---------------------------------------------------------------------------

def test_full_reduces_to_kcq_when_undriven():
    p = SystemParams(xi=0.0, chi_ab=0.0)
    h = build_full_hamiltonian(p, 0.0)
    expected = kron(build_kcq_hamiltonian(p), identity(2))
    npt.assert_allclose(h.entries, expected.entries, atol=1e-14)


def test_full_hermitian_at_sampled_times():
    p = SystemParams(phi=0.7, delta=0.15, ramp=0.3)
    sched = PulseSchedule(t_total=2.0, ramp=0.3)
    for t in (0.0, 0.15, 0.5, 1.2, 1.9, 2.0):
        h = build_full_hamiltonian(p, t, sched)
        assert np.abs(h.entries - h.entries.conj().T).max() < 1e-12


def test_interaction_block_is_adjoint_pair():
    p = SystemParams(phi=0.0, chi_ab=0.0)
    h_int = build_full_hamiltonian(p, 0.0).entries - build_static_hamiltonian(p).entries
    b = exchange_operator(p).entries
    g = TWO_PI * p.g3_tilde * p.xi
    npt.assert_allclose(h_int, g * (b + b.conj().T), atol=1e-12)


def test_dispersive_vs_interaction_norm_ratio(frame13):
    # cat-manifold Frobenius ratio of the unreferenced cross-Kerr term to the
    # exchange term: ~ chi*alpha^2 / (2 g xi alpha) ~ 7e-3
    p = SystemParams(chi_ab=0.01, chi_reference="bare")
    chi_term = build_static_hamiltonian(p).entries - np.kron(
        build_kcq_hamiltonian(p).entries, np.eye(2)
    )
    h_int = build_full_hamiltonian(p, 0.0).entries - build_static_hamiltonian(p).entries
    p4 = np.kron(frame13.projector.entries, np.eye(2))
    ratio = np.linalg.norm(p4 @ chi_term @ p4) / np.linalg.norm(p4 @ h_int @ p4)
    expected = p.chi_ab * p.alpha**2 / (2 * p.g3_tilde * p.xi * p.alpha)
    assert ratio == pytest.approx(expected, rel=0.05)
    assert ratio < 0.01


def test_chi_negligibility_on_projected_hamiltonians(frame13):
    # referenced cross-Kerr changes the projected Hamiltonian by < 1% of the
    # projected interaction norm for xi >= 1
    for xi in (1.0, 2.04):
        base = SystemParams(xi=xi, chi_ab=0.0)
        with_chi = SystemParams(xi=xi, chi_ab=0.01)
        h0 = project_to_cat_qubit(build_full_hamiltonian(base, 0.0), frame13)
        h1 = project_to_cat_qubit(build_full_hamiltonian(with_chi, 0.0), frame13)
        h_int = project_to_cat_qubit(
            Operator(
                build_full_hamiltonian(base, 0.0).entries
                - build_static_hamiltonian(base).entries
            ),
            frame13,
        )
        assert np.linalg.norm(h1.entries - h0.entries) < 0.01 * np.linalg.norm(h_int.entries)


# ---------------------------------------------------------------------------
# effective two-qubit model
# ---------------------------------------------------------------------------

def test_effective_phi_zero_is_sz_sx():
    p = SystemParams(phi=0.0)
    om = TWO_PI * p.g3_tilde * p.xi * p.alpha
    expected = om * np.kron(SIGMA_Z.entries, SIGMA_X.entries)
    npt.assert_allclose(build_effective_hamiltonian(p).entries, expected, atol=1e-12)


def test_effective_phi_half_pi_is_minus_sz_sy():
    p = SystemParams(phi=math.pi / 2)
    om = TWO_PI * p.g3_tilde * p.xi * p.alpha
    expected = -om * np.kron(SIGMA_Z.entries, SIGMA_Y.entries)
    npt.assert_allclose(build_effective_hamiltonian(p).entries, expected, atol=1e-9)


def test_effective_rate_value_and_frobenius_norm():
    p = SystemParams(g3_tilde=0.45, xi=2.04, alpha=1.3)
    assert p.omega_eff == pytest.approx(1.1934, abs=1e-4)
    h = build_effective_hamiltonian(p)
    assert np.linalg.norm(h.entries) == pytest.approx(2 * TWO_PI * p.omega_eff, rel=1e-12)


def test_projected_full_matches_effective_asymptotically():
    # relative Frobenius error of the projected exchange term against the
    # two-qubit model decreases with alpha; < 5% at alpha = 2
    errs = []
    for alpha in (1.0, 1.3, 1.6, 2.0):
        p = SystemParams(alpha=alpha, phi=0.0, chi_ab=0.0)
        frame = build_cat_frame(alpha, p.N)
        h_int = Operator(
            build_full_hamiltonian(p, 0.0).entries - build_static_hamiltonian(p).entries
        )
        proj = project_to_cat_qubit(h_int, frame)
        eff = build_effective_hamiltonian(p)
        errs.append(
            np.linalg.norm(proj.entries - eff.entries) / np.linalg.norm(eff.entries)
        )
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.05


# ---------------------------------------------------------------------------
# pulse envelope
# ---------------------------------------------------------------------------

def test_envelope_shape():
    s = PulseSchedule(t_total=2.0, ramp=0.4)
    assert pulse_envelope(0.0, s) == 0.0
    assert pulse_envelope(1.0, s) == 1.0
    assert pulse_envelope(2.0, s) == pytest.approx(0.0, abs=1e-12)
    assert pulse_envelope(0.2, s) == pytest.approx(0.5, abs=1e-12)


def test_envelope_rectangular_degenerate():
    s = PulseSchedule(t_total=1.0, ramp=0.0)
    for t in (0.0, 0.3, 1.0):
        assert pulse_envelope(t, s) == 1.0


def test_envelope_integral():
    # trapezoid integral equals t_total - ramp for the sine-squared schedule
    s = PulseSchedule(t_total=3.0, ramp=0.6)
    t = np.linspace(0, 3.0, 20001)
    vals = np.array([pulse_envelope(x, s) for x in t])
    integral = np.trapezoid(vals, t)
    assert integral == pytest.approx(3.0 - 0.6, rel=1e-6)


def test_envelope_continuity_and_range():
    s = PulseSchedule(t_total=1.0, ramp=0.25)
    t = np.linspace(0, 1.0, 4001)
    vals = np.array([pulse_envelope(x, s) for x in t])
    assert np.all((vals >= 0) & (vals <= 1))
    assert np.abs(np.diff(vals)).max() < 1e-2  # no jumps at ramp boundaries


def test_envelope_out_of_range():
    s = PulseSchedule(t_total=1.0, ramp=0.2)
    with pytest.raises(ValueError):
        pulse_envelope(-0.1, s)
    with pytest.raises(ValueError):
        pulse_envelope(1.1, s)


def test_schedule_validation():
    with pytest.raises(ValueError):
        PulseSchedule(t_total=1.0, ramp=0.6)


# ---------------------------------------------------------------------------
# dissipators
# ---------------------------------------------------------------------------

def test_dissipators_all_infinite_is_empty(frame13):
    p = SystemParams().without_dissipation()
    assert build_dissipators(p, frame13) == []


def test_dissipator_rates_are_reciprocals(frame13):
    rates = [r for r, _ in build_dissipators(SystemParams(), frame13)]
    npt.assert_allclose(rates, [1 / 40, 1 / 5, 1 / 33, 1 / 47], rtol=1e-12)
    npt.assert_allclose(rates, [0.025, 0.2, 0.0303, 0.02128], atol=5e-5)


def test_dissipator_pure_convention(frame13):
    p = SystemParams(dephasing_convention="pure")
    rates = [r for r, _ in build_dissipators(p, frame13)]
    assert rates[1] == pytest.approx(0.5 * (1 / 5 - 0.5 / 40))
    assert rates[3] == pytest.approx(0.5 * (1 / 47 - 0.5 / 33))


def test_sigma_z_kc_sandwich_annihilates_outside_manifold(frame13):
    # L rho L^dag vanishes exactly for rho supported outside the projector
    _, lop = build_dissipators(SystemParams(), frame13)[1]
    q = np.eye(30) - frame13.projector.entries
    fock9 = np.zeros(30)
    fock9[9] = 1.0
    outside = q @ np.outer(fock9, fock9) @ q
    rho = np.kron(outside, np.diag([1.0, 0.0]))
    sandwich = lop.entries @ rho @ lop.entries.conj().T
    # zero up to float representation of the cat-state dyads
    assert np.abs(sandwich).max() < 1e-18


def test_dissipators_frame_mismatch(frame13):
    with pytest.raises(ValueError):
        build_dissipators(SystemParams(alpha=1.6), frame13)


# ---------------------------------------------------------------------------
# device reference
# ---------------------------------------------------------------------------

def test_default_device_reference_loads():
    dev = default_device_reference()
    assert dev.value("E_C") == 109.0
    assert dev.value("n_snails") == 2.0
    assert dev["omega_a"].provenance


def test_device_reference_missing_key():
    with pytest.raises(ValueError, match="missing"):
        DeviceReference({"omega_a": DeviceEntry(5200.0, "MHz", "spectroscopy")})


def test_device_reference_parse_errors():
    with pytest.raises(ValueError, match="4 columns"):
        parse_device_reference("omega_a | 5200 | MHz\n")
    text = "omega_a | 5200 | MHz | x\nomega_a | 5100 | MHz | y\n"
    with pytest.raises(ValueError, match="duplicate"):
        parse_device_reference(text)
