"""Hamiltonians, dissipators and drive schedules for the coupled system.

Layout conventions (fixed project-wide):

* Tensor ordering: Kerr-cat oscillator factor first, transmon second.
* Transmon basis: index 0 is the excited state ``|+Z>``, index 1 the ground
  state, so ``sigma_z = diag(+1, -1)`` and ``sigma_minus = |g><e|`` is the
  decay operator paired with ``T1_b``.
* Interfaces quote ordinary frequencies in MHz and times in us.  Builders
  return angular-frequency operators (rad/us); the single ``2*pi`` lives here.
* Dissipator rates are reciprocal lifetimes in 1/us, never scaled by 2*pi.

The stabilized-oscillator Hamiltonian is
``H_kcq = -K_a a^dag^2 a^2 + eps2 (a^dag^2 + a^2)`` with ``eps2 = K_a alpha^2``
never a free input.  Its degenerate top manifold is spanned by the two cat
states with eigenvalue ``eps2^2/K_a = K_a alpha^4``.

The exchange drive is ``g3_tilde * xi * f(t) * (a^dag sm e^{i phi(t)} + h.c.)``
with ``phi(t) = phi + 2*pi*delta*t``: a drive detuning enters as a linearly
advancing drive phase rather than a frame shift, matching how the experiment
detunes the difference-frequency tone while the simulation frame stays fixed.

Dispersive-shift convention: the cross-Kerr term is implemented as
``(chi_ab/2)(n - alpha^2) sigma_z`` by default (``chi_reference="cat_mean"``).
Referencing the photon number to the stabilized mean models a drive tone
fine-tuned on the dressed difference frequency, which is how the interaction
is calibrated; the unreferenced form (``chi_reference="bare"``) is kept for
Hamiltonian-level comparisons.  With two-level Pauli algebra the projected
exchange term equals ``Omega sigma_z (cos(phi) sigma_x + sin(phi) sigma_y)``
for right-handed Paulis; the four-dimensional builder
:func:`build_effective_hamiltonian` instead uses the ``-sin(phi) sigma_y``
sign, i.e. the two agree under ``phi -> -phi``.  Both conventions coincide at
``phi = 0`` where the coupling is ``Omega sigma_z sigma_x`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .catspace import CatFrame, annihilation, build_cat_frame, number_operator
from .constants import TWO_PI
from .qops import Operator, identity, kron

INF = math.inf

# -- transmon operators (index 0 = excited) ---------------------------------

SIGMA_X = Operator(np.array([[0, 1], [1, 0]], dtype=complex), label="sigma_x")
SIGMA_Y = Operator(np.array([[0, -1j], [1j, 0]], dtype=complex), label="sigma_y")
SIGMA_Z = Operator(np.array([[1, 0], [0, -1]], dtype=complex), label="sigma_z")
SIGMA_MINUS = Operator(np.array([[0, 0], [1, 0]], dtype=complex), label="sigma_-")
SIGMA_PLUS = Operator(np.array([[0, 1], [0, 0]], dtype=complex), label="sigma_+")


@dataclass(frozen=True)
class SystemParams:
    """All physical rates and drive settings for one simulation.

    Frequencies in MHz (ordinary), times in us, ``xi`` in sqrt(photons),
    ``phi`` in radians.  Infinite lifetimes drop the matching dissipator.
    """

    K_a: float = 0.7          # self-Kerr, MHz
    alpha: float = 1.3        # cat amplitude (eps2 = K_a * alpha^2 derived)
    g3_tilde: float = 0.45    # exchange-term nonlinearity, MHz
    xi: float = 2.04          # drive amplitude, sqrt(photons)
    phi: float = 0.0          # drive phase, rad
    delta: float = 0.0        # drive detuning, MHz
    chi_ab: float = 0.01      # cross-Kerr, MHz
    T1_a: float = 40.0        # oscillator relaxation, us
    T2R_a: float = 5.0        # oscillator Ramsey decay, us
    T1_b: float = 33.0        # transmon relaxation, us
    T2R_b: float = 47.0       # transmon Ramsey decay, us
    N: int = 30               # Fock truncation
    ramp: float = 0.0         # envelope ramp time, us
    dephasing_convention: str = "literal"   # or "pure"
    chi_reference: str = "cat_mean"         # or "bare"

    def __post_init__(self):
        if self.K_a < 0 or self.g3_tilde < 0 or self.xi < 0 or self.chi_ab < 0:
            raise ValueError("rates and drive amplitudes must be non-negative")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        for name in ("T1_a", "T2R_a", "T1_b", "T2R_b"):
            t = getattr(self, name)
            if not (t > 0):
                raise ValueError(f"{name} must be positive or math.inf, got {t}")
        if self.N < 2:
            raise ValueError("Fock truncation must be >= 2")
        if self.ramp < 0:
            raise ValueError("ramp must be non-negative")
        if self.dephasing_convention not in ("literal", "pure"):
            raise ValueError(f"unknown dephasing convention {self.dephasing_convention!r}")
        if self.chi_reference not in ("cat_mean", "bare"):
            raise ValueError(f"unknown chi reference {self.chi_reference!r}")
        if self.alpha**2 > self.N / 4.0:
            # mirror the catspace guard early, at parameter construction
            from .catspace import TruncationError

            raise TruncationError(
                f"alpha^2 = {self.alpha**2:.3f} exceeds N/4 = {self.N / 4:.3f}"
            )

    @property
    def epsilon_2(self) -> float:
        """Squeezing-drive strength, MHz: eps2 = K_a alpha^2."""
        return self.K_a * self.alpha**2

    @property
    def omega_eff(self) -> float:
        """Projected interaction rate g3_tilde * xi * alpha, MHz."""
        return self.g3_tilde * self.xi * self.alpha

    def without_dissipation(self) -> "SystemParams":
        return replace(self, T1_a=INF, T2R_a=INF, T1_b=INF, T2R_b=INF)

    def updated(self, **kw) -> "SystemParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class PulseSchedule:
    """Sine-squared rise, flat top, sine-squared fall."""

    t_total: float            # us
    ramp: float = 0.0         # us, each edge

    def __post_init__(self):
        if self.t_total <= 0:
            raise ValueError("t_total must be positive")
        if not 0 <= 2 * self.ramp <= self.t_total:
            raise ValueError("need 0 <= 2*ramp <= t_total")


def pulse_envelope(t: float, schedule: PulseSchedule) -> float:
    """Envelope value in [0, 1]; C1-continuous for ramp > 0.

    The degenerate ramp = 0 schedule is a rectangular pulse (1 everywhere on
    the closed interval).
    """
    T, r = schedule.t_total, schedule.ramp
    slack = 1e-9 * max(T, 1.0)   # absorb float error from substep arithmetic
    if t < -slack or t > T + slack:
        raise ValueError(f"t = {t} outside [0, {T}]")
    t = min(max(t, 0.0), T)
    if r == 0.0:
        return 1.0
    if t < r:
        return math.sin(0.5 * math.pi * t / r) ** 2
    if t > T - r:
        return math.sin(0.5 * math.pi * (T - t) / r) ** 2
    return 1.0


# ---------------------------------------------------------------------------
# Hamiltonian builders (angular units, rad/us)
# ---------------------------------------------------------------------------

def build_kcq_hamiltonian(params: SystemParams) -> Operator:
    """Stabilized-oscillator Hamiltonian on the N-dim Fock space."""
    a = annihilation(params.N).entries
    ad = a.conj().T
    k = TWO_PI * params.K_a
    e2 = TWO_PI * params.epsilon_2
    h = -k * (ad @ ad @ a @ a) + e2 * (ad @ ad + a @ a)
    return Operator(h, label="H_kcq")


def _chi_term(params: SystemParams) -> np.ndarray:
    """(chi/2)(n - n_ref) sigma_z, diagonal in the product basis."""
    n = number_operator(params.N).entries
    n_ref = params.alpha**2 if params.chi_reference == "cat_mean" else 0.0
    shifted = n - n_ref * np.eye(params.N)
    return 0.5 * TWO_PI * params.chi_ab * np.kron(shifted, SIGMA_Z.entries)


def build_static_hamiltonian(params: SystemParams) -> Operator:
    """Drive-off part on the 2N joint space: H_kcq (x) I + cross-Kerr term."""
    h = np.kron(build_kcq_hamiltonian(params).entries, np.eye(2))
    if params.chi_ab != 0.0:
        h = h + _chi_term(params)
    return Operator(h, label="H_static")


def exchange_operator(params: SystemParams) -> Operator:
    """B = a^dag (x) sigma_-; the drive term is g f(t) (e^{i phi(t)} B + h.c.)."""
    ad = annihilation(params.N).adjoint()
    return kron(ad, SIGMA_MINUS).relabel("a^dag sigma_-")


def drive_phase(params: SystemParams, t: float) -> float:
    return params.phi + TWO_PI * params.delta * t


def drive_coupling(params: SystemParams) -> float:
    """Angular exchange coupling 2*pi*g3_tilde*xi, rad/us."""
    return TWO_PI * params.g3_tilde * params.xi


def build_full_hamiltonian(
    params: SystemParams, t: float = 0.0, schedule: PulseSchedule | None = None
) -> Operator:
    """Joint Hamiltonian at time t (dim 2N, angular units).

    With no schedule the envelope is 1 (interaction always on).
    """
    f = 1.0 if schedule is None else pulse_envelope(t, schedule)
    h = build_static_hamiltonian(params).entries.copy()
    if f != 0.0 and params.g3_tilde * params.xi != 0.0:
        b = exchange_operator(params).entries
        phase = np.exp(1j * drive_phase(params, t))
        g = drive_coupling(params) * f
        h += g * (phase * b + np.conj(phase) * b.conj().T)
    return Operator(h, label="H_full")


def build_effective_hamiltonian(params: SystemParams) -> Operator:
    """Projected two-qubit model, dim 4 (cat qubit first, transmon second).

    ``Omega sigma_z (cos(phi) sigma_x - sin(phi) sigma_y)`` with
    ``Omega = g3_tilde * xi * alpha``.  The cat-qubit factor is written in its
    sigma_z_kc eigenbasis {+Z, -Z}; map cat-basis states with
    ``|C+/-> = (|+Z> +/- |-Z>)/sqrt(2)``.
    """
    if params.alpha <= 0:
        raise ValueError("effective model needs alpha > 0")
    om = TWO_PI * params.omega_eff
    axis = math.cos(params.phi) * SIGMA_X.entries - math.sin(params.phi) * SIGMA_Y.entries
    return Operator(om * np.kron(SIGMA_Z.entries, axis), label="H_eff")


# ---------------------------------------------------------------------------
# dissipators
# ---------------------------------------------------------------------------

def _dephasing_rate(t2r: float, t1: float, convention: str) -> float:
    """Rate attached to D[sigma_z]-type collapse operators."""
    if t2r == INF:
        return 0.0
    if convention == "literal":
        return 1.0 / t2r
    rate = 0.5 * (1.0 / t2r - 0.5 / t1 if t1 != INF else 1.0 / t2r)
    if rate < 0:
        raise ValueError(f"pure-dephasing rate negative: T2R={t2r}, T1={t1}")
    return rate


def build_dissipators(
    params: SystemParams, frame: CatFrame
) -> list[tuple[float, Operator]]:
    """Collapse operators with rates, lifted to the 2N joint space.

    Four channels: photon loss D[a]/T1_a, cat-manifold phase flips
    D[sigma_z_kc]/T2R_a, transmon decay D[sigma_-]/T1_b and transmon
    dephasing D[sigma_z]/T2R_b.  Channels with infinite lifetimes are
    omitted.  The "pure" convention replaces the two sigma_z rates by
    (1/T2R - 1/(2 T1))/2.
    """
    if frame.alpha != params.alpha or frame.n_trunc != params.N:
        raise ValueError(
            f"cat frame (alpha={frame.alpha}, N={frame.n_trunc}) does not match "
            f"params (alpha={params.alpha}, N={params.N})"
        )
    i2 = identity(2)
    i_n = identity(params.N)
    out: list[tuple[float, Operator]] = []
    if params.T1_a != INF:
        out.append((1.0 / params.T1_a, kron(annihilation(params.N), i2)))
    rate_za = _dephasing_rate(params.T2R_a, params.T1_a, params.dephasing_convention)
    if rate_za > 0:
        out.append((rate_za, kron(frame.sigma_z_kc, i2)))
    if params.T1_b != INF:
        out.append((1.0 / params.T1_b, kron(i_n, SIGMA_MINUS)))
    rate_zb = _dephasing_rate(params.T2R_b, params.T1_b, params.dephasing_convention)
    if rate_zb > 0:
        out.append((rate_zb, kron(i_n, SIGMA_Z)))
    return out


# ---------------------------------------------------------------------------
# projection helper
# ---------------------------------------------------------------------------

def project_to_cat_qubit(op: Operator, frame: CatFrame) -> Operator:
    """Compress a 2N operator into the 4-dim cat-qubit (x) transmon block.

    Basis ordering matches :func:`build_effective_hamiltonian`:
    {+Z_kc, -Z_kc} (x) {excited, ground}.
    """
    if op.dim != 2 * frame.n_trunc:
        raise ValueError(f"operator dim {op.dim} != 2N = {2 * frame.n_trunc}")
    zp, zm = frame.z_plus.amplitudes, frame.z_minus.amplitudes
    e = np.array([1.0, 0.0], dtype=complex)
    g = np.array([0.0, 1.0], dtype=complex)
    basis = [np.kron(zp, e), np.kron(zp, g), np.kron(zm, e), np.kron(zm, g)]
    v = np.column_stack(basis)
    return Operator(v.conj().T @ op.entries @ v)


# ---------------------------------------------------------------------------
# device parameter ledger
# ---------------------------------------------------------------------------

_POSITIVE_KEYS = {
    "omega_a", "omega_b", "omega_ar", "omega_br", "omega_s", "omega_bs",
    "omega_cqr", "kappa_ar", "kappa_br", "g3", "E_C", "E_L",
}

REQUIRED_DEVICE_KEYS = _POSITIVE_KEYS | {
    "L_J", "asymmetry", "n_snails", "Phi_ext", "T2E_b", "T_alpha", "T_c",
}


@dataclass(frozen=True)
class DeviceEntry:
    value: float
    unit: str
    provenance: str


@dataclass(frozen=True)
class DeviceReference:
    """Reference ledger of measured device parameters with provenance.

    Carries readout-chain and coherence figures as metadata; only a few
    entries (E_C, E_L, L_J, asymmetry, n_snails, Phi_ext, g3) feed
    computations.
    """

    entries: dict[str, DeviceEntry] = field(default_factory=dict)

    def __post_init__(self):
        missing = REQUIRED_DEVICE_KEYS - set(self.entries)
        if missing:
            raise ValueError(f"device reference missing keys: {sorted(missing)}")
        for key, ent in self.entries.items():
            if not ent.provenance.strip():
                raise ValueError(f"empty provenance for {key!r}")
            if key in _POSITIVE_KEYS and not ent.value > 0:
                raise ValueError(f"{key!r} must be positive, got {ent.value}")

    def value(self, key: str) -> float:
        return self.entries[key].value

    def __getitem__(self, key: str) -> DeviceEntry:
        return self.entries[key]


def parse_device_reference(text: str) -> DeviceReference:
    """Parse the pipe-separated ledger format: key | value | unit | provenance."""
    entries: dict[str, DeviceEntry] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 4 columns, got {len(parts)}")
        key, value, unit, provenance = parts
        if key in entries:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = DeviceEntry(float(value), unit, provenance)
    return DeviceReference(entries)


def load_device_reference(path) -> DeviceReference:
    with open(path, encoding="utf-8") as fh:
        return parse_device_reference(fh.read())


def default_device_reference() -> DeviceReference:
    text = (
        resources.files("kcsim").joinpath("data/device_defaults.txt").read_text()
    )
    return parse_device_reference(text)
