"""Nonlinear least-squares calibration toolkit.

Models fitted here:

* damped sinusoid  ``y = A exp(-t/tau) cos(2 pi f t + phi0) + offset``
  (oscillation frequency and decay extraction),
* drive-amplitude Stark shift  ``omega(V) = omega_a - K_a (c V)^2``
  (DAC-unit to sqrt(photon) conversion factor),
* linear asymptote of the exchange rate versus drive amplitude
  (slope / alpha gives the third-order nonlinearity),
* flux-tunable junction-array mode frequency (charging and inductive
  energies), with third- and fourth-order nonlinearities derived from the
  potential expansion.

Numerical optimization is delegated to ``scipy.optimize.least_squares``
(damped Gauss-Newton / trust region); model functions, seeding and
uncertainty propagation live here.  Fits are pure and reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .constants import TWO_PI

# Josephson energy of an L_J[nH] junction: E_J[MHz] = PHI0_SQ_OVER_H / L_J
# with phi0 = hbar/2e.  (hbar/2e)^2 / h = 1.634625e-19 J*H -> MHz*nH.
_EJ_MHZ_NH = 163462.5


class UnidentifiableFit(ValueError):
    """The design matrix cannot constrain the requested parameters."""


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters with 1-sigma uncertainties from the residual Jacobian."""

    params: dict[str, float]
    uncertainties: dict[str, float]
    residual_rms: float
    iterations: int
    converged: bool
    flags: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "params": dict(self.params),
            "uncertainties": dict(self.uncertainties),
            "residual_rms": self.residual_rms,
            "iterations": self.iterations,
            "converged": self.converged,
            "flags": list(self.flags),
        }


def _covariance_sigmas(sol, n_data: int) -> np.ndarray:
    """1-sigma parameter errors from the linearized covariance at the optimum."""
    n_par = sol.x.size
    dof = max(n_data - n_par, 1)
    s2 = 2.0 * sol.cost / dof
    jtj = sol.jac.T @ sol.jac
    try:
        cov = np.linalg.inv(jtj) * s2
        sig = np.sqrt(np.clip(np.diag(cov), 0.0, np.inf))
    except np.linalg.LinAlgError:
        sig = np.full(n_par, np.inf)
    return sig


# ---------------------------------------------------------------------------
# damped sinusoid
# ---------------------------------------------------------------------------

def guess_frequency_fft(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """FFT-peak frequency and phase seed (DC excluded, parabolic refinement)."""
    yc = y - y.mean()
    spec = np.fft.rfft(yc)
    freqs = np.fft.rfftfreq(len(t), t[1] - t[0])
    mag = np.abs(spec)
    if len(mag) < 3:
        return 0.0, 0.0
    k = int(np.argmax(mag[1:])) + 1
    f = freqs[k]
    if 1 <= k < len(mag) - 1:
        denom = mag[k - 1] - 2 * mag[k] + mag[k + 1]
        if denom != 0.0:
            f += 0.5 * (mag[k - 1] - mag[k + 1]) / denom * (freqs[1] - freqs[0])
    return float(f), float(np.angle(spec[k]))


def _decay_seed(t: np.ndarray, y: np.ndarray) -> float:
    """Decay-rate seed from the RMS ratio of the two trace halves."""
    yc = y - y.mean()
    half = len(y) // 2
    r1 = float(np.sqrt(np.mean(yc[:half] ** 2)))
    r2 = float(np.sqrt(np.mean(yc[half:] ** 2)))
    if r1 <= 0 or r2 <= 0 or r2 >= r1:
        return 0.0
    return 2.0 * math.log(r1 / r2) / (t[-1] - t[0])


def fit_damped_sinusoid(t, y, sigma: float | None = None) -> FitResult:
    """Fit ``A exp(-t/tau) cos(2 pi f t + phi0) + offset``.

    Returns tau = inf (with infinite uncertainty) for undamped data, and a
    non-converged result with ``flags=('no_oscillation',)`` and infinite
    frequency uncertainty for constant input.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.ndim != 1 or t.shape != y.shape or len(t) < 8:
        raise ValueError("need >= 8 samples of matching 1-d arrays")

    f0, ph0 = guess_frequency_fft(t, y)
    span = t[-1] - t[0]
    if np.ptp(y) < 1e-12 * max(1.0, abs(float(y.mean()))) or f0 <= 0.0:
        return FitResult(
            params={"amplitude": 0.0, "frequency": 0.0, "phase": 0.0,
                    "tau": math.inf, "offset": float(y.mean())},
            uncertainties={"amplitude": math.inf, "frequency": math.inf,
                           "phase": math.inf, "tau": math.inf, "offset": 0.0},
            residual_rms=float(np.std(y)),
            iterations=0,
            converged=False,
            flags=("no_oscillation",),
        )
    if span * f0 < 1.0:
        raise ValueError(f"trace spans {span * f0:.2f} oscillation periods; need >= 1")

    a0 = max(np.ptp(y) / 2.0, 1e-12)
    p0 = np.array([a0, f0, ph0, _decay_seed(t, y), float(y.mean())])
    scale = 1.0 if sigma is None else sigma

    def resid(p):
        amp, f, ph, rate, off = p
        return (amp * np.exp(-rate * t) * np.cos(TWO_PI * f * t + ph) + off - y) / scale

    lower = [0.0, 0.0, -2 * math.pi, 0.0, -np.inf]
    upper = [np.inf, np.inf, 2 * math.pi, np.inf, np.inf]
    sol = least_squares(resid, p0, bounds=(lower, upper), method="trf")
    sig = _covariance_sigmas(sol, len(t))

    amp, f, ph, rate, off = sol.x
    ph = math.remainder(ph, TWO_PI)
    # operative threshold: decay slower than ~1000x the trace span is unresolved
    rate_floor = 1e-3 / span
    if rate > rate_floor:
        tau, tau_sig = 1.0 / rate, sig[3] / rate**2
    else:
        tau, tau_sig = math.inf, math.inf
    rms = float(np.sqrt(np.mean(resid(sol.x) ** 2))) * scale
    return FitResult(
        params={"amplitude": float(amp), "frequency": float(f), "phase": float(ph),
                "tau": tau, "offset": float(off)},
        uncertainties={"amplitude": float(sig[0]), "frequency": float(sig[1]),
                       "phase": float(sig[2]), "tau": float(tau_sig),
                       "offset": float(sig[4])},
        residual_rms=rms,
        iterations=int(sol.nfev),
        converged=bool(sol.success),
    )


# ---------------------------------------------------------------------------
# Stark-shift conversion factor
# ---------------------------------------------------------------------------

def fit_stark_shift(v, omega, k_a: float, omega_a: float) -> FitResult:
    """Single-parameter fit of ``omega = omega_a - K_a (c V)^2``.

    Linear least squares in u = c^2 after the transformation; ``k_a`` and
    ``omega_a`` are supplied as known constants (MHz).  Ascending omega(V)
    raises the ``wrong_sign_kerr`` flag.
    """
    v = np.asarray(v, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if v.shape != omega.shape or len(v) < 3:
        raise ValueError("need >= 3 matching samples")
    v4 = float(np.sum(v**4))
    if v4 == 0.0:
        raise UnidentifiableFit("all drive amplitudes are zero")

    shift = omega_a - omega            # expected K_a c^2 V^2 >= 0
    u = float(np.sum(shift * v**2) / (k_a * v4))
    flags: tuple[str, ...] = ()
    if u <= 0.0:
        flags = ("wrong_sign_kerr",)
        c = 0.0
    else:
        c = math.sqrt(u)
    model = omega_a - k_a * u * v**2
    resid = omega - model
    dof = max(len(v) - 1, 1)
    s2 = float(np.sum(resid**2)) / dof
    sig_u = math.sqrt(s2 / (k_a**2 * v4))
    sig_c = sig_u / (2.0 * c) if c > 0 else math.inf
    return FitResult(
        params={"c": c},
        uncertainties={"c": sig_c},
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        iterations=1,
        converged=not flags,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# exchange-rate slope
# ---------------------------------------------------------------------------

def select_linear_regime(xi, omega, rel_tol: float = 0.05) -> float:
    """Smallest drive amplitude from which the rate hugs the asymptote line.

    The asymptote is the secant through the two largest-amplitude points;
    points are admitted from the smallest xi whose suffix all deviates less
    than ``rel_tol`` relative to the local secant value.
    """
    xi = np.asarray(xi, dtype=float)
    omega = np.asarray(omega, dtype=float)
    order = np.argsort(xi)
    xs, ys = xi[order], omega[order]
    slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    icpt = ys[-1] - slope * xs[-1]
    line = slope * xs + icpt
    dev = np.abs(ys - line) / np.maximum(np.abs(line), 1e-30)
    good = dev < rel_tol
    start = len(xs) - 1
    while start > 0 and good[start - 1]:
        start -= 1
    return float(xs[start])


def extract_g3_tilde(
    xi, omega, alpha: float, sigma=None, xi_min: float | None = None
) -> FitResult:
    """Weighted linear fit of the rate-vs-amplitude asymptote; slope/alpha.

    ``omega`` are fitted exchange rates (MHz) at drive amplitudes ``xi``;
    ``sigma`` are optional 1-sigma weights.  Points below ``xi_min``
    (auto-selected through :func:`select_linear_regime` when omitted) are
    excluded.
    """
    xi = np.asarray(xi, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if xi.shape != omega.shape or len(xi) < 4:
        raise ValueError("need >= 4 matching points")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if xi_min is None:
        xi_min = select_linear_regime(xi, omega)
    mask = xi >= xi_min
    if mask.sum() < 2:
        raise UnidentifiableFit(f"fewer than 2 points at xi >= {xi_min}")
    xs, ys = xi[mask], omega[mask]
    w = np.ones_like(xs) if sigma is None else 1.0 / np.asarray(sigma, float)[mask] ** 2

    # weighted straight line ys = slope*xs + icpt
    sw, swx, swy = w.sum(), (w * xs).sum(), (w * ys).sum()
    swxx, swxy = (w * xs * xs).sum(), (w * xs * ys).sum()
    det = sw * swxx - swx**2
    if det <= 0:
        raise UnidentifiableFit("degenerate amplitude grid")
    slope = (sw * swxy - swx * swy) / det
    icpt = (swxx * swy - swx * swxy) / det
    resid = ys - (slope * xs + icpt)
    dof = max(len(xs) - 2, 1)
    s2 = float(np.sum(w * resid**2)) / dof
    sig_slope = math.sqrt(s2 * sw / det)
    return FitResult(
        params={"g3_tilde": slope / alpha, "slope": slope, "intercept": icpt,
                "xi_min": float(xi_min)},
        uncertainties={"g3_tilde": sig_slope / alpha, "slope": sig_slope,
                       "intercept": math.sqrt(s2 * swxx / det), "xi_min": 0.0},
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        iterations=1,
        converged=True,
    )


# ---------------------------------------------------------------------------
# flux-tunable junction-array mode
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SnailSpec:
    """Shunted junction-array parameters (energies in MHz, L_J in nH).

    One loop: ``n_junctions`` large junctions with energy E_J each (derived
    from L_J when E_J is omitted) in parallel with one junction scaled by
    ``asymmetry``.  ``n_snails`` loops in series share a single effective
    phase, in series with a linear inductance of energy E_L.
    """

    E_C: float
    E_L: float
    asymmetry: float = 0.1
    n_junctions: int = 3
    n_snails: int = 2
    phi_ext: float = 0.33          # units of the flux quantum
    E_J: float | None = None
    L_J: float | None = 0.6

    def __post_init__(self):
        if self.E_C <= 0 or self.E_L <= 0:
            raise ValueError("E_C and E_L must be positive")
        if not 0 < self.asymmetry < 1:
            raise ValueError("asymmetry must lie in (0, 1)")
        if self.n_junctions < 2 or self.n_snails < 1:
            raise ValueError("need n_junctions >= 2 and n_snails >= 1")
        if self.E_J is None and self.L_J is None:
            raise ValueError("provide E_J or L_J")
        if self.junction_energy() <= 0:
            raise ValueError("junction energy must be positive")

    def junction_energy(self) -> float:
        """Per-junction E_J in MHz."""
        if self.E_J is not None:
            return self.E_J
        return _EJ_MHZ_NH / self.L_J


def _loop_potential(theta: float, asym: float, n: int, phi_ext: float) -> float:
    """Single-loop potential in units of E_J."""
    return -asym * math.cos(theta) - n * math.cos((TWO_PI * phi_ext - theta) / n)


def snail_potential_expansion(spec: SnailSpec, phi_ext: float | None = None) -> dict:
    """Expand the loop potential about its minimum and dress the mode.

    Returns the Taylor derivatives c2..c4 at the minimum, the linear-mode
    frequency from the series combination of the array and E_L, the zero-point
    phase spread, the array participation ratio and the cubic/quartic mode
    nonlinearities g3 = E3_eff c3 zpf^3 / 6, g4 = E4_eff c4 zpf^4 / 24 with
    the series-participation scalings E3_eff = E_J p^3 / M^2 and
    E4_eff = E_J p^4 / M^3.  All energies in MHz.
    """
    flux = spec.phi_ext if phi_ext is None else phi_ext
    asym, n, m = spec.asymmetry, spec.n_junctions, spec.n_snails
    fe = TWO_PI * flux
    res = minimize_scalar(
        _loop_potential,
        bounds=(fe - math.pi, fe + math.pi),
        args=(asym, n, flux),
        method="bounded",
        options={"xatol": 1e-12},
    )
    theta = float(res.x)
    if min(theta - (fe - math.pi), (fe + math.pi) - theta) < 1e-6:
        raise ValueError(f"no interior potential minimum at flux {flux}")
    arg = (theta - fe) / n
    c2 = asym * math.cos(theta) + math.cos(arg) / n
    c3 = -asym * math.sin(theta) - math.sin(arg) / n**2
    c4 = -asym * math.cos(theta) - math.cos(arg) / n**3
    if c2 <= 0:
        raise ValueError(f"expansion point is not a minimum (c2 = {c2:.3e})")

    e_j = spec.junction_energy()
    k_array = e_j * c2 / m
    k_eff = 1.0 / (1.0 / k_array + 1.0 / spec.E_L)
    participation = k_eff / k_array
    omega = math.sqrt(8.0 * spec.E_C * k_eff)
    zpf = (2.0 * spec.E_C / k_eff) ** 0.25
    g3 = (e_j * c3 * participation**3 / m**2) * zpf**3 / 6.0
    g4 = (e_j * c4 * participation**4 / m**3) * zpf**4 / 24.0
    return {
        "theta_min": theta, "c2": c2, "c3": c3, "c4": c4,
        "omega": omega, "zpf": zpf, "participation": participation,
        "g3": g3, "g4": g4,
    }


def snail_mode_frequency(spec: SnailSpec, flux) -> np.ndarray:
    """Vectorized mode frequency omega(flux) in MHz."""
    return np.array(
        [snail_potential_expansion(spec, float(f))["omega"] for f in np.atleast_1d(flux)]
    )


@dataclass(frozen=True)
class SnailFluxFit:
    fit: FitResult
    spec: SnailSpec                  # spec at the fitted (E_C, E_L)
    flux_grid: np.ndarray = field(repr=False)
    omega_model: np.ndarray = field(repr=False)
    g3_curve: np.ndarray = field(repr=False)
    g4_curve: np.ndarray = field(repr=False)


def snail_flux_fit(
    flux, freq, fixed: SnailSpec, curve_points: int = 201, max_nfev: int = 200
) -> SnailFluxFit:
    """Least-squares (E_C, E_L) fit of the flux dispersion, MHz units.

    ``fixed`` supplies the held inputs (asymmetry, junction counts, L_J) and
    the starting values of E_C and E_L.  Returns the fit plus derived
    g3(flux), g4(flux) tables over the data window.
    """
    flux = np.asarray(flux, dtype=float)
    freq = np.asarray(freq, dtype=float)
    if flux.shape != freq.shape:
        raise ValueError("flux and frequency arrays must match")
    if len(flux) < 6:
        raise UnidentifiableFit("need >= 6 flux points")
    if np.ptp(flux) < 0.3:
        raise UnidentifiableFit("flux span must cover >= 0.3 flux quanta")

    def resid(x):
        spec = SnailSpec(
            E_C=x[0], E_L=x[1], asymmetry=fixed.asymmetry,
            n_junctions=fixed.n_junctions, n_snails=fixed.n_snails,
            phi_ext=fixed.phi_ext, E_J=fixed.E_J, L_J=fixed.L_J,
        )
        return snail_mode_frequency(spec, flux) - freq

    x0 = np.array([fixed.E_C, fixed.E_L])
    sol = least_squares(
        resid, x0, bounds=([1e-3, 1e-3], [np.inf, np.inf]),
        x_scale=x0, max_nfev=max_nfev,
    )
    sig = _covariance_sigmas(sol, len(flux))
    fitted = SnailSpec(
        E_C=float(sol.x[0]), E_L=float(sol.x[1]), asymmetry=fixed.asymmetry,
        n_junctions=fixed.n_junctions, n_snails=fixed.n_snails,
        phi_ext=fixed.phi_ext, E_J=fixed.E_J, L_J=fixed.L_J,
    )
    grid = np.linspace(float(flux.min()), float(flux.max()), curve_points)
    expans = [snail_potential_expansion(fitted, float(f)) for f in grid]
    fit = FitResult(
        params={"E_C": fitted.E_C, "E_L": fitted.E_L},
        uncertainties={"E_C": float(sig[0]), "E_L": float(sig[1])},
        residual_rms=float(np.sqrt(np.mean(sol.fun**2))),
        iterations=int(sol.nfev),
        converged=bool(sol.success),
    )
    return SnailFluxFit(
        fit=fit,
        spec=fitted,
        flux_grid=grid,
        omega_model=np.array([e["omega"] for e in expans]),
        g3_curve=np.array([e["g3"] for e in expans]),
        g4_curve=np.array([e["g4"] for e in expans]),
    )
