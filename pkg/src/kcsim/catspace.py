"""Truncated Fock space, coherent and cat states, and the cat-qubit frame.

The cat qubit lives in the two-dimensional manifold spanned by the even and
odd cat states ``|C+>``, ``|C->``.  The Bloch-sphere convention used
throughout: cat states sit on the x axis (``sigma_x_kc`` eigenvectors), and
the z-axis states ``|+/-Z>`` are the exact ``sigma_z_kc`` eigenvectors
``(|C+> +/- |C->)/sqrt(2)``, which approach the coherent states ``|+/-alpha>``
in the large-alpha limit.

The cat amplitude ``alpha`` is real and non-negative.  A truncation guard
``alpha**2 <= N/4`` keeps the Fock tail beyond the cutoff below 1e-10 for all
``alpha <= 2.5`` at ``N = 30``; silently truncated cats would corrupt the
eigenvalue checks downstream, so violations raise :class:`TruncationError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qops import Operator, StateVector, outer_product


class TruncationError(ValueError):
    """Requested amplitude too large for the Fock-space cutoff."""


def _guard(alpha: float, n_trunc: int):
    if n_trunc < 2:
        raise ValueError(f"Fock truncation must be >= 2, got {n_trunc}")
    if alpha < 0:
        raise ValueError("cat amplitude must be real and non-negative")
    if alpha**2 > n_trunc / 4.0:
        raise TruncationError(
            f"alpha^2 = {alpha**2:.3f} exceeds N/4 = {n_trunc / 4:.3f}; "
            "raise the truncation or lower alpha"
        )


def annihilation(n_trunc: int) -> Operator:
    """Lowering operator: a|n> = sqrt(n)|n-1>, upper bidiagonal."""
    if n_trunc < 2:
        raise ValueError(f"Fock truncation must be >= 2, got {n_trunc}")
    return Operator(
        np.diag(np.sqrt(np.arange(1, n_trunc, dtype=np.float64)), 1), label="a"
    )


def number_operator(n_trunc: int) -> Operator:
    return Operator(np.diag(np.arange(n_trunc, dtype=np.float64)), label="n")


def coherent_state(alpha: float, n_trunc: int, signed: bool = True) -> StateVector:
    """Coherent state |alpha> (real amplitude); renormalized after truncation.

    The raw amplitudes are exp(-alpha^2/2) alpha^n / sqrt(n!), built by a
    stable recurrence.  ``alpha`` may be negative when ``signed`` (used to
    form cats); the guard applies to |alpha|.
    """
    _guard(abs(alpha), n_trunc)
    amps = np.zeros(n_trunc, dtype=np.complex128)
    amps[0] = math.exp(-(alpha**2) / 2.0)
    for n in range(1, n_trunc):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    v = StateVector(amps, label=f"coh({alpha:g})")
    return v.normalized()


def cat_normalization(alpha: float, parity: str) -> float:
    """Closed-form cat normalization 1/sqrt(2(1 +/- exp(-2 alpha^2)))."""
    sign = {"even": 1.0, "odd": -1.0}[parity]
    return 1.0 / math.sqrt(2.0 * (1.0 + sign * math.exp(-2.0 * alpha**2)))


def cat_state(alpha: float, parity: str, n_trunc: int) -> StateVector:
    """Even or odd cat: N( |alpha> +/- |-alpha> ), normalized.

    Parity selection is exact: the even (odd) cat has strictly zero amplitude
    on odd (even) Fock levels by construction.
    """
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    _guard(alpha, n_trunc)
    plus = coherent_state(alpha, n_trunc).amplitudes.copy()
    # exact parity projection instead of subtracting two nearly equal vectors
    if parity == "even":
        plus[1::2] = 0.0
    else:
        plus[0::2] = 0.0
        if not np.any(plus):
            raise ValueError("odd cat undefined at alpha = 0")
    return StateVector(plus, label=f"cat_{parity}({alpha:g})").normalized()


def cat_paulis(
    cat_plus: StateVector, cat_minus: StateVector
) -> tuple[Operator, Operator, Operator]:
    """Cat-qubit Pauli triple (sigma_x_kc, sigma_y_kc, sigma_z_kc).

    sigma_x_kc = |C+><C+| - |C-><C-|   (cats on the x axis)
    sigma_z_kc = |C+><C-| + |C-><C+|
    sigma_y_kc = -i sigma_z_kc sigma_x_kc   (right-handed triple)
    """
    pp = outer_product(cat_plus, cat_plus)
    mm = outer_product(cat_minus, cat_minus)
    pm = outer_product(cat_plus, cat_minus)
    mp = outer_product(cat_minus, cat_plus)
    sx = (pp - mm).relabel("sigma_x_kc")
    sz = (pm + mp).relabel("sigma_z_kc")
    sy = Operator(-1j * (sz.entries @ sx.entries), label="sigma_y_kc")
    return sx, sy, sz


def cat_projector(cat_plus: StateVector, cat_minus: StateVector) -> Operator:
    """Rank-2 projector onto the cat manifold."""
    p = outer_product(cat_plus, cat_plus) + outer_product(cat_minus, cat_minus)
    return p.relabel("P_cat")


@dataclass(frozen=True)
class CatFrame:
    """Precomputed cat states, cat-qubit Paulis and manifold projector.

    Built once per (alpha, N) and shared read-only across workers.
    """

    alpha: float
    n_trunc: int
    cat_plus: StateVector
    cat_minus: StateVector
    sigma_x_kc: Operator
    sigma_y_kc: Operator
    sigma_z_kc: Operator
    projector: Operator

    @property
    def z_plus(self) -> StateVector:
        """Exact sigma_z_kc (+1) eigenvector, the |+alpha>-like pole."""
        v = (self.cat_plus.amplitudes + self.cat_minus.amplitudes) / math.sqrt(2.0)
        return StateVector(v, label="+Z_kc")

    @property
    def z_minus(self) -> StateVector:
        v = (self.cat_plus.amplitudes - self.cat_minus.amplitudes) / math.sqrt(2.0)
        return StateVector(v, label="-Z_kc")


def build_cat_frame(alpha: float, n_trunc: int) -> CatFrame:
    cp = cat_state(alpha, "even", n_trunc)
    cm = cat_state(alpha, "odd", n_trunc)
    sx, sy, sz = cat_paulis(cp, cm)
    return CatFrame(
        alpha=alpha,
        n_trunc=n_trunc,
        cat_plus=cp,
        cat_minus=cm,
        sigma_x_kc=sx,
        sigma_y_kc=sy,
        sigma_z_kc=sz,
        projector=cat_projector(cp, cm),
    )
