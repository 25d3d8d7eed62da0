"""Project-wide numeric conventions and default tolerances.

Unit system
-----------
All public interfaces use ordinary frequencies in MHz and times in us.
The conversion to angular frequency (rad/us) happens exactly once, inside
the Hamiltonian builders in :mod:`kcsim.model`.  Dissipator rates are plain
reciprocal lifetimes in 1/us and are never multiplied by 2*pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Tolerances:
    """Default numerical tolerances, overridable per call site.

    A single instance (:data:`DEFAULT_TOLS`) backs every validation in the
    package; construct a modified copy with ``dataclasses.replace`` to tighten
    or loosen individual checks.
    """

    # state / operator validation
    state_hermiticity: float = 1e-10     # max entrywise |rho - rho^dag|
    state_trace: float = 1e-8            # |Tr(rho) - 1|
    state_positivity: float = 1e-8       # eigenvalues >= -state_positivity
    vector_norm: float = 1e-9            # | ||psi|| - 1 | after normalization
    hermitian_input: float = 1e-8        # Hermiticity gate for eigensolver input

    # cat-frame algebra
    cat_orthogonality: float = 1e-14     # |<C+|C->| (exact zero by parity)
    projector_idempotency: float = 1e-9  # ||P^2 - P||_max
    projector_trace: float = 1e-8        # |Tr(P) - 2|
    pauli_algebra: float = 1e-8          # sigma^2 = P and anticommutators
    displacement: float = 1e-6           # |<a> - alpha| for coherent states

    # builders / integration
    hamiltonian_hermiticity: float = 1e-12
    trace_drift_warn: float = 1e-6       # expected drift over a full run
    trace_drift_abort: float = 1e-4      # evolve aborts beyond this
    manifold_degeneracy: float = 1e-6    # KCQ ground-manifold split, MHz


DEFAULT_TOLS = Tolerances()
