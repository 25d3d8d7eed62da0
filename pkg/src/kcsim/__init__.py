"""Simulation and calibration engine for a stabilized Kerr-cat qubit coupled
to a transmon through a frequency-converting (beam-splitter) drive.

Layers, bottom up: dense operator algebra (:mod:`kcsim.qops`), cat-state
construction (:mod:`kcsim.catspace`), Hamiltonian/dissipator builders
(:mod:`kcsim.model`), Lindblad integration (:mod:`kcsim.lindblad`),
figure-style scenario drivers (:mod:`kcsim.experiments`), calibration fits
(:mod:`kcsim.fitting`) and a CLI (:mod:`kcsim.cli`).
"""

__version__ = "0.1.0"

from .catspace import CatFrame, build_cat_frame, cat_state, coherent_state
from .constants import DEFAULT_TOLS, TWO_PI, Tolerances
from .lindblad import IntegratorConfig, TimeSeries, evolve, lindblad_rhs, validate_state
from .model import PulseSchedule, SystemParams, build_effective_hamiltonian
from .qops import DensityMatrix, Operator, StateVector, expect, hermitian_eigensystem, kron

__all__ = [
    "__version__",
    "CatFrame", "build_cat_frame", "cat_state", "coherent_state",
    "DEFAULT_TOLS", "TWO_PI", "Tolerances",
    "IntegratorConfig", "TimeSeries", "evolve", "lindblad_rhs", "validate_state",
    "PulseSchedule", "SystemParams", "build_effective_hamiltonian",
    "DensityMatrix", "Operator", "StateVector", "expect",
    "hermitian_eigensystem", "kron",
]
