"""Dense complex operator and state algebra.

Everything in the package is built on three immutable containers:
:class:`Operator` (square complex matrix), :class:`StateVector` (ket) and
:class:`DensityMatrix` (validated state operator).  Storage is dense,
row-major, zero-based and double precision throughout; at the Hilbert-space
sizes used here (<= 60) sparse machinery would be unjustified complexity.

All operations are pure functions returning new objects, so instances are
safe to share across concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import DEFAULT_TOLS, Tolerances


class DimensionMismatch(ValueError):
    """Operands live on Hilbert spaces of different dimension."""


class NonHermitianInput(ValueError):
    """A Hermitian matrix was required but not supplied."""


class StateValidationError(ValueError):
    """A state failed its trace / Hermiticity / positivity invariants."""


def _as_readonly_complex(array, shape_kind: str) -> np.ndarray:
    arr = np.asarray(array, dtype=np.complex128)
    if shape_kind == "matrix":
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    elif arr.ndim != 1 or arr.shape[0] < 1:
        raise ValueError(f"expected a vector, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr)
    if not np.all(np.isfinite(arr)):
        raise ValueError("entries must be finite")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Operator:
    """Immutable dense complex square matrix with dimension metadata."""

    entries: np.ndarray
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_readonly_complex(self.entries, "matrix"))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def adjoint(self) -> "Operator":
        return Operator(self.entries.conj().T, label=self.label)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.linalg.norm(self.entries))

    def is_hermitian(self, tol: float | None = None) -> bool:
        tol = DEFAULT_TOLS.hermitian_input if tol is None else tol
        return float(np.abs(self.entries - self.entries.conj().T).max()) <= tol

    def relabel(self, label: str) -> "Operator":
        return Operator(self.entries, label=label)

    # -- arithmetic -------------------------------------------------------
    def _check_dim(self, other: "Operator"):
        if self.dim != other.dim:
            raise DimensionMismatch(f"dim {self.dim} vs {other.dim}")

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_dim(other)
        return Operator(self.entries @ other.entries)

    def __add__(self, other: "Operator") -> "Operator":
        self._check_dim(other)
        return Operator(self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_dim(other)
        return Operator(self.entries - other.entries)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.entries * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(-self.entries)


@dataclass(frozen=True)
class StateVector:
    """Immutable ket on a dim-dimensional Hilbert space."""

    amplitudes: np.ndarray
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "amplitudes", _as_readonly_complex(self.amplitudes, "vector")
        )

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, label=self.label)

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>."""
        if self.dim != other.dim:
            raise DimensionMismatch(f"dim {self.dim} vs {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Operator with the role tag "state": Hermitian, unit trace, positive.

    Validation runs on construction against the supplied tolerances and
    raises :class:`StateValidationError` on failure.  Pass ``validate=False``
    only for matrices already known valid (hot paths).
    """

    op: Operator
    validate: bool = True
    tols: Tolerances = field(default=DEFAULT_TOLS, repr=False)

    def __post_init__(self):
        if self.validate:
            m = self.op.entries
            herm = float(np.abs(m - m.conj().T).max())
            if herm > self.tols.state_hermiticity:
                raise StateValidationError(f"Hermiticity violation {herm:.3e}")
            tr_err = abs(np.trace(m) - 1.0)
            if tr_err > self.tols.state_trace:
                raise StateValidationError(f"trace deviates from 1 by {tr_err:.3e}")
            min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min())
            if min_eig < -self.tols.state_positivity:
                raise StateValidationError(f"negative eigenvalue {min_eig:.3e}")

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def entries(self) -> np.ndarray:
        return self.op.entries

    @classmethod
    def from_pure(cls, psi: StateVector, **kw) -> "DensityMatrix":
        v = psi.amplitudes
        return cls(Operator(np.outer(v, v.conj())), **kw)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(Operator(np.eye(dim) / dim))

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def identity(dim: int) -> Operator:
    return Operator(np.eye(dim), label="I")


def basis_state(dim: int, k: int) -> StateVector:
    if not 0 <= k < dim:
        raise ValueError(f"basis index {k} outside [0, {dim})")
    v = np.zeros(dim, dtype=np.complex128)
    v[k] = 1.0
    return StateVector(v)


def outer_product(u: StateVector, v: StateVector) -> Operator:
    """|u><v|."""
    if u.dim != v.dim:
        raise DimensionMismatch(f"dim {u.dim} vs {v.dim}")
    return Operator(np.outer(u.amplitudes, v.amplitudes.conj()))


# ---------------------------------------------------------------------------
# core operations
# ---------------------------------------------------------------------------

def kron(a: Operator, b: Operator) -> Operator:
    """Tensor product, first factor slow index.

    The project-wide ordering convention puts the Kerr-cat oscillator factor
    first and the transmon factor second.
    """
    return Operator(np.kron(a.entries, b.entries))


def kron_state(u: StateVector, v: StateVector) -> StateVector:
    return StateVector(np.kron(u.amplitudes, v.amplitudes))


def expect(obs: Operator, rho: DensityMatrix | Operator) -> complex:
    """Tr(obs @ rho).

    For Hermitian observables on valid states the imaginary part is numerical
    noise (< 1e-8); callers that report real traces drop it explicitly.
    """
    m = rho.entries if isinstance(rho, DensityMatrix) else rho.entries
    if obs.dim != m.shape[0]:
        raise DimensionMismatch(f"dim {obs.dim} vs {m.shape[0]}")
    # Tr(O rho) = sum_ij O_ij rho_ji
    return complex(np.dot(obs.entries.ravel(), m.T.ravel()))


def expect_state(obs: Operator, psi: StateVector) -> complex:
    """<psi|obs|psi>."""
    if obs.dim != psi.dim:
        raise DimensionMismatch(f"dim {obs.dim} vs {psi.dim}")
    return complex(np.vdot(psi.amplitudes, obs.entries @ psi.amplitudes))


def hermitian_eigensystem(
    a: Operator, tol: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending, real) and eigenvector columns of a Hermitian operator.

    Raises :class:`NonHermitianInput` when the input fails the Hermiticity
    gate; use an explicit symmetrization upstream if that is intended.
    """
    tol = DEFAULT_TOLS.hermitian_input if tol is None else tol
    dev = float(np.abs(a.entries - a.entries.conj().T).max())
    if dev > tol:
        raise NonHermitianInput(f"max |A - A^dag| = {dev:.3e} exceeds {tol:.1e}")
    w, v = np.linalg.eigh(a.entries)
    return w, v
