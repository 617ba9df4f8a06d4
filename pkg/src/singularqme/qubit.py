"""
Qubit states and channels in the affine Bloch representation.

A state is the real 4-vector ``(1, x, y, z)`` and a trace-preserving qubit
map is a real 4x4 matrix whose first row is ``(1, 0, 0, 0)``::

    E = [[1, 0],
         [s, T]]        r' = T r + s

Density matrices are plain ``(2, 2)`` complex numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

PHYSICAL_TOL = 1e-12
CHOI_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BlochState:
    """Affine Bloch vector ``(1, x, y, z)``."""

    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float).reshape(-1)
        if r.shape != (4,):
            raise ValueError(f"BlochState needs 4 entries, got {r.shape}")
        if r[0] != 1.0:
            raise ValueError(f"first entry must be exactly 1, got {r[0]!r}")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @classmethod
    def from_xyz(cls, x, y=None, z=None) -> "BlochState":
        if y is None and z is None:
            x, y, z = x
        return cls(np.array([1.0, x, y, z]))

    @classmethod
    def from_density(cls, rho) -> "BlochState":
        return cls(bloch_from_density(rho))

    @property
    def xyz(self) -> np.ndarray:
        return self.r[1:]

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.r[1:]))

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        return float(self.r[1:] @ self.r[1:]) <= 1.0 + tol

    def density(self) -> np.ndarray:
        return density_from_bloch(self.r)

    def __neg__(self) -> "BlochState":
        return BlochState.from_xyz(-self.r[1:])

    def __repr__(self):
        x, y, z = self.r[1:]
        return f"BlochState(x={x:.6g}, y={y:.6g}, z={z:.6g})"


@dataclass(frozen=True, eq=False)
class AffineQubitMap:
    """Trace-preserving affine qubit map stored as a 4x4 real matrix."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"affine map must be 4x4, got {m.shape}")
        if not np.array_equal(m[0], [1.0, 0.0, 0.0, 0.0]):
            raise ValueError("first row must be (1, 0, 0, 0) for trace preservation")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls) -> "AffineQubitMap":
        return cls(np.eye(4))

    @classmethod
    def from_parts(cls, T, s=(0.0, 0.0, 0.0)) -> "AffineQubitMap":
        m = np.eye(4)
        m[1:, 1:] = T
        m[1:, 0] = s
        return cls(m)

    @property
    def T(self) -> np.ndarray:
        return self.m[1:, 1:]

    @property
    def s(self) -> np.ndarray:
        return self.m[1:, 0]

    @property
    def is_unital(self) -> bool:
        return bool(np.all(self.s == 0.0))

    def __matmul__(self, other):
        if isinstance(other, AffineQubitMap):
            return AffineQubitMap(self.m @ other.m)
        if isinstance(other, BlochState):
            return apply_map(self, other)
        return NotImplemented


def apply_map(qmap: AffineQubitMap, state: BlochState) -> BlochState:
    """Return ``(1, T r + s)``."""
    out = qmap.m @ state.r
    out[0] = 1.0
    return BlochState(out)


def density_from_bloch(r) -> np.ndarray:
    """Density matrix ``(I + r.sigma)/2`` from a 3- or 4-vector."""
    r = np.asarray(r, dtype=float)
    if r.shape == (4,):
        r = r[1:]
    x, y, z = r
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]], dtype=complex)


def bloch_from_density(rho) -> np.ndarray:
    """Affine 4-vector ``(1, x, y, z)`` of a 2x2 density matrix."""
    rho = np.asarray(rho, dtype=complex)
    x = 2.0 * rho[1, 0].real
    y = 2.0 * rho[1, 0].imag
    z = (rho[0, 0] - rho[1, 1]).real
    return np.array([1.0, x, y, z])


def validate_density(rho, tol: float = PHYSICAL_TOL) -> np.ndarray:
    """Check hermiticity, unit trace and positivity; return ``rho`` as an array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"qubit density matrix must be 2x2, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -CHOI_TOL:
        raise ValueError("density matrix is not positive")
    return rho


def trace_distance(a: BlochState, b: BlochState) -> float:
    """Half the Euclidean distance between Bloch vectors."""
    return 0.5 * float(np.linalg.norm(a.r[1:] - b.r[1:]))


def trace_distance_matrix(rho1, rho2) -> float:
    """``Tr|rho1 - rho2| / 2`` from the eigenvalues of the difference."""
    diff = np.asarray(rho1) - np.asarray(rho2)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def _apply_to_operator(m: np.ndarray, op: np.ndarray) -> np.ndarray:
    # Linear extension of the affine map to arbitrary 2x2 operators via the
    # Pauli coordinates (tr X, tr sigma_a X).
    coords = np.array([np.trace(op)] + [np.trace(p @ op) for p in PAULIS])
    out = m.astype(complex) @ coords
    return 0.5 * (out[0] * IDENTITY_2 + sum(c * p for c, p in zip(out[1:], PAULIS)))


def choi_matrix(qmap: AffineQubitMap) -> np.ndarray:
    """Unit-trace Choi operator ``sum_ij |i><j| (x) E(|i><j|) / 2``."""
    m = qmap.m if isinstance(qmap, AffineQubitMap) else np.asarray(qmap, dtype=float)
    choi = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            unit = np.zeros((2, 2), dtype=complex)
            unit[i, j] = 1.0
            choi += np.kron(unit, _apply_to_operator(m, unit))
    return 0.5 * choi


def choi_min_eigenvalue(qmap: AffineQubitMap) -> float:
    """Smallest eigenvalue of the unit-trace Choi operator.

    A value ``>= -1e-10`` certifies complete positivity.
    """
    choi = choi_matrix(qmap)
    return float(np.linalg.eigvalsh(0.5 * (choi + choi.conj().T)).min())


def binary_entropy(p) -> float:
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    out = 0.0
    for q in (p, 1.0 - p):
        if q > 0.0:
            out -= q * np.log2(q)
    return float(out)


def von_neumann_entropy(state: BlochState) -> float:
    """Entropy in bits, from the eigenvalues ``(1 +- |r|)/2``."""
    radius = min(state.radius, 1.0)
    return binary_entropy(0.5 * (1.0 + radius))


def entropy_of_density(rho, cutoff: float = 1e-15) -> float:
    """Von Neumann entropy (bits) of an arbitrary density matrix."""
    evals = np.linalg.eigvalsh(np.asarray(rho))
    evals = evals[evals > cutoff]
    return float(-np.sum(evals * np.log2(evals)))
