"""
Generator tomography from trajectories of four linearly independent states.

The generator is written in GKSL form with ``F_a = sigma_a / sqrt(2)``::

    L(rho) = -i [h . sigma, rho]
             + sum_ab c_ab (F_a rho F_b^+ - {F_b^+ F_a, rho} / 2)

with ``c`` Hermitian.  ``L`` is linear in the 12 real parameters (9 for
``c``, 3 for ``h``), and each of the four trajectories contributes three
equations ``r_dot = L(r)``, giving a square 12x12 system.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import IllConditionedError
from .models import Model
from .qubit import IDENTITY_2, PAULIS, BlochState

COND_LIMIT = 1e8

# |0>, |1>, |+>, (|0> + i|1>)/sqrt(2)
INITIAL_STATES = (
    BlochState.from_xyz(0.0, 0.0, 1.0),
    BlochState.from_xyz(0.0, 0.0, -1.0),
    BlochState.from_xyz(1.0, 0.0, 0.0),
    BlochState.from_xyz(0.0, 1.0, 0.0),
)

_F = tuple(p / np.sqrt(2.0) for p in PAULIS)
_PAIRS = ((0, 1), (0, 2), (1, 2))


def lindblad_rhs(c, h, rho) -> np.ndarray:
    """Apply the GKSL generator with Kossakowski matrix ``c`` and field ``h``."""
    c = np.asarray(c, dtype=complex)
    H = sum(hk * p for hk, p in zip(h, PAULIS))
    out = -1j * (H @ rho - rho @ H)
    for a in range(3):
        for b in range(3):
            if c[a, b] == 0:
                continue
            Fb = _F[b].conj().T
            out = out + c[a, b] * (_F[a] @ rho @ Fb - 0.5 * (Fb @ _F[a] @ rho + rho @ Fb @ _F[a]))
    return out


def kossakowski_to_bloch(c, h) -> np.ndarray:
    """4x4 affine generator acting on ``(1, x, y, z)``."""
    basis = [IDENTITY_2 / 2.0] + [p / 2.0 for p in PAULIS]
    L = np.zeros((4, 4))
    for j, op in enumerate(basis):
        L[1:, j] = _coords(lindblad_rhs(c, h, op))
    return L


def _coords(op) -> np.ndarray:
    # Pauli coordinates tr(sigma_a X) of a traceless operator
    return np.array([np.trace(p @ op).real for p in PAULIS])


def _unpack(theta):
    c = np.diag(theta[:3]).astype(complex)
    for k, (a, b) in enumerate(_PAIRS):
        c[a, b] = theta[3 + k] + 1j * theta[6 + k]
        c[b, a] = np.conj(c[a, b])
    return c, np.asarray(theta[9:12], dtype=float)


_BASIS_GENERATORS = tuple(kossakowski_to_bloch(*_unpack(e)) for e in np.eye(12))


def design_matrix(states) -> np.ndarray:
    """Rows ``3i .. 3i+2`` hold the Bloch derivative of state ``i`` per unit parameter."""
    A = np.empty((3 * len(states), 12))
    for i, r in enumerate(states):
        r = np.concatenate([[1.0], np.asarray(r, dtype=float)[-3:]])
        for j, G in enumerate(_BASIS_GENERATORS):
            A[3 * i:3 * i + 3, j] = (G @ r)[1:]
    return A


@dataclass(frozen=True, eq=False)
class TrajectoryBundle:
    """Bloch trajectories ``(x, y, z)`` of the four standard initial states.

    ``states`` has shape ``(4, len(times), 3)``.
    """

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if times.ndim != 1 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if states.shape != (4, len(times), 3):
            raise ValueError(f"states must have shape (4, {len(times)}, 3), got {states.shape}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @classmethod
    def from_model(cls, model: Model, times) -> "TrajectoryBundle":
        times = np.asarray(times, dtype=float)
        E = model.matrix(times)
        states = np.stack([(E @ s.r)[:, 1:] for s in INITIAL_STATES])
        return cls(times, states)

    @classmethod
    def from_csv(cls, paths) -> "TrajectoryBundle":
        paths = list(paths)
        if len(paths) != 4:
            raise ValueError("tomography needs exactly four trajectory files")
        grids, series = [], []
        for path in paths:
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            if data.shape[1] != 4:
                raise ValueError(f"{path}: expected columns t,x,y,z")
            grids.append(data[:, 0])
            series.append(data[:, 1:])
        for path, g in zip(paths[1:], grids[1:]):
            if g.shape != grids[0].shape or not np.array_equal(g, grids[0]):
                raise ValueError(f"{path}: time grid differs from {paths[0]}")
        return cls(grids[0], np.stack(series))

    def to_csv(self, paths) -> None:
        for path, series in zip(paths, self.states):
            with open(Path(path), "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "x", "y", "z"])
                for t, row in zip(self.times, series):
                    w.writerow([f"{t:.12g}"] + [f"{v:.12g}" for v in row])

    def with_noise(self, amplitude: float, seed: int | None = None) -> "TrajectoryBundle":
        """Copy with additive Gaussian noise on every Bloch component."""
        rng = np.random.default_rng(seed)
        return TrajectoryBundle(self.times, self.states + amplitude * rng.standard_normal(self.states.shape))


@dataclass(frozen=True, eq=False)
class GeneratorEstimate:
    t: float
    c: np.ndarray
    h: np.ndarray
    residual: float
    condition_number: float

    @property
    def generator(self) -> np.ndarray:
        return kossakowski_to_bloch(self.c, self.h)


def _derivatives(bundle: TrajectoryBundle, t: float, step, method: str, interpolate: bool):
    times = bundle.times
    if interpolate:
        splines = [CubicSpline(times, s, axis=0) for s in bundle.states]
        if step is None:
            return np.stack([sp(t) for sp in splines]), np.stack([sp(t, 1) for sp in splines])
        r = np.stack([sp(t) for sp in splines])
        if method == "forward":
            return r, np.stack([(sp(t + step) - sp(t)) / step for sp in splines])
        return r, np.stack([(sp(t + step) - sp(t - step)) / (2 * step) for sp in splines])

    idx = np.nonzero(np.isclose(times, t, rtol=0, atol=1e-12 * max(1.0, abs(t))))[0]
    if len(idx) == 0:
        raise ValueError(f"t={t!r} is not on the grid; enable interpolate")
    k = int(idx[0])
    S = bundle.states
    if step is not None:
        spacing = times[k + 1] - times[k] if k + 1 < len(times) else times[k] - times[k - 1]
        if not np.isclose(step, spacing, rtol=1e-6):
            raise ValueError("step does not match the grid spacing; enable interpolate")
    if method == "forward" or k == 0:
        if k + 1 >= len(times):
            raise ValueError("forward difference needs t+h on the grid")
        return S[:, k], (S[:, k + 1] - S[:, k]) / (times[k + 1] - times[k])
    if k + 1 >= len(times):
        return S[:, k], (S[:, k] - S[:, k - 1]) / (times[k] - times[k - 1])
    # three-point central difference, exact for quadratics on uneven grids
    h1, h2 = times[k] - times[k - 1], times[k + 1] - times[k]
    d = (-h2 / (h1 * (h1 + h2)) * S[:, k - 1] + (h2 - h1) / (h1 * h2) * S[:, k]
         + h1 / (h2 * (h1 + h2)) * S[:, k + 1])
    return S[:, k], d


def condition_number(bundle: TrajectoryBundle, t: float, interpolate: bool = False) -> float:
    """Condition number of the 12x12 tomography system at ``t``."""
    r, _ = _derivatives(bundle, t, None, "central", interpolate)
    return float(np.linalg.cond(design_matrix(r)))


def estimate_generator(bundle: TrajectoryBundle, t: float, h: float | None = None,
                       method: str = "central", interpolate: bool = False,
                       cond_limit: float = COND_LIMIT) -> GeneratorEstimate:
    """Solve for ``(c, h)`` at time ``t``.

    ``method`` is ``'central'`` (default) or ``'forward'``, the latter being
    ``[r(t+h) - r(t)] / h``.  Raises IllConditionedError when the system's
    condition number exceeds ``cond_limit``.
    """
    if method not in ("central", "forward"):
        raise ValueError("method must be 'central' or 'forward'")
    r, rdot = _derivatives(bundle, float(t), h, method, interpolate)
    A = design_matrix(r)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(f"tomography system ill-conditioned at t={t:g}", cond)
    b = rdot.reshape(-1)
    theta, *_ = np.linalg.lstsq(A, b, rcond=None)
    c, hvec = _unpack(theta)
    return GeneratorEstimate(float(t), c, hvec, float(np.linalg.norm(A @ theta - b)), cond)


def canonical_rates(est: GeneratorEstimate):
    """``(rate, direction)`` pairs from the eigendecomposition of ``c``.

    The rate multiplies ``sigma_v rho sigma_v - rho`` for the Pauli
    direction ``v``; with ``F = sigma / sqrt(2)`` it is half the
    eigenvalue of ``c``.  Pairs are ordered by dominant axis (x, y, z).
    """
    c = est.c if isinstance(est, GeneratorEstimate) else np.asarray(est)
    evals, evecs = np.linalg.eigh(0.5 * (c + c.conj().T))
    pairs = []
    for k in range(3):
        v = evecs[:, k]
        v = v * np.exp(-1j * np.angle(v[np.argmax(np.abs(v))]))
        pairs.append((0.5 * float(evals[k]), v))
    pairs.sort(key=lambda p: int(np.argmax(np.abs(p[1]))))
    return pairs
