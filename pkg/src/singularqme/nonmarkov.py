"""
Information backflow: trace-distance rates, the windowed BLP quantity and the
average rate of information inflow ``M_tau = N(E_t) / tau``.

The cutoff ``tau`` comes from one of three routes: the first return of the
map to within an L1 tolerance of the identity, the exact period of a
periodic map, or the period of a rationalized quasi-periodic map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import NotFoundError, ResourceError, UnsupportedError
from .models import CentralSpin, Model, central_spin_joint_evolution
from .qubit import BlochState, bloch_from_density, entropy_of_density, validate_density, \
    von_neumann_entropy

DEFAULT_PAIRS = 2048
PERIOD_GRID = 4000
MAX_ORACLE_SPINS = 10


@dataclass(frozen=True, eq=False)
class MeasureResult:
    """Outcome of an information-inflow measurement.

    ``mode`` is ``'tolerance'``, ``'periodic'``, ``'quasiperiodic'`` or
    ``'fixed'``; ``epsilon`` is the tolerance for the first and the
    rationalization tolerance for ``'quasiperiodic'``.
    """

    tau: float
    blp: float
    rate: float
    pair: tuple
    epsilon: float | None = None
    mode: str = "fixed"

    def as_dict(self) -> dict:
        a, b = self.pair
        return {
            "mode": self.mode,
            "epsilon": self.epsilon,
            "tau": self.tau,
            "blp": self.blp,
            "rate": self.rate,
            "pair_1": tuple(float(v) for v in a.xyz),
            "pair_2": tuple(float(v) for v in b.xyz),
        }


@dataclass(frozen=True)
class MutualInfoSample:
    t: float
    value: float


def antipodal_pair(direction) -> tuple[BlochState, BlochState]:
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    return BlochState.from_xyz(n), BlochState.from_xyz(-n)


def map_l1_distance(model: Model, t) -> np.ndarray:
    """Entrywise L1 distance ``sum_ij |(E_t - E_0)_ij|``."""
    E = model.matrix(t)
    return np.abs(E - np.eye(4)).sum(axis=(-2, -1))


def evolved_trace_distance(model: Model, pair, t) -> np.ndarray:
    """Trace distance of the evolved pair; the translation part cancels."""
    a, b = pair
    diff = a.xyz - b.xyz
    T = model.matrix(t)[..., 1:, 1:]
    return 0.5 * np.linalg.norm(T @ diff, axis=-1)


def sigma(model: Model, pair, t: float, h: float = 1e-6) -> float:
    """Central finite difference of the evolved trace distance."""
    if not 1e-8 <= h <= 1e-3:
        raise ValueError("h must lie in [1e-8, 1e-3]")
    if t < h:
        raise ValueError("t must be at least h")
    D = evolved_trace_distance(model, pair, np.array([t - h, t + h]))
    return float((D[1] - D[0]) / (2.0 * h))


# --- cutoff time from a tolerance ------------------------------------------

def _scan_grid(model: Model, t_max: float, step: float | None):
    h = step if step is not None else 1e-3 * model.characteristic_time()
    n = max(int(math.ceil(t_max / h)), 10)
    grid = np.linspace(0.0, t_max, n + 1)
    return grid, map_l1_distance(model, grid)


def _refine_min(fun, a, b):
    res = minimize_scalar(fun, bounds=(a, b), method="bounded",
                          options={"xatol": 1e-12, "maxiter": 500})
    return float(res.x), float(res.fun)


def find_tau(model: Model, epsilon: float, t_max: float, occurrence: int = 1,
             step: float | None = None) -> float:
    """First time the map returns within L1 distance ``epsilon`` of the identity.

    Only downward crossings count, i.e. the distance must be decreasing at
    ``tau``.  Dips that fall below ``epsilon`` between grid points are caught
    by refining grid minima.  ``occurrence`` selects a later return.
    """
    if epsilon <= 0 or t_max <= 0:
        raise ValueError("epsilon and t_max must be positive")
    grid, nv = _scan_grid(model, t_max, step)
    fun = lambda s: float(map_l1_distance(model, s)) - epsilon
    above = np.nonzero(nv > epsilon)[0]
    if len(above) == 0:
        raise NotFoundError(
            f"the map never leaves the epsilon={epsilon:g} ball in (0, {t_max:g}]",
            min_value=float(nv[1:].min()),
        )
    start = above[0]
    roots = []
    for k in range(start, len(grid) - 1):
        if nv[k] > epsilon >= nv[k + 1]:
            roots.append(brentq(fun, grid[k], grid[k + 1], xtol=1e-12))
        elif 0 < k and nv[k] > epsilon and nv[k] <= nv[k - 1] and nv[k] <= nv[k + 1]:
            tmin, vmin = _refine_min(lambda s: float(map_l1_distance(model, s)),
                                     grid[k - 1], grid[k + 1])
            if vmin <= epsilon:
                roots.append(brentq(fun, grid[k - 1], tmin, xtol=1e-12))
        if len(roots) >= occurrence:
            return float(sorted(roots)[occurrence - 1])
    # smallest distance reached once the initial excursion has peaked
    rising = np.nonzero(np.diff(nv[start:]) < 0)[0]
    peak = start + (int(rising[0]) if len(rising) else len(nv) - 1 - start)
    raise NotFoundError(
        f"no return within epsilon={epsilon:g} in (0, {t_max:g}]",
        min_value=float(nv[peak:].min()),
    )


def first_local_minimum(model: Model, t_max: float, step: float | None = None):
    """First interior local minimum ``(t, value)`` of the L1 distance to the identity."""
    grid, nv = _scan_grid(model, t_max, step)
    for k in range(1, len(grid) - 1):
        if nv[k] < nv[k - 1] and nv[k] <= nv[k + 1]:
            return _refine_min(lambda s: float(map_l1_distance(model, s)),
                               grid[k - 1], grid[k + 1])
    raise NotFoundError(f"no local minimum of the map distance in (0, {t_max:g}]",
                        min_value=float(nv[1:].min()))


def auto_epsilon(models, t_max: float) -> float:
    """Shared tolerance: the largest of the models' first local minima."""
    return max(first_local_minimum(m, t_max)[1] for m in models)


# --- windowed BLP ----------------------------------------------------------

def _rise_sum(D: np.ndarray, axis: int = -1) -> np.ndarray:
    d = np.diff(D, axis=axis)
    return np.where(d > 0, d, 0.0).sum(axis=axis)


def _extrema(fun, grid, D):
    """Refined ``(t, value, kind)`` for each interior extremum of sampled ``D``."""
    d = np.diff(D)
    out = []
    prev = 0.0
    for k in range(1, len(D) - 1):
        if d[k - 1] != 0:
            prev = d[k - 1]
        if prev == 0 or d[k] == 0 or (prev > 0) == (d[k] > 0):
            continue
        lo, hi = grid[k - 1], grid[k + 1]
        if prev > 0:
            t, v = _refine_min(lambda s: -float(fun(s)), lo, hi)
            out.append((t, -v, "max"))
        else:
            t, v = _refine_min(lambda s: float(fun(s)), lo, hi)
            out.append((t, v, "min"))
    return out


def _grid(tau: float, dt: float | None, model: Model) -> np.ndarray:
    if dt is None:
        dt = min(tau / PERIOD_GRID, model.characteristic_time() / 200.0)
    if dt > tau / 500.0:
        raise ValueError("dt must not exceed tau/500")
    n = int(math.ceil(tau / dt))
    return np.linspace(0.0, tau, n + 1)


def information_windows(model: Model, pair, tau: float, dt: float | None = None):
    """Intervals in ``[0, tau]`` on which the trace distance increases."""
    grid = _grid(tau, dt, model)
    fun = lambda s: evolved_trace_distance(model, pair, s)
    D = fun(grid)
    points = [(0.0, float(D[0]))] + [(t, v) for t, v, _ in _extrema(fun, grid, D)]
    points.append((float(tau), float(D[-1])))
    return [(a[0], b[0]) for a, b in zip(points, points[1:]) if b[1] > a[1]]


def blp_windowed(model: Model, pair, tau: float, dt: float | None = None) -> float:
    """Integral of ``sigma`` over ``sigma > 0`` in ``[0, tau]``.

    Computed as the telescoped rise of the trace distance between
    consecutive extrema, each extremum refined off the grid.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    grid = _grid(tau, dt, model)
    fun = lambda s: evolved_trace_distance(model, pair, s)
    D = fun(grid)
    values = [float(D[0])] + [v for _, v, _ in _extrema(fun, grid, D)] + [float(D[-1])]
    return float(sum(max(0.0, b - a) for a, b in zip(values, values[1:])))


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` unit vectors in a golden-angle spiral layout."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


def _coarse_blp(T: np.ndarray, dirs: np.ndarray, chunk: int = 256) -> np.ndarray:
    out = np.empty(len(dirs))
    flat = T.reshape(-1, 3)
    for lo in range(0, len(dirs), chunk):
        block = dirs[lo:lo + chunk]
        images = (flat @ block.T).reshape(len(T), 3, len(block))
        D = np.sqrt(np.einsum("tip,tip->tp", images, images))
        out[lo:lo + chunk] = _rise_sum(D, axis=0)
    return out


def _tangent_basis(n):
    helper = np.array([1.0, 0, 0]) if abs(n[0]) < 0.9 else np.array([0, 1.0, 0])
    u = np.cross(n, helper)
    u /= np.linalg.norm(u)
    return u, np.cross(n, u)


def optimal_pair_search(model: Model, tau: float, n_points: int = DEFAULT_PAIRS,
                        dt: float | None = None, epsilon: float | None = None,
                        mode: str = "fixed") -> MeasureResult:
    """Maximize the windowed BLP over antipodal pure pairs.

    Candidate directions come from a Fibonacci sphere; the best one is then
    polished by a shrinking-neighbourhood search before the final refined
    evaluation.
    """
    if n_points < 64:
        raise ValueError("n_points must be >= 64")
    grid = _grid(tau, dt, model)
    T = model.matrix(grid)[:, 1:, 1:]
    dirs = fibonacci_sphere(n_points)
    scores = _coarse_blp(T, dirs)
    best = dirs[int(np.argmax(scores))]
    best_score = float(scores.max())

    delta = math.sqrt(4.0 * math.pi / n_points)
    angles = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
    while delta > 1e-7:
        u, v = _tangent_basis(best)
        cand = (math.cos(delta) * best[None, :]
                + math.sin(delta) * (np.cos(angles)[:, None] * u + np.sin(angles)[:, None] * v))
        cand_scores = _coarse_blp(T, cand)
        k = int(np.argmax(cand_scores))
        if cand_scores[k] > best_score + 1e-15:
            best, best_score = cand[k] / np.linalg.norm(cand[k]), float(cand_scores[k])
        else:
            delta *= 0.5

    pair = antipodal_pair(best)
    blp = blp_windowed(model, pair, tau, dt)
    return MeasureResult(float(tau), blp, blp / tau, pair, epsilon, mode)


def measure_rate_tolerance(model: Model, epsilon: float, t_max: float,
                           n_points: int = DEFAULT_PAIRS, occurrence: int = 1) -> MeasureResult:
    tau = find_tau(model, epsilon, t_max, occurrence=occurrence)
    return optimal_pair_search(model, tau, n_points, epsilon=epsilon, mode="tolerance")


# --- periodic and quasi-periodic maps --------------------------------------

def _fundamental(freqs, fractions) -> float:
    base = freqs[0]
    L = reduce(math.lcm, (f.denominator for f in fractions), 1)
    ints = [int(f * L) for f in fractions]
    g = reduce(math.gcd, ints)
    return base * g / L


def map_period(model: Model, max_denominator: int = 10_000) -> float:
    """Exact period of a map whose entries are finite sums of sinusoids."""
    freqs = []
    for row in model.ept():
        for f in row:
            for c, k, lam in f.terms:
                if k or abs(lam.real) > 1e-12:
                    raise UnsupportedError(f"{model.name}: map is not periodic")
                if abs(lam.imag) > 1e-12:
                    freqs.append(abs(lam.imag))
    if not freqs:
        raise UnsupportedError(f"{model.name}: map is constant, no period")
    freqs = sorted(set(round(f, 12) for f in freqs))
    ratios = []
    for f in freqs:
        r = f / freqs[0]
        frac = Fraction(r).limit_denominator(max_denominator)
        if abs(float(frac) - r) > 1e-9 * r:
            raise UnsupportedError(f"{model.name}: incommensurate frequencies, map is aperiodic")
        ratios.append(frac)
    return 2.0 * math.pi / _fundamental(freqs, ratios)


def measure_rate_periodic(model: Model, n_points: int = DEFAULT_PAIRS) -> MeasureResult:
    """``M_tau`` with ``tau`` the exact period of the map."""
    T = map_period(model)
    return optimal_pair_search(model, T, n_points, dt=T / PERIOD_GRID, mode="periodic")


def continued_fraction_convergents(x: float, max_terms: int = 64):
    """Yield successive convergents of ``x`` as Fractions."""
    h_prev, h = 1, math.floor(x)
    k_prev, k = 0, 1
    yield Fraction(h, k)
    frac = x - math.floor(x)
    for _ in range(max_terms):
        if frac == 0:
            return
        x = 1.0 / frac
        a = math.floor(x)
        frac = x - a
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        yield Fraction(h, k)


def rationalize_ratio(x: float, tol: float) -> Fraction:
    """First continued-fraction convergent within relative ``tol`` of ``x``."""
    last = None
    for conv in continued_fraction_convergents(x):
        last = conv
        if abs(float(conv) - x) <= tol * abs(x):
            return conv
    return last


def rationalize_frequencies(frequencies, tol: float):
    """Replace each ratio ``f_i / f_0`` by its first adequate convergent."""
    freqs = [float(f) for f in frequencies]
    if len(freqs) < 2:
        raise ValueError("need at least two frequencies")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if any(f <= 0 for f in freqs):
        raise ValueError("frequencies must be positive (zero frequency is degenerate)")
    ratios = [Fraction(1)] + [rationalize_ratio(f / freqs[0], tol) for f in freqs[1:]]
    return [freqs[0] * float(r) for r in ratios], ratios


def rationalize_period(frequencies, tol: float) -> float:
    """Common period of the rationalized frequency set."""
    freqs, ratios = rationalize_frequencies(frequencies, tol)
    return 2.0 * math.pi / _fundamental(freqs, ratios)


def measure_rate_rationalized(model: Model, tol: float,
                              n_points: int = DEFAULT_PAIRS) -> MeasureResult:
    """``M_tau`` over the period of the model with rationalized frequencies."""
    if not hasattr(model, "frequencies"):
        raise UnsupportedError(f"{model.name}: no frequency set to rationalize")
    freqs, _ = rationalize_frequencies(model.frequencies, tol)
    approx = model.with_frequencies(freqs)
    T = rationalize_period(model.frequencies, tol)
    result = optimal_pair_search(approx, T, n_points, dt=T / (PERIOD_GRID * 4),
                                 epsilon=tol, mode="quasiperiodic")
    return result


# --- mutual information in the central spin model --------------------------

def mutual_information(N: int, A: float, rho0, t: float, oracle: bool = False) -> MutualInfoSample:
    """System-bath mutual information (bits) of the central spin model.

    The bath marginal stays maximally mixed and the joint entropy is
    conserved, so the fast path is ``S(rho_sys(t)) - S(rho0)``.  The oracle
    path diagonalizes the full joint state.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    rho0 = validate_density(rho0)
    if oracle:
        if N > MAX_ORACLE_SPINS:
            raise ResourceError(f"oracle mutual information supports N <= {MAX_ORACLE_SPINS}")
        joint = central_spin_joint_evolution(N, A, rho0, t)
        value = (entropy_of_density(joint.system()) + entropy_of_density(joint.environment())
                 - entropy_of_density(joint.matrix))
    else:
        r0 = BlochState(bloch_from_density(rho0))
        rt = CentralSpin(N=N, A=A).map_at(t) @ r0
        value = von_neumann_entropy(rt) - von_neumann_entropy(r0)
    return MutualInfoSample(float(t), float(value))
