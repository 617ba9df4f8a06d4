"""
First- and higher-order generators, singular points, and higher-order
master equations integrated straight through the singularities.

The higher-order generator is ``L^(n) = E^(n) E^{-1}``.  Wherever the map is
invertible the higher-order equation ``sum_n p_n rho^(n) = 0`` is equivalent
to the first-order one, but unlike ``L`` it stays finite at the zeros of the
map.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .ept import OdeSpec, annihilator
from .errors import NumericalFailureError, UnsupportedError
from .models import GeneratorSample, Model
from .qubit import BlochState

SINGULAR_RADIUS = 1e-9
ROOT_XTOL = 1e-12

__all__ = [
    "GeneratorSample",
    "OdeSolution",
    "map_derivative",
    "higher_generator",
    "verify_generator_recurrence",
    "find_singularities",
    "derive_ode",
    "initial_derivatives",
    "integrate_ode",
    "verify_generator_identity",
]


@lru_cache(maxsize=512)
def _derivative_table(model: Model, n: int):
    if n == 0:
        return model.ept()
    prev = _derivative_table(model, n - 1)
    return tuple(tuple(f.derivative() for f in row) for row in prev)


def map_derivative(model: Model, n: int, t) -> np.ndarray:
    """Exact ``d^n E / dt^n`` at ``t`` (scalar or array) from the EPT table."""
    table = _derivative_table(model, n)
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (4, 4))
    for i, row in enumerate(table):
        for j, f in enumerate(row):
            if not f.is_zero:
                out[..., i, j] = np.real(f(t))
    return out


def _near_zero_of_map(model: Model, t: float) -> bool:
    E = map_derivative(model, 0, t)
    dE = map_derivative(model, 1, t)
    if model.is_diagonal or np.count_nonzero(E[1:, 1:] - np.diag(np.diag(E[1:, 1:]))) == 0:
        f = np.diag(E)[1:]
        fp = np.diag(dE)[1:]
    else:
        f = np.array([np.linalg.det(E[1:, 1:])])
        # derivative of det via Jacobi's formula
        fp = np.array([np.trace(np.linalg.solve(E[1:, 1:], dE[1:, 1:])) * f[0]])
    return bool(np.any((f == 0) | (np.abs(f) <= SINGULAR_RADIUS * np.abs(fp))))


def higher_generator(model: Model, n: int, t: float) -> GeneratorSample:
    """``L^(n)(t) = E^(n)(t) E(t)^{-1}``; singular marker near zeros of the map."""
    if n < 1:
        raise ValueError("order n must be >= 1")
    t = float(t)
    if _near_zero_of_map(model, t):
        return GeneratorSample.singular(t, n)
    E = map_derivative(model, 0, t)
    En = map_derivative(model, n, t)
    with np.errstate(all="ignore"):
        try:
            L = np.linalg.solve(E.T, En.T).T
        except np.linalg.LinAlgError:
            return GeneratorSample.singular(t, n)
    return GeneratorSample.checked(t, L, n)


def _generator_stack(model: Model, order: int, t: float) -> list[np.ndarray]:
    Ls = [np.eye(4)]
    for n in range(1, order + 1):
        sample = higher_generator(model, n, t)
        if sample.is_singular:
            raise ValueError(f"generator is singular at t={t!r}")
        Ls.append(sample.L)
    return Ls


def verify_generator_recurrence(model: Model, n: int, ts, step: float | None = None) -> float:
    """Max deviation of ``L^(n+1) = dL^(n)/dt + L^(n) L^(1)`` over ``ts``.

    ``dL^(n)/dt`` is taken by a five-point finite difference with one
    Richardson step, so the check is independent of the exact derivative
    table used to build ``L^(n+1)``.
    """
    if not model.is_diagonal:
        raise UnsupportedError("the recurrence check needs a diagonal (commuting) generator")
    h = step if step is not None else 4e-4 * model.characteristic_time()
    worst = 0.0
    for t in np.atleast_1d(ts):
        def Ln(s):
            sample = higher_generator(model, n, s)
            if sample.is_singular:
                raise ValueError(f"generator is singular near t={t!r}")
            return sample.L

        def five_point(k):
            return (Ln(t - 2 * k) - 8 * Ln(t - k) + 8 * Ln(t + k) - Ln(t + 2 * k)) / (12 * k)

        dL = (16.0 * five_point(h / 2) - five_point(h)) / 15.0
        L1 = higher_generator(model, 1, t).L
        lhs = higher_generator(model, n + 1, t).L
        worst = max(worst, float(np.max(np.abs(lhs - (dL + Ln(t) @ L1)))))
    return worst


def _bisect(f, a, b):
    return brentq(f, a, b, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


def _zeros_of(fun, dfun, grid, touch_tol):
    roots = []
    vals = fun(grid)
    for k in range(len(grid) - 1):
        if vals[k + 1] == 0.0:
            roots.append(grid[k + 1])
        elif vals[k] * vals[k + 1] < 0.0:
            roots.append(_bisect(fun, grid[k], grid[k + 1]))
    # zeros of even multiplicity do not change sign: look at extrema instead
    dvals = dfun(grid)
    for k in range(len(grid) - 1):
        if dvals[k] * dvals[k + 1] < 0.0:
            tc = _bisect(dfun, grid[k], grid[k + 1])
            if abs(fun(tc)) <= touch_tol:
                roots.append(tc)
    return roots


def find_singularities(model: Model, t_max: float, step: float | None = None) -> list[float]:
    """Zeros of the diagonal entries of T (equivalently of det T) in ``(0, t_max]``.

    Sign changes are scanned on a grid of ``1e-3`` characteristic periods and
    refined by bracketing; touching zeros are found as extrema where the
    entry vanishes.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    h = step if step is not None else 1e-3 * model.characteristic_time()
    n = max(int(np.ceil(t_max / h)), 2)
    grid = np.linspace(0.0, t_max, n + 1)
    table = model.ept()
    funcs = []
    if model.is_diagonal or all(table[i][j].is_zero for i in range(1, 4)
                                for j in range(1, 4) if i != j):
        for i in range(1, 4):
            f = table[i][i]
            if any(f is g for g in funcs):
                continue
            funcs.append(f)
    else:
        raise UnsupportedError("singularity search implemented for diagonal T only")

    found: list[float] = []
    for f in funcs:
        if len(f.spectrum()) == 1 and f.spectrum()[0][0] == 0 and not f.is_zero:
            continue  # nonzero constant
        df = f.derivative()
        fun = lambda s, f=f: np.real(f(s))
        dfun = lambda s, df=df: np.real(df(s))
        scale = max(1.0, float(np.max(np.abs(fun(grid)))))
        for root in _zeros_of(fun, dfun, grid, 1e-9 * scale):
            if 0.0 < root <= t_max and not any(abs(root - r) < 1e-9 for r in found):
                found.append(float(root))
    return sorted(found)


def derive_ode(model: Model) -> OdeSpec:
    """Minimal annihilator of each affine row of the map."""
    try:
        table = model.ept()
    except NotImplementedError:
        raise UnsupportedError(f"{model.name}: map entries are not EPT functions") from None
    coeffs = []
    for row in table:
        entries = [f for f in row if not f.is_zero]
        coeffs.append(annihilator(entries))
    return OdeSpec(tuple(coeffs))


def initial_derivatives(model: Model, rho0: BlochState, order: int) -> list[np.ndarray]:
    """``rho^(k)(0) = E^(k)(0) rho0`` for ``k = 0 .. order-1``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    r = rho0.r if isinstance(rho0, BlochState) else np.asarray(rho0, dtype=float)
    return [map_derivative(model, k, 0.0) @ r for k in range(order)]


@dataclass(frozen=True, eq=False)
class OdeSolution:
    """Solution of a per-component higher-order ODE on a time grid.

    ``derivatives[i]`` has shape ``(len(times), order_i)``; column ``k`` is
    the k-th derivative of component ``i``.
    """

    times: np.ndarray
    derivatives: tuple

    @property
    def values(self) -> np.ndarray:
        """Component values, shape ``(len(times), 4)``."""
        return np.stack([d[:, 0] for d in self.derivatives], axis=1)

    def states(self) -> list[BlochState]:
        out = []
        for row in self.values:
            row = row.copy()
            row[0] = 1.0
            out.append(BlochState(row))
        return out


def _companion(p: np.ndarray) -> np.ndarray:
    m = len(p) - 1
    C = np.zeros((m, m))
    C[:-1, 1:] = np.eye(m - 1)
    C[-1, :] = -p[:-1]
    return C


def characteristic_period(ode: OdeSpec) -> float:
    mags = []
    for p in ode.coefficients:
        roots = np.roots(p[::-1])
        mags.extend(abs(r) for r in roots if abs(r) > 1e-12)
    return 2.0 * np.pi / max(mags) if mags else np.inf


def integrate_ode(ode: OdeSpec, init, grid, check_step: bool = True) -> OdeSolution:
    """Classical fixed-step RK4 on the companion system of each component.

    ``init`` is a sequence of ``ode.order`` affine 4-vectors holding
    ``rho^(k)(0)``; component ``i`` uses the first ``order_i`` of them.
    The steps are the grid spacings.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing with at least two points")
    init = np.asarray(init, dtype=float)
    if init.ndim != 2 or init.shape[0] != ode.order or init.shape[1] != len(ode):
        raise ValueError(f"init must hold {ode.order} vectors of length {len(ode)}")
    hmax = float(np.max(np.diff(grid)))
    if check_step and hmax > characteristic_period(ode) / 200.0:
        raise ValueError(
            f"step {hmax:.3g} exceeds 1/200 of the characteristic period "
            f"{characteristic_period(ode):.3g}"
        )

    orders = ode.orders
    offsets = np.concatenate([[0], np.cumsum(orders)])
    size = int(offsets[-1])
    C = np.zeros((size, size))
    y = np.zeros(size)
    for i, p in enumerate(ode.coefficients):
        lo, hi = offsets[i], offsets[i + 1]
        C[lo:hi, lo:hi] = _companion(p)
        y[lo:hi] = init[: orders[i], i]

    out = np.empty((len(grid), size))
    out[0] = y
    f = lambda v: C @ v
    with np.errstate(over="ignore", invalid="ignore"):
        for k, h in enumerate(np.diff(grid)):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(y)):
                raise NumericalFailureError(
                    f"non-finite values during ODE integration at t={grid[k + 1]:.6g}")
            out[k + 1] = y
    derivs = tuple(out[:, offsets[i]:offsets[i + 1]] for i in range(len(orders)))
    return OdeSolution(grid, derivs)


def verify_generator_identity(model: Model, ode: OdeSpec, ts) -> float:
    """Max over ``ts`` and components of ``|row_i(sum_n p_n L^(n))|``."""
    worst = 0.0
    for t in np.atleast_1d(ts):
        Ls = _generator_stack(model, ode.order, float(t))
        for i, p in enumerate(ode.coefficients):
            row = sum(pn * Ls[n][i] for n, pn in enumerate(p))
            worst = max(worst, float(np.max(np.abs(row))))
    return worst
