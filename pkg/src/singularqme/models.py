"""
Catalog of exactly solvable single-qubit dynamical maps.

Every model gives its affine map in closed form (``matrix``), the same map
as a 4x4 table of EPT functions (``ept``), and where a first-order master
equation is known in closed form, that generator (``generator``).  The
closed forms and the EPT tables are written independently so that each can
check the other.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field, fields
from functools import cached_property

import numpy as np
import scipy.linalg

from .ept import EptFunction, expand_cos_power
from .errors import ResourceError, UnsupportedError
from .qubit import AffineQubitMap, validate_density

SINGULAR_RATE = 1e12
MAX_JOINT_SPINS = 12
MAX_DENSE_SPINS = 6


@dataclass(frozen=True, eq=False)
class GeneratorSample:
    """Generator ``L`` (or higher-order ``L^(n)``) at one time."""

    t: float
    L: np.ndarray
    order: int = 1
    validity: str = "finite"

    @property
    def is_singular(self) -> bool:
        return self.validity == "singular"

    @classmethod
    def singular(cls, t, order=1) -> "GeneratorSample":
        return cls(float(t), np.full((4, 4), np.nan), order, "singular")

    @classmethod
    def checked(cls, t, L, order=1) -> "GeneratorSample":
        L = np.asarray(L, dtype=float)
        if not np.all(np.isfinite(L)) or np.max(np.abs(L)) > SINGULAR_RATE:
            return cls.singular(t, order)
        return cls(float(t), L, order, "finite")


def pauli_generator(gx, gy, gz) -> np.ndarray:
    """Affine generator of ``sum_a g_a (sigma_a rho sigma_a - rho)``."""
    return np.diag([0.0, -2.0 * (gy + gz), -2.0 * (gx + gz), -2.0 * (gx + gy)])


def _diag_matrices(t, *diagonal):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (4, 4))
    out[..., 0, 0] = 1.0
    for i, d in enumerate(diagonal, start=1):
        out[..., i, i] = d
    return out


class Model:
    """Base class; subclasses are frozen dataclasses holding the parameters."""

    name = "model"
    is_diagonal = True

    def matrix(self, t) -> np.ndarray:
        """Closed-form affine map; shape ``(4, 4)`` or ``t.shape + (4, 4)``."""
        raise NotImplementedError

    def _ept_table(self):
        raise NotImplementedError

    def _rates(self, t):
        raise UnsupportedError(f"{self.name}: no closed-form generator available")

    @property
    def has_closed_generator(self) -> bool:
        return type(self)._rates is not Model._rates

    @cached_property
    def _ept_cache(self):
        table = self._ept_table()
        return tuple(tuple(row) for row in table)

    def ept(self):
        """4x4 table of EPT functions, one row per affine component."""
        return self._ept_cache

    def map_at(self, t: float) -> AffineQubitMap:
        return AffineQubitMap(self.matrix(float(t)))

    def generator(self, t: float) -> GeneratorSample:
        return GeneratorSample.checked(t, self._rates(float(t)), 1)

    @property
    def is_unital(self) -> bool:
        return all(self.ept()[i][0].is_zero for i in range(1, 4))

    def spectrum(self) -> list[complex]:
        rates: list[complex] = []
        for row in self.ept():
            for f in row:
                for lam, _ in f.spectrum():
                    if not any(abs(lam - r) <= 1e-10 * max(1.0, abs(r)) for r in rates):
                        rates.append(lam)
        return rates

    def characteristic_time(self) -> float:
        """``2 pi / max |lam|`` over the nonzero rates of the map entries."""
        mags = [abs(lam) for lam in self.spectrum() if abs(lam) > 1e-12]
        if not mags:
            return 2.0 * math.pi
        return 2.0 * math.pi / max(mags)

    def params(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


def _check_nonneg(**values):
    for key, val in values.items():
        if not np.isfinite(val) or val < 0:
            raise ValueError(f"{key} must be a nonnegative number, got {val!r}")


@dataclass(frozen=True, eq=False, repr=False)
class Identity(Model):
    """The trivial map ``E_t = I`` for all t."""

    name = "identity"

    def matrix(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.eye(4), t.shape + (4, 4)).copy()

    def _ept_table(self):
        one, zero = EptFunction.constant(1.0), EptFunction.zero()
        return [[one if i == j else zero for j in range(4)] for i in range(4)]

    def _rates(self, t):
        return np.zeros((4, 4))


def _diag_ept(*diagonal):
    zero = EptFunction.zero()
    table = [[zero] * 4 for _ in range(4)]
    table[0][0] = EptFunction.constant(1.0)
    for i, f in enumerate(diagonal, start=1):
        table[i][i] = f
    return table


@dataclass(frozen=True, eq=False, repr=False)
class CentralSpin(Model):
    """Central qubit coupled to N bath spins via ``(A/sqrt N) sz (x) sz_k``.

    The coherences are multiplied by ``cos(w t)**N`` with ``w = 2A/sqrt(N)``.
    """

    N: int = 1
    A: float = 0.5
    name = "central-spin"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        _check_nonneg(A=self.A)

    @property
    def omega(self) -> float:
        return 2.0 * self.A / math.sqrt(self.N)

    @classmethod
    def with_omega(cls, N: int, omega: float) -> "CentralSpin":
        return cls(N=N, A=omega * math.sqrt(N) / 2.0)

    @property
    def period(self) -> float:
        """Exact period of the map: ``2 pi / w`` for odd N, ``pi / w`` for even N."""
        return (2.0 if self.N % 2 else 1.0) * math.pi / self.omega

    @property
    def stated_order(self) -> int:
        """Order quoted in the literature for this model: N+1 (even N), N+2 (odd N)."""
        return self.N + 1 if self.N % 2 == 0 else self.N + 2

    def matrix(self, t):
        c = np.cos(self.omega * np.asarray(t, dtype=float)) ** self.N
        return _diag_matrices(t, c, c, np.ones_like(c))

    def _ept_table(self):
        c = expand_cos_power(self.N, self.omega)
        return _diag_ept(c, c, EptFunction.constant(1.0))

    def _rates(self, t):
        gamma = self.A * math.sqrt(self.N) * math.tan(self.omega * t)
        return pauli_generator(0.0, 0.0, gamma)


@dataclass(frozen=True, eq=False, repr=False)
class TwoSpinUnequal(Model):
    """Central qubit with two bath spins of couplings ``w1/2`` and ``w2/2``."""

    omega1: float = 1.0
    omega2: float = 2.0
    name = "two-spin"

    def __post_init__(self):
        _check_nonneg(omega1=self.omega1, omega2=self.omega2)

    @property
    def frequencies(self) -> tuple[float, float]:
        return (self.omega1, self.omega2)

    def with_frequencies(self, freqs) -> "TwoSpinUnequal":
        return TwoSpinUnequal(*freqs)

    def matrix(self, t):
        t = np.asarray(t, dtype=float)
        c = np.cos(self.omega1 * t) * np.cos(self.omega2 * t)
        return _diag_matrices(t, c, c, np.ones_like(c))

    def _ept_table(self):
        c = EptFunction.cos(self.omega1) * EptFunction.cos(self.omega2)
        return _diag_ept(c, c, EptFunction.constant(1.0))


@dataclass(frozen=True, eq=False, repr=False)
class DampedCosine(Model):
    """``diag(1, e^-gt cos wt, e^-gt cos wt, e^-gt)``."""

    gamma: float = 1.0
    omega: float = 1.0
    name = "damped-cosine"

    def __post_init__(self):
        _check_nonneg(gamma=self.gamma, omega=self.omega)

    def matrix(self, t):
        t = np.asarray(t, dtype=float)
        decay = np.exp(-self.gamma * t)
        c = decay * np.cos(self.omega * t)
        return _diag_matrices(t, c, c, decay)

    def _ept_table(self):
        decay = EptFunction.exp(-self.gamma)
        return _diag_ept(decay * EptFunction.cos(self.omega),
                         decay * EptFunction.cos(self.omega), decay)

    def _rates(self, t):
        g, w = self.gamma, self.omega
        return pauli_generator(g / 4.0, g / 4.0, (g + 2.0 * w * math.tan(w * t)) / 4.0)


@dataclass(frozen=True, eq=False, repr=False)
class Transcendental(Model):
    """Diagonal map whose zeros include roots of a transcendental equation.

    ``f_x = f_y = (2 + 4 e^-gt - 3 sin^2 wt)/6`` and ``f_z = (4 e^-gt - 1)/3``.
    """

    gamma: float = 1.0
    omega: float = 1.0
    name = "transcendental"

    def __post_init__(self):
        _check_nonneg(gamma=self.gamma, omega=self.omega)

    def matrix(self, t):
        t = np.asarray(t, dtype=float)
        decay = np.exp(-self.gamma * t)
        fxy = (2.0 + 4.0 * decay - 3.0 * np.sin(self.omega * t) ** 2) / 6.0
        fz = (4.0 * decay - 1.0) / 3.0
        return _diag_matrices(t, fxy, fxy, fz)

    def _ept_table(self):
        decay = EptFunction.exp(-self.gamma)
        sin = EptFunction.sin(self.omega)
        fxy = (2.0 + 4.0 * decay - 3.0 * sin * sin) / 6.0
        fz = (4.0 * decay - 1.0) / 3.0
        return _diag_ept(fxy, fxy, fz)

    def _rates(self, t):
        g, w = self.gamma, self.omega
        egt = math.exp(g * t)
        gxy = g / (4.0 - egt)
        gz = g / (egt - 4.0) + (4.0 * g + 3.0 * w * egt * math.sin(2 * w * t)) / (
            8.0 + egt * (1.0 + 3.0 * math.cos(2 * w * t))
        )
        return pauli_generator(gxy, gxy, gz)


@dataclass(frozen=True, eq=False, repr=False)
class ThreeChannel(Model):
    """Pauli-type map with zeros in all three diagonal entries.

    ``f_x = 1 - 2((1-e^-a1 t)/n1 + (1-e^-a2 t)/n2)``,
    ``f_y = 1 - 2((1-e^-a1 t)/n2 + (1-e^-a3 t)/n3)``,
    ``f_z = 1 - 2((1-e^-a2 t)/n2 + (1-e^-a3 t)/n3)``; requires
    ``1/n1 + 1/n2 + 1/n3 <= 1``.
    """

    a1: float = 1.0
    a2: float = 2.0
    a3: float = 3.0
    n1: float = 3.0
    n2: float = 3.0
    n3: float = 3.0
    name = "three-channel"

    def __post_init__(self):
        _check_nonneg(a1=self.a1, a2=self.a2, a3=self.a3)
        for key in ("n1", "n2", "n3"):
            if not getattr(self, key) > 0:
                raise ValueError(f"{key} must be positive")
        if 1 / self.n1 + 1 / self.n2 + 1 / self.n3 > 1 + 1e-12:
            raise ValueError("three-channel map requires 1/n1 + 1/n2 + 1/n3 <= 1")

    def _terms(self):
        # (rate, weight) pairs entering each diagonal entry
        return (
            ((self.a1, self.n1), (self.a2, self.n2)),
            ((self.a1, self.n2), (self.a3, self.n3)),
            ((self.a2, self.n2), (self.a3, self.n3)),
        )

    def _f(self, t, deriv=False):
        out = []
        for pair in self._terms():
            if deriv:
                out.append(-2.0 * sum(a * np.exp(-a * t) / n for a, n in pair))
            else:
                out.append(1.0 - 2.0 * sum((1.0 - np.exp(-a * t)) / n for a, n in pair))
        return out

    def matrix(self, t):
        t = np.asarray(t, dtype=float)
        return _diag_matrices(t, *self._f(t))

    def _ept_table(self):
        entries = []
        for pair in self._terms():
            f = EptFunction.constant(1.0)
            for a, n in pair:
                f = f - 2.0 * (1.0 - EptFunction.exp(-a)) / n
            entries.append(f)
        return _diag_ept(*entries)

    def _rates(self, t):
        fx, fy, fz = self._f(t)
        dx, dy, dz = self._f(t, deriv=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            lx, ly, lz = dx / fx, dy / fy, dz / fz
        gx = 0.25 * (lx - ly - lz)
        gy = 0.25 * (ly - lz - lx)
        gz = 0.25 * (lz - lx - ly)
        return pauli_generator(gx, gy, gz)


@dataclass(frozen=True, eq=False, repr=False)
class JaynesCummings(Model):
    """Resonant Jaynes-Cummings reduced map, ``f = cos(w t)``; non-unital."""

    omega: float = 1.0
    name = "jaynes-cummings"
    is_diagonal = False

    def __post_init__(self):
        _check_nonneg(omega=self.omega)

    def matrix(self, t):
        t = np.asarray(t, dtype=float)
        f = np.cos(self.omega * t)
        out = _diag_matrices(t, f, f, f**2)
        out[..., 3, 0] = f**2 - 1.0
        return out

    def _ept_table(self):
        f = EptFunction.cos(self.omega)
        table = _diag_ept(f, f, f * f)
        table[3][0] = f * f - 1.0
        return table

    def _rates(self, t):
        ratio = -self.omega * math.tan(self.omega * t)
        L = np.zeros((4, 4))
        L[1, 1] = L[2, 2] = ratio
        L[3, 0] = L[3, 3] = 2.0 * ratio
        return L


@dataclass(frozen=True, eq=False, repr=False)
class QuasiPeriodicThreeSpin(Model):
    """Coherence factor ``(cos t + cos(ratio t))/2``; ratio defaults to pi.

    Realized by two bath spins with couplings ``(1 + pi)/4`` and ``(1 - pi)/4``.
    """

    ratio: float = math.pi
    name = "quasi-periodic"

    def __post_init__(self):
        _check_nonneg(ratio=self.ratio)

    @property
    def frequencies(self) -> tuple[float, float]:
        return (1.0, self.ratio)

    def with_frequencies(self, freqs) -> "QuasiPeriodicThreeSpin":
        base, other = freqs
        if base != 1.0:
            raise ValueError("the first frequency of this model is fixed at 1")
        return QuasiPeriodicThreeSpin(ratio=other)

    def matrix(self, t):
        t = np.asarray(t, dtype=float)
        c = 0.5 * (np.cos(t) + np.cos(self.ratio * t))
        return _diag_matrices(t, c, c, np.ones_like(c))

    def _ept_table(self):
        c = 0.5 * (EptFunction.cos(1.0) + EptFunction.cos(self.ratio))
        return _diag_ept(c, c, EptFunction.constant(1.0))


CATALOG = {
    cls.name: cls
    for cls in (Identity, CentralSpin, TwoSpinUnequal, DampedCosine, Transcendental,
                ThreeChannel, JaynesCummings, QuasiPeriodicThreeSpin)
}


def make_model(name: str, **params) -> Model:
    """Build a catalog model from its name and (string or numeric) parameters."""
    try:
        cls = CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(CATALOG)}") from None
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, val in params.items():
        if key not in known:
            raise ValueError(f"model {name!r} has no parameter {key!r}")
        if isinstance(val, str):
            val = int(val) if known[key].type in (int, "int") else float(eval_number(val))
        kwargs[key] = val
    return cls(**kwargs)


_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log, "cos": math.cos,
          "sin": math.sin, "tan": math.tan}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def eval_number(text: str) -> float:
    """
    Parse a real number from text.

    Accepts plain floats and arithmetic expressions over ``pi``, ``e`` and the
    functions ``sqrt, exp, log, cos, sin, tan``, e.g. ``"2*pi"`` or
    ``"1/sqrt(2)"``.  Anything else raises ``ValueError``.
    """
    try:
        tree = ast.parse(str(text).strip().lower(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse number {text!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and type(node.value) in (int, float):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"cannot parse number {text!r}")

    try:
        value = float(ev(tree))
    except (ArithmeticError, ValueError) as exc:
        raise ValueError(f"cannot evaluate {text!r}: {exc}") from exc
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def map_at(model: Model, t: float) -> AffineQubitMap:
    return model.map_at(t)


def map_ept(model: Model):
    return model.ept()


def generator_closed_form(model: Model, t: float) -> GeneratorSample:
    """Closed-form first-order generator; raises ``UnsupportedError`` if none exists."""
    return model.generator(t)


# --- joint system-bath evolution for the central spin model -----------------

@dataclass(frozen=True, eq=False)
class JointState:
    """System (first factor) plus N bath spins, ``2**(N+1)`` square."""

    matrix: np.ndarray
    N: int
    t: float = field(default=0.0)

    def system(self) -> np.ndarray:
        d = 2**self.N
        return np.einsum("ajbj->ab", self.matrix.reshape(2, d, 2, d))

    def environment(self) -> np.ndarray:
        d = 2**self.N
        return np.einsum("iaib->ab", self.matrix.reshape(2, d, 2, d))


def _bath_magnetization(N: int) -> np.ndarray:
    idx = np.arange(2**N)
    bits = (idx[:, None] >> np.arange(N)[None, :]) & 1
    return (1 - 2 * bits).sum(axis=1).astype(float)


def central_spin_energies(N: int, A: float) -> np.ndarray:
    """Diagonal of ``H = sum_k (A/sqrt N) sz (x) sz_k``, system bit most significant."""
    mag = _bath_magnetization(N)
    coupling = A / math.sqrt(N)
    return np.concatenate([coupling * mag, -coupling * mag])


def central_spin_hamiltonian(N: int, A: float) -> np.ndarray:
    """Dense Hamiltonian assembled from Kronecker products."""
    sz = np.diag([1.0, -1.0])
    eye = np.eye(2)
    H = np.zeros((2 ** (N + 1),) * 2)
    for k in range(N):
        ops = [sz] + [sz if j == k else eye for j in range(N)]
        term = ops[0]
        for op in ops[1:]:
            term = np.kron(term, op)
        H += term
    return (A / math.sqrt(N)) * H


def initial_joint_state(N: int, rho0) -> np.ndarray:
    rho0 = validate_density(rho0)
    return np.kron(rho0, np.eye(2**N) / 2**N)


def central_spin_joint_evolution(N: int, A: float, rho0, t: float,
                                 method: str = "diagonal") -> JointState:
    """``exp(-iHt) (rho0 (x) I/2**N) exp(iHt)`` for the central spin model.

    ``method='diagonal'`` multiplies each matrix element by its phase
    ``exp(-i (E_a - E_b) t)``; ``method='dense'`` uses a matrix exponential
    and is limited to N <= 6.
    """
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    if N > MAX_JOINT_SPINS:
        raise ResourceError(f"joint evolution supports N <= {MAX_JOINT_SPINS}, got {N}")
    if t < 0:
        raise ValueError("t must be nonnegative")
    eta0 = initial_joint_state(N, rho0)
    if method == "diagonal":
        energies = central_spin_energies(N, A)
        phase = np.exp(-1j * energies * t)
        eta = phase[:, None] * eta0 * phase.conj()[None, :]
    elif method == "dense":
        if N > MAX_DENSE_SPINS:
            raise ResourceError(f"dense evolution supports N <= {MAX_DENSE_SPINS}, got {N}")
        U = scipy.linalg.expm(-1j * central_spin_hamiltonian(N, A) * t)
        eta = U @ eta0 @ U.conj().T
    else:
        raise ValueError(f"unknown method {method!r}")
    return JointState(eta, int(N), float(t))
