"""
Exponential-polynomial-trigonometric (EPT) functions and their annihilators.

An EPT function is a finite sum ``sum_j c_j t**k_j exp(lam_j t)`` with complex
``c_j`` and ``lam_j``.  Every entry of the catalog dynamical maps is of this
form, so derivatives of the map are exact and the entries are annihilated by
constant-coefficient differential operators ``sum_n p_n D**n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Number

import numpy as np
from numpy.polynomial import polynomial as P

RATE_TOL = 1e-10
_COEF_REL_TOL = 1e-13


def _same_rate(a: complex, b: complex, tol: float = RATE_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def _canonical(terms):
    merged: list[list] = []
    for c, k, lam in terms:
        c, k, lam = complex(c), int(k), complex(lam)
        if k < 0:
            raise ValueError("powers must be nonnegative")
        for entry in merged:
            if entry[1] == k and _same_rate(entry[2], lam):
                entry[0] += c
                break
        else:
            merged.append([c, k, lam])
    if not merged:
        return ()
    scale = max(abs(e[0]) for e in merged)
    kept = [
        (e[0], e[1], e[2])
        for e in merged
        if abs(e[0]) > _COEF_REL_TOL * scale and e[0] != 0
    ]
    kept.sort(key=lambda e: (e[1], e[2].real, e[2].imag))
    return tuple(kept)


class EptFunction:
    """Canonical sum of ``c t**k exp(lam t)`` terms.

    Terms are merged when they share the power and their rates agree to a
    relative ``1e-10``; zero coefficients are dropped.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        self.terms = _canonical(terms)

    @classmethod
    def constant(cls, value) -> "EptFunction":
        return cls([(value, 0, 0.0)])

    @classmethod
    def exp(cls, rate, coef=1.0) -> "EptFunction":
        return cls([(coef, 0, rate)])

    @classmethod
    def cos(cls, omega) -> "EptFunction":
        return cls([(0.5, 0, 1j * omega), (0.5, 0, -1j * omega)])

    @classmethod
    def sin(cls, omega) -> "EptFunction":
        return cls([(-0.5j, 0, 1j * omega), (0.5j, 0, -1j * omega)])

    @classmethod
    def zero(cls) -> "EptFunction":
        return cls()

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_real(self) -> bool:
        """True when every term has its complex-conjugate partner."""
        for c, k, lam in self.terms:
            partner = [
                c2 for c2, k2, lam2 in self.terms
                if k2 == k and _same_rate(lam2, lam.conjugate())
            ]
            if not partner:
                return False
            if abs(partner[0] - c.conjugate()) > 1e-12 * max(1.0, abs(c)):
                return False
        return True

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for c, k, lam in self.terms:
            term = c * np.exp(lam * t)
            if k:
                term = term * t**k
            out = out + term
        if self.is_real:
            out = out.real
        return out if out.ndim else out[()]

    def derivative(self, n: int = 1) -> "EptFunction":
        f = self
        for _ in range(n):
            terms = []
            for c, k, lam in f.terms:
                if k:
                    terms.append((c * k, k - 1, lam))
                terms.append((c * lam, k, lam))
            f = EptFunction(terms)
        return f

    def spectrum(self) -> list[tuple[complex, int]]:
        """``(lam, multiplicity)`` pairs; multiplicity is the highest power + 1."""
        spec: list[list] = []
        for _, k, lam in self.terms:
            for entry in spec:
                if _same_rate(entry[0], lam):
                    entry[1] = max(entry[1], k + 1)
                    break
            else:
                spec.append([lam, k + 1])
        return [(lam, m) for lam, m in spec]

    def _coerce(self, other):
        if isinstance(other, EptFunction):
            return other
        if isinstance(other, Number):
            return EptFunction.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return EptFunction(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return EptFunction([(-c, k, lam) for c, k, lam in self.terms])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return EptFunction([(c * other, k, lam) for c, k, lam in self.terms])
        if not isinstance(other, EptFunction):
            return NotImplemented
        return EptFunction(
            (c1 * c2, k1 + k2, lam1 + lam2)
            for c1, k1, lam1 in self.terms
            for c2, k2, lam2 in other.terms
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Number):
            return NotImplemented
        return self * (1.0 / other)

    def __pow__(self, n: int):
        if int(n) != n or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = EptFunction.constant(1.0)
        for _ in range(int(n)):
            out = out * self
        return out

    def __repr__(self):
        parts = []
        for c, k, lam in self.terms:
            s = f"({c:.6g})"
            if k:
                s += f"*t^{k}"
            if lam != 0:
                s += f"*exp(({lam:.6g})t)"
            parts.append(s)
        return "EptFunction(" + (" + ".join(parts) or "0") + ")"


def differentiate(f: EptFunction, n: int = 1) -> EptFunction:
    return f.derivative(n)


def expand_cos_power(N: int, omega: float) -> EptFunction:
    """Binomial expansion ``cos(w t)**N = 2**-N sum_j C(N, j) exp(i (N - 2j) w t)``."""
    if N < 1 or int(N) != N:
        raise ValueError("N must be a positive integer")
    scale = 2.0**-N
    return EptFunction(
        (scale * math.comb(N, j), 0, 1j * (N - 2 * j) * omega) for j in range(N + 1)
    )


def annihilator_factors(fs) -> list[np.ndarray]:
    """Irreducible real factors (ascending coefficients) of the minimal annihilator.

    Each real rate ``a`` contributes ``D - a`` and each conjugate pair
    ``a +- ib`` contributes ``D**2 - 2a D + a**2 + b**2``; a factor appears as
    many times as its multiplicity.
    """
    fs = list(fs)
    if not fs:
        raise ValueError("nothing to annihilate")
    spec: list[list] = []
    for f in fs:
        for lam, mult in f.spectrum():
            for entry in spec:
                if _same_rate(entry[0], lam):
                    entry[1] = max(entry[1], mult)
                    break
            else:
                spec.append([lam, mult])
    if not spec:
        raise ValueError("nothing to annihilate: all functions are zero")

    factors = []
    paired = set()
    for idx, (lam, mult) in enumerate(spec):
        if idx in paired:
            continue
        if abs(lam.imag) <= RATE_TOL * max(1.0, abs(lam)):
            factors.extend([np.array([-lam.real, 1.0])] * mult)
            continue
        conj = [
            j for j, (lam2, _) in enumerate(spec)
            if j != idx and j not in paired and _same_rate(lam2, lam.conjugate())
        ]
        if not conj:
            raise ValueError(f"rate {lam} has no conjugate partner; function is not real")
        j = conj[0]
        paired.add(j)
        m = max(mult, spec[j][1])
        quad = np.array([lam.real**2 + lam.imag**2, -2.0 * lam.real, 1.0])
        factors.extend([quad] * m)
    return factors


def polynomial_from_factors(factors) -> np.ndarray:
    poly = np.array([1.0])
    for fac in factors:
        poly = P.polymul(poly, fac)
    return poly


def annihilator(fs) -> np.ndarray:
    """Monic minimal annihilator ``(p_0, ..., p_M)`` of a list of EPT functions."""
    return polynomial_from_factors(annihilator_factors(fs))


def apply_operator(p, f: EptFunction) -> EptFunction:
    """``sum_n p_n f^(n)`` as an EPT function."""
    out = EptFunction.zero()
    deriv = f
    for n, pn in enumerate(p):
        if n:
            deriv = deriv.derivative()
        if pn:
            out = out + deriv * float(pn)
    return out


def operator_residual(p, f: EptFunction, t) -> np.ndarray:
    """Pointwise ``sum_n p_n f^(n)(t)`` evaluated term by term."""
    t = np.asarray(t, dtype=float)
    total = np.zeros(t.shape)
    deriv = f
    for n, pn in enumerate(p):
        if n:
            deriv = deriv.derivative()
        if pn:
            total = total + float(pn) * np.real(deriv(t))
    return total


@dataclass(frozen=True, eq=False)
class OdeSpec:
    """Per-component monic coefficient vectors of ``sum_n p_n rho^(n) = 0``.

    ``coefficients[i]`` belongs to affine component ``i`` of ``(1, x, y, z)``.
    """

    coefficients: tuple

    def __post_init__(self):
        coeffs = []
        for p in self.coefficients:
            p = np.array(p, dtype=float)
            if p.ndim != 1 or len(p) < 2:
                raise ValueError("each component needs order >= 1")
            if p[-1] != 1.0:
                if p[-1] == 0:
                    raise ValueError("leading coefficient must be nonzero")
                p = p / p[-1]
            p.setflags(write=False)
            coeffs.append(p)
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(len(p) - 1 for p in self.coefficients)

    @property
    def order(self) -> int:
        return max(self.orders)

    def __getitem__(self, i) -> np.ndarray:
        return self.coefficients[i]

    def __len__(self):
        return len(self.coefficients)

    def equation(self, i: int, fmt: str = "{:.12g}") -> str:
        """Readable form, e.g. ``4*d1 + d3 = 0``."""
        parts = []
        for n, pn in enumerate(self.coefficients[i]):
            if pn == 0:
                continue
            coef = "" if pn == 1 else fmt.format(pn) + "*"
            parts.append(f"{coef}d{n}")
        return " + ".join(parts) + " = 0"


def spin_coefficient_matrix(m: int, omega: float, parity: str) -> np.ndarray:
    """Odd-derivative coefficient matrix of ``cos**N(w t)``.

    For ``parity='even'`` (N = 2m) the ``m x m`` matrix maps
    ``sin(2 j w t) rho0`` to the odd derivatives ``rho^(2i-1)``:
    ``a_ij = (-1)**i C(2m, m+j) (2 j w)**(2i-1) / 2**(2m-1)``.

    For ``parity='odd'`` (N = 2m + 1) the ``(m+1) x (m+1)`` matrix acts on
    ``sin((2j - 1) w t) rho0``:
    ``a_ij = (-1)**i C(2m+1, m+j) ((2j - 1) w)**(2i-1) / 2**(2m)``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if parity == "even":
        size, norm = m, 2.0 ** (2 * m - 1)
        binom = lambda j: math.comb(2 * m, m + j)
        freq = lambda j: 2 * j * omega
    elif parity == "odd":
        size, norm = m + 1, 2.0 ** (2 * m)
        binom = lambda j: math.comb(2 * m + 1, m + j)
        freq = lambda j: (2 * j - 1) * omega
    else:
        raise ValueError("parity must be 'even' or 'odd'")
    a = np.empty((size, size))
    for i in range(1, size + 1):
        for j in range(1, size + 1):
            a[i - 1, j - 1] = (-1) ** i * binom(j) * freq(j) ** (2 * i - 1) / norm
    return a
