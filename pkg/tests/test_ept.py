import math

import numpy as np
import pytest

from singularqme.ept import (EptFunction, OdeSpec, annihilator, annihilator_factors,
                             apply_operator, differentiate, expand_cos_power, operator_residual,
                             polynomial_from_factors, spin_coefficient_matrix)
from singularqme.generators import derive_ode
from singularqme.models import CATALOG, ThreeChannel, Transcendental


def test_canonical_merging_and_zero_drop():
    f = EptFunction([(1.0, 0, -1.0), (2.0, 0, -1.0 + 1e-13), (0.0, 1, 2.0)])
    assert len(f.terms) == 1
    assert f.terms[0][0] == pytest.approx(3.0)
    assert (EptFunction.exp(-1.0) - EptFunction.exp(-1.0)).is_zero


def test_real_flag():
    assert EptFunction.cos(2.0).is_real
    assert not EptFunction([(1.0, 0, 1j)]).is_real
    t = np.linspace(0, 5, 11)
    assert np.isrealobj(EptFunction.sin(1.5)(t))


def test_differentiate_examples():
    assert differentiate(EptFunction.constant(1.0)).is_zero
    t = np.linspace(-3, 3, 50)
    w = 1.7
    assert np.allclose(differentiate(EptFunction.cos(w))(t), -w * np.sin(w * t), atol=1e-13)
    f = EptFunction.exp(-1.0) * EptFunction.cos(1.0)
    df = f.derivative()
    assert df(0.0) == pytest.approx(-1.0)
    rng = np.random.default_rng(1)
    for s in rng.uniform(0, 4, 10):
        h = 1e-5
        fd = (f(s + h) - f(s - h)) / (2 * h)
        assert df(s) == pytest.approx(fd, abs=1e-8)
        assert df(s) == pytest.approx(-np.exp(-s) * (np.cos(s) + np.sin(s)), abs=1e-13)


def test_polynomial_terms_derivative():
    f = EptFunction([(1.0, 2, -0.5)])  # t^2 e^{-t/2}
    t = np.linspace(0, 3, 7)
    expected = (2 * t - 0.5 * t**2) * np.exp(-0.5 * t)
    assert np.allclose(f.derivative()(t), expected, atol=1e-14)


def test_expand_cos_power():
    f1 = expand_cos_power(1, 2.0)
    assert {(round(c.real, 12), lam) for c, _, lam in f1.terms} == {(0.5, 2j), (0.5, -2j)}
    t = np.random.default_rng(2).uniform(-10, 10, 100)
    assert np.allclose(expand_cos_power(2, 1.0)(t), 0.5 + 0.5 * np.cos(2 * t), atol=1e-12)
    assert np.allclose(expand_cos_power(3, 1.0)(t), 0.75 * np.cos(t) + 0.25 * np.cos(3 * t), atol=1e-12)
    for N in range(1, 13):
        assert np.max(np.abs(expand_cos_power(N, 0.7)(t) - np.cos(0.7 * t) ** N)) < 1e-12
    with pytest.raises(ValueError):
        expand_cos_power(0, 1.0)


def test_annihilator_examples():
    assert np.allclose(annihilator([expand_cos_power(2, 1.0)]), [0, 4, 0, 1], atol=1e-12)
    w1, w2 = 1.3, 0.4
    p = annihilator([EptFunction.cos(w1) * EptFunction.cos(w2)])
    assert np.allclose(p, [(w1**2 - w2**2) ** 2, 0, 2 * (w1**2 + w2**2), 0, 1], atol=1e-12)
    a1, a2, n1, n2 = 1.0, 2.5, 5.0, 7.0
    f = 1.0 - 2.0 * ((1.0 - EptFunction.exp(-a1)) / n1 + (1.0 - EptFunction.exp(-a2)) / n2)
    assert np.allclose(annihilator([f]), [0, a1 * a2, a1 + a2, 1], atol=1e-12)
    with pytest.raises(ValueError, match="nothing to annihilate"):
        annihilator([])


def test_annihilator_repeated_roots():
    f = EptFunction([(1.0, 1, 1j), (1.0, 1, -1j)])  # 2 t cos t
    p = annihilator([f])
    assert np.allclose(p, [1, 0, 2, 0, 1])  # (D^2 + 1)^2


def test_annihilator_roots_cover_spectrum():
    for name, cls in CATALOG.items():
        model = cls()
        for row in model.ept():
            entries = [f for f in row if not f.is_zero]
            p = annihilator(entries)
            for f in entries:
                for lam, _ in f.spectrum():
                    assert abs(np.polynomial.polynomial.polyval(lam, p)) < 1e-10 * max(1, abs(lam)) ** len(p)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_annihilation_residual_and_minimality(name):
    model = CATALOG[name]()
    t = np.linspace(0, 3 * model.characteristic_time(), 500)
    for row in model.ept():
        entries = [f for f in row if not f.is_zero]
        factors = annihilator_factors(entries)
        p = polynomial_from_factors(factors)
        for f in entries:
            scale = np.maximum(1.0, np.abs(f(t)))
            assert np.all(np.abs(operator_residual(p, f, t)) < 1e-8 * scale)
        for k in range(len(factors)):
            reduced = polynomial_from_factors(factors[:k] + factors[k + 1:])
            worst = max(np.max(np.abs(operator_residual(reduced, f, t))) for f in entries)
            assert worst > 1e-4


def test_paper_operators_annihilate():
    f = EptFunction.exp(-1.0) * EptFunction.cos(1.0)
    assert np.max(np.abs(apply_operator([4, 0, 0, 0, 1], f)(np.linspace(0, 5, 50)))) < 1e-12
    t = np.linspace(0, 10, 500)
    for row in Transcendental().ept()[1:]:
        for f in row:
            if not f.is_zero:
                assert np.max(np.abs(operator_residual([0, -4, 0, 3, 0, 1], f, t))) < 1e-8


def test_ode_spec():
    spec = OdeSpec(([0, 1], [0, 8, 0, 2]))
    assert np.allclose(spec[1], [0, 4, 0, 1])
    assert spec.orders == (1, 3)
    assert spec.order == 3
    assert spec.equation(1) == "4*d1 + d3 = 0"
    with pytest.raises(ValueError):
        OdeSpec(([1.0],))


def test_spin_coefficient_matrix_values():
    assert np.allclose(spin_coefficient_matrix(1, 1.0, "even"), [[-1.0]])
    odd = spin_coefficient_matrix(1, 1.0, "odd")
    assert np.allclose(odd, [[-3 / 4, -3 / 4], [3 / 4, 27 / 4]])
    for m in range(1, 9):
        for parity in ("even", "odd"):
            assert abs(np.linalg.det(spin_coefficient_matrix(m, 1.0, parity))) > 0
    with pytest.raises(ValueError):
        spin_coefficient_matrix(1, 1.0, "both")


def test_spin_coefficient_round_trip():
    m, w, t = 3, 2.0, 0.3
    A = spin_coefficient_matrix(m, w, "even")
    assert abs(np.linalg.det(A)) > 1e-12
    f = expand_cos_power(2 * m, w)
    odd = np.array([f.derivative(2 * i - 1)(t) for i in range(1, m + 1)])
    v = np.linalg.solve(A, odd)
    assert np.allclose(v, [math.sin(2 * j * w * t) for j in range(1, m + 1)], atol=1e-9)


def test_spin_coefficient_round_trip_odd():
    m, w, t = 2, 0.8, 1.1
    A = spin_coefficient_matrix(m, w, "odd")
    f = expand_cos_power(2 * m + 1, w)
    odd = np.array([f.derivative(2 * i - 1)(t) for i in range(1, m + 2)])
    v = np.linalg.solve(A, odd)
    assert np.allclose(v, [math.sin((2 * j - 1) * w * t) for j in range(1, m + 2)], atol=1e-9)


def test_three_channel_degenerate_constant():
    # with 2/n1 + 2/n2 = 1 the constant term of f_x cancels and the minimal order drops
    m = ThreeChannel(n1=4, n2=4, n3=4)
    assert derive_ode(m).orders == (1, 2, 2, 2)
