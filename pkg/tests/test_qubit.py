import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singularqme.models import CATALOG, CentralSpin, DampedCosine, JaynesCummings
from singularqme.qubit import (AffineQubitMap, BlochState, PAULIS, apply_map, binary_entropy,
                               bloch_from_density, choi_matrix, choi_min_eigenvalue,
                               density_from_bloch, entropy_of_density, trace_distance,
                               trace_distance_matrix, validate_density, von_neumann_entropy)


def random_state(rng, pure=False):
    v = rng.standard_normal(3)
    v /= np.linalg.norm(v)
    if not pure:
        v *= rng.uniform() ** (1 / 3)
    return BlochState.from_xyz(v)


def test_bloch_state_first_entry_exact():
    with pytest.raises(ValueError):
        BlochState(np.array([1.0 + 1e-15, 0, 0, 0]))
    with pytest.raises(ValueError):
        BlochState(np.zeros(3))
    s = BlochState.from_xyz(0.1, 0.2, 0.3)
    assert s.r[0] == 1.0
    assert s.is_physical()
    assert not BlochState.from_xyz(1.0, 1e-5, 0).is_physical()


def test_affine_map_first_row_enforced():
    m = np.eye(4)
    m[0, 1] = 1e-14
    with pytest.raises(ValueError):
        AffineQubitMap(m)
    T = np.diag([0.5, 0.5, 1.0])
    E = AffineQubitMap.from_parts(T, (0, 0, 0.1))
    assert np.allclose(E.T, T)
    assert np.allclose(E.s, [0, 0, 0.1])
    assert not E.is_unital


def test_apply_identity_and_central_spin():
    s = BlochState.from_xyz(0.3, -0.2, 0.5)
    out = apply_map(AffineQubitMap.identity(), s)
    assert np.array_equal(out.r, s.r)
    t = 0.8
    c = np.cos(t) ** 3
    out = CentralSpin(N=3, A=np.sqrt(3) / 2).map_at(t) @ s
    assert np.allclose(out.r, [1, c * 0.3, -c * 0.2, 0.5], atol=1e-14)


def test_apply_jaynes_cummings_at_zero_of_f():
    m = JaynesCummings(omega=1.0)
    out = m.map_at(np.pi / 2) @ BlochState.from_xyz(0.3, 0.4, 0.5)
    assert np.allclose(out.r, [1, 0, 0, -1], atol=1e-15)


def test_trace_distance_basic():
    zero, one = BlochState.from_xyz(0, 0, 1), BlochState.from_xyz(0, 0, -1)
    assert trace_distance(zero, one) == pytest.approx(1.0)
    assert trace_distance(zero, zero) == 0.0
    m = CentralSpin(N=1, A=0.5)
    plus, minus = BlochState.from_xyz(1, 0, 0), BlochState.from_xyz(-1, 0, 0)
    for t in (0.3, 1.2, 2.9):
        E = m.map_at(t)
        assert trace_distance(E @ plus, E @ minus) == pytest.approx(abs(np.cos(t)), abs=1e-14)


def test_trace_distance_matches_matrix_form():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b = random_state(rng), random_state(rng)
        assert trace_distance(a, b) == pytest.approx(trace_distance_matrix(a.density(), b.density()), abs=1e-12)


def test_density_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = random_state(rng)
        rho = s.density()
        validate_density(rho)
        assert np.allclose(density_from_bloch(bloch_from_density(rho)), rho, atol=1e-12)
        assert np.allclose(bloch_from_density(rho), s.r, atol=1e-12)


def test_validate_density_rejects():
    with pytest.raises(ValueError):
        validate_density(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        validate_density(np.eye(2))
    with pytest.raises(ValueError):
        validate_density(np.array([[1.5, 0], [0, -0.5]]))


def _choi_from_kraus(kraus):
    # independent construction: (I (x) E)(|phi+><phi+|) with |phi+> = (|00> + |11>)/sqrt 2
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1 / np.sqrt(2)
    P = np.outer(phi, phi.conj())
    return sum(np.kron(np.eye(2), K) @ P @ np.kron(np.eye(2), K).conj().T for K in kraus)


def test_choi_values():
    assert choi_min_eigenvalue(AffineQubitMap.identity()) == pytest.approx(0.0, abs=1e-14)
    depol = AffineQubitMap.from_parts(np.zeros((3, 3)))
    assert choi_min_eigenvalue(depol) == pytest.approx(0.25, abs=1e-14)
    assert choi_min_eigenvalue(DampedCosine(1.0, 1.0).map_at(1.0)) >= -1e-10


def test_choi_matches_kraus_oracle():
    # amplitude damping with decay p
    p = 0.3
    K0 = np.array([[1, 0], [0, np.sqrt(1 - p)]])
    K1 = np.array([[0, np.sqrt(p)], [0, 0]])
    # its affine form: x,y scale sqrt(1-p), z -> (1-p) z + p
    E = AffineQubitMap.from_parts(np.diag([np.sqrt(1 - p), np.sqrt(1 - p), 1 - p]), (0, 0, p))
    assert np.allclose(choi_matrix(E), _choi_from_kraus([K0, K1]), atol=1e-14)
    # transpose map is positive but not CP
    transpose = AffineQubitMap.from_parts(np.diag([1.0, -1.0, 1.0]))
    assert choi_min_eigenvalue(transpose) == pytest.approx(-0.5)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_maps_cptp(name):
    model = CATALOG[name]()
    for t in np.linspace(0, 4 * model.characteristic_time(), 200):
        assert choi_min_eigenvalue(model.map_at(t)) >= -1e-10


def test_entropy_values():
    assert von_neumann_entropy(BlochState.from_xyz(0, 0, 1)) == 0.0
    assert von_neumann_entropy(BlochState.from_xyz(0, 0, 0)) == pytest.approx(1.0)
    oracle = -(0.75 * np.log2(0.75) + 0.25 * np.log2(0.25))
    assert von_neumann_entropy(BlochState.from_xyz(0.5, 0, 0)) == pytest.approx(oracle, abs=1e-14)
    assert oracle == pytest.approx(0.81128, abs=1e-5)
    assert binary_entropy(0.0) == 0.0
    assert entropy_of_density(np.eye(4) / 4) == pytest.approx(2.0)


unit = st.floats(-1, 1, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(sorted(CATALOG)), t=st.floats(0, 20),
       a=st.tuples(unit, unit, unit), b=st.tuples(unit, unit, unit))
def test_contractivity(name, t, a, b):
    def clip(v):
        v = np.array(v)
        n = np.linalg.norm(v)
        return v / n if n > 1 else v
    model = CATALOG[name]()
    sa, sb = BlochState.from_xyz(clip(a)), BlochState.from_xyz(clip(b))
    E = model.map_at(t)
    assert trace_distance(E @ sa, E @ sb) <= trace_distance(sa, sb) + 1e-10


def test_pauli_constants():
    for p in PAULIS:
        assert np.allclose(p @ p, np.eye(2))
