import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from warpmeas.deformation import (
    GeneratorPair,
    check_theta,
    coupling_unitary,
    coupling_unitary_series,
    deform_all,
    even_packet_probe,
    evolve_heisenberg,
    fiber_integral,
    grid_canonical_pair,
    growth_exponent,
    lemma_factorization,
    same_space_deformation,
    symplectic_matrix,
    warped_convolution,
)
from warpmeas.errors import CapacityError, ContractViolation, DimensionError
from warpmeas.linalg import random_hermitian, random_unitary
from warpmeas.spectral import spectral_measure
from warpmeas.suites import commuting_triple, random_generator_pair


def _expm_coupling(x, y, kappa):
    return scipy.linalg.expm(-1j * kappa * np.kron(x, y))


def test_coupling_unitary_matches_expm(rng):
    x, y = random_hermitian(rng, 3), random_hermitian(rng, 4)
    w = coupling_unitary(GeneratorPair(x, y, 0.7))
    np.testing.assert_allclose(w, _expm_coupling(x, y, 0.7), atol=1e-11)


def test_lemma_factorization_matches_expm(rng):
    x, y = random_hermitian(rng, 4), random_hermitian(rng, 5)
    got = lemma_factorization(x, spectral_measure(y))
    np.testing.assert_allclose(got, _expm_coupling(x, y, 1.0), atol=1e-11)


def test_lemma_with_degenerate_probe_generator(rng):
    u = random_unitary(rng, 4)
    y = (u * np.array([1.0, 1.0, -2.0, -2.0])) @ u.conj().T
    x = random_hermitian(rng, 3)
    np.testing.assert_allclose(
        lemma_factorization(x, spectral_measure(y)), _expm_coupling(x, y, 1.0), atol=1e-11
    )


def test_power_series(rng):
    x, y = 0.3 * random_hermitian(rng, 3), 0.3 * random_hermitian(rng, 3)
    np.testing.assert_allclose(coupling_unitary_series(x, y, 1.0, 40), _expm_coupling(x, y, 1.0), atol=1e-12)


@given(st.integers(2, 6), st.integers(2, 6), st.floats(-2, 2), st.integers(0, 2**32 - 1))
def test_three_forms_agree(dh, dk, kappa, seed):
    rng = np.random.default_rng(seed)
    g = random_generator_pair(rng, dh, dk, 1, kappa)
    a = random_hermitian(rng, dh)
    res = deform_all(a, g)
    oracle = _expm_coupling(g.xs[0], g.ys[0], kappa)
    expected = oracle.conj().T @ np.kron(a, np.eye(dk)) @ oracle
    bound = 1e-9 * (1 + np.linalg.norm(a))
    assert np.linalg.norm(res.direct - expected) <= bound
    assert max(res.pairwise_distances.values()) <= bound


def test_commuting_families(rng):
    g = random_generator_pair(rng, 4, 3, 2, 1.3)
    a = random_hermitian(rng, 4)
    res = deform_all(a, g)
    assert max(res.pairwise_distances.values()) <= 1e-9 * (1 + np.linalg.norm(a))


def test_orientation_matters(rng):
    g = random_generator_pair(rng, 3, 3, 1, 1.0)
    a = random_hermitian(rng, 3)
    b = np.kron(a, np.eye(3))
    direct = evolve_heisenberg(a, g)
    flipped = warped_convolution(b, g, theta=-symplectic_matrix(1))
    assert np.linalg.norm(flipped - direct) > 1e-3


def test_zero_coupling_is_identity(rng):
    g = random_generator_pair(rng, 3, 2, 1, 0.0)
    a = random_hermitian(rng, 3)
    np.testing.assert_allclose(evolve_heisenberg(a, g), np.kron(a, np.eye(2)), atol=1e-13)


def test_fiber_integral_tensor_variant(rng):
    x, y = random_hermitian(rng, 3), random_hermitian(rng, 4)
    ey = spectral_measure(y)
    b = ey.function(lambda v: np.cos(v))  # commutes with Y
    a = random_hermitian(rng, 3)
    w = _expm_coupling(x, y, 0.8)
    expected = w.conj().T @ np.kron(a, b) @ w
    np.testing.assert_allclose(fiber_integral(a, x, ey, 0.8, b=b), expected, atol=1e-11)


def test_generator_validation(rng):
    with pytest.raises(ContractViolation):
        GeneratorPair(random_hermitian(rng, 2) + 1j * np.eye(2), random_hermitian(rng, 2))
    with pytest.raises(ContractViolation):
        GeneratorPair([random_hermitian(rng, 3)] * 2, [random_hermitian(rng, 3), random_hermitian(rng, 3)])
    with pytest.raises(ContractViolation):
        GeneratorPair([random_hermitian(rng, 3)], [])


def test_theta_validation():
    with pytest.raises(ContractViolation):
        check_theta(np.eye(2), 1)
    with pytest.raises((ContractViolation, DimensionError)):
        check_theta(symplectic_matrix(2), 1)


def test_capacity(rng):
    g = random_generator_pair(rng, 8, 8, 1, 1.0)
    with pytest.raises(CapacityError):
        deform_all(random_hermitian(rng, 8), g, max_dim=32)


def test_same_space_variant(rng):
    for dim in (2, 4, 6):
        a, x, y = commuting_triple(rng, dim)
        h = x @ y
        u = scipy.linalg.expm(1j * h)
        np.testing.assert_allclose(same_space_deformation(a, x, y), u @ a @ u.conj().T, atol=1e-10)


def test_same_space_requires_commutation(rng):
    x, y = np.diag([1.0, 2.0]), np.diag([0.0, 1.0])
    flip = np.array([[0, 1], [1, 0]], dtype=complex)
    with pytest.raises(ContractViolation, match=r"\[Y,a\]"):
        same_space_deformation(flip, x, y)
    with pytest.raises(ContractViolation, match=r"\[X,Y\]"):
        same_space_deformation(np.eye(2), x, flip)


def test_grid_pair_differentiates():
    q, p = grid_canonical_pair(128, 20.0)
    grid = np.diag(q).real
    g = np.exp(-grid**2)
    np.testing.assert_allclose(p @ g, -1j * (-2 * grid * g), atol=1e-10)
    with pytest.raises(ContractViolation):
        grid_canonical_pair(7, 1.0)


def test_growth_exponents():
    q, p = grid_canonical_pair(512, 96.0)
    grid = np.diag(q).real
    probes = [even_packet_probe(grid, np.sqrt(8.0), 0.8, c) for c in (0.0, 3.0)]
    ys = np.geomspace(0.12, 12.0, 32)
    for k in (1, 2, 3):
        fit = growth_exponent(np.linalg.matrix_power(p, k), q, probes, ys)
        assert abs(fit.exponent - k) <= 0.1
    bounded = growth_exponent(np.eye(512), q, probes, ys)
    assert abs(bounded.exponent) < 1e-10
    with pytest.raises(ContractViolation):
        growth_exponent(p, q, probes, ys[:3])
