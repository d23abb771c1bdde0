import numpy as np
import pytest

from warpmeas.deformation import grid_canonical_pair
from warpmeas.errors import ContractViolation
from warpmeas.linalg import random_density, random_hermitian, random_unitary
from warpmeas.measurement import (
    MeasurementScheme,
    check_probability_reproducibility,
    clock_operator,
    coupled_scheme,
    cyclic_inverse_shift,
    cyclic_pointer_scheme,
    degenerate_commuting_pointer_check,
    dual_instrument_apply,
    instrument_apply,
    measured_observable,
    measured_observable_convolution,
    pointer_distribution,
    pointer_shift_expectation,
    shift_generator,
)
from warpmeas.spectral import Povm, is_pvm, povm_validate, spectral_measure
from warpmeas.suites import instrument_axiom_defects, random_probe_diagonal


def test_shift_generator_is_cyclic_shift():
    n = 5
    y = shift_generator(n)
    u = np.linalg.eigh(y)
    assert np.allclose(np.sort(u[0]), 2 * np.pi * np.arange(n) / n)
    shift = u[1] @ np.diag(np.exp(-1j * u[0])) @ u[1].conj().T
    np.testing.assert_allclose(shift, np.roll(np.eye(n), 1, axis=0), atol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 7])
def test_shift_covariance(n):
    y, z = shift_generator(n), clock_operator(n)
    ez = spectral_measure(z)
    vals, vecs = np.linalg.eigh(y)
    for x in range(n):
        u = (vecs * np.exp(1j * x * vals)) @ vecs.conj().T
        for j, proj in enumerate(ez.projections):
            np.testing.assert_allclose(u @ proj @ u.conj().T, ez.projections[(j - x) % n], atol=1e-12)


def test_cyclic_point_probe_measures_x_exactly(rng):
    s = cyclic_pointer_scheme(4, [0, 1, 2, 3], 1)
    povm = measured_observable(s)
    ex = Povm.from_spectral_measure(spectral_measure(np.diag([0, 1, 2, 3.0])), labeler=lambda v: int(round(v)))
    for lab in range(4):
        np.testing.assert_allclose(povm[lab], ex[lab], atol=1e-12)
    assert is_pvm(povm)
    states = [random_density(rng, 4) for _ in range(20)]
    assert check_probability_reproducibility(s, ex, states).passed


def test_rotated_x_basis(rng):
    u = random_unitary(rng, 3)
    s = cyclic_pointer_scheme(3, [0, 1, 2], 1, x_basis=u)
    povm = measured_observable(s)
    for lab in range(3):
        v = u[:, lab : lab + 1]
        np.testing.assert_allclose(povm[lab], v @ v.conj().T, atol=1e-12)


def test_zero_coupling_gives_scalar_effects():
    probe = np.diag([0.5, 0.25, 0.25]).astype(complex)
    s = cyclic_pointer_scheme(3, [0, 1, 2], 0, probe)
    np.testing.assert_allclose(s.w, np.eye(9), atol=1e-14)
    povm = measured_observable(s)
    for lab, w in zip(range(3), (0.5, 0.25, 0.25)):
        np.testing.assert_allclose(povm[lab], w * np.eye(3), atol=1e-12)


def test_mixed_probe_is_uniform():
    s = cyclic_pointer_scheme(5, [0, 1, 2, 3, 4], 1, np.eye(5) / 5)
    for eff in measured_observable(s).effects:
        np.testing.assert_allclose(eff, np.eye(5) / 5, atol=1e-12)


def test_convolution_oracle(rng):
    for _ in range(5):
        probe = random_probe_diagonal(rng, 6)
        s = cyclic_pointer_scheme(6, [0, 2, 5, 3], 2, probe)
        direct = measured_observable(s)
        conv = measured_observable_convolution(
            spectral_measure(s.x), 2, pointer_distribution(s), cyclic_inverse_shift(6), s.outcomes
        )
        for lab in direct.labels:
            np.testing.assert_allclose(direct[lab], conv[lab], atol=1e-9)
        assert povm_validate(direct).passed


def test_spread_probe_defect_against_sharp_target():
    probe = np.diag([0.7, 0.2, 0.0, 0.1]).astype(complex)
    s = cyclic_pointer_scheme(4, [0, 1, 2, 3], 1, probe)
    ex = Povm(tuple(range(4)), np.array([np.diag(np.eye(4)[k]) for k in range(4)], dtype=complex))
    rho = np.diag([1.0, 0, 0, 0]).astype(complex)
    rep = check_probability_reproducibility(s, ex, [rho])
    assert rep.max_defect == pytest.approx(1 - 0.7, abs=1e-12)


def test_instrument_axioms(rng):
    s = cyclic_pointer_scheme(4, [0, 1, 3], 1, random_probe_diagonal(rng, 4))
    defects = instrument_axiom_defects(s, rng, 10)
    assert defects["duality"] <= 1e-11
    assert defects["completeness"] <= 1e-10
    assert defects["additivity"] <= 1e-11
    assert defects["positivity"] <= 1e-10


def test_instrument_trace_is_probability(rng):
    x, y, z = random_hermitian(rng, 2), random_hermitian(rng, 3), np.diag([0.0, 1.0, 2.0])
    s = coupled_scheme(x, y, z, 0.9, random_density(rng, 3))
    rho = random_density(rng, 2)
    probs = [np.trace(instrument_apply(s, [lab], rho)).real for lab in s.outcomes]
    assert sum(probs) == pytest.approx(1.0, abs=1e-12)
    povm = measured_observable(s)
    for lab, pr in zip(s.outcomes, probs):
        assert np.trace(rho @ povm[lab]).real == pytest.approx(pr, abs=1e-12)


def test_partition_and_labels(rng):
    s = cyclic_pointer_scheme(4, [0, 1, 2, 3], 1)
    coarse = measured_observable(s, partition=[{0, 1}, {2, 3}])
    np.testing.assert_allclose(coarse[frozenset({0, 1})], np.diag([1, 1, 0, 0.0]), atol=1e-12)
    with pytest.raises(ContractViolation):
        measured_observable(s, partition=[{0, 1}, {1, 2, 3}])
    with pytest.raises(ContractViolation):
        measured_observable(s, partition=[{0, 1}])
    with pytest.raises(ContractViolation):
        dual_instrument_apply(s, [9], np.eye(4))


def test_pointer_function_merges_outcomes():
    z = clock_operator(4)
    s = MeasurementScheme(z, np.diag([1.0, 0, 0, 0]), np.eye(8), pointer_function=lambda v: int(v) % 2)
    assert set(s.outcomes) == {0, 1}
    np.testing.assert_allclose(s.pointer_projection([1]), np.diag([0, 1, 0, 1.0]))


def test_cyclic_scheme_input_checks():
    with pytest.raises(ContractViolation):
        cyclic_pointer_scheme(4, [0.5, 1], 1)
    with pytest.raises(ContractViolation):
        cyclic_pointer_scheme(1, [0], 1)


@pytest.mark.parametrize("pointer", ["clock", "identity"])
def test_commuting_pointer_measures_only_scalars(rng, pointer):
    n = 4
    z = clock_operator(n)
    y = z if pointer == "clock" else np.eye(n)
    s = coupled_scheme(np.diag([0, 1, 2.0]), y, z, 1.0, random_probe_diagonal(rng, n))
    rep = degenerate_commuting_pointer_check(s)
    assert rep.precondition_ok and rep.passed
    for lab, w in pointer_distribution(s).items():
        assert rep.scalars[lab] == pytest.approx(w)


def test_noncommuting_pointer_flags_precondition():
    s = cyclic_pointer_scheme(4, [0, 1, 2, 3], 1)
    rep = degenerate_commuting_pointer_check(s)
    assert not rep.precondition_ok and not rep.passed


def _gaussian(grid, c, w):
    return np.exp(-((grid - c) ** 2) / (4 * w**2))


@pytest.mark.parametrize("kappa", [0.0, 0.25, 0.5, 1.0])
def test_pointer_shift(kappa):
    q, p = grid_canonical_pair(256, 40.0)
    grid = np.diag(q).real
    final, predicted = pointer_shift_expectation(_gaussian(grid, 2, 1.5), _gaussian(grid, -1, 1.5), q, p, q, kappa)
    assert abs(final - predicted) <= 1e-6
    if kappa == 0:
        assert final == pytest.approx(-1.0, abs=1e-10)


def test_pointer_shift_eigenvector():
    q, p = grid_canonical_pair(256, 40.0)
    grid = np.diag(q).real
    idx = 140
    psi = np.zeros(256)
    psi[idx] = 1.0
    final, _ = pointer_shift_expectation(psi, _gaussian(grid, -1, 1.5), q, p, q, 1.0)
    assert final == pytest.approx(-1.0 + grid[idx], abs=1e-6)
