import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from warpmeas.errors import ContractViolation
from warpmeas.linalg import random_density, random_hermitian, random_unitary
from warpmeas.spectral import (
    OutcomeSet,
    Povm,
    is_pvm,
    joint_product_measure,
    joint_spectral_measure,
    povm_validate,
    project,
    smear_povm,
    spectral_measure,
)


def _degenerate(rng, values):
    u = random_unitary(rng, len(values))
    return (u * np.asarray(values, dtype=float)) @ u.conj().T


def test_spectral_measure_groups_degenerate_values(rng):
    x = _degenerate(rng, [1, 1, 2, 3, 3, 3])
    e = spectral_measure(x)
    np.testing.assert_allclose(e.values, [1, 2, 3], atol=1e-10)
    assert list(e.ranks()) == [2, 1, 3]
    e.check()
    np.testing.assert_allclose(e.operator(), x, atol=1e-12)


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_pvm_axioms(n, seed):
    rng = np.random.default_rng(seed)
    e = spectral_measure(random_hermitian(rng, n))
    total = sum(p for _, p in e)
    np.testing.assert_allclose(total, np.eye(n), atol=1e-10)
    for i, (_, p) in enumerate(e):
        np.testing.assert_allclose(p @ p, p, atol=1e-10)
        for _, q in list(e)[i + 1:]:
            assert np.linalg.norm(p @ q) < 1e-10


def test_functional_calculus(rng):
    x = random_hermitian(rng, 5)
    e = spectral_measure(x)
    np.testing.assert_allclose(e.function(lambda v: v**2), x @ x, atol=1e-12)


def test_project_on_outcome_sets(rng):
    x = _degenerate(rng, [-1, 0, 0, 2])
    e = spectral_measure(x)
    above = project(e, OutcomeSet.greater_than(-0.5))
    below = project(e, ~OutcomeSet.greater_than(-0.5))
    np.testing.assert_allclose(above + below, np.eye(4), atol=1e-12)
    assert round(np.trace(above).real) == 3
    np.testing.assert_allclose(project(e, lambda v: v > 1), project(e, OutcomeSet.interval(1.5, 2.5)), atol=1e-12)


def test_outcome_set_algebra():
    a = OutcomeSet.interval(0, 2)
    b = OutcomeSet.interval(1, 3)
    assert 1.5 in (a & b) and 2.5 not in (a & b)
    assert 0.5 in (a | b) and 3.0 not in (a | b)
    assert (a & ~a).isdisjoint(OutcomeSet.everything())
    assert OutcomeSet.empty_set().isdisjoint(a)


def test_joint_measure_of_commuting_family(rng):
    u = random_unitary(rng, 6)
    x1 = (u * np.array([0, 0, 1, 1, 2, 2.0])) @ u.conj().T
    x2 = (u * np.array([5, 7, 5, 7, 5, 5.0])) @ u.conj().T
    e = joint_spectral_measure([x1, x2])
    assert e.joint and e.natoms == 5
    np.testing.assert_allclose(e.operator(0), x1, atol=1e-10)
    np.testing.assert_allclose(e.operator(1), x2, atol=1e-10)


def test_joint_measure_rejects_noncommuting(rng):
    with pytest.raises(ContractViolation):
        joint_spectral_measure([random_hermitian(rng, 3), random_hermitian(rng, 3)])


def test_product_measure(rng):
    ex = spectral_measure(random_hermitian(rng, 2))
    ey = spectral_measure(random_hermitian(rng, 3))
    j = joint_product_measure(ex, ey)
    assert j.natoms == 6 and j.values.shape == (6, 2)
    np.testing.assert_allclose(sum(p for _, p in j), np.eye(6), atol=1e-10)


def test_povm_validation_and_pvm(rng):
    e = spectral_measure(random_hermitian(rng, 4))
    p = Povm.from_spectral_measure(e)
    assert povm_validate(p).passed and is_pvm(p)
    smeared = smear_povm(e, lambda v: {"lo": 0.3, "hi": 0.7} if v > 0 else {"lo": 1.0})
    assert povm_validate(smeared).passed
    assert not is_pvm(smeared) or np.allclose(smeared["lo"], 0)
    bad = Povm(("a",), np.array([0.5 * np.eye(2)]))
    rep = povm_validate(bad)
    assert not rep.passed and rep.normalization_defect > 0.1


def test_povm_effect_sums(rng):
    rho = random_density(rng, 3)
    p = Povm.from_mapping({0: rho, 1: np.eye(3) - rho})
    np.testing.assert_allclose(p.effect([0, 1]), np.eye(3), atol=1e-12)
    with pytest.raises(KeyError):
        p[2]
