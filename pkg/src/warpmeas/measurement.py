"""Measurement schemes, instruments and measured observables.

A scheme couples the system ``H`` to a probe ``K`` prepared in ``omega_K``,
evolves with a unitary ``W`` and reads a pointer observable ``Z`` through a
pointer function ``f`` that maps eigenvalues of ``Z`` to outcome labels.
Outcome sets are collections of labels.

For exact finite shift covariance the probe is ``C^n`` with the clock ``Z``
(eigenvalues ``0..n-1``) and the shift generator ``Y``, where
``exp(-i Y)`` is the cyclic shift ``|j> -> |j+1 mod n>``.  Then
``exp(i s Y) E^Z({j}) exp(-i s Y) = E^Z({j - s mod n})`` holds for integer ``s``
and the convolution formula for the measured observable is an exact identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .deformation import GeneratorPair, coupling_unitary
from .errors import ContractViolation, DimensionError
from .linalg import (
    MAX_COMPOSITE_DIM,
    as_operator,
    commutator,
    density_operator,
    frob_distance,
    is_unitary,
    partial_expectation,
    partial_trace,
    state_vector,
)
from .spectral import Povm, SpectralMeasure, spectral_measure

__all__ = [
    "MeasurementScheme",
    "ReproducibilityReport",
    "DegeneracyReport",
    "clock_operator",
    "shift_generator",
    "coupled_scheme",
    "cyclic_pointer_scheme",
    "dual_instrument_apply",
    "instrument_apply",
    "measured_observable",
    "pointer_distribution",
    "cyclic_inverse_shift",
    "measured_observable_convolution",
    "check_probability_reproducibility",
    "pointer_shift_expectation",
    "degenerate_commuting_pointer_check",
]

PROB_FLOOR = 1e-14


def _default_label(value: float):
    r = round(value)
    return int(r) if abs(value - r) <= 1e-9 else float(value)


@dataclass(frozen=True)
class MeasurementScheme:
    """The quintuple ``(K, Z, omega_K, W, f)``.

    ``pointer_function`` maps eigenvalues of ``z`` to outcome labels; by
    default integral eigenvalues become ``int`` labels and others stay
    ``float``.  ``x`` and ``y`` optionally record the coupling generators
    when ``W = exp(-i kappa X (x) Y)``.
    """

    z: np.ndarray
    omega_k: np.ndarray
    w: np.ndarray
    pointer_function: Callable[[float], Hashable] | None = None
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    kappa: float | None = None
    pointer: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        z = as_operator(self.z, "Z")
        omega = density_operator(self.omega_k)
        w = as_operator(self.w, "W")
        if omega.shape != z.shape:
            raise DimensionError("probe state and pointer act on different spaces")
        if w.shape[0] % z.shape[0]:
            raise DimensionError("W dimension is not a multiple of dim K")
        if not is_unitary(w):
            raise ContractViolation("time evolution W is not unitary")
        f = self.pointer_function or _default_label
        pointer: dict = {}
        for v, p in spectral_measure(z):
            lab = f(float(v))
            pointer[lab] = pointer[lab] + p if lab in pointer else p
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "omega_k", omega)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "pointer", pointer)

    @property
    def dim_k(self) -> int:
        return self.z.shape[0]

    @property
    def dim_h(self) -> int:
        return self.w.shape[0] // self.z.shape[0]

    @property
    def outcomes(self) -> tuple:
        return tuple(self.pointer)

    def pointer_projection(self, delta: Iterable) -> np.ndarray:
        """``E^Z(f^{-1}(delta))``."""
        out = np.zeros((self.dim_k, self.dim_k), dtype=np.complex128)
        for lab in delta:
            if lab not in self.pointer:
                raise ContractViolation(f"unknown outcome label {lab!r}")
            out = out + self.pointer[lab]
        return out


def clock_operator(n: int) -> np.ndarray:
    return np.diag(np.arange(n, dtype=float)).astype(np.complex128)


def shift_generator(n: int) -> np.ndarray:
    """Hermitian ``Y`` with ``exp(-i Y) |j> = |j+1 mod n>`` and spectrum ``2 pi k / n``."""
    j = np.arange(n)
    fourier = np.exp(2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)
    y = fourier @ np.diag(2 * np.pi * j / n) @ fourier.conj().T
    return 0.5 * (y + y.conj().T)


def coupled_scheme(
    x,
    y,
    z,
    kappa: float,
    probe=None,
    pointer_function=None,
    max_dim: int = MAX_COMPOSITE_DIM,
) -> MeasurementScheme:
    """Scheme with ``W = exp(-i kappa X (x) Y)``; the probe defaults to the lowest pointer state."""
    z = as_operator(z, "Z")
    if probe is None:
        probe = np.zeros_like(z)
        probe[0, 0] = 1.0
    w = coupling_unitary(GeneratorPair(x, y, kappa), max_dim)
    return MeasurementScheme(z, probe, w, pointer_function, as_operator(x), as_operator(y), kappa)


def cyclic_pointer_scheme(
    n: int,
    x_values: Sequence[int],
    kappa: int,
    probe=None,
    x_basis=None,
    max_dim: int = MAX_COMPOSITE_DIM,
) -> MeasurementScheme:
    """Exactly shift-covariant scheme on the probe ``C^n``.

    ``X`` has the integer eigenvalues ``x_values mod n``, diagonal in the
    computational basis or in the columns of the unitary ``x_basis``.  The
    pointer is the clock, the coupling uses the shift generator and ``f`` is
    the identity on ``0..n-1``.
    """
    if int(n) != n or n < 2:
        raise ContractViolation("n must be an integer >= 2")
    if any(int(v) != v for v in x_values) or int(kappa) != kappa:
        raise ContractViolation("x_values and kappa must be integers")
    xv = np.mod(np.asarray(x_values, dtype=int), n).astype(float)
    x = np.diag(xv).astype(np.complex128)
    if x_basis is not None:
        u = as_operator(x_basis)
        x = u @ x @ u.conj().T
        x = 0.5 * (x + x.conj().T)
    return coupled_scheme(x, shift_generator(n), clock_operator(n), int(kappa), probe, max_dim=max_dim)


def dual_instrument_apply(s: MeasurementScheme, delta: Iterable, a) -> np.ndarray:
    """``E*_delta(a) = (id (x) omega_K)[W^dag (a (x) E^Z(f^{-1}(delta))) W]``."""
    a = as_operator(a)
    if a.shape[0] != s.dim_h:
        raise DimensionError(f"operator dimension {a.shape[0]} != dim H = {s.dim_h}")
    proj = s.pointer_projection(delta)
    b = s.w.conj().T @ np.kron(a, proj) @ s.w
    return partial_expectation(b, s.omega_k)


def instrument_apply(s: MeasurementScheme, delta: Iterable, rho) -> np.ndarray:
    """Unnormalized post-measurement state ``E_delta(rho)``.

    ``tr_K[(I (x) Pi) W (rho (x) omega_K) W^dag (I (x) Pi)]`` with
    ``Pi = E^Z(f^{-1}(delta))``; its trace is the outcome probability and
    ``tr(E_delta(rho) a) = tr(rho E*_delta(a))``.
    """
    rho = as_operator(rho)
    if rho.shape[0] != s.dim_h:
        raise DimensionError(f"state dimension {rho.shape[0]} != dim H = {s.dim_h}")
    proj = np.kron(np.eye(s.dim_h), s.pointer_projection(delta))
    evolved = s.w @ np.kron(rho, s.omega_k) @ s.w.conj().T
    return partial_trace(proj @ evolved @ proj, s.dim_h, s.dim_k)


def _cells(s: MeasurementScheme, partition) -> list:
    if partition is None:
        return [(lab, (lab,)) for lab in s.outcomes]
    cells = [frozenset(c) for c in partition]
    seen: set = set()
    for c in cells:
        if seen & c:
            raise ContractViolation(f"partition cells overlap on {sorted(seen & c, key=repr)}")
        seen |= c
    missing = set(s.outcomes) - seen
    if missing:
        raise ContractViolation(f"partition does not cover outcomes {sorted(missing, key=repr)}")
    return [(c, tuple(c)) for c in cells]


def measured_observable(s: MeasurementScheme, partition=None) -> Povm:
    """POVM ``delta -> E*_delta(I)``.

    Without ``partition`` there is one effect per outcome label; otherwise
    one per cell, labelled by the cell as a ``frozenset``.
    """
    eye = np.eye(s.dim_h)
    cells = _cells(s, partition)
    return Povm(tuple(c for c, _ in cells), np.array([dual_instrument_apply(s, d, eye) for _, d in cells]))


def pointer_distribution(s: MeasurementScheme) -> dict:
    """``omega_K[E^Z(f^{-1}({label}))]`` per outcome label, tiny values clamped to 0."""
    out = {}
    for lab, p in s.pointer.items():
        v = float(np.trace(s.omega_k @ p).real)
        out[lab] = 0.0 if abs(v) < PROB_FLOOR else v
    return out


def cyclic_inverse_shift(n: int) -> Callable[[Iterable, float], set]:
    """``(delta, shift) -> {d - shift mod n : d in delta}`` for integer shifts."""

    def inverse_shift(delta, shift):
        s = round(shift)
        if abs(shift - s) > 1e-9:
            raise ContractViolation(f"cyclic shift {shift} is not an integer")
        return {int((d - s) % n) for d in delta}

    return inverse_shift


def measured_observable_convolution(
    ex: SpectralMeasure,
    kappa: float,
    pointer_dist: Mapping[Hashable, float],
    f_inverse_shift: Callable[[Iterable, float], Iterable],
    outcomes: Sequence[Hashable],
) -> Povm:
    """``E(delta) = sum_x E^X({x}) * pointer_dist(f^{-1}(delta - kappa x))``.

    ``f_inverse_shift(delta, kappa * x)`` returns the pointer labels in
    ``f^{-1}(delta - kappa x)``; ``pointer_dist`` gives the probe's
    probability for each pointer label.
    """
    total = sum(pointer_dist.values())
    if any(p < 0 for p in pointer_dist.values()) or abs(total - 1.0) > 1e-12:
        raise ContractViolation("pointer distribution is not normalized")
    effects = np.zeros((len(outcomes), ex.dim, ex.dim), dtype=np.complex128)
    for i, lab in enumerate(outcomes):
        for x, proj in ex:
            weight = sum(pointer_dist.get(z, 0.0) for z in f_inverse_shift((lab,), kappa * float(x)))
            effects[i] += weight * proj
    return Povm(tuple(outcomes), effects)


@dataclass(frozen=True)
class ReproducibilityReport:
    labels: tuple
    defects: np.ndarray  # (n_states, n_labels)
    tol: float

    @property
    def max_defect(self) -> float:
        return float(self.defects.max()) if self.defects.size else 0.0

    @property
    def passed(self) -> bool:
        return self.max_defect <= self.tol


def check_probability_reproducibility(
    s: MeasurementScheme, e: Povm, states: Iterable, tol: float = 1e-10
) -> ReproducibilityReport:
    """Compare ``omega[E(delta)]`` with the final pointer statistics.

    The right-hand side is ``(omega (x) omega_K)[W^dag (I (x) E^Z(f^{-1}(delta))) W]``.
    A label of ``e`` that is a frozenset is read as a set of outcome labels.
    """
    states = [density_operator(r) for r in states]
    eye = np.eye(s.dim_h)
    cells = [tuple(lab) if isinstance(lab, frozenset) else (lab,) for lab in e.labels]
    pointer_ops = [s.w.conj().T @ np.kron(eye, s.pointer_projection(c)) @ s.w for c in cells]
    defects = np.zeros((len(states), len(cells)))
    for i, rho in enumerate(states):
        joint = np.kron(rho, s.omega_k)
        for j, (eff, op) in enumerate(zip(e.effects, pointer_ops)):
            lhs = np.trace(rho @ eff).real
            rhs = np.trace(joint @ op).real
            defects[i, j] = abs(lhs - rhs)
    return ReproducibilityReport(e.labels, defects, tol)


def pointer_shift_expectation(psi, phi, q, y, q_tilde, kappa: float) -> tuple[float, float]:
    """Final pointer mean after ``W = exp(-i kappa Q (x) Y)`` acting on ``psi (x) phi``.

    Returns ``(final, predicted)`` with
    ``final = <W(psi (x) phi)| I (x) Q~ |W(psi (x) phi)>`` and
    ``predicted = kappa <psi|Q psi> + <phi|Q~ phi>``.

    ``W (psi (x) phi) = sum_s E^Q(s) psi (x) exp(-i kappa s Y) phi``, so the
    composite space is never formed: each eigenvalue ``s`` of ``Q``
    contributes its weight ``||E^Q(s) psi||^2`` times the pointer mean of the
    translated probe.
    """
    psi, phi = state_vector(psi), state_vector(phi)
    q, y, qt = as_operator(q, "Q"), as_operator(y, "Y"), as_operator(q_tilde, "Q~")
    if q.shape[0] != psi.size or y.shape != qt.shape or y.shape[0] != phi.size:
        raise DimensionError("operator and state dimensions do not match")
    qs, qv = np.linalg.eigh(0.5 * (q + q.conj().T))
    weights = np.abs(qv.conj().T @ psi) ** 2
    ys, yv = np.linalg.eigh(0.5 * (y + y.conj().T))
    coeff = yv.conj().T @ phi
    shifted = yv @ (np.exp(-1j * kappa * np.outer(ys, qs)) * coeff[:, None])
    means = np.einsum("is,ij,js->s", shifted.conj(), qt, shifted).real
    final = float(weights @ means)
    predicted = float(kappa * np.vdot(psi, q @ psi).real + np.vdot(phi, qt @ phi).real)
    return final, predicted


@dataclass(frozen=True)
class DegeneracyReport:
    commutator_norm: float
    precondition_ok: bool
    scalars: dict
    defects: dict
    tol: float

    @property
    def max_defect(self) -> float:
        return max(self.defects.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.precondition_ok and self.max_defect <= self.tol


def degenerate_commuting_pointer_check(s: MeasurementScheme, tol: float = 1e-10) -> DegeneracyReport:
    """With ``[Y, Z] = 0`` every measured effect is ``omega_K[E^Z(f^{-1}(delta))] I``.

    If the precondition fails the report says so and no effects are checked.
    """
    if s.y is None:
        raise ContractViolation("scheme does not record its probe generator Y")
    cnorm = float(np.linalg.norm(commutator(s.y, s.z)))
    if cnorm > tol:
        return DegeneracyReport(cnorm, False, {}, {}, tol)
    povm = measured_observable(s)
    dist = pointer_distribution(s)
    eye = np.eye(s.dim_h)
    defects = {lab: frob_distance(povm[lab], dist[lab] * eye) for lab in povm.labels}
    return DegeneracyReport(cnorm, True, dist, defects, tol)
