"""Measurement back-action as a warped-convolution deformation.

A coupling ``W = exp(-i kappa sum_mu X_mu (x) Y_mu)`` between a system ``H``
and a probe ``K`` evolves system observables as ``A (x) I -> W^dag (A (x) I) W``.
This module evaluates that operator in three ways and lets them be compared:

* ``evolve_heisenberg``: direct conjugation with the coupling unitary;
* ``fiber_integral``: ``sum_y exp(i kappa y.X) A exp(-i kappa y.X) (x) E^Y({y})``;
* ``warped_convolution``: ``sum_{(x,y)} alpha_{kappa Theta (x,y)}(B) E^{X(x)Y}(x, y)``
  with ``alpha_{(s,t)} = Ad U(s,t)^{-1}`` and
  ``U(s, t) = exp(-i s.X) (x) exp(i t.Y)``.

Orientation convention.  With ``Theta = [[0, I], [-I, 0]]`` the parameter
fed to the action is ``Theta (x, y) = (y, -x)``, so
``alpha_{kappa Theta(x,y)}(A (x) I) = exp(i kappa y.X) A exp(-i kappa y.X) (x) I``.
Summed against the joint measure this reproduces the fiber integral, and
both orderings of the measure (``side="right"`` puts ``E(x, y)`` to the right
of the deformed operator, ``side="left"`` to its left) agree with the direct
conjugation.  The action written as ``alpha_{(-y, x)}`` with ``Ad U`` instead
of ``Ad U^{-1}`` is the same map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Sequence

import numpy as np

from .errors import CapacityError, ContractViolation, DimensionError
from .linalg import (
    MAX_COMPOSITE_DIM,
    as_operator,
    commutator,
    expi,
    frob_distance,
    is_hermitian,
    state_vector,
    tensor,
)
from .spectral import (
    DEFAULT_BIN_TOL,
    SpectralMeasure,
    joint_product_measure,
    joint_spectral_measure,
    spectral_measure,
)

__all__ = [
    "GeneratorPair",
    "DeformationResult",
    "GrowthFit",
    "symplectic_matrix",
    "check_theta",
    "coupling_generator",
    "coupling_unitary",
    "coupling_unitary_series",
    "lemma_factorization",
    "evolve_heisenberg",
    "fiber_integral",
    "warped_convolution",
    "deform_all",
    "same_space_deformation",
    "growth_exponent",
    "grid_canonical_pair",
    "even_packet_probe",
]

COMMUTE_TOL = 1e-9


def _check_family(ops: Sequence[np.ndarray], what: str) -> None:
    scale = 1.0 + max(float(np.linalg.norm(o)) for o in ops)
    for i, o in enumerate(ops):
        if not is_hermitian(o):
            raise ContractViolation(f"{what}[{i}] is not Hermitian")
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            c = float(np.linalg.norm(commutator(ops[i], ops[j])))
            if c > COMMUTE_TOL * scale:
                raise ContractViolation(
                    f"{what}[{i}] and {what}[{j}] do not commute (||[.,.]||_F = {c:.3e})"
                )


@dataclass(frozen=True)
class GeneratorPair:
    """Commuting generator families ``X_1..X_N`` on ``H`` and ``Y_1..Y_N`` on ``K``."""

    xs: tuple
    ys: tuple
    kappa: float = 1.0

    def __post_init__(self):
        xs = self.xs if isinstance(self.xs, (list, tuple)) else (self.xs,)
        ys = self.ys if isinstance(self.ys, (list, tuple)) else (self.ys,)
        xs = tuple(as_operator(x, "X") for x in xs)
        ys = tuple(as_operator(y, "Y") for y in ys)
        if not xs or len(xs) != len(ys):
            raise ContractViolation("need N >= 1 generators on each side, with equal N")
        if len({x.shape for x in xs}) != 1 or len({y.shape for y in ys}) != 1:
            raise DimensionError("generators within a family must share one dimension")
        _check_family(xs, "X")
        _check_family(ys, "Y")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def n(self) -> int:
        return len(self.xs)

    @property
    def dim_h(self) -> int:
        return self.xs[0].shape[0]

    @property
    def dim_k(self) -> int:
        return self.ys[0].shape[0]

    def x_measure(self, bin_tol: float = DEFAULT_BIN_TOL) -> SpectralMeasure:
        return joint_spectral_measure(self.xs, bin_tol)

    def y_measure(self, bin_tol: float = DEFAULT_BIN_TOL) -> SpectralMeasure:
        return joint_spectral_measure(self.ys, bin_tol)


@dataclass(frozen=True)
class DeformationResult:
    direct: np.ndarray
    fiber: np.ndarray
    warped: dict = field(default_factory=dict)

    @property
    def pairwise_distances(self) -> dict:
        out = {"direct-fiber": frob_distance(self.direct, self.fiber)}
        for side, op in self.warped.items():
            out[f"direct-warped-{side}"] = frob_distance(self.direct, op)
            out[f"fiber-warped-{side}"] = frob_distance(self.fiber, op)
        return out


def symplectic_matrix(n: int) -> np.ndarray:
    """``[[0, I_n], [-I_n, 0]]``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def check_theta(theta, n: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (2 * n, 2 * n):
        raise DimensionError(f"deformation matrix must be {2 * n}x{2 * n}, got {theta.shape}")
    if np.abs(theta + theta.T).max() > 1e-12:
        raise ContractViolation("deformation matrix is not skew-symmetric")
    return theta


def coupling_generator(g: GeneratorPair, max_dim: int = MAX_COMPOSITE_DIM) -> np.ndarray:
    """``sum_mu X_mu (x) Y_mu`` (Hermitian because each family is)."""
    return sum(tensor(x, y, max_dim) for x, y in zip(g.xs, g.ys))


def coupling_unitary(g: GeneratorPair, max_dim: int = MAX_COMPOSITE_DIM) -> np.ndarray:
    """``W = exp(-i kappa sum_mu X_mu (x) Y_mu)``."""
    return expi(coupling_generator(g, max_dim), g.kappa)


def coupling_unitary_series(x, y, kappa: float = 1.0, terms: int = 40) -> np.ndarray:
    """Power series ``sum_n (-i kappa)^n / n! X^n (x) Y^n`` for bounded generators."""
    x = as_operator(x)
    y = as_operator(y)
    out = np.zeros((x.shape[0] * y.shape[0],) * 2, dtype=np.complex128)
    xn = np.eye(x.shape[0], dtype=np.complex128)
    yn = np.eye(y.shape[0], dtype=np.complex128)
    for n in range(terms):
        out += (-1j * kappa) ** n / factorial(n) * np.kron(xn, yn)
        xn = xn @ x
        yn = yn @ y
    return out


def _dot_family(coeffs, ops: Sequence[np.ndarray]) -> np.ndarray:
    return sum(float(c) * o for c, o in zip(np.atleast_1d(coeffs), ops))


def lemma_factorization(x, ey: SpectralMeasure, max_dim: int = MAX_COMPOSITE_DIM) -> np.ndarray:
    """``sum_y exp(-i y X) (x) E^Y({y})``, the fiberwise form of ``exp(-i X (x) Y)``."""
    x = as_operator(x, "X")
    if x.shape[0] * ey.dim > max_dim:
        raise CapacityError(f"composite dimension {x.shape[0] * ey.dim} exceeds maximum {max_dim}")
    out = np.zeros((x.shape[0] * ey.dim,) * 2, dtype=np.complex128)
    for y, proj in ey:
        out += np.kron(expi(x, float(y)), proj)
    return out


def evolve_heisenberg(a, g: GeneratorPair, max_dim: int = MAX_COMPOSITE_DIM) -> np.ndarray:
    """``W^dag (a (x) I) W`` with ``W = coupling_unitary(g)``."""
    a = as_operator(a)
    if a.shape[0] != g.dim_h:
        raise DimensionError(f"operator dimension {a.shape[0]} != dim H = {g.dim_h}")
    w = coupling_unitary(g, max_dim)
    return w.conj().T @ tensor(a, np.eye(g.dim_k), max_dim) @ w


def fiber_integral(
    a,
    xs,
    ey: SpectralMeasure,
    kappa: float,
    b=None,
    max_dim: int = MAX_COMPOSITE_DIM,
) -> np.ndarray:
    """``sum_y exp(i kappa y.X) a exp(-i kappa y.X) (x) b E^Y({y})``.

    ``xs`` is one Hermitian matrix or a commuting family; the atom values of
    ``ey`` are scalars or tuples of matching length.  ``b`` defaults to the
    identity; a ``b`` commuting with the probe generators gives the
    ``A (x) B`` variant.
    """
    a = as_operator(a)
    xs = [as_operator(x) for x in (xs if isinstance(xs, (list, tuple)) else [xs])]
    _check_family(xs, "X")
    if a.shape != xs[0].shape:
        raise DimensionError("a and X must act on the same space")
    if a.shape[0] * ey.dim > max_dim:
        raise CapacityError(f"composite dimension {a.shape[0] * ey.dim} exceeds maximum {max_dim}")
    out = np.zeros((a.shape[0] * ey.dim,) * 2, dtype=np.complex128)
    for y, proj in ey:
        gen = _dot_family(y, xs)
        u = expi(gen, kappa)
        fiber = u.conj().T @ a @ u
        right = proj if b is None else b @ proj
        out += np.kron(fiber, right)
    return out


def warped_convolution(
    b,
    g: GeneratorPair,
    theta=None,
    side: str = "right",
    max_dim: int = MAX_COMPOSITE_DIM,
) -> np.ndarray:
    """Warped convolution of a composite-space operator ``b``.

    ``sum_{(x,y)} U(s,t)^dag b U(s,t) E(x,y)`` with ``(s, t) = kappa Theta (x, y)``
    and ``U(s, t) = exp(-i s.X) (x) exp(i t.Y)``, summed over the atoms of the
    product of the joint spectral measures of both families.  ``side`` puts
    the measure to the right (default) or to the left of the deformed term.
    """
    if side not in ("left", "right"):
        raise ContractViolation(f"side must be 'left' or 'right', got {side!r}")
    n = g.n
    theta = symplectic_matrix(n) if theta is None else check_theta(theta, n)
    b = as_operator(b)
    d = g.dim_h * g.dim_k
    if d > max_dim:
        raise CapacityError(f"composite dimension {d} exceeds maximum {max_dim}")
    if b.shape[0] != d:
        raise DimensionError(f"operator dimension {b.shape[0]} != {g.dim_h}*{g.dim_k}")
    ex, ey = g.x_measure(), g.y_measure()
    joint = joint_product_measure(ex, ey, max_dim)
    # exp(-i s.X) and exp(i t.Y) through the functional calculus of the measures
    vx = ex.values.reshape(ex.natoms, n)
    vy = ey.values.reshape(ey.natoms, n)
    out = np.zeros((d, d), dtype=np.complex128)
    for (x_and_y), proj in joint:
        st = g.kappa * theta @ x_and_y
        s, t = st[:n], st[n:]
        ux = np.einsum("m,mij->ij", np.exp(-1j * (vx @ s)), ex.projections)
        uy = np.einsum("m,mij->ij", np.exp(1j * (vy @ t)), ey.projections)
        u = np.kron(ux, uy)
        deformed = u.conj().T @ b @ u
        out += deformed @ proj if side == "right" else proj @ deformed
    return out


def deform_all(a, g: GeneratorPair, theta=None, max_dim: int = MAX_COMPOSITE_DIM) -> DeformationResult:
    """Evaluate the direct, fiber and warped (both sides) forms for ``a (x) I``."""
    a = as_operator(a)
    direct = evolve_heisenberg(a, g, max_dim)
    fiber = fiber_integral(a, list(g.xs), g.y_measure(), g.kappa, max_dim=max_dim)
    b = tensor(a, np.eye(g.dim_k), max_dim)
    warped = {side: warped_convolution(b, g, theta, side, max_dim) for side in ("right", "left")}
    return DeformationResult(direct, fiber, warped)


def same_space_deformation(a, x, y, bin_tol: float = DEFAULT_BIN_TOL) -> np.ndarray:
    """``sum_y exp(i y X) a exp(-i y X) E^Y({y})`` on a single Hilbert space.

    Requires ``[X, Y] = 0`` and ``[Y, a] = 0``; the result then equals
    ``exp(i XY) a exp(-i XY)``.
    """
    a, x, y = as_operator(a), as_operator(x, "X"), as_operator(y, "Y")
    if not (a.shape == x.shape == y.shape):
        raise DimensionError("a, X and Y must act on the same space")
    scale = 1.0 + max(float(np.linalg.norm(m)) for m in (a, x, y))
    for name, (p, q) in {"[X,Y]": (x, y), "[Y,a]": (y, a)}.items():
        c = float(np.linalg.norm(commutator(p, q)))
        if c > COMMUTE_TOL * scale:
            raise ContractViolation(f"{name} does not vanish: ||{name}||_F = {c:.3e}")
    if not is_hermitian(x @ y, COMMUTE_TOL):
        raise ContractViolation("XY is not Hermitian")
    out = np.zeros_like(a)
    for yv, proj in spectral_measure(y, bin_tol):
        u = expi(x, float(yv))
        out += u.conj().T @ a @ u @ proj
    return out


@dataclass(frozen=True)
class GrowthFit:
    """Least-squares fit ``log||a exp(-i y x) psi|| ~ (m/2) log(1 + y^2) + log c``."""

    exponent: float
    exponents: tuple
    constants: tuple
    y: np.ndarray
    log_norms: np.ndarray


def growth_exponent(a, x, probes, y_samples) -> GrowthFit:
    """Fit the polynomial growth exponent of ``y -> ||a exp(-i y x) psi||``.

    One fit per probe; ``exponent`` is the largest fitted ``m``, the per-probe
    prefactors ``c`` are in ``constants``.  ``log_norms`` has one row per probe.
    """
    a = as_operator(a)
    x = as_operator(x, "X")
    ys = np.asarray(y_samples, dtype=float)
    if ys.size < 4:
        raise ContractViolation("growth_exponent needs at least 4 samples")
    reg = 0.5 * np.log1p(ys**2)
    if np.ptp(reg) == 0.0:
        raise ContractViolation("degenerate fit: all samples have the same |y|")
    vals, vecs = np.linalg.eigh(0.5 * (x + x.conj().T))
    ms, cs, rows = [], [], []
    for psi in probes:
        psi = state_vector(psi)
        coeff = vecs.conj().T @ psi
        # exp(-i y x) psi for all y at once, columns indexed by sample
        evolved = vecs @ (np.exp(-1j * np.outer(vals, ys)) * coeff[:, None])
        lognorm = np.log(np.linalg.norm(a @ evolved, axis=0))
        slope, intercept = np.polyfit(reg, lognorm, 1)
        ms.append(float(slope))
        cs.append(float(np.exp(intercept)))
        rows.append(lognorm)
    return GrowthFit(max(ms), tuple(ms), tuple(cs), ys, np.array(rows))


def grid_canonical_pair(n: int, length: float) -> tuple[np.ndarray, np.ndarray]:
    """Position and momentum matrices on ``n`` periodic samples of ``[-L/2, L/2)``.

    ``P = F^dag diag(k) F`` with ``F`` the unitary DFT and ``k`` the symmetric
    angular frequency grid, so ``P`` acts as ``-i d/dq`` on band-limited
    functions.
    """
    if n % 2 or n < 8:
        raise ContractViolation(f"grid size must be even and >= 8, got {n}")
    dq = length / n
    q = -length / 2 + dq * np.arange(n)
    k = 2 * np.pi * np.fft.fftfreq(n, dq)
    f = np.fft.fft(np.eye(n), axis=0, norm="ortho")
    p = f.conj().T @ (k[:, None] * f)
    p = 0.5 * (p + p.conj().T)
    return np.diag(q).astype(np.complex128), p


def even_packet_probe(q, width: float, momentum: float, center: float = 0.0) -> np.ndarray:
    """``exp(-(q-c)^2 / (2 w^2)) cos(k (q-c))`` sampled on the positions ``q``, normalized.

    Two packets at momenta ``+-k``.  Compared with a single Gaussian, the
    norm ``||P^m exp(-i y Q) psi||`` reaches its ``|y|^m`` regime sooner,
    which keeps fitted growth exponents close to ``m`` on short ``y`` ranges.
    """
    q = np.asarray(q, dtype=float)
    if width <= 0:
        raise ContractViolation("width must be positive")
    return state_vector(np.exp(-((q - center) ** 2) / (2 * width**2)) * np.cos(momentum * (q - center)))
