"""Moyal products of phase-space functions on periodic grids.

Conventions
-----------
Phase space is ``R^{2n}`` with the first ``n`` axes positions and the last
``n`` momenta.  The reference product is the oscillatory integral

    (f * g)(x) = int int f(x + hbar Theta z) g(x + y) exp(2 pi i z.y) dz dy,

evaluated spectrally on the grid.  Expanding it in ``hbar`` gives

    f * g ~ m[ exp(c Theta_jk d_j (x) d_k) (f (x) g) ],   c = i hbar / (2 pi),

so ``f * g - g * f = (i hbar / pi) {f, g} + O(hbar^3)``.  The asymptotic
series uses this constant.  The twist product keeps the normalization
``exp(i hbar Theta_jk d_j (x) d_k / 2)``; it matches the integral product
with ``hbar_integral = pi * hbar_twist`` (see :data:`TWIST_TO_INTEGRAL`).

All derivatives are spectral.  Inputs must decay to ``1e-13`` of their peak
at the grid boundary so that periodization is invisible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ContractViolation, DimensionError, PeriodizationError

__all__ = [
    "TWIST_TO_INTEGRAL",
    "PhaseSpaceGrid",
    "PhaseSpaceFunction",
    "HbarTheta",
    "spectral_derivative",
    "moyal_product_integral",
    "moyal_product_asymptotic",
    "twist_product",
    "poisson_bracket",
    "interior_sup",
    "empirical_orders",
    "moyal_convergence_study",
]

TWIST_TO_INTEGRAL = math.pi
DECAY_TOL = 1e-13
MAX_ORDER = 8


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Uniform periodic grid on ``prod_i [-L_i/2, L_i/2)``."""

    points: tuple
    extents: tuple

    def __post_init__(self):
        pts = tuple(int(p) for p in self.points)
        ext = tuple(float(e) for e in self.extents)
        if len(pts) != len(ext) or len(pts) == 0 or len(pts) % 2:
            raise DimensionError("need an even number of axes with one extent each")
        for p in pts:
            if p < 16 or p & (p - 1):
                raise ContractViolation(f"points per axis must be a power of two >= 16, got {p}")
        if any(e <= 0 for e in ext):
            raise ContractViolation("extents must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "extents", ext)

    @classmethod
    def square(cls, n: int, points: int, extent: float) -> "PhaseSpaceGrid":
        return cls((points,) * (2 * n), (extent,) * (2 * n))

    @property
    def ndof(self) -> int:
        return len(self.points) // 2

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def spacing(self) -> tuple:
        return tuple(e / p for e, p in zip(self.extents, self.points))

    def axis(self, i: int) -> np.ndarray:
        return -self.extents[i] / 2 + self.spacing[i] * np.arange(self.points[i])

    def frequencies(self, i: int) -> np.ndarray:
        """Frequencies of axis ``i`` in cycles per unit length."""
        return np.fft.fftfreq(self.points[i], self.spacing[i])

    def mesh(self) -> list:
        return np.meshgrid(*(self.axis(i) for i in range(len(self.points))), indexing="ij")

    def interior(self, fraction: float = 0.5) -> tuple:
        """Index slices selecting the central ``fraction`` of every axis."""
        out = []
        for p in self.points:
            keep = int(round(p * fraction))
            start = (p - keep) // 2
            out.append(slice(start, start + keep))
        return tuple(out)


@dataclass(frozen=True)
class PhaseSpaceFunction:
    grid: PhaseSpaceGrid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.shape != self.grid.shape:
            raise DimensionError(f"samples shape {s.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(s)):
            raise ContractViolation("samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_callable(cls, grid: PhaseSpaceGrid, fn: Callable) -> "PhaseSpaceFunction":
        return cls(grid, fn(*grid.mesh()))

    def boundary_ratio(self) -> float:
        """Largest boundary magnitude relative to the peak magnitude."""
        mag = np.abs(self.samples)
        peak = mag.max()
        if peak == 0.0:
            return 0.0
        edge = 0.0
        for ax in range(mag.ndim):
            edge = max(edge, np.take(mag, 0, axis=ax).max(), np.take(mag, -1, axis=ax).max())
        return float(edge / peak)

    def check_decay(self, tol: float = DECAY_TOL) -> None:
        r = self.boundary_ratio()
        if r > tol:
            raise PeriodizationError(
                f"function does not decay at the grid boundary (edge/peak = {r:.2e} > {tol:.0e})"
            )

    def _new(self, samples) -> "PhaseSpaceFunction":
        return PhaseSpaceFunction(self.grid, samples)

    def conj(self) -> "PhaseSpaceFunction":
        return self._new(self.samples.conj())

    def __add__(self, other):
        return self._new(self.samples + _samples(other, self.grid))

    def __sub__(self, other):
        return self._new(self.samples - _samples(other, self.grid))

    def __mul__(self, other):
        return self._new(self.samples * _samples(other, self.grid))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._new(self.samples / _samples(other, self.grid))


def _samples(other, grid):
    if isinstance(other, PhaseSpaceFunction):
        if other.grid != grid:
            raise DimensionError("phase-space functions live on different grids")
        return other.samples
    return other


@dataclass(frozen=True)
class HbarTheta:
    hbar: float
    theta: np.ndarray | None = None
    ndof: int = 1

    def __post_init__(self):
        if self.hbar < 0:
            raise ContractViolation("hbar must be non-negative")
        if self.theta is None:
            n = self.ndof
            theta = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
        else:
            theta = np.array(self.theta, dtype=float)
            if theta.ndim != 2 or theta.shape[0] != theta.shape[1] or theta.shape[0] % 2:
                raise DimensionError("theta must be a 2n x 2n matrix")
            object.__setattr__(self, "ndof", theta.shape[0] // 2)
        if np.abs(theta + theta.T).max() > 1e-12:
            raise ContractViolation("theta is not skew-symmetric")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "hbar", float(self.hbar))

    def __eq__(self, other):
        return (
            isinstance(other, HbarTheta)
            and self.hbar == other.hbar
            and np.array_equal(self.theta, other.theta)
        )

    __hash__ = None

    def offdiagonal_block(self) -> np.ndarray:
        """``B`` in ``Theta = [[0, B], [-B^T, 0]]``; raises if the diagonal blocks do not vanish."""
        n = self.ndof
        th = self.theta
        if np.abs(th[:n, :n]).max(initial=0) > 1e-12 or np.abs(th[n:, n:]).max(initial=0) > 1e-12:
            raise ContractViolation("integral form needs theta with vanishing position/momentum blocks")
        return th[:n, n:]

    def symplectic_scale(self) -> float:
        """``s`` with ``Theta = s * [[0, I], [-I, 0]]``; raises for any other form."""
        b = self.offdiagonal_block()
        s = float(b[0, 0])
        if np.abs(b - s * np.eye(self.ndof)).max() > 1e-12:
            raise ContractViolation("theta is not a multiple of the standard symplectic matrix")
        return s


def _check_pair(f: PhaseSpaceFunction, g: PhaseSpaceFunction, ht: HbarTheta, check: bool) -> None:
    if f.grid != g.grid:
        raise DimensionError("factors live on different grids")
    if ht.ndof != f.grid.ndof:
        raise DimensionError(f"theta is for {ht.ndof} degrees of freedom, grid has {f.grid.ndof}")
    if check:
        f.check_decay()
        g.check_decay()


def spectral_derivative(f: PhaseSpaceFunction, orders) -> np.ndarray:
    """``d^alpha f`` by FFT; odd-order Nyquist modes are dropped."""
    grid = f.grid
    orders = tuple(int(o) for o in orders)
    if len(orders) != len(grid.points) or any(o < 0 for o in orders):
        raise ContractViolation("one non-negative derivative order per axis required")
    if not any(orders):
        return np.array(f.samples)
    coeffs = np.fft.fftn(f.samples)
    for ax, o in enumerate(orders):
        if o == 0:
            continue
        xi = grid.frequencies(ax)
        factor = (2j * np.pi * xi) ** o
        if o % 2:
            factor[grid.points[ax] // 2] = 0.0
        shape = [1] * coeffs.ndim
        shape[ax] = -1
        coeffs = coeffs * factor.reshape(shape)
    return np.fft.ifftn(coeffs)


class _DerivCache:
    def __init__(self, f: PhaseSpaceFunction):
        self.f = f
        self.cache: dict = {}

    def __getitem__(self, alpha) -> np.ndarray:
        alpha = tuple(alpha)
        if alpha not in self.cache:
            self.cache[alpha] = spectral_derivative(self.f, alpha)
        return self.cache[alpha]


def moyal_product_integral(
    f: PhaseSpaceFunction, g: PhaseSpaceFunction, ht: HbarTheta, check: bool = True
) -> PhaseSpaceFunction:
    """Oscillatory-integral Moyal product on the grid.

    For ``Theta = [[0, B], [-B^T, 0]]`` the double integral reduces to

        sum_{eta, zeta} e^{2 pi i (eta + zeta).p} F(q - hbar B zeta, eta) G(q + hbar B eta, zeta),

    with ``F``, ``G`` the Fourier transforms of ``f``, ``g`` over the momentum
    axes.  Position shifts are Fourier interpolations, so each term costs a
    few FFTs and the whole product ``O(N^{3n} log N)``.
    """
    _check_pair(f, g, ht, check)
    grid = f.grid
    n = grid.ndof
    b = ht.hbar * ht.offdiagonal_block()
    qax = tuple(range(n))
    pax = tuple(range(n, 2 * n))
    pshape = grid.points[n:]
    xi_q = np.stack(np.meshgrid(*(grid.frequencies(i) for i in qax), indexing="ij"), axis=-1)
    eta_p = np.stack(np.meshgrid(*(grid.frequencies(i) for i in pax), indexing="ij"), axis=-1)

    fq = np.fft.fftn(np.fft.fftn(f.samples, axes=pax), axes=qax)  # (xi_q, eta_p)
    gp = np.fft.fftn(g.samples, axes=pax)  # (q, zeta_p)
    gq = np.fft.fftn(gp, axes=qax)  # (xi_q, zeta_p)

    # phase for shifting g along q by hbar*B*eta_p, indexed (xi_q, eta_p)
    shift_g = np.einsum("ab,...b->...a", b, eta_p)  # (eta_p..., n)
    phase_g = np.exp(2j * np.pi * np.tensordot(xi_q, shift_g, axes=([-1], [-1])))

    pnorm = float(np.prod(pshape))
    pgrid = np.stack(
        np.meshgrid(*(np.arange(p) / p for p in pshape), indexing="ij"), axis=-1
    )  # j/N per momentum axis
    out = np.zeros(grid.shape, dtype=np.complex128)
    for k in itertools.product(*(range(p) for p in pshape)):
        gcol = gq[(Ellipsis,) + k]  # (xi_q...)
        if not np.any(gcol):
            continue
        zeta = eta_p[k]
        s_f = b @ zeta
        phase_f = np.exp(-2j * np.pi * np.tensordot(xi_q, s_f, axes=([-1], [0])))
        a_k = np.fft.ifftn(fq * phase_f[(...,) + (None,) * n], axes=qax)
        b_k = np.fft.ifftn(gcol[(...,) + (None,) * n] * phase_g, axes=qax)
        inner = np.fft.ifftn(a_k * b_k, axes=pax)  # sum_eta e^{2 pi i eta.p} / N_p
        kphase = np.exp(2j * np.pi * (pgrid @ np.array(k, dtype=float)))
        out += inner * kphase
    return PhaseSpaceFunction(grid, out / pnorm)


def _multi_indices(dim: int, total: int):
    for combo in itertools.combinations_with_replacement(range(dim), total):
        alpha = [0] * dim
        for c in combo:
            alpha[c] += 1
        yield tuple(alpha)


def moyal_product_asymptotic(
    f: PhaseSpaceFunction, g: PhaseSpaceFunction, ht: HbarTheta, order: int, check: bool = True
) -> PhaseSpaceFunction:
    """Truncated ``hbar`` series of the integral product.

    ``sum_{|alpha| <= order} c^{|alpha|} / alpha! (-1)^{<alpha>} d^alpha f d^{alpha~} g``
    where ``|alpha| = alpha_1 + ... + alpha_2n``, ``<alpha>`` sums the
    momentum components, ``alpha~`` swaps the position and momentum halves,
    and ``c = i hbar s / (2 pi)`` for ``Theta = s [[0, I], [-I, 0]]``.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ContractViolation(f"order must be in 0..{MAX_ORDER}")
    _check_pair(f, g, ht, check)
    n = f.grid.ndof
    c = 1j * ht.hbar * ht.symplectic_scale() / (2 * math.pi)
    df, dg = _DerivCache(f), _DerivCache(g)
    out = np.zeros(f.grid.shape, dtype=np.complex128)
    for r in range(order + 1):
        for alpha in _multi_indices(2 * n, r):
            swapped = alpha[n:] + alpha[:n]
            sign = (-1) ** sum(alpha[n:])
            coeff = c**r * sign / math.prod(math.factorial(a) for a in alpha)
            out += coeff * df[alpha] * dg[swapped]
    return PhaseSpaceFunction(f.grid, out)


def _bidifferential_power(theta: np.ndarray, r: int) -> dict:
    """Coefficients of ``(Theta_jk u_j v_k)^r`` keyed by ``(alpha, beta)`` exponent tuples."""
    dim = theta.shape[0]
    poly = {((0,) * dim, (0,) * dim): 1.0}
    for _ in range(r):
        nxt: dict = {}
        for (a, b), coeff in poly.items():
            for j in range(dim):
                for k in range(dim):
                    t = theta[j, k]
                    if t == 0.0:
                        continue
                    a2 = a[:j] + (a[j] + 1,) + a[j + 1:]
                    b2 = b[:k] + (b[k] + 1,) + b[k + 1:]
                    nxt[(a2, b2)] = nxt.get((a2, b2), 0.0) + coeff * t
        poly = nxt
    return poly


def twist_product(
    f: PhaseSpaceFunction, g: PhaseSpaceFunction, ht: HbarTheta, order: int, check: bool = True
) -> PhaseSpaceFunction:
    """``m[exp(i hbar Theta_jk d_j (x) d_k / 2)(f (x) g)]`` truncated at ``order`` derivatives per factor.

    Works for any skew-symmetric ``Theta``.  Equal to
    ``moyal_product_asymptotic`` with ``hbar`` multiplied by ``TWIST_TO_INTEGRAL``.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ContractViolation(f"order must be in 0..{MAX_ORDER}")
    _check_pair(f, g, ht, check)
    c = 0.5j * ht.hbar
    df, dg = _DerivCache(f), _DerivCache(g)
    out = np.zeros(f.grid.shape, dtype=np.complex128)
    for r in range(order + 1):
        if r and c == 0:
            break
        for (alpha, beta), coeff in _bidifferential_power(ht.theta, r).items():
            out += (c**r / math.factorial(r)) * coeff * df[alpha] * dg[beta]
    return PhaseSpaceFunction(f.grid, out)


def poisson_bracket(f: PhaseSpaceFunction, g: PhaseSpaceFunction, check: bool = True) -> PhaseSpaceFunction:
    """``sum_i d_{q_i} f d_{p_i} g - d_{p_i} f d_{q_i} g`` with spectral derivatives."""
    if f.grid != g.grid:
        raise DimensionError("factors live on different grids")
    if check:
        f.check_decay()
        g.check_decay()
    n = f.grid.ndof
    dim = 2 * n
    out = np.zeros(f.grid.shape, dtype=np.complex128)
    for i in range(n):
        eq = tuple(int(a == i) for a in range(dim))
        ep = tuple(int(a == i + n) for a in range(dim))
        out += spectral_derivative(f, eq) * spectral_derivative(g, ep)
        out -= spectral_derivative(f, ep) * spectral_derivative(g, eq)
    return PhaseSpaceFunction(f.grid, out)


def interior_sup(h, fraction: float = 0.5) -> float:
    """Sup norm over the central ``fraction`` of every axis."""
    if isinstance(h, PhaseSpaceFunction):
        return float(np.abs(h.samples[h.grid.interior(fraction)]).max())
    h = np.asarray(h)
    sl = []
    for p in h.shape:
        keep = int(round(p * fraction))
        start = (p - keep) // 2
        sl.append(slice(start, start + keep))
    return float(np.abs(h[tuple(sl)]).max())


def empirical_orders(hbars, errors) -> np.ndarray:
    """Convergence orders ``log(e_i / e_{i+1}) / log(h_i / h_{i+1})`` between successive runs."""
    h = np.asarray(hbars, dtype=float)
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


def moyal_convergence_study(
    f: PhaseSpaceFunction, g: PhaseSpaceFunction, hbars, series_order: int = 4
) -> dict:
    """Interior errors of the integral product under a sequence of ``hbar`` values.

    Returns, per ``hbar``: the commutative defect ``||f*g - fg||``, the
    antisymmetric defect ``||(f*g - g*f)/(i hbar) - {f,g}/pi||`` and the gap to
    the asymptotic series of order ``series_order``, plus the successive
    empirical orders of each.
    """
    hbars = [float(h) for h in hbars]
    pb = poisson_bracket(f, g).samples / math.pi
    fg = f.samples * g.samples
    rows = []
    for h in hbars:
        ht = HbarTheta(h, ndof=f.grid.ndof)
        fstar = moyal_product_integral(f, g, ht).samples
        gstar = moyal_product_integral(g, f, ht).samples
        series = moyal_product_asymptotic(f, g, ht, series_order).samples
        rows.append(
            (
                interior_sup(fstar - fg),
                interior_sup((fstar - gstar) / (1j * h) - pb),
                interior_sup(fstar - series),
            )
        )
    errs = np.array(rows)
    return {
        "hbar": hbars,
        "commutative": errs[:, 0].tolist(),
        "antisymmetric": errs[:, 1].tolist(),
        "series_gap": errs[:, 2].tolist(),
        "commutative_order": empirical_orders(hbars, errs[:, 0]).tolist(),
        "antisymmetric_order": empirical_orders(hbars, errs[:, 1]).tolist(),
        "series_gap_order": empirical_orders(hbars, errs[:, 2]).tolist(),
    }
