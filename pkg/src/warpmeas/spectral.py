"""Spectral measures, outcome sets and POVMs at finite dimension.

A :class:`SpectralMeasure` is a finite list of atoms ``(value, projection)``.
For a single Hermitian operator the values are reals; joint measures of
commuting families or of tensor products carry value tuples, stored as rows
of a 2-D array.  Distinct tuples are never merged even when some function of
them (such as the product ``x*y``) coincides.

A :class:`Povm` is a finite family of effects indexed by hashable labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, ContractViolation, DimensionError
from .linalg import MAX_COMPOSITE_DIM, STRUCT_TOL, as_operator, commutator, herm_eig

__all__ = [
    "DEFAULT_BIN_TOL",
    "Interval",
    "OutcomeSet",
    "SpectralMeasure",
    "Povm",
    "PovmReport",
    "spectral_measure",
    "joint_spectral_measure",
    "project",
    "joint_product_measure",
    "povm_validate",
    "is_pvm",
    "smear_povm",
]

DEFAULT_BIN_TOL = 1e-8


# ---------------------------------------------------------------------------
# Outcome sets


@dataclass(frozen=True, order=True)
class Interval:
    """An interval of the real line with independently open/closed ends.

    A single point ``p`` is the closed interval ``[p, p]``.
    """

    lo: float
    hi: float
    closed_lo: bool = True
    closed_hi: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise ContractViolation(f"interval with lo={self.lo} > hi={self.hi}")

    @property
    def empty(self) -> bool:
        return self.lo == self.hi and not (self.closed_lo and self.closed_hi)

    def __contains__(self, x: float) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.closed_lo:
            return False
        if x == self.hi and not self.closed_hi:
            return False
        return True


class OutcomeSet:
    """A finite union of real intervals.

    Half-open intervals ``[a, b)`` are the default building block.  Finite
    point sets (for integer or cyclic outcome spaces) are unions of
    degenerate closed intervals.  The union is kept in a normalized form of
    disjoint, sorted pieces, so complements and unions are exact.
    """

    __slots__ = ("pieces",)

    def __init__(self, pieces: Iterable[Interval] = ()):
        self.pieces = _normalize([p for p in pieces if not p.empty])

    @classmethod
    def interval(cls, lo: float, hi: float, closed_lo: bool = True, closed_hi: bool = False):
        return cls([Interval(lo, hi, closed_lo, closed_hi)])

    @classmethod
    def points(cls, values: Iterable[float]):
        return cls([Interval(float(v), float(v), True, True) for v in values])

    @classmethod
    def everything(cls):
        return cls([Interval(-math.inf, math.inf, False, False)])

    @classmethod
    def empty_set(cls):
        return cls()

    @classmethod
    def greater_than(cls, x: float):
        return cls([Interval(x, math.inf, False, False)])

    def __contains__(self, x) -> bool:
        x = float(x)
        return any(x in p for p in self.pieces)

    def __or__(self, other: "OutcomeSet") -> "OutcomeSet":
        return OutcomeSet(self.pieces + other.pieces)

    def __and__(self, other: "OutcomeSet") -> "OutcomeSet":
        return ~(~self | ~other)

    def __invert__(self) -> "OutcomeSet":
        out = []
        lo, closed_lo = -math.inf, False
        for p in self.pieces:
            out.append(Interval(lo, p.lo, closed_lo, not p.closed_lo))
            lo, closed_lo = p.hi, not p.closed_hi
        out.append(Interval(lo, math.inf, closed_lo, False))
        # open ends at +-inf are never closed
        fixed = []
        for p in out:
            cl = p.closed_lo and math.isfinite(p.lo)
            ch = p.closed_hi and math.isfinite(p.hi)
            if p.lo < p.hi or (p.lo == p.hi and cl and ch):
                fixed.append(Interval(p.lo, p.hi, cl, ch))
        return OutcomeSet(fixed)

    def isdisjoint(self, other: "OutcomeSet") -> bool:
        return not (self & other).pieces

    def __eq__(self, other) -> bool:
        return isinstance(other, OutcomeSet) and self.pieces == other.pieces

    def __hash__(self):
        return hash(tuple(self.pieces))

    def __repr__(self) -> str:
        def fmt(p):
            return f"{'[' if p.closed_lo else '('}{p.lo}, {p.hi}{']' if p.closed_hi else ')'}"

        return "OutcomeSet(" + " u ".join(fmt(p) for p in self.pieces) + ")"


def _normalize(pieces: list[Interval]) -> list[Interval]:
    pieces = sorted(pieces, key=lambda p: (p.lo, not p.closed_lo))
    merged: list[Interval] = []
    for p in pieces:
        if merged:
            q = merged[-1]
            touching = p.lo < q.hi or (p.lo == q.hi and (q.closed_hi or p.closed_lo))
            if touching:
                if p.hi > q.hi:
                    hi, closed_hi = p.hi, p.closed_hi
                elif p.hi == q.hi:
                    hi, closed_hi = q.hi, q.closed_hi or p.closed_hi
                else:
                    hi, closed_hi = q.hi, q.closed_hi
                merged[-1] = Interval(q.lo, hi, q.closed_lo, closed_hi)
                continue
        merged.append(p)
    return merged


# ---------------------------------------------------------------------------
# Spectral measures


@dataclass(frozen=True)
class SpectralMeasure:
    """Finite projection-valued measure.

    Attributes
    ----------
    values : ndarray, shape (m,) or (m, k)
        Atom values; one row per atom for value tuples.
    projections : ndarray, shape (m, d, d)
        Mutually orthogonal projections summing to the identity.
    """

    values: np.ndarray
    projections: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        projs = np.asarray(self.projections, dtype=np.complex128)
        if projs.ndim != 3 or projs.shape[1] != projs.shape[2]:
            raise DimensionError("projections must have shape (m, d, d)")
        if vals.shape[0] != projs.shape[0]:
            raise DimensionError("one value per projection required")
        vals.setflags(write=False)
        projs.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "projections", projs)

    @property
    def dim(self) -> int:
        return self.projections.shape[1]

    @property
    def natoms(self) -> int:
        return self.projections.shape[0]

    @property
    def joint(self) -> bool:
        return self.values.ndim == 2

    def __iter__(self):
        return iter(zip(self.values, self.projections))

    def ranks(self) -> np.ndarray:
        return np.rint(np.einsum("mii->m", self.projections).real).astype(int)

    def operator(self, component: int | None = None) -> np.ndarray:
        """Reconstruct ``sum value * projection`` (one tuple component for joint measures)."""
        vals = self.values
        if self.joint:
            if component is None:
                raise ContractViolation("joint measure needs a tuple component to reconstruct")
            vals = vals[:, component]
        return np.einsum("m,mij->ij", vals, self.projections)

    def function(self, fn: Callable) -> np.ndarray:
        """Functional calculus ``sum fn(value) * projection``."""
        weights = np.array([fn(v) for v in self.values], dtype=np.complex128)
        return np.einsum("m,mij->ij", weights, self.projections)

    def check(self, tol: float = STRUCT_TOL) -> None:
        """Raise if the atoms are not orthogonal projections summing to identity."""
        eye = np.eye(self.dim)
        total = self.projections.sum(axis=0)
        if np.linalg.norm(total - eye) > tol * np.sqrt(self.dim):
            raise ContractViolation("projections do not sum to the identity")
        for i, p in enumerate(self.projections):
            if np.linalg.norm(p @ p - p) > tol * (1 + np.linalg.norm(p)):
                raise ContractViolation(f"atom {i} is not idempotent")
            if np.linalg.norm(p - p.conj().T) > tol * (1 + np.linalg.norm(p)):
                raise ContractViolation(f"atom {i} is not Hermitian")
        for i in range(self.natoms):
            for j in range(i + 1, self.natoms):
                if np.linalg.norm(self.projections[i] @ self.projections[j]) > tol:
                    raise ContractViolation(f"atoms {i} and {j} are not orthogonal")


def _group_sorted(values: np.ndarray, tol: float) -> list[list[int]]:
    """Chain ascending values into groups whose neighbours differ by at most ``tol``."""
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        if groups and v - values[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def spectral_measure(x, bin_tol: float = DEFAULT_BIN_TOL) -> SpectralMeasure:
    """Spectral measure of a Hermitian matrix.

    Eigenvalues closer than ``bin_tol * (1 + max|lambda|)`` are merged
    (transitively) into a single atom whose value is their mean.
    """
    values, vectors = herm_eig(x)
    tol = bin_tol * (1.0 + float(np.abs(values).max()))
    atoms_v, atoms_p = [], []
    for grp in _group_sorted(values, tol):
        v = vectors[:, grp]
        atoms_v.append(values[grp].mean())
        atoms_p.append(v @ v.conj().T)
    return SpectralMeasure(np.array(atoms_v), np.array(atoms_p))


def _check_commuting(ops: Sequence[np.ndarray], tol: float, what: str) -> None:
    scale = 1.0 + max(float(np.linalg.norm(o)) for o in ops)
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            c = float(np.linalg.norm(commutator(ops[i], ops[j])))
            if c > tol * scale:
                raise ContractViolation(
                    f"{what}: operators {i} and {j} do not commute (||[A,B]||_F = {c:.3e})"
                )


def joint_spectral_measure(
    ops: Sequence, bin_tol: float = DEFAULT_BIN_TOL, commute_tol: float = 1e-9
) -> SpectralMeasure:
    """Joint spectral measure of a commuting family of Hermitian matrices.

    The carrier space is refined one operator at a time: each current block
    (an orthonormal frame) is split along the binned eigenspaces of the next
    operator compressed to that block.  Degenerate eigenspaces of earlier
    operators therefore never mix eigenvectors of later ones.  The value of
    an atom is the tuple of block-averaged expectations.
    """
    ops = [as_operator(o) for o in ops]
    if not ops:
        raise ContractViolation("empty operator family")
    d = ops[0].shape[0]
    if any(o.shape[0] != d for o in ops):
        raise DimensionError("operators in a family must share one dimension")
    _check_commuting(ops, commute_tol, "joint_spectral_measure")
    frames = [np.eye(d, dtype=np.complex128)]
    for op in ops:
        tol = bin_tol * (1.0 + float(np.linalg.norm(op, 2)))
        refined = []
        for frame in frames:
            compressed = frame.conj().T @ op @ frame
            vals, vecs = np.linalg.eigh(0.5 * (compressed + compressed.conj().T))
            for grp in _group_sorted(vals, tol):
                refined.append(frame @ vecs[:, grp])
        frames = refined
    values, projs = [], []
    for frame in frames:
        p = frame @ frame.conj().T
        r = frame.shape[1]
        values.append([float(np.trace(p @ o).real) / r for o in ops])
        projs.append(p)
    order = np.lexsort(np.array(values).T[::-1])
    return SpectralMeasure(np.array(values)[order], np.array(projs)[order])


def project(e: SpectralMeasure, delta) -> np.ndarray:
    """Projection ``E(delta)``: sum of atoms whose value lies in ``delta``.

    ``delta`` is an :class:`OutcomeSet` for scalar measures, or any callable
    predicate on the atom value (scalar or tuple).
    """
    if isinstance(delta, OutcomeSet):
        if e.joint:
            raise ContractViolation("OutcomeSet selects scalar values; pass a predicate for tuples")
        pred = delta.__contains__
    elif callable(delta):
        pred = delta
    else:
        raise ContractViolation("delta must be an OutcomeSet or a predicate")
    out = np.zeros((e.dim, e.dim), dtype=np.complex128)
    for v, p in e:
        if pred(v if e.joint else float(v)):
            out = out + p
    return out


def joint_product_measure(
    ex: SpectralMeasure, ey: SpectralMeasure, max_dim: int = MAX_COMPOSITE_DIM
) -> SpectralMeasure:
    """Product measure on ``H (x) K`` with atoms ``((x, y), P_x (x) Q_y)``."""
    if ex.dim * ey.dim > max_dim:
        raise CapacityError(f"composite dimension {ex.dim * ey.dim} exceeds maximum {max_dim}")
    vx = ex.values.reshape(ex.natoms, -1)
    vy = ey.values.reshape(ey.natoms, -1)
    values = np.concatenate(
        [np.repeat(vx, ey.natoms, axis=0), np.tile(vy, (ex.natoms, 1))], axis=1
    )
    projs = np.einsum("aij,bkl->abikjl", ex.projections, ey.projections)
    d = ex.dim * ey.dim
    return SpectralMeasure(values, projs.reshape(ex.natoms * ey.natoms, d, d))


# ---------------------------------------------------------------------------
# POVMs


@dataclass(frozen=True)
class Povm:
    """Finite POVM: one effect per outcome label."""

    labels: tuple
    effects: np.ndarray

    def __post_init__(self):
        effects = np.asarray(self.effects, dtype=np.complex128)
        labels = tuple(self.labels)
        if effects.ndim != 3 or effects.shape[0] != len(labels):
            raise DimensionError("effects must have shape (len(labels), d, d)")
        if len(set(labels)) != len(labels):
            raise ContractViolation("duplicate outcome labels")
        effects.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "effects", effects)

    @classmethod
    def from_mapping(cls, effects: Mapping[Hashable, np.ndarray]) -> "Povm":
        labels = tuple(effects)
        return cls(labels, np.array([as_operator(effects[k]) for k in labels]))

    @classmethod
    def from_spectral_measure(cls, e: SpectralMeasure, labeler: Callable | None = None) -> "Povm":
        """The PVM of ``e``; ``labeler`` maps atom values to labels (atoms with equal labels merge)."""
        if labeler is None:
            labeler = (lambda v: tuple(float(c) for c in v)) if e.joint else float
        acc: dict = {}
        for v, p in e:
            lab = labeler(v)
            acc[lab] = acc[lab] + p if lab in acc else p.copy()
        return cls.from_mapping(acc)

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, label) -> np.ndarray:
        try:
            return self.effects[self.labels.index(label)]
        except ValueError:
            raise KeyError(label) from None

    def get(self, label, default=None):
        return self[label] if label in self.labels else default

    def effect(self, delta: Iterable) -> np.ndarray:
        """``E(delta)`` for a collection of labels."""
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for lab in delta:
            out = out + self[lab]
        return out

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.effects))


@dataclass(frozen=True)
class PovmReport:
    min_eigenvalue: float
    sub_identity_margin: float
    normalization_defect: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.min_eigenvalue >= -self.tol
            and self.sub_identity_margin >= -self.tol
            and self.normalization_defect <= self.tol
        )

    def __bool__(self) -> bool:
        return self.passed


def povm_validate(p: Povm, tol: float = STRUCT_TOL) -> PovmReport:
    """Check ``0 <= E <= I`` for every effect and ``sum E = I``.

    ``min_eigenvalue`` is the smallest eigenvalue over all effects and
    ``sub_identity_margin`` the smallest eigenvalue of ``I - E``.
    """
    eye = np.eye(p.dim)
    lo, margin = math.inf, math.inf
    for eff in p.effects:
        h = 0.5 * (eff + eff.conj().T)
        lam = np.linalg.eigvalsh(h)
        lo = min(lo, float(lam[0]))
        margin = min(margin, 1.0 - float(lam[-1]))
        # non-Hermitian effects cannot be positive
        lo = min(lo, -float(np.linalg.norm(eff - eff.conj().T)))
    defect = float(np.linalg.norm(p.effects.sum(axis=0) - eye))
    return PovmReport(lo, margin, defect, tol)


def is_pvm(p: Povm, tol: float = STRUCT_TOL) -> bool:
    """True iff every effect is idempotent and distinct effects are orthogonal."""
    for i, a in enumerate(p.effects):
        if np.linalg.norm(a @ a - a) > tol:
            return False
        for b in p.effects[i + 1:]:
            if np.linalg.norm(a @ b) > tol:
                return False
    return True


def smear_povm(
    e: SpectralMeasure,
    kernel: Callable[[float], Mapping[Hashable, float]],
    labels: Sequence[Hashable] | None = None,
) -> Povm:
    """Unsharp observable ``E(label) = sum_x kernel(x)[label] * E^X({x})``.

    ``kernel(x)`` returns a probability distribution over labels for the atom
    value ``x``.  Labels are taken in the order given, or in order of first
    appearance.
    """
    rows = [dict(kernel(v)) for v in e.values]
    for v, row in zip(e.values, rows):
        w = np.array(list(row.values()), dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ContractViolation(f"kernel row for value {v} is not a probability distribution")
    if labels is None:
        seen: dict = {}
        for row in rows:
            for lab in row:
                seen.setdefault(lab, None)
        labels = tuple(seen)
    effects = np.zeros((len(labels), e.dim, e.dim), dtype=np.complex128)
    index = {lab: i for i, lab in enumerate(labels)}
    for row, proj in zip(rows, e.projections):
        for lab, w in row.items():
            if lab not in index:
                raise ContractViolation(f"kernel produced unknown label {lab!r}")
            effects[index[lab]] += w * proj
    return Povm(tuple(labels), effects)
