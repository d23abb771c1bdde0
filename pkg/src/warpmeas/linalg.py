"""Dense complex linear algebra on finite-dimensional Hilbert spaces.

Operators, states and densities are plain ``numpy`` arrays of dtype
``complex128``.  The helpers here validate them, build tensor products,
diagonalize Hermitian matrices and exponentiate them through their spectral
decomposition, and reduce composite-system operators to the system factor.

Structural predicates compare a Frobenius-norm defect against
``tol * (1 + ||a||_F)`` so that the same tolerance works for matrices of
very different magnitude.
"""

from __future__ import annotations

import numpy as np

from .errors import CapacityError, ContractViolation, DimensionError

__all__ = [
    "MAX_COMPOSITE_DIM",
    "as_operator",
    "is_hermitian",
    "is_unitary",
    "is_positive",
    "is_projection",
    "state_vector",
    "density_operator",
    "pure_density",
    "tensor",
    "herm_eig",
    "expi",
    "partial_expectation",
    "partial_trace",
    "frob_distance",
    "commutator",
    "random_hermitian",
    "random_unitary",
    "random_density",
    "random_state",
]

MAX_COMPOSITE_DIM = 4096

STRUCT_TOL = 1e-10


def _scale(a: np.ndarray) -> float:
    return 1.0 + float(np.linalg.norm(a))


def as_operator(a, name: str = "operator") -> np.ndarray:
    """Return ``a`` as a square complex matrix, rejecting NaN/Inf."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} has non-finite entries")
    return arr


def is_hermitian(a, tol: float = STRUCT_TOL) -> bool:
    a = as_operator(a)
    return float(np.linalg.norm(a - a.conj().T)) <= tol * _scale(a)


def is_unitary(a, tol: float = STRUCT_TOL) -> bool:
    a = as_operator(a)
    eye = np.eye(a.shape[0])
    return float(np.linalg.norm(a.conj().T @ a - eye)) <= tol * np.sqrt(a.shape[0])


def is_positive(a, tol: float = STRUCT_TOL) -> bool:
    a = as_operator(a)
    if not is_hermitian(a, tol):
        return False
    lam = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    return float(lam.min()) >= -tol * _scale(a)


def is_projection(a, tol: float = STRUCT_TOL) -> bool:
    a = as_operator(a)
    return is_hermitian(a, tol) and float(np.linalg.norm(a @ a - a)) <= tol * _scale(a)


def state_vector(amplitudes) -> np.ndarray:
    """Normalize ``amplitudes`` to a unit vector."""
    v = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    nrm = np.linalg.norm(v)
    if v.size == 0 or not np.isfinite(nrm) or nrm == 0.0:
        raise ContractViolation("state vector must be finite and non-zero")
    return v / nrm


def density_operator(rho, tol: float = STRUCT_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, positive semidefinite, unit trace."""
    rho = as_operator(rho, "density")
    if not is_hermitian(rho, tol):
        raise ContractViolation("density operator is not Hermitian")
    rho = 0.5 * (rho + rho.conj().T)
    if float(np.linalg.eigvalsh(rho).min()) < -tol:
        raise ContractViolation("density operator is not positive semidefinite")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ContractViolation(f"density operator has trace {np.trace(rho).real:.3g}, expected 1")
    return rho


def pure_density(psi) -> np.ndarray:
    psi = state_vector(psi)
    return np.outer(psi, psi.conj())


def tensor(a, b, max_dim: int = MAX_COMPOSITE_DIM) -> np.ndarray:
    """Kronecker product ``a (x) b`` with the composite index ``i_a * dim_b + i_b``."""
    a = as_operator(a)
    b = as_operator(b)
    dim = a.shape[0] * b.shape[0]
    if dim > max_dim:
        raise CapacityError(f"composite dimension {dim} exceeds maximum {max_dim}")
    return np.kron(a, b)


def herm_eig(h, tol: float = STRUCT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    values : ndarray
        Real eigenvalues in ascending order.
    vectors : ndarray
        Unitary matrix whose columns are the corresponding eigenvectors, so
        that ``h = vectors @ diag(values) @ vectors^dagger``.
    """
    h = as_operator(h)
    if not is_hermitian(h, tol):
        raise ContractViolation("herm_eig requires a Hermitian operator")
    return np.linalg.eigh(0.5 * (h + h.conj().T))


def expi(h, t: float) -> np.ndarray:
    """``exp(-i t h)`` for Hermitian ``h``, computed spectrally."""
    values, vectors = herm_eig(h)
    phases = np.exp(-1j * float(t) * values)
    return (vectors * phases) @ vectors.conj().T


def _split(b: np.ndarray, dim_h: int, dim_k: int) -> np.ndarray:
    if b.shape[0] != dim_h * dim_k:
        raise DimensionError(
            f"composite operator has dimension {b.shape[0]}, expected {dim_h}*{dim_k}"
        )
    return b.reshape(dim_h, dim_k, dim_h, dim_k)


def partial_expectation(b, omega_k) -> np.ndarray:
    """Evaluate the second tensor factor of ``b`` in the state ``omega_k``.

    Returns the operator ``M`` on the first factor with
    ``<psi|M psi'> = tr[(|psi'><psi| (x) omega_k) b]``; this is the map
    ``B -> (id (x) omega_k)(B)``.  The dimension of the first factor is
    inferred from ``dim(b) / dim(omega_k)``.
    """
    b = as_operator(b, "composite operator")
    omega_k = as_operator(omega_k, "probe state")
    dim_k = omega_k.shape[0]
    if b.shape[0] % dim_k:
        raise DimensionError(f"dimension {b.shape[0]} is not a multiple of {dim_k}")
    blocks = _split(b, b.shape[0] // dim_k, dim_k)
    return np.einsum("ikjl,lk->ij", blocks, omega_k)


def partial_trace(b, dim_h: int, dim_k: int) -> np.ndarray:
    """Trace out the second factor of an operator on ``C^dim_h (x) C^dim_k``."""
    blocks = _split(as_operator(b), dim_h, dim_k)
    return np.einsum("ikjk->ij", blocks)


def frob_distance(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


# Random instances.  All generators take an explicit ``numpy.random.Generator``;
# the package uses ``numpy.random.default_rng(seed)`` (PCG64) everywhere.

def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = 0.5 * (g + g.conj().T)
    return scale * h / np.sqrt(n)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    return state_vector(rng.normal(size=n) + 1j * rng.normal(size=n))


def random_density(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real
