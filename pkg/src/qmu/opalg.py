"""Dense complex operator algebra for finite-dimensional quantum models.

Operators are plain square ``numpy`` arrays of ``complex128``; the validators
below are the construction boundary for Hermitian operators, density
operators and unitaries.  Tolerances are build-time constants, not knobs.
"""

from __future__ import annotations

import numpy as np

# Validation tolerances (absolute unless noted).
TOL_HERM = 1e-12          # per-entry Hermiticity
TOL_TRACE = 1e-12         # trace-one for density operators
TOL_PSD = 1e-12           # eigenvalue floor for positivity
TOL_UNITARY = 1e-10       # Frobenius norm of U^dag U - 1
TOL_EIG = 1e-10           # spectral reconstruction / orthonormality

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


def as_complex_matrix(a) -> np.ndarray:
    """Coerce to a square complex matrix with finite entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("matrix has non-finite entries")
    return m


def check_hermitian(a, tol: float = TOL_HERM) -> np.ndarray:
    m = as_complex_matrix(a)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return m


def check_density(rho) -> np.ndarray:
    """Validate a density operator: Hermitian, trace one, positive."""
    m = check_hermitian(rho)
    tr = np.trace(m).real
    if abs(tr - 1.0) > TOL_TRACE:
        raise ValueError(f"density operator has trace {tr!r}, expected 1")
    evals = np.linalg.eigvalsh(m)
    if evals.min() < -TOL_PSD:
        raise ValueError(f"density operator has negative eigenvalue {evals.min():.3e}")
    return m


def check_unitary(u) -> np.ndarray:
    m = as_complex_matrix(u)
    dev = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]))
    if dev > TOL_UNITARY:
        raise ValueError(f"matrix is not unitary (||U^dag U - 1|| = {dev:.3e})")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def expectation(op: np.ndarray, rho: np.ndarray) -> float:
    """Real expectation value tr(rho op) for Hermitian op."""
    return float(np.einsum("ij,ji->", rho, op).real)


def eig_hermitian(op) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix with a fixed phase convention.

    Returns ascending eigenvalues and orthonormal eigenvector columns; each
    column's largest-magnitude component is made real positive so the output
    is deterministic up to degenerate-block rotations.
    """
    m = check_hermitian(op)
    evals, evecs = np.linalg.eigh(m)
    for k in range(evecs.shape[1]):
        idx = int(np.argmax(np.abs(evecs[:, k])))
        pivot = evecs[idx, k]
        if abs(pivot) > 0:
            evecs[:, k] *= pivot.conj() / abs(pivot)
    return evals, evecs


def tensor(a, b) -> np.ndarray:
    """Kronecker product, object factor first: index (i_obj, i_probe)."""
    return np.kron(as_complex_matrix(a), as_complex_matrix(b))


def partial_trace(op, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Trace out one tensor factor of an operator on a bipartite space.

    ``dims = (d_obj, d_probe)`` with object-major flattening; ``keep`` is the
    index (0 or 1) of the factor to retain.
    """
    m = as_complex_matrix(op)
    d0, d1 = dims
    if d0 * d1 != m.shape[0]:
        raise ValueError(f"dims {dims} inconsistent with matrix dimension {m.shape[0]}")
    if keep not in (0, 1):
        raise ValueError("keep must be 0 (object) or 1 (probe)")
    four = m.reshape(d0, d1, d0, d1)
    if keep == 0:
        return np.einsum("ikjk->ij", four)
    return np.einsum("kikj->ij", four)


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def bloch_operator(v) -> np.ndarray:
    """v . sigma for a real 3-vector v."""
    v = np.asarray(v, dtype=float)
    return v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z


def bloch_state(r) -> np.ndarray:
    """Qubit density operator (1 + r.sigma)/2, ||r|| <= 1."""
    r = np.asarray(r, dtype=float)
    if np.linalg.norm(r) > 1 + 1e-12:
        raise ValueError("Bloch vector lies outside the unit ball")
    return 0.5 * (np.eye(2, dtype=complex) + bloch_operator(r))


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random pure state vector."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase fixing."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r).copy()
    ph /= np.abs(ph)
    return q * ph


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density operator as a mixture of Haar pure states."""
    rank = dim if rank is None else rank
    weights = rng.dirichlet(np.ones(rank))
    rho = np.zeros((dim, dim), dtype=complex)
    for w in weights:
        rho += w * projector(haar_state(dim, rng))
    return 0.5 * (rho + rho.conj().T)


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * 0.5 * (z + z.conj().T)
