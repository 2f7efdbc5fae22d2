"""Dense complex linear algebra kernel.

Operators are plain ``numpy`` arrays of dtype ``complex128``. Tensor products
follow the usual convention: in ``kron(A, B)`` the left factor is the slow
index, so the basis vector ``|a>|b>`` sits at position ``a * dB + b``.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

#: relative singular-value threshold used for ranks and null spaces
RANK_TOL = 1e-9


class InputError(ValueError):
    """Raised when an operator or document does not meet a precondition."""


class HermitianEig(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Convert ``M`` to a finite 2-d complex array or raise :class:`InputError`."""
    arr = np.asarray(M, dtype=complex)
    if arr.ndim != 2 or arr.size == 0:
        raise InputError(f"{name} must be a nonempty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr


def _square(M, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(M, name)
    if arr.shape[0] != arr.shape[1]:
        raise InputError(f"{name} must be square, got shape {arr.shape}")
    return arr


def dagger(M: np.ndarray) -> np.ndarray:
    return np.conj(M).T


def operator_norm(M) -> float:
    """Largest singular value of ``M``."""
    arr = as_matrix(M)
    return float(np.linalg.norm(arr, 2))


def trace_norm(M) -> float:
    """Sum of the singular values of a square matrix."""
    arr = _square(M)
    return float(np.sum(np.linalg.svd(arr, compute_uv=False)))


def kron(*factors) -> np.ndarray:
    """Kronecker product of one or more matrices (left factor slowest)."""
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return out


def partial_trace(M, dims: tuple[int, int], which: int | str) -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    Parameters
    ----------
    M : (dA*dB, dA*dB) array
    dims : (dA, dB)
    which : 0, 1, ``"A"`` or ``"B"``
        The factor that is traced *out*.
    """
    arr = _square(M)
    dA, dB = (int(d) for d in dims)
    if arr.shape[0] != dA * dB:
        raise InputError(f"operator of size {arr.shape[0]} does not match dims {dA}x{dB}")
    t = arr.reshape(dA, dB, dA, dB)
    if which in (0, "A", "a"):
        return np.einsum("abac->bc", t)
    if which in (1, "B", "b"):
        return np.einsum("abcb->ac", t)
    raise InputError(f"unknown factor selector {which!r}")


def swap_factors(M, dims: tuple[int, int]) -> np.ndarray:
    """Conjugate a bipartite operator by the swap, ``C^dA (x) C^dB -> C^dB (x) C^dA``."""
    dA, dB = dims
    t = np.asarray(M).reshape(dA, dB, dA, dB)
    return t.transpose(1, 0, 3, 2).reshape(dA * dB, dA * dB)


def nullspace(L, tol: float = RANK_TOL, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical null space of ``L``.

    A right singular vector belongs to the null space when its singular value
    is at most ``tol * scale``; ``scale`` defaults to ``||L||``. Pass an
    explicit scale when ``L`` may vanish up to rounding. Returns an ``(n, k)``
    array, ``k`` possibly 0.
    """
    if tol <= 0:
        raise InputError("tol must be positive")
    arr = as_matrix(L)
    n = arr.shape[1]
    if arr.shape[0] > 2 * n:
        # compress tall matrices first; R has the same right singular vectors
        arr = np.linalg.qr(arr, mode="r")
    _, s, vh = np.linalg.svd(arr, full_matrices=True)
    top = s[0] if s.size else 0.0
    ref = top if scale is None else scale
    if top == 0.0 or top <= tol * ref:
        return np.eye(n, dtype=complex)
    rank = int(np.sum(s > tol * ref))
    return np.conj(vh[rank:]).T


def eig_hermitian(M) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    arr = _square(M)
    scale = max(np.abs(arr).max(), 1e-300)
    if np.abs(arr - dagger(arr)).max() > 1e-10 * scale * arr.shape[0]:
        raise InputError("matrix is not Hermitian")
    w, v = np.linalg.eigh((arr + dagger(arr)) / 2)
    return HermitianEig(w, v)


def hs_inner(A, B) -> complex:
    """Hilbert-Schmidt inner product ``Tr(A^dagger B)``."""
    a = as_matrix(A, "A")
    b = as_matrix(B, "B")
    if a.shape != b.shape:
        raise InputError(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return (M + dagger(M)) / 2


def psd_sqrt(M: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(M))
    return (v * np.sqrt(np.clip(w, 0, None))) @ dagger(v)


def extend_orthonormal(
    basis: list[np.ndarray], vectors: Sequence[np.ndarray], tol: float
) -> list[np.ndarray]:
    """Gram-Schmidt ``vectors`` against ``basis`` (in place), keeping new directions.

    A candidate is kept when its residual norm exceeds ``tol`` times its own
    norm. Two orthogonalization passes keep pairwise overlaps near machine
    precision. Returns the list of newly added unit vectors.
    """
    added = []
    for v in vectors:
        v = np.asarray(v, dtype=complex).ravel()
        norm0 = np.linalg.norm(v)
        if norm0 == 0:
            continue
        r = v.copy()
        if basis:
            Q = np.array(basis)
            for _ in range(2):
                r = r - Q.T @ (np.conj(Q) @ r)
        nr = np.linalg.norm(r)
        if nr > tol * norm0:
            u = r / nr
            basis.append(u)
            added.append(u)
    return added


def orthonormal_columns(M: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column space of ``M`` (SVD based)."""
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    return u[:, s > tol * s[0]]


def polar_unitary(T: np.ndarray) -> np.ndarray:
    """Unitary factor of the polar decomposition ``T = U |T|``."""
    u, _, vh = np.linalg.svd(T)
    return u @ vh


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ``d x d`` unitary (QR of a Ginibre matrix, phase fixed)."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def haar_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return haar_unitary(rows, rng)[:, :cols]


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    return hermitian_part(random_matrix(d, d, rng))


def ket(d: int, k: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[k] = 1
    return v


def unit(d: int, k: int, l: int) -> np.ndarray:
    """Matrix unit ``|k><l|``."""
    m = np.zeros((d, d), dtype=complex)
    m[k, l] = 1
    return m


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
