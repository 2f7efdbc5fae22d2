"""Finite-dimensional dagger-algebras and their projectors.

An algebra is stored through its block structure: a list of isometries
``U_i : C^dA_i (x) C^dB_i -> C^d`` with orthogonal ranges such that every
element has the form ``sum_i U_i (A_i (x) 1_dB_i) U_i^dagger``. The ``dA``
factor carries the algebra, ``dB`` its multiplicity. Swapping the two factors
in every block gives the commutant.

Algebras can also be handled in a purely linear way as an
:class:`OperatorBasis` (a Hilbert-Schmidt orthonormal spanning set);
:func:`structure_from_basis` recovers the block structure from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import Channel, make_channel
from .matcore import (
    RANK_TOL,
    InputError,
    as_matrix,
    dagger,
    extend_orthonormal,
    haar_unitary,
    nullspace,
    orthonormal_columns,
    polar_unitary,
)

#: defect allowed when checking that a span is closed under products/adjoints
CLOSURE_TOL = 1e-7
#: relative eigenvalue spacing below which eigenvalues are grouped together
GROUP_TOL = 1e-6
#: clusters closer than this (relative) make a sampled element ambiguous
SEPARATION_TOL = 1e-4
MAX_ATTEMPTS = 5


class NonUnitalError(InputError):
    """The algebra's unit is a proper projector, so its projectors are not channels."""


@dataclass(frozen=True, eq=False)
class Block:
    iso: np.ndarray
    dA: int
    dB: int

    @property
    def projector(self) -> np.ndarray:
        return self.iso @ dagger(self.iso)


@dataclass(frozen=True, eq=False)
class AlgebraStructure:
    ambient_dim: int
    blocks: tuple[Block, ...]

    def __post_init__(self):
        d = self.ambient_dim
        for b in self.blocks:
            if b.iso.shape != (d, b.dA * b.dB):
                raise InputError(
                    f"block isometry has shape {b.iso.shape}, expected {(d, b.dA * b.dB)}"
                )
        if self.blocks:
            U = np.hstack([b.iso for b in self.blocks])
            defect = np.abs(dagger(U) @ U - np.eye(U.shape[1])).max()
            if defect > 1e-8:
                raise InputError(f"block isometries are not orthonormal (defect {defect:.2e})")

    @property
    def dim(self) -> int:
        """Dimension of the algebra as a vector space."""
        return sum(b.dA**2 for b in self.blocks)

    @property
    def unit(self) -> np.ndarray:
        return sum((b.projector for b in self.blocks), np.zeros((self.ambient_dim,) * 2, complex))

    @property
    def is_unital(self) -> bool:
        return sum(b.dA * b.dB for b in self.blocks) == self.ambient_dim

    @property
    def shape(self) -> list[tuple[int, int]]:
        return [(b.dA, b.dB) for b in self.blocks]

    def __repr__(self) -> str:
        return f"AlgebraStructure(ambient_dim={self.ambient_dim}, blocks={self.shape})"


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    ambient_dim: int
    ops: tuple[np.ndarray, ...]
    _vecs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = self.ambient_dim
        vecs = np.array([np.asarray(o, complex).reshape(d * d) for o in self.ops]).reshape(-1, d * d)
        object.__setattr__(self, "_vecs", vecs)

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def vectors(self) -> np.ndarray:
        """``(k, d^2)`` array of row-major vectorized basis elements."""
        return self._vecs

    def project(self, X: np.ndarray) -> np.ndarray:
        v = np.asarray(X, complex).reshape(-1)
        return (self._vecs.T @ (np.conj(self._vecs) @ v)).reshape(X.shape)

    def contains(self, X: np.ndarray, tol: float = CLOSURE_TOL) -> bool:
        nx = np.linalg.norm(X)
        return bool(np.linalg.norm(X - self.project(X)) <= tol * max(nx, 1.0))


def _require_unital(alg: AlgebraStructure, what: str):
    if not alg.is_unital:
        raise NonUnitalError(f"{what} requires an algebra that is unital on the ambient space")


def _square_of(alg: AlgebraStructure, X) -> np.ndarray:
    X = as_matrix(X)
    d = alg.ambient_dim
    if X.shape != (d, d):
        raise InputError(f"operator must be {d}x{d}, got {X.shape}")
    return X


# -- construction helpers ----------------------------------------------------


def block_algebra(shape: Sequence[tuple[int, int]], ambient_dim: int | None = None) -> AlgebraStructure:
    """``(+)_i M_dA_i (x) 1_dB_i`` embedded on consecutive coordinates."""
    total = sum(a * b for a, b in shape)
    d = total if ambient_dim is None else ambient_dim
    if total > d:
        raise InputError("blocks do not fit in the ambient space")
    blocks, off = [], 0
    eye = np.eye(d, dtype=complex)
    for a, b in shape:
        blocks.append(Block(iso=eye[:, off : off + a * b], dA=a, dB=b))
        off += a * b
    return AlgebraStructure(d, tuple(blocks))


def full_algebra(d: int) -> AlgebraStructure:
    return block_algebra([(d, 1)])


def scalar_algebra(d: int) -> AlgebraStructure:
    return block_algebra([(1, d)])


def diagonal_algebra(d: int) -> AlgebraStructure:
    return block_algebra([(1, 1)] * d)


def conjugate(alg: AlgebraStructure, U: np.ndarray) -> AlgebraStructure:
    """The algebra ``U A U^dagger``."""
    return AlgebraStructure(
        alg.ambient_dim, tuple(Block(U @ b.iso, b.dA, b.dB) for b in alg.blocks)
    )


def code_algebra(V: np.ndarray) -> AlgebraStructure:
    """All operators on the range of the isometry ``V`` (a non-unital algebra)."""
    V = as_matrix(V, "isometry")
    return AlgebraStructure(V.shape[0], (Block(V, V.shape[1], 1),))


# -- elements and projectors -------------------------------------------------


def element_from_blocks(alg: AlgebraStructure, parts: Sequence) -> np.ndarray:
    """``sum_i U_i (A_i (x) 1) U_i^dagger``."""
    if len(parts) != len(alg.blocks):
        raise InputError(f"expected {len(alg.blocks)} block parts, got {len(parts)}")
    out = np.zeros((alg.ambient_dim,) * 2, dtype=complex)
    for b, A in zip(alg.blocks, parts):
        A = as_matrix(A, "block part")
        if A.shape != (b.dA, b.dA):
            raise InputError(f"block part must be {b.dA}x{b.dA}, got {A.shape}")
        out += b.iso @ np.kron(A, np.eye(b.dB)) @ dagger(b.iso)
    return out


def block_parts(alg: AlgebraStructure, X) -> list[np.ndarray]:
    """The ``dA x dA`` parts of ``P_A(X)``: ``Tr_B(U_i^dagger X U_i) / dB_i``."""
    X = _square_of(alg, X)
    parts = []
    for b in alg.blocks:
        Y = (dagger(b.iso) @ X @ b.iso).reshape(b.dA, b.dB, b.dA, b.dB)
        parts.append(np.einsum("ajbj->ab", Y) / b.dB)
    return parts


def project_algebra(alg: AlgebraStructure, X) -> np.ndarray:
    """Hilbert-Schmidt orthogonal projection onto the algebra.

    Blockwise ``X -> U_i (Tr_B(U_i^dagger X U_i) / dB_i (x) 1) U_i^dagger``; the
    part of ``X`` outside the blocks' ranges is discarded.
    """
    return element_from_blocks(alg, block_parts(alg, X))


def project_commutant(alg: AlgebraStructure, X) -> np.ndarray:
    """Hilbert-Schmidt orthogonal projection onto the commutant."""
    _require_unital(alg, "project_commutant")
    X = _square_of(alg, X)
    out = np.zeros_like(X)
    for b in alg.blocks:
        Y = (dagger(b.iso) @ X @ b.iso).reshape(b.dA, b.dB, b.dA, b.dB)
        part = np.einsum("jajb->ab", Y) / b.dA
        out += b.iso @ np.kron(np.eye(b.dA), part) @ dagger(b.iso)
    return out


def commutant_structure(alg: AlgebraStructure) -> AlgebraStructure:
    """Block structure of the commutant: tensor factors swapped in every block."""
    _require_unital(alg, "commutant_structure")
    blocks = []
    for b in alg.blocks:
        # new column (j, a) = old column (a, j)
        perm = (np.arange(b.dA)[None, :] * b.dB + np.arange(b.dB)[:, None]).reshape(-1)
        blocks.append(Block(b.iso[:, perm], b.dB, b.dA))
    return AlgebraStructure(alg.ambient_dim, tuple(blocks))


def projector_channel(alg: AlgebraStructure) -> Channel:
    """``P_A`` as a channel, Kraus ``U_i (1 (x) |j><k|) U_i^dagger / sqrt(dB_i)``."""
    _require_unital(alg, "projector_channel")
    kraus = []
    for b in alg.blocks:
        for j in range(b.dB):
            for k in range(b.dB):
                e = np.zeros((b.dB, b.dB))
                e[j, k] = 1
                kraus.append(b.iso @ np.kron(np.eye(b.dA), e) @ dagger(b.iso) / np.sqrt(b.dB))
    return make_channel(kraus)


def commutant_projector_channel(alg: AlgebraStructure) -> Channel:
    return projector_channel(commutant_structure(alg))


def basis_of(alg: AlgebraStructure) -> OperatorBasis:
    """Hilbert-Schmidt orthonormal basis ``U_i (|a><b| (x) 1) U_i^dagger / sqrt(dB_i)``."""
    ops = []
    for b in alg.blocks:
        for p in range(b.dA):
            for q in range(b.dA):
                e = np.zeros((b.dA, b.dA))
                e[p, q] = 1
                ops.append(b.iso @ np.kron(e, np.eye(b.dB)) @ dagger(b.iso) / np.sqrt(b.dB))
    return OperatorBasis(alg.ambient_dim, tuple(ops))


def membership(alg: AlgebraStructure, X, tol: float = 1e-9) -> tuple[bool, float]:
    """Whether ``X`` lies in the algebra, with defect ``||X - P_A(X)||``."""
    X = _square_of(alg, X)
    defect = float(np.linalg.norm(X - project_algebra(alg, X), 2))
    return defect <= tol, defect


# -- unitary group ------------------------------------------------------------


def random_algebra_unitaries(alg: AlgebraStructure, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` Haar-random unitaries of the algebra, shape ``(n, d, d)``."""
    _require_unital(alg, "unitary sampling")
    d = alg.ambient_dim
    out = np.zeros((n, d, d), dtype=complex)
    for b in alg.blocks:
        z = (rng.standard_normal((n, b.dA, b.dA)) + 1j * rng.standard_normal((n, b.dA, b.dA)))
        q, r = np.linalg.qr(z)
        diag = np.diagonal(r, axis1=1, axis2=2)
        q = q * (diag / np.abs(diag))[:, None, :]
        full = np.einsum("nab,jk->najbk", q, np.eye(b.dB)).reshape(n, b.dA * b.dB, b.dA * b.dB)
        out += b.iso @ full @ dagger(b.iso)
    return out


def twirl_estimate(alg: AlgebraStructure, B, n: int, seed: int = 0) -> np.ndarray:
    """Monte Carlo average of ``U^dagger B U`` over Haar unitaries ``U`` of the algebra."""
    if n < 1:
        raise InputError("sample count must be at least 1")
    B = _square_of(alg, B)
    rng = np.random.default_rng(seed)
    acc = np.zeros_like(B)
    chunk = 2048
    done = 0
    while done < n:
        m = min(chunk, n - done)
        U = random_algebra_unitaries(alg, m, rng)
        acc += np.einsum("nba,bc,ncd->ad", np.conj(U), B, U)
        done += m
    return acc / n


# -- linear-algebraic view ----------------------------------------------------


def _orthonormal_span(ops: Sequence[np.ndarray], tol: float) -> list[np.ndarray]:
    basis: list[np.ndarray] = []
    extend_orthonormal(basis, [np.asarray(o, complex).reshape(-1) for o in ops], tol)
    return basis


def _as_ops(ops, d: int) -> list[np.ndarray]:
    return [v.reshape(d, d) for v in ops]


def _check_ops(ops) -> tuple[list[np.ndarray], int]:
    mats = [as_matrix(o, "operator") for o in ops]
    if not mats:
        raise InputError("operator list is empty")
    d = mats[0].shape[0]
    for m in mats:
        if m.shape != (d, d):
            raise InputError("operators must be square and of equal size")
    return mats, d


def generate_algebra(gens, tol: float = RANK_TOL) -> OperatorBasis:
    """Orthonormal basis of the smallest dagger-algebra containing ``gens``."""
    if tol <= 0:
        raise InputError("tol must be positive")
    mats, d = _check_ops(gens)
    basis = _orthonormal_span(mats + [dagger(m) for m in mats], tol)
    new = list(basis)
    for _ in range(d * d + 1):
        if not new:
            return OperatorBasis(d, tuple(_as_ops(basis, d)))
        cur = _as_ops(basis, d)
        fresh = _as_ops(new, d)
        prods = [a @ b for a in fresh for b in cur] + [b @ a for a in fresh for b in cur]
        new = extend_orthonormal(basis, [p.reshape(-1) for p in prods], tol)
    raise RuntimeError("algebra generation did not stabilize; numerical breakdown")


def _commutator_matrix(ops: Sequence[np.ndarray], d: int) -> np.ndarray:
    eye = np.eye(d)
    return np.vstack([np.kron(G, eye) - np.kron(eye, G.T) for G in ops])


def commutant_of_set(ops, tol: float = RANK_TOL, check: bool = True) -> OperatorBasis:
    """Orthonormal basis of ``{X : [G, X] = 0 for all G in ops}``."""
    mats, d = _check_ops(ops)
    # the commutant only depends on the span of ops
    span = orthonormal_columns(np.array([m.reshape(-1) for m in mats]).T, 1e-14)
    gens = [span[:, k].reshape(d, d) for k in range(span.shape[1])]
    if not gens:
        return OperatorBasis(d, tuple(np.eye(d * d, dtype=complex).reshape(-1, d, d)))
    # gens are HS-orthonormal, so the commutator matrix has norm at most 2
    null = nullspace(_commutator_matrix(gens, d), tol, scale=1.0)
    basis = OperatorBasis(d, tuple(null.T.reshape(-1, d, d)))
    if check:
        defect = closure_defect(basis)
        if defect > CLOSURE_TOL:
            raise InputError(
                f"commutant is not closed under adjoints/products (defect {defect:.2e}); "
                "is the operator set closed under adjoints?"
            )
    return basis


def closure_defect(basis: OperatorBasis) -> float:
    """Largest relative residual of adjoints and pairwise products outside the span."""
    d = basis.ambient_dim
    ops = np.array(basis.ops).reshape(-1, d, d)
    V = basis.vectors

    def resid(M):
        flat = M.reshape(M.shape[0], -1)
        r = flat - (flat @ np.conj(V).T) @ V
        norms = np.maximum(np.linalg.norm(flat, axis=1), 1.0)
        return float((np.linalg.norm(r, axis=1) / norms).max()) if len(flat) else 0.0

    adj = np.conj(ops.transpose(0, 2, 1))
    prods = np.einsum("kab,lbc->klac", ops, ops).reshape(-1, d, d)
    return max(resid(adj), resid(prods))


def center_of(basis: OperatorBasis, tol: float = RANK_TOL) -> list[np.ndarray]:
    """Basis (not necessarily orthonormal) of the center of the spanned algebra."""
    ops = basis.ops
    k = len(ops)
    d = basis.ambient_dim
    cols = []
    for l in range(k):
        cols.append(np.array([(ops[j] @ ops[l] - ops[l] @ ops[j]).reshape(-1) for j in range(k)]).T)
    L = np.vstack(cols)  # (k * d^2, k)
    coeffs = nullspace(L, tol, scale=1.0)
    return [np.tensordot(coeffs[:, c], np.array(ops), axes=1).reshape(d, d) for c in range(coeffs.shape[1])]


def _hermitian_span(ops: Sequence[np.ndarray]) -> list[np.ndarray]:
    out = []
    for o in ops:
        out.append((o + dagger(o)) / 2)
        out.append((o - dagger(o)) / 2j)
    return out


def _clusters(w: np.ndarray) -> list[np.ndarray] | None:
    """Group sorted eigenvalues; None when two groups are suspiciously close."""
    scale = max(float(np.abs(w).max()), 1e-300)
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > GROUP_TOL * scale:
            groups.append(np.arange(start, i))
            start = i
    for g1, g2 in zip(groups, groups[1:]):
        if w[g2[0]] - w[g1[-1]] < SEPARATION_TOL * scale:
            return None
    return groups


def _random_hermitian_combination(herm: Sequence[np.ndarray], rng) -> np.ndarray:
    g = rng.standard_normal(len(herm))
    return np.tensordot(g, np.array(herm), axes=1)


def structure_from_basis(
    basis: OperatorBasis, tol: float = RANK_TOL, seed: int = 0
) -> AlgebraStructure:
    """Recover the block (Wedderburn) structure of the algebra spanned by ``basis``.

    The center is computed first; a generic Hermitian central element splits
    the space into the blocks. Inside each block a generic Hermitian algebra
    element has ``dA`` distinct eigenvalues of multiplicity ``dB``; its
    eigenspaces are aligned into a product basis by intertwiners taken from
    the algebra itself. Randomized steps are retried with fresh samples.
    """
    d = basis.ambient_dim
    if len(basis) == 0:
        raise InputError("empty basis")
    defect = closure_defect(basis)
    if defect > CLOSURE_TOL:
        raise InputError(f"basis does not span a dagger-algebra (closure defect {defect:.2e})")
    ops = [np.asarray(o, complex) for o in basis.ops]
    # range of the unit: spanned by the ranges of all elements
    F0 = orthonormal_columns(np.hstack(ops), 1e-10)
    center = center_of(basis, tol)
    rng = np.random.default_rng(seed)
    last_err = "no attempt"
    for _ in range(MAX_ATTEMPTS):
        try:
            alg = _attempt_structure(ops, F0, center, d, rng)
        except _Retry as exc:
            last_err = str(exc)
            continue
        bad = max(membership(alg, o)[1] for o in ops)
        if alg.dim == len(ops) and bad <= 1e3 * max(tol, 1e-12) + CLOSURE_TOL:
            return alg
        last_err = f"reconstructed structure misses the span (defect {bad:.2e}, dim {alg.dim} vs {len(ops)})"
    raise InputError(f"block structure recovery failed: {last_err}")


class _Retry(Exception):
    pass


def _attempt_structure(ops, F0, center, d, rng) -> AlgebraStructure:
    herm_center = _hermitian_span([dagger(F0) @ c @ F0 for c in center])
    h = _random_hermitian_combination(herm_center, rng)
    w, v = np.linalg.eigh(h)
    groups = _clusters(w)
    if groups is None:
        raise _Retry("central element is nearly degenerate")
    blocks = []
    for g in groups:
        F = F0 @ v[:, g]
        local = [dagger(F) @ o @ F for o in ops]
        blocks.append(_split_block(local, F, rng))
    return AlgebraStructure(d, tuple(blocks))


def _split_block(local: list[np.ndarray], F: np.ndarray, rng) -> Block:
    n = F.shape[1]
    h = _random_hermitian_combination(_hermitian_span(local), rng)
    w, v = np.linalg.eigh(h)
    groups = _clusters(w)
    if groups is None:
        raise _Retry("block element is nearly degenerate")
    dB = len(groups[0])
    if any(len(g) != dB for g in groups):
        raise _Retry("unequal eigenvalue multiplicities inside a block")
    dA = len(groups)
    Q = [v[:, g] for g in groups]
    aligned = [Q[0]]
    for a in range(1, dA):
        T = [dagger(Q[a]) @ o @ Q[0] for o in local]
        norms = [np.linalg.norm(t) for t in T]
        ref = T[int(np.argmax(norms))]
        if max(norms) < 1e-8:
            raise _Retry("no intertwiner between eigenspaces")
        S = sum(np.vdot(t, ref) * t for t in T)
        s = np.linalg.svd(S, compute_uv=False)
        if s[-1] < (1 - 1e-6) * s[0]:
            raise _Retry("eigenspace intertwiner is not proportional to a unitary")
        aligned.append(Q[a] @ polar_unitary(S))
    iso = F @ np.hstack(aligned)
    assert iso.shape[1] == n
    return Block(iso, dA, dB)


def subspace_distance(b1: OperatorBasis, b2: OperatorBasis) -> float:
    """Operator-norm distance between the orthogonal projectors onto two spans."""
    P1 = b1.vectors.T @ np.conj(b1.vectors)
    P2 = b2.vectors.T @ np.conj(b2.vectors)
    return float(np.linalg.norm(P1 - P2, 2))


# -- random instances ---------------------------------------------------------

CATALOG_SHAPES = {
    2: [[(2, 1)], [(1, 1), (1, 1)]],
    3: [[(3, 1)], [(1, 1)] * 3, [(2, 1), (1, 1)]],
    4: [[(4, 1)], [(1, 1)] * 4, [(2, 2)], [(2, 1), (1, 2)], [(2, 1), (2, 1)], [(2, 1), (1, 1), (1, 1)]],
}


def catalog_algebra(d: int, rng: np.random.Generator) -> AlgebraStructure:
    """Random algebra from a fixed catalog of block shapes, Haar-rotated.

    The scalar algebra is left out since every channel corrects it.
    """
    shapes = CATALOG_SHAPES.get(d)
    if shapes is None:
        shapes = [[(d, 1)], [(1, 1)] * d]
    shape = shapes[rng.integers(len(shapes))]
    return conjugate(block_algebra(shape), haar_unitary(d, rng))
