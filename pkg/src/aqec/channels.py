"""Quantum channels in Kraus form.

A :class:`Channel` is an ordered list of Kraus operators ``E_i`` with
``sum_i E_i^dagger E_i = 1``. The order matters: the complementary channel
uses the environment basis ``|i>`` indexed by Kraus position, and the
Stinespring isometry is ``V = sum_i E_i (x) |i>`` (system slow, environment
fast).

Named noise models
------------------
``identity``
    ``rho -> rho``.
``depolarizing(p)``
    ``rho -> (1 - p) rho + p Tr(rho) 1/d``, Kraus operators built from the
    ``d^2`` Weyl operators ``X^a Z^b``.
``dephasing(p)``
    Kraus ``{sqrt(1-p) 1, sqrt(p) Z}`` with ``Z`` the clock operator
    (Pauli Z for qubits).
``bit_flip(p)``
    Kraus ``{sqrt(1-p) 1, sqrt(p) X}`` with ``X`` the cyclic shift.
``amplitude_damping(gamma)``
    Qubits only: ``E0 = diag(1, sqrt(1-gamma))``, ``E1 = sqrt(gamma) |0><1|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .matcore import (
    InputError,
    as_matrix,
    dagger,
    haar_isometry,
    partial_trace,
)

#: soft tolerance on the trace-preservation defect accepted by make_channel
TP_TOL = 1e-6
#: Choi eigenvalues below this are dropped when extracting Kraus operators
KRAUS_CUTOFF = 1e-10


@dataclass(frozen=True, eq=False)
class Channel:
    dim_in: int
    dim_out: int
    kraus: tuple[np.ndarray, ...]

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)

    def __repr__(self) -> str:
        return f"Channel(dim_in={self.dim_in}, dim_out={self.dim_out}, rank={len(self.kraus)})"

    @property
    def num_kraus(self) -> int:
        return len(self.kraus)


@dataclass(frozen=True, eq=False)
class Isometry:
    """Stinespring isometry ``C^dim_in -> C^dim_out (x) C^dim_env``."""

    matrix: np.ndarray
    dim_env: int

    @property
    def dim_in(self) -> int:
        return self.matrix.shape[1]

    @property
    def dim_out(self) -> int:
        return self.matrix.shape[0] // self.dim_env


def tp_defect(kraus: Sequence[np.ndarray]) -> float:
    d = kraus[0].shape[1]
    s = sum(dagger(k) @ k for k in kraus)
    return float(np.linalg.norm(s - np.eye(d), 2))


def make_channel(kraus, tol: float = TP_TOL) -> Channel:
    """Validate a Kraus list and wrap it as a :class:`Channel`.

    Raises :class:`InputError` on shape mismatch or when
    ``||sum E^dagger E - 1||`` exceeds ``tol``; the message carries the defect.
    """
    if isinstance(kraus, np.ndarray) and kraus.ndim == 2:
        kraus = [kraus]
    ops = [as_matrix(k, "Kraus operator") for k in kraus]
    if not ops:
        raise InputError("Kraus list is empty")
    shape = ops[0].shape
    for k in ops:
        if k.shape != shape:
            raise InputError(f"Kraus operators have mixed shapes {shape} and {k.shape}")
    defect = tp_defect(ops)
    if defect > tol:
        raise InputError(f"not trace preserving: ||sum E^dag E - 1|| = {defect:.3e}")
    for k in ops:
        k.setflags(write=False)
    return Channel(dim_in=shape[1], dim_out=shape[0], kraus=tuple(ops))


def _check_square(M, d: int, what: str) -> np.ndarray:
    arr = as_matrix(M, what)
    if arr.shape != (d, d):
        raise InputError(f"{what} must be {d}x{d}, got {arr.shape}")
    return arr


def apply(N: Channel, rho) -> np.ndarray:
    rho = _check_square(rho, N.dim_in, "input operator")
    K = np.array(N.kraus)
    return np.einsum("kab,bc,kdc->ad", K, rho, np.conj(K))


def apply_dual(N: Channel, A) -> np.ndarray:
    """Heisenberg-picture action ``sum_i E_i^dagger A E_i``."""
    A = _check_square(A, N.dim_out, "observable")
    K = np.array(N.kraus)
    return np.einsum("kba,bc,kcd->ad", np.conj(K), A, K)


def choi(N: Channel) -> np.ndarray:
    """Choi matrix ``sum_kl |k><l| (x) N(|k><l|)`` (input factor first)."""
    # column-stacked Kraus vectors: v_i[(k, a)] = E_i[a, k]
    vecs = np.array([k.T.reshape(-1) for k in N.kraus])
    return vecs.T @ np.conj(vecs)


def kraus_from_choi(J, dims: tuple[int, int], tol: float = 1e-9) -> Channel:
    """Canonical Kraus form from a Choi matrix.

    Eigen-Kraus operators are returned in descending eigenvalue order with the
    first significant entry of each operator made real and positive.
    """
    din, dout = dims
    J = as_matrix(J, "Choi matrix")
    n = din * dout
    if J.shape != (n, n):
        raise InputError(f"Choi matrix must be {n}x{n}, got {J.shape}")
    J = (J + dagger(J)) / 2
    w, v = np.linalg.eigh(J)
    scale = max(1.0, float(np.abs(w).max()))
    if w[0] < -tol * scale:
        raise InputError(f"Choi matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    tr_out = partial_trace(J, (din, dout), 1)
    defect = float(np.linalg.norm(tr_out - np.eye(din), 2))
    if defect > tol * max(1.0, din):
        raise InputError(f"partial trace condition violated by {defect:.3e}")
    order = np.argsort(w)[::-1]
    kraus = []
    for idx in order:
        if w[idx] <= KRAUS_CUTOFF * scale:
            break
        k = np.sqrt(w[idx]) * v[:, idx].reshape(din, dout).T
        kraus.append(_fix_phase(k))
    return make_channel(kraus, tol=max(TP_TOL, 10 * tol))


def _fix_phase(k: np.ndarray) -> np.ndarray:
    flat = k.reshape(-1)
    big = np.flatnonzero(np.abs(flat) > 1e-8 * np.abs(flat).max())
    if big.size:
        z = flat[big[0]]
        k = k * (abs(z) / z)
    return k


def canonical(N: Channel) -> Channel:
    """Minimal-rank canonical Kraus form of ``N``."""
    return kraus_from_choi(choi(N), (N.dim_in, N.dim_out))


def stinespring(N: Channel) -> Isometry:
    """Isometry ``V`` with ``(1 (x) <i|) V = E_i``."""
    K = np.array(N.kraus)  # (r, dout, din)
    V = K.transpose(1, 0, 2).reshape(N.dim_out * N.num_kraus, N.dim_in)
    return Isometry(matrix=V, dim_env=N.num_kraus)


def complement(N: Channel) -> Channel:
    """Complementary channel: input state to final environment state.

    Its Kraus operators are ``F_p = (<p| (x) 1) V``, one per output basis
    vector, so that ``<i|N^(rho)|j> = Tr(E_j^dagger E_i rho)``.
    """
    K = np.array(N.kraus)  # (r, dout, din)
    return make_channel(list(K.transpose(1, 0, 2)))


def compose(R: Channel, N: Channel) -> Channel:
    """``R o N`` (apply ``N`` first), Kraus list ``{F_j E_i}``."""
    if N.dim_out != R.dim_in:
        raise InputError(f"cannot compose: N outputs dim {N.dim_out}, R takes dim {R.dim_in}")
    return make_channel([f @ e for f in R.kraus for e in N.kraus])


def tensor_id(N: Channel, d: int) -> Channel:
    """``N (x) id_d`` with the identity acting on the right factor."""
    if d < 1:
        raise InputError("identity dimension must be positive")
    eye = np.eye(d)
    return make_channel([np.kron(k, eye) for k in N.kraus])


def encoding_channel(V) -> Channel:
    if isinstance(V, Isometry):
        V = V.matrix
    V = as_matrix(V, "isometry")
    defect = np.linalg.norm(dagger(V) @ V - np.eye(V.shape[1]), 2)
    if defect > 1e-8:
        raise InputError(f"encoding is not an isometry (||V^dag V - 1|| = {defect:.3e})")
    return make_channel([V])


def unitary_channel(U) -> Channel:
    return make_channel([as_matrix(U, "unitary")])


def identity_channel(d: int) -> Channel:
    return make_channel([np.eye(d, dtype=complex)])


def weyl_operators(d: int) -> list[np.ndarray]:
    """The ``d^2`` operators ``X^a Z^b``, ``(a, b)`` in lexicographic order."""
    omega = np.exp(2j * np.pi / d)
    X = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    Z = np.diag(omega ** np.arange(d))
    mp = np.linalg.matrix_power
    return [mp(X, a) @ mp(Z, b) for a in range(d) for b in range(d)]


def _prob(p: float, what: str) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InputError(f"{what} must lie in [0, 1], got {p}")
    return p


def standard_channel(name: str, params: Sequence[float] = (), d: int = 2) -> Channel:
    """Build one of the named noise models listed in the module docstring."""
    params = list(params)
    if name == "identity":
        return identity_channel(d)
    if not params:
        raise InputError(f"channel {name!r} needs a parameter")
    p = _prob(params[0], f"{name} parameter")
    eye = np.eye(d, dtype=complex)
    weyl = weyl_operators(d)
    if name == "depolarizing":
        ops = [np.sqrt(1 - p + p / d**2) * eye]
        ops += [np.sqrt(p) / d * w for w in weyl[1:]] if p > 0 else []
    elif name == "dephasing":
        ops = [np.sqrt(1 - p) * eye, np.sqrt(p) * weyl[1]]
    elif name == "bit_flip":
        ops = [np.sqrt(1 - p) * eye, np.sqrt(p) * weyl[d]]
    elif name == "amplitude_damping":
        if d != 2:
            raise InputError("amplitude_damping is defined for qubits only")
        ops = [
            np.array([[1, 0], [0, np.sqrt(1 - p)]], dtype=complex),
            np.array([[0, np.sqrt(p)], [0, 0]], dtype=complex),
        ]
    else:
        raise InputError(f"unknown channel name {name!r}")
    ops = [k for k in ops if np.abs(k).max() > 0]
    return make_channel(ops)


def repetition_isometry(n: int = 3) -> np.ndarray:
    """``|0> -> |0...0>``, ``|1> -> |1...1>`` on ``n`` qubits."""
    V = np.zeros((2**n, 2), dtype=complex)
    V[0, 0] = 1
    V[-1, 1] = 1
    return V


def qubit_op(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """``op`` acting on qubit ``site`` (0 = leftmost) of ``n`` qubits."""
    factors = [np.eye(2)] * n
    factors[site] = op
    return reduce(np.kron, factors).astype(complex)


def bitflip_code_channel(probs: Sequence[float] = (0.7, 0.1, 0.1, 0.1)) -> Channel:
    """3-qubit repetition encoding followed by at most one bit flip.

    Kraus ``{sqrt(p0) V, sqrt(p1) X_1 V, sqrt(p2) X_2 V, sqrt(p3) X_3 V}``.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (4,) or np.any(probs < 0) or abs(probs.sum() - 1) > 1e-12:
        raise InputError("bit-flip code needs four probabilities summing to one")
    V = repetition_isometry(3)
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    errs = [np.eye(8, dtype=complex)] + [qubit_op(X, s, 3) for s in range(3)]
    return make_channel([np.sqrt(p) * e @ V for p, e in zip(probs, errs) if p > 0])


def amplitude_damping_code_isometry() -> np.ndarray:
    """Four-qubit code ``|0_L> = (|0000>+|1111>)/sqrt2``, ``|1_L> = (|0011>+|1100>)/sqrt2``."""
    V = np.zeros((16, 2), dtype=complex)
    V[0b0000, 0] = V[0b1111, 0] = 1 / np.sqrt(2)
    V[0b0011, 1] = V[0b1100, 1] = 1 / np.sqrt(2)
    return V


def product_channel(channels: Sequence[Channel]) -> Channel:
    """Tensor product of channels acting on separate factors."""
    kraus = [reduce(np.kron, ks) for ks in _product(c.kraus for c in channels)]
    return make_channel(kraus)


def _product(lists):
    out = [()]
    for lst in lists:
        out = [o + (x,) for o in out for x in lst]
    return out


def random_channel(
    dim_in: int, dim_out: int, rank: int, rng: np.random.Generator
) -> Channel:
    """Channel from a Haar-random isometry ``C^dim_in -> C^dim_out (x) C^rank``."""
    V = haar_isometry(dim_out * rank, dim_in, rng)
    K = V.reshape(dim_out, rank, dim_in).transpose(1, 0, 2)
    return make_channel(list(K))
