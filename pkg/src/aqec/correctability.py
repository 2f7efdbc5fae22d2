"""Exact and approximate correctability of operator algebras.

For a channel ``N`` with Kraus operators ``E_i`` and a unital algebra ``A`` on
its input space:

* ``A`` is exactly correctable iff every ``E_i^dagger E_j`` commutes with ``A``
  (:func:`exact_check`); the largest such algebra is the commutant of the
  ``E_i^dagger E_j`` (:func:`largest_correctable`).
* ``delta = ||N^ - N^ o P_A'||_dia`` with ``N^`` the complementary channel and
  ``P_A'`` the projector onto the commutant (:func:`delta_estimate`).
* ``E = min_R ||R o N - P_A||_dia`` over recovery channels ``R``
  (:func:`optimal_error`), obtained from one semidefinite program.

The two are related by ``delta^2 / 4 <= E <= 2 sqrt(delta)``, which
:func:`verify_theorem1` checks on concrete instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize as so
import scipy.sparse as sp

from .algebras import (
    AlgebraStructure,
    basis_of,
    catalog_algebra,
    commutant_of_set,
    commutant_projector_channel,
    full_algebra,
    projector_channel,
    random_algebra_unitaries,
    structure_from_basis,
    _require_unital,
)
from .channels import (
    Channel,
    Isometry,
    canonical,
    choi,
    complement,
    compose,
    encoding_channel,
    kraus_from_choi,
    make_channel,
    random_channel,
)
from .diamond import DEFAULT_TOL, diamond_distance, diamond_norm_general
from .matcore import (
    RANK_TOL,
    InputError,
    as_matrix,
    dagger,
    haar_unitary,
    operator_norm,
    partial_trace,
    polar_unitary,
)
from .sdp import ConstraintBuilder, SolverError, sdp_solve, superop_matrix

#: largest commutator norm still reported as exact correctability
EXACT_TOL = 1e-8
#: slack in the two-sided bound check
BOUND_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class SubspaceCode:
    """Code subspace given by an encoding isometry ``V`` (code dim ``d``)."""

    V: np.ndarray

    def __post_init__(self):
        V = as_matrix(self.V.matrix if isinstance(self.V, Isometry) else self.V, "encoding")
        defect = float(np.abs(dagger(V) @ V - np.eye(V.shape[1])).max())
        if defect > 1e-10:
            raise InputError(f"encoding is not an isometry (defect {defect:.2e})")
        object.__setattr__(self, "V", V)

    @property
    def d(self) -> int:
        return self.V.shape[1]

    @property
    def physical_dim(self) -> int:
        return self.V.shape[0]


@dataclass(eq=False)
class CorrectabilityReport:
    delta: float
    optimal_error: float
    recovery: Channel
    exact: bool
    kl_defect: float
    bounds_ok: bool
    tolerances: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def lower_bound(self) -> float:
        return self.delta**2 / 4

    @property
    def upper_bound(self) -> float:
        return 2 * np.sqrt(self.delta)


def _check_dims(N: Channel, alg: AlgebraStructure):
    if alg.ambient_dim != N.dim_in:
        raise InputError(
            f"algebra acts on dimension {alg.ambient_dim} but the channel input has dimension {N.dim_in}"
        )


def error_products(N: Channel) -> np.ndarray:
    """``(r, r, d, d)`` array of ``E_i^dagger E_j``."""
    K = np.array(N.kraus)
    return np.einsum("iba,jbc->ijac", np.conj(K), K)


# -- exact correctability ----------------------------------------------------


def exact_check(N: Channel, alg: AlgebraStructure, tol: float = EXACT_TOL) -> tuple[bool, float]:
    """Commutator test ``max ||[A, E_i^dagger E_j]||`` over a basis of the algebra.

    For a non-unital algebra with unit ``P`` the products are compressed to
    ``P E_i^dagger E_j P`` first.
    """
    _check_dims(N, alg)
    P = alg.unit
    prods = error_products(N).reshape(-1, N.dim_in, N.dim_in)
    if not alg.is_unital:
        prods = P @ prods @ P
    defect = 0.0
    for A in basis_of(alg).ops:
        comm = A @ prods - prods @ A
        defect = max(defect, float(np.linalg.norm(comm, 2, axis=(1, 2)).max()))
    return defect <= tol, defect


def largest_correctable(N: Channel, tol: float = RANK_TOL, seed: int = 0) -> AlgebraStructure:
    """Commutant of ``{E_i^dagger E_j}`` as a block structure."""
    prods = list(error_products(N).reshape(-1, N.dim_in, N.dim_in))
    return structure_from_basis(commutant_of_set(prods, tol), tol, seed)


# -- estimate delta ------------------------------------------------------------


def delta_estimate(N: Channel, alg: AlgebraStructure, tol: float = DEFAULT_TOL) -> float:
    """``||N^ - N^ o P_A'||_dia``."""
    _check_dims(N, alg)
    _require_unital(alg, "delta_estimate")
    Nc = complement(canonical(N))
    return diamond_distance(Nc, compose(Nc, commutant_projector_channel(alg)), tol)


def subspace_moments(code: SubspaceCode, N: Channel) -> tuple[np.ndarray, np.ndarray]:
    """``M_ij = V^dagger E_i^dagger E_j V`` and ``lambda_ij = Tr(M_ij) / d``."""
    if code.physical_dim != N.dim_in:
        raise InputError(
            f"code lives in dimension {code.physical_dim} but the channel input has dimension {N.dim_in}"
        )
    V = code.V
    M = np.einsum("ap,ijab,bq->ijpq", np.conj(V), error_products(N), V)
    lam = np.einsum("ijpp->ij", M) / code.d
    return M, lam


def subspace_estimate(code: SubspaceCode, N: Channel, tol: float = DEFAULT_TOL) -> float:
    """Correctability estimate for the full algebra of a code subspace.

    Computed from the ``M_ij - lambda_ij 1`` through the general-map diamond
    norm program, independently of :func:`delta_estimate`.
    """
    M, lam = subspace_moments(code, N)
    d = code.d
    r = M.shape[0]
    D = M - lam[:, :, None, None] * np.eye(d)
    # <i| Delta(rho) |j> = Tr(D_ji rho), so Delta(|k><l|)[i, j] = D_ji[l, k]
    J = np.einsum("jilk->kilj", D).reshape(d * r, d * r)
    return min(2.0, diamond_norm_general(J, d, r, tol))


def subspace_estimate_via_delta(code: SubspaceCode, N: Channel, tol: float = DEFAULT_TOL) -> float:
    """Same quantity as :func:`subspace_estimate` via the encoded channel."""
    encoded = compose(N, encoding_channel(code.V))
    return delta_estimate(encoded, full_algebra(code.d), tol)


# -- optimal error ---------------------------------------------------------------


def _composition_map(N: Channel) -> sp.csr_matrix:
    """Sparse map ``J_R -> J(R o N)`` on Choi matrices."""
    din, dout = N.dim_in, N.dim_out
    # J(R o N)[(k, a), (l, b)] = sum_pq N(|k><l|)[p, q] J_R[(p, a), (q, b)]
    Nkl = np.zeros((din, din, dout, dout), complex)
    for k in range(din):
        for l in range(din):
            e = np.zeros((din, din), complex)
            e[k, l] = 1
            Nkl[k, l] = N(e)

    def f(JR):
        T = JR.reshape(dout, din, dout, din)
        return np.einsum("klpq,paqb->kalb", Nkl, T).reshape(din * din, din * din)

    return superop_matrix(f, dout * din, din * din)


def _trace_out_map(din: int, dout: int):
    return superop_matrix(lambda X: partial_trace(X, (din, dout), 1), din * dout, din)


def optimal_error(N: Channel, alg: AlgebraStructure, tol: float = DEFAULT_TOL) -> tuple[float, Channel]:
    """Smallest ``||R o N - P_A||_dia`` over channels ``R`` and a minimizer.

    Solves ``min 2t`` over ``Z >= 0``, ``Z >= J(R o N) - J(P_A)``,
    ``Tr_out Z <= t 1`` and the Choi matrix ``J_R`` of a channel.
    """
    _check_dims(N, alg)
    din, dout = N.dim_in, N.dim_out
    n = din * din
    JP = choi(projector_channel(alg))
    # blocks: Z, S = Z - J(R o N) + J_P, T = t 1 - Tr_out Z, t, J_R
    dims = (n, n, din, 1, dout * din)
    cb = ConstraintBuilder(dims)
    cb.hermitian_equality({0: -sp.identity(n * n, complex, format="csr"), 1: "id", 4: _composition_map(N)}, JP)
    t_map = superop_matrix(lambda t: t[0, 0] * np.eye(din), 1, din)
    cb.hermitian_equality({0: _trace_out_map(din, din), 2: "id", 3: -t_map}, np.zeros((din, din)))
    cb.hermitian_equality({4: _trace_out_map(dout, din)}, np.eye(dout))
    C = [None, None, None, -np.ones((1, 1)), None]
    sol = sdp_solve(cb.build(C), tol=tol)
    if sol.status != "optimal":
        raise SolverError(f"optimal error: solver stopped with status {sol.status}", sol.trace)
    E = float(np.clip(-2 * sol.primal_value, 0.0, 2.0))
    return E, _recovery_from_choi(sol.X[4], dout, din)


def _recovery_from_choi(J: np.ndarray, din: int, dout: int) -> Channel:
    """Channel from an approximately feasible Choi matrix, renormalized exactly."""
    J = (J + dagger(J)) / 2
    w, v = np.linalg.eigh(J)
    J = (v * np.clip(w, 0, None)) @ dagger(v)
    T = partial_trace(J, (din, dout), 1)
    w, v = np.linalg.eigh((T + dagger(T)) / 2)
    Tis = (v / np.sqrt(np.clip(w, 1e-14, None))) @ dagger(v)
    S = np.kron(Tis, np.eye(dout))
    return kraus_from_choi(S @ J @ S, (din, dout))


# -- bound verification ------------------------------------------------------------


def verify_theorem1(
    N: Channel,
    alg: AlgebraStructure,
    tol: float = BOUND_TOL,
    exact_tol: float = EXACT_TOL,
    sdp_tol: float = DEFAULT_TOL,
) -> CorrectabilityReport:
    """Compute ``delta`` and ``E`` and check ``delta^2/4 <= E <= 2 sqrt(delta)`` up to ``tol``."""
    exact, kl = exact_check(N, alg, exact_tol)
    delta = delta_estimate(N, alg, sdp_tol)
    E, R = optimal_error(N, alg, sdp_tol)
    ok = delta**2 / 4 <= E + tol and E <= 2 * np.sqrt(delta) + tol
    return CorrectabilityReport(
        delta=delta,
        optimal_error=E,
        recovery=R,
        exact=exact,
        kl_defect=kl,
        bounds_ok=bool(ok),
        tolerances={"bound": tol, "exact": exact_tol, "sdp": sdp_tol},
    )


# -- individual operators ------------------------------------------------------------


def extended_dual_complement(N: Channel, B: np.ndarray) -> np.ndarray:
    """``(N^dagger-hat (x) id)(B) = sum_ij E_i^dagger E_j (x) B_ij`` for ``B`` on env (x) C^dim_in."""
    r, d = N.num_kraus, N.dim_in
    B = as_matrix(B, "B")
    if B.shape != (r * d, r * d):
        raise InputError(f"B must be {r * d}x{r * d} (environment times input), got {B.shape}")
    blocks = B.reshape(r, d, r, d)
    out = np.einsum("ijab,icjd->acbd", error_products(N), blocks)
    return out.reshape(d * d, d * d)


def _commutator_norm(A: np.ndarray, X: np.ndarray) -> float:
    return float(np.linalg.norm(A @ X - X @ A, 2))


def _ascend_B(Cs: np.ndarray, B: np.ndarray, steps: int = 50) -> tuple[float, np.ndarray]:
    """Monotone ascent of ``||sum_ij C_ij (x) B_ij||`` over the unit ball in ``B``.

    ``Cs`` has shape ``(r, r, d, d)``. Each step fixes the top singular pair
    ``u, v`` and replaces ``B`` by the contraction maximizing ``|<u|T(B)|v>|``.
    """
    r, _, d, _ = Cs.shape
    best = -1.0
    for _ in range(steps):
        T = np.einsum("ijab,icjd->acbd", Cs, B.reshape(r, d, r, d)).reshape(d * d, d * d)
        U, s, Vh = np.linalg.svd(T)
        if s[0] <= best * (1 + 1e-12):
            break
        best = float(s[0])
        u = U[:, 0].reshape(d, d)
        v = np.conj(Vh[0]).reshape(d, d)
        # <u|T(B)|v> = sum B[(i,c),(j,e)] G[(i,c),(j,e)]
        G = np.einsum("ac,ijab,be->icje", np.conj(u), Cs, v).reshape(r * d, r * d)
        B = dagger(polar_unitary(G.T))
    return best, B


def commutator_condition(
    N: Channel, alg: AlgebraStructure, samples: int = 1000, seed: int = 0, refine: bool = True
) -> tuple[float, np.ndarray]:
    """Sampled lower estimate of ``sup ||[A (x) 1, (N^dagger-hat (x) id)(B)]||``.

    ``A`` ranges over unitaries of the algebra and ``B`` over the unit ball on
    env (x) C^dim_in. Returns the maximum and the array of sampled values; the
    best sample is refined by an ascent in ``B``.
    """
    _check_dims(N, alg)
    if samples < 1:
        raise InputError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    r, d = N.num_kraus, N.dim_in
    prods = error_products(N)
    As = random_algebra_unitaries(alg, samples, rng)
    eye = np.eye(d)
    values = np.empty(samples)
    best = (-1.0, None, None)
    for s in range(samples):
        B = haar_unitary(r * d, rng)
        X = extended_dual_complement(N, B)
        val = _commutator_norm(np.kron(As[s], eye), X)
        values[s] = val
        if val > best[0]:
            best = (val, As[s], B)
    top = float(values.max())
    if refine and top > 0:
        _, A, B = best
        Cs = np.einsum("ab,ijbc->ijac", A, prods) - np.einsum("ijab,bc->ijac", prods, A)
        top = max(top, _ascend_B(Cs, B)[0])
    return top, values


def commutator_sup(alg: AlgebraStructure, B, samples: int = 1000, seed: int = 0) -> float:
    """Sampled ``sup ||[U, B]||`` over unitaries ``U`` of the algebra.

    Satisfies ``||B - P_A'(B)|| <= sup <= 2 ||B - P_A'(B)||`` for the exact sup;
    the best sample is refined by a Powell search over the block generators.
    """
    B = as_matrix(B, "B")
    rng = np.random.default_rng(seed)
    Us = random_algebra_unitaries(alg, samples, rng)
    vals = np.linalg.norm(Us @ B - B @ Us, 2, axis=(1, 2))
    k = int(np.argmax(vals))
    U0 = Us[k]
    herm = _hermitian_basis_of(alg)

    def f(x):
        H = np.tensordot(x, herm, axes=1)
        w, v = np.linalg.eigh(H)
        U = U0 @ ((v * np.exp(1j * w)) @ dagger(v))
        return -_commutator_norm(U, B)

    # bounded coefficients keep exp(iH) accurate when the objective is flat
    bounds = [(-np.pi, np.pi)] * len(herm)
    res = so.minimize(
        f, np.zeros(len(herm)), method="Powell", bounds=bounds, options={"xtol": 1e-6, "maxfev": 4000}
    )
    return max(float(vals[k]), -float(res.fun))


def _hermitian_basis_of(alg: AlgebraStructure) -> np.ndarray:
    """Real basis of the Hermitian elements, block by block."""
    out = []
    for blk in alg.blocks:
        for p in range(blk.dA):
            for q in range(p, blk.dA):
                e = np.zeros((blk.dA, blk.dA), complex)
                e[p, q] = 1
                gens = [e + dagger(e)] if p == q else [e + dagger(e), 1j * (e - dagger(e))]
                for g in gens:
                    out.append(blk.iso @ np.kron(g, np.eye(blk.dB)) @ dagger(blk.iso))
    return np.array(out)


def product_degradation_demo(ops, N: Channel, B) -> tuple[list[float], float]:
    """Commutators of each ``A_i (x) 1`` and of the product ``A_1...A_n`` with ``(N^dagger-hat (x) id)(B)``."""
    mats = [as_matrix(A, "algebra element") for A in ops]
    if not mats:
        raise InputError("need at least one operator")
    for A in mats:
        if A.shape != (N.dim_in, N.dim_in):
            raise InputError(f"operators must be {N.dim_in}x{N.dim_in}")
        if operator_norm(A) > 1 + 1e-12:
            raise InputError("operators must have norm at most one")
    X = extended_dual_complement(N, B)
    eye = np.eye(N.dim_in)
    per = [_commutator_norm(np.kron(A, eye), X) for A in mats]
    prod = mats[0]
    for A in mats[1:]:
        prod = prod @ A
    total = _commutator_norm(np.kron(prod, eye), X)
    if total > sum(per) + 1e-9:
        raise ArithmeticError(f"product commutator {total:.3e} exceeds the sum {sum(per):.3e}")
    return per, total


# -- random instances ----------------------------------------------------------------


def random_instance(seed: int, dims=(2, 3, 4), max_rank: int = 4) -> tuple[Channel, AlgebraStructure]:
    """Seeded (channel, algebra) pair for bound verification.

    The channel mixes a Haar unitary with a Haar-dilated channel of rank up
    to ``max_rank - 1``; the weight of the random part is drawn uniformly so
    that ``delta`` spreads over its range. The algebra comes from the catalog.
    """
    rng = np.random.default_rng(seed)
    d = int(rng.choice(dims))
    alg = catalog_algebra(d, rng)
    rank = int(rng.integers(1, max_rank))
    noise = random_channel(d, d, rank, rng)
    q = float(rng.uniform())
    kraus = [np.sqrt(1 - q) * haar_unitary(d, rng)] + [np.sqrt(q) * k for k in noise.kraus]
    return make_channel(kraus), alg
