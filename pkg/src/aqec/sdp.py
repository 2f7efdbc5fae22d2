"""Small dense complex semidefinite programming.

Problems are stated in primal standard form over a block-diagonal Hermitian
variable ``X = diag(X_1, ..., X_p)``::

    maximize    sum_b Re Tr(C_b X_b)
    subject to  sum_b Tr(A_kb X_b) = b_k,   k = 1..m
                X_b >= 0

with dual ``minimize b.u  s.t.  sum_k u_k A_k - C >= 0``. The solver is an
infeasible primal-dual path-following method with Nesterov-Todd scaling and
Mehrotra predictor-corrector steps, working directly in complex arithmetic.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numba
import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .matcore import InputError, as_matrix, dagger

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Numerical breakdown inside the interior-point iteration."""

    def __init__(self, message: str, trace: list[dict] | None = None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(eq=False)
class SDPProblem:
    """Block-diagonal SDP in primal standard form (see module docstring).

    ``ops[b]`` is a sparse ``(m, n_b^2)`` matrix whose row ``k`` is the
    row-major vectorization of the Hermitian matrix ``A_kb``.
    """

    block_dims: tuple[int, ...]
    objective: list[np.ndarray]
    ops: list[sp.csr_matrix]
    rhs: np.ndarray

    def __post_init__(self):
        self.block_dims = tuple(int(n) for n in self.block_dims)
        self.rhs = np.asarray(self.rhs, dtype=float)
        m = self.rhs.shape[0]
        for n, C, A in zip(self.block_dims, self.objective, self.ops):
            if C.shape != (n, n) or A.shape != (m, n * n):
                raise InputError("inconsistent SDP block dimensions")
            if np.abs(C - dagger(C)).max() > 1e-10 * max(1.0, np.abs(C).max()):
                raise InputError("objective must be Hermitian")
        if m >= sum(n * n for n in self.block_dims):
            raise InputError("too many constraints for the variable size")

    @property
    def psd_dim(self) -> int:
        return sum(self.block_dims)

    @property
    def num_constraints(self) -> int:
        return self.rhs.shape[0]

    @classmethod
    def from_constraints(
        cls,
        objective,
        constraints: Sequence[tuple],
        block_dims: Sequence[int] | None = None,
    ) -> "SDPProblem":
        """Build from explicit matrices.

        With ``block_dims=None`` there is a single block: ``objective`` is a
        matrix and each constraint is ``(A, b)``. Otherwise ``objective`` is a
        list of per-block matrices (``None`` for zero) and each constraint is
        ``({block: A_b}, b)``.
        """
        if block_dims is None:
            C = as_matrix(objective, "objective")
            dims = (C.shape[0],)
            objective = [C]
            constraints = [({0: A}, b) for A, b in constraints]
        else:
            dims = tuple(block_dims)
            objective = [
                np.zeros((n, n), complex) if C is None else as_matrix(C, "objective")
                for n, C in zip(dims, objective)
            ]
        rows: list[list] = [[] for _ in dims]
        rhs = []
        for parts, b in constraints:
            rhs.append(float(b))
            for blk, n in enumerate(dims):
                A = parts.get(blk)
                if A is None:
                    rows[blk].append(sp.csr_matrix((1, n * n), dtype=complex))
                    continue
                A = as_matrix(A, "constraint")
                if np.abs(A - dagger(A)).max() > 1e-10 * max(1.0, np.abs(A).max()):
                    raise InputError("constraint matrices must be Hermitian")
                rows[blk].append(sp.csr_matrix(A.reshape(1, n * n)))
        ops = [sp.vstack(r, format="csr") if r else sp.csr_matrix((0, n * n)) for r, n in zip(rows, dims)]
        return cls(dims, objective, ops, np.array(rhs))


@dataclass(eq=False)
class SDPSolution:
    primal_value: float
    dual_value: float
    X: list[np.ndarray]
    y: np.ndarray
    Z: list[np.ndarray]
    status: str
    iterations: int
    trace: list[dict] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return abs(self.primal_value - self.dual_value)


# -- constraint construction ---------------------------------------------------


def superop_matrix(f: Callable[[np.ndarray], np.ndarray], n_in: int, n_out: int) -> sp.csr_matrix:
    """Matrix of a linear map on ``n_in x n_in`` operators in row-major vec form."""
    cols = []
    for a in range(n_in):
        for b in range(n_in):
            e = np.zeros((n_in, n_in), complex)
            e[a, b] = 1
            out = np.asarray(f(e), complex)
            if out.shape != (n_out, n_out):
                raise InputError("linear map returned the wrong shape")
            cols.append(out.reshape(-1))
    M = np.array(cols).T
    M[np.abs(M) < 1e-15] = 0
    return sp.csr_matrix(M)


def hermitian_basis(n: int) -> sp.csr_matrix:
    """Orthonormal Hermitian basis of ``n x n`` matrices as sparse vec rows."""
    rows, cols, vals = [], [], []
    r = 0
    s = 1 / np.sqrt(2)
    for a in range(n):
        rows.append(r)
        cols.append(a * n + a)
        vals.append(1.0)
        r += 1
    for a in range(n):
        for b in range(a + 1, n):
            rows += [r, r]
            cols += [a * n + b, b * n + a]
            vals += [s, s]
            r += 1
            rows += [r, r]
            cols += [a * n + b, b * n + a]
            vals += [1j * s, -1j * s]
            r += 1
    return sp.csr_matrix((np.array(vals, complex), (rows, cols)), shape=(n * n, n * n))


class ConstraintBuilder:
    """Accumulates linear equality constraints for :class:`SDPProblem`."""

    def __init__(self, block_dims: Sequence[int]):
        self.block_dims = tuple(block_dims)
        self._rows: list[list[sp.csr_matrix]] = [[] for _ in self.block_dims]
        self._rhs: list[np.ndarray] = []

    def hermitian_equality(self, terms: Mapping[int, object], R) -> None:
        """Impose ``sum_b L_b(X_b) = R`` for a Hermitian ``n x n`` matrix ``R``.

        Each ``L_b`` is a sparse superoperator matrix (see :func:`superop_matrix`)
        or the string ``"id"``; all ``L_b`` must preserve Hermiticity.
        """
        R = np.asarray(R, complex)
        n = R.shape[0]
        H = hermitian_basis(n)
        for blk, nb in enumerate(self.block_dims):
            L = terms.get(blk)
            if L is None:
                self._rows[blk].append(sp.csr_matrix((n * n, nb * nb), dtype=complex))
            elif isinstance(L, str):
                if L != "id" or nb != n:
                    raise InputError("identity term needs matching sizes")
                self._rows[blk].append(H.copy())
            else:
                self._rows[blk].append(sp.csr_matrix(H @ sp.csr_matrix(L).conj()))
        self._rhs.append(np.real(H.conj() @ R.reshape(-1)))

    def scalar_equality(self, terms: Mapping[int, np.ndarray], b: float) -> None:
        """Impose ``sum_b Tr(A_b X_b) = b``."""
        for blk, nb in enumerate(self.block_dims):
            A = terms.get(blk)
            row = sp.csr_matrix((1, nb * nb), dtype=complex) if A is None else sp.csr_matrix(
                np.asarray(A, complex).reshape(1, nb * nb)
            )
            self._rows[blk].append(row)
        self._rhs.append(np.array([float(b)]))

    def build(self, objective: Sequence) -> SDPProblem:
        objective = [
            np.zeros((n, n), complex) if C is None else np.asarray(C, complex)
            for n, C in zip(self.block_dims, objective)
        ]
        ops = [sp.vstack(r, format="csr") for r in self._rows]
        return SDPProblem(self.block_dims, objective, ops, np.concatenate(self._rhs))


# -- interior point -------------------------------------------------------------


def _herm(M: np.ndarray) -> np.ndarray:
    return (M + dagger(M)) / 2


class _Operators:
    def __init__(self, p: SDPProblem):
        self.dims = p.block_dims
        self.ops = p.ops
        self.ops_conj = [A.conj().tocsr() for A in p.ops]
        self.opsT = [A.T.tocsr() for A in p.ops]
        self.rows = [np.flatnonzero(np.diff(A.indptr)) for A in p.ops]
        self.sub = [A[r] for A, r in zip(p.ops, self.rows)]
        self.sub_conj = [A.conj().tocsr() for A in self.sub]
        self.m = p.num_constraints

    def apply(self, Xs) -> np.ndarray:
        out = np.zeros(self.m)
        for Ac, X in zip(self.ops_conj, Xs):
            out += np.real(Ac @ X.reshape(-1))
        return out

    def adjoint(self, y) -> list[np.ndarray]:
        return [_herm((AT @ y).reshape(n, n)) for AT, n in zip(self.opsT, self.dims)]

    def _groups(self) -> list[list[int]]:
        """Blocks with identical constraint rows share one sparse Schur pass."""
        groups: list[list[int]] = []
        for b, A in enumerate(self.sub):
            for g in groups:
                B = self.sub[g[0]]
                if (
                    np.array_equal(self.rows[g[0]], self.rows[b])
                    and A.shape == B.shape
                    and np.array_equal(A.indptr, B.indptr)
                    and np.array_equal(A.indices, B.indices)
                    and np.array_equal(A.data, B.data)
                ):
                    g.append(b)
                    break
            else:
                groups.append([b])
        return groups

    def schur(self, Ws) -> np.ndarray:
        """``M_kl = sum_b Tr(A_kb W_b A_lb W_b)``."""
        if not hasattr(self, "groups"):
            self.groups = self._groups()
        M = np.zeros((self.m, self.m))
        for g in self.groups:
            rows, A, Ac = self.rows[g[0]], self.sub[g[0]], self.sub_conj[g[0]]
            if rows.size == 0:
                continue
            n = Ws[g[0]].shape[0]
            nnz = np.diff(A.indptr)
            few = np.flatnonzero(nnz <= SPARSE_ROW_NNZ)
            many = np.flatnonzero(nnz > SPARSE_ROW_NNZ)
            if few.size:
                As = A[few]
                out = _schur_sparse_rows(
                    As.indptr, As.indices, As.data, n, np.stack([Ws[b] for b in g])
                )
                r = rows[few]
                if r.size == self.m:
                    M += out
                else:
                    M[np.ix_(r, r)] += out
            if many.size:
                dense = A[many].toarray().reshape(-1, n, n)
                cols = np.zeros((rows.size, many.size))
                for b in g:
                    W = Ws[b]
                    G = np.empty_like(dense)
                    for s in range(0, many.size, 512):
                        G[s : s + 512] = W @ dense[s : s + 512] @ W
                    cols += np.real(Ac @ G.reshape(many.size, -1).T)  # (rows, many)
                M[np.ix_(rows, rows[many])] += cols
                M[np.ix_(rows[many], rows[few])] += cols[few].T
        return M


#: rows with at most this many nonzeros go through the sparse Schur kernel
SPARSE_ROW_NNZ = 8


@numba.njit(cache=True)
def _schur_sparse_rows(indptr, indices, data, n, Ws):  # pragma: no cover - compiled
    # sum_w Re Tr(A_k W A_l W) for CSR rows A_k
    m = indptr.shape[0] - 1
    out = np.zeros((m, m))
    for k in range(m):
        for l in range(k, m):
            acc = 0.0
            for e in range(indptr[k], indptr[k + 1]):
                p = indices[e] // n
                q = indices[e] % n
                ae = np.conj(data[e])
                for f in range(indptr[l], indptr[l + 1]):
                    r = indices[f] // n
                    s = indices[f] % n
                    c = ae * data[f]
                    for w in range(Ws.shape[0]):
                        acc += (c * Ws[w, p, r] * np.conj(Ws[w, q, s])).real
            out[k, l] = acc
            out[l, k] = acc
    return out


def _nt_scaling(X: np.ndarray, Z: np.ndarray):
    LX = np.linalg.cholesky(X)
    LZ = np.linalg.cholesky(Z)
    U, s, Vh = np.linalg.svd(dagger(LZ) @ LX)
    G = LX @ dagger(Vh) / np.sqrt(s)
    Ginv = (np.sqrt(s)[:, None] * Vh) @ sla.solve_triangular(LX, np.eye(X.shape[0]), lower=True)
    return G, Ginv, s


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(X.shape[0]), lower=True)
    lam = np.linalg.eigvalsh(_herm(Li @ dX @ dagger(Li)))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _inner(As, Bs) -> float:
    return float(sum(np.real(np.vdot(a, b)) for a, b in zip(As, Bs)))


def _factor(M: np.ndarray):
    scale = max(np.abs(np.diag(M)).max(), 1e-300)
    diag = np.arange(M.shape[0])
    for reg in (0.0, 1e-14, 1e-12, 1e-10):
        Mr = M.copy()
        Mr[diag, diag] += reg * scale
        try:
            return ("chol", sla.cho_factor(Mr, lower=True, overwrite_a=True, check_finite=False))
        except np.linalg.LinAlgError:
            continue
    return ("lu", sla.lu_factor(M, check_finite=False))


def _solve(fac, r: np.ndarray) -> np.ndarray:
    kind, f = fac
    if kind == "chol":
        return sla.cho_solve(f, r, check_finite=False)
    return sla.lu_solve(f, r, check_finite=False)


#: residual level accepted as optimal when the iteration stalls
ACCEPT_TOL = 1e-7
STALL_ITERS = 5


def sdp_solve(
    problem: SDPProblem,
    tol: float = 1e-7,
    max_iter: int = 200,
    verbose: bool | None = None,
) -> SDPSolution:
    """Solve ``problem`` to relative gap and infeasibilities below ``tol``.

    Returns an :class:`SDPSolution` with ``status`` ``"optimal"`` on success
    or ``"max_iter"`` (best iterate). When progress stalls or the Newton
    system breaks down, the last iterate is accepted as optimal if its
    residuals are below ``ACCEPT_TOL``; otherwise :class:`SolverError` is
    raised.
    """
    if verbose is None:
        verbose = os.environ.get("AQEC_VERBOSE") == "1"
    ops = _Operators(problem)
    dims = problem.block_dims
    b = problem.rhs
    Cm = [-_herm(C) for C in problem.objective]  # internal form: minimize <Cm, X>
    m = ops.m
    nbar = sum(dims)

    X, Z = [], []
    for blk, n in enumerate(dims):
        A = problem.ops[blk]
        normA = np.sqrt(np.asarray(abs(A).power(2).sum(axis=1)).ravel())
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(normA > 0, (1 + np.abs(b)) / (1 + normA), 0.0)
        xi = max(10.0, np.sqrt(n), n * (ratio.max() if m else 0.0))
        eta = max(10.0, np.sqrt(n), np.linalg.norm(Cm[blk]), normA.max() if m else 0.0)
        X.append(xi * np.eye(n, dtype=complex))
        Z.append(eta * np.eye(n, dtype=complex))
    y = np.zeros(m)

    normb = 1 + np.linalg.norm(b)
    normC = 1 + np.sqrt(sum(np.linalg.norm(c) ** 2 for c in Cm))
    trace: list[dict] = []
    status = "max_iter"
    it = 0
    for it in range(1, max_iter + 1):
        rp = b - ops.apply(X)
        Aty = ops.adjoint(y)
        Rd = [c - z - a for c, z, a in zip(Cm, Z, Aty)]
        pobj = _inner(Cm, X)
        dobj = float(b @ y)
        mu = _inner(X, Z) / nbar
        pinf = np.linalg.norm(rp) / normb
        dinf = np.sqrt(sum(np.linalg.norm(r) ** 2 for r in Rd)) / normC
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        compl = _inner(X, Z) / (1 + abs(pobj) + abs(dobj))
        rec = dict(iter=it, pobj=-pobj, dobj=-dobj, pinf=pinf, dinf=dinf, gap=relgap, mu=mu)
        trace.append(rec)
        if verbose:
            log.info("sdp %3d  p=% .10e d=% .10e  pinf=%.1e dinf=%.1e gap=%.1e", it, -pobj, -dobj, pinf, dinf, relgap)
        err = max(pinf, dinf, relgap, compl)
        if err <= tol:
            status = "optimal"
            break
        if not np.isfinite(mu) or not np.isfinite(pobj):
            raise SolverError("non-finite iterate", trace)
        if len(trace) > STALL_ITERS and err <= ACCEPT_TOL:
            prev = max(trace[-1 - STALL_ITERS][k] for k in ("pinf", "dinf", "gap"))
            if err > 0.5 * prev:
                log.info("sdp stalled at residual %.1e; accepting", err)
                status = "optimal"
                break
        last = (X, y, Z, err)
        try:
            scal = [_nt_scaling(x, z) for x, z in zip(X, Z)]
        except np.linalg.LinAlgError as exc:
            if err <= ACCEPT_TOL:
                status = "optimal"
                break
            raise SolverError(f"iterate lost positive definiteness at iteration {it}", trace) from exc
        Ws = [_herm(G @ dagger(G)) for G, _, _ in scal]
        M = ops.schur(Ws)
        if not np.all(np.isfinite(M)):
            raise SolverError(f"Schur complement not finite at iteration {it}", trace)
        fac = _factor(M)
        WRW = ops.apply([W @ r @ W for W, r in zip(Ws, Rd)])

        def direction(Rtilde):
            Rc = []
            for (G, _, lam), Rt in zip(scal, Rtilde):
                S = 2 * Rt / (lam[:, None] + lam[None, :])
                Rc.append(_herm(G @ S @ dagger(G)))
            rhs = rp - ops.apply(Rc) + WRW
            dy = _solve(fac, rhs)
            dZ = [r - a for r, a in zip(Rd, ops.adjoint(dy))]
            dX = [_herm(rc - W @ dz @ W) for rc, W, dz in zip(Rc, Ws, dZ)]
            return dX, dy, dZ

        # predictor
        Rt = [-np.diag(lam**2).astype(complex) for _, _, lam in scal]
        dX, dy, dZ = direction(Rt)
        ap = min(1.0, min(_max_step(x, d) for x, d in zip(X, dX)))
        ad = min(1.0, min(_max_step(z, d) for z, d in zip(Z, dZ)))
        mu_aff = _inner([x + ap * d for x, d in zip(X, dX)], [z + ad * d for z, d in zip(Z, dZ)]) / nbar
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3
        # corrector
        Rt = []
        for (G, Ginv, lam), dx, dz in zip(scal, dX, dZ):
            dXt = Ginv @ dx @ dagger(Ginv)
            dZt = dagger(G) @ dz @ G
            Rt.append(sigma * mu * np.eye(len(lam)) - np.diag(lam**2) - (dXt @ dZt + dZt @ dXt) / 2)
        dX, dy, dZ = direction(Rt)
        gamma = 0.9 + 0.09 * min(ap, ad)
        ap = min(1.0, gamma * min(_max_step(x, d) for x, d in zip(X, dX)))
        ad = min(1.0, gamma * min(_max_step(z, d) for z, d in zip(Z, dZ)))
        X = [_herm(x + ap * d) for x, d in zip(X, dX)]
        y = y + ad * dy
        Z = [_herm(z + ad * d) for z, d in zip(Z, dZ)]
        if max(ap, ad) < 1e-10:
            if last[3] <= ACCEPT_TOL:
                X, y, Z = last[:3]
                status = "optimal"
                break
            raise SolverError(f"step length collapsed at iteration {it}", trace)

    u = -y
    Zout = [_herm(z) for z in Z]
    return SDPSolution(
        primal_value=-_inner(Cm, X),
        dual_value=float(b @ u),
        X=X,
        y=u,
        Z=Zout,
        status=status,
        iterations=it,
        trace=trace,
    )
