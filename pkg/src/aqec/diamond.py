"""Diamond-norm distances between channels.

Two semidefinite programs are provided, both written over the Choi matrix
``J`` of the map (input factor first):

* :func:`diamond_norm_trace_annihilating` for Hermiticity-preserving maps
  with ``Tr_out J = 0`` (differences of channels)::

      ||Phi||_dia = 2 max <J, W>   s.t.  0 <= W <= rho (x) 1,  Tr rho = 1

* :func:`diamond_norm_general` for arbitrary linear maps::

      ||Phi||_dia = max Re <J, Y>  s.t.  [[rho0 (x) 1, Y], [Y^dag, rho1 (x) 1]] >= 0

:func:`cb_check` is a sampling lower bound used as an independent check.
"""

from __future__ import annotations

import numpy as np
import scipy.optimize as so
import scipy.sparse as sp

from .channels import Channel, choi, tensor_id
from .matcore import InputError, partial_trace, trace_norm
from .sdp import ConstraintBuilder, SolverError, sdp_solve, superop_matrix

DEFAULT_TOL = 1e-9


def _check_pair(N1: Channel, N2: Channel):
    if (N1.dim_in, N1.dim_out) != (N2.dim_in, N2.dim_out):
        raise InputError(
            f"channel dimensions differ: {N1.dim_in}->{N1.dim_out} vs {N2.dim_in}->{N2.dim_out}"
        )


def _kron_id_map(din: int, dout: int) -> sp.csr_matrix:
    """Superoperator ``rho -> rho (x) 1_dout``."""
    return superop_matrix(lambda r: np.kron(r, np.eye(dout)), din, din * dout)


def _solve_or_raise(problem, tol, what):
    sol = sdp_solve(problem, tol=tol)
    if sol.status != "optimal":
        raise SolverError(f"{what}: solver stopped with status {sol.status}", sol.trace)
    return sol


def diamond_norm_trace_annihilating(J: np.ndarray, din: int, dout: int, tol: float = DEFAULT_TOL) -> float:
    """Diamond norm of a Hermiticity-preserving, trace-annihilating map from its Choi matrix."""
    n = din * dout
    J = (J + J.conj().T) / 2
    if np.abs(partial_trace(J, (din, dout), 1)).max() > 1e-8 * max(1.0, np.abs(J).max()):
        raise InputError("map is not trace annihilating")
    if np.abs(J).max() < 1e-14:
        return 0.0
    # blocks: W, S = rho (x) 1 - W, rho
    cb = ConstraintBuilder((n, n, din))
    cb.hermitian_equality({0: "id", 1: "id", 2: -_kron_id_map(din, dout)}, np.zeros((n, n)))
    cb.scalar_equality({2: np.eye(din)}, 1.0)
    sol = _solve_or_raise(cb.build([J, None, None]), tol, "diamond norm")
    return float(np.clip(2 * sol.primal_value, 0.0, 2.0 * np.abs(J).sum()))


def diamond_norm_general(J: np.ndarray, din: int, dout: int, tol: float = DEFAULT_TOL) -> float:
    """Diamond norm of an arbitrary linear map from its Choi matrix."""
    n = din * dout
    if np.abs(J).max() < 1e-14:
        return 0.0
    C = np.zeros((2 * n, 2 * n), complex)
    C[:n, n:] = J / 2
    C[n:, :n] = J.conj().T / 2
    # blocks: Y (2n), rho0, rho1
    top = superop_matrix(lambda Y: Y[:n, :n], 2 * n, n)
    bottom = superop_matrix(lambda Y: Y[n:, n:], 2 * n, n)
    kid = _kron_id_map(din, dout)
    cb = ConstraintBuilder((2 * n, din, din))
    cb.hermitian_equality({0: top, 1: -kid}, np.zeros((n, n)))
    cb.hermitian_equality({0: bottom, 2: -kid}, np.zeros((n, n)))
    cb.scalar_equality({1: np.eye(din)}, 1.0)
    cb.scalar_equality({2: np.eye(din)}, 1.0)
    sol = _solve_or_raise(cb.build([C, None, None]), tol, "diamond norm")
    return max(0.0, float(sol.primal_value))


def diamond_distance(N1: Channel, N2: Channel, tol: float = DEFAULT_TOL) -> float:
    """``||N1 - N2||_dia``, a number in ``[0, 2]``."""
    _check_pair(N1, N2)
    J = choi(N1) - choi(N2)
    return min(2.0, diamond_norm_trace_annihilating(J, N1.dim_in, N1.dim_out, tol))


def _difference_output_norm(N1: Channel, N2: Channel, psi: np.ndarray) -> float:
    """``||((N1 - N2) (x) id)(|psi><psi|)||_1`` for ``psi`` on input (x) ancilla."""
    d = N1.dim_in
    M = psi.reshape(d, d)  # |psi> = sum_{k,a} M[k,a] |k>|a>
    out = np.zeros((N1.dim_out * d,) * 2, complex)
    for sign, N in ((1, N1), (-1, N2)):
        for E in N.kraus:
            v = (E @ M).reshape(-1)
            out += sign * np.outer(v, v.conj())
    return trace_norm(out)


def _psi_from_params(x: np.ndarray) -> np.ndarray:
    half = x.size // 2
    v = x[:half] + 1j * x[half:]
    nv = np.linalg.norm(v)
    return v / nv if nv > 0 else v


def cb_check(
    N1: Channel, N2: Channel, samples: int = 1000, seed: int = 0, refine: bool = True
) -> float:
    """Lower bound on ``||N1 - N2||_dia`` from sampled pure inputs on the doubled space.

    The best of ``samples`` Haar-random states is refined by a Powell
    (coordinate-direction) ascent.
    """
    _check_pair(N1, N2)
    rng = np.random.default_rng(seed)
    d = N1.dim_in
    best, best_x = -1.0, None
    for _ in range(max(1, samples)):
        x = rng.standard_normal(2 * d * d)
        val = _difference_output_norm(N1, N2, _psi_from_params(x))
        if val > best:
            best, best_x = val, x
    if refine and best > 0:
        res = so.minimize(
            lambda x: -_difference_output_norm(N1, N2, _psi_from_params(x)),
            best_x,
            method="Powell",
            options={"xtol": 1e-8, "ftol": 1e-12, "maxfev": 20000},
        )
        best = max(best, -float(res.fun))
    return best


def stabilized_distance(N1: Channel, N2: Channel, k: int, tol: float = DEFAULT_TOL) -> float:
    """Diamond distance of ``N1 (x) id_k`` and ``N2 (x) id_k``."""
    return diamond_distance(tensor_id(N1, k), tensor_id(N2, k), tol)
