import logging

import numpy as np
import pytest

from aqec.matcore import PAULI_X, PAULI_Y, PAULI_Z, InputError, random_hermitian
from aqec.sdp import ConstraintBuilder, SDPProblem, hermitian_basis, sdp_solve, superop_matrix

PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


def test_trace_objective():
    p = SDPProblem.from_constraints(np.eye(2), [(np.eye(2), 1.0)])
    sol = sdp_solve(p)
    assert sol.status == "optimal"
    assert sol.primal_value == pytest.approx(1, abs=1e-7)


def test_diagonal_objective_picks_ground_state():
    p = SDPProblem.from_constraints(np.diag([1.0, -1.0]), [(np.eye(2), 1.0)])
    sol = sdp_solve(p)
    assert sol.primal_value == pytest.approx(1, abs=1e-7)
    np.testing.assert_allclose(sol.X[0], np.diag([1, 0]), atol=1e-6)


def bloch_disc_oracle(C, n, b, grid=4000):
    """max Tr(C X) over X = (1 + r.sigma)/2, |r| <= 1, r.n = b (brute force on the disc edge)."""
    n = n / np.linalg.norm(n)
    # the objective is linear in r, so the max sits on the boundary circle
    c = np.array([np.trace(C @ s).real for s in PAULIS]) / 2
    u = np.cross(n, [1.0, 0, 0])
    if np.linalg.norm(u) < 1e-6:
        u = np.cross(n, [0, 1.0, 0])
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    rad = np.sqrt(1 - b**2)
    th = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    r = b * n[None, :] + rad * (np.cos(th)[:, None] * u + np.sin(th)[:, None] * v)
    best = (np.trace(C).real / 2 + r @ c).max()
    # refine around the best grid point
    k = np.argmax(r @ c)
    th2 = np.linspace(th[k] - 0.01, th[k] + 0.01, 2001)
    r2 = b * n[None, :] + rad * (np.cos(th2)[:, None] * u + np.sin(th2)[:, None] * v)
    return max(best, (np.trace(C).real / 2 + r2 @ c).max())


@pytest.mark.parametrize("seed", range(8))
def test_random_problem_matches_bloch_oracle(seed):
    rng = np.random.default_rng(seed)
    C = random_hermitian(2, rng)
    n = rng.standard_normal(3)
    b = rng.uniform(-0.8, 0.8)
    nn = n / np.linalg.norm(n)
    A = sum(x * s for x, s in zip(nn, PAULIS))  # Tr(A X) = r.n
    p = SDPProblem.from_constraints(C, [(np.eye(2), 1.0), (A, b)])
    sol = sdp_solve(p)
    assert sol.status == "optimal"
    assert sol.primal_value == pytest.approx(bloch_disc_oracle(C, n, b), abs=1e-4)


def test_solution_invariants(rng):
    n = 5
    C = random_hermitian(n, rng)
    cons = [(np.eye(n), 1.0)] + [(random_hermitian(n, rng), 0.0) for _ in range(3)]
    sol = sdp_solve(SDPProblem.from_constraints(C, cons))
    assert sol.status == "optimal"
    assert sol.gap <= 1e-6 * (1 + abs(sol.primal_value))
    assert np.linalg.eigvalsh(sol.X[0]).min() > -1e-8
    for A, b in cons:
        assert np.trace(A @ sol.X[0]).real == pytest.approx(b, abs=1e-7)
    # dual feasibility: sum y_k A_k - C >= 0
    S = sum(y * A for y, (A, _) in zip(sol.y, cons)) - C
    assert np.linalg.eigvalsh(S).min() > -1e-7


def test_against_cvxpy(rng):
    cp = pytest.importorskip("cvxpy")
    n = 4
    C = random_hermitian(n, rng)
    As = [random_hermitian(n, rng) for _ in range(2)]
    cons = [(np.eye(n), 1.0)] + [(A, 0.1) for A in As]
    X = cp.Variable((n, n), hermitian=True)
    prob = cp.Problem(
        cp.Maximize(cp.real(cp.trace(C @ X))),
        [X >> 0] + [cp.real(cp.trace(A @ X)) == b for A, b in cons],
    )
    prob.solve(solver="CLARABEL")
    if prob.status != "optimal":
        pytest.skip("reference solver did not converge")
    sol = sdp_solve(SDPProblem.from_constraints(C, cons))
    assert sol.primal_value == pytest.approx(prob.value, abs=1e-5)


def test_block_problem_with_builder():
    # maximize Tr(Z X1) with X1 = X2 + diag(0, 1), Tr X2 = 1: Tr(Z X2) - 1 <= 0
    cb = ConstraintBuilder((2, 2))
    cb.hermitian_equality({0: "id", 1: superop_matrix(lambda X: -X, 2, 2)}, np.diag([0.0, 1.0]))
    cb.scalar_equality({1: np.eye(2)}, 1.0)
    sol = sdp_solve(cb.build([PAULI_Z, None]))
    assert sol.primal_value == pytest.approx(0.0, abs=1e-6)
    np.testing.assert_allclose(sol.X[1], np.diag([1, 0]), atol=1e-5)


def test_hermitian_basis_orthonormal():
    H = hermitian_basis(3).toarray()
    np.testing.assert_allclose(H.conj() @ H.T, np.eye(9), atol=1e-14)
    for row in H:
        M = row.reshape(3, 3)
        np.testing.assert_allclose(M, M.conj().T, atol=1e-14)


def test_validation():
    with pytest.raises(InputError):
        SDPProblem.from_constraints(np.array([[0, 1], [0, 0]]), [(np.eye(2), 1.0)])
    with pytest.raises(InputError):
        SDPProblem.from_constraints(np.eye(2), [(np.array([[0, 1j], [0, 0]]), 1.0)])
    too_many = [(random_hermitian(1, np.random.default_rng(k)), 1.0) for k in range(2)]
    with pytest.raises(InputError):
        SDPProblem.from_constraints(np.eye(1), too_many)


def test_max_iter_reports_status(rng):
    C = random_hermitian(3, rng)
    sol = sdp_solve(SDPProblem.from_constraints(C, [(np.eye(3), 1.0)]), max_iter=2)
    assert sol.status == "max_iter"
    assert len(sol.trace) == 2


def test_deterministic(rng):
    C = random_hermitian(4, rng)
    p = SDPProblem.from_constraints(C, [(np.eye(4), 1.0)])
    a, b = sdp_solve(p), sdp_solve(p)
    assert a.primal_value == b.primal_value
    np.testing.assert_array_equal(a.X[0], b.X[0])


def test_verbose_trace_goes_to_log(caplog):
    p = SDPProblem.from_constraints(np.eye(2), [(np.eye(2), 1.0)])
    with caplog.at_level(logging.INFO, logger="aqec.sdp"):
        sdp_solve(p, verbose=True)
    assert any("sdp" in r.message for r in caplog.records)
