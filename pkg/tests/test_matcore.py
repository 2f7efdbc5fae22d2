import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqec.matcore import (
    InputError,
    eig_hermitian,
    extend_orthonormal,
    haar_unitary,
    kron,
    nullspace,
    operator_norm,
    partial_trace,
    polar_unitary,
    psd_sqrt,
    random_matrix,
    swap_factors,
    trace_norm,
)


def partial_trace_loops(M, dA, dB, which):
    if which == 1:
        out = np.zeros((dA, dA), complex)
        for a in range(dA):
            for c in range(dA):
                out[a, c] = sum(M[a * dB + j, c * dB + j] for j in range(dB))
    else:
        out = np.zeros((dB, dB), complex)
        for b in range(dB):
            for c in range(dB):
                out[b, c] = sum(M[i * dB + b, i * dB + c] for i in range(dA))
    return out


@pytest.mark.parametrize("dA,dB", [(1, 3), (2, 2), (3, 2), (2, 5)])
@pytest.mark.parametrize("which", [0, 1])
def test_partial_trace_matches_loops(rng, dA, dB, which):
    M = random_matrix(dA * dB, dA * dB, rng)
    np.testing.assert_allclose(partial_trace(M, (dA, dB), which), partial_trace_loops(M, dA, dB, which), atol=1e-12)


def test_partial_trace_selectors(rng):
    M = random_matrix(6, 6, rng)
    np.testing.assert_allclose(partial_trace(M, (2, 3), "A"), partial_trace(M, (2, 3), 0))
    np.testing.assert_allclose(partial_trace(M, (2, 3), "B"), partial_trace(M, (2, 3), 1))
    with pytest.raises(InputError):
        partial_trace(M, (2, 3), 2)
    with pytest.raises(InputError):
        partial_trace(M, (2, 2), 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_partial_trace_of_product(dA, dB, seed):
    rng = np.random.default_rng(seed)
    A, B = random_matrix(dA, dA, rng), random_matrix(dB, dB, rng)
    AB = kron(A, B)
    np.testing.assert_allclose(partial_trace(AB, (dA, dB), 1), np.trace(B) * A, atol=1e-10)
    np.testing.assert_allclose(partial_trace(AB, (dA, dB), 0), np.trace(A) * B, atol=1e-10)


def test_kron_ordering():
    a = np.array([0, 1.0])
    b = np.array([1.0, 0, 0])
    v = kron(a[:, None], b[:, None]).ravel()
    # |1>|0> sits at 1 * 3 + 0
    assert v[3] == 1 and v.sum() == 1


def test_swap_factors(rng):
    A, B = random_matrix(2, 2, rng), random_matrix(3, 3, rng)
    np.testing.assert_allclose(swap_factors(kron(A, B), (2, 3)), kron(B, A), atol=1e-14)


def test_norms_against_eigenvalues(rng):
    H = random_matrix(5, 5, rng)
    H = H + H.conj().T
    w = np.linalg.eigvalsh(H)
    assert trace_norm(H) == pytest.approx(np.abs(w).sum(), rel=1e-12)
    assert operator_norm(H) == pytest.approx(np.abs(w).max(), rel=1e-12)


def test_nullspace_rank_and_orthonormality(rng):
    A = random_matrix(3, 7, rng)
    N = nullspace(A)
    assert N.shape == (7, 4)
    np.testing.assert_allclose(A @ N, 0, atol=1e-12)
    np.testing.assert_allclose(N.conj().T @ N, np.eye(4), atol=1e-12)
    # tall matrices take the compressed path
    T = np.vstack([A] * 5)
    assert nullspace(T).shape == (7, 4)


def test_nullspace_of_rounding_noise_with_scale():
    noise = 1e-17 * np.ones((4, 4))
    assert nullspace(noise).shape[1] < 4
    assert nullspace(noise, scale=1.0).shape[1] == 4


def test_eig_hermitian_rejects_non_hermitian(rng):
    with pytest.raises(InputError):
        eig_hermitian(random_matrix(3, 3, rng))


def test_haar_unitary_is_unitary(rng):
    U = haar_unitary(6, rng)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(6), atol=1e-12)


def test_haar_first_moment(rng):
    # E|U_00|^2 = 1/d
    vals = [abs(haar_unitary(3, rng)[0, 0]) ** 2 for _ in range(4000)]
    assert np.mean(vals) == pytest.approx(1 / 3, abs=0.02)


def test_polar_and_sqrt(rng):
    T = random_matrix(4, 4, rng)
    U = polar_unitary(T)
    P = U.conj().T @ T
    np.testing.assert_allclose(P, P.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh((P + P.conj().T) / 2).min() > -1e-12
    S = psd_sqrt(T @ T.conj().T)
    np.testing.assert_allclose(S @ S, T @ T.conj().T, atol=1e-10)


def test_extend_orthonormal_skips_dependent(rng):
    basis = []
    v = random_matrix(5, 1, rng).ravel()
    added = extend_orthonormal(basis, [v, 2 * v, v + 1e-14], 1e-9)
    assert len(added) == 1
