import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from aqec.algebras import (
    AlgebraStructure,
    NonUnitalError,
    OperatorBasis,
    basis_of,
    block_algebra,
    catalog_algebra,
    closure_defect,
    code_algebra,
    commutant_of_set,
    commutant_projector_channel,
    commutant_structure,
    conjugate,
    diagonal_algebra,
    element_from_blocks,
    full_algebra,
    generate_algebra,
    membership,
    project_algebra,
    project_commutant,
    projector_channel,
    random_algebra_unitaries,
    scalar_algebra,
    structure_from_basis,
    subspace_distance,
    twirl_estimate,
)
from aqec.channels import apply, apply_dual, choi, compose, tp_defect
from aqec.matcore import PAULI_Z, InputError, haar_unitary, random_matrix
from conftest import random_shape


def commutant_oracle(ops):
    """Brute-force commutant: null space of X -> [G, X] for every G, via a scipy SVD."""
    d = ops[0].shape[0]
    eye = np.eye(d)
    # HS-normalized generators, absolute cutoff: the map may vanish up to rounding
    gens = [G / np.linalg.norm(G) for G in ops if np.linalg.norm(G) > 1e-12]
    L = np.vstack([np.kron(G, eye) - np.kron(eye, G.T) for G in gens])
    _, s, vh = scipy.linalg.svd(L)
    rank = int(np.sum(s > 1e-10))
    return OperatorBasis(d, tuple(np.conj(vh[rank:]).reshape(-1, d, d)))


def random_algebra(d, rng):
    return conjugate(block_algebra(random_shape(d, rng)), haar_unitary(d, rng))


def test_block_algebra_basics():
    alg = block_algebra([(2, 1), (1, 2)])
    assert alg.ambient_dim == 4 and alg.dim == 5 and alg.is_unital
    np.testing.assert_allclose(alg.unit, np.eye(4))
    with pytest.raises(InputError):
        AlgebraStructure(3, alg.blocks)


def test_basis_is_orthonormal(rng):
    alg = random_algebra(5, rng)
    V = basis_of(alg).vectors
    np.testing.assert_allclose(V.conj() @ V.T, np.eye(alg.dim), atol=1e-10)


def test_element_from_blocks_round_trip(rng):
    alg = conjugate(block_algebra([(2, 2), (1, 1)]), haar_unitary(5, rng))
    parts = [random_matrix(2, 2, rng), random_matrix(1, 1, rng)]
    X = element_from_blocks(alg, parts)
    assert membership(alg, X)[0]
    np.testing.assert_allclose(project_algebra(alg, X), X, atol=1e-10)


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_projectors_are_orthogonal_projections(rng, d):
    alg = random_algebra(d, rng)
    X, Y = random_matrix(d, d, rng), random_matrix(d, d, rng)
    for P in (lambda Z: project_algebra(alg, Z), lambda Z: project_commutant(alg, Z)):
        np.testing.assert_allclose(P(P(X)), P(X), atol=1e-10)
        assert np.vdot(Y, P(X)) == pytest.approx(np.vdot(P(Y), X), abs=1e-10)


def test_commutant_projection_commutes(rng):
    alg = random_algebra(5, rng)
    X = project_commutant(alg, random_matrix(5, 5, rng))
    for A in basis_of(alg).ops:
        np.testing.assert_allclose(A @ X, X @ A, atol=1e-10)


def test_projector_channel_matches_projection(rng):
    alg = random_algebra(4, rng)
    rho = random_matrix(4, 4, rng)
    np.testing.assert_allclose(apply(projector_channel(alg), rho), project_algebra(alg, rho), atol=1e-10)
    np.testing.assert_allclose(
        apply(commutant_projector_channel(alg), rho), project_commutant(alg, rho), atol=1e-10
    )


def test_projector_channel_kraus_count():
    alg = block_algebra([(1, 2), (1, 1)])
    assert projector_channel(alg).num_kraus == 2**2 + 1


@pytest.mark.parametrize("seed", range(4))
def test_projector_channel_properties(seed):
    rng = np.random.default_rng(seed)
    alg = random_algebra(int(rng.integers(2, 6)), rng)
    P = projector_channel(alg)
    assert tp_defect(P.kraus) < 1e-9
    np.testing.assert_allclose(choi(compose(P, P)), choi(P), atol=1e-9)
    X = random_matrix(alg.ambient_dim, alg.ambient_dim, rng)
    np.testing.assert_allclose(apply_dual(P, X), apply(P, X), atol=1e-9)


def test_non_unital_policy():
    V = np.eye(3)[:, :2]
    alg = code_algebra(V)
    assert not alg.is_unital
    with pytest.raises(NonUnitalError):
        projector_channel(alg)
    with pytest.raises(NonUnitalError):
        project_commutant(alg, np.eye(3))
    # the projection itself is still defined
    np.testing.assert_allclose(project_algebra(alg, np.eye(3)), np.diag([1, 1, 0]), atol=1e-14)


def test_dephasing_commutant_is_diagonal():
    ops = [np.eye(2), PAULI_Z]
    got = commutant_of_set(ops)
    want = commutant_oracle(ops)
    assert subspace_distance(got, want) < 1e-8
    assert subspace_distance(got, basis_of(diagonal_algebra(2))) < 1e-8


def test_commutant_of_non_star_set_raises():
    N = np.array([[0, 1], [0, 0]], complex)
    with pytest.raises(InputError):
        commutant_of_set([N, N @ N + np.eye(2)])


@pytest.mark.parametrize("seed", range(6))
def test_commutant_structure_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    alg = random_algebra(int(rng.integers(2, 7)), rng)
    got = basis_of(commutant_structure(alg))
    assert subspace_distance(got, commutant_oracle(list(basis_of(alg).ops))) < 1e-8


def test_generate_algebra():
    assert len(generate_algebra([PAULI_Z])) == 2
    X = np.array([[0, 1], [1, 0]], complex)
    assert len(generate_algebra([PAULI_Z, X])) == 4
    with pytest.raises(InputError):
        generate_algebra([])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**31 - 1))
def test_structure_from_basis_recovers_shape(d, seed):
    rng = np.random.default_rng(seed)
    shape = random_shape(d, rng)
    alg = conjugate(block_algebra(shape), haar_unitary(d, rng))
    basis = basis_of(alg)
    rec = structure_from_basis(basis, seed=seed)
    assert sorted(rec.shape) == sorted(shape)
    assert subspace_distance(basis_of(rec), basis) < 1e-8


def test_structure_from_basis_rejects_non_algebra():
    ops = (np.array([[0, 1], [0, 0]], complex),)
    with pytest.raises(InputError):
        structure_from_basis(OperatorBasis(2, ops))


def test_structure_of_generated_non_unital_algebra(rng):
    V = haar_unitary(4, rng)[:, :2]
    gens = [V @ random_matrix(2, 2, rng) @ V.conj().T]
    rec = structure_from_basis(generate_algebra(gens))
    assert rec.shape == [(2, 1)] and not rec.is_unital


@pytest.mark.parametrize("seed", range(5))
def test_bicommutant(seed):
    rng = np.random.default_rng(seed)
    alg = random_algebra(int(rng.integers(2, 7)), rng)
    gens = [element_from_blocks(alg, [random_matrix(b.dA, b.dA, rng) for b in alg.blocks]) for _ in range(2)]
    A = generate_algebra(gens)
    assert closure_defect(A) < 1e-8
    AA = commutant_of_set(list(commutant_of_set(list(A.ops)).ops))
    assert subspace_distance(A, AA) < 1e-8


def test_algebra_unitaries_are_unitary_members(rng):
    alg = random_algebra(5, rng)
    for U in random_algebra_unitaries(alg, 5, rng):
        np.testing.assert_allclose(U.conj().T @ U, np.eye(5), atol=1e-10)
        assert membership(alg, U)[0]


def test_twirl_converges_to_commutant_projection(rng):
    alg = conjugate(block_algebra([(2, 1), (1, 2)]), haar_unitary(4, rng))
    B = random_matrix(4, 4, rng)
    est = twirl_estimate(alg, B, 20000, seed=3)
    assert np.linalg.norm(est - project_commutant(alg, B), 2) < 0.1


def test_catalog_algebra_shapes(rng):
    for d in (2, 3, 4, 5):
        alg = catalog_algebra(d, rng)
        assert alg.is_unital and alg.ambient_dim == d
        assert alg.shape != [(1, d)]


def test_trivial_algebras():
    assert full_algebra(3).dim == 9
    assert scalar_algebra(3).dim == 1
    assert diagonal_algebra(3).dim == 3
