import numpy as np
import pytest

from cubesheaf.errors import BudgetExceeded
from cubesheaf.ff2e import (
    CosetMinima, DegreeOutOfRange, DimensionMismatch, FieldMatrix, FieldVector, LinearSolver, NoSolution, block_support_count,
    block_weight_cap, block_weights, f2_expand, field_make, hamming_weights, iterate_block_support, iterate_span,
    kernel_basis, kernel_matrix, rank, raw, row_keys, solve_linear
)


@pytest.mark.parametrize("e", [1, 2, 3, 4])
def test_selfdual_basis_is_trace_orthonormal(e):
    F = field_make(e)
    b = np.asarray(F.selfdual_basis, dtype=np.int64)
    gram = F.trace(F.mul(b[:, None], b[None, :]))
    assert F.q == 2 ** e
    assert np.array_equal(gram, np.eye(e, dtype=np.int64))


@pytest.mark.parametrize("e", [0, 17, -1])
def test_field_degree_out_of_range(e):
    with pytest.raises(DegreeOutOfRange):
        field_make(e)


def test_field_is_memoized():
    assert field_make(3) is field_make(3)


def test_kernel_of_all_ones_row(gf2):
    K = kernel_matrix(gf2([[1, 1, 1]]))
    assert K.shape == (2, 3)
    assert not np.any(raw(gf2([[1, 1, 1]]) @ K.T))


def test_solver_unique_solution(gf2):
    solver = LinearSolver(gf2([[1, 1], [0, 1]]))
    assert solver.rank == 2
    assert raw(solver.solve([1, 1])).tolist() == [0, 1]


def test_solver_inconsistent_system(gf2):
    solver = LinearSolver(gf2([[1, 1], [1, 1]]))
    assert not solver.consistent([1, 0])
    with pytest.raises(NoSolution):
        solver.solve([1, 0])
    with pytest.raises(DimensionMismatch):
        solver.solve([1, 0, 1])


def test_solver_over_gf4(gf4):
    M = np.array([[1, 2, 0], [0, 3, 1]])
    x = np.array([2, 1, 3])
    b = gf4.matmul(M, x)
    y = LinearSolver(gf4(M)).solve(b)
    assert np.array_equal(gf4.matmul(M, raw(y)), b)


def test_field_matrix_canonical_form(gf4):
    M = FieldMatrix(gf4, (2, 3), [1, 0, 0, 1], [2, 1, 1, 0], [3, 2, 2, 1])
    # duplicate (0, 1) entries cancel in characteristic 2
    assert M.nnz == 2
    assert M.to_raw().tolist() == [[0, 0, 0], [1, 0, 3]]
    assert M.T.shape == (3, 2)
    assert M.T.T == M


def test_field_matrix_apply_and_product(gf4, rng):
    A = rng.integers(0, 4, size=(4, 5))
    B = rng.integers(0, 4, size=(5, 3))
    x = rng.integers(0, 4, size=5)
    MA, MB = FieldMatrix.from_dense(gf4, A), FieldMatrix.from_dense(gf4, B)
    assert np.array_equal(MA.apply(x), gf4.matmul(A, x))
    assert np.array_equal((MA @ MB).to_raw(), gf4.matmul(A, B))
    with pytest.raises(DimensionMismatch):
        MA.apply(np.zeros(4, dtype=np.int64))


def test_rank_and_submatrix(gf2):
    M = FieldMatrix.from_dense(gf2, [[1, 1, 0, 1], [0, 1, 1, 0], [1, 0, 1, 1]])
    assert rank(M) == 2
    assert M.submatrix([2, 0], [0, 3]).to_raw().tolist() == [[1, 1], [1, 1]]


def test_expansion_commutes_with_transpose(gf4, rng):
    A = FieldMatrix.from_dense(gf4, rng.integers(0, 4, size=(3, 4)))
    assert f2_expand(A).T == f2_expand(A.T)
    assert f2_expand(A).shape == (6, 8)


def test_expansion_is_a_ring_map(gf4, rng):
    A = FieldMatrix.from_dense(gf4, rng.integers(0, 4, size=(3, 4)))
    B = FieldMatrix.from_dense(gf4, rng.integers(0, 4, size=(4, 2)))
    assert f2_expand(A @ B) == f2_expand(A) @ f2_expand(B)


def test_iterate_span_covers_every_combination(gf4):
    basis = np.array([[1, 0, 1], [0, 1, 2]])
    chunks = list(iterate_span(gf4, basis, chunk=5))
    vectors = np.vstack([v for _, v in chunks])
    assert vectors.shape == (16, 3)
    assert len({row.tobytes() for row in vectors}) == 16


def test_iterate_span_respects_budget(gf2):
    with pytest.raises(BudgetExceeded) as info:
        next(iterate_span(gf2, np.eye(5, dtype=np.int64), chunk=4, budget=31))
    assert info.value.needed == 32


def test_block_weights():
    vectors = np.array([[1, 0, 0, 0, 3], [0, 0, 0, 0, 0], [0, 2, 1, 1, 0]])
    assert block_weights(vectors, [1, 2, 2]).tolist() == [2, 0, 2]
    assert hamming_weights(vectors).tolist() == [2, 0, 3]


def test_block_support_enumeration_matches_count():
    sizes = [1, 2, 0, 1]
    for weight in range(1, 4):
        vectors = np.vstack(list(iterate_block_support(sizes, 2, weight, chunk=3)))
        assert vectors.shape[0] == block_support_count(sizes, 2, weight)
        assert set(block_weights(vectors, sizes).tolist()) == {weight}
    assert block_weight_cap(sizes, 2, budget=5) == 1
    assert block_weight_cap(sizes, 2, budget=1000) == 3


def test_coset_minima_keeps_first_lightest():
    vectors = np.array([[1, 1], [1, 0], [0, 1], [1, 0]])
    keys = row_keys(np.array([[0], [1], [1], [1]]))
    minima = CosetMinima()
    minima.update(keys, np.array([2, 1, 1, 1]), vectors)
    assert len(minima) == 2
    weight, vector = minima.best[row_keys(np.array([[1]]))[0].tobytes()]
    assert weight == 1
    assert vector.tolist() == [1, 0]


def test_sparse_vectors(gf4):
    v = FieldVector.from_dense(gf4, [0, 3, 0, 1, 2])
    assert v.weight == 3
    assert v.block_weight(np.array([0, 2, 4])) == 3
    assert v.block_weight(np.array([0, 3])) == 2
    assert not (v + v)
    assert v + FieldVector.unit(gf4, 5, 1, 3) == FieldVector.from_dense(gf4, [0, 0, 0, 1, 2])
    with pytest.raises(DimensionMismatch):
        v + FieldVector.zeros(gf4, 4)


def test_kernel_basis_and_solve_linear(gf2):
    M = FieldMatrix.from_dense(gf2, [[1, 1, 1]])
    basis = kernel_basis(M)
    assert len(basis) == 2
    assert all(not (M @ v) for v in basis)
    x = solve_linear(M, FieldVector.unit(gf2, 1, 0))
    assert (M @ x) == FieldVector.unit(gf2, 1, 0)
    with pytest.raises(NoSolution):
        solve_linear(FieldMatrix.zeros(gf2, (1, 3)), FieldVector.unit(gf2, 1, 0))
    with pytest.raises(DimensionMismatch):
        solve_linear(M, FieldVector.zeros(gf2, 2))
