import numpy as np
import pytest

from cubesheaf.builders import (
    DuplicateGenerator, LiftAssignmentMismatch, NotRegular, abelian_lift_product, cayley_base_graph,
    estimate_expansion, group_cyclic, group_left_right, group_z2e, random_z2e_generators
)
from cubesheaf.errors import ConstructionError
from cubesheaf.geometry import build_complex, count_check

TRANSPOSITIONS = [[1, 0, 2], [0, 2, 1], [2, 1, 0]]


def test_z2e_translations_are_involutions():
    group = group_z2e(3, [[1, 2, 4], [3, 5, 6]])
    assert group.N == 8 and group.t == 2
    for permset in group.permsets:
        for perm in permset.perms:
            assert np.array_equal(perm[perm], np.arange(8))


def test_z2e_rejects_duplicates_and_out_of_range():
    with pytest.raises(DuplicateGenerator):
        group_z2e(2, [[1, 1, 2]])
    with pytest.raises(ConstructionError):
        group_z2e(2, [[1, 2, 4]])


def test_zero_generator_is_noted():
    group = group_z2e(2, [[0, 1, 2]])
    assert any("zero vector" in note for note in group.notes)


def test_cyclic_group_reduces_generators():
    group = group_cyclic(4, [[1, -1, 2]])
    assert group.permsets[0].perms[1].tolist() == [3, 0, 1, 2]


def test_left_right_multiplication_commutes():
    group = group_left_right(3, TRANSPOSITIONS, TRANSPOSITIONS)
    assert group.N == 6
    X = build_complex(group.N, group.permsets)
    assert all(r.passed for r in count_check(X))


def test_random_generators_are_reproducible():
    first = random_z2e_generators(4, 2, 3, seed=11)
    assert first == random_z2e_generators(4, 2, 3, seed=11)
    assert all(len(set(gens)) == 3 and 0 not in gens for gens in first)
    with pytest.raises(ConstructionError):
        random_z2e_generators(2, 1, 4, seed=0)


def test_abelian_lift_product_commutes():
    # 4-cycle with one edge pair lifted to the nontrivial element of Z_2
    base = cayley_base_graph(4, [1, 3], labels=[1, 1], lift_factors=(2,))
    group = abelian_lift_product(base, 2)
    assert group.N == 2 * 4 * 4
    X = build_complex(group.N, group.permsets)
    assert X.num_faces(2) == group.N * 4


def test_lift_labels_must_be_inverse_consistent():
    # labels s and s must satisfy s(w, i*) = -s(v, i); 1 + 1 != 0 in Z_3
    base = cayley_base_graph(4, [1, 3], labels=[1, 1], lift_factors=(3,))
    with pytest.raises(LiftAssignmentMismatch):
        abelian_lift_product(base, 1)


def test_base_graph_must_be_connected():
    base = cayley_base_graph(4, [2])
    with pytest.raises(ConstructionError):
        abelian_lift_product(base, 1)


def test_label_table_shape_checked():
    with pytest.raises(NotRegular):
        cayley_base_graph(4, [1, 3], labels=np.zeros((3, 2), dtype=np.int64))


def test_expansion_of_cube_graph():
    group = group_z2e(3, [[1, 2, 4]])
    report = estimate_expansion(group.N, group.permsets[0])
    assert len(report.components) == 1
    assert report.components[0].bipartite
    assert report.lambda_max == pytest.approx(1 / 3)
    assert report.r == 1.0
    assert report.cover_r == pytest.approx(0.5)


def test_expansion_of_complete_graph():
    group = group_cyclic(4, [[1, 3, 2]])
    report = estimate_expansion(group.N, group.permsets[0])
    assert not report.components[0].bipartite
    assert report.lambda_max == pytest.approx(1 / 3)
    assert report.cover_r == 1.0


def test_power_iteration_agrees_with_dense():
    group = group_z2e(4, [[1, 2, 4, 8, 15]])
    dense = estimate_expansion(group.N, group.permsets[0], dense_limit=1000)
    power = estimate_expansion(group.N, group.permsets[0], dense_limit=2)
    assert power.components[0].method == "power"
    assert power.lambda_max == pytest.approx(dense.lambda_max, abs=1e-6)


def test_disconnected_cayley_graph_components():
    group = group_z2e(3, [[1, 2]])
    report = estimate_expansion(group.N, group.permsets[0])
    assert len(report.components) == 2
    assert report.r == 0.5
