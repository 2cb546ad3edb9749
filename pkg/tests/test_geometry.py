import numpy as np
import pytest

from cubesheaf.builders import group_cyclic, group_z2e, multiplication_permutations
from cubesheaf.errors import LevelOutOfRange
from cubesheaf.geometry import (
    CommutationViolation, Face, NotInverseClosed, PermutationSet, SizeMismatch, bit_label, build_complex,
    count_check, poset_check
)

TRANSPOSITIONS = [[1, 0, 2], [0, 2, 1], [2, 1, 0]]


def test_face_labels():
    f = Face(3, (2, bit_label(1), bit_label(0)))
    assert bit_label(0) == -1 and bit_label(1) == -2
    assert f.type == (0,)
    assert f.dim == 1
    assert f.bit(1) == 1 and f.bit(2) == 0
    with pytest.raises(ValueError):
        f.bit(0)
    assert str(f) == "[3; a2, 1, 0]"


def test_level_sizes_t1(t1_instance):
    X = t1_instance.geometry
    assert (X.N, X.n, X.t) == (4, 3, 1)
    assert X.num_faces(0) == 8
    assert X.num_faces(1) == 12
    with pytest.raises(LevelOutOfRange):
        X.faces(2)


@pytest.mark.parametrize("fixture", ["t1_instance", "t2_instance", "t3_instance"])
def test_counting_formulas(fixture, request):
    X = request.getfixturevalue(fixture).geometry
    results = count_check(X)
    assert all(r.passed for r in results), [r.check_id for r in results if not r.passed]


@pytest.mark.parametrize("fixture", ["t1_instance", "t2_instance", "t3_instance"])
def test_poset_axioms(fixture, request):
    X = request.getfixturevalue(fixture).geometry
    results = poset_check(X)
    assert all(r.passed for r in results), [r.check_id for r in results if not r.passed]


def test_faces_ordered_by_type_then_group(t2_instance):
    X = t2_instance.geometry
    table = X.table(1)
    assert list(table.type_ranges) == [(0,), (1,)]
    start, stop = table.type_ranges[(1,)]
    assert stop - start == X.num_faces(1) // 2
    assert all(f.type == (1,) for f in table.faces[start:stop])
    assert [X.index(f) for f in table.faces] == list(range(len(table)))


def test_order_relations(t2_instance):
    X = t2_instance.geometry
    square = X.faces(2)[5]
    verts = X.vertices(square)
    assert len(set(verts)) == 4
    assert all(X.leq(v, square) for v in verts)
    for edge, j in X.covers_down(square):
        assert X.leq(edge, square)
        assert any(high == square for high, _ in X.covers_up(edge))
        assert X.between(edge, square, square.type) == square
    v = verts[0]
    assert len(X.link_up(v, 2)) == X.n ** 2
    assert len(X.link_down(square, 0)) == 4
    assert square in X.link_up(v, 2)


def test_extend_then_restrict_round_trip(t3_instance):
    X = t3_instance.geometry
    for v in X.faces(0)[:10]:
        u = X.extend_face(v, {0: 1, 2: 0})
        assert u.type == (0, 2)
        assert X.restrict_face(u, {0: v.bit(0), 2: v.bit(2)}) == v


def test_non_commuting_directions_rejected():
    left = PermutationSet.from_arrays(multiplication_permutations(3, TRANSPOSITIONS, "left"), 0)
    also_left = PermutationSet.from_arrays(multiplication_permutations(3, TRANSPOSITIONS, "left"), 1)
    with pytest.raises(CommutationViolation) as info:
        build_complex(6, [left, also_left])
    assert (info.value.j, info.value.j2) == (0, 1)


def test_left_right_directions_commute():
    left = PermutationSet.from_arrays(multiplication_permutations(3, TRANSPOSITIONS, "left"), 0)
    right = PermutationSet.from_arrays(multiplication_permutations(3, TRANSPOSITIONS, "right"), 1)
    X = build_complex(6, [left, right])
    assert X.num_faces(2) == 6 * 9


def test_generator_sets_must_be_inverse_closed():
    shifts = (np.arange(5)[None, :] + np.array([1, 2])[:, None]) % 5
    with pytest.raises(NotInverseClosed):
        build_complex(5, [PermutationSet.from_arrays(shifts, 0)])
    with pytest.raises(NotInverseClosed):
        group_cyclic(5, [[1, 2]])


def test_directions_must_have_equal_size():
    a = group_z2e(2, [[1, 2, 3]]).permsets[0]
    b = PermutationSet.from_arrays(group_z2e(2, [[1, 2]]).permsets[0].perms, 1)
    with pytest.raises(SizeMismatch):
        build_complex(4, [a, b])
    with pytest.raises(SizeMismatch):
        build_complex(8, [a])
    with pytest.raises(SizeMismatch):
        PermutationSet.from_arrays([0, 1, 2])
