from fractions import Fraction

import numpy as np
import pytest

from cubesheaf.builders import estimate_expansion
from cubesheaf.errors import LevelOutOfRange
from cubesheaf.walks import (
    a_coeff_checks, a_table, adjointness_check, adversarial_sets, down_up_ops, mixing_check, nb_inclusion_check,
    neighborhoods, partition_check, quad_form_check, walk_checks, walk_normalization, walk_Op, walk_W,
    wilson_interval
)


@pytest.mark.parametrize("level", [1, 2])
def test_down_up_operators_adjoint(t2_instance, level):
    X = t2_instance.geometry
    D, U = down_up_ops(X, level)
    assert D.shape == (X.num_faces(level - 1), X.num_faces(level))
    assert adjointness_check(X, level, samples=20, seed=1).passed


@pytest.mark.parametrize("k", [0, 1])
def test_neighborhoods_partition(t2_instance, k):
    assert partition_check(t2_instance.geometry, k).passed


def test_neighborhoods_of_a_vertex(t1_instance):
    X = t1_instance.geometry
    v = X.faces(0)[0]
    sets = neighborhoods(X, v, 0)
    # closure is the vertex and its n neighbours in the cube graph
    assert sets.above == [v]
    assert len(sets.neighbors) == 0
    assert len(sets.opposite) == X.n
    assert sets.partition_ok


def test_a_coefficients_t2(t2_instance):
    X = t2_instance.geometry
    table = a_table(X)
    assert table == {(1, 0): 1}
    assert all(r.passed for r in a_coeff_checks(X, table))
    assert nb_inclusion_check(X, 1, 0, a=table[(1, 0)]).passed


def test_walk_levels_validated(t2_instance):
    X = t2_instance.geometry
    with pytest.raises(LevelOutOfRange):
        walk_W(X, 2, 0)
    with pytest.raises(LevelOutOfRange):
        walk_Op(X, 0, 1)


@pytest.mark.parametrize("k,ell", [(0, 0), (1, 0), (1, 1)])
def test_explicit_walk_is_markov_and_symmetric(t2_instance, k, ell):
    X = t2_instance.geometry
    W = walk_W(X, k, ell)
    assert W.explicit
    assert W.normalization == walk_normalization(X.t, X.n, k, ell)
    row_sums = np.asarray(W.adjacency.sum(axis=1)).ravel()
    assert np.all(row_sums == W.normalization)
    assert (W.adjacency != W.adjacency.T).nnz == 0
    stats = W.stats()
    assert stats["symmetric"] and stats["max_row_sum_deviation"] < 1e-12


@pytest.mark.parametrize("k,ell", [(1, 0), (1, 1)])
def test_opposite_walk(t2_instance, k, ell):
    X = t2_instance.geometry
    W, Op = walk_W(X, k, ell), walk_Op(X, k, ell)
    sets = [idx for _, idx in adversarial_sets(X, k, count=4, seed=2)]
    results = walk_checks(W, Op, sets)
    assert [r.check_id.split("[")[0] for r in results] == [
        "walks.W_markov", "walks.W_symmetric", "walks.Op_markov", "walks.Op_below_W"
    ]
    assert all(r.passed for r in results[:3])


def test_walk_sampler_mode(t2_instance):
    X = t2_instance.geometry
    W = walk_W(X, 1, 0, limit=10)
    assert not W.explicit
    results = walk_checks(W)
    assert results[0].status.value == "skipped"
    rng = np.random.default_rng(0)
    f = X.faces(1)[3]
    assert W.step(f, rng).dim == 1


def test_exact_form_of_whole_level(t2_instance):
    X = t2_instance.geometry
    W = walk_W(X, 1, 0)
    everything = np.arange(X.num_faces(1))
    assert W.exact_form(everything) == Fraction(X.num_faces(1))


def test_quad_form_on_full_and_empty_sets(t2_instance):
    X = t2_instance.geometry
    W = walk_W(X, 1, 0)
    assert quad_form_check(X, 1, 0, [], lam=1 / 3, r=1.0, walk=W).passed
    result = quad_form_check(X, 1, 0, range(X.num_faces(1)), lam=1 / 3, r=1.0, walk=W, label="all")
    assert result.passed
    assert result.check_id == "walks.quad_form[1,0][all]"
    assert result.data["method"] == "exact"


def test_quad_form_sampled_agrees_with_exact(t2_instance):
    X = t2_instance.geometry
    exact = quad_form_check(X, 1, 0, range(X.num_faces(1)), lam=1 / 3, r=1.0, walk=walk_W(X, 1, 0))
    sampled = quad_form_check(X, 1, 0, range(X.num_faces(1)), lam=1 / 3, r=1.0,
                              walk=walk_W(X, 1, 0, limit=10), seed=5)
    assert sampled.data["method"] == "sampled"
    # a walk from the whole level always lands in it
    assert sampled.data["value"] == float(exact.data["value"])


def test_mixing_on_double_covers(t2_instance):
    group = t2_instance.group
    for permset in group.permsets:
        report = estimate_expansion(group.N, permset)
        assert mixing_check(group.N, permset, report, samples=20, seed=4).passed


def test_adversarial_sets(t2_instance):
    X = t2_instance.geometry
    sets = dict(adversarial_sets(X, 1, count=3, seed=0))
    assert {"random0", "random1", "random2", "type0", "type1", "link_union"} <= set(sets)
    start, stop = X.table(1).type_ranges[(0,)]
    assert sets["type0"].tolist() == list(range(start, stop))


def test_wilson_interval():
    low, high = wilson_interval(50, 100)
    assert 0 < low < 0.5 < high < 1
    assert wilson_interval(0, 0) == (0.0, 1.0)
