import itertools
from fractions import Fraction

import numpy as np
import pytest

from cubesheaf.core.batch_processor import BatchProcessor
from cubesheaf.core.config import WorkerConfig
from cubesheaf.errors import BudgetExceeded, LevelOutOfRange
from cubesheaf.ff2e import field_make
from cubesheaf.local import (
    LocalComplex, NoFullRankTuple, Undecidable, exactness_check, full_rank_count, full_rank_matrices, is_minimal,
    local_complex, local_global_check, product_expansion, robust_distance_check, robustness, robustness_cells,
    search_robust_tuple, tensor_kernel_basis, tensor_kernel_check, two_way_robustness, verify_witness
)
from cubesheaf.sheaf import LocalCodes


def codes(*matrices, e=1):
    return LocalCodes.from_matrices(field_make(e), list(matrices))


def test_single_direction_repetition_check():
    L = LocalComplex((0,), codes([[1, 1]]))
    assert L.dim(0) == 1 and L.dim(1) == 2
    estimate = robustness(L, 0)
    assert estimate.method == "exhaustive"
    assert estimate.lower_bound == estimate.upper_bound == Fraction(1)


def test_single_direction_weak_check():
    L = LocalComplex((0,), codes([[1, 0]]))
    estimate = robustness(L, 0)
    assert estimate.upper_bound == Fraction(1, 2)
    assert verify_witness(L, estimate)


@pytest.mark.parametrize("S", [(0,), (1,), (0, 1), (0, 1, 2)])
def test_local_complex_self_checks(S):
    L = local_complex(S, codes([[1, 1, 1]], [[1, 1, 0], [0, 1, 1]], [[1, 0, 1]]))
    assert all(r.passed for r in L.self_check())
    assert all(L.dim(k) == L.dim_formula(k) for k in range(L.top + 1))


@pytest.mark.parametrize("e", [1, 2])
def test_exactness_and_tensor_kernel(e):
    F = field_make(e)
    c = LocalCodes.from_matrices(F, [[[1, 1, 1]], [[1, F.q - 1, 1]]])
    L = LocalComplex((0, 1), c)
    results = exactness_check(L)
    assert all(r.passed for r in results), [r.data for r in results]
    assert tensor_kernel_check(L).passed
    # (n - m)^|S| tensor basis vectors
    assert tensor_kernel_basis(L).shape == (4, 9)


def test_local_complex_argument_validation():
    c = codes([[1, 1]], [[1, 1]])
    with pytest.raises(ValueError):
        LocalComplex((), c)
    with pytest.raises(ValueError):
        LocalComplex((2,), c)
    L = LocalComplex((0, 1), c)
    with pytest.raises(LevelOutOfRange):
        L.delta(2)
    with pytest.raises(LevelOutOfRange):
        robustness(L, 2)


def test_local_matches_link_of_global(t2_instance, t3_instance):
    for instance in (t2_instance, t3_instance):
        SC = instance.complex
        for k in range(SC.t):
            for f in SC.geometry.faces(k)[:6]:
                assert local_global_check(SC, f).passed


def test_minimality_top_level():
    L = LocalComplex((0, 1), codes([[1, 1]], [[1, 1]]))
    top = L.top - 1
    assert is_minimal(L, np.zeros(L.dim(top), dtype=np.int64), top)
    x = np.ones(L.dim(top), dtype=np.int64)
    # the all-ones cochain is the coboundary of the all-ones 0-cochain
    assert not is_minimal(L, x, top)


def test_minimality_budget():
    L = LocalComplex((0, 1, 2), codes([[1, 1, 1]], [[1, 1, 1]], [[1, 1, 1]]))
    x = np.zeros(L.dim(2), dtype=np.int64)
    x[0] = 1
    with pytest.raises(Undecidable):
        is_minimal(L, x, 2, budget=2)


def test_robustness_by_weight_matches_exhaustive():
    L = LocalComplex((0, 1), codes([[1, 1, 1]], [[1, 1, 1]]))
    exact = robustness(L, 1)
    capped = robustness(L, 1, max_weight=L.dim(1))
    assert exact.method == "exhaustive"
    assert capped.method == "exhaustive-by-weight"
    assert capped.lower_bound == capped.upper_bound == exact.lower_bound
    assert verify_witness(L, exact)


def test_robustness_weight_capped_is_partial():
    L = LocalComplex((0, 1), codes([[1, 1, 1]], [[1, 1, 1]]))
    capped = robustness(L, 1, budget=10)
    assert capped.partial
    assert capped.lower_bound <= capped.upper_bound


def test_robustness_budget_below_one_block():
    L = LocalComplex((0, 1), codes([[1, 1, 1], [0, 1, 1]], [[1, 1, 1], [1, 0, 1]]))
    with pytest.raises(BudgetExceeded) as info:
        robustness(L, 1, budget=2)
    assert info.value.partial.partial


def test_product_expansion_is_top_cell():
    c = codes([[1, 1, 1]], [[1, 1, 1]])
    assert product_expansion(c).level == 1
    assert product_expansion(c, S=(0,)).level == 0


def test_robustness_cells_cover_both_sides():
    cells = robustness_cells(2)
    # per side: S={0},{1} with k=0 and S={0,1} with k=0,1
    assert len(cells) == 2 * 4
    assert ("dual", (0, 1), 1) in cells


def test_two_way_robustness_and_distance_relation():
    c = codes([[1, 1, 1]], [[1, 1, 1]])
    report = two_way_robustness(c)
    assert not report.partial
    assert report.kappa_lower == report.kappa_upper
    assert report.kappa_lower > 0
    results = robust_distance_check(c, report)
    assert len(results) == 4
    assert all(r.passed for r in results)


def test_two_way_robustness_is_worker_independent():
    c = codes([[1, 1, 0], [0, 1, 1]], [[1, 1, 1]])
    serial = two_way_robustness(c)
    threaded = two_way_robustness(c, processor=BatchProcessor(WorkerConfig(jobs=4)))
    assert serial.to_dict() == threaded.to_dict()


def test_full_rank_enumeration():
    F = field_make(1)
    matrices = list(full_rank_matrices(F, 2, 3))
    assert len(matrices) == full_rank_count(2, 2, 3) == 42
    assert all(M.shape == (2, 3) for M in matrices)


def test_search_exhaustive():
    report = search_robust_tuple(2, 3, [1, 1], 1, trials=0, exhaust=True)
    assert report.method == "exhaustive"
    assert report.evaluated == full_rank_count(2, 1, 3) ** 2
    assert sum(report.census.values()) == report.evaluated
    assert report.best_kappa == max(Fraction(k) for k in report.census)
    assert report.best_report.kappa_lower == report.best_kappa


def test_search_sampled_is_reproducible():
    first = search_robust_tuple(2, 3, [1, 2], 1, trials=5, seed=9, exhaust=False)
    second = search_robust_tuple(2, 3, [1, 2], 1, trials=5, seed=9, exhaust=False,
                                 processor=BatchProcessor(WorkerConfig(jobs=3)))
    assert first.method == "sampled"
    assert first.evaluated == 5
    assert first.best == second.best
    assert first.census == second.census


def test_search_rejects_impossible_shapes():
    with pytest.raises(NoFullRankTuple):
        search_robust_tuple(2, 3, [4, 1], 1, trials=5)
    with pytest.raises(ValueError):
        search_robust_tuple(2, 3, [1], 1, trials=5)


def test_kappa_is_minimum_over_cells():
    c = codes([[1, 1, 0]], [[1, 1, 1]])
    report = two_way_robustness(c)
    finite = [cell["lower_bound"] for cell in report.cells if cell["method"] != "vacuous"]
    assert report.kappa_lower == min(finite)
    assert {tuple(cell["S"]) for cell in report.cells} == set(
        S for size in (1, 2) for S in itertools.combinations(range(2), size)
    )
