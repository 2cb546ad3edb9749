from fractions import Fraction
from math import inf

import numpy as np
import pytest

from cubesheaf.analysis import (
    brute_mu, cocycle_expansion_lower_bound, codistance_bound, cycle_data, d_coloc, distance_checks,
    distance_relation_check, distance_report, dual_checks, dual_complex, expansion, greedy_cocycle_ratio, kappa_table,
    soundness_lower_bound, verify_distance_witness
)
from cubesheaf.errors import LevelOutOfRange
from cubesheaf.local import TwoWayReport, two_way_robustness


def test_cube_graph_distances(t1_instance):
    SC = t1_instance.complex
    cosyst = brute_mu(SC, 0, "cosyst")
    assert cosyst.exact and cosyst.value == 8
    assert brute_mu(SC, 0, "syst").value == 1
    assert d_coloc(SC, 0).value == 8


def test_cube_cycles(t1_instance):
    SC = t1_instance.complex
    data = cycle_data(SC, 1, "syst")
    assert data.homology_dim == 5
    entry = brute_mu(SC, 1, "syst")
    assert entry.exact and entry.value == 4
    assert verify_distance_witness(SC, entry, "syst")


def test_cube_cocycle_expansion(t1_instance):
    entry = expansion(t1_instance.complex, 0, "cocyc")
    assert entry.method == "exhaustive-by-weight"
    assert entry.lower_bound == entry.upper_bound == Fraction(1)


def test_expansion_vacuous_at_bottom(t1_instance):
    entry = expansion(t1_instance.complex, 0, "cyc")
    assert entry.method == "vacuous" and entry.upper_bound == inf


def test_unknown_modes_rejected(t1_instance):
    with pytest.raises(ValueError):
        cycle_data(t1_instance.complex, 0, "cyc")
    with pytest.raises(ValueError):
        expansion(t1_instance.complex, 0, "syst")


def test_distance_report_and_checks(t1_instance):
    SC = t1_instance.complex
    report = distance_report(SC, 0)
    assert set(report.entries) == {"mu_syst", "mu_cosyst", "d_coloc", "eps_cyc", "eps_cocyc"}
    assert report["mu_cosyst"].value == report["d_coloc"].value == 8
    results = distance_checks(SC, report, samples=50)
    assert "distance.cosystolic_vs_colocal[0]" in [r.check_id for r in results]
    assert all(r.passed for r in results), [r.to_dict() for r in results if not r.passed]
    assert report.to_dict()["level"] == 0


@pytest.mark.parametrize("name", ["t1_instance", "t2_instance", "t2_mixed_instance"])
def test_dual_checks_pass(request, name):
    SC = request.getfixturevalue(name).complex
    assert all(r.passed for r in dual_checks(SC))


def test_dual_complex_swaps_code_sizes(t2_instance):
    SC = t2_instance.complex
    dual = dual_complex(SC, samples=5)
    assert dual.m == (2, 2)
    assert dual.geometry is SC.geometry


def test_kappa_table_keeps_least_bound():
    cells = [
        {"side": "primal", "S": (0,), "k": 0, "lower_bound": Fraction(1, 2)},
        {"side": "primal", "S": (1,), "k": 0, "lower_bound": Fraction(1, 3)},
        {"side": "primal", "S": (0, 1), "k": 1, "lower_bound": Fraction(1, 4)},
        {"side": "dual", "S": (0,), "k": 0, "lower_bound": Fraction(1, 9)},
    ]
    report = TwoWayReport(cells=cells, kappa_lower=Fraction(1, 9), kappa_upper=1, partial=False)
    assert kappa_table(report) == {(1, 0): Fraction(1, 3), (2, 1): Fraction(1, 4)}
    assert kappa_table(report, "dual") == {(1, 0): Fraction(1, 9)}


def test_kappa_table_from_repetition_check(t1_instance):
    report = two_way_robustness(t1_instance.complex.codes)
    assert kappa_table(report)[(1, 0)] == 1
    assert kappa_table(report, "dual")[(1, 0)] == Fraction(2, 3)


def test_codistance_bound_constants():
    result = codistance_bound({(1, 0): 1}, lam=0.0, r=1.0, t=1, n=3, k=0, a={}, num_faces=8, d_coloc=8)
    assert result.C1 == 16 and result.C2 == 192
    assert result.C1_tight == result.C2_tight == 1
    assert result.bound == pytest.approx(1 / 24)
    assert result.bound_tight == pytest.approx(8)
    assert result.holds


def test_codistance_bound_without_kappa_is_vacuous():
    result = codistance_bound({}, lam=0.5, r=1.0, t=1, n=3, k=0, a={}, num_faces=8)
    assert result.bound == -inf
    assert result.holds is None
    assert result.to_dict()["vacuous"]
    with pytest.raises(ValueError):
        codistance_bound({}, lam=0.5, r=1.0, t=1, n=3, k=1, a={}, num_faces=8)


def test_cocycle_expansion_lower_bound(t1_instance):
    SC = t1_instance.complex
    assert cocycle_expansion_lower_bound(SC, 0, inf) == 1
    assert cocycle_expansion_lower_bound(SC, 0, 4) == Fraction(1, 2)


def test_soundness_lower_bound(t2_instance):
    SC = t2_instance.complex
    assert soundness_lower_bound(SC, 1, Fraction(1), Fraction(1)) == Fraction(4, 3)
    with pytest.raises(LevelOutOfRange):
        soundness_lower_bound(SC, 0, Fraction(1), Fraction(1))


def test_greedy_ratio_on_single_vertex(t1_instance):
    SC = t1_instance.complex
    x = np.zeros(SC.dim(0), dtype=np.int64)
    x[3] = 1
    result = greedy_cocycle_ratio(SC, 0, x)
    assert not result["stalled"]
    assert result["correction_weight"] == 1
    assert result["syndrome_weight"] > 0
    assert result["ratio"] == Fraction(result["syndrome_weight"], 1)


def test_systolic_distance_against_dual(t1_instance):
    result = distance_relation_check(t1_instance.complex, 0)
    assert result.check_id == "distance.dual_relation[0]"
    assert result.passed, result.to_dict()
    assert result.data["mu_syst"]["lower_bound"] == 1
