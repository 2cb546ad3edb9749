import numpy as np
import pytest

from cubesheaf.analysis import DoubleComplex, NotACycle, Obstruction, fill_bound, fill_checks, fill_cycle
from cubesheaf.errors import LevelOutOfRange
from cubesheaf.geometry import Face


def test_fill_bound():
    assert fill_bound(1, 3) == 36
    assert fill_bound(2, 3) == (4 * 16 * 27) ** 2


def test_zero_cycle_has_zero_filling(t1_instance):
    SC = t1_instance.complex
    result = fill_cycle(SC, np.zeros(SC.dim(0), dtype=np.int64), 0)
    assert result.path == "zero"
    assert not result.z.any()


def test_single_vertex_is_obstructed(t1_instance):
    SC = t1_instance.complex
    x = np.zeros(SC.dim(0), dtype=np.int64)
    x[0] = 1
    with pytest.raises(Obstruction) as exc:
        fill_cycle(SC, x, 0)
    assert exc.value.level == 0
    assert np.array_equal(exc.value.witness, x)


def test_two_vertices_are_filled(t1_instance):
    SC = t1_instance.complex
    x = np.zeros(SC.dim(0), dtype=np.int64)
    x[[0, 5]] = 1
    result = fill_cycle(SC, x, 0)
    assert result.path in ("early-exit", "dual-fill")
    assert np.array_equal(SC.partial(1).apply(result.z), x)
    assert result.x_weight == 2
    assert result.z_weight <= result.bound * result.x_weight


def edge_boundary(SC, label):
    X = SC.geometry
    offsets = SC.offsets(0)
    x = np.zeros(SC.dim(0), dtype=np.int64)
    for v in X.vertices(Face(0, (label,))):
        x[offsets[X.index(v)]] = 1
    return x


def test_first_generator_edge_exits_early(t1_instance):
    # every vertex lifts onto its label-0 edge, so both ends agree
    SC = t1_instance.complex
    x = edge_boundary(SC, 0)
    result = fill_cycle(SC, x, 0)
    assert result.path == "early-exit" and result.exit_stage == 0
    assert np.array_equal(SC.partial(1).apply(result.z), x)


def test_other_generator_edge_needs_dual_fill(t1_instance):
    SC = t1_instance.complex
    x = edge_boundary(SC, 1)
    result = fill_cycle(SC, x, 0)
    assert result.path == "dual-fill" and result.exit_stage is None
    assert result.stage_weights[-1] > 0
    assert np.array_equal(SC.partial(1).apply(result.z), x)


@pytest.mark.parametrize("name, k", [
    ("t2_instance", 0), ("t2_instance", 1), ("t3_instance", 0), ("t3_instance", 1), ("t3_instance", 2),
])
def test_random_boundaries_are_filled(request, rng, name, k):
    SC = request.getfixturevalue(name).complex
    DC = DoubleComplex(SC)
    for _ in range(5):
        x = SC.partial(k + 1).apply(rng.integers(0, 2, size=SC.dim(k + 1)))
        result = fill_cycle(SC, x, k, DC)
        assert np.array_equal(SC.partial(k + 1).apply(result.z), x)
        assert result.to_dict()["level"] == k


def test_non_cycle_rejected(t2_instance):
    SC = t2_instance.complex
    x = np.zeros(SC.dim(1), dtype=np.int64)
    x[0] = 1
    with pytest.raises(NotACycle):
        fill_cycle(SC, x, 1)


def test_top_level_rejected(t2_instance):
    SC = t2_instance.complex
    with pytest.raises(LevelOutOfRange):
        fill_cycle(SC, np.zeros(SC.dim(2), dtype=np.int64), 2)


@pytest.mark.parametrize("name", ["t1_instance", "t2_instance", "gf4_instance", "t3_instance"])
def test_fill_checks_pass(request, name):
    SC = request.getfixturevalue(name).complex
    results = fill_checks(SC, samples=8, seed=5)
    ids = [r.check_id for r in results]
    assert ids[:2] == ["fill.boundaries[0]", "fill.homology[0]"]
    assert all(r.passed for r in results), [r.to_dict() for r in results if not r.passed]
