import numpy as np
import pytest

from cubesheaf.errors import ConstructionError
from cubesheaf.ff2e import field_make
from cubesheaf.geometry import Face, bit_label
from cubesheaf.sheaf import (
    LocalCodes, NotCovering, RankDeficient, SheafComplex, chain_dim_formula, chain_dims, co_restrict, restrict,
    verify_chain
)

ALL_INSTANCES = ["t1_instance", "t2_instance", "t2_mixed_instance", "t3_instance", "gf4_instance"]


def test_chain_dimensions_t1(t1_instance):
    SC = t1_instance.complex
    assert [SC.dim(i) for i in range(2)] == [8, 12]


def test_chain_dimensions_mixed_rows(t2_instance, t2_mixed_instance):
    assert chain_dims(t2_instance.complex) == [16, 48, 36]
    assert chain_dims(t2_mixed_instance.complex) == [32, 72, 36]
    assert chain_dim_formula(4, 3, (1, 2), 1) == 72


@pytest.mark.parametrize("fixture", ALL_INSTANCES)
def test_verify_chain_passes(fixture, request):
    SC = request.getfixturevalue(fixture).complex
    results = verify_chain(SC, samples=20, seed=3)
    failed = [r.check_id for r in results if not r.passed]
    assert not failed
    ids = {r.check_id for r in results}
    assert "chain.path_independence" in ids
    assert all(f"chain.adjoint[{i}]" in ids for i in range(SC.t))


@pytest.mark.parametrize("fixture", ["t2_instance", "t3_instance", "gf4_instance"])
def test_maps_square_to_zero(fixture, request):
    SC = request.getfixturevalue(fixture).complex
    for i in range(SC.t - 1):
        assert (SC.delta(i + 1) @ SC.delta(i)).is_zero()
        assert (SC.partial(i + 1) @ SC.partial(i + 2)).is_zero()


def test_coboundary_is_transpose_of_boundary(gf4_instance):
    SC = gf4_instance.complex
    for i in range(SC.t):
        assert SC.delta(i) == SC.partial(i + 1).T


def test_maps_are_memoized(t2_instance):
    SC = t2_instance.complex
    assert SC.delta(0) is SC.delta(0)
    assert set(SC.matrices()) == {"delta_0", "delta_1", "partial_1", "partial_2"}


def test_restriction_pairs_with_co_restriction(gf4_instance, rng):
    SC = gf4_instance.complex
    X, F = SC.geometry, SC.field
    v = X.faces(0)[7]
    u = X.link_up(v, 2)[4]
    z = rng.integers(0, F.q, size=SC.coeff_dim(v))
    y = rng.integers(0, F.q, size=SC.coeff_dim(u))
    up = co_restrict(SC, z, v, u)
    down = restrict(SC, y, u, v)
    assert np.array_equal(up, co_restrict(SC, z, v, u, path=[1, 0]))
    assert np.array_equal(down, restrict(SC, y, u, v, path=[1, 0]))
    assert F.dot(y, up) == F.dot(down, z)


def test_co_restriction_needs_comparable_faces(t2_instance):
    SC = t2_instance.complex
    X = SC.geometry
    v = Face(0, (bit_label(0), bit_label(0)))
    far = next(u for u in X.faces(1) if not X.leq(v, u))
    with pytest.raises(NotCovering):
        co_restrict(SC, np.ones(SC.coeff_dim(v), dtype=np.int64), v, far)


def test_rank_deficient_checks_rejected(t2_instance):
    F = field_make(1)
    codes = LocalCodes.from_matrices(F, [[[1, 1, 1], [1, 1, 1]], [[1, 1, 1]]])
    with pytest.raises(RankDeficient):
        codes.validate()
    with pytest.raises(RankDeficient):
        SheafComplex(t2_instance.geometry, codes)
    results = codes.check_results()
    assert not results[0].passed and results[1].passed


def test_codes_shape_checked(t2_instance):
    F = field_make(1)
    with pytest.raises(ConstructionError):
        LocalCodes.from_matrices(F, [[[1, 2, 1]], [[1, 1, 1]]])
    with pytest.raises(ConstructionError):
        LocalCodes.from_matrices(F, [[[1, 1, 1]], [[1, 1]]])
    with pytest.raises(ConstructionError):
        SheafComplex(t2_instance.geometry, LocalCodes.from_matrices(F, [[[1, 1]], [[1, 1]]]))


def test_dual_codes(t2_mixed_instance):
    codes = t2_mixed_instance.complex.codes
    assert codes.m == (1, 2)
    assert codes.dual().m == (2, 1)
    for h, d in zip(codes.h, codes.duals):
        assert not np.any(codes.field.matmul(d, h.T))


def test_weight_bounds(t3_instance):
    SC = t3_instance.complex
    for i in range(SC.t):
        D = SC.delta(i)
        assert D.col_weights().max() <= (SC.t - i) * SC.geometry.n * max(SC.m)
        assert D.row_weights().max() <= 2 * (i + 1) * SC.geometry.n
