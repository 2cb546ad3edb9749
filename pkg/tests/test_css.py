from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from cubesheaf.css import (
    CssCode, IoFailure, build_css, code_params, css_checks, export_code, export_matrix, import_matrix,
    ldpc_profile, qltc_soundness, soundness_scan
)
from cubesheaf.errors import LevelOutOfRange
from cubesheaf.ff2e import FieldMatrix, field_make

GOLDEN = Path(__file__).parent / "golden"
M3X4 = [[1, 1, 0, 1], [0, 1, 1, 0], [1, 0, 1, 1]]


@pytest.mark.parametrize("name", ["t2_instance", "gf4_instance", "t2_mixed_instance"])
def test_css_pair_is_orthogonal(request, name):
    SC = request.getfixturevalue(name).complex
    code = build_css(SC, 1)
    assert code.n == SC.dim(1) * SC.field.e
    assert (code.H_X @ code.H_Z.T).is_zero()
    assert all(r.passed for r in css_checks(code))
    assert code.to_dict()["qubits"] == code.n


@pytest.mark.parametrize("i", [0, 2])
def test_css_level_range(t2_instance, i):
    with pytest.raises(LevelOutOfRange):
        build_css(t2_instance.complex, i)


def test_ldpc_profile(t2_instance):
    profile = ldpc_profile(build_css(t2_instance.complex, 1))
    assert profile["within_bound"]
    assert profile["row_weight_bound"] == 2 * 2 * 3 * 1
    assert sum(profile["H_X.cols"].values()) == 48


def test_soundness_scan_small_matrix(gf2):
    estimate = soundness_scan(FieldMatrix.from_dense(gf2, [[1, 1, 0], [0, 1, 1]]))
    assert estimate.exact
    assert estimate.lower_bound == estimate.upper_bound == Fraction(3, 2)
    assert estimate.cosets_seen == estimate.cosets_total == 4


def test_soundness_of_zero_matrix(gf2):
    estimate = soundness_scan(FieldMatrix.zeros(gf2, (2, 3)))
    assert estimate.exact and estimate.cosets_total == 1


def test_qltc_soundness_takes_smaller_side(gf2):
    code = CssCode(H_X=FieldMatrix.from_dense(gf2, [[1, 1, 0], [0, 1, 1]]),
                   H_Z=FieldMatrix.from_dense(gf2, [[1, 1, 1]]), level=1, e=1)
    result = qltc_soundness(code)
    assert result["z"].lower_bound == 3
    assert result["lower_bound"] == Fraction(3, 2)
    assert result["exact"]


@pytest.mark.parametrize("fmt", ["alist", "mtx", "json"])
def test_export_matches_golden(tmp_path, gf2, fmt):
    path = export_matrix(FieldMatrix.from_dense(gf2, M3X4), tmp_path / f"m.{fmt}", fmt)
    assert path.read_text() == (GOLDEN / f"m3x4.{fmt}").read_text()


@pytest.mark.parametrize("fmt", ["alist", "mtx", "json"])
def test_import_golden(gf2, fmt):
    M = import_matrix(GOLDEN / f"m3x4.{fmt}")
    assert M == FieldMatrix.from_dense(gf2, M3X4)


def test_export_accepts_dense_arrays(tmp_path):
    path = export_matrix(np.asarray(M3X4), tmp_path / "dense.json", "json")
    assert path.read_text() == (GOLDEN / "m3x4.json").read_text()


def test_export_code_writes_both_matrices(tmp_path, t2_instance):
    code = build_css(t2_instance.complex, 1)
    paths = export_code(code, tmp_path / "code", "alist")
    assert paths["H_X"].name == "hx.alist" and paths["H_Z"].name == "hz.alist"
    assert import_matrix(paths["H_Z"]) == code.H_Z


def test_malformed_file_raises_io_failure(tmp_path):
    path = tmp_path / "broken.alist"
    path.write_text("4 3\n2 3\n2 2\n")
    with pytest.raises(IoFailure):
        import_matrix(path)


def test_missing_file_raises_io_failure(tmp_path):
    with pytest.raises(IoFailure):
        import_matrix(tmp_path / "absent.json")


def test_unknown_format_rejected(tmp_path):
    with pytest.raises(ValueError):
        export_matrix(np.eye(2, dtype=np.int64), tmp_path / "m.txt", "txt")


def test_mtx_keeps_entries(tmp_path):
    A = FieldMatrix.from_dense(field_make(1), [[1, 0], [1, 1]])
    assert import_matrix(export_matrix(A, tmp_path / "a.mtx", "mtx")) == A


@pytest.mark.slow
def test_code_dimension_identity(t2_instance):
    params = code_params(build_css(t2_instance.complex, 1))
    assert params.k == params.k_rank_identity
