import copy
import json

import pytest

from cubesheaf.builders import multiplication_permutations
from cubesheaf.errors import ConstructionError, ManifestError
from cubesheaf.geometry import CommutationViolation
from cubesheaf.manifest import Manifest, build_instance, load_manifest, manifest_hash

from conftest import MANIFESTS


def test_from_dict_fills_defaults(t1_document):
    manifest = Manifest.from_dict(t1_document)
    assert manifest.name == "cyclic_t1"
    assert manifest.t == 1 and manifest.e == 1
    assert manifest.budgets.enumeration == 1 << 16


@pytest.mark.parametrize("change, message", [
    ({"schema": 2}, "unsupported schema"),
    ({"t": 0}, "t must be"),
    ({"field_degree": "2"}, "field_degree"),
    ({"group": {"kind": "free"}}, "group.kind"),
    ({"codes": {}}, "exactly one"),
    ({"codes": {"matrices": [[[1, 1]]], "search": {"m": [1]}}}, "exactly one"),
    ({"codes": {"matrices": 5}}, "list of check matrices"),
    ({"budgets": {"walltime": 5}}, "unknown budgets"),
    ({"seed": -1}, "seed"),
])
def test_from_dict_rejects(t2_document, change, message):
    document = {**copy.deepcopy(t2_document), **change}
    with pytest.raises(ManifestError, match=message):
        Manifest.from_dict(document)


def test_code_count_must_match_t(t2_document):
    document = copy.deepcopy(t2_document)
    document["codes"]["matrices"] = document["codes"]["matrices"][:1]
    with pytest.raises(ManifestError, match="expected 2"):
        Manifest.from_dict(document)


def test_errors_are_collected(t2_document):
    document = {**copy.deepcopy(t2_document), "t": -1, "seed": -1}
    with pytest.raises(ManifestError) as exc:
        Manifest.from_dict(document)
    assert "t must be" in str(exc.value) and "seed" in str(exc.value)


def test_non_mapping_rejected():
    with pytest.raises(ManifestError):
        Manifest.from_dict([1, 2])


def test_hash_ignores_key_order(t1_document):
    reordered = dict(reversed(list(t1_document.items())))
    assert manifest_hash(reordered) == manifest_hash(t1_document)
    assert Manifest.from_dict(t1_document).hash == manifest_hash(t1_document)
    assert len(manifest_hash(t1_document)) == 64


@pytest.mark.parametrize("name", ["cyclic_t1_z4.json", "z2e_t2_n3.json", "left_right_s3.yaml"])
def test_bundled_manifests_load(name):
    manifest = load_manifest(MANIFESTS / name)
    assert manifest.name == name.rsplit(".", 1)[0]


def test_yaml_and_json_agree(tmp_path, t2_document):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(t2_document))
    assert load_manifest(path).hash == Manifest.from_dict(t2_document).hash


def test_load_failures_are_manifest_errors(tmp_path):
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "absent.json")
    broken = tmp_path / "broken.yaml"
    broken.write_text("t: [1, 2\n")
    with pytest.raises(ManifestError):
        load_manifest(broken)


def test_build_instance_from_file():
    instance = build_instance(load_manifest(MANIFESTS / "cyclic_t1_z4.json"))
    assert instance.geometry.N == 4
    assert instance.complex.dim(0) == 8
    assert instance.search is None


def test_left_right_instance():
    instance = build_instance(load_manifest(MANIFESTS / "left_right_s3.yaml"))
    assert instance.geometry.num_faces(2) == 54


def test_missing_group_field(t1_document):
    document = copy.deepcopy(t1_document)
    del document["group"]["order"]
    with pytest.raises(ManifestError, match="missing"):
        build_instance(Manifest.from_dict(document))


def test_construction_errors_propagate(t1_document):
    document = copy.deepcopy(t1_document)
    document["group"] = {"kind": "cyclic", "order": 5, "generators": [[1, 2]]}
    document["codes"]["matrices"] = [[[1, 1]]]
    with pytest.raises(ConstructionError):
        build_instance(Manifest.from_dict(document))


def test_search_manifest_records_report():
    instance = build_instance(load_manifest(MANIFESTS / "search_t2_n3.json"))
    assert instance.search is not None
    assert instance.complex.m == (1, 1)


@pytest.mark.parametrize("group, codes", [
    ({"kind": "cyclic", "order": "four", "generators": [[1, 3, 2]]}, {"matrices": [[[1, 1, 1]]]}),
    ({"kind": "cyclic", "order": 4, "generators": [[1, 3, 2]]}, {"search": {}}),
    ({"kind": "cyclic", "order": 4, "generators": [[1, 3, 2]]}, {"search": {"m": "one"}}),
    ({"kind": "cyclic", "order": 4, "generators": [[1, 3, 2]]}, {"matrices": [[[1, 1, 1], [1, 1]]]}),
])
def test_malformed_fields_are_manifest_errors(t1_document, group, codes):
    document = {**copy.deepcopy(t1_document), "group": group, "codes": codes}
    with pytest.raises(ManifestError):
        build_instance(Manifest.from_dict(document))


def test_explicit_permutations(t1_document):
    transpositions = [[1, 0, 2], [0, 2, 1], [2, 1, 0]]
    left = multiplication_permutations(3, transpositions, "left").tolist()
    right = multiplication_permutations(3, transpositions, "right").tolist()
    document = {**copy.deepcopy(t1_document), "t": 2,
                "group": {"kind": "permutations", "order": 6, "perms": [left, right]},
                "codes": {"matrices": [[[1, 1, 1]], [[1, 1, 1]]]}}
    instance = build_instance(Manifest.from_dict(document))
    assert instance.geometry.num_faces(2) == 6 * 9

    document["group"]["perms"] = [left, left]
    with pytest.raises(CommutationViolation) as info:
        build_instance(Manifest.from_dict(document))
    assert (info.value.j, info.value.j2) == (0, 1)
