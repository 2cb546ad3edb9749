import json

import numpy as np
import pytest

from cubesheaf.bundle import BundleError, decode_matrices, encode_matrices, read_bundle, write_bundle
from cubesheaf.errors import ManifestError
from cubesheaf.ff2e import FieldMatrix


@pytest.fixture
def bundle_dir(tmp_path, gf4_instance):
    return write_bundle(tmp_path / "bundle", gf4_instance, {"suite": "build"})


def test_bundle_files(bundle_dir):
    names = sorted(p.name for p in bundle_dir.iterdir())
    assert names == ["build_report.json", "instance.json", "manifest.json", "matrices.bin"]
    assert (bundle_dir / "matrices.bin").read_bytes()[:4] == b"CSHF"


def test_bundle_restores_instance(bundle_dir, gf4_instance):
    restored = read_bundle(bundle_dir)
    SC, original = restored.complex, gf4_instance.complex
    assert restored.manifest.hash == gf4_instance.manifest.hash
    assert SC.field.e == 2
    for k in range(SC.t + 1):
        assert SC.dim(k) == original.dim(k)
    for k in range(1, SC.t + 1):
        assert SC.partial(k) == original.partial(k)


def test_tampered_magic(bundle_dir):
    path = bundle_dir / "matrices.bin"
    path.write_bytes(b"XXXX" + path.read_bytes()[4:])
    with pytest.raises(BundleError, match="magic"):
        read_bundle(bundle_dir)


def test_truncated_container(bundle_dir):
    path = bundle_dir / "matrices.bin"
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(BundleError):
        read_bundle(bundle_dir)


def test_manifest_hash_mismatch(bundle_dir):
    path = bundle_dir / "manifest.json"
    document = json.loads(path.read_text())
    document["seed"] = document["seed"] + 1
    path.write_text(json.dumps(document))
    with pytest.raises(BundleError, match="hash"):
        read_bundle(bundle_dir)


def test_missing_bundle_is_a_manifest_error(tmp_path):
    with pytest.raises(ManifestError):
        read_bundle(tmp_path / "nothing")


def test_container_trailing_bytes(gf2):
    data = encode_matrices({"delta_0": FieldMatrix.from_dense(gf2, np.eye(3, dtype=np.int64))})
    assert decode_matrices(data, gf2)["delta_0"].nnz == 3
    with pytest.raises(BundleError, match="trailing"):
        decode_matrices(data + b"\x00", gf2)
