"""
Shared fixtures: small instances built once per test session.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from cubesheaf.ff2e import field_make  # noqa: E402
from cubesheaf.manifest import Manifest, build_instance  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"
MANIFESTS = project_root / "manifests"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-minute acceptance runs")


def manifest_document(name, t, group, codes, e=1, seed=0, budgets=None):
    return {
        "schema": 1,
        "name": name,
        "t": t,
        "field_degree": e,
        "seed": seed,
        "group": group,
        "codes": {"matrices": codes},
        "budgets": budgets or {"enumeration": 1 << 16},
    }


@pytest.fixture(scope="session")
def gf2():
    return field_make(1)


@pytest.fixture(scope="session")
def gf4():
    return field_make(2)


@pytest.fixture(scope="session")
def t1_document():
    # Cay(Z_4, {+1, -1, +2}) is K_4; its double cover is the cube graph
    return manifest_document("cyclic_t1", 1, {"kind": "cyclic", "order": 4, "generators": [[1, 3, 2]]},
                             [[[1, 1, 1]]])


@pytest.fixture(scope="session")
def t1_instance(t1_document):
    return build_instance(Manifest.from_dict(t1_document))


@pytest.fixture(scope="session")
def t2_document():
    return manifest_document("z2e_t2_n3", 2, {"kind": "z2e", "m": 2, "generators": [[1, 2, 3], [1, 2, 3]]},
                             [[[1, 1, 1]], [[1, 1, 1]]])


@pytest.fixture(scope="session")
def t2_instance(t2_document):
    return build_instance(Manifest.from_dict(t2_document))


@pytest.fixture(scope="session")
def t2_mixed_instance():
    # m = (1, 2) exercises unequal coefficient spaces
    document = manifest_document("z2e_t2_m12", 2, {"kind": "z2e", "m": 2, "generators": [[1, 2, 3], [1, 2, 3]]},
                                 [[[1, 1, 1]], [[1, 1, 0], [0, 1, 1]]])
    return build_instance(Manifest.from_dict(document))


@pytest.fixture(scope="session")
def t3_instance():
    document = manifest_document("z2e_t3_n2", 3, {"kind": "z2e", "m": 3, "generators": [[1, 2], [4, 3], [5, 6]]},
                                 [[[1, 1]], [[1, 1]], [[1, 1]]])
    return build_instance(Manifest.from_dict(document))


@pytest.fixture(scope="session")
def gf4_instance():
    document = manifest_document("gf4_t2", 2, {"kind": "z2e", "m": 2, "generators": [[1, 2, 3], [1, 2, 3]]},
                                 [[[1, 2, 3]], [[1, 3, 2]]], e=2)
    return build_instance(Manifest.from_dict(document))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
