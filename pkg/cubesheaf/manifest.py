"""
Instance Manifests
Parsing, validation and hashing of instance manifests, and building the
geometry and sheaf complex they describe.

A manifest is a JSON (or YAML) document:

    {"schema": 1, "name": "...", "t": 2, "field_degree": 1, "seed": 0,
     "group": {"kind": "z2e", "m": 4, "generators": [[1, 2, 4], [3, 5, 6]]},
     "codes": {"matrices": [[[1, 1, 1]], [[1, 1, 1]]]},
     "budgets": {"enumeration": 65536}}

Group kinds: ``z2e`` (generators, or ``random`` = {"n", "seed"}), ``cyclic``,
``left_right`` and ``abelian_lift_product``. Codes are explicit matrices or a
robust-tuple ``search`` = {"m", "trials", "seed"}.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .builders import (
    GroupInstance, abelian_lift_product, cayley_base_graph, group_cyclic, group_left_right, group_permutations,
    group_z2e, random_z2e_generators
)
from .core.batch_processor import BatchProcessor
from .core.config import BudgetConfig, get_config
from .core.logging import PerformanceLogger, get_logger
from .errors import ConstructionError, ManifestError
from .ff2e import field_make
from .geometry import ComplexGeometry, build_complex
from .local import search_robust_tuple
from .sheaf import LocalCodes, SheafComplex

logger = get_logger(__name__)
performance_logger = PerformanceLogger(logger)

MANIFEST_SCHEMA = 1
GROUP_KINDS = ("z2e", "cyclic", "left_right", "permutations", "abelian_lift_product")


@dataclass
class Manifest:
    """A parsed, validated manifest; ``document`` is the canonical source"""
    name: str
    t: int
    e: int
    group: Dict[str, Any]
    codes: Dict[str, Any]
    budgets: BudgetConfig
    seed: int = 0
    document: Dict[str, Any] = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return manifest_hash(self.document)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Manifest":
        if not isinstance(data, dict):
            raise ManifestError("manifest must be a mapping")
        errors = []

        schema = data.get("schema", MANIFEST_SCHEMA)
        if schema != MANIFEST_SCHEMA:
            errors.append(f"unsupported schema {schema!r}")
        t = data.get("t")
        if not isinstance(t, int) or t < 1:
            errors.append("t must be a positive integer")
        e = data.get("field_degree", 1)
        if not isinstance(e, int) or e < 1:
            errors.append("field_degree must be a positive integer")

        group = data.get("group")
        if not isinstance(group, dict) or group.get("kind") not in GROUP_KINDS:
            errors.append(f"group.kind must be one of {GROUP_KINDS}")
        codes = data.get("codes")
        if not isinstance(codes, dict) or ("matrices" in codes) == ("search" in codes):
            errors.append("codes must give exactly one of 'matrices' or 'search'")
        elif "matrices" in codes and not isinstance(codes["matrices"], list):
            errors.append("codes.matrices must be a list of check matrices")
        elif "matrices" in codes and isinstance(t, int) and len(codes["matrices"]) != t:
            errors.append(f"codes.matrices has {len(codes['matrices'])} entries, expected {t}")

        budgets = data.get("budgets") or {}
        unknown = set(budgets) - set(BudgetConfig.__dataclass_fields__)
        if unknown:
            errors.append(f"unknown budgets {sorted(unknown)}")
        seed = data.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            errors.append("seed must be a non-negative integer")

        if errors:
            raise ManifestError("Invalid manifest: " + "; ".join(errors))
        return cls(
            name=str(data.get("name", "instance")),
            t=t,
            e=e,
            group=group,
            codes=codes,
            budgets=BudgetConfig.from_dict(budgets, get_config().budgets),
            seed=seed,
            document=data,
        )


def canonical_json(document: Any) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":"))


def manifest_hash(document: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON of the parsed document"""
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()


def load_manifest(path) -> Manifest:
    """Read a JSON or YAML manifest; every failure is a ManifestError"""
    path = Path(path)
    try:
        with open(path, "r") as f:
            if path.suffix in (".yaml", ".yml"):
                data = yaml.safe_load(f)
            else:
                data = json.load(f)
    except OSError as e:
        raise ManifestError(f"cannot read manifest {path}: {e}") from e
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ManifestError(f"cannot parse manifest {path}: {e}") from e
    manifest = Manifest.from_dict(data)
    logger.info(f"Loaded manifest {manifest.name} ({manifest.hash[:12]}) from {path}")
    return manifest


@dataclass
class Instance:
    """Everything a manifest builds"""
    manifest: Manifest
    group: GroupInstance
    geometry: ComplexGeometry
    complex: SheafComplex
    notes: List[str] = field(default_factory=list)
    search: Optional[Dict[str, Any]] = None


def build_group(manifest: Manifest) -> GroupInstance:
    desc = manifest.group
    kind = desc["kind"]
    try:
        if kind == "z2e":
            gens = desc.get("generators")
            if gens is None:
                rand = desc["random"]
                gens = random_z2e_generators(int(desc["m"]), manifest.t, int(rand["n"]), int(rand.get("seed", 0)))
            group = group_z2e(int(desc["m"]), gens)
            if "random" in desc and "generators" not in desc:
                group.notes.append(f"generators drawn with seed {desc['random'].get('seed', 0)}: {gens}")
        elif kind == "cyclic":
            group = group_cyclic(int(desc["order"]), desc["generators"])
        elif kind == "left_right":
            group = group_left_right(int(desc["k"]), desc["left"], desc["right"])
        elif kind == "permutations":
            group = group_permutations(int(desc["order"]), desc["perms"])
        else:
            base = desc["base"]
            graph = cayley_base_graph(int(base["order"]), base["offsets"], base.get("labels"),
                                      tuple(base.get("lift_factors", (1,))))
            group = abelian_lift_product(graph, manifest.t)
    except KeyError as e:
        raise ManifestError(f"group of kind {kind!r} is missing {e}") from e
    except (TypeError, ValueError) as e:
        raise ManifestError(f"group of kind {kind!r} is malformed: {e}") from e
    if group.t != manifest.t:
        raise ManifestError(f"group has {group.t} directions, manifest has t={manifest.t}")
    return group


def build_codes(manifest: Manifest, n: int, processor: Optional[BatchProcessor] = None):
    """Explicit check matrices, or the best tuple a search finds"""
    F = field_make(manifest.e)
    desc = manifest.codes
    try:
        if "matrices" in desc:
            return LocalCodes.from_matrices(F, desc["matrices"]), None
        search = desc["search"]
        m = [int(value) for value in search["m"]]
        trials = int(search.get("trials", 100))
        seed = int(search.get("seed", manifest.seed))
    except KeyError as e:
        raise ManifestError(f"codes are missing {e}") from e
    except (TypeError, ValueError) as e:
        raise ManifestError(f"codes are malformed: {e}") from e
    report = search_robust_tuple(
        manifest.t, n, m, manifest.e, trials,
        budget=manifest.budgets.enumeration, seed=seed,
        processor=processor, exhaust=search.get("exhaust")
    )
    if report.best is None:
        raise ConstructionError("robust-tuple search found no candidate")
    return LocalCodes.from_matrices(F, report.best), report.to_dict()


def build_instance(manifest: Manifest, processor: Optional[BatchProcessor] = None) -> Instance:
    """Group, geometry and sheaf complex of a manifest"""
    performance_logger.start_timer("build_instance")
    group = build_group(manifest)
    geometry = build_complex(group.N, group.permsets)
    codes, search = build_codes(manifest, geometry.n, processor)
    SC = SheafComplex(geometry, codes)
    performance_logger.end_timer("build_instance", N=geometry.N, t=geometry.t, n=geometry.n, e=manifest.e)
    return Instance(manifest=manifest, group=group, geometry=geometry, complex=SC,
                    notes=list(group.notes), search=search)
