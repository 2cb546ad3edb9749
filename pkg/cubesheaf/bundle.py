"""
Instance Bundles
A built instance on disk:

    manifest.json      canonical copy of the manifest
    instance.json      permutations, check matrices, notes
    matrices.bin       assembled coboundary and boundary maps
    build_report.json  checks run at build time

matrices.bin layout (all integers little-endian):
    b"CSHF", u16 version, endianness byte b"<", u32 matrix count, then per
    matrix: u16 name length, utf-8 name, u32 rows, u32 cols, u32 nnz, and the
    row, column and value arrays as u32.
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from .builders import GroupInstance
from .core.logging import PerformanceLogger, get_logger
from .errors import ManifestError
from .ff2e import Field, FieldMatrix, field_make
from .geometry import PermutationSet, build_complex
from .manifest import Instance, Manifest, canonical_json
from .reports import write_json
from .sheaf import LocalCodes, SheafComplex

logger = get_logger(__name__)
performance_logger = PerformanceLogger(logger)

MAGIC = b"CSHF"
VERSION = 1
ENDIAN = b"<"
BUNDLE_SCHEMA = 1


class BundleError(ManifestError):
    """A bundle is missing files or its container is malformed"""
    pass


def encode_matrices(matrices: Dict[str, FieldMatrix]) -> bytes:
    parts = [MAGIC, struct.pack("<H", VERSION), ENDIAN, struct.pack("<I", len(matrices))]
    for name in sorted(matrices):
        M = matrices[name]
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<III", M.nrows, M.ncols, M.nnz))
        for array in (M.rows, M.cols, M.vals):
            parts.append(np.asarray(array, dtype="<u4").tobytes())
    return b"".join(parts)


def decode_matrices(data: bytes, field: Field) -> Dict[str, FieldMatrix]:
    """Inverse of encode_matrices; raises BundleError on any inconsistency"""
    if data[:4] != MAGIC:
        raise BundleError("matrices.bin: bad magic")
    try:
        (version,) = struct.unpack_from("<H", data, 4)
        if version != VERSION:
            raise BundleError(f"matrices.bin: unsupported version {version}")
        if data[6:7] != ENDIAN:
            raise BundleError("matrices.bin: unsupported endianness")
        (count,) = struct.unpack_from("<I", data, 7)
        pos = 11
        out = {}
        for _ in range(count):
            (length,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos:pos + length].decode("utf-8")
            pos += length
            rows, cols, nnz = struct.unpack_from("<III", data, pos)
            pos += 12
            arrays = []
            for _ in range(3):
                chunk = data[pos:pos + 4 * nnz]
                if len(chunk) != 4 * nnz:
                    raise BundleError(f"matrices.bin: truncated entries of {name}")
                arrays.append(np.frombuffer(chunk, dtype="<u4").astype(np.int64))
                pos += 4 * nnz
            out[name] = FieldMatrix(field, (rows, cols), *arrays)
    except (struct.error, UnicodeDecodeError, IndexError) as e:
        raise BundleError(f"matrices.bin: malformed container ({e})") from e
    if pos != len(data):
        raise BundleError(f"matrices.bin: {len(data) - pos} trailing bytes")
    return out


def write_bundle(directory, instance: Instance, build_report: Optional[Dict[str, Any]] = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    SC = instance.complex
    X = instance.geometry
    performance_logger.start_timer("write_bundle")

    (directory / "manifest.json").write_text(canonical_json(instance.manifest.document) + "\n")
    write_json(directory / "instance.json", {
        "schema": BUNDLE_SCHEMA,
        "manifest_hash": instance.manifest.hash,
        "N": X.N,
        "t": X.t,
        "n": X.n,
        "e": SC.field.e,
        "perms": [X.perms[j].tolist() for j in range(X.t)],
        "codes": SC.codes.to_lists(),
        "notes": instance.notes,
        "search": instance.search,
    })
    (directory / "matrices.bin").write_bytes(encode_matrices(SC.matrices()))
    if build_report is not None:
        write_json(directory / "build_report.json", build_report)
    performance_logger.end_timer("write_bundle", directory=str(directory))
    logger.info(f"Wrote bundle for {instance.manifest.name} to {directory}")
    return directory


def read_bundle(directory) -> Instance:
    """Rebuild an instance from its bundle, with the stored matrices preloaded"""
    directory = Path(directory)
    try:
        document = json.loads((directory / "manifest.json").read_text())
        stored = json.loads((directory / "instance.json").read_text())
        data = (directory / "matrices.bin").read_bytes()
    except OSError as e:
        raise BundleError(f"cannot read bundle {directory}: {e}") from e
    except json.JSONDecodeError as e:
        raise BundleError(f"cannot parse bundle {directory}: {e}") from e

    manifest = Manifest.from_dict(document)
    if stored.get("manifest_hash") != manifest.hash:
        raise BundleError(f"bundle {directory}: manifest hash does not match instance.json")

    field = field_make(int(stored["e"]))
    permsets = [PermutationSet.from_arrays(p, j) for j, p in enumerate(stored["perms"])]
    geometry = build_complex(int(stored["N"]), permsets)
    codes = LocalCodes.from_matrices(field, [np.asarray(h, dtype=np.int64).reshape(-1, geometry.n)
                                             for h in stored["codes"]])
    SC = SheafComplex(geometry, codes, matrices=decode_matrices(data, field))
    group = GroupInstance(N=geometry.N, permsets=permsets, notes=list(stored.get("notes", [])))
    logger.info(f"Read bundle {directory} ({manifest.hash[:12]})")
    return Instance(manifest=manifest, group=group, geometry=geometry, complex=SC,
                    notes=list(stored.get("notes", [])), search=stored.get("search"))
