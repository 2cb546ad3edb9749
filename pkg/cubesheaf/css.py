"""
CSS Code Extraction
Binary CSS codes read off a level of the sheaf complex, their parameters,
soundness as locally testable codes, check-weight profiles, and parity-check
matrix import/export (alist, MatrixMarket, JSON).
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import scipy.io

from .analysis.distances import INFINITY, DistanceEntry, Ratio, soundness_lower_bound
from .core.batch_processor import BatchProcessor
from .core.config import WorkerConfig, get_config
from .core.logging import PerformanceLogger, get_logger
from .errors import BudgetExceeded, ConstructionError, CubeSheafError, LevelOutOfRange
from .ff2e import (
    CosetMinima, FieldMatrix, binary_field, block_weight_cap, coefficient_block, f2_expand,
    hamming_weights, iterate_block_support, kernel_matrix, rank, raw, row_keys, span_size
)
from .reports import CheckResult, CheckStatus, check
from .sheaf import SheafComplex

logger = get_logger(__name__)
performance_logger = PerformanceLogger(logger)

FORMATS = ("alist", "mtx", "json")


class CssOrthogonalityError(ConstructionError):
    """H_X H_Z^T is not zero"""

    def __init__(self, level: int, nonzeros: int):
        super().__init__(f"CSS pair at level {level} is not orthogonal ({nonzeros} nonzero entries)")
        self.level = level
        self.nonzeros = nonzeros


class IoFailure(CubeSheafError, OSError):
    """A matrix file could not be written or parsed"""

    def __init__(self, path, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = str(path)
        self.reason = reason


@dataclass
class CssCode:
    """Binary check pair of one level: H_X from partial_i, H_Z from delta_i"""
    H_X: FieldMatrix
    H_Z: FieldMatrix
    level: int
    e: int
    structure: Dict[str, Any] = field(default_factory=dict)
    manifest_hash: Optional[str] = None

    @property
    def n(self) -> int:
        return self.H_X.ncols

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "qubits": self.n,
            "x_checks": self.H_X.nrows,
            "z_checks": self.H_Z.nrows,
            "e": self.e,
            "manifest_hash": self.manifest_hash,
            **self.structure,
        }


def build_css(SC: SheafComplex, i: int, basis: Optional[Sequence[int]] = None,
              manifest_hash: Optional[str] = None) -> CssCode:
    """CSS(partial_i, delta_i) expanded to GF(2); ``basis`` overrides the self-dual basis"""
    t = SC.t
    if not 1 <= i <= t - 1:
        raise LevelOutOfRange(i, 1, t - 1)
    performance_logger.start_timer("build_css")
    H_X = f2_expand(SC.partial(i), basis)
    H_Z = f2_expand(SC.delta(i), basis)
    product = H_X @ H_Z.T
    if not product.is_zero():
        raise CssOrthogonalityError(i, product.nnz)
    code = CssCode(
        H_X=H_X, H_Z=H_Z, level=i, e=SC.field.e, manifest_hash=manifest_hash,
        structure={"t": t, "n": SC.geometry.n, "m": list(SC.m), "N": SC.geometry.N}
    )
    performance_logger.end_timer("build_css", level=i, qubits=code.n, x_checks=H_X.nrows, z_checks=H_Z.nrows)
    return code


@dataclass
class CodeParams:
    n: int
    k: int
    k_rank_identity: int
    rank_x: int
    rank_z: int
    d_x: DistanceEntry
    d_z: DistanceEntry

    @property
    def d_lower(self) -> Ratio:
        return min(self.d_x.lower_bound, self.d_z.lower_bound)

    @property
    def d_upper(self) -> Ratio:
        return min(self.d_x.upper_bound, self.d_z.upper_bound)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n, "k": self.k, "k_rank_identity": self.k_rank_identity,
            "rank_x": self.rank_x, "rank_z": self.rank_z,
            "d_x": self.d_x.to_dict(), "d_z": self.d_z.to_dict(),
            "d_lower": self.d_lower, "d_upper": self.d_upper,
        }


def _binary_distance(
    checks: FieldMatrix,
    stabilizers: FieldMatrix,
    quantity: str,
    level: int,
    budget: int,
    chunk: int,
    processor: BatchProcessor,
    draws: int,
    seed: int
) -> DistanceEntry:
    """min |x| over x in ker(checks) outside the row space of ``stabilizers``"""
    F = binary_field()
    kernel = raw(kernel_matrix(checks))
    keys = raw(kernel_matrix(stabilizers))
    n = checks.ncols
    logical_dim = kernel.shape[0] - (n - keys.shape[0])
    if logical_dim == 0:
        return DistanceEntry(quantity, level, INFINITY, INFINITY, "trivial", note="no logical operators")

    def nontrivial(vectors: np.ndarray) -> np.ndarray:
        return np.any(F.matmul(vectors, keys.T) != 0, axis=1)

    total = span_size(2, kernel.shape[0])
    if total <= budget:
        def scan(start: int):
            vectors = F.matmul(coefficient_block(2, kernel.shape[0], start, min(total, start + chunk)), kernel)
            ok = nontrivial(vectors)
            if not ok.any():
                return INFINITY, None
            weights = hamming_weights(vectors)
            idx = np.flatnonzero(ok)
            best = idx[np.argmin(weights[idx])]
            return int(weights[best]), vectors[best]

        best, witness = INFINITY, None
        for weight, vector in processor.map(scan, list(range(0, total, chunk)), batch_size=1, label=quantity):
            if weight < best:
                best, witness = weight, vector
        return DistanceEntry(quantity, level, best, best, "exact", witness=witness)

    ones = np.ones(n, dtype=np.int64)
    cap = block_weight_cap(ones, 2, budget)
    for w in range(1, cap + 1):
        for x in iterate_block_support(ones, 2, w, chunk):
            ok = ~np.any(checks.apply(x.T) != 0, axis=0) & nontrivial(x)
            if ok.any():
                return DistanceEntry(quantity, level, w, w, "by-weight", witness=x[int(np.argmax(ok))])

    # lightest logical among random kernel combinations
    rng = np.random.default_rng(seed)
    candidates = F.matmul(rng.integers(0, 2, size=(draws, kernel.shape[0])), kernel)
    candidates = np.vstack([kernel, candidates])
    ok = nontrivial(candidates)
    upper, witness = INFINITY, None
    if ok.any():
        weights = hamming_weights(candidates)
        idx = np.flatnonzero(ok)
        best = idx[np.argmin(weights[idx])]
        upper, witness = int(weights[best]), candidates[best]
    return DistanceEntry(quantity, level, cap + 1, upper, "weight-capped", witness=witness, partial=True,
                         note=f"no logical up to weight {cap}")


def code_params(
    C: CssCode,
    budget: Optional[int] = None,
    chunk: Optional[int] = None,
    processor: Optional[BatchProcessor] = None,
    draws: int = 256,
    seed: int = 0
) -> CodeParams:
    """(n, k, d) of the code; d_x over ker H_Z modulo rows of H_X, d_z the other way round"""
    config = get_config()
    budget = budget or config.budgets.enumeration
    chunk = chunk or config.workers.chunk_size
    processor = processor or BatchProcessor(WorkerConfig(jobs=1))
    performance_logger.start_timer("code_params")
    rank_x, rank_z = rank(C.H_X), rank(C.H_Z)
    kernel_z = kernel_matrix(C.H_Z).shape[0]
    params = CodeParams(
        n=C.n,
        k=kernel_z - rank_x,
        k_rank_identity=C.n - rank_x - rank_z,
        rank_x=rank_x,
        rank_z=rank_z,
        d_x=_binary_distance(C.H_Z, C.H_X, "d_x", C.level, budget, chunk, processor, draws, seed),
        d_z=_binary_distance(C.H_X, C.H_Z, "d_z", C.level, budget, chunk, processor, draws, seed + 1),
    )
    performance_logger.end_timer("code_params", level=C.level, n=params.n, k=params.k)
    logger.info(f"CSS code at level {C.level}: n={params.n} k={params.k} d in [{params.d_lower}, {params.d_upper}]")
    return params


@dataclass
class SoundnessEstimate:
    """rho = min over x outside ker H of (n |Hx|) / (m d(x, ker H))"""
    lower_bound: Ratio
    upper_bound: Ratio
    exact: bool
    cosets_seen: int
    cosets_total: int
    witness: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "exact": self.exact,
            "cosets_seen": self.cosets_seen,
            "cosets_total": self.cosets_total,
            "witness": None if self.witness is None else self.witness.tolist(),
        }


def soundness_scan(H: FieldMatrix, budget: Optional[int] = None, chunk: Optional[int] = None) -> SoundnessEstimate:
    """Scan bit vectors by weight until every syndrome coset has been met"""
    config = get_config()
    budget = budget or config.budgets.enumeration
    chunk = chunk or config.workers.chunk_size
    m, n = H.nrows, H.ncols
    r = rank(H)
    if r == 0:
        return SoundnessEstimate(INFINITY, INFINITY, True, 1, 1)
    cosets_total = 2 ** r
    if cosets_total > budget:
        raise BudgetExceeded(f"{cosets_total} syndrome cosets exceed budget {budget}", needed=cosets_total, budget=budget)

    ones = np.ones(n, dtype=np.int64)
    cap = block_weight_cap(ones, 2, budget)
    zero_key = row_keys(np.zeros((1, m), dtype=np.int64))[0].tobytes()
    minima = CosetMinima()
    performance_logger.start_timer("soundness_scan")
    for w in range(1, cap + 1):
        for x in iterate_block_support(ones, 2, w, chunk):
            syndromes = H.apply(x.T).T
            minima.update(row_keys(syndromes), hamming_weights(x), x)
        if len(minima) - (zero_key in minima.best) == cosets_total - 1:
            break
    best: Ratio = INFINITY
    witness = None
    seen = 0
    for key, (weight, x) in minima.items():
        if key == zero_key:
            continue
        seen += 1
        ratio = Fraction(n * int(hamming_weights(H.apply(x))[0]), m * weight)
        if ratio < best:
            best, witness = ratio, x
    complete = seen == cosets_total - 1
    performance_logger.end_timer("soundness_scan", rows=m, cols=n, cosets=seen, complete=complete)
    return SoundnessEstimate(
        lower_bound=best if complete else min(best, Fraction(1, m)),
        upper_bound=best,
        exact=complete,
        cosets_seen=seen + 1,
        cosets_total=cosets_total,
        witness=witness,
    )


def qltc_soundness(C: CssCode, budget: Optional[int] = None) -> Dict[str, Any]:
    """Soundness of both check families; the code's soundness is the smaller one"""
    x_scan = soundness_scan(C.H_X, budget)
    z_scan = soundness_scan(C.H_Z, budget)
    return {
        "x": x_scan,
        "z": z_scan,
        "lower_bound": min(x_scan.lower_bound, z_scan.lower_bound),
        "upper_bound": min(x_scan.upper_bound, z_scan.upper_bound),
        "exact": x_scan.exact and z_scan.exact,
    }


def ldpc_profile(C: CssCode) -> Dict[str, Any]:
    """Row and column weight histograms of both check matrices"""
    t, n = C.structure.get("t"), C.structure.get("n")
    m = C.structure.get("m") or [0]
    bound = C.e * 2 * t * n * max(m) if t is not None and n is not None else None
    profile: Dict[str, Any] = {"row_weight_bound": bound}
    for name, H in (("H_X", C.H_X), ("H_Z", C.H_Z)):
        for axis, weights in (("rows", H.row_weights()), ("cols", H.col_weights())):
            counts = pd.Series(weights, dtype=np.int64).value_counts().sort_index()
            profile[f"{name}.{axis}"] = {int(w): int(c) for w, c in counts.items()}
        profile[f"{name}.max_row_weight"] = int(H.row_weights().max(initial=0))
    profile["within_bound"] = bound is None or max(
        profile["H_X.max_row_weight"], profile["H_Z.max_row_weight"]
    ) <= bound
    return profile


def css_checks(C: CssCode, params: Optional[CodeParams] = None,
               block_distances: Optional[Sequence[DistanceEntry]] = None) -> List[CheckResult]:
    """Orthogonality, the two dimension formulas, and block-distance lower bounds"""
    product = C.H_X @ C.H_Z.T
    results = [check(f"css.orthogonal[{C.level}]", "css-orthogonality", product.is_zero(), nonzeros=product.nnz)]
    profile = ldpc_profile(C)
    results.append(check(f"css.check_weights[{C.level}]", "bounded-check-weight", profile["within_bound"],
                         bound=profile["row_weight_bound"], max_x=profile["H_X.max_row_weight"],
                         max_z=profile["H_Z.max_row_weight"]))
    if params is None:
        return results
    results.append(check(f"css.dimension[{C.level}]", "css-dimension-identity",
                         params.k == params.k_rank_identity, k=params.k, k_rank_identity=params.k_rank_identity))
    check_id = f"css.distance_bound[{C.level}]"
    if block_distances and params.d_x.exact and params.d_z.exact:
        # each nonzero block carries at least one nonzero bit
        lower = min(entry.lower_bound for entry in block_distances)
        exact = min(params.d_x.lower_bound, params.d_z.lower_bound)
        results.append(check(check_id, "block-distance-bounds-bit-distance", lower <= exact,
                             block_lower=lower, d=exact))
    else:
        results.append(CheckResult(check_id, "block-distance-bounds-bit-distance", CheckStatus.SKIPPED,
                                   {"reason": "distances not exact"}))
    return results


def soundness_check(C: CssCode, SC: SheafComplex, eps_cyc: Ratio, eps_cocyc: Ratio,
                    budget: Optional[int] = None) -> CheckResult:
    """Measured soundness is at least the bound from the level's expansion"""
    check_id = f"css.soundness[{C.level}]"
    bound = soundness_lower_bound(SC, C.level, eps_cyc, eps_cocyc)
    try:
        measured = qltc_soundness(C, budget)
    except BudgetExceeded as e:
        return CheckResult(check_id, "soundness-from-expansion", CheckStatus.SKIPPED, {"reason": str(e)})
    if not measured["exact"]:
        return CheckResult(check_id, "soundness-from-expansion", CheckStatus.SKIPPED,
                           {"reason": "soundness not exact", "bound": bound})
    return check(check_id, "soundness-from-expansion", bound <= measured["lower_bound"],
                 bound=bound, rho=measured["lower_bound"])


# Matrix files

def _as_binary(M: Union[FieldMatrix, np.ndarray]) -> FieldMatrix:
    if isinstance(M, FieldMatrix):
        return M
    return FieldMatrix.from_dense(binary_field(), np.asarray(M, dtype=np.int64) % 2)


def _entries(M: FieldMatrix) -> np.ndarray:
    pairs = np.stack([M.rows, M.cols], axis=1) if M.nnz else np.zeros((0, 2), dtype=np.int64)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def _alist_text(M: FieldMatrix) -> str:
    rows, cols = M.nrows, M.ncols
    entries = _entries(M)
    by_col = [[] for _ in range(cols)]
    by_row = [[] for _ in range(rows)]
    for r, c in entries:
        by_col[c].append(int(r) + 1)
        by_row[r].append(int(c) + 1)
    col_max = max((len(x) for x in by_col), default=0)
    row_max = max((len(x) for x in by_row), default=0)

    def padded(values: List[int], width: int) -> str:
        return " ".join(str(v) for v in values + [0] * (width - len(values)))

    lines = [
        f"{cols} {rows}",
        f"{col_max} {row_max}",
        " ".join(str(len(x)) for x in by_col),
        " ".join(str(len(x)) for x in by_row),
    ]
    lines += [padded(x, col_max) for x in by_col]
    lines += [padded(x, row_max) for x in by_row]
    return "\n".join(lines) + "\n"


def _mtx_text(M: FieldMatrix) -> str:
    entries = _entries(M)
    lines = ["%%MatrixMarket matrix coordinate pattern general", f"{M.nrows} {M.ncols} {len(entries)}"]
    lines += [f"{int(r) + 1} {int(c) + 1}" for r, c in entries]
    return "\n".join(lines) + "\n"


def _json_text(M: FieldMatrix) -> str:
    document = {"rows": M.nrows, "cols": M.ncols, "entries": _entries(M).tolist()}
    return json.dumps(document, sort_keys=True) + "\n"


def export_matrix(M: Union[FieldMatrix, np.ndarray], path, format: str = "alist") -> Path:
    """Write a binary matrix as alist, MatrixMarket pattern or JSON"""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    M = _as_binary(M)
    text = {"alist": _alist_text, "mtx": _mtx_text, "json": _json_text}[format](M)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise IoFailure(path, str(e)) from e
    logger.info(f"Exported {M.nrows}x{M.ncols} matrix ({M.nnz} ones) to {path} as {format}")
    return path


def _parse_alist(text: str) -> FieldMatrix:
    lines = text.split("\n")
    cols, rows = (int(v) for v in lines[0].split())
    col_degrees = [int(v) for v in lines[2].split()]
    if len(col_degrees) != cols:
        raise ValueError(f"expected {cols} column degrees, found {len(col_degrees)}")
    r_idx, c_idx = [], []
    for c in range(cols):
        values = [int(v) for v in lines[4 + c].split()][:col_degrees[c]]
        r_idx += [v - 1 for v in values]
        c_idx += [c] * len(values)
    by_row = {(r, c) for r, c in zip(r_idx, c_idx)}
    row_degrees = [int(v) for v in lines[3].split()]
    for r in range(rows):
        values = [int(v) for v in lines[4 + cols + r].split()][:row_degrees[r]]
        if {(r, v - 1) for v in values} - by_row:
            raise ValueError(f"row {r + 1} lists entries missing from the column lists")
    return FieldMatrix(binary_field(), (rows, cols), r_idx, c_idx, np.ones(len(r_idx), dtype=np.int64))


def _parse_mtx(path: Path) -> FieldMatrix:
    coo = scipy.io.mmread(str(path))
    coo = coo.tocoo() if hasattr(coo, "tocoo") else None
    if coo is None:
        raise ValueError("not a coordinate matrix")
    return FieldMatrix(binary_field(), coo.shape, coo.row.astype(np.int64), coo.col.astype(np.int64),
                       np.ones(coo.nnz, dtype=np.int64))


def _parse_json(text: str) -> FieldMatrix:
    document = json.loads(text)
    entries = np.asarray(document["entries"], dtype=np.int64).reshape(-1, 2)
    return FieldMatrix(binary_field(), (int(document["rows"]), int(document["cols"])), entries[:, 0], entries[:, 1],
                       np.ones(entries.shape[0], dtype=np.int64))


def import_matrix(path, format: Optional[str] = None) -> FieldMatrix:
    """Read a binary matrix written by export_matrix (format from the suffix if omitted)"""
    path = Path(path)
    format = format or path.suffix.lstrip(".")
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    try:
        if format == "mtx":
            return _parse_mtx(path)
        text = path.read_text()
        return _parse_alist(text) if format == "alist" else _parse_json(text)
    except OSError as e:
        raise IoFailure(path, str(e)) from e
    except (ValueError, IndexError, KeyError) as e:
        raise IoFailure(path, f"malformed {format} file: {e}") from e


def export_code(C: CssCode, directory, format: str = "alist") -> Dict[str, Path]:
    """Both check matrices under ``directory`` as hx.<format> and hz.<format>"""
    directory = Path(directory)
    return {
        "H_X": export_matrix(C.H_X, directory / f"hx.{format}", format),
        "H_Z": export_matrix(C.H_Z, directory / f"hz.{format}", format),
    }
