"""
Local Product Complexes
The complexes C(L_S) for direction subsets S: assembly, exactness, tensor-code
kernels, minimality, robustness measurement and the search for robust
tuples of check matrices.
"""

import itertools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .core.batch_processor import BatchProcessor, task_rngs
from .core.config import WorkerConfig, get_config
from .core.logging import PerformanceLogger, get_logger
from .errors import BudgetExceeded, ConstructionError, LevelOutOfRange
from .ff2e import (
    CosetMinima, Field, FieldMatrix, block_support_count, block_weight_cap, block_weights,
    coefficient_block, column_space_basis, field_make, hamming_weights, iterate_block_support, iterate_span,
    kernel_matrix, rank, raw, row_keys, span_size
)
from .geometry import Face
from .reports import CheckResult, check
from .sheaf import LocalCodes, SheafComplex, coeff_shape, insertion_pattern

logger = get_logger(__name__)
performance_logger = PerformanceLogger(logger)

INFINITY = float("inf")
Ratio = Union[Fraction, float]

LocalFace = Tuple[Tuple[int, ...], Tuple[int, ...]]


class Undecidable(BudgetExceeded):
    """Exact decision would exceed the enumeration budget"""
    pass


class NoFullRankTuple(ConstructionError):
    """No full-row-rank check matrix exists for the requested shape"""
    pass


class LocalComplex:
    """C(L_S): faces of type T subset of S are generator tuples over T,
    with coefficients indexed by prod_{i in S - T} {0..m_i-1}
    """

    def __init__(self, S: Sequence[int], codes: LocalCodes):
        S = tuple(sorted(set(S)))
        if not S:
            raise ValueError("direction subset must be nonempty")
        if S[-1] >= codes.t or S[0] < 0:
            raise ValueError(f"directions {S} outside 0..{codes.t - 1}")
        self.S = S
        self.codes = codes
        self.field = codes.field
        self.n = codes.n
        self.outside = tuple(j for j in range(codes.t) if j not in S)
        self._faces: Dict[int, List[LocalFace]] = {}
        self._index: Dict[int, Dict[LocalFace, int]] = {}
        self._offsets: Dict[int, np.ndarray] = {}
        self._matrices: Dict[str, FieldMatrix] = {}
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"LocalComplex(S={self.S}, m={self.codes.m}, n={self.n})"

    @property
    def top(self) -> int:
        return len(self.S)

    def _global_type(self, T: Sequence[int]) -> Tuple[int, ...]:
        return tuple(sorted(tuple(T) + self.outside))

    def coeff_shape(self, T: Sequence[int]) -> Tuple[int, ...]:
        return coeff_shape(self._global_type(T), self.codes.m)

    def faces(self, k: int) -> List[LocalFace]:
        if not 0 <= k <= self.top:
            raise LevelOutOfRange(k, 0, self.top)
        faces = self._faces.get(k)
        if faces is None:
            faces = [
                (T, gens)
                for T in itertools.combinations(self.S, k)
                for gens in itertools.product(range(self.n), repeat=k)
            ]
            sizes = [prod(self.coeff_shape(T)) for T, _ in faces]
            with self._lock:
                self._index[k] = {f: i for i, f in enumerate(faces)}
                self._offsets[k] = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
                self._faces[k] = faces
        return faces

    def index(self, k: int) -> Dict[LocalFace, int]:
        self.faces(k)
        return self._index[k]

    def offsets(self, k: int) -> np.ndarray:
        self.faces(k)
        return self._offsets[k]

    def block_sizes(self, k: int) -> np.ndarray:
        return np.diff(self.offsets(k))

    def dim(self, k: int) -> int:
        return int(self.offsets(k)[-1])

    def dim_formula(self, k: int) -> int:
        m = self.codes.m
        return sum(
            self.n ** k * prod(m[i] for i in self.S if i not in T)
            for T in itertools.combinations(self.S, k)
        )

    def delta(self, k: int) -> FieldMatrix:
        """delta_S : C^k(L_S) -> C^{k+1}(L_S)"""
        if not 0 <= k < self.top:
            raise LevelOutOfRange(k, 0, self.top - 1)
        return self._cached(f"delta_{k}", lambda: self._assemble_delta(k))

    def partial(self, k: int) -> FieldMatrix:
        """partial_S : C_k(L_S) -> C_{k-1}(L_S)"""
        if not 1 <= k <= self.top:
            raise LevelOutOfRange(k, 1, self.top)
        return self._cached(f"partial_{k}", lambda: self._assemble_partial(k))

    def _cached(self, name: str, build) -> FieldMatrix:
        M = self._matrices.get(name)
        if M is None:
            M = build()
            with self._lock:
                M = self._matrices.setdefault(name, M)
        return M

    def _assemble_delta(self, k: int) -> FieldMatrix:
        m, h = self.codes.m, self.codes.h
        lower_index, up_off, low_off = self.index(k), self.offsets(k + 1), self.offsets(k)
        rows, cols, vals = [], [], []
        for i, (T, gens) in enumerate(self.faces(k + 1)):
            for p, j in enumerate(T):
                lower = (T[:p] + T[p + 1:], gens[:p] + gens[p + 1:])
                c, c_low, r = insertion_pattern(m, self._global_type(T), j)
                rows.append(up_off[i] + c)
                cols.append(low_off[lower_index[lower]] + c_low)
                vals.append(h[j][r, gens[p]])
        return self._matrix((self.dim(k + 1), self.dim(k)), rows, cols, vals)

    def _assemble_partial(self, k: int) -> FieldMatrix:
        m, h = self.codes.m, self.codes.h
        upper_index, up_off, low_off = self.index(k), self.offsets(k), self.offsets(k - 1)
        rows, cols, vals = [], [], []
        for i, (T, gens) in enumerate(self.faces(k - 1)):
            for j in self.S:
                if j in T:
                    continue
                p = sum(1 for x in T if x < j)
                T_up = T[:p] + (j,) + T[p:]
                c, c_low, r = insertion_pattern(m, self._global_type(T_up), j)
                for a in range(self.n):
                    upper = (T_up, gens[:p] + (a,) + gens[p:])
                    rows.append(low_off[i] + c_low)
                    cols.append(up_off[upper_index[upper]] + c)
                    vals.append(h[j][r, a])
        return self._matrix((self.dim(k - 1), self.dim(k)), rows, cols, vals)

    def _matrix(self, shape, rows, cols, vals) -> FieldMatrix:
        if not rows:
            return FieldMatrix.zeros(self.field, shape)
        return FieldMatrix(self.field, shape, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))

    def self_check(self) -> List[CheckResult]:
        label = "".join(str(j) for j in self.S)
        dims_ok = all(self.dim(k) == self.dim_formula(k) for k in range(self.top + 1))
        squares_ok = all((self.delta(k + 1) @ self.delta(k)).is_zero() for k in range(self.top - 1))
        squares_ok &= all((self.partial(k) @ self.partial(k + 1)).is_zero() for k in range(1, self.top))
        adjoint_ok = all(self.delta(k) == self.partial(k + 1).T for k in range(self.top))
        return [
            check(f"local[{label}].dimension", "local-product-dimension", dims_ok),
            check(f"local[{label}].chain_conditions", "local-chain-conditions", squares_ok),
            check(f"local[{label}].adjoint", "local-coboundary-adjoint", adjoint_ok),
        ]


def local_complex(S: Sequence[int], codes: LocalCodes) -> LocalComplex:
    """Build C(L_S) and confirm dimensions, chain conditions and adjointness"""
    L = LocalComplex(S, codes)
    failed = [r.check_id for r in L.self_check() if not r.passed]
    if failed:
        raise ConstructionError(f"local complex {L.S} failed self-checks: {failed}")
    return L


def local_to_global_map(SC: SheafComplex, f: Face, L: LocalComplex, k: int) -> np.ndarray:
    """Global coordinates (level dim f + k) of each local basis vector at level k

    ``f`` must have type equal to the complement of L.S.
    """
    X = SC.geometry
    offsets = SC.offsets(f.dim + k)
    out = []
    for (T, gens), size in zip(L.faces(k), L.block_sizes(k)):
        u = X.extend_face(f, dict(zip(T, gens)))
        start = int(offsets[X.index(u)])
        out.append(np.arange(start, start + int(size), dtype=np.int64))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def local_global_check(SC: SheafComplex, f: Face, L: Optional[LocalComplex] = None) -> CheckResult:
    """The coboundary of C(X_{>=f}) matches the local complex of the complementary type"""
    S = tuple(j for j in range(SC.t) if f.labels[j] < 0)
    if not S:
        return check("local.global_identification", "link-local-isomorphism", True, face=str(f), levels=0)
    L = L or LocalComplex(S, SC.codes)
    ok = True
    for k in range(L.top):
        cols = local_to_global_map(SC, f, L, k)
        rows = local_to_global_map(SC, f, L, k + 1)
        ok &= SC.delta(f.dim + k).submatrix(rows, cols) == L.delta(k)
    return check("local.global_identification", "link-local-isomorphism", ok, face=str(f), levels=L.top)


def exactness_check(L: LocalComplex) -> List[CheckResult]:
    """im partial_{i+1} = ker partial_i below the top level; top kernel dimension reported"""
    label = "".join(str(j) for j in L.S)
    results = []
    for i in range(L.top):
        kernel_dim = L.dim(i) - (rank(L.partial(i)) if i >= 1 else 0)
        image_dim = rank(L.partial(i + 1))
        results.append(check(
            f"local[{label}].exact[{i}]", "local-exactness",
            image_dim == kernel_dim, kernel=kernel_dim, image=image_dim
        ))
    top_kernel = L.dim(L.top) - rank(L.partial(L.top))
    expected = prod(L.n - L.codes.m[j] for j in L.S)
    results.append(check(
        f"local[{label}].top_kernel", "top-kernel-is-tensor-code",
        top_kernel == expected, kernel=top_kernel, tensor_dimension=expected
    ))
    return results


def tensor_kernel_basis(L: LocalComplex) -> np.ndarray:
    """Rows: tensor products of per-direction kernel bases, as top-level chains"""
    F = L.field
    bases = [raw(kernel_matrix(F(L.codes.h[j]))) for j in L.S]
    product = bases[0]
    for K in bases[1:]:
        a, b = product.shape[0], K.shape[0]
        tensor = F.mul(product[:, None, :, None], K[None, :, None, :])
        product = tensor.reshape(a * b, product.shape[1] * K.shape[1])
    return product


def tensor_kernel_check(L: LocalComplex) -> CheckResult:
    """The tensor code spans exactly the kernel of the top boundary"""
    F = L.field
    label = "".join(str(j) for j in L.S)
    B = tensor_kernel_basis(L)
    kernel = raw(kernel_matrix(L.partial(L.top)))
    in_kernel = not np.any(L.partial(L.top).apply(B.T)) if B.size else True
    rank_b = rank(F(B)) if B.size else 0
    rank_k = rank(F(kernel)) if kernel.size else 0
    stacked = np.vstack([B.reshape(-1, L.dim(L.top)), kernel.reshape(-1, L.dim(L.top))])
    rank_both = rank(F(stacked)) if stacked.size else 0
    return check(
        f"local[{label}].tensor_kernel", "top-kernel-is-tensor-code",
        in_kernel and rank_b == rank_k == rank_both,
        tensor_rank=rank_b, kernel_dimension=rank_k
    )


def _image_basis(L: LocalComplex, k: int) -> np.ndarray:
    """Rows spanning im delta_{k-1} inside C^k"""
    if k == 0:
        return np.zeros((0, L.dim(0)), dtype=np.int64)
    return raw(column_space_basis(L.delta(k - 1)))


def _coset_key_matrix(L: LocalComplex, k: int) -> np.ndarray:
    """Rows spanning the annihilator of im delta_{k-1}, i.e. ker partial_k"""
    if k == 0:
        return np.eye(L.dim(0), dtype=np.int64)
    return raw(kernel_matrix(L.partial(k)))


def is_minimal(L: LocalComplex, x, k: int, budget: Optional[int] = None, chunk: Optional[int] = None) -> bool:
    """True iff no coboundary shift x + delta(y) has smaller block weight"""
    if not 0 <= k <= L.top:
        raise LevelOutOfRange(k, 0, L.top)
    x = raw(x)
    if k == 0 or not np.any(x):
        return True
    budget = budget or get_config().budgets.enumeration
    chunk = chunk or get_config().workers.chunk_size
    basis = _image_basis(L, k)
    total = span_size(L.field.q, basis.shape[0])
    if total > budget:
        raise Undecidable(f"coset of size {total} exceeds budget {budget}", needed=total, budget=budget)

    sizes = L.block_sizes(k)
    weight = int(block_weights(x, sizes)[0])
    for _, shifts in iterate_span(L.field, basis, chunk):
        if int(block_weights(shifts ^ x[None, :], sizes).min()) < weight:
            return False
    return True


@dataclass
class RobustnessEstimate:
    """Bounds on kappa for one (S, k) cell"""
    level: int
    lower_bound: Ratio
    upper_bound: Ratio
    method: str
    witness: Optional[np.ndarray] = None
    partial: bool = False
    cosets: int = 0
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "method": self.method,
            "partial": self.partial,
            "cosets": self.cosets,
            "witness": None if self.witness is None else self.witness.tolist(),
            "note": self.note,
        }


def _vacuous(level: int, note: str) -> RobustnessEstimate:
    return RobustnessEstimate(level=level, lower_bound=INFINITY, upper_bound=INFINITY, method="vacuous", note=note)


def _scan(L: LocalComplex, k: int, chunks: Iterator[np.ndarray], key_matrix: np.ndarray) -> CosetMinima:
    sizes = L.block_sizes(k)
    minima = CosetMinima()
    for x in chunks:
        keys = row_keys(L.field.matmul(x, key_matrix.T))
        minima.update(keys, block_weights(x, sizes), x)
    return minima


def _kappa_from_minima(L: LocalComplex, k: int, minima: CosetMinima, key_rows: int) -> Tuple[Ratio, Optional[np.ndarray]]:
    zero_key = row_keys(np.zeros((1, key_rows), dtype=np.int64))[0].tobytes()
    upper_sizes = L.block_sizes(k + 1)
    best: Ratio = INFINITY
    witness = None
    for key, (weight, x) in minima.items():
        if key == zero_key or weight == 0:
            continue
        image = L.delta(k).apply(x)
        ratio = Fraction(int(block_weights(image, upper_sizes)[0]), L.n * weight)
        if ratio < best:
            best, witness = ratio, x
    return best, witness


def robustness(
    L: LocalComplex,
    k: int,
    budget: Optional[int] = None,
    max_weight: Optional[int] = None,
    chunk: Optional[int] = None
) -> RobustnessEstimate:
    """kappa_{|S|,k}: min |delta_S x| / (n |x|) over nonzero minimal x in C^k"""
    if not 0 <= k < L.top:
        raise LevelOutOfRange(k, 0, L.top - 1)
    budget = budget or get_config().budgets.enumeration
    chunk = chunk or get_config().workers.chunk_size
    q = L.field.q

    if any(L.codes.m[j] == 0 for j in L.S):
        return _vacuous(k, "empty check matrix in direction subset")
    dim = L.dim(k)
    if dim == 0:
        return _vacuous(k, "zero cochain space")

    key_matrix = _coset_key_matrix(L, k)
    total = span_size(q, dim)
    if total <= budget and max_weight is None:
        chunks = (x for _, x in iterate_span(L.field, np.eye(dim, dtype=np.int64), chunk))
        minima = _scan(L, k, chunks, key_matrix)
        kappa, witness = _kappa_from_minima(L, k, minima, key_matrix.shape[0])
        return RobustnessEstimate(
            level=k, lower_bound=kappa, upper_bound=kappa, method="exhaustive",
            witness=witness, cosets=len(minima)
        )

    sizes = L.block_sizes(k)
    faces = int(np.count_nonzero(sizes))
    weight_cap = block_weight_cap(sizes, q, budget, max_weight if max_weight is not None else faces)

    floor = Fraction(1, L.n * faces)
    if weight_cap == 0:
        partial = RobustnessEstimate(level=k, lower_bound=floor, upper_bound=INFINITY,
                                     method="weight-capped", partial=True, note="budget below one block")
        raise BudgetExceeded(f"robustness scan of level {k} exceeds budget {budget}",
                             needed=block_support_count(sizes, q, 1), budget=budget, partial=partial)

    chunks = (x for w in range(1, weight_cap + 1) for x in iterate_block_support(sizes, q, w, chunk))
    minima = _scan(L, k, chunks, key_matrix)
    kappa, witness = _kappa_from_minima(L, k, minima, key_matrix.shape[0])
    complete = weight_cap >= faces
    estimate = RobustnessEstimate(
        level=k,
        lower_bound=kappa if complete else min(kappa, floor),
        upper_bound=kappa,
        method="exhaustive-by-weight" if complete else "weight-capped",
        witness=witness,
        partial=not complete,
        cosets=len(minima),
        note=f"block weight <= {weight_cap}"
    )
    logger.debug(f"Robustness scan of {L.S} level {k}: {estimate.method}, cap {weight_cap}")
    return estimate


def verify_witness(L: LocalComplex, estimate: RobustnessEstimate, budget: Optional[int] = None) -> bool:
    """Witness is minimal and attains the reported upper bound"""
    if estimate.witness is None:
        return estimate.upper_bound == INFINITY
    x, k = estimate.witness, estimate.level
    weight = int(block_weights(x, L.block_sizes(k))[0])
    image = int(block_weights(L.delta(k).apply(x), L.block_sizes(k + 1))[0])
    return weight > 0 and is_minimal(L, x, k, budget) and Fraction(image, L.n * weight) == estimate.upper_bound


def product_expansion(codes: LocalCodes, S: Optional[Sequence[int]] = None, budget: Optional[int] = None) -> RobustnessEstimate:
    """Robustness at the top cochain level |S| - 1"""
    S = tuple(S) if S is not None else tuple(range(codes.t))
    L = LocalComplex(S, codes)
    return robustness(L, L.top - 1, budget)


@dataclass
class TwoWayReport:
    """kappa per (side, S, k) cell and the overall minimum"""
    cells: List[Dict[str, Any]]
    kappa_lower: Ratio
    kappa_upper: Ratio
    partial: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cells": self.cells,
            "kappa_lower": self.kappa_lower,
            "kappa_upper": self.kappa_upper,
            "partial": self.partial,
        }


def robustness_cells(t: int) -> List[Tuple[str, Tuple[int, ...], int]]:
    return [
        (side, S, k)
        for side in ("primal", "dual")
        for size in range(1, t + 1)
        for S in itertools.combinations(range(t), size)
        for k in range(size)
    ]


def _measure_cell(codes: LocalCodes, duals: LocalCodes, cell, budget: int) -> Dict[str, Any]:
    side, S, k = cell
    L = LocalComplex(S, codes if side == "primal" else duals)
    try:
        estimate = robustness(L, k, budget)
    except BudgetExceeded as e:
        estimate = e.partial
    return {"side": side, "S": list(S), "k": k, **estimate.to_dict()}


def two_way_robustness(
    codes: LocalCodes,
    budget: Optional[int] = None,
    processor: Optional[BatchProcessor] = None
) -> TwoWayReport:
    """Robustness of every cell for the checks and their duals"""
    budget = budget or get_config().budgets.enumeration
    processor = processor or BatchProcessor(WorkerConfig(jobs=1))
    duals = codes.dual()
    cells = robustness_cells(codes.t)
    measured = processor.map(lambda cell: _measure_cell(codes, duals, cell, budget), cells,
                             batch_size=1, label="two_way_robustness")
    finite = [c for c in measured if c["method"] != "vacuous"]
    return TwoWayReport(
        cells=measured,
        kappa_lower=min((c["lower_bound"] for c in finite), default=INFINITY),
        kappa_upper=min((c["upper_bound"] for c in finite), default=INFINITY),
        partial=any(c["partial"] for c in measured),
    )


def robust_distance_check(codes: LocalCodes, report: TwoWayReport) -> List[CheckResult]:
    """Single-direction cells: kappa is the least weight in the row space of h_j over n"""
    duals = codes.dual()
    F = codes.field
    results = []
    for cell in report.cells:
        if len(cell["S"]) != 1 or cell["k"] != 0 or cell["method"] == "vacuous":
            continue
        (j,) = cell["S"]
        h = (codes if cell["side"] == "primal" else duals).h[j]
        weights = np.concatenate([
            hamming_weights(vectors) for _, vectors in iterate_span(F, h, 1 << 12)
        ])
        if not np.any(weights > 0):
            continue
        expected = Fraction(int(weights[weights > 0].min()), codes.n)
        results.append(check(
            f"local.robust_distance[{cell['side']},{j}]", "single-direction-robustness-is-dual-distance",
            cell["lower_bound"] == expected == cell["upper_bound"],
            expected=expected, lower=cell["lower_bound"], upper=cell["upper_bound"]
        ))
    return results


def full_rank_count(q: int, m: int, n: int) -> int:
    return prod(q ** n - q ** r for r in range(m))


def full_rank_matrices(F: Field, m: int, n: int) -> Iterator[np.ndarray]:
    """Every full-row-rank m x n matrix, in lexicographic entry order"""
    total = F.q ** (m * n)
    for start in range(0, total, 4096):
        for entries in coefficient_block(F.q, m * n, start, min(total, start + 4096)):
            M = entries.reshape(m, n)
            if rank(F(M)) == m:
                yield M


def _random_full_rank(F: Field, m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        M = rng.integers(0, F.q, size=(m, n), dtype=np.int64)
        if rank(F(M)) == m:
            return M


@dataclass
class SearchReport:
    """Outcome of a robust-tuple search"""
    t: int
    n: int
    m: Tuple[int, ...]
    e: int
    seed: int
    method: str
    evaluated: int
    best: Optional[List[List[List[int]]]] = None
    best_kappa: Ratio = 0
    best_report: Optional[TwoWayReport] = None
    census: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t, "n": self.n, "m": list(self.m), "e": self.e, "seed": self.seed,
            "method": self.method, "evaluated": self.evaluated,
            "best": self.best, "best_kappa": self.best_kappa,
            "best_report": self.best_report.to_dict() if self.best_report else None,
            "census": self.census,
        }


def search_robust_tuple(
    t: int,
    n: int,
    m: Sequence[int],
    e: int,
    trials: int,
    budget: Optional[int] = None,
    seed: int = 0,
    processor: Optional[BatchProcessor] = None,
    exhaust: Optional[bool] = None
) -> SearchReport:
    """Exhaust or sample full-rank tuples and keep the most two-way robust one"""
    m = tuple(int(x) for x in m)
    if len(m) != t:
        raise ValueError(f"expected {t} row counts, got {len(m)}")
    if any(x > n or x < 1 for x in m):
        raise NoFullRankTuple(f"no full-row-rank {m} x {n} check matrices")
    F = field_make(e)
    processor = processor or BatchProcessor(WorkerConfig(jobs=1))
    budget = budget or get_config().budgets.enumeration

    space = prod(full_rank_count(F.q, mj, n) for mj in m)
    exhaustive = space <= trials if exhaust is None else exhaust
    report = SearchReport(t=t, n=n, m=m, e=e, seed=seed, method="exhaustive" if exhaustive else "sampled", evaluated=0)
    if trials <= 0 and not exhaustive:
        return report

    if exhaustive:
        per_direction = [list(full_rank_matrices(F, mj, n)) for mj in m]
        tuples = [list(combo) for combo in itertools.product(*per_direction)]
    else:
        tuples = [[_random_full_rank(F, mj, n, rng) for mj in m] for rng in task_rngs(seed, trials)]

    performance_logger.start_timer("search_robust_tuple")

    def evaluate(matrices):
        codes = LocalCodes.from_matrices(F, matrices)
        return two_way_robustness(codes, budget)

    results = processor.map(evaluate, tuples, label="robust_tuple_search")
    report.evaluated = len(results)

    best_index = None
    for i, r in enumerate(results):
        if best_index is None or r.kappa_lower > results[best_index].kappa_lower:
            best_index = i
    if best_index is not None:
        report.best = [M.tolist() for M in tuples[best_index]]
        report.best_kappa = results[best_index].kappa_lower
        report.best_report = results[best_index]

    values = pd.Series([r.kappa_lower for r in results], dtype=object)
    counts = values.value_counts(sort=False)
    report.census = {str(kappa): int(counts[kappa]) for kappa in sorted(counts.index)}
    performance_logger.end_timer("search_robust_tuple", evaluated=report.evaluated)
    logger.info(f"Robust tuple search done: {report.evaluated} tuples, best kappa {report.best_kappa}")
    return report
