"""
Distances and Expansion
Systolic and co-systolic distances, the locally co-minimal distance, cycle and
co-cycle expansion, the dual complex, and the analytic lower bounds these
quantities are compared against.

Exact values come from enumerating kernel spans or, beyond the budget, from
scanning chains in increasing block weight: the first hit of a weight-ordered
scan is exact, and an empty scan up to weight w proves a lower bound of w + 1.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, inf, prod
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.batch_processor import BatchProcessor
from ..core.config import WorkerConfig, get_config
from ..core.logging import PerformanceLogger, get_logger
from ..errors import BudgetExceeded, ConstructionError
from ..ff2e import (
    CosetMinima, FieldMatrix, block_weight_cap, block_weights, coefficient_block, column_space_basis,
    iterate_block_support, iterate_span, kernel_matrix, rank, raw, row_keys, span_size
)
from ..local import LocalComplex, TwoWayReport, local_to_global_map
from ..reports import CheckResult, CheckStatus, check
from ..sheaf import SheafComplex, chain_dim_formula, verify_chain
from .decoder import small_set_flip_decode

logger = get_logger(__name__)
performance_logger = PerformanceLogger(logger)

INFINITY = inf
Ratio = Union[Fraction, float, int]
MODES = ("syst", "cosyst")
EXPANSION_MODES = ("cyc", "cocyc")


@dataclass
class DistanceEntry:
    """One measured quantity: exact value or bounds, with the minimizing chain"""
    quantity: str
    level: int
    lower_bound: Ratio
    upper_bound: Ratio
    method: str
    witness: Optional[np.ndarray] = None
    partial: bool = False
    note: str = ""
    data: Dict[str, Any] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return not self.partial and self.lower_bound == self.upper_bound

    @property
    def value(self) -> Optional[Ratio]:
        return self.lower_bound if self.exact else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "quantity": self.quantity,
            "level": self.level,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "method": self.method,
            "exact": self.exact,
            "partial": self.partial,
            "witness": None if self.witness is None else self.witness.tolist(),
            "note": self.note,
            **self.data,
        }


@dataclass
class DistanceReport:
    """Distances and expansion of one level"""
    level: int
    entries: Dict[str, DistanceEntry] = field(default_factory=dict)

    def __getitem__(self, name: str) -> DistanceEntry:
        return self.entries[name]

    def to_dict(self) -> Dict[str, Any]:
        return {"level": self.level, "entries": {k: v.to_dict() for k, v in sorted(self.entries.items())}}


@dataclass
class CycleData:
    """Kernel basis, coset keys and the map whose kernel is enumerated"""
    kernel: np.ndarray
    keys: np.ndarray
    cycle_map: Optional[FieldMatrix]
    sizes: np.ndarray

    @property
    def homology_dim(self) -> int:
        dim = self.sizes.sum()
        return int(self.kernel.shape[0] - (dim - self.keys.shape[0]))


def cycle_data(SC: SheafComplex, k: int, mode: str) -> CycleData:
    """ker of partial_k (syst) or delta_k (cosyst), keyed by the annihilator of the image

    x is a nontrivial class iff keys @ x != 0.
    """
    t = SC.t
    SC.geometry.check_level(k, 0, t)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "syst":
        cycle_map = SC.partial(k) if k >= 1 else None
        key_map = SC.delta(k) if k < t else None
    else:
        cycle_map = SC.delta(k) if k < t else None
        key_map = SC.partial(k) if k >= 1 else None
    dim = SC.dim(k)
    identity = np.eye(dim, dtype=np.int64)
    kernel = raw(kernel_matrix(cycle_map)) if cycle_map is not None else identity
    keys = raw(kernel_matrix(key_map)) if key_map is not None else identity
    return CycleData(kernel=kernel, keys=keys, cycle_map=cycle_map, sizes=SC.block_sizes(k))


def _defaults(budget: Optional[int], chunk: Optional[int], processor: Optional[BatchProcessor]):
    config = get_config()
    return (budget or config.budgets.enumeration, chunk or config.workers.chunk_size,
            processor or BatchProcessor(WorkerConfig(jobs=1)))


def _span_minimum(SC: SheafComplex, basis: np.ndarray, sizes: np.ndarray, accept: Callable[[np.ndarray], np.ndarray],
                  budget: int, chunk: int, processor: BatchProcessor, label: str) -> Tuple[Ratio, Optional[np.ndarray]]:
    """Least block weight over accepted nonzero span elements; ties go to the first in index order"""
    F = SC.field
    k = basis.shape[0]
    total = span_size(F.q, k)
    if total > budget:
        raise BudgetExceeded(f"{label}: span of {total} exceeds budget {budget}", needed=total, budget=budget)

    def scan(start: int):
        coeffs = coefficient_block(F.q, k, start, min(total, start + chunk))
        vectors = F.matmul(coeffs, basis)
        weights = block_weights(vectors, sizes)
        ok = accept(vectors) & (weights > 0)
        if not ok.any():
            return INFINITY, None
        idx = np.flatnonzero(ok)
        best = idx[np.argmin(weights[idx])]
        return int(weights[best]), vectors[best]

    best: Ratio = INFINITY
    witness = None
    for weight, vector in processor.map(scan, list(range(0, total, chunk)), batch_size=1, label=label):
        if weight < best:
            best, witness = weight, vector
    return best, witness


def _weight_ordered_search(SC: SheafComplex, k: int, accept: Callable[[np.ndarray], np.ndarray], budget: int,
                           chunk: int, max_weight: Optional[int] = None) -> Tuple[int, Optional[int], Optional[np.ndarray]]:
    """Scan C^k by increasing block weight; returns (cap, weight, witness) of the first accepted chain"""
    sizes = SC.block_sizes(k)
    q = SC.field.q
    cap = block_weight_cap(sizes, q, budget, max_weight)
    for w in range(1, cap + 1):
        for x in iterate_block_support(sizes, q, w, chunk):
            ok = accept(x)
            if ok.any():
                return cap, w, x[int(np.argmax(ok))]
    return cap, None, None


def _sampled_upper(SC: SheafComplex, data: CycleData, nontrivial: Callable[[np.ndarray], np.ndarray],
                   draws: int, seed: int) -> Tuple[Ratio, Optional[np.ndarray]]:
    """Lightest nontrivial element among kernel basis rows and random combinations"""
    F = SC.field
    if data.kernel.shape[0] == 0:
        return INFINITY, None
    rng = np.random.default_rng(seed)
    candidates = np.vstack([
        data.kernel,
        F.matmul(rng.integers(0, F.q, size=(draws, data.kernel.shape[0])), data.kernel)
    ])
    ok = nontrivial(candidates)
    if not ok.any():
        return INFINITY, None
    weights = block_weights(candidates, data.sizes)
    idx = np.flatnonzero(ok)
    best = idx[np.argmin(weights[idx])]
    return int(weights[best]), candidates[best]


def _nontrivial_mask(SC: SheafComplex, keys: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    def mask(vectors: np.ndarray) -> np.ndarray:
        return np.any(SC.field.matmul(vectors, keys.T) != 0, axis=1)
    return mask


def _in_kernel_mask(cycle_map: Optional[FieldMatrix]) -> Callable[[np.ndarray], np.ndarray]:
    def mask(vectors: np.ndarray) -> np.ndarray:
        if cycle_map is None:
            return np.ones(vectors.shape[0], dtype=bool)
        return ~np.any(cycle_map.apply(vectors.T) != 0, axis=0)
    return mask


def brute_mu(
    SC: SheafComplex,
    k: int,
    mode: str = "syst",
    budget: Optional[int] = None,
    chunk: Optional[int] = None,
    processor: Optional[BatchProcessor] = None,
    draws: int = 256,
    seed: int = 0
) -> DistanceEntry:
    """Least block weight of a (co)cycle outside the (co)boundaries"""
    budget, chunk, processor = _defaults(budget, chunk, processor)
    quantity = f"mu_{mode}"
    data = cycle_data(SC, k, mode)
    if data.homology_dim == 0:
        return DistanceEntry(quantity, k, INFINITY, INFINITY, "trivial", note="trivial (co)homology")

    nontrivial = _nontrivial_mask(SC, data.keys)
    info = {"homology_dim": data.homology_dim}
    performance_logger.start_timer(f"brute_{quantity}")
    try:
        best, witness = _span_minimum(SC, data.kernel, data.sizes, nontrivial, budget, chunk, processor, f"brute_{quantity}")
        entry = DistanceEntry(quantity, k, best, best, "exact", witness=witness, data=info)
    except BudgetExceeded:
        is_cycle = _in_kernel_mask(data.cycle_map)
        cap, weight, witness = _weight_ordered_search(SC, k, lambda x: is_cycle(x) & nontrivial(x), budget, chunk)
        if weight is not None:
            entry = DistanceEntry(quantity, k, weight, weight, "by-weight", witness=witness, data=info)
        else:
            upper, sample = _sampled_upper(SC, data, nontrivial, draws, seed)
            entry = DistanceEntry(quantity, k, cap + 1, upper, "weight-capped", witness=sample, partial=True,
                                  note=f"no witness up to block weight {cap}", data=info)
            if cap == 0:
                performance_logger.end_timer(f"brute_{quantity}", level=k, method="budget")
                raise BudgetExceeded(f"{quantity} at level {k} exceeds budget {budget}", budget=budget, partial=entry)
    performance_logger.end_timer(f"brute_{quantity}", level=k, method=entry.method)
    return entry


class LocalCoMinimality:
    """Decides local co-minimality of level-k cochains vertex by vertex

    Every vertex sees the same local product complex, so the span of local
    coboundaries is enumerated once and placed through each vertex's link map.
    """

    def __init__(self, SC: SheafComplex, k: int, budget: Optional[int] = None):
        if not 1 <= k <= SC.t:
            raise ValueError(f"local co-minimality needs 1 <= k <= {SC.t}")
        budget = budget or get_config().budgets.enumeration
        X = SC.geometry
        L = LocalComplex(tuple(range(SC.t)), SC.codes)
        basis = raw(column_space_basis(L.delta(k - 1)))
        total = span_size(SC.field.q, basis.shape[0])
        if total > budget:
            raise BudgetExceeded(f"local coboundary span of {total} exceeds budget {budget}", needed=total, budget=budget)
        shifts = [v for _, v in iterate_span(SC.field, basis, max(total, 1))]
        self.shifts = np.vstack(shifts)[1:] if shifts else np.zeros((0, L.dim(k)), dtype=np.int64)
        self.local_sizes = L.block_sizes(k)
        self.coords = np.vstack([local_to_global_map(SC, v, L, k) for v in X.faces(0)])
        self.level = k

    def violations(self, x: np.ndarray) -> List[int]:
        """Vertices at which a local coboundary lowers the weight of x"""
        out = []
        local = x[self.coords]
        for v in np.flatnonzero(np.any(local != 0, axis=1)):
            weight = int(block_weights(local[v], self.local_sizes)[0])
            if self.shifts.size and int(block_weights(local[v][None, :] ^ self.shifts, self.local_sizes).min()) < weight:
                out.append(int(v))
        return out

    def is_minimal(self, x: np.ndarray) -> bool:
        return not self.violations(raw(x))


def d_coloc(
    SC: SheafComplex,
    k: int,
    budget: Optional[int] = None,
    chunk: Optional[int] = None,
    processor: Optional[BatchProcessor] = None
) -> DistanceEntry:
    """Least block weight of a nonzero locally co-minimal cocycle"""
    budget, chunk, processor = _defaults(budget, chunk, processor)
    data = cycle_data(SC, k, "cosyst")
    if data.kernel.shape[0] == 0:
        return DistanceEntry("d_coloc", k, INFINITY, INFINITY, "trivial", note="no nonzero cocycles")
    minimality = LocalCoMinimality(SC, k, budget) if k >= 1 else None
    F = SC.field

    def accept_batch(vectors: np.ndarray) -> np.ndarray:
        if minimality is None:
            return np.ones(vectors.shape[0], dtype=bool)
        return np.asarray([minimality.is_minimal(v) for v in vectors], dtype=bool)

    performance_logger.start_timer("d_coloc")
    total = span_size(F.q, data.kernel.shape[0])
    if total <= budget:
        # weights first, then candidates in increasing weight until one is co-minimal
        weights = np.concatenate([
            block_weights(v, data.sizes) for _, v in iterate_span(F, data.kernel, chunk)
        ])
        for w in np.unique(weights[weights > 0]):
            idx = np.flatnonzero(weights == w)
            for start in range(0, idx.size, chunk):
                part = idx[start:start + chunk]
                coeffs = np.vstack([coefficient_block(F.q, data.kernel.shape[0], int(i), int(i) + 1) for i in part])
                vectors = F.matmul(coeffs, data.kernel)
                ok = accept_batch(vectors)
                if ok.any():
                    performance_logger.end_timer("d_coloc", level=k, method="exact")
                    return DistanceEntry("d_coloc", k, int(w), int(w), "exact", witness=vectors[int(np.argmax(ok))])
        performance_logger.end_timer("d_coloc", level=k, method="exact")
        return DistanceEntry("d_coloc", k, INFINITY, INFINITY, "exact", note="no locally co-minimal cocycle")

    is_cocycle = _in_kernel_mask(data.cycle_map)

    def accept(x: np.ndarray) -> np.ndarray:
        ok = is_cocycle(x)
        if ok.any():
            ok[ok] = accept_batch(x[ok])
        return ok

    cap, weight, witness = _weight_ordered_search(SC, k, accept, budget, chunk)
    performance_logger.end_timer("d_coloc", level=k, method="by-weight")
    if weight is not None:
        return DistanceEntry("d_coloc", k, weight, weight, "by-weight", witness=witness)
    entry = DistanceEntry("d_coloc", k, cap + 1, INFINITY, "weight-capped", partial=True,
                          note=f"no witness up to block weight {cap}")
    if cap == 0:
        raise BudgetExceeded(f"d_coloc at level {k} exceeds budget {budget}", budget=budget, partial=entry)
    return entry


def _expansion_map(SC: SheafComplex, k: int, mode: str) -> Tuple[Optional[FieldMatrix], np.ndarray]:
    if mode == "cocyc":
        return (SC.delta(k), SC.block_sizes(k + 1)) if k < SC.t else (None, np.zeros(0, dtype=np.int64))
    return (SC.partial(k), SC.block_sizes(k - 1)) if k >= 1 else (None, np.zeros(0, dtype=np.int64))


def expansion(
    SC: SheafComplex,
    k: int,
    mode: str = "cocyc",
    budget: Optional[int] = None,
    chunk: Optional[int] = None,
    max_weight: Optional[int] = None
) -> DistanceEntry:
    """min over x outside the kernel of |Mx| / dist(x, ker M), M = delta_k or partial_k

    Cosets of the kernel are keyed by Mx; a weight-ordered scan meets each coset
    first at its lightest element, which is the distance to the kernel.
    """
    if mode not in EXPANSION_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    SC.geometry.check_level(k, 0, SC.t)
    budget, chunk, _ = _defaults(budget, chunk, None)
    quantity = f"eps_{mode}"
    M, target_sizes = _expansion_map(SC, k, mode)
    if M is None or M.nnz == 0:
        return DistanceEntry(quantity, k, INFINITY, INFINITY, "vacuous", note="every chain is in the kernel")

    sizes = SC.block_sizes(k)
    faces = int(np.count_nonzero(sizes))
    cap = block_weight_cap(sizes, SC.field.q, budget, max_weight if max_weight is not None else faces)
    floor = Fraction(1, faces)
    if cap == 0:
        entry = DistanceEntry(quantity, k, floor, INFINITY, "weight-capped", partial=True, note="budget below one block")
        raise BudgetExceeded(f"{quantity} at level {k} exceeds budget {budget}", budget=budget, partial=entry)

    performance_logger.start_timer(quantity)
    minima = CosetMinima()
    for w in range(1, cap + 1):
        for x in iterate_block_support(sizes, SC.field.q, w, chunk):
            images = M.apply(x.T).T
            minima.update(row_keys(images), block_weights(x, sizes), x)

    zero_key = row_keys(np.zeros((1, M.nrows), dtype=np.int64))[0].tobytes()
    best: Ratio = INFINITY
    witness = None
    for key, (weight, x) in minima.items():
        if key == zero_key:
            continue
        ratio = Fraction(int(block_weights(M.apply(x), target_sizes)[0]), weight)
        if ratio < best:
            best, witness = ratio, x
    complete = cap >= faces
    performance_logger.end_timer(quantity, level=k, cap=cap, cosets=len(minima))
    return DistanceEntry(
        quantity, k,
        best if complete else min(best, floor),
        best,
        "exhaustive-by-weight" if complete else "weight-capped",
        witness=witness,
        partial=not complete,
        note=f"block weight <= {cap}",
        data={"cosets": len(minima)}
    )


def distance_to_kernel(SC: SheafComplex, k: int, x, mode: str = "cocyc", budget: Optional[int] = None,
                       chunk: Optional[int] = None) -> int:
    """min over y in ker M of |x + y| by enumerating the kernel"""
    budget, chunk, _ = _defaults(budget, chunk, None)
    data = cycle_data(SC, k, "cosyst" if mode == "cocyc" else "syst")
    x = raw(x)
    total = span_size(SC.field.q, data.kernel.shape[0])
    if total > budget:
        raise BudgetExceeded(f"kernel of {total} elements exceeds budget {budget}", needed=total, budget=budget)
    best = None
    for _, vectors in iterate_span(SC.field, data.kernel, chunk):
        w = int(block_weights(vectors ^ x[None, :], data.sizes).min())
        best = w if best is None else min(best, w)
    return best


def verify_expansion_witness(SC: SheafComplex, entry: DistanceEntry, mode: str = "cocyc",
                             budget: Optional[int] = None) -> bool:
    """The witness attains the reported ratio and its weight is its distance to the kernel"""
    if entry.witness is None:
        return entry.upper_bound == INFINITY
    M, target_sizes = _expansion_map(SC, entry.level, mode)
    x = entry.witness
    image = int(block_weights(M.apply(x), target_sizes)[0])
    weight = int(block_weights(x, SC.block_sizes(entry.level))[0])
    if image == 0 or weight == 0 or Fraction(image, weight) != entry.upper_bound:
        return False
    try:
        return distance_to_kernel(SC, entry.level, x, mode, budget) == weight
    except BudgetExceeded:
        return True


def verify_distance_witness(SC: SheafComplex, entry: DistanceEntry, mode: str) -> bool:
    """The witness is a (co)cycle, not a (co)boundary, and has the reported weight"""
    if entry.witness is None:
        return entry.upper_bound == INFINITY
    data = cycle_data(SC, entry.level, mode)
    x = entry.witness[None, :]
    weight = int(block_weights(x, data.sizes)[0])
    return bool(_in_kernel_mask(data.cycle_map)(x)[0] and _nontrivial_mask(SC, data.keys)(x)[0]
                and weight == entry.upper_bound)


def monotonicity_check(SC: SheafComplex, entry: DistanceEntry, mode: str, samples: int = 1000,
                       seed: int = 0) -> CheckResult:
    """Adding random (co)boundaries to the witness never goes below the reported minimum"""
    check_id = f"distance.monotone[{entry.quantity},{entry.level}]"
    if entry.witness is None:
        return CheckResult(check_id, "distance-witness-minimal", CheckStatus.SKIPPED, {"reason": "no witness"})
    k, F = entry.level, SC.field
    rng = np.random.default_rng(seed)
    if mode == "syst":
        image_map = SC.partial(k + 1) if k < SC.t else None
    else:
        image_map = SC.delta(k - 1) if k >= 1 else None
    if image_map is None:
        return CheckResult(check_id, "distance-witness-minimal", CheckStatus.SKIPPED, {"reason": "no boundaries"})
    sources = rng.integers(0, F.q, size=(image_map.ncols, samples), dtype=np.int64)
    shifted = image_map.apply(sources).T ^ entry.witness[None, :]
    lightest = int(block_weights(shifted, SC.block_sizes(k)).min())
    return check(check_id, "distance-witness-minimal", lightest >= entry.lower_bound,
                 lightest=lightest, reported=entry.lower_bound, samples=samples)


def dual_complex(SC: SheafComplex, samples: int = 20, seed: int = 0) -> SheafComplex:
    """The complex on the same geometry with the dual check matrices, re-verified"""
    dual = SC.dual()
    failed = [r.check_id for r in verify_chain(dual, samples=samples, seed=seed) if not r.passed]
    if failed:
        raise ConstructionError(f"dual complex failed checks: {failed}")
    return dual


def dual_checks(SC: SheafComplex, dual: Optional[SheafComplex] = None) -> List[CheckResult]:
    """Dual of the dual spans the original checks; dimensions swap m and n - m"""
    dual = dual or SC.dual()
    F, codes = SC.field, SC.codes
    back = dual.codes.dual()
    same_span = all(
        rank(F(a)) == rank(F(b)) == rank(F(np.vstack([a, b])))
        for a, b in zip(codes.h, back.h) if a.size or b.size
    )
    swapped = tuple(SC.geometry.n - mj for mj in codes.m) == dual.m
    X = SC.geometry
    dims_ok = all(dual.dim(i) == chain_dim_formula(X.N, X.n, dual.m, i) for i in range(SC.t + 1))
    return [
        check("dual.double_dual_span", "dual-of-dual-is-original", same_span),
        check("dual.dimensions", "dual-dimensions-swap", swapped and dims_ok, dual_m=list(dual.m)),
        check("dual.shared_geometry", "dual-shares-geometry", dual.geometry is SC.geometry),
    ]


# Analytic bounds

def kappa_table(report: TwoWayReport, side: str = "primal") -> Dict[Tuple[int, int], Ratio]:
    """(|S|, level) -> least measured lower bound over subsets of that size"""
    table: Dict[Tuple[int, int], Ratio] = {}
    for cell in report.cells:
        if cell["side"] != side:
            continue
        key = (len(cell["S"]), cell["k"])
        table[key] = min(table.get(key, INFINITY), cell["lower_bound"])
    return table


@dataclass
class CodistanceBound:
    """Constants and the resulting lower bound on the locally co-minimal distance"""
    level: int
    C1: float
    C2: float
    C1_tight: float
    C2_tight: float
    bound: float
    bound_tight: float
    d_coloc: Optional[Ratio] = None

    @property
    def holds(self) -> Optional[bool]:
        if self.d_coloc is None:
            return None
        best = max(self.bound, self.bound_tight)
        return best <= 0 or self.d_coloc >= best

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level, "C1": self.C1, "C2": self.C2,
            "C1_tight": self.C1_tight, "C2_tight": self.C2_tight,
            "bound": self.bound, "bound_tight": self.bound_tight,
            "vacuous": max(self.bound, self.bound_tight) <= 0,
            "d_coloc": self.d_coloc, "holds": self.holds,
        }


def codistance_bound(
    kappa: Dict[Tuple[int, int], Ratio],
    lam: float,
    r: float,
    t: int,
    n: int,
    k: int,
    a: Dict[Tuple[int, int], int],
    num_faces: int,
    d_coloc: Optional[Ratio] = None
) -> CodistanceBound:
    """(1 - lambda C1) / C2 * r |X(k)| with simple and a-coefficient constants"""
    if not 0 <= k < t:
        raise ValueError(f"level {k} outside [0, {t - 1}]")

    def kappa_product(low: int) -> float:
        return prod(float(kappa.get((t - i, k - i), 0)) for i in range(low, k + 1))

    def safe_div(numerator: float, denominator: float) -> float:
        return numerator / denominator if denominator > 0 else INFINITY

    C1 = safe_div(t * t * 2.0 ** (t * t + 3 * t), kappa_product(0))
    C2 = safe_div(t * t * 2.0 ** (t * t + 5 * t) * n ** t, kappa_product(0))
    C1_tight, C2_tight = 0.0, 0.0
    for ell in range(k + 1):
        walk = comb(k, ell) * comb(t - ell, k - ell) * (t - ell) * 2.0 ** (k - ell)
        walk *= prod(a.get((k, i), 2 ** t) for i in range(ell, k))
        term = safe_div(walk, kappa_product(ell))
        C1_tight += term
        C2_tight += comb(t, ell) * 2.0 ** (t - ell - 1) * n ** ell * term

    def bound(c1: float, c2: float) -> float:
        if c1 == INFINITY or c2 == INFINITY:
            return -INFINITY
        return (1 - lam * c1) / c2 * r * num_faces

    return CodistanceBound(level=k, C1=C1, C2=C2, C1_tight=C1_tight, C2_tight=C2_tight,
                           bound=bound(C1, C2), bound_tight=bound(C1_tight, C2_tight), d_coloc=d_coloc)


def cocycle_expansion_lower_bound(SC: SheafComplex, i: int, d_coloc_next: Ratio) -> Ratio:
    """min{1 / max_v |X_{>=v}(i)|, d_coloc(i+1) / |X(i)|}"""
    X = SC.geometry
    link = Fraction(1, comb(SC.t, i) * X.n ** i)
    if d_coloc_next == INFINITY:
        return link
    return min(link, Fraction(d_coloc_next) / X.num_faces(i))


def soundness_lower_bound(SC: SheafComplex, i: int, eps_cyc: Ratio, eps_cocyc: Ratio) -> Ratio:
    """(1/log2 q) min{(D_i/D_{i-1}) eps_cyc / M_i, (D_i/D_{i+1}) eps_cocyc / M_i}"""
    SC.geometry.check_level(i, 1, SC.t - 1)
    M = SC.max_coeff_dim(i)
    below = Fraction(SC.dim(i), SC.dim(i - 1) * M) * eps_cyc
    above = Fraction(SC.dim(i), SC.dim(i + 1) * M) * eps_cocyc
    return min(below, above) / SC.field.e


def greedy_cocycle_ratio(SC: SheafComplex, i: int, x, flip_budget: Optional[int] = None) -> Dict[str, Any]:
    """|delta x| / |correction| from vertex-local flips on delta x

    When the flips clear the syndrome, x + correction is a cocycle, so the ratio
    never exceeds |delta x| / dist(x, ker delta).
    """
    x = raw(x)
    syndrome = SC.delta(i).apply(x)
    syndrome_weight = int(block_weights(syndrome, SC.block_sizes(i + 1))[0])
    result = small_set_flip_decode(SC, i, syndrome, levels=(0,), flip_budget=flip_budget)
    correction_weight = int(block_weights(result.estimate, SC.block_sizes(i))[0])
    ratio = None
    if result.success and correction_weight:
        ratio = Fraction(syndrome_weight, correction_weight)
    return {
        "level": i,
        "syndrome_weight": syndrome_weight,
        "correction_weight": correction_weight,
        "stalled": not result.success,
        "ratio": ratio,
    }


def distance_relation_check(
    SC: SheafComplex,
    k: int,
    budget: Optional[int] = None,
    processor: Optional[BatchProcessor] = None,
    primal: Optional[DistanceEntry] = None,
    dual_entry: Optional[DistanceEntry] = None
) -> CheckResult:
    """mu_syst(k) >= (2nt)^{-t} mu_cosyst(t - k) of the dual complex"""
    t, n = SC.t, SC.geometry.n
    check_id = f"distance.dual_relation[{k}]"
    anchor = "systolic-vs-dual-cosystolic"
    primal = primal or _bounded(lambda: brute_mu(SC, k, "syst", budget, processor=processor))
    dual_entry = dual_entry or _bounded(lambda: brute_mu(SC.dual(), t - k, "cosyst", budget, processor=processor))
    factor = Fraction(1, (2 * n * t) ** t)
    required = INFINITY if dual_entry.lower_bound == INFINITY else factor * dual_entry.lower_bound
    data = {"mu_syst": primal.to_dict(), "mu_dual_cosyst": dual_entry.to_dict(), "factor": factor}
    if primal.exact and dual_entry.exact:
        return check(check_id, anchor, primal.lower_bound >= required, **data)
    certified_by = INFINITY if dual_entry.upper_bound == INFINITY else factor * dual_entry.upper_bound
    if primal.lower_bound >= certified_by:
        return check(check_id, anchor, True, **data)
    return CheckResult(check_id, anchor, CheckStatus.SKIPPED, {**data, "reason": "bounds inconclusive"})


def _bounded(measure: Callable[[], DistanceEntry]) -> DistanceEntry:
    try:
        return measure()
    except BudgetExceeded as e:
        if e.partial is None:
            raise
        return e.partial


def distance_report(
    SC: SheafComplex,
    k: int,
    budget: Optional[int] = None,
    processor: Optional[BatchProcessor] = None,
    quantities: Sequence[str] = ("mu_syst", "mu_cosyst", "d_coloc", "eps_cyc", "eps_cocyc")
) -> DistanceReport:
    """Every quantity that is defined at level k, bounded where the budget runs out"""
    t = SC.t
    SC.geometry.check_level(k, 0, t)
    report = DistanceReport(level=k)
    measures = {
        "mu_syst": lambda: brute_mu(SC, k, "syst", budget, processor=processor),
        "mu_cosyst": lambda: brute_mu(SC, k, "cosyst", budget, processor=processor),
        "d_coloc": lambda: d_coloc(SC, k, budget, processor=processor),
        "eps_cyc": lambda: expansion(SC, k, "cyc", budget),
        "eps_cocyc": lambda: expansion(SC, k, "cocyc", budget),
    }
    for name in quantities:
        try:
            report.entries[name] = _bounded(measures[name])
        except BudgetExceeded as e:
            report.entries[name] = DistanceEntry(name, k, 0, INFINITY, "budget", partial=True, note=str(e))
    logger.info(f"Distance report for level {k}: " + ", ".join(
        f"{name}={entry.lower_bound}..{entry.upper_bound}" for name, entry in sorted(report.entries.items())
    ))
    return report


def distance_checks(SC: SheafComplex, report: DistanceReport, samples: int = 1000, seed: int = 0,
                    budget: Optional[int] = None) -> List[CheckResult]:
    """Witness re-verification and the co-systolic versus co-local relation"""
    k = report.level
    results = []
    for name, mode in (("mu_syst", "syst"), ("mu_cosyst", "cosyst")):
        entry = report.entries.get(name)
        if entry is None:
            continue
        if entry.exact:
            results.append(check(f"distance.witness[{name},{k}]", "distance-witness-valid",
                                 verify_distance_witness(SC, entry, mode), value=entry.lower_bound))
            results.append(monotonicity_check(SC, entry, mode, samples, seed))
    for name, mode in (("eps_cyc", "cyc"), ("eps_cocyc", "cocyc")):
        entry = report.entries.get(name)
        if entry is not None and entry.method not in ("vacuous", "budget"):
            results.append(check(f"distance.witness[{name},{k}]", "expansion-witness-valid",
                                 verify_expansion_witness(SC, entry, mode, budget), value=entry.upper_bound))

    cosyst, coloc = report.entries.get("mu_cosyst"), report.entries.get("d_coloc")
    check_id = f"distance.cosystolic_vs_colocal[{k}]"
    if cosyst is not None and coloc is not None and cosyst.exact and coloc.exact:
        results.append(check(check_id, "cosystolic-at-least-colocal",
                             cosyst.lower_bound >= coloc.lower_bound,
                             mu_cosyst=cosyst.lower_bound, d_coloc=coloc.lower_bound))
    else:
        results.append(CheckResult(check_id, "cosystolic-at-least-colocal", CheckStatus.SKIPPED,
                                   {"reason": "not both exact"}))
    return results
