"""
Random Walks on Faces
Averaging operators between levels, the neighborhoods of a face, the walks
W^{(k,l)} and Op^{(k,l)} on X(k), the a_{k,l} coefficients, and the
quadratic-form expansion checks.
"""

import functools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, sqrt
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .builders import ExpansionReport, _dense_second_eigenvalue, cayley_adjacency
from .core.config import get_config
from .core.logging import PerformanceLogger, get_logger
from .errors import LevelOutOfRange
from .geometry import ComplexGeometry, Face, PermutationSet, bit_label
from .reports import CheckResult, CheckStatus, check

logger = get_logger(__name__)
performance_logger = PerformanceLogger(logger)

WILSON_Z = 2.5758293035489004  # two-sided 99%
MAX_WALK_SAMPLES = 400_000
FLOAT_TOLERANCE = 1e-12


@functools.lru_cache(maxsize=1 << 16)
def vertex_set(X: ComplexGeometry, f: Face) -> FrozenSet[Face]:
    return frozenset(X.vertices(f))


def down_up_ops(X: ComplexGeometry, level: int) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    """(D, U) between X(level) and X(level - 1)

    D maps functions on X(level) to X(level - 1) by averaging over covering
    faces; U maps the other way, averaging over covered faces.
    """
    X.check_level(level, 1, X.t)
    rows, cols, _ = X.incidence(level)
    upper, lower = X.num_faces(level), X.num_faces(level - 1)
    up_count = (X.t - level + 1) * X.n
    ones = np.ones(rows.size)
    D = sp.coo_matrix((ones / up_count, (cols, rows)), shape=(lower, upper)).tocsr()
    U = sp.coo_matrix((ones / (2 * level), (rows, cols)), shape=(upper, lower)).tocsr()
    return D, U


def adjointness_check(X: ComplexGeometry, level: int, samples: int = 100, seed: int = 0) -> CheckResult:
    """E phi'(f) D phi(f) over X(level-1) equals E U phi'(f') phi(f') over X(level)"""
    D, U = down_up_ops(X, level)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        phi = rng.standard_normal(D.shape[1])
        phi_low = rng.standard_normal(D.shape[0])
        left = float(np.mean(phi_low * (D @ phi)))
        right = float(np.mean((U @ phi_low) * phi))
        worst = max(worst, abs(left - right))
    markov = np.allclose(np.asarray(D.sum(axis=1)).ravel(), 1.0) and np.allclose(np.asarray(U.sum(axis=1)).ravel(), 1.0)
    return check(
        f"walks.down_up_adjoint[{level}]", "averaging-operators-adjoint",
        worst < FLOAT_TOLERANCE * max(1, D.shape[1]) and markov,
        max_deviation=worst, samples=samples
    )


@dataclass
class NeighborhoodSets:
    """X_{>=v}(k), Nb_v(k) and Op_v(k) inside the faces sharing a (k+1)-coface with v"""
    v: Face
    k: int
    above: List[Face]
    neighbors: List[Face]
    opposite: List[Face]
    closure: List[Face]

    @property
    def partition_ok(self) -> bool:
        parts = [set(self.above), set(self.neighbors), set(self.opposite)]
        disjoint = sum(len(p) for p in parts) == len(set().union(*parts))
        return disjoint and set().union(*parts) == set(self.closure)


def neighborhoods(X: ComplexGeometry, v: Face, k: int) -> NeighborhoodSets:
    """Classify the faces of (d o u) X_{>=v}(k) by how they meet v"""
    if not v.dim <= k < X.t:
        raise LevelOutOfRange(k, v.dim, X.t - 1)
    closure = []
    seen = set()
    for top in X.link_up(v, k + 1):
        for f, _ in X.covers_down(top):
            if f not in seen:
                seen.add(f)
                closure.append(f)

    corners = vertex_set(X, v)
    above, neighbors, opposite = [], [], []
    for f in closure:
        if X.leq(v, f):
            above.append(f)
        elif corners & vertex_set(X, f):
            neighbors.append(f)
        else:
            opposite.append(f)
    return NeighborhoodSets(v=v, k=k, above=above, neighbors=neighbors, opposite=opposite, closure=closure)


def partition_check(X: ComplexGeometry, k: int, max_faces: Optional[int] = None) -> CheckResult:
    """Every (v, k) neighborhood triple partitions its closure"""
    ok, tested = True, 0
    for level in range(k + 1):
        faces = X.faces(level)
        for v in faces[:max_faces] if max_faces else faces:
            ok &= neighborhoods(X, v, k).partition_ok
            tested += 1
    return check(f"walks.neighborhood_partition[{k}]", "neighborhood-partition", ok, faces=tested)


def _nb_sets(X: ComplexGeometry, k: int, level: int) -> Dict[Face, FrozenSet[Face]]:
    return {v: frozenset(neighborhoods(X, v, k).neighbors) for v in X.faces(level)}


def a_coeff(X: ComplexGeometry, k: int, ell: int) -> int:
    """a_{k,l}: max over v_l < v_k, v_l < v'_k of the faces v_l < w <= v_k with v'_k in Nb_w(k)"""
    if not 0 <= ell < k < X.t:
        raise LevelOutOfRange(k, ell + 1, X.t - 1)
    nb = _nb_sets(X, k, ell + 1)
    best = 0
    for low in X.faces(ell):
        ups = X.link_up(low, k)
        for high in ups:
            middles = [
                X.extend_face(low, {j: high.labels[j]})
                for j in high.type if low.labels[j] < 0
            ]
            for other in ups:
                if other == high:
                    continue
                best = max(best, sum(1 for w in middles if other in nb[w]))
    return best


def a_table(X: ComplexGeometry) -> Dict[Tuple[int, int], int]:
    return {(k, ell): a_coeff(X, k, ell) for k in range(1, X.t) for ell in range(k)}


def a_coeff_checks(X: ComplexGeometry, table: Optional[Dict[Tuple[int, int], int]] = None) -> List[CheckResult]:
    table = a_table(X) if table is None else table
    bound = 2 ** X.t
    results = [check(
        "walks.a_coeff_bound", "a-coefficient-bound",
        all(value <= bound for value in table.values()),
        table={f"{k},{ell}": value for (k, ell), value in sorted(table.items())}, bound=bound
    )]
    top = [value for (k, _), value in table.items() if k == X.t - 1]
    if top:
        results.append(check("walks.a_coeff_top", "a-coefficient-top-level", all(v == 1 for v in top), values=top))
    return results


def nb_inclusion_check(X: ComplexGeometry, k: int, ell: int, a: Optional[int] = None, max_faces: Optional[int] = None) -> CheckResult:
    """Multiset union of Nb_w(k) over w <= v_k is covered a_{k,l} times by the links X_{>=v_l}(k)"""
    a = a_coeff(X, k, ell) if a is None else a
    nb = _nb_sets(X, k, ell + 1)
    ok, tested, failure = True, 0, None
    faces = X.faces(k)
    for top in faces[:max_faces] if max_faces else faces:
        left = Counter()
        for w in X.link_down(top, ell + 1):
            left.update(nb[w])
        right = Counter()
        for low in X.link_down(top, ell):
            right.update(X.link_up(low, k))
        bad = [f for f, count in left.items() if count > a * right.get(f, 0)]
        if bad and failure is None:
            failure = (str(top), str(bad[0]))
        ok &= not bad
        tested += 1
    return check(f"walks.nb_inclusion[{k},{ell}]", "neighborhood-multiset-inclusion", ok, a=a, faces=tested, failure=failure)


def opposite_step(X: ComplexGeometry, v: Face, i: int, a: int) -> Face:
    """Move v by generator a of direction i (outside its type) and flip bit i"""
    labels = list(v.labels)
    labels[i] = bit_label(1 - v.bit(i))
    return Face(X.act(i, a, v.g), tuple(labels))


def walk_normalization(t: int, n: int, k: int, ell: int) -> int:
    return comb(k, ell) * comb(t - ell, k - ell) * (t - ell) * 2 ** (k - ell) * n ** (k + 1 - ell)


@dataclass
class WalkOperator:
    """W^{(k,l)} or Op^{(k,l)}: explicit sparse matrices on small levels, a sampler otherwise"""
    X: ComplexGeometry
    kind: str
    k: int
    ell: int
    adjacency: Optional[sp.csr_matrix] = None
    markov: Optional[sp.csr_matrix] = None
    normalization: Optional[int] = None
    _op_cache: Dict[Face, List[Face]] = field(default_factory=dict, repr=False)

    @property
    def explicit(self) -> bool:
        return self.markov is not None

    @property
    def size(self) -> int:
        return self.X.num_faces(self.k)

    def step(self, f: Face, rng: np.random.Generator) -> Face:
        """One simulated step from f"""
        X = self.X
        lows = X.link_down(f, self.ell)
        v = lows[int(rng.integers(len(lows)))]
        if self.kind == "Op":
            opposite = self._op_cache.get(v)
            if opposite is None:
                opposite = neighborhoods(X, v, self.k).opposite
                self._op_cache[v] = opposite
            return opposite[int(rng.integers(len(opposite)))]
        outside = [j for j in range(X.t) if v.labels[j] < 0]
        i = outside[int(rng.integers(len(outside)))]
        moved = opposite_step(X, v, i, int(rng.integers(X.n)))
        ups = X.link_up(moved, self.k)
        return ups[int(rng.integers(len(ups)))]

    def exact_form(self, index: np.ndarray) -> Fraction:
        """<1_A, W 1_A> exactly (explicit W only)"""
        if self.kind != "W":
            raise ValueError("exact forms are defined for W walks")
        return Fraction(self.adjacency_form(index), self.normalization)

    def adjacency_form(self, index: np.ndarray) -> int:
        return int(self.adjacency[index][:, index].sum())

    def stats(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind, "k": self.k, "ell": self.ell, "size": self.size, "explicit": self.explicit}
        if self.explicit:
            row_sums = np.asarray(self.markov.sum(axis=1)).ravel()
            data["max_row_sum_deviation"] = float(np.abs(row_sums - 1).max()) if row_sums.size else 0.0
            data["symmetric"] = (self.adjacency != self.adjacency.T).nnz == 0
            data["normalization"] = self.normalization
        return data


def _lower_incidence(X: ComplexGeometry, k: int, ell: int) -> sp.csr_matrix:
    """0/1 matrix (X(k) x X(l)) of v <= f"""
    rows, cols = [], []
    for i, f in enumerate(X.faces(k)):
        for v in X.link_down(f, ell):
            rows.append(i)
            cols.append(X.index(v))
    data = np.ones(len(rows), dtype=np.int64)
    return sp.coo_matrix((data, (rows, cols)), shape=(X.num_faces(k), X.num_faces(ell))).tocsr()


def _middle_step(X: ComplexGeometry, ell: int) -> sp.csr_matrix:
    rows, cols = [], []
    for idx, v in enumerate(X.faces(ell)):
        for i in range(X.t):
            if v.labels[i] >= 0:
                continue
            for a in range(X.n):
                rows.append(idx)
                cols.append(X.index(opposite_step(X, v, i, a)))
    size = X.num_faces(ell)
    data = np.ones(len(rows), dtype=np.int64)
    return sp.coo_matrix((data, (rows, cols)), shape=(size, size)).tocsr()


def _check_walk_levels(X: ComplexGeometry, k: int, ell: int) -> None:
    if not 0 <= k <= X.t - 1:
        raise LevelOutOfRange(k, 0, X.t - 1)
    if not 0 <= ell <= k:
        raise LevelOutOfRange(ell, 0, k)


def walk_W(X: ComplexGeometry, k: int, ell: int, limit: Optional[int] = None) -> WalkOperator:
    """Down to a random l-face, across one direction outside its type, up to a random k-face"""
    _check_walk_levels(X, k, ell)
    limit = limit or get_config().budgets.explicit_walk
    operator = WalkOperator(X=X, kind="W", k=k, ell=ell, normalization=walk_normalization(X.t, X.n, k, ell))
    if X.num_faces(k) > limit:
        logger.debug(f"Walk W({k},{ell}) on {X.num_faces(k)} faces runs as a sampler")
        return operator
    performance_logger.start_timer("walk_W")
    L = _lower_incidence(X, k, ell)
    operator.adjacency = (L @ _middle_step(X, ell) @ L.T).tocsr()
    operator.markov = operator.adjacency.astype(np.float64) / operator.normalization
    performance_logger.end_timer("walk_W", k=k, ell=ell, faces=X.num_faces(k))
    return operator


def walk_Op(X: ComplexGeometry, k: int, ell: int, limit: Optional[int] = None) -> WalkOperator:
    """Down to a random l-face v, then to a random face of Op_v(k)"""
    _check_walk_levels(X, k, ell)
    limit = limit or get_config().budgets.explicit_walk
    operator = WalkOperator(X=X, kind="Op", k=k, ell=ell)
    if X.num_faces(k) > limit:
        return operator
    performance_logger.start_timer("walk_Op")
    size = X.num_faces(k)
    down = comb(k, ell) * 2 ** (k - ell)
    rows, cols, weights = [], [], []
    opposite = {v: neighborhoods(X, v, k).opposite for v in X.faces(ell)}
    for i, f in enumerate(X.faces(k)):
        for v in X.link_down(f, ell):
            targets = opposite[v]
            for g in targets:
                rows.append(i)
                cols.append(X.index(g))
                weights.append(1.0 / (down * len(targets)))
    operator.adjacency = sp.coo_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(size, size)).tocsr()
    operator.markov = sp.coo_matrix((np.asarray(weights), (rows, cols)), shape=(size, size)).tocsr()
    performance_logger.end_timer("walk_Op", k=k, ell=ell, faces=size)
    return operator


def walk_checks(W: WalkOperator, Op: Optional[WalkOperator] = None, sets: Sequence[np.ndarray] = ()) -> List[CheckResult]:
    """Markov, symmetry, normalization and the Op <= W comparison on given face sets"""
    label = f"{W.k},{W.ell}"
    if not W.explicit:
        return [CheckResult(f"walks.W[{label}]", "walk-markov-symmetric", CheckStatus.SKIPPED, {"reason": "sampler mode"})]
    row_sums = np.asarray(W.adjacency.sum(axis=1)).ravel()
    results = [
        check(f"walks.W_markov[{label}]", "walk-markov", bool(np.all(row_sums == W.normalization)),
              normalization=W.normalization),
        check(f"walks.W_symmetric[{label}]", "walk-symmetric", (W.adjacency != W.adjacency.T).nnz == 0),
    ]
    if Op is not None and Op.explicit:
        op_rows = np.asarray(Op.markov.sum(axis=1)).ravel()
        results.append(check(f"walks.Op_markov[{label}]", "opposite-walk-markov",
                             bool(np.allclose(op_rows, 1.0, atol=1e-9))))
        ok = all(Op.adjacency_form(A) <= W.adjacency_form(A) for A in sets)
        results.append(check(f"walks.Op_below_W[{label}]", "opposite-walk-dominated", ok, sets=len(sets)))
    return results


def expansion_bound(X: ComplexGeometry, k: int, ell: int, size: int, lam: float, r: float) -> float:
    """lambda |A| + C(t,l) 2^{t-l-1} n^l |A|^2 / (r |X(k)|)"""
    t, n = X.t, X.n
    return lam * size + comb(t, ell) * 2 ** (t - ell - 1) * n ** ell * size ** 2 / (r * X.num_faces(k))


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> Tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def quad_form_check(
    X: ComplexGeometry,
    k: int,
    ell: int,
    A: Sequence[int],
    lam: float,
    r: float,
    walk: Optional[WalkOperator] = None,
    seed: int = 0,
    label: str = "set"
) -> CheckResult:
    """<1_A, W 1_A> against the small-set expansion bound"""
    walk = walk or walk_W(X, k, ell)
    index = np.asarray(sorted(set(int(x) for x in A)), dtype=np.int64)
    bound = expansion_bound(X, k, ell, index.size, lam, r)
    check_id = f"walks.quad_form[{k},{ell}][{label}]"
    if index.size == 0:
        return check(check_id, "walk-small-set-expansion", True, size=0, value=0, bound=0.0)

    if walk.explicit:
        value = walk.exact_form(index)
        return check(check_id, "walk-small-set-expansion", float(value) <= bound + 1e-9,
                     size=int(index.size), value=value, bound=bound, method="exact")

    # Monte Carlo: <1_A, W 1_A> = |A| P(step lands in A | start uniform in A)
    target = max(bound * 0.05, 1e-9)
    needed = int(np.ceil((WILSON_Z * index.size / target) ** 2))
    trials = max(1000, min(MAX_WALK_SAMPLES, needed))
    rng = np.random.default_rng(seed)
    faces = X.faces(k)
    members = set(index.tolist())
    starts = rng.integers(index.size, size=trials)
    hits = sum(1 for s in starts if X.index(walk.step(faces[int(index[s])], rng)) in members)
    low, high = wilson_interval(hits, trials)
    return check(
        check_id, "walk-small-set-expansion", low * index.size <= bound,
        size=int(index.size), value=hits / trials * index.size,
        interval=[low * index.size, high * index.size], bound=bound, method="sampled", samples=trials
    )


def double_cover_adjacency(N: int, A: PermutationSet) -> sp.csr_matrix:
    """Cay(G, A) double cover on (g, b): (g, b) ~ (g a, 1 - b)"""
    base = cayley_adjacency(N, A)
    zero = sp.csr_matrix((N, N), dtype=base.dtype)
    return sp.bmat([[zero, base], [base, zero]]).tocsr()


def mixing_check(
    N: int,
    A: PermutationSet,
    report: ExpansionReport,
    samples: int = 50,
    seed: int = 0
) -> CheckResult:
    """<x, P x> <= lam |x|_2^2 + |x|_1^2 / |C| on each double-cover component"""
    P = double_cover_adjacency(N, A).astype(np.float64) / A.n
    graph = nx.from_scipy_sparse_array(double_cover_adjacency(N, A))
    rng = np.random.default_rng(seed)
    lam = report.lambda_max
    worst = -np.inf
    for nodes in (sorted(c) for c in nx.connected_components(graph)):
        block = P[nodes][:, nodes]
        for s in range(samples):
            if s % 2:
                x = rng.standard_normal(len(nodes))
            else:
                x = (rng.random(len(nodes)) < rng.uniform(0.01, 0.5)).astype(np.float64)
            lhs = float(x @ (block @ x))
            rhs = lam * float(x @ x) + float(np.abs(x).sum()) ** 2 / len(nodes)
            worst = max(worst, lhs - rhs)
    return check(f"walks.mixing[{A.direction}]", "expander-mixing", worst <= 1e-9,
                 worst_slack=float(worst), lam=lam)


def walk_spectrum(walk: WalkOperator, dense_limit: Optional[int] = None) -> float:
    """Second eigenvalue of an explicit walk, one trivial eigenvalue removed per component
    (two when the component is bipartite)"""
    dense_limit = dense_limit or get_config().budgets.dense_eigen
    graph = nx.from_scipy_sparse_array(walk.adjacency)
    lam = 0.0
    for nodes in (sorted(c) for c in nx.connected_components(graph)):
        if len(nodes) > dense_limit:
            raise ValueError(f"component of size {len(nodes)} exceeds the dense eigenvalue limit")
        block = walk.markov[nodes][:, nodes].toarray()
        lam = max(lam, _dense_second_eigenvalue(block, nx.is_bipartite(graph.subgraph(nodes))))
    return lam


def adversarial_sets(X: ComplexGeometry, k: int, count: int, seed: int = 0) -> List[Tuple[str, np.ndarray]]:
    """Random sets of 1%..50% density plus upper links, type classes and their unions"""
    rng = np.random.default_rng(seed)
    size = X.num_faces(k)
    out: List[Tuple[str, np.ndarray]] = []
    for i in range(count):
        density = rng.uniform(0.01, 0.5)
        out.append((f"random{i}", np.flatnonzero(rng.random(size) < density)))

    table = X.table(k)
    for S, (start, stop) in sorted(table.type_ranges.items()):
        out.append((f"type{''.join(map(str, S))}", np.arange(start, stop, dtype=np.int64)))

    links = []
    for level in range(k + 1):
        faces = X.faces(level)
        for _ in range(2):
            v = faces[int(rng.integers(len(faces)))]
            links.append(np.asarray([X.index(f) for f in X.link_up(v, k)], dtype=np.int64))
    for i, link in enumerate(links):
        out.append((f"link{i}", link))
    if len(links) >= 2:
        out.append(("link_union", np.union1d(links[0], links[-1])))
    return out
