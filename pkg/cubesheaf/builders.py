"""
Instance Builders
Sets of commuting permutations for the complex: Cayley translations on
(Z/2)^m and Z_N, left/right multiplication on symmetric groups, the t-fold
abelian-lift product, and spectral expansion estimates of the resulting
Cayley graphs.
"""

import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .core.config import get_config
from .core.logging import PerformanceLogger, get_logger
from .errors import ConstructionError, CubeSheafError
from .geometry import NotInverseClosed, PermutationSet

logger = get_logger(__name__)
performance_logger = PerformanceLogger(logger)

POWER_TOLERANCE = 1e-9
POWER_MAX_ITERATIONS = 100_000


class DuplicateGenerator(ConstructionError):
    def __init__(self, direction: int, generator: Any):
        super().__init__(f"generator {generator} repeated in direction {direction}")
        self.direction = direction
        self.generator = generator


class NotRegular(ConstructionError):
    """Base graph is not regular or its edge numbering does not define permutations"""
    pass


class LiftAssignmentMismatch(ConstructionError):
    """Lift labels do not invert along reversed edges"""

    def __init__(self, vertex: int, edge: int, label: int, reverse_label: int):
        super().__init__(
            f"edge {edge} at vertex {vertex} carries {label}, but its reverse carries "
            f"{reverse_label} instead of the inverse"
        )
        self.vertex, self.edge = vertex, edge
        self.label, self.reverse_label = label, reverse_label


class ConvergenceFailure(CubeSheafError):
    """Power iteration did not reach the residual tolerance"""
    pass


@dataclass
class GroupInstance:
    """A set G = {0..N-1} with t permutation sets acting on it"""
    N: int
    permsets: List[PermutationSet]
    notes: List[str] = field(default_factory=list)

    @property
    def t(self) -> int:
        return len(self.permsets)


def _check_distinct(direction: int, gens: Sequence[Any]) -> None:
    seen = set()
    for g in gens:
        key = tuple(g) if isinstance(g, (list, tuple)) else g
        if key in seen:
            raise DuplicateGenerator(direction, g)
        seen.add(key)


def group_z2e(m: int, gens_per_direction: Sequence[Sequence[int]]) -> GroupInstance:
    """XOR translations on (Z/2)^m; every generator is an involution"""
    N = 1 << m
    elements = np.arange(N, dtype=np.int64)
    permsets, notes = [], []
    for j, gens in enumerate(gens_per_direction):
        _check_distinct(j, gens)
        for a, s in enumerate(gens):
            if not 0 <= int(s) < N:
                raise ConstructionError(f"generator {s} of direction {j} is outside (Z/2)^{m}")
            if int(s) == 0:
                notes.append(f"direction {j} generator {a} is the zero vector (self-loops)")
        perms = elements[None, :] ^ np.asarray(gens, dtype=np.int64)[:, None]
        permsets.append(PermutationSet.from_arrays(perms, j))
    for note in notes:
        logger.warning(note)
    return GroupInstance(N=N, permsets=permsets, notes=notes)


def group_cyclic(order: int, gens_per_direction: Sequence[Sequence[int]]) -> GroupInstance:
    """Translations g -> g + s on Z_order"""
    elements = np.arange(order, dtype=np.int64)
    permsets, notes = [], []
    for j, gens in enumerate(gens_per_direction):
        gens = [int(s) % order for s in gens]
        _check_distinct(j, gens)
        for a, s in enumerate(gens):
            if (-s) % order not in gens:
                raise NotInverseClosed(j, a)
            if s == 0:
                notes.append(f"direction {j} generator {a} is the identity (self-loops)")
        perms = (elements[None, :] + np.asarray(gens, dtype=np.int64)[:, None]) % order
        permsets.append(PermutationSet.from_arrays(perms, j))
    return GroupInstance(N=order, permsets=permsets, notes=notes)


def multiplication_permutations(k: int, gens: Sequence[Sequence[int]], side: str) -> np.ndarray:
    """Permutations of S_k (elements in lexicographic order) by left or right multiplication"""
    elements = np.array(list(itertools.permutations(range(k))), dtype=np.int64)
    weights = k ** np.arange(k - 1, -1, -1, dtype=np.int64)
    codes = elements @ weights
    out = []
    for s in gens:
        s = np.asarray(s, dtype=np.int64)
        if sorted(s.tolist()) != list(range(k)):
            raise ConstructionError(f"{s.tolist()} is not a permutation of 0..{k - 1}")
        if side == "left":
            images = s[elements]
        elif side == "right":
            images = elements[:, s]
        else:
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        out.append(np.searchsorted(codes, images @ weights))
    return np.asarray(out, dtype=np.int64)


def group_left_right(k: int, left_gens: Sequence[Sequence[int]], right_gens: Sequence[Sequence[int]]) -> GroupInstance:
    """t = 2 on S_k: direction 0 multiplies on the left, direction 1 on the right"""
    _check_distinct(0, left_gens)
    _check_distinct(1, right_gens)
    N = int(np.prod(np.arange(1, k + 1)))
    return GroupInstance(N=N, permsets=[
        PermutationSet.from_arrays(multiplication_permutations(k, left_gens, "left"), 0),
        PermutationSet.from_arrays(multiplication_permutations(k, right_gens, "right"), 1),
    ])


def group_permutations(order: int, perms_per_direction: Sequence[Sequence[Sequence[int]]]) -> GroupInstance:
    """Explicit index arrays per direction; commutation is left to build_complex"""
    permsets = []
    for j, perms in enumerate(perms_per_direction):
        permset = PermutationSet.from_arrays(perms, j)
        if permset.N != order:
            raise ConstructionError(f"direction {j} permutes {permset.N} points, group order is {order}")
        _check_distinct(j, [tuple(row) for row in permset.perms.tolist()])
        permsets.append(permset)
    return GroupInstance(N=order, permsets=permsets)


@dataclass
class BaseGraphSpec:
    """n-regular base graph with numbered edges and lift labels in H

    ``neighbors[v, i]`` is the far end of edge i at v and ``labels[v, i]`` its
    element of H = Z_{f_1} x ... x Z_{f_r}, stored as a mixed-radix index.
    """
    neighbors: np.ndarray
    labels: np.ndarray
    lift_factors: Tuple[int, ...] = (1,)

    @property
    def num_vertices(self) -> int:
        return self.neighbors.shape[0]

    @property
    def degree(self) -> int:
        return self.neighbors.shape[1]

    @property
    def lift_order(self) -> int:
        return int(np.prod(self.lift_factors))

    def h_add(self, h: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Group operation of H on mixed-radix indices"""
        factors = self.lift_factors
        a = np.unravel_index(h, factors)
        b = np.unravel_index(s, factors)
        return np.ravel_multi_index(tuple((x + y) % f for x, y, f in zip(a, b, factors)), factors)

    def h_neg(self, s: np.ndarray) -> np.ndarray:
        factors = self.lift_factors
        a = np.unravel_index(s, factors)
        return np.ravel_multi_index(tuple((-x) % f for x, f in zip(a, factors)), factors)

    def inverse_edges(self) -> np.ndarray:
        """inverse[i] = i* with v -> nbr(v, i) -> nbr(., i*) the identity for all v"""
        n0, d = self.neighbors.shape
        vertices = np.arange(n0)
        if self.neighbors.min() < 0 or self.neighbors.max() >= n0:
            raise NotRegular("neighbor index outside the vertex set")
        inverse = np.empty(d, dtype=np.int64)
        for i in range(d):
            forward = self.neighbors[:, i]
            if not np.array_equal(np.sort(forward), vertices):
                raise NotRegular(f"edge number {i} does not define a permutation of the base vertices")
            matches = [i2 for i2 in range(d) if np.array_equal(self.neighbors[forward, i2], vertices)]
            if not matches:
                raise NotRegular(f"edge number {i} has no reverse numbering")
            inverse[i] = i if i in matches else matches[0]
        return inverse

    def validate(self) -> np.ndarray:
        inverse = self.inverse_edges()
        graph = nx.MultiGraph()
        graph.add_nodes_from(range(self.num_vertices))
        for v in range(self.num_vertices):
            for i in range(self.degree):
                if v <= self.neighbors[v, i]:
                    graph.add_edge(v, int(self.neighbors[v, i]))
        if not nx.is_connected(graph):
            raise ConstructionError("base graph is disconnected")

        for i in range(self.degree):
            w = self.neighbors[:, i]
            back = self.labels[w, inverse[i]]
            expected = self.h_neg(self.labels[:, i])
            bad = np.flatnonzero(back != expected)
            if bad.size:
                v = int(bad[0])
                raise LiftAssignmentMismatch(v, i, int(self.labels[v, i]), int(back[v]))
        return inverse


def cayley_base_graph(
    order: int,
    offsets: Sequence[int],
    labels: Optional[Sequence[int]] = None,
    lift_factors: Sequence[int] = (1,)
) -> BaseGraphSpec:
    """Circulant base graph Cay(Z_order, offsets); edge i at v goes to v + offsets[i]

    ``labels`` gives one H element per edge number (constant across vertices)
    or a full (order, degree) table.
    """
    offsets = np.asarray(offsets, dtype=np.int64) % order
    vertices = np.arange(order, dtype=np.int64)
    neighbors = (vertices[:, None] + offsets[None, :]) % order
    if labels is None:
        table = np.zeros_like(neighbors)
    else:
        table = np.asarray(labels, dtype=np.int64)
        if table.ndim == 1:
            table = np.broadcast_to(table[None, :], neighbors.shape).copy()
    if table.shape != neighbors.shape:
        raise NotRegular(f"label table shape {table.shape} does not match {neighbors.shape}")
    factors = tuple(int(f) for f in lift_factors)
    if table.min() < 0 or table.max() >= int(np.prod(factors)):
        raise ConstructionError("lift label outside H")
    return BaseGraphSpec(neighbors=neighbors, labels=table, lift_factors=factors)


def abelian_lift_product(base: BaseGraphSpec, t: int) -> GroupInstance:
    """t-fold product of the H-lift: G = H x V_0^t

    Generator i of direction j moves (h, ..., v_j, ...) to
    (s(v_j, i) + h, ..., nbr(v_j, i), ...); the double-cover bit of the lift is
    the face coordinate b_j of the complex.
    """
    base.validate()
    dims = (base.lift_order,) + (base.num_vertices,) * t
    N = int(np.prod(dims))
    coords = np.unravel_index(np.arange(N, dtype=np.int64), dims)

    permsets = []
    for j in range(t):
        vj = coords[1 + j]
        perms = []
        for i in range(base.degree):
            moved = list(coords)
            moved[0] = base.h_add(coords[0], base.labels[vj, i])
            moved[1 + j] = base.neighbors[vj, i]
            perms.append(np.ravel_multi_index(tuple(moved), dims))
        permsets.append(PermutationSet.from_arrays(np.asarray(perms), j))

    logger.info("Built abelian lift product", extra={"N": N, "t": t, "lift_order": base.lift_order})
    return GroupInstance(N=N, permsets=permsets)


def random_z2e_generators(m: int, t: int, n: int, seed: int) -> List[List[int]]:
    """Distinct nonzero elements of (Z/2)^m per direction, reproducible from the seed"""
    if n > (1 << m) - 1:
        raise ConstructionError(f"cannot pick {n} distinct nonzero elements of (Z/2)^{m}")
    rng = np.random.default_rng(seed)
    pool = np.arange(1, 1 << m, dtype=np.int64)
    return [sorted(int(x) for x in rng.choice(pool, size=n, replace=False)) for _ in range(t)]


@dataclass
class ComponentSpectrum:
    """Spectral data of one connected component"""
    size: int
    second_eigenvalue: float
    bipartite: bool
    method: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "size": self.size,
            "lambda": self.second_eigenvalue,
            "bipartite": self.bipartite,
            "method": self.method,
        }


@dataclass
class ExpansionReport:
    """lambda-expansion up to size r|G| of one Cayley graph"""
    components: List[ComponentSpectrum]
    lambda_max: float
    r: float
    cover_r: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "components": [c.to_dict() for c in self.components],
            "lambda_max": self.lambda_max,
            "r": self.r,
            "cover_r": self.cover_r,
        }


def cayley_adjacency(N: int, A: PermutationSet) -> sp.csr_matrix:
    """Integer edge multiplicities of Cay(G, A)"""
    n = A.n
    rows = np.tile(np.arange(N, dtype=np.int64), n)
    cols = A.perms.reshape(-1)
    return sp.coo_matrix((np.ones(rows.size, dtype=np.int64), (rows, cols)), shape=(N, N)).tocsr()


def _dense_second_eigenvalue(M: np.ndarray, bipartite: bool) -> float:
    values = scipy.linalg.eigh(M, eigvals_only=True)
    rest = list(values[:-1])
    if bipartite and rest:
        rest = rest[1:]
    return float(max((abs(v) for v in rest), default=0.0))


def _power_second_eigenvalue(M: sp.csr_matrix, deflate: List[np.ndarray], seed: int = 0) -> float:
    """Largest |eigenvalue| of M off the deflated eigenvectors, via M^2"""
    rng = np.random.default_rng(seed)
    basis = [v / np.linalg.norm(v) for v in deflate]

    def project(x: np.ndarray) -> np.ndarray:
        for v in basis:
            x = x - (v @ x) * v
        return x

    x = project(rng.standard_normal(M.shape[0]))
    norm = np.linalg.norm(x)
    if norm == 0:
        return 0.0
    x /= norm
    for _ in range(POWER_MAX_ITERATIONS):
        y = project(M @ (M @ x))
        rho = float(x @ y)
        residual = float(np.linalg.norm(y - rho * x))
        if residual < POWER_TOLERANCE:
            return float(np.sqrt(max(rho, 0.0)))
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        x = y / norm
    raise ConvergenceFailure(f"power iteration residual {residual:.3e} after {POWER_MAX_ITERATIONS} iterations")


def estimate_expansion(N: int, A: PermutationSet, dense_limit: Optional[int] = None) -> ExpansionReport:
    """Per-component second eigenvalue of the normalized adjacency of Cay(G, A)"""
    dense_limit = dense_limit or get_config().budgets.dense_eigen
    performance_logger.start_timer("estimate_expansion")

    counts = cayley_adjacency(N, A)
    if (counts - counts.T).count_nonzero() != 0:
        raise ConstructionError("Cayley graph is not symmetric (generator set not inverse-closed)")
    if not np.array_equal(np.asarray(counts.sum(axis=1)).ravel(), np.full(N, A.n)):
        raise ConstructionError("Cayley graph is not regular")
    M = counts.astype(np.float64) / A.n

    graph = nx.from_scipy_sparse_array(counts)
    components = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])

    spectra = []
    for nodes in components:
        sub = graph.subgraph(nodes)
        bipartite = nx.is_bipartite(sub)
        block = M[nodes][:, nodes]
        if len(nodes) <= dense_limit:
            lam = _dense_second_eigenvalue(block.toarray(), bipartite)
            method = "dense"
        else:
            deflate = [np.ones(len(nodes))]
            if bipartite:
                colors = nx.bipartite.color(sub)
                deflate.append(np.array([1.0 if colors[v] == 0 else -1.0 for v in nodes]))
            lam = _power_second_eigenvalue(block.tocsr(), deflate)
            method = "power"
        spectra.append(ComponentSpectrum(size=len(nodes), second_eigenvalue=lam, bipartite=bipartite, method=method))

    report = ExpansionReport(
        components=spectra,
        lambda_max=max(c.second_eigenvalue for c in spectra),
        r=min(c.size for c in spectra) / N,
        # double cover of a component splits in two exactly when it is bipartite
        cover_r=min((c.size if c.bipartite else 2 * c.size) for c in spectra) / (2 * N),
    )
    performance_logger.end_timer("estimate_expansion", components=len(spectra), lambda_max=report.lambda_max)
    return report
