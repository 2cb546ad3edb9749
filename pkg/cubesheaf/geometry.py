"""
Cubical Complex Geometry
Faces, types, the covering order, incidence maps and links of the graded
incidence poset generated by a set G and t pairwise commuting, inverse-closed
sets of permutations.

Directions are numbered 0..t-1. A face stores its group element and one label
per direction: a generator index (>= 0) for directions in its type, or an
encoded bit (~0 / ~1, i.e. -1 / -2) for the others.
"""

import itertools
import threading
from dataclasses import dataclass, field
from math import comb
from typing import Dict, Iterator, List, Mapping, NamedTuple, Sequence, Tuple

import networkx as nx
import numpy as np

from .core.logging import get_logger
from .errors import ConstructionError, LevelOutOfRange
from .reports import CheckResult, check

logger = get_logger(__name__)

Type = Tuple[int, ...]


def bit_label(b: int) -> int:
    """Encode bit b as a label"""
    return ~int(b)


class Face(NamedTuple):
    """A face [g; (a_j)_{j in S}, (b_j)_{j not in S}]"""
    g: int
    labels: Tuple[int, ...]

    @property
    def type(self) -> Type:
        return tuple(j for j, label in enumerate(self.labels) if label >= 0)

    @property
    def dim(self) -> int:
        return sum(1 for label in self.labels if label >= 0)

    def bit(self, j: int) -> int:
        label = self.labels[j]
        if label >= 0:
            raise ValueError(f"direction {j} carries a generator, not a bit")
        return ~label

    def __str__(self) -> str:
        parts = [f"a{label}" if label >= 0 else str(~label) for label in self.labels]
        return f"[{self.g}; {', '.join(parts)}]"


class CommutationViolation(ConstructionError):
    """Permutations from different directions do not commute"""

    def __init__(self, j: int, j2: int, a: int, a2: int, g: int):
        super().__init__(
            f"generator {a} of direction {j} and generator {a2} of direction {j2} "
            f"do not commute at element {g}"
        )
        self.j, self.j2, self.a, self.a2, self.g = j, j2, a, a2, g


class NotInverseClosed(ConstructionError):
    """A permutation set lacks the inverse of one of its members"""

    def __init__(self, j: int, a: int):
        super().__init__(f"inverse of generator {a} in direction {j} is missing")
        self.j, self.a = j, a


class SizeMismatch(ConstructionError):
    """Permutation sets disagree in size or act on the wrong set"""
    pass


@dataclass(frozen=True, eq=False)
class PermutationSet:
    """n permutations of {0..N-1} as index arrays, for one direction"""
    perms: np.ndarray
    direction: int = 0

    @classmethod
    def from_arrays(cls, perms: Sequence[Sequence[int]], direction: int = 0) -> "PermutationSet":
        array = np.asarray(perms, dtype=np.int64)
        if array.ndim != 2:
            raise SizeMismatch(f"direction {direction}: expected an (n, N) array, got shape {array.shape}")
        array = array.copy()
        array.setflags(write=False)
        return cls(perms=array, direction=direction)

    @property
    def n(self) -> int:
        return self.perms.shape[0]

    @property
    def N(self) -> int:
        return self.perms.shape[1]

    def inverse_index(self) -> np.ndarray:
        """inverse_index[a] = b with perms[b] the inverse of perms[a]"""
        N = self.N
        position = {row.tobytes(): a for a, row in enumerate(self.perms)}
        out = np.empty(self.n, dtype=np.int64)
        for a, row in enumerate(self.perms):
            if not np.array_equal(np.sort(row), np.arange(N)):
                raise SizeMismatch(f"direction {self.direction}: generator {a} is not a bijection")
            inverse = np.empty(N, dtype=np.int64)
            inverse[row] = np.arange(N)
            match = position.get(inverse.tobytes())
            if match is None:
                raise NotInverseClosed(self.direction, a)
            out[a] = match
        return out


@dataclass
class FaceTable:
    """Canonically ordered faces of one level"""
    level: int
    faces: List[Face]
    index: Dict[Face, int]
    type_ranges: Dict[Type, Tuple[int, int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.faces)


class ComplexGeometry:
    """The graded incidence poset X(G; {A_j})

    Face tables are built lazily per level and memoized; queries are pure.
    """

    def __init__(self, N: int, perms: np.ndarray, inverse: np.ndarray):
        self.N = int(N)
        self.perms = perms
        self.inverse = inverse
        self.t = perms.shape[0]
        self.n = perms.shape[1]
        self._tables: Dict[int, FaceTable] = {}
        self._incidence: Dict[int, Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"ComplexGeometry(t={self.t}, N={self.N}, n={self.n})"

    # Levels and faces

    def check_level(self, k: int, low: int = 0, high: int = None) -> None:
        high = self.t if high is None else high
        if not low <= k <= high:
            raise LevelOutOfRange(k, low, high)

    def types(self, k: int) -> List[Type]:
        return list(itertools.combinations(range(self.t), k))

    def act(self, j: int, a: int, g: int) -> int:
        """g . a for generator a of direction j"""
        return int(self.perms[j, a, g])

    def act_inverse(self, j: int, a: int, g: int) -> int:
        return int(self.perms[j, self.inverse[j, a], g])

    def table(self, k: int) -> FaceTable:
        self.check_level(k)
        table = self._tables.get(k)
        if table is None:
            with self._lock:
                table = self._tables.get(k)
                if table is None:
                    table = self._build_table(k)
                    self._tables[k] = table
        return table

    def _build_table(self, k: int) -> FaceTable:
        faces: List[Face] = []
        ranges: Dict[Type, Tuple[int, int]] = {}
        bits = (bit_label(0), bit_label(1))
        for S in self.types(k):
            start = len(faces)
            options = [range(self.n) if j in S else bits for j in range(self.t)]
            label_tuples = list(itertools.product(*options))
            for g in range(self.N):
                faces.extend(Face(g, labels) for labels in label_tuples)
            ranges[S] = (start, len(faces))
        logger.debug(f"Enumerated level {k}: {len(faces)} faces")
        return FaceTable(level=k, faces=faces, index={f: i for i, f in enumerate(faces)}, type_ranges=ranges)

    def faces(self, k: int) -> List[Face]:
        return self.table(k).faces

    def num_faces(self, k: int) -> int:
        return len(self.table(k))

    def index(self, f: Face) -> int:
        return self.table(f.dim).index[f]

    def face_count_formula(self, k: int) -> int:
        return comb(self.t, k) * 2 ** (self.t - k) * self.n ** k * self.N

    def validate_face(self, f: Face) -> None:
        if len(f.labels) != self.t or not 0 <= f.g < self.N:
            raise ValueError(f"{f} is not a face of {self!r}")
        if any(label >= self.n or label < -2 for label in f.labels):
            raise ValueError(f"{f} has an invalid label")

    # Order relations

    def covers_down(self, f: Face) -> List[Tuple[Face, int]]:
        """Faces f' with f' covered by f along direction j, as (f', j)"""
        out = []
        for j in f.type:
            for b in (0, 1):
                labels = f.labels[:j] + (bit_label(b),) + f.labels[j + 1:]
                g = f.g if b == 0 else self.act(j, f.labels[j], f.g)
                out.append((Face(g, labels), j))
        return out

    def covers_up(self, f: Face) -> List[Tuple[Face, int]]:
        """Faces covering f, as (f', j) with j the added direction"""
        out = []
        for j in range(self.t):
            if f.labels[j] >= 0:
                continue
            b = ~f.labels[j]
            for a in range(self.n):
                labels = f.labels[:j] + (a,) + f.labels[j + 1:]
                g = f.g if b == 0 else self.act_inverse(j, a, f.g)
                out.append((Face(g, labels), j))
        return out

    def restrict_face(self, u: Face, bits: Mapping[int, int]) -> Face:
        """The face below u obtained by fixing the given directions to bits"""
        g = u.g
        labels = list(u.labels)
        for j, b in bits.items():
            a = u.labels[j]
            if a < 0:
                raise ValueError(f"direction {j} is not in the type of {u}")
            if b:
                g = self.act(j, a, g)
            labels[j] = bit_label(b)
        return Face(g, tuple(labels))

    def leq(self, f: Face, u: Face) -> bool:
        """f below or equal to u"""
        S_f, S_u = set(f.type), set(u.type)
        if not S_f <= S_u:
            return False
        return self.restrict_face(u, {j: f.bit(j) for j in S_u - S_f}) == f

    def between(self, f: Face, u: Face, T: Sequence[int]) -> Face:
        """The unique face of type T lying between f and u (f <= . <= u)"""
        S_f, S_u, T = set(f.type), set(u.type), set(T)
        if not S_f <= T <= S_u:
            raise ValueError(f"type {sorted(T)} is not between {sorted(S_f)} and {sorted(S_u)}")
        return self.restrict_face(u, {j: f.bit(j) for j in S_u - T})

    def vertices(self, f: Face) -> List[Face]:
        """The 2^dim vertices of f in canonical (bit-string) order"""
        S = f.type
        return [self.restrict_face(f, dict(zip(S, bits))) for bits in itertools.product((0, 1), repeat=len(S))]

    def extend_face(self, v: Face, gens: Mapping[int, int]) -> Face:
        """The face above v whose generators on the given directions are ``gens``"""
        g = v.g
        labels = list(v.labels)
        for j, a in gens.items():
            if v.labels[j] >= 0:
                raise ValueError(f"direction {j} is already in the type of {v}")
            if v.labels[j] == bit_label(1):
                g = self.act_inverse(j, a, g)
            labels[j] = a
        return Face(g, tuple(labels))

    def link_up(self, v: Face, k: int) -> List[Face]:
        """X_{>=v}(k)"""
        self.check_level(k, v.dim, self.t)
        free = [j for j in range(self.t) if v.labels[j] < 0]
        out = []
        for D in itertools.combinations(free, k - v.dim):
            for gens in itertools.product(range(self.n), repeat=len(D)):
                out.append(self.extend_face(v, dict(zip(D, gens))))
        return out

    def link_down(self, v: Face, level: int) -> List[Face]:
        """X_{<=v}(level)"""
        self.check_level(level, 0, v.dim)
        S = v.type
        out = []
        for fixed in itertools.combinations(S, v.dim - level):
            for bits in itertools.product((0, 1), repeat=len(fixed)):
                out.append(self.restrict_face(v, dict(zip(fixed, bits))))
        return out

    def incidence(self, k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Covering pairs between X(k) (rows) and X(k-1) (cols) with their direction"""
        self.check_level(k, 1, self.t)
        cached = self._incidence.get(k)
        if cached is not None:
            return cached
        upper, lower = self.table(k), self.table(k - 1)
        rows, cols, dirs = [], [], []
        for i, f in enumerate(upper.faces):
            for f_low, j in self.covers_down(f):
                rows.append(i)
                cols.append(lower.index[f_low])
                dirs.append(j)
        result = tuple(np.asarray(a, dtype=np.int64) for a in (rows, cols, dirs))
        with self._lock:
            self._incidence.setdefault(k, result)
        return self._incidence[k]


def build_complex(N: int, permsets: Sequence[PermutationSet]) -> ComplexGeometry:
    """Validate the permutation sets and build the geometry"""
    if not permsets:
        raise SizeMismatch("at least one direction is required")
    sizes = {p.n for p in permsets}
    if len(sizes) != 1:
        raise SizeMismatch(f"permutation sets have different sizes {sorted(sizes)}")
    for p in permsets:
        if p.N != N:
            raise SizeMismatch(f"direction {p.direction} acts on {p.N} elements, expected {N}")

    perms = np.stack([p.perms for p in permsets])
    inverse = np.stack([PermutationSet(p.perms, j).inverse_index() for j, p in enumerate(permsets)])

    t = perms.shape[0]
    for j, j2 in itertools.combinations(range(t), 2):
        # composed[a, a2, g] = a(a2(g)) versus a2(a(g))
        left = perms[j][:, perms[j2]]
        right = perms[j2][:, perms[j]].transpose(1, 0, 2)
        bad = np.argwhere(left != right)
        if bad.size:
            a, a2, g = (int(x) for x in bad[0])
            raise CommutationViolation(j, j2, a, a2, g)

    logger.info("Built complex geometry", extra={"t": t, "N": N, "n": perms.shape[1]})
    return ComplexGeometry(N, perms, inverse)


def count_check(X: ComplexGeometry) -> List[CheckResult]:
    """Compare enumerated level, incidence and link sizes with the counting formulas"""
    t, n = X.t, X.n
    results = []
    for k in range(t + 1):
        results.append(check(
            f"geometry.level_size[{k}]", "face-count",
            X.num_faces(k) == X.face_count_formula(k),
            enumerated=X.num_faces(k), formula=X.face_count_formula(k)
        ))

    down_ok, up_ok, link_up_ok, link_down_ok = True, True, True, True
    for i in range(t + 1):
        for f in X.faces(i):
            down_ok &= len(X.covers_down(f)) == 2 * i
            up_ok &= len(X.covers_up(f)) == (t - i) * n
            for k in range(i, t + 1):
                link_up_ok &= len(X.link_up(f, k)) == comb(t - i, k - i) * n ** (k - i)
            for level in range(0, i + 1):
                link_down_ok &= len(X.link_down(f, level)) == comb(i, level) * 2 ** (i - level)

    results.append(check("geometry.down_incidence", "down-incidence-size", down_ok))
    results.append(check("geometry.up_incidence", "up-incidence-size", up_ok))
    results.append(check("geometry.link_up_size", "upper-link-size", link_up_ok))
    results.append(check("geometry.link_down_size", "lower-link-size", link_down_ok))
    return results


def poset_check(X: ComplexGeometry) -> List[CheckResult]:
    """Incidence-poset axioms, relation duality and hypercube connectivity of faces"""
    t = X.t
    diamond_ok, dual_ok, hypercube_ok = True, True, True
    diamond_failures = []

    for i in range(t + 1):
        for f in X.faces(i):
            up = X.covers_up(f)
            for u, _ in up:
                dual_ok &= any(low == f for low, _ in X.covers_down(u))
            for low, _ in X.covers_down(f):
                dual_ok &= any(high == f for high, _ in X.covers_up(low))

            if i + 2 <= t:
                middles: Dict[Face, int] = {}
                for u, _ in up:
                    for w, _ in X.covers_up(u):
                        middles[w] = middles.get(w, 0) + 1
                bad = [w for w, count in middles.items() if count != 2]
                if bad:
                    diamond_ok = False
                    diamond_failures.append((str(f), str(bad[0])))

            if i >= 1:
                graph = nx.Graph()
                verts = X.vertices(f)
                graph.add_nodes_from(verts)
                for edge in X.link_down(f, 1):
                    a, b = X.vertices(edge)
                    graph.add_edge(a, b)
                hypercube_ok &= (
                    len(set(verts)) == 2 ** i
                    and graph.number_of_edges() == i * 2 ** (i - 1)
                    and nx.is_connected(graph)
                )

    return [
        check("geometry.rank2_intervals", "incidence-poset", diamond_ok, failures=diamond_failures[:5]),
        check("geometry.cover_duality", "incidence-maps", dual_ok),
        check("geometry.face_hypercubes", "face-vertex-hypercube", hypercube_ok),
    ]
