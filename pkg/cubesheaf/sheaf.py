"""
Sheaf Complex
Local coefficient spaces over the cubical geometry, restriction and
co-restriction maps, and assembly of the global boundary and coboundary
matrices over GF(2^e).

A face of type S carries coefficients indexed by prod_{j not in S} {0..m_j-1},
axes in increasing direction order, flattened row-major.
"""

import functools
import itertools
import threading
from dataclasses import dataclass
from math import prod
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core.logging import PerformanceLogger, get_logger
from .errors import ConstructionError, CubeSheafError
from .ff2e import Field, FieldMatrix, kernel_matrix, rank, raw
from .geometry import ComplexGeometry, Face, Type
from .reports import CheckResult, check

logger = get_logger(__name__)


class RankDeficient(ConstructionError):
    def __init__(self, direction: int, rank_found: int, rows: int, dual: bool = False):
        side = "dual check matrix" if dual else "check matrix"
        super().__init__(f"{side} of direction {direction} has rank {rank_found} < {rows} rows")
        self.direction, self.rank, self.rows = direction, rank_found, rows


class NotCovering(CubeSheafError, ValueError):
    """Source face is not below the target face"""
    pass


class NotCovered(CubeSheafError, ValueError):
    """Target face is not below the source face"""
    pass


class FormulaMismatch(ConstructionError):
    """Enumerated chain dimensions disagree with the closed formula"""
    pass


@dataclass(frozen=True, eq=False)
class LocalCodes:
    """Check matrices h_1..h_t (m_j x n) and their dual check matrices"""
    field: Field
    h: Tuple[np.ndarray, ...]

    @classmethod
    def from_matrices(cls, field: Field, matrices: Sequence) -> "LocalCodes":
        arrays = []
        for j, M in enumerate(matrices):
            array = raw(M)
            if array.ndim != 2:
                raise ConstructionError(f"check matrix {j} is not 2-dimensional")
            if array.size and (array.min() < 0 or array.max() >= field.q):
                raise ConstructionError(f"check matrix {j} has entries outside GF({field.q})")
            array.setflags(write=False)
            arrays.append(array)
        if len({a.shape[1] for a in arrays}) > 1:
            raise ConstructionError("check matrices have different column counts")
        return cls(field=field, h=tuple(arrays))

    @property
    def t(self) -> int:
        return len(self.h)

    @property
    def n(self) -> int:
        return self.h[0].shape[1]

    @property
    def m(self) -> Tuple[int, ...]:
        return tuple(a.shape[0] for a in self.h)

    @functools.cached_property
    def duals(self) -> Tuple[np.ndarray, ...]:
        """h_j^perp: rows span the kernel of h_j, (n - rank) x n; possibly 0 x n"""
        out = []
        for a in self.h:
            K = raw(kernel_matrix(self.field(a)))
            K.setflags(write=False)
            out.append(K)
        return tuple(out)

    def ranks(self) -> List[int]:
        return [rank(self.field(a)) for a in self.h]

    def validate(self) -> None:
        """Raise RankDeficient unless every h_j and every dual has full row rank"""
        for j, (a, r) in enumerate(zip(self.h, self.ranks())):
            if r < a.shape[0]:
                raise RankDeficient(j, r, a.shape[0])
        for j, (a, d) in enumerate(zip(self.h, self.duals)):
            if d.shape[0] != self.n - a.shape[0]:
                raise RankDeficient(j, d.shape[0], self.n - a.shape[0], dual=True)
            if np.any(self.field.matmul(d, a.T)):
                raise ConstructionError(f"dual of direction {j} is not orthogonal to the checks")

    def dual(self) -> "LocalCodes":
        return LocalCodes(field=self.field, h=self.duals)

    def check_results(self) -> List[CheckResult]:
        results = []
        for j, (a, r) in enumerate(zip(self.h, self.ranks())):
            results.append(check(
                f"codes.full_row_rank[{j}]", "full-row-rank-checks",
                r == a.shape[0], rows=a.shape[0], rank=r
            ))
        for j, (a, d) in enumerate(zip(self.h, self.duals)):
            ok = d.shape[0] == self.n - a.shape[0] and not np.any(self.field.matmul(d, a.T))
            results.append(check(f"codes.dual[{j}]", "dual-checks-orthogonal", ok, dual_rows=d.shape[0]))
        return results

    def to_lists(self) -> List[List[List[int]]]:
        return [a.tolist() for a in self.h]


def coeff_dim(S: Sequence[int], m: Sequence[int]) -> int:
    """dim V_S = prod of m_j over directions outside S"""
    S = set(S)
    return prod(mj for j, mj in enumerate(m) if j not in S)


def coeff_shape(S: Sequence[int], m: Sequence[int]) -> Tuple[int, ...]:
    S = set(S)
    return tuple(mj for j, mj in enumerate(m) if j not in S)


def chain_dim_formula(N: int, n: int, m: Sequence[int], i: int) -> int:
    t = len(m)
    total = sum(prod(m[j] for j in T) for T in itertools.combinations(range(t), t - i))
    return N * n ** i * 2 ** (t - i) * total


@functools.lru_cache(maxsize=None)
def insertion_pattern(m: Tuple[int, ...], S: Type, j: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coordinate pairs linking V_S (S containing j) and V_{S - j}

    Returns (c, c_low, r): coordinate c of V_S, coordinate of V_{S - j} with r
    inserted on axis j, and r itself, for every c and r.
    """
    shape = coeff_shape(S, m)
    low = tuple(x for x in S if x != j)
    low_shape = coeff_shape(low, m)
    axis = sum(1 for x in range(len(m)) if x not in low and x < j)
    dim = prod(shape)
    coords = np.array(list(np.ndindex(*shape)), dtype=np.int64).reshape(dim, len(shape))
    c = np.repeat(np.arange(dim, dtype=np.int64), m[j])
    r = np.tile(np.arange(m[j], dtype=np.int64), dim)
    full = np.insert(np.repeat(coords, m[j], axis=0), axis, r, axis=1)
    c_low = np.ravel_multi_index(tuple(full.T), low_shape) if full.size else np.zeros(0, dtype=np.int64)
    return c, np.asarray(c_low, dtype=np.int64), r


class SheafComplex:
    """The chain complex C_*(X, F) with cached assembled maps

    ``matrices`` preloads assembled maps (named ``delta_k`` / ``partial_k``),
    used when verifying stored bundles.
    """

    def __init__(
        self,
        geometry: ComplexGeometry,
        codes: LocalCodes,
        validate: bool = True,
        matrices: Optional[Dict[str, FieldMatrix]] = None
    ):
        if codes.t != geometry.t:
            raise ConstructionError(f"{codes.t} check matrices for a {geometry.t}-dimensional complex")
        if codes.n != geometry.n:
            raise ConstructionError(f"check matrices have {codes.n} columns, generator sets have {geometry.n}")
        if validate:
            codes.validate()
        self.geometry = geometry
        self.codes = codes
        self.field = codes.field
        self._matrices: Dict[str, FieldMatrix] = dict(matrices or {})
        self._offsets: Dict[int, np.ndarray] = {}
        self._lock = threading.Lock()
        self._performance_logger = PerformanceLogger(logger)

    def __repr__(self) -> str:
        return f"SheafComplex(t={self.t}, N={self.geometry.N}, n={self.geometry.n}, m={self.codes.m}, q={self.field.q})"

    @property
    def t(self) -> int:
        return self.geometry.t

    @property
    def m(self) -> Tuple[int, ...]:
        return self.codes.m

    def coeff_dim(self, f: Face) -> int:
        return coeff_dim(f.type, self.m)

    def coeff_shape(self, f: Face) -> Tuple[int, ...]:
        return coeff_shape(f.type, self.m)

    def offsets(self, k: int) -> np.ndarray:
        """Start of each face block in C_k; the last entry is dim C_k"""
        cached = self._offsets.get(k)
        if cached is None:
            table = self.geometry.table(k)
            sizes = np.zeros(len(table), dtype=np.int64)
            for S, (start, stop) in table.type_ranges.items():
                sizes[start:stop] = coeff_dim(S, self.m)
            cached = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
            self._offsets[k] = cached
        return cached

    def block_sizes(self, k: int) -> np.ndarray:
        return np.diff(self.offsets(k))

    def dim(self, k: int) -> int:
        return int(self.offsets(k)[-1])

    def block(self, k: int, f: Face) -> slice:
        i = self.geometry.index(f)
        off = self.offsets(k)
        return slice(int(off[i]), int(off[i + 1]))

    def max_coeff_dim(self, k: int) -> int:
        return max((coeff_dim(S, self.m) for S in self.geometry.types(k)), default=0)

    # Assembled maps

    def delta(self, k: int) -> FieldMatrix:
        """delta_k : C^k -> C^{k+1}"""
        self.geometry.check_level(k, 0, self.t - 1)
        return self._cached(f"delta_{k}", lambda: assemble_delta(self, k))

    def partial(self, k: int) -> FieldMatrix:
        """partial_k : C_k -> C_{k-1}"""
        self.geometry.check_level(k, 1, self.t)
        return self._cached(f"partial_{k}", lambda: assemble_partial(self, k))

    def _cached(self, name: str, build) -> FieldMatrix:
        M = self._matrices.get(name)
        if M is None:
            self._performance_logger.start_timer(f"assemble_{name}")
            M = build()
            self._performance_logger.end_timer(f"assemble_{name}", nnz=M.nnz, shape=M.shape)
            with self._lock:
                M = self._matrices.setdefault(name, M)
        return M

    def matrices(self) -> Dict[str, FieldMatrix]:
        out = {}
        for k in range(self.t):
            out[f"delta_{k}"] = self.delta(k)
        for k in range(1, self.t + 1):
            out[f"partial_{k}"] = self.partial(k)
        return out

    def dual(self) -> "SheafComplex":
        """Same geometry with the dual check matrices"""
        return SheafComplex(self.geometry, self.codes.dual(), validate=False)


def _label_array(X: ComplexGeometry, k: int) -> np.ndarray:
    return np.asarray([f.labels for f in X.faces(k)], dtype=np.int64).reshape(-1, X.t)


def assemble_delta(SC: SheafComplex, k: int) -> FieldMatrix:
    """delta_k from the covering relation and the co-restriction maps"""
    X = SC.geometry
    SC.geometry.check_level(k, 0, SC.t - 1)
    upper_rows, lower_cols, dirs = X.incidence(k + 1)
    labels = _label_array(X, k + 1)
    up_off, low_off = SC.offsets(k + 1), SC.offsets(k)
    upper_table = X.table(k + 1)

    rows, cols, vals = [], [], []
    for S, (start, stop) in upper_table.type_ranges.items():
        in_type = (upper_rows >= start) & (upper_rows < stop)
        for j in S:
            sel = in_type & (dirs == j)
            if not np.any(sel):
                continue
            c, c_low, r = insertion_pattern(SC.m, S, j)
            if c.size == 0:
                continue
            f_idx, g_idx = upper_rows[sel], lower_cols[sel]
            a = labels[f_idx, j]
            rows.append((up_off[f_idx][:, None] + c[None, :]).ravel())
            cols.append((low_off[g_idx][:, None] + c_low[None, :]).ravel())
            vals.append(SC.codes.h[j][r[None, :], a[:, None]].ravel())

    shape = (SC.dim(k + 1), SC.dim(k))
    if not rows:
        return FieldMatrix.zeros(SC.field, shape)
    return FieldMatrix(SC.field, shape, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def assemble_partial(SC: SheafComplex, k: int) -> FieldMatrix:
    """partial_k from the upward covers and the restriction maps"""
    X = SC.geometry
    SC.geometry.check_level(k, 1, SC.t)
    up_off, low_off = SC.offsets(k), SC.offsets(k - 1)
    upper_index = X.table(k).index

    rows, cols, vals = [], [], []
    for i, f in enumerate(X.faces(k - 1)):
        for u, j in X.covers_up(f):
            c, c_low, r = insertion_pattern(SC.m, u.type, j)
            if c.size == 0:
                continue
            rows.append(low_off[i] + c_low)
            cols.append(up_off[upper_index[u]] + c)
            vals.append(SC.codes.h[j][r, u.labels[j]])

    shape = (SC.dim(k - 1), SC.dim(k))
    if not rows:
        return FieldMatrix.zeros(SC.field, shape)
    return FieldMatrix(SC.field, shape, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))


def _covering_direction(f_low: Face, f_high: Face) -> int:
    added = set(f_high.type) - set(f_low.type)
    if len(added) != 1 or not set(f_low.type) <= set(f_high.type):
        return -1
    return added.pop()


def _co_restrict_step(SC: SheafComplex, z: np.ndarray, f_low: Face, f_high: Face) -> np.ndarray:
    j = _covering_direction(f_low, f_high)
    if j < 0 or not SC.geometry.leq(f_low, f_high):
        raise NotCovering(f"{f_low} is not covered by {f_high}")
    shape = SC.coeff_shape(f_low)
    axis = sum(1 for x in range(j) if f_low.labels[x] < 0)
    moved = np.moveaxis(raw(z).reshape(shape), axis, -1)
    rest = moved.shape[:-1]
    column = SC.codes.h[j][:, f_high.labels[j]]
    out = SC.field.matmul(moved.reshape(prod(rest), shape[axis]), column)
    return out.reshape(rest).ravel()


def co_restrict(SC: SheafComplex, z, f_low: Face, f_high: Face, path: Optional[Sequence[int]] = None) -> np.ndarray:
    """co-res_{f_low, f_high}(z) : V_{f_low} -> V_{f_high}, composed along a path

    ``path`` orders the added directions; the result does not depend on it.
    """
    X = SC.geometry
    if not X.leq(f_low, f_high):
        raise NotCovering(f"{f_low} is not below {f_high}")
    added = sorted(set(f_high.type) - set(f_low.type))
    order = list(path) if path is not None else added
    if sorted(order) != added:
        raise ValueError(f"path {order} does not add directions {added}")
    current, value = f_low, raw(z)
    T = set(f_low.type)
    for j in order:
        T.add(j)
        nxt = X.between(f_low, f_high, sorted(T))
        value = _co_restrict_step(SC, value, current, nxt)
        current = nxt
    return value


def _restrict_step(SC: SheafComplex, z: np.ndarray, f_high: Face, f_low: Face) -> np.ndarray:
    j = _covering_direction(f_low, f_high)
    if j < 0 or not SC.geometry.leq(f_low, f_high):
        raise NotCovered(f"{f_low} is not covered by {f_high}")
    shape = SC.coeff_shape(f_high)
    axis = sum(1 for x in range(j) if f_high.labels[x] < 0)
    column = SC.codes.h[j][:, f_high.labels[j]]
    tensor = SC.field.mul(raw(z).reshape(shape + (1,)), column.reshape((1,) * len(shape) + (-1,)))
    return np.moveaxis(tensor, -1, axis).ravel()


def restrict(SC: SheafComplex, z, f_high: Face, f_low: Face, path: Optional[Sequence[int]] = None) -> np.ndarray:
    """res_{f_high, f_low}(z) : V_{f_high} -> V_{f_low}, composed along a path"""
    X = SC.geometry
    if not X.leq(f_low, f_high):
        raise NotCovered(f"{f_low} is not below {f_high}")
    removed = sorted(set(f_high.type) - set(f_low.type))
    order = list(path) if path is not None else removed
    if sorted(order) != removed:
        raise ValueError(f"path {order} does not remove directions {removed}")
    current, value = f_high, raw(z)
    T = set(f_high.type)
    for j in order:
        T.discard(j)
        nxt = X.between(f_low, f_high, sorted(T))
        value = _restrict_step(SC, value, current, nxt)
        current = nxt
    return value


def chain_dims(SC: SheafComplex) -> List[int]:
    """D_0..D_t from the closed formula, checked against the enumerated bases"""
    X = SC.geometry
    dims = []
    for i in range(SC.t + 1):
        formula = chain_dim_formula(X.N, X.n, SC.m, i)
        if formula != SC.dim(i):
            raise FormulaMismatch(f"D_{i}: formula {formula}, enumerated {SC.dim(i)}")
        dims.append(formula)
    return dims


def _first_entry(M: FieldMatrix) -> Optional[Tuple[int, int]]:
    if M.nnz == 0:
        return None
    return int(M.rows[0]), int(M.cols[0])


def verify_chain(SC: SheafComplex, samples: int = 50, seed: int = 0) -> List[CheckResult]:
    """Rank, dimension, chain-condition, adjointness and path-independence checks"""
    X, F = SC.geometry, SC.field
    t = SC.t
    rng = np.random.default_rng(seed)
    results = list(SC.codes.check_results())

    for i in range(t + 1):
        formula = chain_dim_formula(X.N, X.n, SC.m, i)
        results.append(check(
            f"chain.dimension[{i}]", "chain-dimension",
            formula == SC.dim(i), formula=formula, enumerated=SC.dim(i)
        ))

    for i in range(1, t):
        product = SC.partial(i) @ SC.partial(i + 1)
        results.append(check(
            f"chain.boundary_squared[{i}]", "boundary-squares-to-zero",
            product.is_zero(), nonzero=product.nnz, witness=_first_entry(product)
        ))
    for i in range(t - 1):
        product = SC.delta(i + 1) @ SC.delta(i)
        results.append(check(
            f"chain.coboundary_squared[{i}]", "coboundary-squares-to-zero",
            product.is_zero(), nonzero=product.nnz, witness=_first_entry(product)
        ))

    for i in range(t):
        D, P = SC.delta(i), SC.partial(i + 1)
        same = D == P.T
        pairing_ok = True
        for _ in range(min(samples, 20)):
            z = rng.integers(0, F.q, size=SC.dim(i + 1))
            w = rng.integers(0, F.q, size=SC.dim(i))
            pairing_ok &= F.dot(z, D.apply(w)) == F.dot(P.apply(z), w)
        results.append(check(
            f"chain.adjoint[{i}]", "coboundary-adjoint-to-boundary",
            same and pairing_ok, transpose_equal=same, pairing_equal=pairing_ok
        ))

    results.append(_path_independence(SC, samples, rng))
    results.extend(_weight_bounds(SC))
    return results


def _path_independence(SC: SheafComplex, samples: int, rng: np.random.Generator) -> CheckResult:
    X, F = SC.geometry, SC.field
    ok, tested = True, 0
    if SC.t >= 2:
        for _ in range(samples):
            k = int(rng.integers(0, SC.t - 1))
            faces = X.faces(k)
            f = faces[int(rng.integers(len(faces)))]
            ups = X.link_up(f, SC.t)
            u = ups[int(rng.integers(len(ups)))]
            z = rng.integers(0, F.q, size=SC.coeff_dim(f))
            added = sorted(set(u.type) - set(f.type))
            forward = co_restrict(SC, z, f, u, path=added)
            backward = co_restrict(SC, z, f, u, path=added[::-1])
            y = rng.integers(0, F.q, size=SC.coeff_dim(u))
            down_a = restrict(SC, y, u, f, path=added)
            down_b = restrict(SC, y, u, f, path=added[::-1])
            ok &= np.array_equal(forward, backward) and np.array_equal(down_a, down_b)
            ok &= F.dot(y, forward) == F.dot(down_a, z)
            tested += 1
    return check("chain.path_independence", "restriction-path-independence", ok, samples=tested)


def _weight_bounds(SC: SheafComplex) -> List[CheckResult]:
    t, n = SC.t, SC.geometry.n
    max_m = max(SC.m) if SC.m else 0
    results = []
    for i in range(t):
        D = SC.delta(i)
        col_max = int(D.col_weights().max()) if D.ncols else 0
        row_max = int(D.row_weights().max()) if D.nrows else 0
        results.append(check(
            f"chain.weights[{i}]", "bounded-check-weight",
            col_max <= (t - i) * n * max_m and row_max <= 2 * (i + 1) * n,
            max_column_weight=col_max, max_row_weight=row_max
        ))
    return results
