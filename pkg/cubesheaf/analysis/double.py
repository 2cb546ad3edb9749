"""
Double Complex of Local Views
Cochains C^i(X, F_K) that assign to every face f in X(i) a chain of the link
complex C_K(X_{>=f}), the maps Delta (sum of restricted views, no code action)
and partial_L (the link boundary inside each view), and the solvers used by
cycle filling: per-face local lifts, the hypercube solve for Delta and the
stitching of consistent vertex views into a global chain.

Layout of C^i(X, F_K): faces f of X(i) in table order; inside f the faces u of
X_{>=f}(K) in link order; inside u the coefficients of V_u. A face block is
therefore a chain of the local product complex of the complementary type.
"""

import functools
import itertools
import threading
from dataclasses import dataclass
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.logging import PerformanceLogger, get_logger
from ..errors import CubeSheafError, LevelOutOfRange
from ..ff2e import DimensionMismatch, FieldMatrix, LinearSolver, NoSolution, block_weights, raw
from ..local import LocalComplex
from ..reports import CheckResult, check
from ..sheaf import SheafComplex, coeff_dim

logger = get_logger(__name__)
performance_logger = PerformanceLogger(logger)


class ShapeMismatch(DimensionMismatch):
    """A local-view cochain does not belong to the expected space"""
    pass


class NotACocycle(CubeSheafError, ValueError):
    """Delta of the input is not zero"""
    pass


class NotACycle(CubeSheafError, ValueError):
    """Boundary of the input is not zero"""
    pass


class InconsistentViews(CubeSheafError, ValueError):
    """Vertex views disagree on a shared face"""

    def __init__(self, face: str, level: int):
        super().__init__(f"vertex views disagree on {face} (level {level})")
        self.face = face
        self.level = level


def _ranges(sizes: np.ndarray) -> np.ndarray:
    """Concatenation of arange(s) for every s in sizes"""
    sizes = np.asarray(sizes, dtype=np.int64)
    total = int(sizes.sum())
    return np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(sizes) - sizes, sizes)


@functools.lru_cache(maxsize=None)
def cube_faces(k: int, i: int) -> Tuple[Tuple[Tuple[int, ...], Tuple[int, ...]], ...]:
    """Level-i faces of the k-cube as (fixed positions, bits), in link_down order"""
    return tuple(
        (fixed, bits)
        for fixed in itertools.combinations(range(k), k - i)
        for bits in itertools.product((0, 1), repeat=k - i)
    )


@functools.lru_cache(maxsize=None)
def cube_coboundary(k: int, i: int) -> np.ndarray:
    """0/1 incidence of the k-cube: rows level i, columns level i - 1"""
    upper, lower = cube_faces(k, i), cube_faces(k, i - 1)
    out = np.zeros((len(upper), len(lower)), dtype=np.int64)
    for r, (fixed_u, bits_u) in enumerate(upper):
        pinned = dict(zip(fixed_u, bits_u))
        for c, (fixed_l, bits_l) in enumerate(lower):
            low = dict(zip(fixed_l, bits_l))
            if set(fixed_u) < set(fixed_l) and all(low[p] == b for p, b in pinned.items()):
                out[r, c] = 1
    out.setflags(write=False)
    return out


class LocalViewSpace:
    """Index layout of C^i(X, F_K)"""

    def __init__(self, SC: SheafComplex, i: int, K: int):
        X = SC.geometry
        self.level = i
        self.coefficient_level = K
        target_index = X.table(K).index

        faces, targets = [], []
        for fi, f in enumerate(X.faces(i)):
            for u in X.link_up(f, K):
                faces.append(fi)
                targets.append(target_index[u])
        self.faces = np.asarray(faces, dtype=np.int64)
        self.targets = np.asarray(targets, dtype=np.int64)
        self.sizes = SC.block_sizes(K)[self.targets] if self.targets.size else np.zeros(0, dtype=np.int64)
        self.starts = np.concatenate([[0], np.cumsum(self.sizes)]).astype(np.int64)
        self.dim = int(self.starts[-1])

        num_faces = X.num_faces(i)
        self.face_starts = self.starts[np.searchsorted(self.faces, np.arange(num_faces + 1))]
        self.face_sizes = np.diff(self.face_starts)

        # global coordinate in C_K behind each coordinate of the space
        self.source = np.repeat(SC.offsets(K)[self.targets] - self.starts[:-1], self.sizes) + np.arange(self.dim)

        self._width = X.num_faces(K)
        keys = self.faces * self._width + self.targets
        self._order = np.argsort(keys, kind="stable")
        self._sorted_keys = keys[self._order]
        self._geometry = X
        self._cube_pairs: Optional[np.ndarray] = None

    def __repr__(self) -> str:
        return f"LocalViewSpace(level={self.level}, coefficients={self.coefficient_level}, dim={self.dim})"

    def locate(self, f: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Pair positions of (f, u) index arrays; every pair must exist"""
        keys = np.asarray(f, dtype=np.int64) * self._width + np.asarray(u, dtype=np.int64)
        pos = np.searchsorted(self._sorted_keys, keys)
        pos = np.minimum(pos, max(self._sorted_keys.size - 1, 0))
        if keys.size and (self._sorted_keys.size == 0 or np.any(self._sorted_keys[pos] != keys)):
            raise KeyError("face pair is not incident")
        return self._order[pos]

    def cube_pairs(self) -> np.ndarray:
        """(|X(K)|, faces of the K-cube at this level): pair positions of (f, u), f <= u"""
        if self._cube_pairs is None:
            X, i, K = self._geometry, self.level, self.coefficient_level
            below = np.asarray(
                [[X.index(f) for f in X.link_down(u, i)] for u in X.faces(K)], dtype=np.int64
            ).reshape(X.num_faces(K), len(cube_faces(K, i)))
            u_index = np.repeat(np.arange(X.num_faces(K)), below.shape[1])
            self._cube_pairs = self.locate(below.ravel(), u_index).reshape(below.shape)
        return self._cube_pairs


@dataclass(frozen=True, eq=False)
class LocalViewCochain:
    """An element of C^i(X, F_K)"""
    space: LocalViewSpace
    values: np.ndarray

    @property
    def level(self) -> int:
        return self.space.level

    @property
    def coefficient_level(self) -> int:
        return self.space.coefficient_level

    @property
    def weight(self) -> int:
        """Number of faces f with a nonzero view"""
        if self.values.size == 0:
            return 0
        return int(block_weights(self.values, self.space.face_sizes)[0])

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def view(self, f_index: int) -> np.ndarray:
        s = self.space
        return self.values[s.face_starts[f_index]:s.face_starts[f_index + 1]]

    def __add__(self, other: "LocalViewCochain") -> "LocalViewCochain":
        if other.space is not self.space:
            raise ShapeMismatch(f"cannot add cochains of {self.space!r} and {other.space!r}")
        return LocalViewCochain(self.space, self.values ^ other.values)

    def __repr__(self) -> str:
        return f"LocalViewCochain(level={self.level}, coefficients={self.coefficient_level}, weight={self.weight})"


class DoubleComplex:
    """The bicomplex (C^i(X, F_K), Delta, partial_L) over a sheaf complex

    Spaces, maps and solvers are built on first use and memoized.
    """

    def __init__(self, SC: SheafComplex):
        self.SC = SC
        self.geometry = SC.geometry
        self.field = SC.field
        self.t = SC.t
        self._spaces: Dict[Tuple[int, int], LocalViewSpace] = {}
        self._matrices: Dict[Tuple[str, int, int], FieldMatrix] = {}
        self._solvers: Dict[tuple, LinearSolver] = {}
        self._locals: Dict[Tuple[int, ...], LocalComplex] = {}
        self._down_tables: Dict[Tuple[int, int], np.ndarray] = {}
        self._dual: Optional[SheafComplex] = None
        self._lock = threading.RLock()

    def __repr__(self) -> str:
        return f"DoubleComplex({self.SC!r})"

    @property
    def dual(self) -> SheafComplex:
        if self._dual is None:
            with self._lock:
                if self._dual is None:
                    self._dual = self.SC.dual()
        return self._dual

    def _check_pair(self, i: int, K: int) -> None:
        self.geometry.check_level(K, 0, self.t)
        if not 0 <= i <= K:
            raise LevelOutOfRange(i, 0, K)

    def space(self, i: int, K: int) -> LocalViewSpace:
        self._check_pair(i, K)
        key = (i, K)
        space = self._spaces.get(key)
        if space is None:
            with self._lock:
                space = self._spaces.get(key)
                if space is None:
                    space = LocalViewSpace(self.SC, i, K)
                    self._spaces[key] = space
        return space

    def local(self, S: Sequence[int]) -> LocalComplex:
        S = tuple(S)
        L = self._locals.get(S)
        if L is None:
            with self._lock:
                L = self._locals.setdefault(S, LocalComplex(S, self.SC.codes))
        return L

    def complement(self, T: Sequence[int]) -> Tuple[int, ...]:
        return tuple(j for j in range(self.t) if j not in T)

    def cochain(self, i: int, K: int, values=None) -> LocalViewCochain:
        space = self.space(i, K)
        if values is None:
            values = np.zeros(space.dim, dtype=np.int64)
        values = raw(values)
        if values.shape != (space.dim,):
            raise ShapeMismatch(f"expected {space.dim} coordinates, got shape {values.shape}")
        return LocalViewCochain(space, values)

    def random_cochain(self, i: int, K: int, rng: np.random.Generator) -> LocalViewCochain:
        space = self.space(i, K)
        return LocalViewCochain(space, rng.integers(0, self.field.q, size=space.dim, dtype=np.int64))

    def _own(self, y: LocalViewCochain) -> None:
        if y.space is not self._spaces.get((y.level, y.coefficient_level)):
            raise ShapeMismatch(f"{y.space!r} does not belong to {self!r}")

    # Maps

    def delta(self, i: int, K: int) -> FieldMatrix:
        """Delta : C^i(F_K) -> C^{i+1}(F_K)"""
        self._check_pair(i, K)
        self._check_pair(i + 1, K)
        return self._cached_matrix(("delta", i, K), lambda: self._assemble_delta(i, K))

    def partial(self, i: int, K: int) -> FieldMatrix:
        """partial_L : C^i(F_K) -> C^i(F_{K-1})"""
        self._check_pair(i, K)
        self._check_pair(i, K - 1)
        return self._cached_matrix(("partial", i, K), lambda: self._assemble_partial(i, K))

    def _cached_matrix(self, key, build) -> FieldMatrix:
        M = self._matrices.get(key)
        if M is None:
            name = f"assemble_{key[0]}_{key[1]}_{key[2]}"
            performance_logger.start_timer(name)
            M = build()
            performance_logger.end_timer(name, nnz=M.nnz, shape=M.shape)
            with self._lock:
                M = self._matrices.setdefault(key, M)
        return M

    def _down_table(self, level: int, i: int) -> np.ndarray:
        key = (level, i)
        table = self._down_tables.get(key)
        if table is None:
            X = self.geometry
            width = comb(level, i) * 2 ** (level - i)
            table = np.asarray(
                [[X.index(f) for f in X.link_down(v, i)] for v in X.faces(level)], dtype=np.int64
            ).reshape(X.num_faces(level), width)
            with self._lock:
                table = self._down_tables.setdefault(key, table)
        return table

    def _assemble_delta(self, i: int, K: int) -> FieldMatrix:
        X = self.geometry
        low, high = self.space(i, K), self.space(i + 1, K)
        _, lower_faces, _ = X.incidence(i + 1)
        covers = lower_faces.reshape(X.num_faces(i + 1), 2 * (i + 1))
        below = covers[high.faces]
        width = below.shape[1]
        src = low.locate(below.ravel(), np.repeat(high.targets, width))
        dst = np.repeat(np.arange(high.faces.size), width)
        sizes = high.sizes[dst]
        offsets = _ranges(sizes)
        rows = np.repeat(high.starts[dst], sizes) + offsets
        cols = np.repeat(low.starts[src], sizes) + offsets
        return FieldMatrix(self.field, (high.dim, low.dim), rows, cols, np.ones(rows.size, dtype=np.int64))

    def _assemble_partial(self, i: int, K: int) -> FieldMatrix:
        SC = self.SC
        source, target = self.space(i, K), self.space(i, K - 1)
        P = SC.partial(K)
        if P.nnz == 0:
            return FieldMatrix.zeros(self.field, (target.dim, source.dim))
        off_high, off_low = SC.offsets(K), SC.offsets(K - 1)
        u = np.searchsorted(off_high, P.cols, side="right") - 1
        v = np.searchsorted(off_low, P.rows, side="right") - 1
        below = self._down_table(K - 1, i)
        width = below.shape[1]
        f = below[v].ravel()
        rows = target.starts[target.locate(f, np.repeat(v, width))] + np.repeat(P.rows - off_low[v], width)
        cols = source.starts[source.locate(f, np.repeat(u, width))] + np.repeat(P.cols - off_high[u], width)
        return FieldMatrix(self.field, (target.dim, source.dim), rows, cols, np.repeat(P.vals, width))

    def apply_delta(self, y: LocalViewCochain) -> LocalViewCochain:
        self._own(y)
        M = self.delta(y.level, y.coefficient_level)
        return LocalViewCochain(self.space(y.level + 1, y.coefficient_level), M.apply(y.values))

    def apply_partial(self, y: LocalViewCochain) -> LocalViewCochain:
        self._own(y)
        M = self.partial(y.level, y.coefficient_level)
        return LocalViewCochain(self.space(y.level, y.coefficient_level - 1), M.apply(y.values))

    def views(self, x, i: int, K: int) -> LocalViewCochain:
        """y(f)[u] = x[u] for f in X(i), u in X_{>=f}(K)"""
        x = raw(x)
        if x.shape != (self.SC.dim(K),):
            raise ShapeMismatch(f"chain has shape {x.shape}, C_{K} has dimension {self.SC.dim(K)}")
        space = self.space(i, K)
        return LocalViewCochain(space, x[space.source])

    # Solvers

    def solver(self, key, build) -> LinearSolver:
        solver = self._solvers.get(key)
        if solver is None:
            solver = LinearSolver(build(), self.field)
            with self._lock:
                solver = self._solvers.setdefault(key, solver)
        return solver

    def lift(self, x: LocalViewCochain) -> LocalViewCochain:
        """Some z with partial_L z = x, face by face through local exactness"""
        self._own(x)
        i, K = x.level, x.coefficient_level
        self._check_pair(i, K + 1)
        out = self.space(i, K + 1)
        z = np.zeros(out.dim, dtype=np.int64)
        for T, (start, stop) in self.geometry.table(i).type_ranges.items():
            S = self.complement(T)
            L, k = self.local(S), K - i
            block = x.values[x.space.face_starts[start]:x.space.face_starts[stop]].reshape(stop - start, L.dim(k))
            if not block.any():
                continue
            solver = self.solver(("lift", S, k), lambda: L.partial(k + 1).to_dense())
            try:
                solution = raw(solver.solve(block.T))
            except NoSolution as e:
                raise NotACycle(f"local views of type {T} are not local boundaries") from e
            z[out.face_starts[start]:out.face_starts[stop]] = solution.T.ravel()
        return LocalViewCochain(out, z)

    def delta_solve(self, y: LocalViewCochain) -> LocalViewCochain:
        """Some z one level down with Delta z = y, solved per face u over the cube below u"""
        self._own(y)
        i, K = y.level, y.coefficient_level
        if i < 1:
            raise LevelOutOfRange(i, 1, K)
        if i < K and not self.apply_delta(y).is_zero():
            raise NotACocycle(f"Delta of the level-{i} cochain is not zero")

        out = self.space(i - 1, K)
        z = np.zeros(out.dim, dtype=np.int64)
        if y.is_zero():
            return LocalViewCochain(out, z)

        solver = self.solver(("cube", K, i), lambda: self.field(cube_coboundary(K, i)))
        upper_pairs, lower_pairs = y.space.cube_pairs(), out.cube_pairs()
        n_up, n_low = upper_pairs.shape[1], lower_pairs.shape[1]
        for T, (start, stop) in self.geometry.table(K).type_ranges.items():
            d = coeff_dim(T, self.SC.m)
            if d == 0:
                continue
            count = stop - start
            idx = y.space.starts[upper_pairs[start:stop]][..., None] + np.arange(d)
            Y = y.values[idx]
            if not Y.any():
                continue
            rhs = Y.transpose(1, 0, 2).reshape(n_up, count * d)
            try:
                Z = raw(solver.solve(rhs))
            except NoSolution as e:
                raise NotACocycle(f"views on faces of type {T} are not cube cocycles") from e
            Z = Z.reshape(n_low, count, d).transpose(1, 0, 2)
            z[out.starts[lower_pairs[start:stop]][..., None] + np.arange(d)] = Z

        result = LocalViewCochain(out, z)
        bound = 2 ** (2 * self.t) * self.geometry.n ** self.t * y.weight
        if result.weight > bound:
            logger.warning(f"Delta solve weight {result.weight} above bound {bound}")
        return result

    def stitch(self, z: LocalViewCochain) -> np.ndarray:
        """The global chain whose vertex views are z"""
        self._own(z)
        if z.level != 0:
            raise LevelOutOfRange(z.level, 0, 0)
        K = z.coefficient_level
        space = z.space
        x = np.zeros(self.SC.dim(K), dtype=np.int64)
        x[space.source] = z.values
        disagree = np.flatnonzero(x[space.source] != z.values)
        if disagree.size:
            pair = int(np.searchsorted(space.starts, disagree[0], side="right") - 1)
            u = self.geometry.faces(K)[int(space.targets[pair])]
            raise InconsistentViews(str(u), K)

        weight = int(block_weights(x, self.SC.block_sizes(K))[0]) if x.size else 0
        bound = 2 ** self.t * self.geometry.n ** self.t * z.weight
        if weight > bound:
            logger.warning(f"Stitched weight {weight} above bound {bound}")
        return x


def double_complex_checks(DC: DoubleComplex, samples: int = 100, seed: int = 0) -> List[CheckResult]:
    """Delta squares to zero, commutes with partial_L, is exact, and stitches views back"""
    SC, t, q = DC.SC, DC.t, DC.field.q
    rng = np.random.default_rng(seed)
    results = []

    squares, commutes = [], []
    for K in range(1, t + 1):
        for i in range(0, K - 1):
            product = DC.delta(i + 1, K) @ DC.delta(i, K)
            squares.append((i, K, product.nnz))
        for i in range(0, K - 1):
            left = DC.partial(i + 1, K) @ DC.delta(i, K)
            right = DC.delta(i, K - 1) @ DC.partial(i, K)
            commutes.append((i, K, left == right))
    results.append(check(
        "double.delta_squared", "local-view-coboundary-squares-to-zero",
        all(nnz == 0 for _, _, nnz in squares), levels=[[i, K] for i, K, _ in squares]
    ))
    results.append(check(
        "double.commutation", "link-boundary-commutes-with-delta",
        all(ok for _, _, ok in commutes), failures=[[i, K] for i, K, ok in commutes if not ok]
    ))

    views_ok, boundary_ok, stitch_ok, tested = True, True, True, 0
    for _ in range(samples):
        K = int(rng.integers(0, t + 1))
        x = rng.integers(0, q, size=SC.dim(K), dtype=np.int64)
        y = DC.views(x, 0, K)
        if K >= 1:
            views_ok &= DC.apply_delta(y).is_zero()
            boundary_ok &= np.array_equal(DC.apply_partial(y).values, DC.views(SC.partial(K).apply(x), 0, K - 1).values)
        stitch_ok &= np.array_equal(DC.stitch(y), x)
        tested += 1
    results.append(check("double.views_are_cocycles", "consistent-views-are-cocycles", views_ok, samples=tested))
    results.append(check("double.views_boundary", "views-commute-with-boundary", boundary_ok, samples=tested))
    results.append(check("double.stitch_round_trip", "stitched-views-recover-chain", stitch_ok, samples=tested))

    solve_ok, worst, solved = True, 0.0, 0
    pairs = [(i, K) for K in range(1, t + 1) for i in range(1, K + 1)]
    for s in range(samples if pairs else 0):
        i, K = pairs[s % len(pairs)]
        z0 = DC.random_cochain(i - 1, K, rng)
        y = DC.apply_delta(z0)
        z = DC.delta_solve(y)
        solve_ok &= np.array_equal(DC.apply_delta(z).values, y.values)
        if y.weight:
            ratio = z.weight / y.weight
            worst = max(worst, ratio)
            solve_ok &= ratio <= 2 ** (2 * t) * SC.geometry.n ** t
        solved += 1
    results.append(check(
        "double.delta_exact", "local-view-coboundary-exact",
        solve_ok, samples=solved, worst_weight_ratio=worst,
        bound=2 ** (2 * t) * SC.geometry.n ** t
    ))
    return results
