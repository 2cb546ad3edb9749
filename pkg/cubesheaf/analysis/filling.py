"""
Cycle Filling
Constructive filling of k-cycles by (k+1)-chains through the double complex of
local views. Local views are lifted through link exactness and pushed up with
Delta until they vanish, or until they reach the top of every link, where the
tensor codewords are decoded into a cochain of the dual complex and filled
there. The corrections are then pulled back down with the Delta solver and the
vertex views are stitched into a global chain.
"""

import functools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.logging import PerformanceLogger, get_logger
from ..errors import ConstructionError, CubeSheafError
from ..ff2e import DimensionMismatch, LinearSolver, NoSolution, block_weights, kernel_matrix, raw
from ..reports import CheckResult, CheckStatus, check
from ..sheaf import LocalCodes, SheafComplex
from .double import DoubleComplex, LocalViewCochain, NotACycle

logger = get_logger(__name__)
performance_logger = PerformanceLogger(logger)


class Obstruction(CubeSheafError):
    """The cycle represents a nontrivial homology class

    ``witness`` is the cycle, ``dual_cocycle`` the decoded cochain of the dual
    complex that is not a coboundary.
    """

    def __init__(self, level: int, witness: np.ndarray, dual_cocycle: np.ndarray):
        super().__init__(f"level-{level} cycle is not a boundary")
        self.level = level
        self.witness = witness
        self.dual_cocycle = dual_cocycle


def fill_bound(t: int, n: int) -> int:
    """Weight factor allowed for a filling: (t^2 2^{2t} n^{t+1})^t"""
    return (t * t * 2 ** (2 * t) * n ** (t + 1)) ** t


@dataclass
class FillResult:
    """A filling z of x with the weights met along the way"""
    level: int
    z: np.ndarray
    path: str
    exit_stage: Optional[int] = None
    x_weight: int = 0
    z_weight: int = 0
    stage_weights: List[int] = field(default_factory=list)
    bound: int = 0

    @property
    def ratio(self) -> float:
        return self.z_weight / self.x_weight if self.x_weight else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "level": self.level,
            "path": self.path,
            "exit_stage": self.exit_stage,
            "x_weight": self.x_weight,
            "z_weight": self.z_weight,
            "stage_weights": self.stage_weights,
            "bound": self.bound,
        }


def encoding_matrix(codes: LocalCodes, S: Sequence[int]) -> np.ndarray:
    """Kronecker product of (h_j^perp)^T over j in S, directions increasing

    Rows are indexed by generator tuples (row-major), columns by coefficients of
    the dual code on the same directions.
    """
    F = codes.field
    E = np.ones((1, 1), dtype=np.int64)
    for j in S:
        A = codes.duals[j].T
        E = F.mul(E[:, None, :, None], A[None, :, None, :]).reshape(E.shape[0] * A.shape[0], E.shape[1] * A.shape[1])
    return E


@functools.lru_cache(maxsize=None)
def _encoding_solver(codes: LocalCodes, S: Tuple[int, ...]) -> LinearSolver:
    return LinearSolver(encoding_matrix(codes, S), codes.field)


def _decode_views(DC: DoubleComplex, top: LocalViewCochain) -> np.ndarray:
    """Per-face preimages of tensor codewords, as a cochain of the dual complex"""
    SC, dual = DC.SC, DC.dual
    level = top.level
    out = np.zeros(dual.dim(level), dtype=np.int64)
    offsets = dual.offsets(level)
    for T, (start, stop) in DC.geometry.table(level).type_ranges.items():
        S = DC.complement(T)
        block = top.values[top.space.face_starts[start]:top.space.face_starts[stop]].reshape(stop - start, -1)
        if not block.any():
            continue
        try:
            solution = raw(_encoding_solver(SC.codes, S).solve(block.T))
        except NoSolution as e:
            raise ConstructionError(f"top views of type {T} are not tensor codewords") from e
        out[offsets[start]:offsets[stop]] = solution.T.ravel()
    return out


def _encode_cochain(DC: DoubleComplex, u: np.ndarray, level: int) -> LocalViewCochain:
    """Re-encode a dual cochain face by face into top-level local views"""
    SC, dual = DC.SC, DC.dual
    space = DC.space(level, DC.t)
    out = np.zeros(space.dim, dtype=np.int64)
    offsets = dual.offsets(level)
    for T, (start, stop) in DC.geometry.table(level).type_ranges.items():
        E = encoding_matrix(SC.codes, DC.complement(T))
        block = u[offsets[start]:offsets[stop]].reshape(stop - start, E.shape[1])
        if not block.any():
            continue
        out[space.face_starts[start]:space.face_starts[stop]] = SC.field.matmul(E, block.T).T.ravel()
    return DC.cochain(level, DC.t, out)


def _is_boundary(DC: DoubleComplex, x: np.ndarray, k: int) -> bool:
    return DC.solver(("boundary", k + 1), lambda: DC.SC.partial(k + 1).to_dense()).consistent(x)


def fill_cycle(SC: SheafComplex, x, k: int, DC: Optional[DoubleComplex] = None) -> FillResult:
    """Some z in C_{k+1} with partial z = x, or Obstruction when x is not a boundary"""
    X, t = SC.geometry, SC.t
    X.check_level(k, 0, t - 1)
    DC = DC or DoubleComplex(SC)
    x = raw(x)
    if x.shape != (SC.dim(k),):
        raise DimensionMismatch(f"chain has shape {x.shape}, C_{k} has dimension {SC.dim(k)}")
    if k >= 1 and np.any(SC.partial(k).apply(x)):
        raise NotACycle(f"boundary of the level-{k} chain is not zero")

    bound = fill_bound(t, X.n)
    if not np.any(x):
        return FillResult(level=k, z=np.zeros(SC.dim(k + 1), dtype=np.int64), path="zero", bound=bound)

    performance_logger.start_timer("fill_cycle")
    x_weight = int(block_weights(x, SC.block_sizes(k))[0])
    views = DC.views(x, 0, k)
    if views.weight > 2 ** k * x_weight:
        raise ConstructionError(f"vertex views of weight {views.weight} exceed 2^{k} * {x_weight}")

    xs: List[LocalViewCochain] = [views]
    zs: List[LocalViewCochain] = []
    exit_stage = None
    for r in range(t - k):
        z_r = DC.lift(xs[r])
        if not np.array_equal(DC.apply_partial(z_r).values, xs[r].values):
            raise ConstructionError(f"local lift at stage {r} does not reproduce its views")
        zs.append(z_r)
        xs.append(DC.apply_delta(z_r))
        if xs[-1].is_zero():
            exit_stage = r
            break

    if exit_stage is None:
        path = "dual-fill"
        top = xs[-1]
        decoded = _decode_views(DC, top)
        try:
            dual_delta = DC.solver(("dual-delta", top.level - 1), lambda: DC.dual.delta(top.level - 1).to_dense())
            u = raw(dual_delta.solve(decoded))
        except NoSolution:
            if _is_boundary(DC, x, k):
                raise ConstructionError(f"dual fill failed for a level-{k} boundary")
            performance_logger.end_timer("fill_cycle", level=k, path="obstruction")
            raise Obstruction(k, x, decoded)
        correction = _encode_cochain(DC, u, top.level - 1)
        if not np.array_equal(DC.apply_delta(correction).values, top.values):
            raise ConstructionError("re-encoded dual fill does not cancel the top views")
        zs[-1] = zs[-1] + correction
        start = len(zs) - 1
    else:
        path = "early-exit"
        start = exit_stage

    current = zs[start]
    for r in range(start, 0, -1):
        correction = DC.delta_solve(current)
        current = zs[r - 1] + DC.apply_partial(correction)

    z = DC.stitch(current)
    if not np.array_equal(SC.partial(k + 1).apply(z), x):
        raise ConstructionError(f"filling of the level-{k} cycle does not reproduce it")

    z_weight = int(block_weights(z, SC.block_sizes(k + 1))[0])
    if z_weight > bound * x_weight:
        logger.warning(f"Filling weight {z_weight} above {bound} * {x_weight}")
    performance_logger.end_timer("fill_cycle", level=k, path=path, x_weight=x_weight, z_weight=z_weight)
    return FillResult(
        level=k, z=z, path=path, exit_stage=exit_stage, x_weight=x_weight, z_weight=z_weight,
        stage_weights=[y.weight for y in xs], bound=bound
    )


def _cycle_basis(SC: SheafComplex, k: int) -> np.ndarray:
    if k == 0:
        return np.eye(SC.dim(0), dtype=np.int64)
    return raw(kernel_matrix(SC.partial(k)))


def fill_checks(SC: SheafComplex, samples: int = 100, seed: int = 0, DC: Optional[DoubleComplex] = None) -> List[CheckResult]:
    """Fillings of random boundaries, and Obstruction exactly on non-boundaries"""
    DC = DC or DoubleComplex(SC)
    F, t = SC.field, SC.t
    rng = np.random.default_rng(seed)
    results = []

    for k in range(t):
        filled, worst = 0, 0.0
        for _ in range(samples):
            z0 = rng.integers(0, F.q, size=SC.dim(k + 1), dtype=np.int64)
            x = SC.partial(k + 1).apply(z0)
            try:
                result = fill_cycle(SC, x, k, DC)
            except Obstruction:
                continue
            filled += 1
            worst = max(worst, result.ratio)
        results.append(check(
            f"fill.boundaries[{k}]", "boundaries-are-filled",
            filled == samples, filled=filled, samples=samples, worst_weight_ratio=worst,
            bound=fill_bound(t, SC.geometry.n)
        ))

        cycles = _cycle_basis(SC, k)
        if cycles.shape[0] == 0:
            results.append(CheckResult(f"fill.homology[{k}]", "obstruction-iff-nontrivial", CheckStatus.SKIPPED,
                                       {"reason": "no cycles"}))
            continue
        agree, obstructions, tested = 0, 0, 0
        # half basis rows, half random combinations
        candidates = list(cycles[:max(samples // 2, 1)])
        candidates += [F.matmul(rng.integers(0, F.q, size=cycles.shape[0]), cycles)
                       for _ in range(max(samples - len(candidates), 0))]
        for x in candidates:
            expected = _is_boundary(DC, x, k)
            try:
                fill_cycle(SC, x, k, DC)
                agree += expected
            except Obstruction:
                obstructions += 1
                agree += not expected
            tested += 1
        results.append(check(
            f"fill.homology[{k}]", "obstruction-iff-nontrivial",
            agree == tested, tested=tested, agreed=agree, obstructions=obstructions
        ))
    return results
