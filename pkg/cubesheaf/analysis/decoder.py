"""
Small-Set Flip Decoding
Syndrome decoding for errors on level-k cochains: at each face v of a chosen
level the decoder tries local cochains supported in the link of v, and applies
the first one that lowers the block weight of the syndrome.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.batch_processor import BatchProcessor, task_rngs
from ..core.config import WorkerConfig, get_config
from ..core.logging import PerformanceLogger, get_logger
from ..ff2e import FieldMatrix, block_weights, coefficient_block, kernel_matrix, raw
from ..geometry import Face
from ..local import LocalComplex, local_to_global_map
from ..reports import CheckResult, check
from ..sheaf import SheafComplex

logger = get_logger(__name__)
performance_logger = PerformanceLogger(logger)


class DecodeStatus(Enum):
    SUCCESS = "success"
    STALLED = "stalled"


@dataclass
class DecodeResult:
    status: DecodeStatus
    estimate: np.ndarray
    residual: np.ndarray
    iterations: int
    flips: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.status == DecodeStatus.SUCCESS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "iterations": self.iterations,
            "residual_weight": int(np.count_nonzero(self.residual)),
            "estimate_weight": int(np.count_nonzero(self.estimate)),
        }


@dataclass
class _FlipTable:
    """Candidate local cochains and their local coboundaries for one face type"""
    local: LocalComplex
    candidates: np.ndarray
    images: np.ndarray
    image_sizes: np.ndarray


class SmallSetFlipDecoder:
    """Greedy local-flip decoder for syndromes of delta_k

    ``levels`` selects the faces whose links host flips (all of 0..k by
    default). Links with at most ``flip_budget`` nonzero local cochains are
    searched exhaustively; larger ones only try single-coordinate flips.
    """

    def __init__(self, SC: SheafComplex, k: int, levels: Optional[Sequence[int]] = None,
                 flip_budget: Optional[int] = None):
        SC.geometry.check_level(k, 0, SC.t - 1)
        self.SC = SC
        self.k = k
        self.levels = tuple(sorted(set(levels))) if levels is not None else tuple(range(k + 1))
        for level in self.levels:
            if not 0 <= level <= k:
                raise ValueError(f"flip level {level} outside [0, {k}]")
        self.flip_budget = flip_budget or get_config().budgets.flip_enumeration
        self.delta: FieldMatrix = SC.delta(k)
        self.syndrome_sizes = SC.block_sizes(k + 1)
        self._tables: Dict[Tuple[int, ...], _FlipTable] = {}
        self._coords: Dict[Face, Tuple[np.ndarray, np.ndarray]] = {}

    def _table(self, face: Face) -> _FlipTable:
        S = tuple(j for j in range(self.SC.t) if j not in face.type)
        table = self._tables.get(S)
        if table is None:
            L = LocalComplex(S, self.SC.codes)
            level = self.k - face.dim
            d = L.dim(level)
            q = self.SC.field.q
            if q ** d - 1 <= self.flip_budget:
                candidates = coefficient_block(q, d, 1, q ** d)
            else:
                values = np.arange(1, q, dtype=np.int64)
                candidates = np.zeros((d * (q - 1), d), dtype=np.int64)
                candidates[np.arange(d * (q - 1)), np.repeat(np.arange(d), q - 1)] = np.tile(values, d)
            images = L.delta(level).apply(candidates.T).T
            table = _FlipTable(L, candidates, images, L.block_sizes(level + 1))
            self._tables[S] = table
            logger.debug(f"Flip table for directions {S}: {candidates.shape[0]} candidates")
        return table

    def _face_coords(self, face: Face, table: _FlipTable) -> Tuple[np.ndarray, np.ndarray]:
        coords = self._coords.get(face)
        if coords is None:
            level = self.k - face.dim
            coords = (local_to_global_map(self.SC, face, table.local, level),
                      local_to_global_map(self.SC, face, table.local, level + 1))
            self._coords[face] = coords
        return coords

    def _first_flip(self, residual: np.ndarray) -> Optional[Tuple[int, Face, np.ndarray, np.ndarray, int]]:
        X = self.SC.geometry
        for level in self.levels:
            for face in X.faces(level):
                table = self._table(face)
                cols, rows = self._face_coords(face, table)
                local = residual[rows]
                if not local.any():
                    continue
                before = int(block_weights(local, table.image_sizes)[0])
                after = block_weights(local[None, :] ^ table.images, table.image_sizes)
                better = np.flatnonzero(after < before)
                if better.size:
                    c = int(better[0])
                    return level, face, cols, rows, c
        return None

    def decode(self, syndrome, max_iters: Optional[int] = None) -> DecodeResult:
        residual = raw(syndrome).copy()
        if residual.shape != (self.delta.nrows,):
            raise ValueError(f"syndrome has shape {residual.shape}, expected ({self.delta.nrows},)")
        estimate = np.zeros(self.delta.ncols, dtype=np.int64)
        max_iters = max_iters if max_iters is not None else self.SC.geometry.num_faces(self.k + 1)
        flips = []
        iterations = 0
        while residual.any() and iterations < max_iters:
            found = self._first_flip(residual)
            if found is None:
                break
            level, face, cols, rows, c = found
            table = self._table(face)
            estimate[cols] ^= table.candidates[c]
            residual[rows] ^= table.images[c]
            flips.append((level, self.SC.geometry.index(face)))
            iterations += 1
        status = DecodeStatus.STALLED if residual.any() else DecodeStatus.SUCCESS
        return DecodeResult(status, estimate, residual, iterations, flips)


def small_set_flip_decode(SC: SheafComplex, k: int, syndrome, levels: Optional[Sequence[int]] = None,
                          flip_budget: Optional[int] = None, max_iters: Optional[int] = None) -> DecodeResult:
    """Estimate x with delta_k x = syndrome by greedy local flips"""
    return SmallSetFlipDecoder(SC, k, levels, flip_budget).decode(syndrome, max_iters)


def _coboundary_test(SC: SheafComplex, k: int):
    """v is in im delta_{k-1} iff it is orthogonal to ker partial_k"""
    if k == 0:
        return lambda v: not np.any(v)
    keys = raw(kernel_matrix(SC.partial(k)))
    return lambda v: not np.any(SC.field.matmul(keys, v)) if keys.size else True


def _sample_error(SC: SheafComplex, k: int, rng: np.random.Generator, weight: Optional[int],
                  p: Optional[float]) -> np.ndarray:
    F = SC.field
    sizes = SC.block_sizes(k)
    offsets = SC.offsets(k)
    e = np.zeros(SC.dim(k), dtype=np.int64)
    if weight is not None:
        blocks = np.flatnonzero(sizes)
        for b in rng.choice(blocks, size=min(weight, blocks.size), replace=False):
            start, stop = int(offsets[b]), int(offsets[b + 1])
            while not e[start:stop].any():
                e[start:stop] = rng.integers(0, F.q, size=stop - start)
    else:
        hit = rng.random(e.size) < p
        e[hit] = rng.integers(1, F.q, size=int(hit.sum()))
    return e


def simulate_decoding(
    SC: SheafComplex,
    k: int,
    weights: Optional[Sequence[int]] = None,
    p: Optional[Sequence[float]] = None,
    shots: int = 100,
    seed: int = 0,
    syndrome_noise: float = 0.0,
    processor: Optional[BatchProcessor] = None,
    levels: Optional[Sequence[int]] = None
) -> pd.DataFrame:
    """Monte Carlo success rates per block weight (or per error rate p)"""
    if (weights is None) == (p is None):
        raise ValueError("give exactly one of weights or p")
    processor = processor or BatchProcessor(WorkerConfig(jobs=1))
    decoder = SmallSetFlipDecoder(SC, k, levels)
    # warm the shared caches before threads read them
    for level in decoder.levels:
        for face in SC.geometry.faces(level):
            decoder._face_coords(face, decoder._table(face))
    in_image = _coboundary_test(SC, k)
    points = [("weight", w) for w in weights] if weights is not None else [("p", x) for x in p]
    rngs = task_rngs(seed, len(points) * shots)
    F = SC.field

    def run(task: Tuple[int, int]) -> Dict[str, Any]:
        point, shot = task
        kind, value = points[point]
        rng = rngs[point * shots + shot]
        e = _sample_error(SC, k, rng, value if kind == "weight" else None, value if kind == "p" else None)
        syndrome = decoder.delta.apply(e)
        if syndrome_noise > 0:
            noisy = rng.random(syndrome.size) < syndrome_noise
            syndrome[noisy] ^= rng.integers(1, F.q, size=int(noisy.sum()))
        result = decoder.decode(syndrome)
        ok = in_image(e ^ result.estimate)
        if syndrome_noise == 0:
            ok = ok and result.success
        return {kind: value, "success": bool(ok), "iterations": result.iterations,
                "stalled": not result.success}

    tasks = [(i, s) for i in range(len(points)) for s in range(shots)]
    performance_logger.start_timer("simulate_decoding")
    rows = processor.map(run, tasks, label="simulate_decoding")
    kind = points[0][0] if points else "weight"
    frame = pd.DataFrame(rows, columns=[kind, "success", "iterations", "stalled"])
    summary = frame.groupby(kind, sort=False).agg(
        shots=("success", "size"),
        successes=("success", "sum"),
        stalled=("stalled", "sum"),
        mean_iterations=("iterations", "mean"),
    ).reset_index()
    summary["success_rate"] = summary["successes"] / summary["shots"]
    for row in summary.itertuples(index=False):
        performance_logger.log_metric("decode_success_rate", float(row.success_rate), level=k,
                                      point=float(getattr(row, kind)), shots=int(row.shots))
    performance_logger.end_timer("simulate_decoding", level=k, shots=len(tasks))
    return summary


def decoder_checks(SC: SheafComplex, k: int = 0) -> List[CheckResult]:
    """Every single-block error is decoded up to a coboundary

    Blocks with more than ``flip_budget`` nonzero values only try multiples of
    unit vectors.
    """
    decoder = SmallSetFlipDecoder(SC, k)
    in_image = _coboundary_test(SC, k)
    q = SC.field.q
    offsets = SC.offsets(k)
    failures = []
    tested = sampled = 0
    for b in range(SC.geometry.num_faces(k)):
        start, stop = int(offsets[b]), int(offsets[b + 1])
        d = stop - start
        if d == 0:
            continue
        if q ** d - 1 <= decoder.flip_budget:
            values = coefficient_block(q, d, 1, q ** d)
        else:
            sampled += 1
            values = np.kron(np.eye(d, dtype=np.int64), np.arange(1, q, dtype=np.int64)[:, None])
        for value in values:
            e = np.zeros(SC.dim(k), dtype=np.int64)
            e[start:stop] = value
            result = decoder.decode(decoder.delta.apply(e))
            tested += 1
            if not (result.success and in_image(e ^ result.estimate)):
                failures.append(b)
    return [check(f"decoder.single_block[{k}]", "small-set-flip-corrects-light-errors",
                  not failures, tested=tested, sampled_blocks=sampled, failures=sorted(set(failures))[:20])]
