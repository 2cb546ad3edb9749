"""
Batch Processing
Runs independent measurement tasks on a thread pool and merges the results in
batch order, so the output never depends on the worker count.
"""

import logging
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
import threading
import time

import numpy as np

from .config import WorkerConfig
from .logging import PerformanceLogger, get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class BatchStatus(Enum):
    """Batch processing status"""
    PENDING = "pending"
    PROCESSING = "processing"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class BatchResult:
    """Result of one batch"""
    batch_id: int
    status: BatchStatus
    values: List[Any] = field(default_factory=list)
    error: Optional[BaseException] = None
    duration: float = 0.0

    @property
    def processed_count(self) -> int:
        return len(self.values)


@dataclass
class ProcessingStats:
    """Processing statistics"""
    total_batches: int = 0
    completed_batches: int = 0
    failed_batches: int = 0
    total_processed: int = 0
    start_time: float = field(default_factory=time.perf_counter)
    end_time: Optional[float] = None

    @property
    def success_rate(self) -> float:
        """Calculate success rate"""
        if self.total_batches == 0:
            return 0.0
        return self.completed_batches / self.total_batches

    @property
    def duration(self) -> float:
        """Calculate total duration"""
        end = self.end_time or time.perf_counter()
        return end - self.start_time

    @property
    def throughput(self) -> float:
        """Calculate items per second"""
        if self.duration == 0:
            return 0.0
        return self.total_processed / self.duration


def task_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """Independent random streams per task index, derived from the master seed"""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


class BatchProcessor:
    """Thread-pool batch processor with ordered, deterministic merging"""

    def __init__(self, config: Optional[WorkerConfig] = None):
        self.config = config or WorkerConfig()
        self._performance_logger = PerformanceLogger(logger)
        self._stats = ProcessingStats()
        self._results: Dict[int, BatchResult] = {}
        self._lock = threading.Lock()

    @property
    def stats(self) -> ProcessingStats:
        return self._stats

    def map(
        self,
        func: Callable[[T], R],
        items: Sequence[T],
        batch_size: Optional[int] = None,
        label: str = "batch_map"
    ) -> List[R]:
        """Apply ``func`` to every item; results come back in item order"""
        batch_size = batch_size or self.config.batch_size
        batches = self._create_batches(list(items), batch_size)

        self._stats = ProcessingStats(total_batches=len(batches))
        self._results = {}
        self._performance_logger.start_timer(label)

        if self.config.jobs <= 1 or len(batches) <= 1:
            for batch_id, batch in enumerate(batches):
                self._handle_batch_result(self._process_single_batch(batch_id, batch, func))
        else:
            with ThreadPoolExecutor(max_workers=self.config.jobs) as executor:
                futures = [
                    executor.submit(self._process_single_batch, batch_id, batch, func)
                    for batch_id, batch in enumerate(batches)
                ]
                for future in as_completed(futures):
                    self._handle_batch_result(future.result())

        self._stats.end_time = time.perf_counter()
        self._performance_logger.end_timer(
            label,
            total_batches=self._stats.total_batches,
            failed_batches=self._stats.failed_batches,
            throughput=self._stats.throughput
        )

        ordered = [self._results[batch_id] for batch_id in range(len(batches))]
        for result in ordered:
            if result.status == BatchStatus.FAILED:
                raise result.error
        return [value for result in ordered for value in result.values]

    def map_reduce(
        self,
        func: Callable[[T], R],
        items: Sequence[T],
        reduce: Callable[[Any, R], Any],
        initial: Any,
        batch_size: Optional[int] = None,
        label: str = "batch_map_reduce"
    ) -> Any:
        """Map in parallel, then fold results left-to-right in item order"""
        accumulator = initial
        for value in self.map(func, items, batch_size=batch_size, label=label):
            accumulator = reduce(accumulator, value)
        return accumulator

    def _create_batches(self, items: List[Any], batch_size: int) -> List[List[Any]]:
        """Create batches from items"""
        return [items[i:i + batch_size] for i in range(0, len(items), batch_size)]

    def _process_single_batch(
        self,
        batch_id: int,
        batch: List[Any],
        func: Callable[[Any], Any]
    ) -> BatchResult:
        """Process a single batch"""
        start_time = time.perf_counter()
        result = BatchResult(batch_id=batch_id, status=BatchStatus.PROCESSING)

        try:
            result.values = [func(item) for item in batch]
            result.status = BatchStatus.COMPLETED
        except Exception as e:
            result.status = BatchStatus.FAILED
            result.error = e
            logger.error(f"Batch {batch_id} failed: {e}")
        finally:
            result.duration = time.perf_counter() - start_time

        return result

    def _handle_batch_result(self, result: BatchResult) -> None:
        """Record a finished batch"""
        with self._lock:
            self._results[result.batch_id] = result

            if result.status == BatchStatus.COMPLETED:
                self._stats.completed_batches += 1
                self._stats.total_processed += result.processed_count
            else:
                self._stats.failed_batches += 1

            logger.debug(
                f"Batch {result.batch_id} {result.status.value}: "
                f"{result.processed_count} items ({result.duration:.2f}s)"
            )

    def get_progress(self) -> Dict[str, Any]:
        """Get current processing progress"""
        with self._lock:
            return {
                "total_batches": self._stats.total_batches,
                "completed_batches": self._stats.completed_batches,
                "failed_batches": self._stats.failed_batches,
                "success_rate": self._stats.success_rate,
                "total_processed": self._stats.total_processed,
                "duration": self._stats.duration,
                "throughput": self._stats.throughput
            }
