"""
Verification Suites
Step functions for the chain, local, walks and distance suites, and the
runner that loads a suite's YAML pipeline and collects its checks.

Every step is called as ``step(context, **kwargs)`` and returns a list of
CheckResult. Expensive shared objects (the double complex, distance reports,
robustness tables, Cayley spectra) are built once per context.
"""

import functools
import itertools
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .analysis import (
    DoubleComplex, DistanceReport, codistance_bound, cocycle_expansion_lower_bound, decoder_checks,
    distance_checks, distance_relation_check, distance_report, double_complex_checks, dual_checks, dual_complex,
    fill_checks, kappa_table
)
from .builders import ExpansionReport, estimate_expansion
from .core.batch_processor import BatchProcessor
from .core.config import BudgetConfig, WorkerConfig
from .core.logging import PerformanceLogger, get_logger
from .core.pipeline import PipelineManager, PipelineStatus, load_pipeline_from_config
from .css import build_css, code_params, css_checks, soundness_check
from .errors import BudgetExceeded
from .geometry import count_check, poset_check
from .local import (
    LocalComplex, TwoWayReport, exactness_check, local_global_check, robust_distance_check, tensor_kernel_check,
    two_way_robustness
)
from .manifest import Instance
from .reports import CheckResult, CheckStatus, check
from .sheaf import verify_chain
from .walks import (
    a_coeff_checks, a_table, adjointness_check, adversarial_sets, mixing_check, nb_inclusion_check,
    partition_check, quad_form_check, walk_checks, walk_Op, walk_W
)

logger = get_logger(__name__)
performance_logger = PerformanceLogger(logger)

SUITES = ("chain", "local", "walks", "distance", "all")
CONFIG_DIR = Path(__file__).parent / "pipeline_configs"


@dataclass
class SuiteContext:
    """Shared state of one verification run"""
    instance: Instance
    processor: BatchProcessor = field(default_factory=lambda: BatchProcessor(WorkerConfig(jobs=1)))
    seed: int = 0
    budgets: Optional[BudgetConfig] = None
    budget_exceeded: bool = False
    _cache: Dict[str, Any] = field(default_factory=dict, repr=False)
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    def __post_init__(self):
        if self.budgets is None:
            self.budgets = self.instance.manifest.budgets

    @property
    def complex(self):
        return self.instance.complex

    @property
    def geometry(self):
        return self.instance.geometry

    def cached(self, key: str, build: Callable[[], Any]) -> Any:
        with self._lock:
            if key not in self._cache:
                self._cache[key] = build()
            return self._cache[key]

    def double_complex(self) -> DoubleComplex:
        return self.cached("double_complex", lambda: DoubleComplex(self.complex))

    def robustness(self) -> TwoWayReport:
        return self.cached("robustness", lambda: two_way_robustness(
            self.complex.codes, self.budgets.enumeration, self.processor
        ))

    def distances(self, k: int) -> DistanceReport:
        return self.cached(f"distances[{k}]", lambda: distance_report(
            self.complex, k, self.budgets.enumeration, self.processor
        ))

    def spectra(self) -> List[ExpansionReport]:
        return self.cached("spectra", lambda: [
            estimate_expansion(self.geometry.N, A, self.budgets.dense_eigen)
            for A in self.instance.group.permsets
        ])

    def walk_constants(self):
        """lambda over all directions and the smallest double-cover component fraction"""
        spectra = self.spectra()
        return max(s.lambda_max for s in spectra), min(s.cover_r for s in spectra)


def suite_step(function: Callable[..., List[CheckResult]]) -> Callable[..., List[CheckResult]]:
    """Budget overruns become a partial check instead of failing the step"""
    @functools.wraps(function)
    def wrapper(ctx: SuiteContext, **kwargs) -> List[CheckResult]:
        try:
            return function(ctx, **kwargs)
        except BudgetExceeded as e:
            ctx.budget_exceeded = True
            logger.warning(f"Step {function.__name__} exceeded its budget: {e}")
            data = {"reason": str(e), "needed": e.needed, "budget": e.budget}
            if e.partial is not None:
                data["partial"] = e.partial
            return [CheckResult(f"{function.__name__}.budget", "within-budget", CheckStatus.PARTIAL, data)]
    return wrapper


# chain

@suite_step
def geometry_counts(ctx: SuiteContext) -> List[CheckResult]:
    return count_check(ctx.geometry)


@suite_step
def geometry_poset(ctx: SuiteContext) -> List[CheckResult]:
    return poset_check(ctx.geometry)


@suite_step
def chain_complex(ctx: SuiteContext, samples: int = 50) -> List[CheckResult]:
    return verify_chain(ctx.complex, samples=samples, seed=ctx.seed)


# local

@suite_step
def local_complexes(ctx: SuiteContext) -> List[CheckResult]:
    codes = ctx.complex.codes
    results = []
    for size in range(1, codes.t + 1):
        for S in itertools.combinations(range(codes.t), size):
            L = LocalComplex(S, codes)
            results.extend(L.self_check())
            results.extend(exactness_check(L))
            results.append(tensor_kernel_check(L))
    return results


@suite_step
def local_identification(ctx: SuiteContext, samples: int = 50) -> List[CheckResult]:
    SC, X = ctx.complex, ctx.geometry
    rng = np.random.default_rng(ctx.seed)
    results, locals_by_type = [], {}
    for _ in range(samples):
        level = int(rng.integers(SC.t))
        faces = X.faces(level)
        f = faces[int(rng.integers(len(faces)))]
        S = tuple(j for j in range(SC.t) if f.labels[j] < 0)
        if S not in locals_by_type:
            locals_by_type[S] = LocalComplex(S, SC.codes)
        results.append(local_global_check(SC, f, locals_by_type[S]))
    # one entry for the whole sample keeps the report short
    return [check("local.global_identification", "link-local-isomorphism", all(r.passed for r in results),
                  samples=len(results), failures=[r.data for r in results if not r.passed][:3])]


@suite_step
def local_robustness(ctx: SuiteContext) -> List[CheckResult]:
    report = ctx.robustness()
    status = CheckStatus.PARTIAL if report.partial else CheckStatus.PASS
    results = [CheckResult("local.two_way_robustness", "two-way-robustness", status, {
        "kappa_lower": report.kappa_lower, "kappa_upper": report.kappa_upper, "cells": report.cells,
    })]
    if report.partial:
        ctx.budget_exceeded = True
    results.extend(robust_distance_check(ctx.complex.codes, report))
    return results


# walks

@suite_step
def walk_adjointness(ctx: SuiteContext, samples: int = 100) -> List[CheckResult]:
    return [adjointness_check(ctx.geometry, level, samples, ctx.seed) for level in range(1, ctx.geometry.t + 1)]


@suite_step
def walk_partitions(ctx: SuiteContext, max_faces: Optional[int] = None) -> List[CheckResult]:
    return [partition_check(ctx.geometry, k, max_faces) for k in range(ctx.geometry.t)]


@suite_step
def walk_coefficients(ctx: SuiteContext, max_faces: Optional[int] = None) -> List[CheckResult]:
    X = ctx.geometry
    table = ctx.cached("a_table", lambda: a_table(X))
    results = a_coeff_checks(X, table)
    for (k, ell), a in sorted(table.items()):
        results.append(nb_inclusion_check(X, k, ell, a, max_faces))
    return results


@suite_step
def walk_operators(ctx: SuiteContext, sets: int = 8) -> List[CheckResult]:
    X = ctx.geometry
    lam, r = ctx.walk_constants()
    limit = ctx.budgets.explicit_walk
    results = []
    for k in range(X.t):
        named = adversarial_sets(X, k, sets, ctx.seed)
        for ell in range(k + 1):
            W = walk_W(X, k, ell, limit)
            Op = walk_Op(X, k, ell, limit)
            results.extend(walk_checks(W, Op, [index for _, index in named]))
            for label, index in named:
                results.append(quad_form_check(X, k, ell, index, lam, r, W, ctx.seed, label))
    return results


@suite_step
def walk_mixing(ctx: SuiteContext, samples: int = 50) -> List[CheckResult]:
    N = ctx.geometry.N
    return [
        mixing_check(N, A, report, samples, ctx.seed)
        for A, report in zip(ctx.instance.group.permsets, ctx.spectra())
    ]


# distance

@suite_step
def double_complex(ctx: SuiteContext, samples: int = 100) -> List[CheckResult]:
    return double_complex_checks(ctx.double_complex(), samples, ctx.seed)


@suite_step
def cycle_filling(ctx: SuiteContext, samples: int = 100) -> List[CheckResult]:
    return fill_checks(ctx.complex, samples, ctx.seed, ctx.double_complex())


@suite_step
def distances(ctx: SuiteContext, samples: int = 1000) -> List[CheckResult]:
    SC = ctx.complex
    results = []
    for k in range(SC.t + 1):
        report = ctx.distances(k)
        if any(entry.partial for entry in report.entries.values()):
            ctx.budget_exceeded = True
        results.append(CheckResult(f"distance.report[{k}]", "measured-distances", CheckStatus.PASS,
                                   {name: entry for name, entry in sorted(report.entries.items())}))
        results.extend(distance_checks(SC, report, samples, ctx.seed, ctx.budgets.enumeration))
    return results


@suite_step
def dual_relation(ctx: SuiteContext) -> List[CheckResult]:
    SC = ctx.complex
    dual = ctx.cached("dual", lambda: dual_complex(SC, seed=ctx.seed))
    results = dual_checks(SC, dual)
    for k in range(SC.t + 1):
        primal = ctx.distances(k).entries.get("mu_syst")
        results.append(distance_relation_check(SC, k, ctx.budgets.enumeration, ctx.processor, primal=primal))
    return results


@suite_step
def expansion_bounds(ctx: SuiteContext) -> List[CheckResult]:
    SC, X = ctx.complex, ctx.geometry
    results = []
    for i in range(SC.t):
        eps = ctx.distances(i).entries.get("eps_cocyc")
        coloc = ctx.distances(i + 1).entries.get("d_coloc")
        check_id = f"distance.cocycle_expansion_bound[{i}]"
        if eps is None or coloc is None or not (eps.exact and coloc.exact):
            results.append(CheckResult(check_id, "cocycle-expansion-from-colocal-distance", CheckStatus.SKIPPED,
                                       {"reason": "not both exact"}))
            continue
        bound = cocycle_expansion_lower_bound(SC, i, coloc.lower_bound)
        results.append(check(check_id, "cocycle-expansion-from-colocal-distance", bound <= eps.lower_bound,
                             bound=bound, eps_cocyc=eps.lower_bound))

    lam, r = ctx.walk_constants()
    kappa = kappa_table(ctx.robustness(), "primal")
    table = ctx.cached("a_table", lambda: a_table(X))
    for k in range(SC.t):
        coloc = ctx.distances(k).entries.get("d_coloc")
        measured = coloc.lower_bound if coloc is not None and coloc.exact else None
        bound = codistance_bound(kappa, lam, r, SC.t, X.n, k, table, X.num_faces(k), measured)
        check_id = f"distance.codistance_bound[{k}]"
        if bound.holds is None:
            results.append(CheckResult(check_id, "colocal-distance-lower-bound", CheckStatus.SKIPPED, bound.to_dict()))
        else:
            results.append(check(check_id, "colocal-distance-lower-bound", bound.holds, **bound.to_dict()))
    return results


@suite_step
def decoding(ctx: SuiteContext, levels: Optional[List[int]] = None) -> List[CheckResult]:
    SC = ctx.complex
    results = []
    for k in levels if levels is not None else range(SC.t):
        results.extend(decoder_checks(SC, k))
    return results


@suite_step
def css_codes(ctx: SuiteContext, draws: int = 256) -> List[CheckResult]:
    SC = ctx.complex
    results = []
    for i in range(1, SC.t):
        C = build_css(SC, i, manifest_hash=ctx.instance.manifest.hash)
        params = code_params(C, ctx.budgets.enumeration, processor=ctx.processor, draws=draws, seed=ctx.seed)
        entries = ctx.distances(i).entries
        blocks = [entries[name] for name in ("mu_syst", "mu_cosyst") if name in entries]
        results.extend(css_checks(C, params, blocks))
        eps_cyc, eps_cocyc = entries.get("eps_cyc"), entries.get("eps_cocyc")
        if eps_cyc is not None and eps_cocyc is not None:
            results.append(soundness_check(C, SC, eps_cyc.lower_bound, eps_cocyc.lower_bound,
                                           ctx.budgets.enumeration))
    return results


REGISTRY: Dict[str, Callable[..., List[CheckResult]]] = {
    "geometry_counts": geometry_counts,
    "geometry_poset": geometry_poset,
    "chain_complex": chain_complex,
    "local_complexes": local_complexes,
    "local_identification": local_identification,
    "local_robustness": local_robustness,
    "walk_adjointness": walk_adjointness,
    "walk_partitions": walk_partitions,
    "walk_coefficients": walk_coefficients,
    "walk_operators": walk_operators,
    "walk_mixing": walk_mixing,
    "double_complex": double_complex,
    "cycle_filling": cycle_filling,
    "distances": distances,
    "dual_relation": dual_relation,
    "expansion_bounds": expansion_bounds,
    "decoding": decoding,
    "css_codes": css_codes,
}


def run_suite(name: str, ctx: SuiteContext, config_path: Optional[Path] = None) -> List[CheckResult]:
    """Run a suite pipeline; failed or skipped steps are reported as checks"""
    if name not in SUITES and config_path is None:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    config = load_pipeline_from_config(str(config_path or CONFIG_DIR / f"{name}.yaml"), REGISTRY)
    performance_logger.start_timer(f"suite_{name}")
    manager = PipelineManager(config, ctx)
    results: List[CheckResult] = []
    for step in manager.run():
        if step.success:
            results.extend(step.value or [])
        elif step.status == PipelineStatus.SKIPPED:
            results.append(CheckResult(f"{name}.step[{step.step_name}]", "step-completed", CheckStatus.SKIPPED,
                                       {"reason": step.error_message}))
        else:
            results.append(CheckResult(f"{name}.step[{step.step_name}]", "step-completed", CheckStatus.FAIL,
                                       {"error": step.error_message}))
    failed = sum(1 for r in results if not r.passed)
    performance_logger.end_timer(f"suite_{name}", checks=len(results), failed=failed)
    logger.info(f"Suite {name}: {len(results)} checks, {failed} failed")
    return results
