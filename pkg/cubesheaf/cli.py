"""
Command Line
Build bundles from manifests, run verification suites, search for robust
local codes, measure distances, simulate decoding and export CSS matrices.

Exit codes: 0 success, 2 manifest or bundle problems, 3 construction
failures, 4 failed checks, 5 budget exceeded (partial results are written).
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from .analysis import brute_mu, d_coloc, expansion, simulate_decoding
from .bundle import read_bundle, write_bundle
from .core.batch_processor import BatchProcessor
from .core.config import get_config
from .core.logging import get_logger, setup_logging
from .css import FORMATS, build_css, export_code
from .errors import BudgetExceeded, ConstructionError, CubeSheafError, ManifestError
from .geometry import count_check
from .local import search_robust_tuple
from .manifest import Instance, build_instance, load_manifest
from .reports import all_passed, build_report, dumps, to_jsonable, write_json
from .sheaf import verify_chain
from .suites import SUITES, SuiteContext, run_suite

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_MANIFEST = 2
EXIT_CONSTRUCTION = 3
EXIT_CHECKS = 4
EXIT_BUDGET = 5

DISTANCE_MODES = ("syst", "cosyst", "coloc", "cyc", "cocyc")


def _floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def create_parser() -> argparse.ArgumentParser:
    jobs = get_config().workers.jobs
    parser = argparse.ArgumentParser(
        prog="cubesheaf",
        description="Cubical sheaf complexes over GF(2^e): build, verify and extract codes",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py build manifests/z2e_t2_n3.json --out bundles/ref
  python main.py verify bundles/ref --suite all --out report.json
  python main.py search --t 2 --n 3 --m 1,1 --q 2 --exhaust
  python main.py distance bundles/ref --level 1 --mode cosyst
  python main.py decode-sim bundles/ref --level 0 --p 0.01 --shots 1000 --seed 7
  python main.py export bundles/ref --level 1 --format alist --out codes/
        """
    )
    parser.add_argument("--jobs", type=int, default=jobs,
                        help=f"Worker threads (default: {jobs}, can be set with HDX_JOBS env var)")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="Build an instance bundle from a manifest")
    build.add_argument("manifest", help="Manifest file (JSON or YAML)")
    build.add_argument("--out", help="Bundle directory (default: bundles/<name>)")
    build.add_argument("--budget", type=int, help="Enumeration budget override")

    verify = sub.add_parser("verify", help="Run a verification suite on a bundle")
    verify.add_argument("bundle", help="Bundle directory")
    verify.add_argument("--suite", choices=SUITES, default="all")
    verify.add_argument("--seed", type=int, help="Master seed (default: the manifest seed)")
    verify.add_argument("--budget", type=int, help="Enumeration budget override")
    verify.add_argument("--out", help="Report file (default: <bundle>/report_<suite>.json)")

    search = sub.add_parser("search", help="Search for a two-way robust tuple of check matrices")
    search.add_argument("--t", type=int, required=True, help="Number of directions")
    search.add_argument("--n", type=int, required=True, help="Generators per direction")
    search.add_argument("--m", type=_ints, help="Check rows per direction, comma separated (default: 1 each)")
    search.add_argument("--q", type=int, default=2, help="Field size, a power of two (default: 2)")
    search.add_argument("--trials", type=int, default=100)
    search.add_argument("--exhaust", action="store_true", help="Enumerate every full-rank tuple")
    search.add_argument("--seed", type=int, default=0)
    search.add_argument("--budget", type=int, help="Enumeration budget override")
    search.add_argument("--out", help="Report file (default: stdout)")

    distance = sub.add_parser("distance", help="Measure a distance or expansion at one level")
    distance.add_argument("bundle", help="Bundle directory")
    distance.add_argument("--level", type=int, required=True)
    distance.add_argument("--mode", choices=DISTANCE_MODES, default="syst")
    distance.add_argument("--budget", type=int, help="Enumeration budget override")
    distance.add_argument("--seed", type=int, default=0)
    distance.add_argument("--out", help="Report file (default: stdout)")

    decode = sub.add_parser("decode-sim", help="Monte Carlo small-set flip decoding")
    decode.add_argument("bundle", help="Bundle directory")
    decode.add_argument("--level", type=int, default=0)
    group = decode.add_mutually_exclusive_group(required=True)
    group.add_argument("--p", type=_floats, help="Error rates, comma separated")
    group.add_argument("--weights", type=_ints, help="Block error weights, comma separated")
    decode.add_argument("--shots", type=int, default=100)
    decode.add_argument("--seed", type=int, default=0)
    decode.add_argument("--syndrome-noise", type=float, default=0.0)
    decode.add_argument("--out", help="Curve file (default: stdout)")

    export = sub.add_parser("export", help="Export the CSS check matrices of one level")
    export.add_argument("bundle", help="Bundle directory")
    export.add_argument("--level", type=int, required=True)
    export.add_argument("--format", choices=FORMATS, default="alist")
    export.add_argument("--out", required=True, help="Output directory")
    return parser


def _emit(document: Dict[str, Any], out: Optional[str]) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        write_json(out, document)
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(dumps(document))


def _with_budget(instance: Instance, budget: Optional[int]) -> Instance:
    if budget:
        instance.manifest.budgets = replace(instance.manifest.budgets, enumeration=budget)
    return instance


def cmd_build(args, processor: BatchProcessor) -> int:
    manifest = load_manifest(args.manifest)
    if args.budget:
        manifest.budgets = replace(manifest.budgets, enumeration=args.budget)
    instance = build_instance(manifest, processor)
    instance.complex.codes.validate()
    checks = count_check(instance.geometry) + verify_chain(instance.complex, seed=manifest.seed)
    report = build_report("build", checks, manifest.hash, manifest.seed)
    out = Path(args.out) if args.out else Path("bundles") / manifest.name
    write_bundle(out, instance, report)
    return EXIT_OK if all_passed(checks) else EXIT_CHECKS


def cmd_verify(args, processor: BatchProcessor) -> int:
    instance = _with_budget(read_bundle(args.bundle), args.budget)
    manifest = instance.manifest
    seed = manifest.seed if args.seed is None else args.seed
    ctx = SuiteContext(instance=instance, processor=processor, seed=seed)
    checks = run_suite(args.suite, ctx)
    report = build_report(args.suite, checks, manifest.hash, seed)
    _emit(report, args.out or str(Path(args.bundle) / f"report_{args.suite}.json"))
    if not all_passed(checks):
        return EXIT_CHECKS
    return EXIT_BUDGET if ctx.budget_exceeded else EXIT_OK


def cmd_search(args, processor: BatchProcessor) -> int:
    if args.q < 2 or args.q & (args.q - 1):
        raise ManifestError(f"--q must be a power of two, got {args.q}")
    e = args.q.bit_length() - 1
    m = args.m or [1] * args.t
    report = search_robust_tuple(args.t, args.n, m, e, args.trials, budget=args.budget, seed=args.seed,
                                 processor=processor, exhaust=args.exhaust or None)
    document = {"schema": 1, "command": "search", **report.to_dict()}
    _emit(document, args.out)
    if report.best_report is not None and report.best_report.partial:
        return EXIT_BUDGET
    return EXIT_OK if report.best is not None else EXIT_CONSTRUCTION


def cmd_distance(args, processor: BatchProcessor) -> int:
    instance = read_bundle(args.bundle)
    SC = instance.complex
    budget = args.budget or instance.manifest.budgets.enumeration
    measures = {
        "syst": lambda: brute_mu(SC, args.level, "syst", budget, processor=processor, seed=args.seed),
        "cosyst": lambda: brute_mu(SC, args.level, "cosyst", budget, processor=processor, seed=args.seed),
        "coloc": lambda: d_coloc(SC, args.level, budget, processor=processor),
        "cyc": lambda: expansion(SC, args.level, "cyc", budget),
        "cocyc": lambda: expansion(SC, args.level, "cocyc", budget),
    }
    document = {"schema": 1, "command": "distance", "manifest_hash": instance.manifest.hash,
                "level": args.level, "mode": args.mode}
    try:
        entry = measures[args.mode]()
    except BudgetExceeded as e:
        document["entry"] = e.partial
        document["budget_exceeded"] = {"needed": e.needed, "budget": e.budget, "reason": str(e)}
        _emit(document, args.out)
        return EXIT_BUDGET
    document["entry"] = entry
    _emit(document, args.out)
    return EXIT_BUDGET if entry.partial else EXIT_OK


def cmd_decode_sim(args, processor: BatchProcessor) -> int:
    instance = read_bundle(args.bundle)
    curve = simulate_decoding(instance.complex, args.level, weights=args.weights, p=args.p, shots=args.shots,
                              seed=args.seed, syndrome_noise=args.syndrome_noise, processor=processor)
    _emit({
        "schema": 1,
        "command": "decode-sim",
        "manifest_hash": instance.manifest.hash,
        "level": args.level,
        "seed": args.seed,
        "syndrome_noise": args.syndrome_noise,
        "curve": to_jsonable(curve.to_dict(orient="records")),
    }, args.out)
    return EXIT_OK


def cmd_export(args, processor: BatchProcessor) -> int:
    instance = read_bundle(args.bundle)
    C = build_css(instance.complex, args.level, manifest_hash=instance.manifest.hash)
    paths = export_code(C, args.out, args.format)
    write_json(Path(args.out) / "code.json", {"schema": 1, **C.to_dict(),
                                              "files": {k: p.name for k, p in paths.items()}})
    return EXIT_OK


COMMANDS = {
    "build": cmd_build,
    "verify": cmd_verify,
    "search": cmd_search,
    "distance": cmd_distance,
    "decode-sim": cmd_decode_sim,
    "export": cmd_export,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and map errors to exit codes"""
    args = create_parser().parse_args(argv)
    config = get_config()
    manager = setup_logging(replace(config.logging, level="DEBUG") if args.debug else config.logging)
    manager.set_context(command=args.command)
    processor = BatchProcessor(replace(config.workers, jobs=max(1, args.jobs)))

    try:
        code = COMMANDS[args.command](args, processor)
    except ManifestError as e:
        logger.error(f"Manifest error: {e}")
        return EXIT_MANIFEST
    except ConstructionError as e:
        logger.error(f"Construction failed: {e}")
        return EXIT_CONSTRUCTION
    except BudgetExceeded as e:
        logger.error(f"Budget exceeded: {e}")
        return EXIT_BUDGET
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        return EXIT_MANIFEST
    except CubeSheafError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
    logger.info(f"Command {args.command} finished with exit code {code}")
    return code
