"""
Report Records
Check results, JSON normalization and deterministic report serialization.
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

REPORT_SCHEMA = 1


class CheckStatus(Enum):
    """Outcome of a single check"""
    PASS = "pass"
    FAIL = "fail"
    PARTIAL = "partial"
    SKIPPED = "skipped"


@dataclass
class CheckResult:
    """One verified statement with its measured data"""
    check_id: str
    anchor: str
    status: CheckStatus
    data: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status in (CheckStatus.PASS, CheckStatus.PARTIAL, CheckStatus.SKIPPED)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check_id": self.check_id,
            "anchor": self.anchor,
            "status": self.status.value,
            "data": to_jsonable(self.data),
        }


def check(check_id: str, anchor: str, ok: bool, **data: Any) -> CheckResult:
    """Shorthand for a pass/fail result"""
    return CheckResult(check_id, anchor, CheckStatus.PASS if ok else CheckStatus.FAIL, data)


def all_passed(results: Iterable[CheckResult]) -> bool:
    return all(r.passed for r in results)


def to_jsonable(value: Any) -> Any:
    """Convert measured values to plain JSON types

    Fractions become "p/q" strings and infinities become "inf" so that reports
    stay exact and byte-stable.
    """
    if isinstance(value, CheckResult):
        return value.to_dict()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return round(value, 12)
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [to_jsonable(v) for v in items]
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    return value


def build_report(
    suite: str,
    checks: List[CheckResult],
    manifest_hash: Optional[str] = None,
    seed: Optional[int] = None
) -> Dict[str, Any]:
    """Assemble a report document; no timings, so equal inputs give equal bytes"""
    counts = {status.value: 0 for status in CheckStatus}
    for result in checks:
        counts[result.status.value] += 1
    return {
        "schema": REPORT_SCHEMA,
        "manifest_hash": manifest_hash,
        "suite": suite,
        "seed": seed,
        "checks": [result.to_dict() for result in checks],
        "summary": {
            "total": len(checks),
            "passed": all_passed(checks),
            "counts": counts,
        },
    }


def dumps(document: Any) -> str:
    return json.dumps(to_jsonable(document), sort_keys=True, indent=2) + "\n"


def write_json(path, document: Any) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(document))
