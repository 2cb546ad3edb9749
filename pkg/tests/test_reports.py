import json
from fractions import Fraction
from math import inf

import numpy as np

from cubesheaf.reports import (
    CheckResult, CheckStatus, all_passed, build_report, check, dumps, to_jsonable, write_json
)


def test_check_shorthand():
    assert check("a.b", "anchor", True).status == CheckStatus.PASS
    assert check("a.b", "anchor", False, value=3).data == {"value": 3}


def test_partial_and_skipped_count_as_passed():
    results = [
        CheckResult("x", "a", CheckStatus.PARTIAL),
        CheckResult("y", "a", CheckStatus.SKIPPED),
        check("z", "a", True),
    ]
    assert all_passed(results)
    assert not all_passed(results + [check("w", "a", False)])


def test_to_jsonable_values():
    assert to_jsonable(Fraction(3, 2)) == "3/2"
    assert to_jsonable(inf) == "inf"
    assert to_jsonable(-inf) == "-inf"
    assert to_jsonable(np.int64(4)) == 4
    assert to_jsonable(np.bool_(True)) is True
    assert to_jsonable({1: np.arange(3)}) == {"1": [0, 1, 2]}
    assert to_jsonable({3, 1, 2}) == [1, 2, 3]
    assert to_jsonable(CheckStatus.FAIL) == "fail"


def test_report_summary():
    report = build_report("chain", [check("a", "x", True), check("b", "x", False)], manifest_hash="abc", seed=1)
    assert report["summary"]["counts"] == {"pass": 1, "fail": 1, "partial": 0, "skipped": 0}
    assert report["summary"]["passed"] is False
    assert report["manifest_hash"] == "abc"


def test_dumps_is_deterministic(tmp_path):
    report = build_report("chain", [check("a", "x", True, ratio=Fraction(1, 3), b=2, a=1)])
    text = dumps(report)
    assert text == dumps(build_report("chain", [check("a", "x", True, a=1, b=2, ratio=Fraction(1, 3))]))
    path = tmp_path / "report.json"
    write_json(path, report)
    assert path.read_text() == text
    assert json.loads(text)["checks"][0]["data"]["ratio"] == "1/3"
