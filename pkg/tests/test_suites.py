import pytest

from cubesheaf.core.config import BudgetConfig
from cubesheaf.reports import CheckStatus, all_passed
from cubesheaf.suites import SuiteContext, run_suite


@pytest.mark.parametrize("name", ["t1_instance", "t2_instance", "gf4_instance"])
def test_chain_suite_passes(request, name):
    checks = run_suite("chain", SuiteContext(instance=request.getfixturevalue(name)))
    assert checks
    assert all_passed(checks), [c.to_dict() for c in checks if not c.passed]


def test_local_suite_passes(t2_instance):
    checks = run_suite("local", SuiteContext(instance=t2_instance))
    ids = [c.check_id for c in checks]
    assert "local.global_identification" in ids
    assert "local.two_way_robustness" in ids
    assert all_passed(checks)


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("everything", None)


def test_failing_step_becomes_a_check(tmp_path, t1_instance):
    path = tmp_path / "custom.yaml"
    path.write_text(
        "name: custom\n"
        "steps:\n"
        "  - name: decoding\n"
        "    function: decoding\n"
        "    kwargs:\n"
        "      levels: [3]\n"
        "  - name: after\n"
        "    function: geometry_counts\n"
        "    depends_on: [decoding]\n"
    )
    checks = run_suite("custom", SuiteContext(instance=t1_instance), config_path=path)
    assert [c.check_id for c in checks] == ["custom.step[decoding]", "custom.step[after]"]
    assert checks[0].status == CheckStatus.FAIL
    assert checks[1].status == CheckStatus.SKIPPED


def test_budget_overrun_is_partial(t1_instance):
    ctx = SuiteContext(instance=t1_instance, budgets=BudgetConfig(enumeration=1))
    checks = run_suite("distance", ctx)
    assert ctx.budget_exceeded
    assert any(c.status in (CheckStatus.PARTIAL, CheckStatus.SKIPPED) for c in checks)


@pytest.mark.slow
def test_distance_suite_on_cube_graph(t1_instance):
    ctx = SuiteContext(instance=t1_instance)
    checks = run_suite("distance", ctx)
    ids = {c.check_id for c in checks}
    assert "decoder.single_block[0]" in ids
    assert "distance.report[1]" in ids
    assert not any(c.check_id.startswith("distance.step[") for c in checks)
