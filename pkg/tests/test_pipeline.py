import json
import logging

import pytest

from cubesheaf.core.logging import PerformanceLogger, StructuredFormatter
from cubesheaf.core.pipeline import PipelineBuilder, PipelineManager, PipelineStatus, load_pipeline_from_config


def record(ctx, value):
    ctx.append(value)
    return value


def explode(ctx):
    raise RuntimeError("boom")


def test_sequential_pipeline_runs_in_order():
    calls = []
    config = (PipelineBuilder("demo")
              .add_step("first", record, 1)
              .add_step("second", record, value=2, depends_on=["first"])
              .build())
    results = PipelineManager(config, calls).run()
    assert calls == [1, 2]
    assert [r.value for r in results] == [1, 2]
    assert all(r.status == PipelineStatus.COMPLETED for r in results)


def test_failed_dependency_skips_step():
    config = (PipelineBuilder("demo")
              .add_step("bad", explode)
              .add_step("after", record, 3, depends_on=["bad"])
              .build())
    manager = PipelineManager(config, [])
    results = manager.run()
    assert results[0].status == PipelineStatus.FAILED
    assert "RuntimeError" in results[0].error_message
    assert results[1].status == PipelineStatus.SKIPPED and not results[1].success
    assert manager.get_summary()["failed_steps"] == 2


def test_stop_on_failure():
    calls = []
    config = (PipelineBuilder("demo")
              .add_step("bad", explode)
              .add_step("independent", record, 1)
              .set_stop_on_failure(True)
              .build())
    results = PipelineManager(config, calls).run()
    assert len(results) == 1 and calls == []


def test_parallel_results_in_declaration_order():
    calls = []
    config = (PipelineBuilder("demo")
              .add_step("a", record, 1)
              .add_step("b", record, 2)
              .add_step("c", record, 3, depends_on=["a", "b"])
              .enable_parallel_execution()
              .build())
    results = PipelineManager(config, calls).run()
    assert [r.step_name for r in results] == ["a", "b", "c"]
    assert calls[-1] == 3


def test_load_from_yaml(tmp_path):
    path = tmp_path / "pipeline.yaml"
    path.write_text(
        "name: demo\n"
        "steps:\n"
        "  - name: one\n"
        "    function: record\n"
        "    args: [5]\n"
        "  - name: off\n"
        "    function: record\n"
        "    args: [6]\n"
        "    enabled: false\n"
    )
    config = load_pipeline_from_config(str(path), {"record": record})
    calls = []
    results = PipelineManager(config, calls).run()
    assert calls == [5] and len(results) == 1


def test_unknown_function_rejected(tmp_path):
    path = tmp_path / "pipeline.json"
    path.write_text(json.dumps({"name": "demo", "steps": [{"name": "x", "function": "missing"}]}))
    with pytest.raises(ValueError, match="missing"):
        load_pipeline_from_config(str(path), {"record": record})


def test_structured_formatter_includes_extras():
    logger = logging.getLogger("cubesheaf.test")
    entry = logger.makeRecord("cubesheaf.test", logging.INFO, __file__, 1, "ratio %s", ("1/3",), None,
                              extra={"suite": "chain"})
    payload = json.loads(StructuredFormatter().format(entry))
    assert payload["message"] == "ratio 1/3"
    assert payload["suite"] == "chain"
    assert payload["level"] == "INFO"


def test_metrics_carry_their_fields(caplog):
    metrics = PerformanceLogger(logging.getLogger("cubesheaf.metrics_test"))
    with caplog.at_level(logging.INFO, logger="cubesheaf.metrics_test"):
        metrics.log_metric("decode_success_rate", 0.75, level=0, point=2.0)
    (entry,) = caplog.records
    assert entry.metric_name == "decode_success_rate"
    assert entry.metric_value == 0.75
    assert entry.point == 2.0
