"""
Pipeline Configuration and Management
Runs verification suites as ordered steps with dependencies, loaded from YAML.
"""

import asyncio
import functools
from datetime import datetime
from typing import List, Dict, Any, Optional, Callable, Mapping
from dataclasses import dataclass, field
from enum import Enum
import json
import yaml

from .logging import get_logger, PerformanceLogger

logger = get_logger(__name__)


class PipelineStatus(Enum):
    """Pipeline execution status"""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"
    SKIPPED = "skipped"


@dataclass
class PipelineStep:
    """A single step in the pipeline"""
    name: str
    function: Callable
    args: List[Any] = field(default_factory=list)
    kwargs: Dict[str, Any] = field(default_factory=dict)
    enabled: bool = True
    timeout: Optional[float] = None
    depends_on: List[str] = field(default_factory=list)


@dataclass
class PipelineResult:
    """Result of a pipeline step execution"""
    step_name: str
    status: PipelineStatus
    duration: float
    success: bool
    error_message: Optional[str] = None
    value: Any = None


@dataclass
class PipelineConfig:
    """Configuration for a pipeline"""
    name: str
    description: str
    steps: List[PipelineStep]
    parallel_execution: bool = False
    stop_on_failure: bool = False


class PipelineManager:
    """Manages pipeline execution with monitoring and error handling

    Every step function is called as ``function(context, *args, **kwargs)``
    in a worker thread.
    """

    def __init__(self, config: PipelineConfig, context: Any = None):
        self.config = config
        self.context = context
        self.logger = get_logger(__name__)
        self.performance_logger = PerformanceLogger(self.logger)
        self.results: List[PipelineResult] = []

    async def execute_pipeline(self) -> List[PipelineResult]:
        """Execute the pipeline"""
        self.performance_logger.start_timer(f"pipeline_{self.config.name}")

        try:
            self.logger.info(f"Starting pipeline: {self.config.name}")
            self.logger.debug(f"Description: {self.config.description}")
            self.logger.debug(f"Steps: {len(self.config.steps)}")

            if self.config.parallel_execution:
                await self._execute_parallel()
            else:
                await self._execute_sequential()

            self.performance_logger.end_timer(f"pipeline_{self.config.name}")
            return self.ordered_results()

        except Exception as e:
            self.logger.error(f"Pipeline execution failed: {e}")
            self.performance_logger.end_timer(f"pipeline_{self.config.name}", success=False)
            raise

    def run(self) -> List[PipelineResult]:
        """Synchronous entry point"""
        return asyncio.run(self.execute_pipeline())

    def ordered_results(self) -> List[PipelineResult]:
        """Results in declaration order, independent of completion order"""
        position = {step.name: i for i, step in enumerate(self.config.steps)}
        return sorted(self.results, key=lambda r: position.get(r.step_name, len(position)))

    async def _execute_sequential(self):
        """Execute pipeline steps sequentially"""
        for step in self.config.steps:
            if not step.enabled:
                self.logger.info(f"Skipping disabled step: {step.name}")
                continue

            if not self._check_dependencies(step):
                self.logger.error(f"Dependencies not met for step: {step.name}")
                self.results.append(self._skipped(step))
                if self.config.stop_on_failure:
                    break
                continue

            result = await self._execute_step(step)
            self.results.append(result)

            if not result.success and self.config.stop_on_failure:
                self.logger.error(f"Step {step.name} failed, stopping pipeline")
                break

    async def _execute_parallel(self):
        """Execute pipeline steps in parallel where dependencies allow"""
        for group in self._group_steps_by_dependencies():
            tasks = []
            for step in group:
                if not step.enabled:
                    continue
                if not self._check_dependencies(step):
                    self.logger.error(f"Dependencies not met for step: {step.name}")
                    self.results.append(self._skipped(step))
                    continue
                tasks.append(asyncio.create_task(self._execute_step(step)))

            if tasks:
                results = await asyncio.gather(*tasks)
                self.results.extend(results)

                failed_steps = [r.step_name for r in results if not r.success]
                if failed_steps and self.config.stop_on_failure:
                    self.logger.error(f"Failed steps in group: {failed_steps}")
                    break

    def _group_steps_by_dependencies(self) -> List[List[PipelineStep]]:
        """Group steps into waves whose dependencies precede them"""
        groups = []
        placed: set = set()
        remaining_steps = [s for s in self.config.steps if s.enabled]

        while remaining_steps:
            current_group = [
                step for step in remaining_steps
                if all(dep in placed for dep in step.depends_on)
            ]

            if not current_group:
                # Unsatisfiable dependencies; run them last so they get reported as skipped
                groups.append(remaining_steps)
                break

            groups.append(current_group)
            placed.update(step.name for step in current_group)
            remaining_steps = [s for s in remaining_steps if s not in current_group]

        return groups

    def _check_dependencies(self, step: PipelineStep) -> bool:
        """Check if step dependencies are met"""
        for dep_name in step.depends_on:
            dep_result = next((r for r in self.results if r.step_name == dep_name), None)
            if not dep_result or not dep_result.success:
                return False
        return True

    def _skipped(self, step: PipelineStep) -> PipelineResult:
        return PipelineResult(
            step_name=step.name,
            status=PipelineStatus.SKIPPED,
            duration=0.0,
            success=False,
            error_message=f"unmet dependencies: {step.depends_on}"
        )

    async def _execute_step(self, step: PipelineStep) -> PipelineResult:
        """Execute a single pipeline step"""
        start_time = datetime.now()
        loop = asyncio.get_running_loop()
        call = functools.partial(step.function, self.context, *step.args, **step.kwargs)

        try:
            self.logger.info(f"Executing step: {step.name}")

            if step.timeout:
                value = await asyncio.wait_for(loop.run_in_executor(None, call), timeout=step.timeout)
            else:
                value = await loop.run_in_executor(None, call)

            duration = (datetime.now() - start_time).total_seconds()
            self.logger.info(f"Step {step.name} completed in {duration:.2f}s",
                             extra={"step": step.name, "duration_seconds": duration})

            return PipelineResult(
                step_name=step.name,
                status=PipelineStatus.COMPLETED,
                duration=duration,
                success=True,
                value=value
            )

        except asyncio.TimeoutError:
            duration = (datetime.now() - start_time).total_seconds()
            error_msg = f"Step {step.name} timed out after {step.timeout}s"
            self.logger.error(error_msg)

            return PipelineResult(
                step_name=step.name,
                status=PipelineStatus.FAILED,
                duration=duration,
                success=False,
                error_message=error_msg
            )

        except Exception as e:
            duration = (datetime.now() - start_time).total_seconds()
            error_msg = f"Step {step.name} failed: {type(e).__name__}: {e}"
            self.logger.error(error_msg, exc_info=True)

            return PipelineResult(
                step_name=step.name,
                status=PipelineStatus.FAILED,
                duration=duration,
                success=False,
                error_message=error_msg
            )

    def get_summary(self) -> Dict[str, Any]:
        """Get execution summary (timings included; logs only)"""
        total_duration = sum(result.duration for result in self.results)
        successful_steps = sum(1 for result in self.results if result.success)

        return {
            "pipeline_name": self.config.name,
            "total_steps": len(self.results),
            "successful_steps": successful_steps,
            "failed_steps": len(self.results) - successful_steps,
            "total_duration": total_duration,
            "results": [
                {
                    "step_name": result.step_name,
                    "status": result.status.value,
                    "duration": result.duration,
                    "success": result.success,
                    "error": result.error_message
                }
                for result in self.ordered_results()
            ]
        }


class PipelineBuilder:
    """Builder for creating pipeline configurations"""

    def __init__(self, name: str, description: str = ""):
        self.name = name
        self.description = description
        self.steps: List[PipelineStep] = []
        self.parallel_execution = False
        self.stop_on_failure = False

    def add_step(self, name: str, function: Callable, *args,
                 depends_on: Optional[List[str]] = None, **kwargs) -> 'PipelineBuilder':
        """Add a step to the pipeline"""
        self.steps.append(PipelineStep(
            name=name,
            function=function,
            args=list(args),
            kwargs=kwargs,
            depends_on=list(depends_on or [])
        ))
        return self

    def enable_parallel_execution(self) -> 'PipelineBuilder':
        """Enable parallel execution"""
        self.parallel_execution = True
        return self

    def set_stop_on_failure(self, stop: bool) -> 'PipelineBuilder':
        """Set whether to stop on failure"""
        self.stop_on_failure = stop
        return self

    def build(self) -> PipelineConfig:
        """Build the pipeline configuration"""
        return PipelineConfig(
            name=self.name,
            description=self.description,
            steps=self.steps,
            parallel_execution=self.parallel_execution,
            stop_on_failure=self.stop_on_failure
        )


def load_pipeline_from_config(config_path: str, registry: Mapping[str, Callable]) -> PipelineConfig:
    """Load pipeline configuration from file, resolving step functions by name"""
    with open(config_path, 'r') as f:
        if str(config_path).endswith(('.yaml', '.yml')):
            config_data = yaml.safe_load(f)
        else:
            config_data = json.load(f)

    steps = []
    for step_data in config_data.get('steps', []):
        function_name = step_data['function']
        if function_name not in registry:
            raise ValueError(f"Unknown step function '{function_name}' in {config_path}")
        steps.append(PipelineStep(
            name=step_data['name'],
            function=registry[function_name],
            args=step_data.get('args', []),
            kwargs=step_data.get('kwargs') or {},
            enabled=step_data.get('enabled', True),
            timeout=step_data.get('timeout'),
            depends_on=step_data.get('depends_on') or []
        ))

    return PipelineConfig(
        name=config_data['name'],
        description=config_data.get('description', ''),
        steps=steps,
        parallel_execution=config_data.get('parallel_execution', False),
        stop_on_failure=config_data.get('stop_on_failure', False)
    )
