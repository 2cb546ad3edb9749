"""
Core Module
Provides centralized configuration, logging, batch processing and the step pipeline.
"""

from .config import (
    ApplicationConfig,
    LoggingConfig,
    WorkerConfig,
    BudgetConfig,
    ConfigManager,
    get_config
)

from .logging import (
    LoggerManager,
    PerformanceLogger,
    StructuredFormatter,
    setup_logging,
    get_logger
)

from .batch_processor import (
    BatchProcessor,
    BatchResult,
    ProcessingStats,
    BatchStatus,
    task_rngs
)

from .pipeline import (
    PipelineBuilder,
    PipelineConfig,
    PipelineManager,
    PipelineResult,
    PipelineStatus,
    PipelineStep,
    load_pipeline_from_config
)

__all__ = [
    # Configuration
    'ApplicationConfig',
    'LoggingConfig',
    'WorkerConfig',
    'BudgetConfig',
    'ConfigManager',
    'get_config',

    # Logging
    'LoggerManager',
    'PerformanceLogger',
    'StructuredFormatter',
    'setup_logging',
    'get_logger',

    # Batch Processing
    'BatchProcessor',
    'BatchResult',
    'ProcessingStats',
    'BatchStatus',
    'task_rngs',

    # Pipeline
    'PipelineBuilder',
    'PipelineConfig',
    'PipelineManager',
    'PipelineResult',
    'PipelineStatus',
    'PipelineStep',
    'load_pipeline_from_config'
]
