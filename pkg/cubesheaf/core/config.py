"""
Configuration Management
Centralized configuration with validation and environment variable handling.
"""

import os
import logging
from typing import Any, Dict, Optional
from dataclasses import dataclass, field, replace
from dotenv import load_dotenv

logger = logging.getLogger(__name__)


@dataclass
class LoggingConfig:
    """Logging configuration"""
    level: str = "INFO"
    enable_file_logging: bool = False
    log_directory: str = "logs"
    max_file_size: int = 10 * 1024 * 1024  # 10MB
    backup_count: int = 5


@dataclass
class WorkerConfig:
    """Worker pool configuration"""
    jobs: int = 1
    batch_size: int = 64
    chunk_size: int = 1 << 14


@dataclass
class BudgetConfig:
    """Enumeration and size limits"""
    enumeration: int = 1 << 24
    flip_enumeration: int = 1 << 16
    explicit_walk: int = 20000
    dense_eigen: int = 2000

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base: Optional["BudgetConfig"] = None) -> "BudgetConfig":
        """Overlay manifest budget values on top of ``base``"""
        base = base or cls()
        known = {k: int(v) for k, v in data.items() if k in cls.__dataclass_fields__}
        return replace(base, **known)


@dataclass
class ApplicationConfig:
    """Main application configuration"""
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    workers: WorkerConfig = field(default_factory=WorkerConfig)
    budgets: BudgetConfig = field(default_factory=BudgetConfig)

    def validate(self) -> None:
        """Validate configuration"""
        errors = []

        if self.logging.level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            errors.append(f"Unknown log level: {self.logging.level}")
        if self.workers.jobs < 1:
            errors.append("Worker count must be at least 1")
        if self.workers.batch_size < 1:
            errors.append("Batch size must be at least 1")
        if self.workers.chunk_size < 1:
            errors.append("Chunk size must be at least 1")

        for name in ("enumeration", "flip_enumeration", "explicit_walk", "dense_eigen"):
            if getattr(self.budgets, name) < 1:
                errors.append(f"Budget {name} must be positive")

        if errors:
            raise ValueError(f"Configuration validation failed: {'; '.join(errors)}")


class ConfigManager:
    """Manages application configuration"""

    def __init__(self, env_file: Optional[str] = None):
        self._config: Optional[ApplicationConfig] = None
        self._load_environment(env_file)

    def _load_environment(self, env_file: Optional[str] = None) -> None:
        """Load environment variables"""
        if env_file and os.path.exists(env_file):
            load_dotenv(env_file)
        else:
            load_dotenv()

    def _get_logging_config(self) -> LoggingConfig:
        """Get logging configuration from environment"""
        return LoggingConfig(
            level=os.getenv('LOG_LEVEL', 'INFO'),
            enable_file_logging=os.getenv('ENABLE_FILE_LOGGING', 'false').lower() in ('true', '1'),
            log_directory=os.getenv('LOG_DIRECTORY', 'logs'),
            max_file_size=int(os.getenv('LOG_MAX_FILE_SIZE', str(10 * 1024 * 1024))),
            backup_count=int(os.getenv('LOG_BACKUP_COUNT', '5'))
        )

    def _get_worker_config(self) -> WorkerConfig:
        """Get worker pool configuration from environment"""
        return WorkerConfig(
            jobs=int(os.getenv('HDX_JOBS', '1')),
            batch_size=int(os.getenv('HDX_BATCH_SIZE', '64')),
            chunk_size=int(os.getenv('HDX_CHUNK_SIZE', str(1 << 14)))
        )

    def _get_budget_config(self) -> BudgetConfig:
        """Get enumeration budgets from environment"""
        return BudgetConfig(
            enumeration=int(os.getenv('HDX_ENUM_BUDGET', str(1 << 24))),
            flip_enumeration=int(os.getenv('HDX_FLIP_BUDGET', str(1 << 16))),
            explicit_walk=int(os.getenv('HDX_WALK_LIMIT', '20000')),
            dense_eigen=int(os.getenv('HDX_DENSE_EIGEN_LIMIT', '2000'))
        )

    def get_config(self) -> ApplicationConfig:
        """Get application configuration"""
        if self._config is None:
            self._config = ApplicationConfig(
                logging=self._get_logging_config(),
                workers=self._get_worker_config(),
                budgets=self._get_budget_config()
            )

            self._config.validate()
            logger.debug("Configuration loaded and validated successfully")

        return self._config

    def reload_config(self) -> ApplicationConfig:
        """Reload configuration from environment"""
        self._config = None
        return self.get_config()


# Global config manager instance
config_manager = ConfigManager()


def get_config() -> ApplicationConfig:
    """Get the global application configuration"""
    return config_manager.get_config()
