"""Toolkit configuration settings.

This module defines the Settings dataclass that loads defaults from
environment variables, and the loader that turns an experiment JSON
document into a validated ExperimentConfig.
"""

from dataclasses import dataclass
import json
import logging
import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import ValidationError

from renewal_ld.errors import ConfigError
from renewal_ld.models import ExperimentConfig

logger = logging.getLogger(__name__)


@dataclass
class Settings:
    """Toolkit settings loaded from environment variables.

    Attributes:
        output_dir: Default directory for artifacts.
        threads: Default worker count.
        seed: Default base seed for simulations.
        batch_size: Default trajectories per simulation batch.
        quad_tol: Default absolute tolerance per convolution integral.
        log_level: Root logger level name.
        log_timestamps: Whether log lines carry timestamps.
    """

    output_dir: str
    threads: int
    seed: int
    batch_size: int
    quad_tol: float
    log_level: str
    log_timestamps: bool

    @staticmethod
    def _get_bool(value: str | None, default: bool = False) -> bool:
        """Convert string value to boolean.

        Args:
            value: String value to convert.
            default: Default value if value is None.

        Returns:
            Boolean value.
        """
        if value is None:
            return default
        return value.lower() in {"1", "true", "t", "yes", "y"}

    @classmethod
    def from_env(cls) -> "Settings":
        """Create Settings instance from environment variables.

        A ``.env`` file in the working directory is honoured.

        Returns:
            Settings instance with values loaded from environment.

        Raises:
            ConfigError: If a numeric variable cannot be parsed.
        """
        load_dotenv()
        try:
            return cls(
                output_dir=os.getenv("RENEWAL_LD_OUTPUT_DIR", "results"),
                threads=int(os.getenv("RENEWAL_LD_THREADS", "1")),
                seed=int(os.getenv("RENEWAL_LD_SEED", "20240101")),
                batch_size=int(os.getenv("RENEWAL_LD_BATCH_SIZE", "65536")),
                quad_tol=float(os.getenv("RENEWAL_LD_QUAD_TOL", "1e-10")),
                log_level=os.getenv("RENEWAL_LD_LOG_LEVEL", "INFO").upper(),
                log_timestamps=cls._get_bool(os.getenv("RENEWAL_LD_LOG_TIMESTAMPS"), True),
            )
        except ValueError as e:
            raise ConfigError(f"Invalid RENEWAL_LD_* environment value: {e}") from e


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Read and validate an experiment JSON document.

    Args:
        path: Path to the JSON file.

    Returns:
        Validated experiment configuration.

    Raises:
        ConfigError: If the file is missing, not JSON, or fails validation.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment config {path}:\n{e}") from e
    logger.info(f"Loaded experiment '{config.name}' from {path}")
    return config


def resolve_config(
    config: ExperimentConfig,
    settings: Settings,
    *,
    output_dir: str | None = None,
    seed: int | None = None,
) -> ExperimentConfig:
    """Fill unset run parameters from CLI overrides and settings.

    Precedence is CLI flag, then experiment JSON, then environment settings.

    Args:
        config: Parsed experiment configuration.
        settings: Environment settings.
        output_dir: CLI output directory override.
        seed: CLI seed override.

    Returns:
        A copy of the configuration with every run parameter set.
    """
    update = {
        "output_dir": output_dir or config.output_dir or settings.output_dir,
        "seed": seed if seed is not None else (
            config.seed if config.seed is not None else settings.seed
        ),
        "batch_size": config.batch_size or settings.batch_size,
        "quad_tol": config.quad_tol or settings.quad_tol,
    }
    try:
        return ExperimentConfig.model_validate({**config.model_dump(), **update})
    except ValidationError as e:
        raise ConfigError(f"Invalid resolved config: {e}") from e
