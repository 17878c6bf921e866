"""
Configuration sources for sparsemask.

Bench plans can be written as YAML files; this module loads and validates
them field by field. Environment settings (SPARSEMASK_THREADS,
SPARSEMASK_LOG_LEVEL) are read here as well; the CLI loads a .env file
into the environment before anything else runs.
"""

import logging
import os
from typing import Any, Dict, List, Union

import yaml

from sparsemask.core.error_handling import ConfigError

logger = logging.getLogger("sparsemask.config")

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

DISTRIBUTION_ALIASES = {
    "random": "random",
    "sparsify": "sparsify-homdiff",
    "sparsify-homdiff": "sparsify-homdiff",
    "densify": "densify-shepard",
    "densify-shepard": "densify-shepard",
}

# field -> (accepted types, description)
PLAN_FIELDS: Dict[str, Any] = {
    "corpus": ((str,), "a directory path"),
    "codecs": ((list, str), "a list of codec names"),
    "densities": ((list, str, float), "a list of densities or an 'a..b' range"),
    "distributions": ((list, str), "a list of distribution names"),
    "seed": ((int,), "an integer"),
    "repetitions": ((int,), "an integer"),
    "include_header": ((bool,), "a boolean"),
    "workers": ((int,), "an integer"),
    "candidate_fraction": ((float, int), "a number"),
    "removal_fraction": ((float, int), "a number"),
    "batch_size": ((int,), "an integer"),
}


def parse_name_list(value: Union[str, List[str]]) -> List[str]:
    """Split 'a,b,c' into names; lists are passed through."""
    if isinstance(value, str):
        names = [name.strip() for name in value.split(",")]
    else:
        names = [str(name).strip() for name in value]
    names = [name for name in names if name]
    if not names:
        raise ConfigError("expected at least one name")
    return names


def parse_densities(value: Union[str, float, List[float]]) -> List[float]:
    """
    Parse densities given as fractions.

    Accepts a comma-separated list ("0.01,0.05"), a range "a..b" expanded in
    steps of one percentage point, a single number or a list of numbers.

    Raises:
        ConfigError: If the text cannot be parsed or a density is outside (0, 1]
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        densities = [float(value)]
    elif isinstance(value, str) and ".." in value:
        start_text, _, stop_text = value.partition("..")
        try:
            start, stop = float(start_text), float(stop_text)
        except ValueError:
            raise ConfigError(f"invalid density range '{value}'") from None
        if stop < start:
            raise ConfigError(f"density range '{value}' is empty")
        steps = int(round((stop - start) / 0.01))
        densities = [round(start + 0.01 * k, 4) for k in range(steps + 1)]
    elif isinstance(value, str):
        try:
            densities = [float(item) for item in value.split(",") if item.strip()]
        except ValueError:
            raise ConfigError(f"invalid density list '{value}'") from None
    else:
        try:
            densities = [float(item) for item in value]
        except (TypeError, ValueError):
            raise ConfigError(f"invalid density list {value!r}") from None
    if not densities:
        raise ConfigError("expected at least one density")
    for density in densities:
        if not 0 < density <= 1:
            raise ConfigError(f"density {density} is outside (0, 1]; densities are fractions, not percent")
    return densities


def parse_distributions(value: Union[str, List[str]]) -> List[str]:
    """Map short names (random, sparsify, densify) to distribution names."""
    distributions = []
    for name in parse_name_list(value):
        if name not in DISTRIBUTION_ALIASES:
            raise ConfigError(f"unknown distribution '{name}'; expected random, sparsify or densify")
        distributions.append(DISTRIBUTION_ALIASES[name])
    return distributions


def load_plan_file(path: str) -> Dict[str, Any]:
    """
    Load a bench plan from YAML.

    Args:
        path: Path to the YAML file

    Returns:
        Plan fields, normalized (lists parsed, distribution aliases resolved)

    Raises:
        ConfigError: If the file is not a YAML mapping, has unknown keys or wrongly typed values
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            config = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid YAML in {path}: {str(e)}") from e
    if config is None:
        config = {}
    if not isinstance(config, dict):
        raise ConfigError(f"Bench plan {path} is not a YAML mapping")

    unknown = sorted(set(config) - set(PLAN_FIELDS))
    if unknown:
        raise ConfigError(f"Unknown fields in bench plan {path}: {', '.join(unknown)}")

    for name, value in config.items():
        types, description = PLAN_FIELDS[name]
        if isinstance(value, bool) and bool not in types:
            raise ConfigError(f"Field '{name}' in {path} must be {description}")
        if not isinstance(value, types):
            raise ConfigError(f"Field '{name}' in {path} must be {description}")

    plan = dict(config)
    if "codecs" in plan:
        plan["codecs"] = parse_name_list(plan["codecs"])
    if "densities" in plan:
        plan["densities"] = parse_densities(plan["densities"])
    if "distributions" in plan:
        plan["distributions"] = parse_distributions(plan["distributions"])
    logger.info(f"Loaded bench plan from {path}: {', '.join(sorted(plan))}")
    return plan


def worker_count() -> int:
    """
    Worker processes allowed for the bench, from SPARSEMASK_THREADS (default 1).

    Raises:
        ConfigError: If the variable is not a positive integer
    """
    raw = os.getenv("SPARSEMASK_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"SPARSEMASK_THREADS must be a positive integer, got '{raw}'") from None
    if workers < 1:
        raise ConfigError(f"SPARSEMASK_THREADS must be a positive integer, got '{raw}'")
    return workers


def log_level(default: str = "WARNING") -> str:
    """Log level name from SPARSEMASK_LOG_LEVEL; unknown names fall back to the default."""
    level = os.getenv("SPARSEMASK_LOG_LEVEL", default).upper()
    if level not in LOG_LEVELS:
        logger.warning(f"Ignoring unknown SPARSEMASK_LOG_LEVEL '{level}'")
        return default
    return level
