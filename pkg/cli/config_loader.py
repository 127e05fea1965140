"""Experiment config loading (YAML validated into pydantic models)."""

from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError

from common.errors import ConfigError
from common.logger import get_logger
from common.schemas import ExperimentConfig

logger = get_logger(__name__)


def _line_of(node: yaml.Node | None, location: tuple[int | str, ...]) -> int | None:
    """1-based line of the YAML node addressed by a pydantic error location."""
    line = None
    for part in location:
        if isinstance(node, yaml.MappingNode):
            match = next(((key, value) for key, value in node.value if key.value == part), None)
            # discriminated unions insert the tag ("sphere"/"curve") into the location
            if match is None:
                continue
            line = match[0].start_mark.line + 1
            node = match[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            break
    return line


def parse_experiment(text: str, path: str = "<config>") -> ExperimentConfig:
    """Parse and validate an experiment config document.

    Args:
        text: YAML document
        path: Name used in error messages

    Returns:
        Validated experiment config

    Raises:
        ConfigError: YAML syntax or validation problems, with line numbers when known
    """
    try:
        data: Any = yaml.safe_load(text)
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark is not None else None
        raise ConfigError(f"invalid YAML: {e.problem}", path=path, line=line) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML: {e}", path=path) from e

    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of sections", path=path, line=1)

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = tuple(first["loc"])
        where = ".".join(str(part) for part in location) or "<root>"
        raise ConfigError(f"{where}: {first['msg']}", path=path, line=_line_of(root, location)) from e


def load_experiment(path: str | Path) -> ExperimentConfig:
    """Read and validate an experiment config file.

    Raises:
        ConfigError: Unreadable file, YAML syntax or validation problems
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", path=str(path)) from e
    config = parse_experiment(text, str(path))
    logger.info(f"Loaded experiment '{config.scenario}' from {path}")
    return config
