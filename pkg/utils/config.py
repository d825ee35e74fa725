"""
Configuration management module.

Loads pipeline and oracle defaults from YAML or TOML files. Values from a
config file override the model defaults; CLI flags override the config file.
"""
import logging
from pathlib import Path
from typing import Any, Dict, Final, Optional, Tuple

import yaml

try:
    import tomllib  # Python 3.11+
except ImportError:
    import tomli as tomllib  # type: ignore

from exceptions import ConfigurationError

logger: logging.Logger = logging.getLogger(__name__)

CONFIG_NAMES: Final[Tuple[str, ...]] = (
    ".steiner-forest.yaml",
    ".steiner-forest.yml",
    ".steiner-forest.toml",
)
PIPELINE_KEYS: Final[Tuple[str, ...]] = (
    "epsilon",
    "alpha",
    "gamma",
    "k",
    "include_triples",
    "classic_gw",
    "seed",
    "candidate_cap",
    "triple_cap",
    "enumeration_depth",
    "seed_budget",
)
ORACLE_KEYS: Final[Tuple[str, ...]] = ("max_terminals", "max_tuples", "time_budget")


class Config:
    """
    Configuration for steiner-forest runs.

    Top-level keys are pipeline parameters plus ``verbose``; oracle limits
    live in an ``oracle`` section. Rationals may be written as ``"p/q"``
    strings, decimal strings or plain numbers.

    Attributes:
        data: Dictionary containing configuration values

    Example YAML config:
        ```yaml
        # .steiner-forest.yaml
        epsilon: "83/10000"
        k: 4
        include_triples: true
        oracle:
          max_terminals: 8
          time_budget: 30
        ```

    Example TOML config:
        ```toml
        # .steiner-forest.toml
        epsilon = "1/10"
        classic_gw = true

        [oracle]
        max_tuples = 10
        ```
    """

    def __init__(self, data: Optional[Dict[str, Any]] = None) -> None:
        self.data: Dict[str, Any] = data or {}

    @classmethod
    def load_from_file(cls, config_path: Path) -> "Config":
        """
        Load configuration from a YAML or TOML file.

        Args:
            config_path: Path to configuration file (.yaml, .yml, or .toml)

        Returns:
            Config instance with loaded data

        Raises:
            FileNotFoundError: If config file doesn't exist
            ConfigurationError: If the format is unsupported or the content is not a mapping
        """
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {config_path}")

        suffix = config_path.suffix.lower()
        try:
            if suffix in (".yaml", ".yml"):
                with open(config_path, "r") as f:
                    data = yaml.safe_load(f) or {}
                logger.info(f"Loaded YAML config from {config_path}")
            elif suffix == ".toml":
                with open(config_path, "rb") as f:
                    data = tomllib.load(f)
                logger.info(f"Loaded TOML config from {config_path}")
            else:
                raise ConfigurationError(f"Unsupported config file format: {suffix}")
        except (yaml.YAMLError, tomllib.TOMLDecodeError) as e:
            logger.error(f"Cannot parse config file {config_path}: {e}")
            raise ConfigurationError(f"cannot parse {config_path}: {e}") from e

        if not isinstance(data, dict):
            raise ConfigurationError(f"{config_path} must contain a mapping, got {type(data).__name__}")
        return cls(data)

    @classmethod
    def discover(cls, start_path: Optional[Path] = None) -> Optional["Config"]:
        """
        Find a config file in ``start_path`` (default: cwd) or any parent directory.

        Returns:
            Config instance if found, None otherwise
        """
        current_dir = start_path or Path.cwd()
        while True:
            for config_name in CONFIG_NAMES:
                config_path = current_dir / config_name
                if config_path.exists():
                    logger.info(f"Discovered config file: {config_path}")
                    return cls.load_from_file(config_path)
            parent = current_dir.parent
            if parent == current_dir:
                break
            current_dir = parent

        logger.debug("No config file found")
        return None

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value.

        Example:
            >>> config = Config({'k': 4})
            >>> config.get('k')
            4
            >>> config.get('missing', 'default')
            'default'
        """
        return self.data.get(key, default)

    def set(self, key: str, value: Any) -> None:
        self.data[key] = value

    def merge(self, other: Dict[str, Any]) -> None:
        """Merge ``other`` into this config; ``other`` wins, ``None`` values are skipped."""
        self.data.update({key: value for key, value in other.items() if value is not None})

    def pipeline_values(self, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        Pipeline parameter values: config entries overlaid with non-None overrides.

        Raises:
            ConfigurationError: If the config names an unknown top-level key
        """
        unknown = sorted(set(self.data) - set(PIPELINE_KEYS) - {"verbose", "oracle"})
        if unknown:
            logger.error(f"Unknown config keys: {unknown}")
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        values = {key: self.data[key] for key in PIPELINE_KEYS if key in self.data}
        values.update({key: value for key, value in (overrides or {}).items() if value is not None})
        return values

    def oracle_values(self, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Oracle limit values from the ``oracle`` section overlaid with non-None overrides."""
        section = self.data.get("oracle") or {}
        if not isinstance(section, dict):
            raise ConfigurationError("the 'oracle' config section must be a mapping")
        unknown = sorted(set(section) - set(ORACLE_KEYS))
        if unknown:
            logger.error(f"Unknown oracle config keys: {unknown}")
            raise ConfigurationError(f"unknown oracle config keys: {', '.join(unknown)}")
        values = dict(section)
        values.update({key: value for key, value in (overrides or {}).items() if value is not None})
        return values

    def __repr__(self) -> str:
        return f"Config({self.data})"
