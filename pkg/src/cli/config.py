"""YAML run configuration: section dataclasses, strict parsing and the resolved-config echo"""

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml

from src.environment.layout import EnvironmentConfig
from src.learning.clustering import LearningConfig
from src.macsim.protocols import PROTOCOLS
from src.macsim.scenario import MacConfig, SimSettings
from src.macsim.traffic import TrafficConfig
from src.radio.blockage import BlockageConfig
from src.radio.mcs import McsConfig
from src.radio.propagation import RadioConfig
from src.utils.errors import ConfigurationError
from src.utils.helpers import load_config_text
from src.utils.logger import DEFAULT_LOG_CONFIG, get_logger

logger = get_logger()

LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class RunSettings:
    """Run section: what to simulate and where results go"""
    protocols: Tuple[str, ...] = ("baseline", "dualband")
    ap_counts: Tuple[int, ...] = (2, 4, 6, 8)  # Sweep only; `run` uses environment.num_aps
    seeds: Tuple[int, ...] = (1, 2, 3, 4, 5)
    horizon_s: float = 2.0
    out_dir: str = "results"
    db_file: str = "fingerprints.db"  # Relative to out_dir
    trace: bool = False
    workers: int = 4

    def validate(self) -> None:
        if not self.protocols:
            raise ConfigurationError("at least one protocol is required", key="protocols")
        for name in self.protocols:
            if name not in PROTOCOLS:
                raise ConfigurationError(f"unknown protocol '{name}', expected one of {sorted(PROTOCOLS)}", key="protocols")
        if not self.ap_counts or min(self.ap_counts) < 1:
            raise ConfigurationError("AP counts must be >= 1", key="ap_counts")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required", key="seeds")
        if self.horizon_s <= 0:
            raise ConfigurationError("must be positive", key="horizon_s")
        if self.workers < 1:
            raise ConfigurationError("must be >= 1", key="workers")


@dataclass(frozen=True)
class LoggingConfig:
    """Logging section"""
    level: str = DEFAULT_LOG_CONFIG['level']
    log_to_file: bool = DEFAULT_LOG_CONFIG['log_to_file']
    log_file: str = DEFAULT_LOG_CONFIG['log_file']
    max_log_size_mb: int = DEFAULT_LOG_CONFIG['max_log_size_mb']
    backup_count: int = DEFAULT_LOG_CONFIG['backup_count']

    def validate(self) -> None:
        if self.level not in LOG_LEVELS:
            raise ConfigurationError(f"must be one of {LOG_LEVELS}", key="level")
        if self.max_log_size_mb < 1:
            raise ConfigurationError("must be >= 1", key="max_log_size_mb")
        if self.backup_count < 0:
            raise ConfigurationError("must be >= 0", key="backup_count")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class RunConfig:
    """Every configuration section, fully resolved"""
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    mcs: McsConfig = field(default_factory=McsConfig)
    blockage: BlockageConfig = field(default_factory=BlockageConfig)
    learning: LearningConfig = field(default_factory=LearningConfig)
    mac: MacConfig = field(default_factory=MacConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    run: RunSettings = field(default_factory=RunSettings)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    def sim_settings(self) -> SimSettings:
        return SimSettings(
            radio=self.radio,
            mcs=self.mcs,
            blockage=self.blockage,
            learning=self.learning,
            mac=self.mac,
            traffic=self.traffic,
        )

    def environment_for(self, num_aps: int) -> EnvironmentConfig:
        """Environment section with the AP count of one sweep point"""
        if num_aps == self.environment.num_aps:
            return self.environment
        return dataclasses.replace(self.environment, num_aps=num_aps)

    def validate(self) -> None:
        for section in SECTIONS:
            getattr(self, section).validate()
        positions = self.environment.ap_positions
        if positions is not None and any(n != len(positions) for n in self.run.ap_counts):
            raise ConfigurationError("explicit ap_positions fix the AP count; ap_counts must match it", key="ap_counts")


SECTIONS: Dict[str, type] = typing.get_type_hints(RunConfig)


def _section_lines(text: str) -> Dict[str, Tuple[int, Dict[str, int]]]:
    """1-based source lines of every section header and key"""
    root = yaml.compose(text)
    lines: Dict[str, Tuple[int, Dict[str, int]]] = {}
    if not isinstance(root, yaml.MappingNode):
        return lines
    for key_node, value_node in root.value:
        keys = {}
        if isinstance(value_node, yaml.MappingNode):
            keys = {str(k.value): k.start_mark.line + 1 for k, _ in value_node.value}
        lines[str(key_node.value)] = (key_node.start_mark.line + 1, keys)
    return lines


def _coerce(value: Any, hint: Any, key: str, line: Optional[int]) -> Any:
    """Convert a YAML value to the annotated field type"""
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)

    if origin is Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], key, line)

    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"expected a list, got {value!r}", key=key, line=line)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(v, args[0], key, line) for v in value)
        if len(value) != len(args):
            raise ConfigurationError(f"expected {len(args)} values, got {len(value)}", key=key, line=line)
        return tuple(_coerce(v, a, key, line) for v, a in zip(value, args))

    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigurationError(f"expected a mapping, got {value!r}", key=key, line=line)
        key_type, value_type = args
        return {_coerce(k, key_type, key, line): _coerce(v, value_type, key, line) for k, v in value.items()}

    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"expected true/false, got {value!r}", key=key, line=line)
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"expected an integer, got {value!r}", key=key, line=line)
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"expected a number, got {value!r}", key=key, line=line)
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"expected a string, got {value!r}", key=key, line=line)
        return value
    return value


def _build_section(cls: type, name: str, data: Any, line: int, key_lines: Dict[str, int]):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigurationError(f"section must be a mapping, got {data!r}", key=name, line=line)
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    values = {}
    for key, value in data.items():
        key = str(key)
        if key not in known:
            raise ConfigurationError(f"unknown key in section '{name}'", key=key, line=key_lines.get(key, line))
        values[key] = _coerce(value, hints[key], key, key_lines.get(key, line))
    section = cls(**values)
    try:
        section.validate()
    except ConfigurationError as e:
        if e.line is not None or e.key is None:
            raise
        raise ConfigurationError(e.message, key=e.key, line=key_lines.get(e.key, line)) from e
    return section


def parse_config(text: str) -> RunConfig:
    """
    Parse a YAML configuration.

    Missing sections and keys take their defaults; an empty document is
    the all-defaults configuration.

    Args:
        text: YAML document

    Returns:
        Validated RunConfig

    Raises:
        ConfigurationError: Malformed YAML, unknown section or key, wrong
            value type, or a violated invariant (key and line attached)
    """
    try:
        data = yaml.safe_load(text)
        lines = _section_lines(text) if data else {}
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        raise ConfigurationError(f"invalid YAML: {e}", line=mark.line + 1 if mark else None) from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError("top level must be a mapping of sections", line=1)

    sections = {}
    for name, value in data.items():
        name = str(name)
        line, key_lines = lines.get(name, (None, {}))
        if name not in SECTIONS:
            raise ConfigurationError("unknown section", key=name, line=line)
        sections[name] = _build_section(SECTIONS[name], name, value, line, key_lines)

    config = RunConfig(**sections)
    config.validate()
    return config


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def config_to_dict(config: RunConfig) -> dict:
    return {
        name: {f.name: _plain(getattr(getattr(config, name), f.name)) for f in dataclasses.fields(SECTIONS[name])}
        for name in SECTIONS
    }


def serialize_config(config: RunConfig) -> str:
    """Resolved configuration as YAML; parse_config of the result gives an equal config"""
    return yaml.safe_dump(config_to_dict(config), sort_keys=False, default_flow_style=None)


def load_config(config_path: Union[str, Path] = "config/config.yaml") -> RunConfig:
    """
    Load and parse a configuration file.

    Raises:
        FileNotFoundError: The file does not exist
        ConfigurationError: The file is invalid
    """
    config = parse_config(load_config_text(str(config_path)))
    logger.debug(f"Configuration loaded from {config_path}")
    return config


def write_resolved_config(config: RunConfig, out_dir: Union[str, Path]) -> Path:
    """Echo the resolved configuration next to the results"""
    path = Path(out_dir) / "resolved_config.yaml"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_config(config))
    return path
