"""Tests for YAML configuration parsing, validation and the resolved-config echo"""

from pathlib import Path

import pytest

from src.cli.config import (
    RunConfig,
    RunSettings,
    load_config,
    parse_config,
    serialize_config,
    write_resolved_config,
)
from src.utils.errors import ConfigurationError

SHIPPED_CONFIG = Path(__file__).resolve().parent.parent / "config" / "config.yaml"


def test_empty_document_gives_defaults():
    """An empty file is the all-defaults configuration"""
    assert parse_config("") == RunConfig()
    assert parse_config("# only a comment\n") == RunConfig()


def test_partial_section_keeps_defaults():
    """Omitted keys keep their defaults"""
    config = parse_config("mac:\n  max_retx: 3\n")
    assert config.mac.max_retx == 3
    assert config.mac.cw_min == 16
    assert config.environment.num_aps == 8


def test_invalid_value_reports_key_and_line():
    """A violated invariant names the key and its line"""
    with pytest.raises(ConfigurationError) as exc:
        parse_config("mac:\n  max_retx: -1\n")
    assert exc.value.key == "max_retx"
    assert exc.value.line == 2


def test_unknown_key():
    """Unknown keys are rejected with their line"""
    with pytest.raises(ConfigurationError) as exc:
        parse_config("radio:\n  tx_power_mmw_dbm: 10.0\n  beam_width: 3\n")
    assert exc.value.key == "beam_width"
    assert exc.value.line == 3


def test_unknown_section():
    """Unknown sections are rejected"""
    with pytest.raises(ConfigurationError) as exc:
        parse_config("trading:\n  enabled: true\n")
    assert exc.value.key == "trading"
    assert exc.value.line == 1


def test_type_mismatch():
    """A string where a number is expected is rejected"""
    with pytest.raises(ConfigurationError) as exc:
        parse_config("traffic:\n  packet_bits: lots\n")
    assert exc.value.key == "packet_bits"


def test_bool_is_not_an_integer():
    """true is not accepted as a count"""
    with pytest.raises(ConfigurationError):
        parse_config("environment:\n  num_aps: true\n")


def test_integer_accepted_as_float():
    """Integers are valid for float fields"""
    assert parse_config("run:\n  horizon_s: 3\n").run.horizon_s == 3.0


def test_malformed_yaml():
    """Broken YAML is a configuration error"""
    with pytest.raises(ConfigurationError):
        parse_config("mac: [unclosed\n")


def test_unknown_protocol():
    """Only registered protocols may be run"""
    with pytest.raises(ConfigurationError) as exc:
        parse_config("run:\n  protocols: [baseline, magic]\n")
    assert exc.value.key == "protocols"


def test_explicit_positions_constrain_ap_counts():
    """Explicit AP positions must match every swept AP count"""
    text = (
        "environment:\n"
        "  num_aps: 2\n"
        "  ap_positions: [[3.0, 3.0, 3.0], [9.0, 3.0, 3.0]]\n"
        "run:\n"
        "  ap_counts: [2, 4]\n"
    )
    with pytest.raises(ConfigurationError) as exc:
        parse_config(text)
    assert exc.value.key == "ap_counts"

    config = parse_config(text.replace("[2, 4]", "[2]"))
    assert config.environment.ap_positions == ((3.0, 3.0, 3.0), (9.0, 3.0, 3.0))


def test_mcs_table_keys_are_integers():
    """MCS overrides are keyed by integer index"""
    config = parse_config("mcs:\n  thresholds_db: {0: 2.0, 1: 6.0}\n  rates_mbps: {0: 27.5, 1: 385.0}\n")
    table = config.mcs.build_table()
    assert len(table) == 2
    assert table.min_snr_db(1) == 6.0


def test_serialize_round_trip():
    """Parsing the echo of a configuration gives the same configuration"""
    config = parse_config("environment:\n  num_aps: 4\nmac:\n  ack_mode: simultaneous\n")
    assert parse_config(serialize_config(config)) == config
    assert parse_config(serialize_config(RunConfig())) == RunConfig()


def test_shipped_config_parses():
    """The configuration in the repository is valid"""
    config = load_config(SHIPPED_CONFIG)
    assert config.run.protocols == ("baseline", "dualband")
    assert config.run.ap_counts == (2, 4, 6, 8)
    assert config.radio.carrier_mmw_hz == 60.48e9


def test_shipped_config_matches_defaults():
    """The shipped file and the dataclass defaults describe the same run"""
    config = load_config(SHIPPED_CONFIG)
    defaults = RunConfig()
    assert config.run == defaults.run
    assert config.run.workers == RunSettings().workers
    assert config.mac == defaults.mac
    assert config.learning == defaults.learning
    assert config.traffic == defaults.traffic


def test_missing_file(tmp_path):
    """A missing file raises FileNotFoundError"""
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "absent.yaml")


def test_write_resolved_config(tmp_path):
    """The echo is written next to the results and reloads"""
    config = parse_config("run:\n  seeds: [7]\n")
    path = write_resolved_config(config, tmp_path / "out")
    assert path.name == "resolved_config.yaml"
    assert load_config(path) == config


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
