"""Helper utility functions"""

import math
import zlib
from pathlib import Path

import numpy as np


def load_config_text(config_path: str = "config/config.yaml") -> str:
    """
    Read a configuration file as text.

    Args:
        config_path: Path to config file

    Returns:
        File contents
    """
    config_file = Path(config_path)
    if not config_file.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")

    return config_file.read_text()


def db_to_mw(value_db: float) -> float:
    """Convert dBm (or dB) to linear milliwatts; -inf maps to 0"""
    if value_db == -math.inf:
        return 0.0
    return 10.0 ** (value_db / 10.0)


def mw_to_db(value_mw: float) -> float:
    """Convert linear milliwatts to dBm; 0 maps to -inf"""
    if value_mw <= 0.0:
        return -math.inf
    return 10.0 * math.log10(value_mw)


def named_rng(seed: int, *names) -> np.random.Generator:
    """
    Build an independent generator for a named purpose.

    The stream depends only on (seed, names), so enabling one randomness
    source never shifts the draws of another.

    Args:
        seed: Master seed
        names: Purpose labels (strings or non-negative integers)

    Returns:
        Seeded numpy Generator
    """
    key = [int(seed) & 0xFFFFFFFF]
    for name in names:
        if isinstance(name, str):
            key.append(zlib.crc32(name.encode("utf-8")))
        else:
            key.append(int(name) & 0xFFFFFFFF)
    return np.random.default_rng(key)
