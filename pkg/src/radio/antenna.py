"""Sectored steering-antenna model"""

import math
from dataclasses import dataclass

import numpy as np

from src.utils.errors import ConfigurationError


@dataclass(frozen=True)
class AntennaPattern:
    """Gaussian main lobe clipped at a sidelobe floor"""
    peak_gain_dbi: float = 25.0  # Beam gain
    hpbw_rad: float = math.radians(30.0)  # Half-power beamwidth, azimuth and elevation
    sidelobe_floor_dbi: float = -10.0

    def __post_init__(self):
        if not self.peak_gain_dbi > self.sidelobe_floor_dbi:
            raise ConfigurationError("peak gain must exceed the sidelobe floor", key="peak_gain_dbi")
        if not 0.0 < self.hpbw_rad < math.pi:
            raise ConfigurationError("half-power beamwidth must lie in (0, 180) degrees", key="hpbw_deg")


def antenna_gain(pattern: AntennaPattern, offset: float) -> float:
    """
    Directional gain at an angular offset from boresight.

    Args:
        pattern: Antenna pattern
        offset: Angle from boresight in radians, within [0, pi]

    Returns:
        Gain in dBi
    """
    ratio = offset / pattern.hpbw_rad
    return max(pattern.peak_gain_dbi - 12.0 * ratio * ratio, pattern.sidelobe_floor_dbi)


def antenna_gain_array(pattern: AntennaPattern, offsets: np.ndarray) -> np.ndarray:
    """Vectorized antenna_gain"""
    ratio = np.asarray(offsets, dtype=float) / pattern.hpbw_rad
    return np.maximum(pattern.peak_gain_dbi - 12.0 * ratio * ratio, pattern.sidelobe_floor_dbi)
