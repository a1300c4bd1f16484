"""Propagation, antenna gain, SNR/SINR and MCS mapping"""

from src.radio.antenna import AntennaPattern, antenna_gain
from src.radio.blockage import BlockageConfig, BlockageProcess
from src.radio.mcs import McsConfig, McsEntry, McsTable, mcs_for_snr
from src.radio.propagation import (
    LinkBudget,
    LinkTable,
    NoiseModel,
    RadioConfig,
    ShadowingModel,
    noise_power_dbm,
    path_loss_db,
    rx_power_mmw,
    sinr_db,
    snr_db,
    wifi_rss_dbm,
)

__all__ = [
    'AntennaPattern',
    'BlockageConfig',
    'BlockageProcess',
    'LinkBudget',
    'LinkTable',
    'McsConfig',
    'McsEntry',
    'McsTable',
    'NoiseModel',
    'RadioConfig',
    'ShadowingModel',
    'antenna_gain',
    'mcs_for_snr',
    'noise_power_dbm',
    'path_loss_db',
    'rx_power_mmw',
    'sinr_db',
    'snr_db',
    'wifi_rss_dbm',
]
