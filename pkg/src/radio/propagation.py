"""Line-of-sight propagation, link budgets and the simulator's precomputed link table"""

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from src.environment.geometry import ApNode, Environment, Point3, angle_offset
from src.radio.antenna import AntennaPattern, antenna_gain
from src.radio.mcs import McsTable, mcs_for_snr
from src.utils.errors import ConfigurationError, GeometryError
from src.utils.helpers import db_to_mw, mw_to_db

SPEED_OF_LIGHT = 299792458.0
MIN_DISTANCE_M = 0.1
THERMAL_DENSITY_DBM_HZ = -174.0

# Fixed offset keeping hashed millimetre coordinates non-negative
_POSITION_HASH_OFFSET = 1 << 20


@dataclass(frozen=True)
class NoiseModel:
    noise_figure_db: float = 7.1
    bandwidth_hz: float = 2.16e9
    thermal_density_dbm_hz: float = THERMAL_DENSITY_DBM_HZ

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ConfigurationError("bandwidth must be positive", key="bandwidth_hz")


@dataclass(frozen=True)
class LinkBudget:
    rx_power_dbm: float
    snr_db: float
    mcs: Optional[int] = None


@dataclass(frozen=True)
class RadioConfig:
    """Radio section: carriers, transmit powers, beam pattern and noise"""
    carrier_mmw_hz: float = 60.48e9  # Channel 2
    carrier_wifi_hz: float = 5.18e9  # Channel 36
    tx_power_mmw_dbm: float = 10.0
    tx_power_wifi_dbm: float = 20.0
    peak_gain_dbi: float = 25.0
    hpbw_deg: float = 30.0
    sidelobe_floor_dbi: float = -10.0
    rx_gain_quasi_omni_dbi: float = 0.0
    noise_figure_db: float = 7.1
    bandwidth_hz: float = 2.16e9
    shadowing_sigma_db: float = 2.0  # Log-normal Wi-Fi shadowing
    measurement_sigma_db: float = 1.0  # Online Wi-Fi reading noise
    shadowing_seed: int = 0
    cca_threshold_dbm: float = -68.0  # 60 GHz energy-detect level

    def validate(self) -> None:
        for key in ("carrier_mmw_hz", "carrier_wifi_hz"):
            if getattr(self, key) <= 0:
                raise ConfigurationError("must be positive", key=key)
        for key in ("shadowing_sigma_db", "measurement_sigma_db"):
            if getattr(self, key) < 0:
                raise ConfigurationError("must be >= 0", key=key)
        # Derived models validate themselves on construction
        _ = (self.pattern, self.noise)

    @property
    def pattern(self) -> AntennaPattern:
        return AntennaPattern(self.peak_gain_dbi, math.radians(self.hpbw_deg), self.sidelobe_floor_dbi)

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.noise_figure_db, self.bandwidth_hz)

    def shadowing(self) -> "ShadowingModel":
        return ShadowingModel(self.shadowing_sigma_db, self.shadowing_seed, self.measurement_sigma_db)


def path_loss_db(distance_m: float, freq_hz: float) -> float:
    """
    Free-space path loss 20*log10(4*pi*d*f/c).

    Distances below 0.1 m are clamped to 0.1 m.
    """
    d = max(distance_m, MIN_DISTANCE_M)
    return 20.0 * math.log10(4.0 * math.pi * d * freq_hz / SPEED_OF_LIGHT)


def rx_power_mmw(
    ap: ApNode,
    sector_id: int,
    target: Point3,
    pattern: AntennaPattern,
    rx_gain_dbi: float = 0.0,
    freq_hz: float = 60.48e9,
) -> float:
    """
    60 GHz received power from one AP sector at a quasi-omni receiver.

    Args:
        ap: Transmitting AP
        sector_id: Transmit sector (1..D_n)
        target: Receiver position
        pattern: Transmit antenna pattern
        rx_gain_dbi: Receiver quasi-omni gain
        freq_hz: Carrier frequency

    Returns:
        Received power in dBm
    """
    offset = angle_offset(ap, sector_id, target)
    return (
        ap.tx_power_mmw_dbm
        + antenna_gain(pattern, offset)
        + rx_gain_dbi
        - path_loss_db(ap.position.distance_to(target), freq_hz)
    )


def noise_power_dbm(nm: NoiseModel) -> float:
    """Thermal noise floor plus receiver noise figure"""
    return nm.thermal_density_dbm_hz + 10.0 * math.log10(nm.bandwidth_hz) + nm.noise_figure_db


def snr_db(p_signal_dbm: float, p_noise_dbm: float) -> float:
    return p_signal_dbm - p_noise_dbm


def sinr_db(p_signal_dbm: float, interferer_powers_dbm: Iterable[float], p_noise_dbm: float) -> float:
    """
    Signal over interference-plus-noise, summed in the linear domain.

    Args:
        p_signal_dbm: Desired signal power
        interferer_powers_dbm: Interferer powers at the receiver
        p_noise_dbm: Noise power

    Returns:
        SINR in dB
    """
    interferers = [p for p in interferer_powers_dbm if p != -math.inf]
    if not interferers:
        return snr_db(p_signal_dbm, p_noise_dbm)
    total_mw = db_to_mw(p_noise_dbm) + sum(db_to_mw(p) for p in interferers)
    return p_signal_dbm - mw_to_db(total_mw)


def link_budget(rx_power_dbm: float, noise_dbm: float, table: McsTable) -> LinkBudget:
    snr = snr_db(rx_power_dbm, noise_dbm)
    return LinkBudget(rx_power_dbm=rx_power_dbm, snr_db=snr, mcs=mcs_for_snr(table, snr))


class ShadowingModel:
    """
    Deterministic log-normal shadowing on the 5 GHz band.

    The shadowing term at a position is drawn from a generator keyed by
    (seed, AP id, millimetre coordinates), so every query of the same
    location returns the same value. Measurement noise is a separate,
    caller-supplied stream.
    """

    def __init__(self, sigma_db: float = 2.0, seed: int = 0, measurement_sigma_db: float = 1.0):
        self.sigma_db = sigma_db
        self.seed = seed
        self.measurement_sigma_db = measurement_sigma_db

    def shadowing_db(self, ap_id: int, target: Point3) -> float:
        if self.sigma_db == 0.0:
            return 0.0
        key = [
            int(self.seed) & 0xFFFFFFFF,
            int(ap_id),
            int(round(target.x * 1000.0)) + _POSITION_HASH_OFFSET,
            int(round(target.y * 1000.0)) + _POSITION_HASH_OFFSET,
            int(round(target.z * 1000.0)) + _POSITION_HASH_OFFSET,
        ]
        return float(np.random.default_rng(key).standard_normal()) * self.sigma_db

    def measurement_noise_db(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.measurement_sigma_db == 0.0:
            return np.zeros(size)
        return rng.standard_normal(size) * self.measurement_sigma_db


def wifi_rss_dbm(
    ap: ApNode,
    target: Point3,
    shadowing: Optional[ShadowingModel] = None,
    freq_hz: float = 5.18e9,
) -> float:
    """
    Mean 5 GHz RSS with omni antennas at both ends.

    Args:
        ap: Transmitting AP
        target: Receiver position
        shadowing: Position-hashed shadowing; None disables it
        freq_hz: Wi-Fi carrier

    Returns:
        RSS in dBm
    """
    distance = ap.position.distance_to(target)
    if distance == 0.0:
        raise GeometryError(f"Target {target} coincides with AP {ap.id}")
    rss = ap.tx_power_wifi_dbm - path_loss_db(distance, freq_hz)
    if shadowing is not None:
        rss += shadowing.shadowing_db(ap.id, target)
    return rss


class LinkTable:
    """
    Precomputed 60 GHz link powers between every pair of nodes.

    Node indices: APs are 0..N-1, UEs are N..N+M-1. An AP transmits or
    receives on a sector (1..D); a sector of None means quasi-omni. UEs are
    always quasi-omni. Powers compose as P_tx + G_tx + G_rx - PL.
    """

    def __init__(self, env: Environment, config: RadioConfig):
        self.env = env
        self.config = config
        self.num_aps = env.num_aps
        self.num_nodes = env.num_aps + env.num_ues
        self.pattern = config.pattern
        self.rx_omni_dbi = config.rx_gain_quasi_omni_dbi
        self.noise_dbm = noise_power_dbm(config.noise)

        positions = [ap.position for ap in env.aps] + list(env.ues)
        self.positions = positions
        self.tx_power_dbm = np.array(
            [ap.tx_power_mmw_dbm for ap in env.aps] + [config.tx_power_mmw_dbm] * env.num_ues
        )

        self.path_loss = np.zeros((self.num_nodes, self.num_nodes))
        for i in range(self.num_nodes):
            for j in range(i + 1, self.num_nodes):
                pl = path_loss_db(positions[i].distance_to(positions[j]), config.carrier_mmw_hz)
                self.path_loss[i, j] = self.path_loss[j, i] = pl

        # gain[ap][sector - 1][node]
        self.sector_gain = []
        for ap in env.aps:
            table = np.full((ap.num_sectors, self.num_nodes), self.pattern.peak_gain_dbi)
            for node, p in enumerate(positions):
                if node == ap.id or p.distance_to(ap.position) == 0.0:
                    continue
                for s in ap.sector_ids:
                    table[s - 1, node] = antenna_gain(self.pattern, angle_offset(ap, s, p))
            self.sector_gain.append(table)

    def is_ap(self, node: int) -> bool:
        return 0 <= node < self.num_aps

    def ue_node(self, ue_index: int) -> int:
        return self.num_aps + ue_index

    def num_sectors(self, ap_id: int) -> int:
        return self.env.aps[ap_id].num_sectors

    def gain_dbi(self, node: int, sector: Optional[int], peer: int) -> float:
        if sector is None or not self.is_ap(node):
            return self.rx_omni_dbi
        return float(self.sector_gain[node][sector - 1, peer])

    def power_dbm(self, tx: int, tx_sector: Optional[int], rx: int, rx_sector: Optional[int] = None) -> float:
        """Received power at ``rx`` of a frame sent by ``tx``"""
        return (
            float(self.tx_power_dbm[tx])
            + self.gain_dbi(tx, tx_sector, rx)
            + self.gain_dbi(rx, rx_sector, tx)
            - float(self.path_loss[tx, rx])
        )

    def best_sector(self, ap_id: int, peer: int, sectors: Optional[Sequence[int]] = None) -> int:
        """Strongest AP sector toward a peer; ties go to the lowest sector ID"""
        candidates = list(sectors) if sectors is not None else list(self.env.aps[ap_id].sector_ids)
        best, best_power = candidates[0], -math.inf
        for s in candidates:
            p = self.power_dbm(ap_id, s, peer)
            if p > best_power:
                best, best_power = s, p
        return best

    def snr_db(self, tx: int, tx_sector: Optional[int], rx: int, rx_sector: Optional[int] = None) -> float:
        return snr_db(self.power_dbm(tx, tx_sector, rx, rx_sector), self.noise_dbm)
