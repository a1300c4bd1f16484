"""Offline fingerprint databases: Wi-Fi RSS map, best-sector map and best-sector power"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.environment.geometry import Environment
from src.radio.mcs import McsTable
from src.radio.propagation import RadioConfig, noise_power_dbm, rx_power_mmw, snr_db, wifi_rss_dbm
from src.utils.errors import ConfigurationError
from src.utils.logger import get_logger

logger = get_logger()

NULL_SECTOR = -1


@dataclass
class FingerprintDatabases:
    """
    Per (learning point, AP) tables.

    psi: mean Wi-Fi RSS (dBm)
    phi: best 60 GHz sector ID, NULL_SECTOR where the AP cannot cover the LP
    p_off_dbm: rx power at the best sector, -inf (zero power) where phi is null
    num_sectors: sector count D_n of every AP
    sector_power_dbm: optional L x N x max(D) rx power of every sector,
        -inf past an AP's own sector count (not persisted to the flat file)
    """
    psi: np.ndarray
    phi: np.ndarray
    p_off_dbm: np.ndarray
    num_sectors: Tuple[int, ...]
    sector_power_dbm: Optional[np.ndarray] = None

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        self.phi = np.asarray(self.phi, dtype=int)
        self.p_off_dbm = np.asarray(self.p_off_dbm, dtype=float)
        self.num_sectors = tuple(int(d) for d in self.num_sectors)

        if self.psi.ndim != 2 or self.psi.shape != self.phi.shape or self.psi.shape != self.p_off_dbm.shape:
            raise ConfigurationError("psi, phi and p_off must share an L x N shape", key="databases")
        if len(self.num_sectors) != self.num_aps:
            raise ConfigurationError("one sector count per AP is required", key="databases")
        if self.sector_power_dbm is not None:
            self.sector_power_dbm = np.asarray(self.sector_power_dbm, dtype=float)
            expected = (self.num_lps, self.num_aps, max(self.num_sectors, default=0))
            if self.sector_power_dbm.shape != expected:
                raise ConfigurationError(f"sector power map must have shape {expected}", key="databases")

        null = self.phi == NULL_SECTOR
        if not np.array_equal(null, np.isneginf(self.p_off_dbm)):
            raise ConfigurationError("phi is null exactly where p_off is zero power", key="databases")
        for n, d in enumerate(self.num_sectors):
            column = self.phi[:, n][~null[:, n]]
            if column.size and (column.min() < 1 or column.max() > d):
                raise ConfigurationError(f"phi of AP {n} outside 1..{d}", key="databases")

    @property
    def num_lps(self) -> int:
        return self.psi.shape[0]

    @property
    def num_aps(self) -> int:
        return self.psi.shape[1]

    @property
    def p_off_mw(self) -> np.ndarray:
        """P_OFF in the linear domain; null entries are 0"""
        out = np.zeros_like(self.p_off_dbm)
        covered = self.phi != NULL_SECTOR
        out[covered] = 10.0 ** (self.p_off_dbm[covered] / 10.0)
        return out

    def sector(self, lp: int, ap_id: int) -> Optional[int]:
        value = int(self.phi[lp, ap_id])
        return None if value == NULL_SECTOR else value

    def covered(self, ap_id: int) -> np.ndarray:
        """LP indices with a non-null best sector for the AP"""
        return np.flatnonzero(self.phi[:, ap_id] != NULL_SECTOR)


def best_sector(powers_dbm: Sequence[float]) -> int:
    """Sector ID (1-based) of the strongest power; ties go to the lowest ID"""
    best, best_power = 1, -math.inf
    for index, p in enumerate(powers_dbm, start=1):
        if p > best_power:
            best, best_power = index, p
    return best


def build_databases(env: Environment, radio: RadioConfig, mcs_table: McsTable) -> FingerprintDatabases:
    """
    Build the offline databases from the learning points.

    Args:
        env: Scenario (APs and learning points)
        radio: Radio configuration
        mcs_table: MCS table; an LP whose best-sector SNR misses the MCS 0
            threshold is not covered by that AP

    Returns:
        FingerprintDatabases
    """
    pattern = radio.pattern
    noise_dbm = noise_power_dbm(radio.noise)
    shadowing = radio.shadowing()
    floor_db = mcs_table.control.min_snr_db

    L, N = env.num_lps, env.num_aps
    psi = np.zeros((L, N))
    phi = np.full((L, N), NULL_SECTOR, dtype=int)
    p_off = np.full((L, N), -np.inf)
    sector_power = np.full((L, N, max((ap.num_sectors for ap in env.aps), default=0)), -np.inf)

    for l, lp in enumerate(env.learning_points):
        for ap in env.aps:
            psi[l, ap.id] = wifi_rss_dbm(ap, lp, shadowing, radio.carrier_wifi_hz)
            powers = [
                rx_power_mmw(ap, s, lp, pattern, radio.rx_gain_quasi_omni_dbi, radio.carrier_mmw_hz)
                for s in ap.sector_ids
            ]
            sector_power[l, ap.id, :len(powers)] = powers
            d_star = best_sector(powers)
            if snr_db(powers[d_star - 1], noise_dbm) >= floor_db:
                phi[l, ap.id] = d_star
                p_off[l, ap.id] = powers[d_star - 1]

    db = FingerprintDatabases(psi, phi, p_off, tuple(ap.num_sectors for ap in env.aps), sector_power)
    null_count = int(np.sum(phi == NULL_SECTOR))
    logger.info(f"Fingerprint databases built: {L} LPs x {N} APs, {null_count} null entries")
    return db


def group_by_best_sector(db: FingerprintDatabases, ap_id: int) -> Dict[int, List[int]]:
    """
    Partition the LPs covered by an AP by their best sector.

    Returns:
        Sector ID -> LP indices (ascending), keys in ascending sector order
    """
    if not 0 <= ap_id < db.num_aps:
        raise ConfigurationError(f"no AP {ap_id} in the databases", key="ap_id")
    groups: Dict[int, List[int]] = {}
    for lp in range(db.num_lps):
        sector = db.sector(lp, ap_id)
        if sector is not None:
            groups.setdefault(sector, []).append(lp)
    return dict(sorted(groups.items()))
