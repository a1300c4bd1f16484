"""Single-carrier MCS table and SNR-to-rate mapping"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

from src.utils.errors import ConfigurationError


# PHY payload rates of the single-carrier MCSs
SC_PHY_RATES_MBPS = {
    0: 27.5,
    1: 385.0,
    4: 1155.0,
    5: 1251.25,
    9: 2502.5,
    12: 4620.0,
}

# Minimum SNR per MCS (dB); simulator constants, overridable from the mcs section
DEFAULT_THRESHOLDS_DB = {
    0: 1.0,
    1: 5.0,
    4: 9.0,
    5: 10.0,
    9: 15.0,
    12: 20.0,
}


@dataclass(frozen=True)
class McsEntry:
    mcs_index: int
    phy_rate_mbps: float
    min_snr_db: float


@dataclass(frozen=True)
class McsConfig:
    """MCS section: per-index SNR thresholds and PHY rates"""
    thresholds_db: Dict[int, float] = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS_DB))
    rates_mbps: Dict[int, float] = field(default_factory=lambda: dict(SC_PHY_RATES_MBPS))

    def validate(self) -> None:
        extra = set(self.rates_mbps) - set(self.thresholds_db)
        if extra:
            raise ConfigurationError(f"no threshold for MCS {sorted(extra)}", key="thresholds_db")
        self.build_table()

    def build_table(self) -> "McsTable":
        entries = []
        for index in sorted(self.thresholds_db):
            if index not in self.rates_mbps:
                raise ConfigurationError(f"no PHY rate for MCS {index}", key="rates_mbps")
            entries.append(McsEntry(index, float(self.rates_mbps[index]), float(self.thresholds_db[index])))
        return McsTable(tuple(entries))


class McsTable:
    """Ordered MCS entries; rates and thresholds strictly increase together"""

    def __init__(self, entries: Iterable[McsEntry]):
        self.entries: Tuple[McsEntry, ...] = tuple(entries)
        if not self.entries or self.entries[0].mcs_index != 0:
            raise ConfigurationError("MCS table must start with the control entry MCS 0", key="thresholds_db")
        for prev, cur in zip(self.entries, self.entries[1:]):
            if cur.phy_rate_mbps <= prev.phy_rate_mbps:
                raise ConfigurationError(
                    f"PHY rate of MCS {cur.mcs_index} does not exceed MCS {prev.mcs_index}", key="rates_mbps"
                )
            if cur.min_snr_db <= prev.min_snr_db:
                raise ConfigurationError(
                    f"threshold of MCS {cur.mcs_index} does not exceed MCS {prev.mcs_index}", key="thresholds_db"
                )
        self._by_index = {e.mcs_index: e for e in self.entries}

    @classmethod
    def default(cls) -> "McsTable":
        return McsConfig().build_table()

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, mcs_index: int) -> bool:
        return mcs_index in self._by_index

    def entry(self, mcs_index: int) -> McsEntry:
        return self._by_index[mcs_index]

    def rate_mbps(self, mcs_index: int) -> float:
        return self._by_index[mcs_index].phy_rate_mbps

    def min_snr_db(self, mcs_index: int) -> float:
        return self._by_index[mcs_index].min_snr_db

    @property
    def control(self) -> McsEntry:
        return self.entries[0]

    @property
    def top(self) -> McsEntry:
        return self.entries[-1]


def mcs_for_snr(table: McsTable, snr_db: float) -> Optional[int]:
    """
    Highest-rate MCS whose threshold the SNR meets.

    Args:
        table: MCS table
        snr_db: Signal-to-noise (or interference-plus-noise) ratio in dB

    Returns:
        MCS index, or None when the SNR is below the MCS 0 threshold
    """
    selected = None
    for entry in table.entries:
        if entry.min_snr_db <= snr_db:
            selected = entry.mcs_index
        else:
            break
    return selected


def mcs_rank(table: McsTable, mcs_index: Optional[int]) -> int:
    """Position of an MCS in the table; -1 for an infeasible link"""
    if mcs_index is None:
        return -1
    return table.entries.index(table.entry(mcs_index))
