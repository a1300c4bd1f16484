"""MAC frames, packets and reception outcomes"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from src.utils.errors import ProtocolError

CONTROLLER = -1  # Node index of the BBU / APC on the wired fronthaul


class FrameKind(str, Enum):
    SSW = "SSW"
    SSW_FEEDBACK = "SSW-Feedback"
    TRIGGER_SWEEP = "TriggerSweep"
    RSSI_FEEDBACK = "RSSI-Feedback"
    CLI = "CLI"
    RTS = "RTS"
    CTS = "CTS"
    BLI = "BLI"
    API = "API"
    WIFI_M_REQ = "WiFi-M-Req"
    WIFI_M_RESP = "WiFi-M-Resp"
    SWITCH_ON = "SwitchOn"
    NAVSET = "NAVset"
    BRP = "BRP"
    FBK = "FBK"
    BID = "BID"
    DATA = "DATA"
    ACK = "ACK"


class Band(str, Enum):
    WIFI = "5GHz"
    MMW = "60GHz"
    WIRED = "wired"


class Outcome(str, Enum):
    SUCCESS = "success"
    COLLISION = "collision"
    BLOCKED = "blocked"


@dataclass
class MacFrame:
    """
    One frame on the air (or on the wired fronthaul).

    ``sector_id`` is the transmit sector of an AP on 60 GHz, ``rx_sector``
    the receive sector an AP points at the sender; both are None otherwise.
    ``dst`` None is a broadcast.
    """
    kind: FrameKind
    band: Band
    src: int
    dst: Optional[int]
    duration: float
    sector_id: Optional[int] = None
    rx_sector: Optional[int] = None
    payload_bits: int = 0
    mcs: Optional[int] = None

    def __post_init__(self):
        if self.band != Band.MMW and (self.sector_id is not None or self.rx_sector is not None):
            raise ProtocolError(f"{self.kind.value} on {self.band.value} cannot carry a sector")
        if self.duration < 0:
            raise ProtocolError(f"{self.kind.value} has negative duration {self.duration}")
        if self.payload_bits and self.kind != FrameKind.DATA:
            raise ProtocolError(f"only DATA frames carry payload, not {self.kind.value}")


def data_duration(payload_bits: int, phy_rate_mbps: float, preamble_s: float) -> float:
    """DATA airtime: fixed preamble plus payload at the PHY rate"""
    return preamble_s + payload_bits / (phy_rate_mbps * 1e6)


@dataclass
class Packet:
    id: int
    ue_id: int
    size_bits: int
    arrival_time: float
    delivery_time: Optional[float] = None
    retx_count: int = 0
