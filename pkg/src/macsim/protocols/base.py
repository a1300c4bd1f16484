"""Base class and shared frame/timer helpers for the MAC protocols"""

from abc import ABC, abstractmethod
from typing import Callable, Optional

from src.macsim.engine import EventKind, SimEvent
from src.macsim.frames import Band, FrameKind, MacFrame, Outcome, data_duration
from src.macsim.medium import FrameCallback, Transmission
from src.macsim.metrics import MetricsRecord
from src.macsim.scenario import Scenario
from src.radio.mcs import mcs_for_snr
from src.utils.logger import get_logger

logger = get_logger()


class MacProtocol(ABC):
    """Base class for all MAC protocols"""

    def __init__(self, scenario: Scenario, name: str, description: str):
        self.name = name
        self.description = description
        self.sc = scenario
        self.loop = scenario.loop
        self.link = scenario.link
        self.mac = scenario.mac
        self.mcs_table = scenario.mcs_table
        self.record = scenario.record
        self.record.protocol = name

    @abstractmethod
    def start(self) -> None:
        """
        Schedule the protocol's first events.

        Called once at t = 0, before blockage and the event loop start.
        """
        pass

    def run(self) -> MetricsRecord:
        """
        Run the protocol to the scenario horizon.

        Returns:
            MetricsRecord with conservation checked
        """
        logger.info(
            f"Running {self.name}: {self.sc.num_aps} APs, {self.sc.num_ues} UEs, "
            f"seed {self.sc.seed}, horizon {self.sc.horizon_s}s"
        )
        self.start()
        self.sc.schedule_blockage()
        self.record.events_processed = self.loop.run(self.sc.horizon_s)
        return self.sc.finalize()

    # Frames

    def send_mmw(
        self,
        kind: FrameKind,
        src: int,
        dst: Optional[int],
        on_end: Optional[FrameCallback] = None,
        sector: Optional[int] = None,
        rx_sector: Optional[int] = None,
        duration: Optional[float] = None,
    ) -> Transmission:
        frame = MacFrame(
            kind=kind, band=Band.MMW, src=src, dst=dst,
            duration=self.mac.ctrl_mmw_s if duration is None else duration,
            sector_id=sector, rx_sector=rx_sector,
        )
        return self.sc.mmw.transmit(frame, on_end)

    def send_data(
        self, ap: int, ue: int, sector: int, mcs: int, on_end: FrameCallback
    ) -> Transmission:
        bits = self.sc.settings.traffic.packet_bits
        frame = MacFrame(
            kind=FrameKind.DATA, band=Band.MMW, src=ap, dst=self.sc.ue_node(ue),
            duration=self.data_airtime(mcs), sector_id=sector, payload_bits=bits, mcs=mcs,
        )
        return self.sc.mmw.transmit(frame, on_end)

    def send_ack(self, ue: int, ap: int, sector: Optional[int], on_end: FrameCallback) -> Transmission:
        return self.send_mmw(FrameKind.ACK, self.sc.ue_node(ue), ap, on_end, rx_sector=sector)

    def send_wifi(self, kind: FrameKind, src: int, dst: Optional[int], on_end: Optional[FrameCallback] = None) -> Transmission:
        frame = MacFrame(kind=kind, band=Band.WIFI, src=src, dst=dst, duration=self.mac.ctrl_wifi_s)
        return self.sc.wifi.transmit(frame, on_end)

    def send_wired(self, kind: FrameKind, src: int, dst: Optional[int], on_end: Optional[FrameCallback] = None) -> Transmission:
        frame = MacFrame(kind=kind, band=Band.WIRED, src=src, dst=dst, duration=self.mac.wired_latency_s)
        return self.sc.wired.send(frame, on_end)

    def data_airtime(self, mcs: int) -> float:
        return data_duration(
            self.sc.settings.traffic.packet_bits, self.mcs_table.rate_mbps(mcs), self.mac.data_preamble_s
        )

    def select_mcs(self, snr_db: float) -> Optional[int]:
        return mcs_for_snr(self.mcs_table, snr_db)

    # Timers

    def after(self, delay: float, handler: Callable[..., None], payload=None) -> SimEvent:
        return self.loop.schedule(delay, EventKind.TIMER, handler, payload)

    def at(self, time: float, handler: Callable[..., None], payload=None) -> SimEvent:
        return self.loop.schedule_at(time, EventKind.TIMER, handler, payload)

    # Accounting

    def account_data(self, ue: int, outcome: Outcome) -> bool:
        """
        Settle the head packet of a UE after its DATA frame ended.

        A received DATA frame delivers the packet; a lost ACK afterwards
        does not bring it back.

        Returns:
            True when the frame was received
        """
        queue = self.sc.queues[ue]
        if outcome == Outcome.SUCCESS:
            queue.deliver_hol(self.loop.now)
            return True
        if queue.fail_hol(self.loop.now):
            logger.debug(f"UE {ue}: packet dropped after {self.mac.max_retx} retransmissions")
        return False

    def fail_attempt(self, ue: int) -> None:
        """Count a failed access attempt against the head packet, if any"""
        queue = self.sc.queues[ue]
        if queue.has_backlog(self.loop.now) and queue.fail_hol(self.loop.now):
            logger.debug(f"UE {ue}: packet dropped after {self.mac.max_retx} retransmissions")
