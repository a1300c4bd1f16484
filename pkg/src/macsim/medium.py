"""Shared media: 60 GHz SINR reception, the 5 GHz collision domain and the wired fronthaul"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from src.macsim.engine import EventKind, EventLoop
from src.macsim.frames import Band, MacFrame, Outcome
from src.radio.blockage import BlockageProcess
from src.radio.mcs import McsTable
from src.radio.propagation import LinkTable
from src.utils.helpers import db_to_mw, mw_to_db

EPS_S = 1e-12

FrameCallback = Callable[["Transmission", Outcome], None]


@dataclass(eq=False)
class Transmission:
    """A frame in flight and what its receiver experienced"""
    frame: MacFrame
    start: float
    end: float
    overlaps: List["Transmission"] = field(default_factory=list, repr=False)
    blocked: bool = False
    collided: bool = False  # 5 GHz overlap
    min_sinr_db: float = math.inf
    min_sinr_ap_db: float = math.inf  # Worst SINR counting AP transmitters only
    snr_db: float = math.inf  # Interference-free
    outcome: Optional[Outcome] = None
    on_end: Optional[FrameCallback] = field(default=None, repr=False)


def frame_threshold_db(frame: MacFrame, mcs_table: McsTable) -> float:
    """SINR a frame needs: its DATA MCS, or MCS 0 for control frames"""
    return mcs_table.min_snr_db(frame.mcs if frame.mcs is not None else mcs_table.control.mcs_index)


def reception_outcome(
    tx: Transmission,
    concurrent: Sequence[Transmission],
    link: LinkTable,
    mcs_table: McsTable,
) -> Outcome:
    """
    Decide whether a 60 GHz frame is received.

    The frame airtime is split at every start/end of a concurrent frame;
    within each piece the interference is constant. The frame succeeds iff
    the minimum SINR over all pieces meets the threshold of its MCS (MCS 0
    for control frames) and the link was never blocked. A receiver that is
    itself transmitting during the frame misses it. The SNR and the worst
    SINR are stored on ``tx``; broadcasts are not evaluated.

    Args:
        tx: Frame under test (``tx.blocked`` set by the medium)
        concurrent: Same-band frames overlapping it in time
        link: Link table (powers include antenna gains in both directions)
        mcs_table: MCS table

    Returns:
        Outcome
    """
    frame = tx.frame
    if frame.dst is None:
        return Outcome.BLOCKED if tx.blocked else Outcome.SUCCESS

    rx = frame.dst
    signal_dbm = link.power_dbm(frame.src, frame.sector_id, rx, frame.rx_sector)
    tx.snr_db = signal_dbm - link.noise_dbm
    if tx.blocked:
        return Outcome.BLOCKED
    noise_mw = db_to_mw(link.noise_dbm)

    cuts = {tx.start, tx.end}
    for other in concurrent:
        cuts.add(min(max(other.start, tx.start), tx.end))
        cuts.add(min(max(other.end, tx.start), tx.end))
    cuts = sorted(cuts)

    worst, worst_ap = math.inf, math.inf
    for a, b in zip(cuts, cuts[1:]):
        if b - a <= EPS_S:
            continue
        total_mw, ap_mw = 0.0, 0.0
        for other in concurrent:
            if other.start > a + EPS_S or other.end < b - EPS_S:
                continue
            if other.frame.src == rx:
                tx.min_sinr_db = -math.inf
                tx.min_sinr_ap_db = -math.inf if link.is_ap(rx) else worst_ap
                return Outcome.COLLISION
            p_mw = db_to_mw(link.power_dbm(other.frame.src, other.frame.sector_id, rx, frame.rx_sector))
            total_mw += p_mw
            if link.is_ap(other.frame.src):
                ap_mw += p_mw
        worst = min(worst, signal_dbm - mw_to_db(noise_mw + total_mw))
        worst_ap = min(worst_ap, signal_dbm - mw_to_db(noise_mw + ap_mw))
    if worst == math.inf:
        worst = worst_ap = signal_dbm - link.noise_dbm

    tx.min_sinr_db, tx.min_sinr_ap_db = worst, worst_ap
    return Outcome.SUCCESS if worst >= frame_threshold_db(frame, mcs_table) else Outcome.COLLISION


class Medium60:
    """
    60 GHz channel shared by all APs and UEs.

    Keeps the frames in flight, evaluates each with reception_outcome when
    it ends, and tracks energy-detect carrier sense at registered nodes.
    """

    def __init__(
        self,
        loop: EventLoop,
        link: LinkTable,
        mcs_table: McsTable,
        blockage: BlockageProcess,
        cca_threshold_dbm: float,
        recorder: Optional[FrameCallback] = None,
    ):
        self.loop = loop
        self.link = link
        self.mcs_table = mcs_table
        self.blockage = blockage
        self.cca_threshold_mw = db_to_mw(cca_threshold_dbm)
        self.recorder = recorder
        self.active: List[Transmission] = []
        self._sensed_mw: Dict[int, float] = {}
        self._busy: Dict[int, bool] = {}
        self._listeners: Dict[int, Callable[[bool], None]] = {}

    def add_cca_listener(self, node: int, callback: Callable[[bool], None]) -> None:
        self._listeners[node] = callback
        self._sensed_mw[node] = 0.0
        self._busy[node] = False

    def _link_blocked(self, frame: MacFrame) -> bool:
        if not self.blockage.enabled or frame.dst is None:
            return False
        src, dst = frame.src, frame.dst
        if self.link.is_ap(src) and not self.link.is_ap(dst):
            return self.blockage.is_blocked(src, dst - self.link.num_aps)
        if self.link.is_ap(dst) and not self.link.is_ap(src):
            return self.blockage.is_blocked(dst, src - self.link.num_aps)
        return False

    def _sensed_power_mw(self, tx: Transmission, node: int) -> float:
        return db_to_mw(self.link.power_dbm(tx.frame.src, tx.frame.sector_id, node, None))

    def is_busy(self, node: int) -> bool:
        """Energy detect at ``node`` (quasi-omni), or the node is transmitting itself"""
        if node in self._busy:
            return self._busy[node]
        return any(t.frame.src == node for t in self.active)

    def _refresh_cca(self) -> None:
        for node, callback in self._listeners.items():
            if not self.active:
                self._sensed_mw[node] = 0.0
            own = any(t.frame.src == node for t in self.active)
            busy = own or self._sensed_mw[node] >= self.cca_threshold_mw
            if busy != self._busy[node]:
                self._busy[node] = busy
                callback(busy)

    def transmit(self, frame: MacFrame, on_end: Optional[FrameCallback] = None) -> Transmission:
        now = self.loop.now
        tx = Transmission(frame=frame, start=now, end=now + frame.duration, on_end=on_end)
        tx.blocked = self._link_blocked(frame)
        for other in self.active:
            other.overlaps.append(tx)
            tx.overlaps.append(other)
        self.active.append(tx)
        for node in self._listeners:
            if node != frame.src:
                self._sensed_mw[node] += self._sensed_power_mw(tx, node)
        self.loop.schedule_at(tx.end, EventKind.FRAME_END, self._finish, tx)
        self._refresh_cca()
        return tx

    def _finish(self, tx: Transmission) -> None:
        self.active.remove(tx)
        for node in self._listeners:
            if node != tx.frame.src:
                self._sensed_mw[node] = max(0.0, self._sensed_mw[node] - self._sensed_power_mw(tx, node))
        tx.outcome = reception_outcome(tx, tx.overlaps, self.link, self.mcs_table)
        tx.overlaps = []
        if self.recorder is not None:
            self.recorder(tx, tx.outcome)
        if tx.on_end is not None:
            tx.on_end(tx, tx.outcome)
        self._refresh_cca()

    def on_blockage_toggle(self, ap_id: int, ue_index: int, blocked: bool) -> None:
        """A link turning blocked spoils every frame currently on it"""
        if not blocked:
            return
        ue_node = self.link.ue_node(ue_index)
        for tx in self.active:
            if {tx.frame.src, tx.frame.dst} == {ap_id, ue_node}:
                tx.blocked = True


class Medium5:
    """5 GHz single collision domain: any time overlap destroys every frame involved"""

    def __init__(self, loop: EventLoop, recorder: Optional[FrameCallback] = None):
        self.loop = loop
        self.recorder = recorder
        self.active: List[Transmission] = []
        self._listeners: List[Callable[[bool], None]] = []

    @property
    def busy(self) -> bool:
        return bool(self.active)

    def add_listener(self, callback: Callable[[bool], None]) -> None:
        self._listeners.append(callback)

    def _notify(self, busy: bool) -> None:
        for callback in list(self._listeners):
            callback(busy)

    def transmit(self, frame: MacFrame, on_end: Optional[FrameCallback] = None) -> Transmission:
        now = self.loop.now
        tx = Transmission(frame=frame, start=now, end=now + frame.duration, on_end=on_end)
        was_idle = not self.active
        if self.active:
            tx.collided = True
            for other in self.active:
                other.collided = True
        self.active.append(tx)
        self.loop.schedule_at(tx.end, EventKind.FRAME_END, self._finish, tx)
        if was_idle:
            self._notify(True)
        return tx

    def _finish(self, tx: Transmission) -> None:
        self.active.remove(tx)
        tx.outcome = Outcome.COLLISION if tx.collided else Outcome.SUCCESS
        if self.recorder is not None:
            self.recorder(tx, tx.outcome)
        if tx.on_end is not None:
            tx.on_end(tx, tx.outcome)
        if not self.active:
            self._notify(False)


class WiredLink:
    """Fronthaul/backhaul between the controller and the APs: fixed latency, never lost"""

    def __init__(self, loop: EventLoop, latency_s: float, recorder: Optional[FrameCallback] = None):
        self.loop = loop
        self.latency_s = latency_s
        self.recorder = recorder

    def send(self, frame: MacFrame, on_end: Optional[FrameCallback] = None) -> Transmission:
        if frame.band != Band.WIRED:
            raise ValueError(f"{frame.kind.value} is not a wired frame")
        now = self.loop.now
        frame.duration = self.latency_s
        tx = Transmission(frame=frame, start=now, end=now + self.latency_s, on_end=on_end)
        self.loop.schedule_at(tx.end, EventKind.FRAME_END, self._deliver, tx)
        return tx

    def _deliver(self, tx: Transmission) -> None:
        tx.outcome = Outcome.SUCCESS
        if self.recorder is not None:
            self.recorder(tx, tx.outcome)
        if tx.on_end is not None:
            tx.on_end(tx, tx.outcome)
