"""Un-coordinated IEEE 802.11ad baseline: independent beacon intervals and CSMA/CA"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from src.macsim.contention import Backoff
from src.macsim.engine import SimEvent
from src.macsim.frames import FrameKind, Outcome
from src.macsim.medium import Transmission
from src.macsim.protocols.base import MacProtocol
from src.macsim.scenario import Scenario
from src.utils.errors import ConfigurationError
from src.utils.logger import get_logger

logger = get_logger()


@dataclass
class _ApState:
    ap: int
    ues: List[int] = field(default_factory=list)
    sector: Dict[int, int] = field(default_factory=dict)  # Trained sector per associated UE
    backoff: Optional[Backoff] = None
    rr: int = 0
    in_txop: bool = False
    in_bhi: bool = False
    bhi_pending: bool = False
    txop_start: float = 0.0
    txop_ue: Optional[int] = None
    txop_frames: int = 0  # DATA frames sent in the current TXOP
    wake: Optional[SimEvent] = None


class BaselineProtocol(MacProtocol):
    """
    Every AP runs its own beacon interval with no knowledge of the others.

    Beacon header: BTI sweep of all sectors, then a contention-free A-BFT
    responder exchange per associated UE. Data transfer: CCA-based backoff
    on 60 GHz; each won TXOP serves one UE, optionally opening with a full
    sector-level sweep toward it. Beacon phases are uniform over the beacon
    interval, so sweeps and data of neighbouring APs collide.
    """

    def __init__(self, scenario: Scenario, phases: Optional[Sequence[float]] = None):
        super().__init__(
            scenario,
            name="baseline",
            description="Un-coordinated 802.11ad: per-AP beacon intervals and CSMA/CA",
        )
        if phases is not None and len(phases) != scenario.num_aps:
            raise ConfigurationError(f"{len(phases)} phases for {scenario.num_aps} APs", key="phases")
        self.phases = list(phases) if phases is not None else None
        self.aps: List[_ApState] = []
        self.ue_ap: Dict[int, int] = {}

    # Setup

    def _associate(self) -> None:
        control_db = self.mcs_table.control.min_snr_db
        for ue in range(self.sc.num_ues):
            node = self.sc.ue_node(ue)
            best_ap, best_power, best_sector = None, None, None
            for ap in range(self.sc.num_aps):
                sector = self.link.best_sector(ap, node)
                power = self.link.power_dbm(ap, sector, node)
                if best_power is None or power > best_power:
                    best_ap, best_power, best_sector = ap, power, sector
            if best_power - self.sc.noise_dbm < control_db:
                self.record.unreachable_ues += 1
                logger.warning(f"UE {ue} is out of range of every AP ({best_power:.1f} dBm)")
                continue
            self.ue_ap[ue] = best_ap
            self.aps[best_ap].ues.append(ue)
            self.aps[best_ap].sector[ue] = best_sector

    def start(self) -> None:
        self.aps = [_ApState(ap=a) for a in range(self.sc.num_aps)]
        self._associate()

        if self.phases is None:
            rng = self.sc.rng("phases")
            self.phases = [float(rng.uniform(0.0, self.mac.beacon_interval_s)) for _ in self.aps]

        for st in self.aps:
            st.backoff = Backoff(
                self.loop, self.sc.rng("backoff", st.ap), self.mac.slot_mmw_s, self.mac.difs_mmw_s,
                self.mac.cw_min, self.mac.cw_max,
                on_expiry=lambda a=st.ap: self._txop(a),
                is_busy=lambda a=st.ap: self.sc.mmw.is_busy(a),
            )
            self.sc.mmw.add_cca_listener(st.ap, lambda busy, b=st.backoff: b.medium_busy() if busy else b.medium_idle())
            self.at(self.phases[st.ap], self._beacon_due, st.ap)
            # Associations predate t = 0; data flows until the first beacon
            self._contend(st.ap)
        logger.debug(f"Baseline phases: {[round(p, 6) for p in self.phases]}")

    # Beacon header interval

    def _beacon_due(self, ap: int) -> None:
        st = self.aps[ap]
        self.after(self.mac.beacon_interval_s, self._beacon_due, ap)
        if st.in_txop or st.in_bhi:
            st.bhi_pending = True
            return
        self._bhi(ap)

    def _bhi(self, ap: int) -> None:
        st = self.aps[ap]
        st.in_bhi = True
        st.backoff.cancel()
        self.loop.cancel(st.wake)
        st.wake = None
        t0 = self.loop.now
        mac = self.mac
        sectors = self.link.num_sectors(ap)

        # BTI: broadcast sweep of every sector
        step = mac.ctrl_mmw_s + mac.sbifs_s
        for s in range(1, sectors + 1):
            self.at(t0 + (s - 1) * step, self._sweep_frame, (ap, s))
        t = t0 + sectors * step - mac.sbifs_s + mac.sifs_s

        # A-BFT: responder frame and feedback per associated UE
        for ue in st.ues:
            self.at(t, self._abft_response, (ap, ue))
            t += 2 * (mac.ctrl_mmw_s + mac.sifs_s)
        self.at(t, self._bhi_done, (ap, t0))

    def _sweep_frame(self, args) -> None:
        ap, sector = args
        self.send_mmw(FrameKind.SSW, ap, None, sector=sector)

    def _abft_response(self, args) -> None:
        ap, ue = args
        best = self.link.best_sector(ap, self.sc.ue_node(ue))

        def on_response(tx: Transmission, outcome: Outcome) -> None:
            if outcome == Outcome.SUCCESS:
                self.after(self.mac.sifs_s, self._abft_feedback, (ap, ue, best))

        self.send_mmw(FrameKind.SSW, self.sc.ue_node(ue), ap, on_response, rx_sector=best)

    def _abft_feedback(self, args) -> None:
        ap, ue, best = args

        def on_feedback(tx: Transmission, outcome: Outcome) -> None:
            if outcome == Outcome.SUCCESS:
                self.aps[ap].sector[ue] = best

        self.send_mmw(FrameKind.SSW_FEEDBACK, ap, self.sc.ue_node(ue), on_feedback, sector=best)

    def _bhi_done(self, args) -> None:
        ap, t0 = args
        st = self.aps[ap]
        st.in_bhi = False
        self.record.training_time_s[ap] += self.loop.now - t0
        if st.bhi_pending:
            st.bhi_pending = False
            self._bhi(ap)
            return
        self._contend(ap)

    # Data transfer interval

    def _backlogged(self, st: _ApState) -> List[int]:
        now = self.loop.now
        return [ue for ue in st.ues if self.sc.queues[ue].has_backlog(now)]

    def _contend(self, ap: int) -> None:
        st = self.aps[ap]
        if st.in_txop or st.in_bhi or not st.ues:
            return
        if self._backlogged(st):
            st.backoff.start()
            return
        now = self.loop.now
        wake_at = min(self.sc.queues[ue].next_arrival(now) for ue in st.ues)
        self.loop.cancel(st.wake)
        st.wake = self.at(wake_at, self._wake, ap)

    def _wake(self, ap: int) -> None:
        self.aps[ap].wake = None
        self._contend(ap)

    def _txop(self, ap: int) -> None:
        st = self.aps[ap]
        ready = set(self._backlogged(st))
        if st.in_bhi or not ready:
            self._contend(ap)
            return
        # Round-robin over associated UEs
        for k in range(len(st.ues)):
            ue = st.ues[(st.rr + k) % len(st.ues)]
            if ue in ready:
                st.rr = (st.rr + k + 1) % len(st.ues)
                break
        st.in_txop = True
        st.txop_start = self.loop.now
        st.txop_ue = ue
        st.txop_frames = 0
        if self.mac.baseline_sls_per_txop:
            self._sls(ap, ue)
        else:
            self._data(ap)

    def _sls(self, ap: int, ue: int) -> None:
        """Initiator sweep toward the UE, responder reply, feedback"""
        mac = self.mac
        node = self.sc.ue_node(ue)
        t0 = self.loop.now
        sectors = self.link.num_sectors(ap)
        heard: Dict[int, float] = {}

        def on_sweep(tx: Transmission, outcome: Outcome) -> None:
            if outcome == Outcome.SUCCESS:
                heard[tx.frame.sector_id] = self.link.power_dbm(ap, tx.frame.sector_id, node)
            if tx.frame.sector_id == sectors:
                self.after(mac.sifs_s, reply)

        def reply() -> None:
            if not heard:
                self._end_txop(ap, ok=False, attempted=True)
                return
            best = min(heard, key=lambda s: (-heard[s], s))
            self.send_mmw(FrameKind.SSW, node, ap, lambda tx, o: on_reply(o, best), rx_sector=best)

        def on_reply(outcome: Outcome, best: int) -> None:
            if outcome != Outcome.SUCCESS:
                self._end_txop(ap, ok=False, attempted=True)
                return
            self.after(mac.sifs_s, lambda: self.send_mmw(
                FrameKind.SSW_FEEDBACK, ap, node, lambda tx, o: on_feedback(o, best), sector=best
            ))

        def on_feedback(outcome: Outcome, best: int) -> None:
            if outcome != Outcome.SUCCESS:
                self._end_txop(ap, ok=False, attempted=True)
                return
            self.aps[ap].sector[ue] = best
            self.record.training_time_s[ap] += self.loop.now - t0
            self.after(mac.sifs_s, self._data, ap)

        step = mac.ctrl_mmw_s + mac.sbifs_s
        for s in range(1, sectors + 1):
            self.at(t0 + (s - 1) * step, lambda args: self.send_mmw(
                FrameKind.SSW, ap, node, on_sweep, sector=args
            ), s)

    def _data(self, ap: int) -> None:
        st = self.aps[ap]
        ue = st.txop_ue
        mac = self.mac
        now = self.loop.now
        sector = st.sector[ue]
        node = self.sc.ue_node(ue)
        mcs = self.select_mcs(self.link.snr_db(ap, sector, node))
        if mcs is None:
            self._end_txop(ap, ok=False, attempted=True)
            return
        airtime = self.data_airtime(mcs)
        fits = now + airtime + mac.sifs_s + mac.ctrl_mmw_s <= st.txop_start + mac.txop_limit_s
        first = st.txop_frames == 0
        if not self.sc.queues[ue].has_backlog(now) or st.bhi_pending or not (fits or first):
            self._end_txop(ap, ok=True)
            return

        def on_data(tx: Transmission, outcome: Outcome) -> None:
            if not self.account_data(ue, outcome):
                self._end_txop(ap, ok=False)
                return
            self.after(mac.sifs_s, lambda: self.send_ack(ue, ap, sector, on_ack))

        def on_ack(tx: Transmission, outcome: Outcome) -> None:
            if outcome != Outcome.SUCCESS:
                self._end_txop(ap, ok=False)
                return
            self.after(mac.sifs_s, self._data, ap)

        st.txop_frames += 1
        self.send_data(ap, ue, sector, mcs, on_data)

    def _end_txop(self, ap: int, ok: bool, attempted: bool = False) -> None:
        st = self.aps[ap]
        if attempted and st.txop_ue is not None:
            self.fail_attempt(st.txop_ue)
        st.in_txop = False
        st.txop_ue = None
        if ok:
            st.backoff.success()
        else:
            st.backoff.failure()
        if st.bhi_pending:
            st.bhi_pending = False
            self._bhi(ap)
            return
        self._contend(ap)
