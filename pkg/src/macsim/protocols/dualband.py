"""Wi-Fi-assisted dual-band coordination driven by the learned fingerprint databases"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from src.coordination.beams import BeamPlan, BrpResult, OnlineFingerprint, brp_refine, eliminate_bad_beams
from src.coordination.controller import ApController
from src.learning.clustering import ExemplarSet, build_all_exemplars
from src.learning.databases import FingerprintDatabases, build_databases
from src.macsim.contention import Backoff
from src.macsim.engine import SimEvent
from src.macsim.frames import CONTROLLER, FrameKind, Outcome
from src.macsim.medium import Transmission
from src.macsim.protocols.base import MacProtocol
from src.macsim.scenario import Scenario
from src.radio.propagation import wifi_rss_dbm
from src.utils.errors import CoverageError, ProtocolError
from src.utils.logger import get_logger

logger = get_logger()

LearnedState = Tuple[FingerprintDatabases, Dict[int, List[ExemplarSet]]]

MAX_CONSECUTIVE_LOSSES = 2


@dataclass
class _Training:
    """One beam training in progress, from SwitchOn to BID"""
    ap: int
    ue: int
    plan: BeamPlan
    probes: List[int] = field(default_factory=list)
    fallback: bool = False
    measured: Dict[int, float] = field(default_factory=dict)
    result: Optional[BrpResult] = None


@dataclass
class _ApState:
    """Service state of one AP over its trained links"""
    ring: List[int] = field(default_factory=list)  # Linked UEs in service order
    cursor: int = 0
    serving: Optional[int] = None  # UE of the TXOP in progress
    txop_start: float = 0.0
    frames: int = 0
    training: Optional[_Training] = None
    wake: Optional[SimEvent] = None


class DualBandProtocol(MacProtocol):
    """
    Beam training coordinated over 5 GHz by an AP controller.

    A backlogged UE without a link is polled by an idle AP (WiFi-M-Req);
    its broadcast reply gives every AP a Wi-Fi RSS reading, and the
    controller matches the resulting fingerprint against the learned
    exemplars to pick an AP, its best beams and the beams other links
    mark as bad. The chosen AP reserves the 60 GHz beam-training period
    with NAVset, probes the cleared beams (BRP), learns the best one from
    FBK and announces it with BID.

    The trained link (AP, beam, MCS) is then kept: every AP serves its
    linked UEs round robin, one TXOP each, without a new handshake. A
    link is trained again only after repeated DATA losses or when another
    AP's confirmed beam makes it bad. An AP pauses its service while it
    trains a new link.
    """

    def __init__(self, scenario: Scenario, databases: Optional[LearnedState] = None):
        super().__init__(
            scenario,
            name="dualband",
            description="Wi-Fi-assisted mmW coordination with fingerprint learning",
        )
        if databases is None:
            dbs = build_databases(scenario.env, scenario.settings.radio, self.mcs_table)
            exemplars = build_all_exemplars(dbs, scenario.settings.learning)
        else:
            dbs, exemplars = databases
        self.controller = ApController(dbs, exemplars, self.mcs_table, scenario.noise_dbm, scenario.settings.learning)
        self.ue_backoff: List[Backoff] = []
        self.ap_backoff: List[Backoff] = []
        self.nav_until: List[float] = []
        self.nav_windows: List[Tuple[float, float, int]] = []  # (start, end, owner)
        self.aps: List[_ApState] = []
        self.losses: Dict[int, int] = {}
        self.retiring: Set[int] = set()  # Dropped links whose exchange is still on air
        self.ue_busy: Set[int] = set()
        self.waiting: Set[int] = set()
        self.pending_bids: List[int] = []
        self._ue_wake: Dict[int, SimEvent] = {}
        self._rss: Dict[Tuple[int, int], float] = {}
        self._bid_rng = scenario.rng("bid")

    def start(self) -> None:
        mac = self.mac
        sc = self.sc
        self.nav_until = [0.0] * sc.num_aps
        self.aps = [_ApState() for _ in range(sc.num_aps)]
        for ap in sc.env.aps:
            for ue, position in enumerate(sc.env.ues):
                self._rss[(ap.id, ue)] = wifi_rss_dbm(ap, position, sc.shadowing, sc.settings.radio.carrier_wifi_hz)

        self.ue_backoff = [
            Backoff(
                self.loop, sc.rng("backoff", "ue", ue), mac.slot_wifi_s, mac.difs_wifi_s, mac.cw_min, mac.cw_max,
                on_expiry=lambda u=ue: self._request(u),
                is_busy=lambda: self.sc.wifi.busy,
            )
            for ue in range(sc.num_ues)
        ]
        self.ap_backoff = [
            Backoff(
                self.loop, sc.rng("backoff", "ap", ap), mac.slot_wifi_s, mac.difs_wifi_s, mac.cw_min, mac.cw_max,
                on_expiry=lambda a=ap: self._reserve_training(a),
                is_busy=lambda a=ap: self._ap_deferring(a),
            )
            for ap in range(sc.num_aps)
        ]
        sc.wifi.add_listener(self._on_wifi)
        for ue in range(sc.num_ues):
            self._ue_ready(ue)

    # 5 GHz channel state

    def _ap_deferring(self, ap: int) -> bool:
        return self.sc.wifi.busy or self.loop.now < self.nav_until[ap]

    def _on_wifi(self, busy: bool) -> None:
        if busy:
            for b in self.ue_backoff + self.ap_backoff:
                b.medium_busy()
            return
        if self.pending_bids:
            self.after(self.mac.sifs_wifi_s, self._flush_bids)
        for b in self.ue_backoff + self.ap_backoff:
            b.medium_idle()

    def _nav_expired(self, ap: int) -> None:
        if self.loop.now >= self.nav_until[ap]:
            self.ap_backoff[ap].medium_idle()

    # Access request

    def _ue_ready(self, ue: int) -> None:
        link = self.controller.links.get(ue)
        if link is not None:
            self._kick(link.ap_id)
            return
        if ue in self.ue_busy or ue in self.waiting:
            return
        queue = self.sc.queues[ue]
        now = self.loop.now
        if queue.has_backlog(now):
            self.ue_backoff[ue].start()
            return
        self.loop.cancel(self._ue_wake.get(ue))
        self._ue_wake[ue] = self.at(queue.next_arrival(now), self._on_ue_wake, ue)

    def _on_ue_wake(self, ue: int) -> None:
        self._ue_wake.pop(ue, None)
        self._ue_ready(ue)

    def _idle_aps(self) -> List[int]:
        return [ap for ap in range(self.sc.num_aps) if ap not in self.controller.busy]

    def _request(self, ue: int) -> None:
        if ue in self.controller.links:
            return
        idle = self._idle_aps()
        if not idle:
            self.waiting.add(ue)
            return
        requester = max(idle, key=lambda ap: (self._rss[(ap, ue)], -ap))
        self.ue_busy.add(ue)
        self.send_wifi(
            FrameKind.WIFI_M_REQ, requester, self.sc.ue_node(ue),
            lambda tx, o: self._on_request(ue, o),
        )

    def _on_request(self, ue: int, outcome: Outcome) -> None:
        if outcome != Outcome.SUCCESS:
            self._retry_request(ue)
            return
        self.after(self.mac.sifs_wifi_s, self._send_response, ue)

    def _send_response(self, ue: int) -> None:
        self.send_wifi(
            FrameKind.WIFI_M_RESP, self.sc.ue_node(ue), None,
            lambda tx, o: self._on_response(ue, o),
        )

    def _retry_request(self, ue: int) -> None:
        self.ue_backoff[ue].failure()
        self.ue_busy.discard(ue)
        self._ue_ready(ue)

    def _on_response(self, ue: int, outcome: Outcome) -> None:
        if outcome != Outcome.SUCCESS:
            self._retry_request(ue)
            return
        fp = self.sc.measure_fingerprint(ue)
        ap = self.controller.select_ap(fp)
        if ap is None:
            if not self._idle_aps():
                self.ue_busy.discard(ue)
                self.waiting.add(ue)
                return
            logger.debug(f"UE {ue}: no AP matches its fingerprint")
            self.fail_attempt(ue)
            self._retry_request(ue)
            return
        self.ue_backoff[ue].success()
        self.controller.reserve(ap)
        self.send_wired(FrameKind.SWITCH_ON, CONTROLLER, ap, lambda tx, o: self._switch_on(ap, fp))

    def _switch_on(self, ap: int, fp: OnlineFingerprint) -> None:
        try:
            plan = self.controller.plan_link(ap, fp)
        except CoverageError as e:
            self.record.protocol_errors += 1
            logger.warning(f"AP {ap} cannot plan UE {fp.ue_id}: {e}")
            self.controller.release(ap)
            self.fail_attempt(fp.ue_id)
            self._retry_request(fp.ue_id)
            self._wake_waiting()
            return
        training = _Training(ap=ap, ue=fp.ue_id, plan=plan)
        self.aps[ap].training = training
        if not self._clear_probes(training):
            self._refuse(training)
            return
        self.ap_backoff[ap].start()

    # Beam training

    def _clear_probes(self, training: _Training) -> bool:
        """
        Pick the sectors to probe and register them with the controller.

        Beams eliminated by other links are skipped first; every sector
        must also be admissible against the trained links of other APs.
        When elimination leaves nothing admissible, the full best-beam list
        is screened instead (a fallback).

        Returns:
            False when no sector can be probed
        """
        apc = self.controller
        plan = training.plan
        plan.eliminated = apc.eliminated_beams(plan)
        probes = apc.admissible_sectors(training.ap, eliminate_bad_beams(plan.best_beams, plan.eliminated))
        fallback = False
        if not probes:
            probes = apc.admissible_sectors(training.ap, plan.best_beams)
            fallback = True
        if not probes:
            return False
        training.probes, training.fallback = probes, fallback
        apc.set_probes(training.ap, probes)
        return True

    def _refuse(self, training: _Training) -> None:
        self.record.training_refusals += 1
        logger.debug(f"AP {training.ap}: no sector can be cleared for UE {training.ue}")
        self._end_training(training)
        self.fail_attempt(training.ue)
        self._retry_request(training.ue)

    def _reserve_training(self, ap: int) -> None:
        state = self.aps[ap]
        training = state.training
        if training is None:
            return
        if state.serving is not None:
            # The TXOP in progress stops at its next frame boundary
            self.ap_backoff[ap].start()
            return
        if not self._clear_probes(training):
            self._refuse(training)
            return
        mac = self.mac
        window = len(training.probes) * mac.brp_slot_s + mac.sifs_s + mac.ctrl_mmw_s
        self.send_wifi(FrameKind.NAVSET, ap, None, lambda tx, o: self._on_navset(training, o, window))

    def _on_navset(self, training: _Training, outcome: Outcome, window: float) -> None:
        ap = training.ap
        if outcome != Outcome.SUCCESS:
            self.ap_backoff[ap].failure()
            self.ap_backoff[ap].start()
            return
        self.ap_backoff[ap].success()
        now = self.loop.now
        end = now + window
        self.nav_windows = [w for w in self.nav_windows if w[1] > now]
        self.nav_windows.append((now, end, ap))
        for other in range(self.sc.num_aps):
            if other != ap and end > self.nav_until[other]:
                self.nav_until[other] = end
                self.at(end, self._nav_expired, other)

        mac = self.mac
        training.measured = {}
        for i, beam in enumerate(training.probes):
            self.at(now + i * mac.brp_slot_s, self._send_probe, (training, beam))
        self.at(now + len(training.probes) * mac.brp_slot_s + mac.sifs_s, self._feedback, training)

    def _send_probe(self, args) -> None:
        training, beam = args
        now = self.loop.now
        end_probe = now + self.mac.brp_slot_s
        if any(start < end_probe and now < end and owner != training.ap for start, end, owner in self.nav_windows):
            self.record.nav_violations += 1
        node = self.sc.ue_node(training.ue)

        def on_probe(tx: Transmission, outcome: Outcome) -> None:
            power = self.link.power_dbm(training.ap, beam, node) if outcome == Outcome.SUCCESS else -math.inf
            training.measured[beam] = power

        self.send_mmw(FrameKind.BRP, training.ap, node, on_probe, sector=beam, duration=self.mac.brp_slot_s)

    def _feedback(self, training: _Training) -> None:
        plan = training.plan
        result = brp_refine(
            plan.best_beams, set(plan.best_beams) - set(training.probes),
            lambda beam: training.measured.get(beam, -math.inf),
        )
        if training.fallback or result.fallback:
            self.record.brp_fallbacks += 1
        if result.power_dbm == -math.inf:
            self._training_failed(training)
            return
        training.result = result
        logger.debug(f"BRP AP {training.ap} -> UE {training.ue}: beam {result.beam} of {result.probed}")
        self.send_mmw(
            FrameKind.FBK, self.sc.ue_node(training.ue), training.ap,
            lambda tx, o: self._on_feedback(training, o), rx_sector=result.beam,
        )

    def _on_feedback(self, training: _Training, outcome: Outcome) -> None:
        if outcome != Outcome.SUCCESS:
            self._training_failed(training)
            return
        self.after(self.mac.sifs_wifi_s, self._send_bid, training.ap)

    def _send_bid(self, ap: int) -> None:
        if self.aps[ap].training is None:
            return
        if self.sc.wifi.busy:
            if ap not in self.pending_bids:
                self.pending_bids.append(ap)
            return
        self.send_wifi(FrameKind.BID, ap, None, lambda tx, o: self._on_bid(ap, o))

    def _flush_bids(self) -> None:
        pending, self.pending_bids = self.pending_bids, []
        for ap in pending:
            self._send_bid(ap)

    def _on_bid(self, ap: int, outcome: Outcome) -> None:
        state = self.aps[ap]
        training = state.training
        if training is None:
            return
        if outcome != Outcome.SUCCESS:
            slots = int(self._bid_rng.integers(0, self.mac.cw_min))
            self.after(self.mac.sifs_wifi_s + slots * self.mac.slot_wifi_s, self._send_bid, ap)
            return
        apc = self.controller
        try:
            plan = apc.on_bid(ap, training.ue, training.result.beam)
            link = apc.activate(ap, training.ue, training.result.power_dbm)
        except ProtocolError as e:
            self.record.protocol_errors += 1
            logger.warning(f"BID rejected: {e}")
            self._training_failed(training)
            return
        ue = training.ue
        state.training = None
        self.ue_busy.discard(ue)
        if link is None:
            self.fail_attempt(ue)
            self._ue_ready(ue)
            self._wake_waiting()
            self._kick(ap)
            return
        state.ring.append(ue)
        self.losses[ue] = 0
        for victim in apc.conflicting_links(plan):
            if victim in self.retiring:
                continue
            self.record.bid_conflicts += 1
            logger.debug(f"UE {victim}: beam conflicts with AP {ap} beam {link.beam}, retraining")
            self._drop_link(victim)
        self._wake_waiting()
        self.loop.cancel(state.wake)
        state.wake = self.after(self.mac.sifs_s, self._on_ap_wake, ap)

    def _training_failed(self, training: _Training) -> None:
        self.fail_attempt(training.ue)
        self._end_training(training)
        self.ue_busy.discard(training.ue)
        self._ue_ready(training.ue)

    def _end_training(self, training: _Training) -> None:
        ap = training.ap
        self.controller.release(ap)
        self.aps[ap].training = None
        self.ap_backoff[ap].cancel()
        if ap in self.pending_bids:
            self.pending_bids.remove(ap)
        self._wake_waiting()
        self._kick(ap)

    # Data service over trained links

    def _kick(self, ap: int) -> None:
        state = self.aps[ap]
        if state.serving is None and state.training is None:
            self._next_txop(ap)

    def _on_ap_wake(self, ap: int) -> None:
        self.aps[ap].wake = None
        self._kick(ap)

    def _next_txop(self, ap: int) -> None:
        state = self.aps[ap]
        self.loop.cancel(state.wake)
        state.wake = None
        if not state.ring:
            return
        now = self.loop.now
        count = len(state.ring)
        for step in range(count):
            index = (state.cursor + step) % count
            ue = state.ring[index]
            if self.sc.queues[ue].has_backlog(now):
                state.cursor = (index + 1) % count
                state.serving, state.txop_start, state.frames = ue, now, 0
                self._send_frame(ap)
                return
        wake_at = min(self.sc.queues[ue].next_arrival(now) for ue in state.ring)
        state.wake = self.at(wake_at, self._on_ap_wake, ap)

    def _send_frame(self, ap: int) -> None:
        state = self.aps[ap]
        ue = state.serving
        link = self.controller.links.get(ue)
        mac = self.mac
        now = self.loop.now
        if ue in self.retiring:
            self._release_link(ue)
            self._end_txop(ap)
            return
        if link is None or link.ap_id != ap:
            self._end_txop(ap)
            return
        airtime = self.data_airtime(link.mcs)
        over_limit = now - state.txop_start + airtime + mac.sifs_s + mac.ctrl_mmw_s > mac.txop_limit_s
        if (
            not self.sc.queues[ue].has_backlog(now)
            or state.training is not None
            or (over_limit and state.frames > 0)
        ):
            self._end_txop(ap)
            return
        state.frames += 1
        self.send_data(ap, ue, link.beam, link.mcs, lambda tx, o: self._on_data(ap, ue, link.beam, o))

    def _on_data(self, ap: int, ue: int, beam: int, outcome: Outcome) -> None:
        mac = self.mac
        link = self.controller.links.get(ue)
        if not self.account_data(ue, outcome):
            if link is not None:
                self.losses[ue] = self.losses.get(ue, 0) + 1
                if self.losses[ue] >= MAX_CONSECUTIVE_LOSSES:
                    logger.debug(f"UE {ue}: {self.losses[ue]} DATA losses on AP {ap}, retraining")
                    self._drop_link(ue)
            # ACK timeout before the next attempt
            self.after(2 * mac.sifs_s + mac.ctrl_mmw_s, self._send_frame, ap)
            return
        if link is not None:
            self.losses[ue] = 0
        self.after(mac.sifs_s, lambda: self.send_ack(
            ue, ap, beam,
            lambda tx, o: self.after(mac.sifs_s, self._send_frame, ap),
        ))

    def _end_txop(self, ap: int) -> None:
        state = self.aps[ap]
        state.serving = None
        if state.training is None:
            self._next_txop(ap)

    def _drop_link(self, ue: int) -> None:
        """Take a link out of service; its beam stays registered until its exchange ends"""
        link = self.controller.links.get(ue)
        self.losses.pop(ue, None)
        if link is None:
            return
        state = self.aps[link.ap_id]
        if ue in state.ring:
            index = state.ring.index(ue)
            state.ring.pop(index)
            if index < state.cursor:
                state.cursor -= 1
            state.cursor = state.cursor % len(state.ring) if state.ring else 0
        if state.serving == ue:
            self.retiring.add(ue)
            return
        self._release_link(ue)

    def _release_link(self, ue: int) -> None:
        self.retiring.discard(ue)
        self.controller.drop_link(ue)
        self._ue_ready(ue)

    def _wake_waiting(self) -> None:
        for ue in sorted(self.waiting):
            self.waiting.discard(ue)
            self._ue_ready(ue)
