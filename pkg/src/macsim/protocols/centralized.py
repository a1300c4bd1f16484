"""Centralized coordination: a baseband controller schedules every AP over a wired fronthaul"""

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Set, Tuple

from src.macsim.engine import SimEvent
from src.macsim.frames import CONTROLLER, FrameKind, Outcome
from src.macsim.protocols.base import MacProtocol
from src.macsim.scenario import Scenario
from src.radio.propagation import sinr_db
from src.utils.logger import get_logger

logger = get_logger()

EXHAUSTIVE_PROBE_LIMIT = 4
EPS_S = 1e-12


@dataclass(frozen=True)
class CandidateLink:
    ap: int
    ue: int
    sector: int


def _partitions(items: Sequence) -> Iterator[List[List]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in _partitions(rest):
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1:]
        yield [[first]] + partition


def probe_groups(
    links: Sequence[CandidateLink],
    compatible: Callable[[CandidateLink, CandidateLink], bool],
) -> List[List[CandidateLink]]:
    """
    Split candidate links into the fewest RTS/CTS groups.

    Links in one group are pairwise compatible and probe simultaneously, so
    the number of groups sets the probing time. Up to four links every set
    partition is tried; beyond that links are placed greedily, most
    constrained first.

    Args:
        links: Candidate links, one per AP
        compatible: Pairwise compatibility test

    Returns:
        Groups in probing order
    """
    links = list(links)

    def valid(group) -> bool:
        return all(compatible(a, b) for a, b in itertools.combinations(group, 2))

    if len(links) <= EXHAUSTIVE_PROBE_LIMIT:
        best = None
        for partition in _partitions(links):
            if (best is None or len(partition) < len(best)) and all(valid(g) for g in partition):
                best = partition
        return [sorted(g, key=links.index) for g in sorted(best, key=lambda g: min(map(links.index, g)))]

    conflicts = {
        link: sum(1 for other in links if other is not link and not compatible(link, other))
        for link in links
    }
    order = sorted(links, key=lambda link: (-conflicts[link], links.index(link)))
    groups: List[List[CandidateLink]] = []
    for link in order:
        for group in groups:
            if all(compatible(link, member) for member in group):
                group.append(link)
                break
        else:
            groups.append([link])
    return groups


class CentralizedProtocol(MacProtocol):
    """
    Synchronised beacon intervals run by a central controller.

    Beacon header: wired sweep trigger, one sector sweep per AP in turn
    (all others silent), one sweep per UE in turn answered by SSW-Feedback
    from every AP it associates with, RSSI feedback to the controller and
    the candidate-link information back to the APs. The controller derives
    pairwise link compatibility from the measured powers.

    Data transfer: repeated rounds of RTS/CTS probing of one candidate link
    per AP, controller link assignment, then concurrent DATA cycles with
    TDM or simultaneous ACKs, up to frames_per_round cycles within one
    TXOP limit. Missing CTS or ACK is reported with BLI.
    """

    def __init__(self, scenario: Scenario):
        super().__init__(
            scenario,
            name="centralized",
            description="Controller-coordinated beam training and concurrent DATA over a wired fronthaul",
        )
        self.assoc: Dict[int, List[int]] = {}
        self.ue_aps: Dict[int, List[int]] = {}
        self.primary: Dict[int, int] = {}  # UE -> strongest associated AP
        self.sector: Dict[Tuple[int, int], int] = {}
        self.rr: List[int] = []
        self.blocked_links: Set[Tuple[int, int]] = set()
        self._compat: Dict[Tuple[CandidateLink, CandidateLink], bool] = {}
        self.bhi_time_s = 0.0
        self.next_bi = 0.0
        self._in_bhi = False
        self._in_round = False
        self._round_start = 0.0
        self._wake: Optional[SimEvent] = None

    # Setup

    def _associate(self) -> None:
        mac = self.mac
        control_db = self.mcs_table.control.min_snr_db
        self.assoc = {ap: [] for ap in range(self.sc.num_aps)}
        for ue in range(self.sc.num_ues):
            node = self.sc.ue_node(ue)
            powers = {}
            for ap in range(self.sc.num_aps):
                sector = self.link.best_sector(ap, node)
                self.sector[(ap, ue)] = sector
                powers[ap] = self.link.power_dbm(ap, sector, node)
            aps = [ap for ap in range(self.sc.num_aps) if powers[ap] >= mac.rss_floor_dbm]
            if not aps:
                strongest = max(powers, key=lambda ap: (powers[ap], -ap))
                if powers[strongest] - self.sc.noise_dbm >= control_db:
                    aps = [strongest]
            if not aps:
                self.record.unreachable_ues += 1
                logger.warning(f"UE {ue} is out of range of every AP")
                continue
            self.ue_aps[ue] = aps
            self.primary[ue] = max(aps, key=lambda ap: (powers[ap], -ap))
            for ap in aps:
                self.assoc[ap].append(ue)

    def start(self) -> None:
        self._associate()
        self.rr = [0] * self.sc.num_aps
        logger.debug(f"Centralized association: {self.assoc}")
        self.at(0.0, self._beacon_interval)

    # Link compatibility

    def link_sinr_db(self, link: CandidateLink, others: Sequence[CandidateLink]) -> float:
        node = self.sc.ue_node(link.ue)
        signal = self.link.power_dbm(link.ap, link.sector, node)
        interference = [self.link.power_dbm(o.ap, o.sector, node) for o in others]
        return sinr_db(signal, interference, self.sc.noise_dbm)

    def compatible(self, a: CandidateLink, b: CandidateLink) -> bool:
        """Both links keep the minimum SINR while active together"""
        if a.ap == b.ap or a.ue == b.ue:
            return False
        key = (a, b)
        if key not in self._compat:
            floor = self.mac.min_sinr_db
            ok = self.link_sinr_db(a, [b]) >= floor and self.link_sinr_db(b, [a]) >= floor
            self._compat[(a, b)] = self._compat[(b, a)] = ok
        return self._compat[key]

    def pack_links(self, links: Sequence[CandidateLink]) -> List[CandidateLink]:
        """
        Greedy max-min-SINR packing.

        Repeatedly adds the link that keeps the smallest SINR of the active
        set highest, while every pair stays compatible and that SINR stays
        above the floor.
        """
        chosen: List[CandidateLink] = []
        remaining = list(links)
        while remaining:
            best, best_score = None, -math.inf
            for link in remaining:
                if not all(self.compatible(link, c) for c in chosen):
                    continue
                trial = chosen + [link]
                score = min(self.link_sinr_db(x, [y for y in trial if y is not x]) for x in trial)
                if len(trial) > 1 and score < self.mac.min_sinr_db:
                    continue
                if score > best_score:
                    best, best_score = link, score
            if best is None:
                break
            chosen.append(best)
            remaining.remove(best)
        return chosen

    # Beacon header interval

    def _beacon_interval(self) -> None:
        mac = self.mac
        t0 = self.loop.now
        self.next_bi = t0 + mac.beacon_interval_s
        self.at(self.next_bi, self._beacon_interval)
        self._in_bhi = True
        self._in_round = False
        self.loop.cancel(self._wake)
        self._wake = None
        self.blocked_links.clear()

        for ap in range(self.sc.num_aps):
            self.send_wired(FrameKind.TRIGGER_SWEEP, CONTROLLER, ap)
        t = t0 + mac.wired_latency_s

        step = mac.ctrl_mmw_s + mac.sbifs_s
        for ap in range(self.sc.num_aps):
            sectors = self.link.num_sectors(ap)
            for s in range(1, sectors + 1):
                self.at(t + (s - 1) * step, self._sweep_frame, (ap, s))
            t += sectors * step - mac.sbifs_s + mac.sifs_s

        for ue in sorted(self.ue_aps):
            self.at(t, self._ue_sweep, ue)
            t += mac.ctrl_mmw_s + mac.sifs_s
            for ap in self.ue_aps[ue]:
                self.at(t, self._sweep_feedback, (ap, ue))
                t += mac.ctrl_mmw_s + mac.sifs_s

        self.at(t, self._rssi_feedback)
        t += mac.wired_latency_s
        self.at(t, self._candidate_info)
        t += mac.wired_latency_s
        self.at(t, self._bhi_done, t0)

        duration = min(t, self.sc.horizon_s) - t0
        self.bhi_time_s += max(0.0, duration)
        self.record.bhi_overhead_fraction = self.bhi_time_s / self.sc.horizon_s

    def _sweep_frame(self, args) -> None:
        ap, sector = args
        self.send_mmw(FrameKind.SSW, ap, None, sector=sector)

    def _ue_sweep(self, ue: int) -> None:
        self.send_mmw(FrameKind.SSW, self.sc.ue_node(ue), None)

    def _sweep_feedback(self, args) -> None:
        ap, ue = args
        self.send_mmw(FrameKind.SSW_FEEDBACK, ap, self.sc.ue_node(ue), sector=self.sector[(ap, ue)])

    def _rssi_feedback(self) -> None:
        for ap in range(self.sc.num_aps):
            self.send_wired(FrameKind.RSSI_FEEDBACK, ap, CONTROLLER)

    def _candidate_info(self) -> None:
        for ap in range(self.sc.num_aps):
            self.send_wired(FrameKind.CLI, CONTROLLER, ap)

    def _bhi_done(self, t0: float) -> None:
        for ap in range(self.sc.num_aps):
            self.record.training_time_s[ap] += self.loop.now - t0
        self._in_bhi = False
        self._round()

    # Data transfer interval

    def _fits(self, duration: float) -> bool:
        return self.loop.now + duration <= self.next_bi + EPS_S

    def _candidates(self) -> List[CandidateLink]:
        """
        One backlogged UE per AP, round robin.

        An AP first looks at the UEs it serves best, then at the UEs it
        only reaches; a UE is offered to one AP per round.
        """
        now = self.loop.now
        used: Set[int] = set()
        out = []
        for ap in range(self.sc.num_aps):
            ues = self.assoc.get(ap, [])
            rotated = [ues[(self.rr[ap] + k) % len(ues)] for k in range(len(ues))]
            ordered = [ue for ue in rotated if self.primary[ue] == ap] + [ue for ue in rotated if self.primary[ue] != ap]
            for ue in ordered:
                if ue in used or (ap, ue) in self.blocked_links or not self.sc.queues[ue].has_backlog(now):
                    continue
                out.append(CandidateLink(ap, ue, self.sector[(ap, ue)]))
                used.add(ue)
                self.rr[ap] = (ues.index(ue) + 1) % len(ues)
                break
        return out

    def _round(self) -> None:
        if self._in_bhi or self._in_round:
            return
        links = self._candidates()
        if not links:
            self._sleep()
            return
        self._in_round = True
        self._round_start = self.loop.now
        self._probe(probe_groups(links, self.compatible), 0, [])

    def _sleep(self) -> None:
        now = self.loop.now
        idle = [self.sc.queues[ue].next_arrival(now) for ue in self.ue_aps
                if not self.sc.queues[ue].has_backlog(now)]
        if not idle:
            return
        wake_at = min(idle)
        if wake_at < self.next_bi:
            self.loop.cancel(self._wake)
            self._wake = self.at(wake_at, self._on_wake)

    def _on_wake(self) -> None:
        self._wake = None
        self._round()

    def _end_round(self) -> None:
        self._in_round = False
        self._round()

    def _report_blocking(self, link: CandidateLink, outcome: Optional[Outcome]) -> None:
        if outcome == Outcome.BLOCKED:
            self.blocked_links.add((link.ap, link.ue))
        self.send_wired(FrameKind.BLI, link.ap, CONTROLLER)
        logger.debug(f"BLI: AP {link.ap} -> UE {link.ue} ({outcome.value if outcome else 'no response'})")

    def _probe(self, groups: List[List[CandidateLink]], index: int, confirmed: List[CandidateLink]) -> None:
        if self._in_bhi:
            return
        if index == len(groups):
            self._assign(confirmed)
            return
        mac = self.mac
        if not self._fits(2 * (mac.ctrl_mmw_s + mac.sifs_s)):
            self._in_round = False
            return
        rts: Dict[CandidateLink, Outcome] = {}
        cts: Dict[CandidateLink, Outcome] = {}
        group = groups[index]

        for link in group:
            self.send_mmw(
                FrameKind.RTS, link.ap, self.sc.ue_node(link.ue),
                lambda tx, o, l=link: rts.__setitem__(l, o), sector=link.sector,
            )

        def send_cts() -> None:
            for link in group:
                if rts.get(link) == Outcome.SUCCESS:
                    self.send_mmw(
                        FrameKind.CTS, self.sc.ue_node(link.ue), link.ap,
                        lambda tx, o, l=link: cts.__setitem__(l, o), rx_sector=link.sector,
                    )

        def collect() -> None:
            if self._in_bhi:
                return
            for link in group:
                if cts.get(link) == Outcome.SUCCESS:
                    confirmed.append(link)
                else:
                    self.fail_attempt(link.ue)
                    self._report_blocking(link, rts.get(link) if rts.get(link) != Outcome.SUCCESS else cts.get(link))
            self._probe(groups, index + 1, confirmed)

        self.after(mac.ctrl_mmw_s + mac.sifs_s, send_cts)
        self.after(2 * (mac.ctrl_mmw_s + mac.sifs_s), collect)

    def _assign(self, confirmed: List[CandidateLink]) -> None:
        mac = self.mac
        links = self.pack_links(confirmed)
        plan: Dict[CandidateLink, int] = {}
        for link in links:
            mcs = self.select_mcs(self.link_sinr_db(link, [o for o in links if o is not link]))
            if mcs is None:
                self.fail_attempt(link.ue)
                continue
            plan[link] = mcs
        if not plan:
            self._end_round()
            return
        longest = max(self.data_airtime(m) for m in plan.values())
        if not self._fits(mac.wired_latency_s + mac.ctrl_mmw_s + mac.sifs_s + longest + self._ack_phase(len(plan))):
            self._in_round = False
            return

        for link in plan:
            self.send_wired(FrameKind.API, CONTROLLER, link.ap)
        api: Dict[CandidateLink, Outcome] = {}

        def announce() -> None:
            if self._in_bhi:
                return
            for link in plan:
                self.send_mmw(
                    FrameKind.API, link.ap, self.sc.ue_node(link.ue),
                    lambda tx, o, l=link: api.__setitem__(l, o), sector=link.sector,
                )

        def start_data() -> None:
            if self._in_bhi:
                return
            served = {}
            for link, mcs in plan.items():
                if api.get(link) == Outcome.SUCCESS:
                    served[link] = mcs
                else:
                    self._report_blocking(link, api.get(link))
            self._cycle(served, 0)

        self.after(mac.wired_latency_s, announce)
        self.after(mac.wired_latency_s + mac.ctrl_mmw_s + mac.sifs_s, start_data)

    def _ack_phase(self, count: int) -> float:
        slot = self.mac.ctrl_mmw_s + self.mac.sifs_s
        return self.mac.sifs_s + (count * slot if self.mac.ack_mode == "tdm" else slot)

    def _cycle(self, plan: Dict[CandidateLink, int], index: int) -> None:
        if self._in_bhi:
            return
        mac = self.mac
        now = self.loop.now
        active = {link: mcs for link, mcs in plan.items() if self.sc.queues[link.ue].has_backlog(now)}
        if not active or index >= mac.frames_per_round:
            self._end_round()
            return
        longest = max(self.data_airtime(m) for m in active.values())
        cycle = longest + self._ack_phase(len(active))
        if index > 0 and now - self._round_start + cycle > mac.txop_limit_s:
            self._end_round()
            return
        if not self._fits(cycle):
            self._in_round = False
            return

        received: Dict[CandidateLink, Outcome] = {}
        acked: Dict[CandidateLink, bool] = {}

        def on_data(link: CandidateLink, outcome: Outcome) -> None:
            self.account_data(link.ue, outcome)
            received[link] = outcome

        for link, mcs in active.items():
            self.send_data(link.ap, link.ue, link.sector, mcs, lambda tx, o, l=link: on_data(l, o))

        def send_ack(link: CandidateLink) -> None:
            if received.get(link) == Outcome.SUCCESS:
                self.send_ack(link.ue, link.ap, link.sector,
                              lambda tx, o, l=link: acked.__setitem__(l, o == Outcome.SUCCESS))

        t_ack = now + longest + mac.sifs_s
        slot = mac.ctrl_mmw_s + mac.sifs_s
        for k, link in enumerate(active):
            offset = k * slot if mac.ack_mode == "tdm" else 0.0
            self.at(t_ack + offset, send_ack, link)

        def done() -> None:
            if self._in_bhi:
                return
            missing = [link for link in active if not acked.get(link)]
            if missing:
                for link in missing:
                    lost = received.get(link)
                    self._report_blocking(link, None if lost == Outcome.SUCCESS else lost)
                self._in_round = False
                self.after(mac.wired_latency_s, self._round)
                return
            self._cycle(plan, index + 1)

        self.at(now + longest + self._ack_phase(len(active)), done)
