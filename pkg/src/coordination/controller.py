"""Access-point controller: owns learned state, beam training and the trained links"""

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Set

import numpy as np

from src.coordination.beams import (
    BeamPlan,
    OnlineFingerprint,
    bad_beam_candidates,
    estimate_best_beams,
    refine_bad_beams_on_bid,
    select_ap,
)
from src.learning.clustering import ExemplarSet, LearningConfig
from src.learning.databases import FingerprintDatabases
from src.radio.mcs import McsTable, mcs_for_snr
from src.utils.errors import ProtocolError
from src.utils.helpers import db_to_mw, mw_to_db
from src.utils.logger import get_logger

logger = get_logger()

# Rounding slack between the controller's and the medium's dB sums
ADMISSION_GUARD_DB = 1e-6


@dataclass
class ActiveLink:
    """A trained AP-UE link, kept across TXOPs until released"""
    ap_id: int
    ue_id: int
    beam: int
    mcs: int
    signal_dbm: float
    plan: BeamPlan


class ApController:
    """
    Coordinates beam training across APs.

    Holds the fingerprint databases, the exemplar sets, the APs in beam
    training (``busy``, one plan each) and the trained links (one per UE).
    An AP may hold links to several UEs and serves them one at a time.

    When the databases carry the per-sector power map, every sector an AP
    is about to emit is also checked against the summed worst-case
    interference at the learning point of each trained link of the other
    APs: the link has to keep the threshold of the MCS it uses. All calls
    come from the simulation thread.
    """

    def __init__(
        self,
        dbs: FingerprintDatabases,
        exemplars: Dict[int, List[ExemplarSet]],
        mcs_table: McsTable,
        noise_dbm: float,
        config: Optional[LearningConfig] = None,
    ):
        self.dbs = dbs
        self.exemplars = exemplars
        self.mcs_table = mcs_table
        self.noise_dbm = noise_dbm
        self.config = config or LearningConfig()
        self.busy: Set[int] = set()
        self.plans: Dict[int, BeamPlan] = {}
        self.links: Dict[int, ActiveLink] = {}
        self._noise_mw = db_to_mw(noise_dbm)
        self._sector_mw: Optional[np.ndarray] = None
        if dbs.sector_power_dbm is not None:
            self._sector_mw = np.power(10.0, dbs.sector_power_dbm / 10.0)

    @property
    def checks_interference(self) -> bool:
        return self._sector_mw is not None

    def select_ap(self, fp: OnlineFingerprint) -> Optional[int]:
        return select_ap(fp, self.dbs, self.exemplars, self.busy, self.config.selection_gate_db2)

    def reserve(self, ap_id: int) -> None:
        if ap_id in self.busy:
            raise ProtocolError(f"AP {ap_id} is already training a link")
        self.busy.add(ap_id)

    def locate(self, fp: OnlineFingerprint) -> int:
        """Learning point whose stored fingerprint is nearest (lowest index on ties)"""
        fp.check(self.dbs.num_aps)
        distances = np.sum((self.dbs.psi - fp.rss) ** 2, axis=1)
        return int(np.argmin(distances))

    def plan_link(self, ap_id: int, fp: OnlineFingerprint) -> BeamPlan:
        """
        Estimate best beams and bad-beam candidates for a new link.

        Beams that trained links and other trainings mark bad for this AP are
        recorded in ``plan.eliminated`` for use before BRP.
        """
        best = estimate_best_beams(fp, ap_id, self.exemplars, self.config.num_best_beams)
        candidates = {
            m: bad_beam_candidates(best, ap_id, m, self.dbs, self.mcs_table, self.noise_dbm)
            for m in range(self.dbs.num_aps)
            if m != ap_id
        }
        plan = BeamPlan(ap_id=ap_id, ue_id=fp.ue_id, best_beams=best, candidates=candidates, lp=self.locate(fp))
        plan.eliminated = self.eliminated_beams(plan)
        self.busy.add(ap_id)
        self.plans[ap_id] = plan
        logger.debug(
            f"APC plan AP {ap_id} -> UE {fp.ue_id}: best {best}, eliminated {sorted(plan.eliminated)}"
        )
        return plan

    def _foreign_plans(self, ap_id: int) -> Iterator[BeamPlan]:
        """Plans of other APs: trainings in progress, then trained links"""
        for other in self.plans.values():
            if other.ap_id != ap_id:
                yield other
        for link in self.links.values():
            if link.ap_id != ap_id:
                yield link.plan

    def eliminated_beams(self, plan: BeamPlan) -> Set[int]:
        """Best beams of ``plan`` that conflict with other trainings and trained links"""
        eliminated: Set[int] = set()
        for other in self._foreign_plans(plan.ap_id):
            eliminated |= other.bad_beams_for(plan.ap_id)
            if self.config.symmetric_elimination:
                in_use = set(other.active_beams)
                for beam, bad in plan.candidates.get(other.ap_id, {}).items():
                    if bad & in_use:
                        eliminated.add(beam)
        return eliminated & set(plan.best_beams)

    # Interference bookkeeping

    def _emitting(self, ap_id: int, with_probes: bool = True) -> List[int]:
        """Sectors an AP may transmit on: its link beams plus its cleared BRP sectors"""
        sectors = [link.beam for link in self.links.values() if link.ap_id == ap_id]
        if with_probes and ap_id in self.plans:
            sectors += self.plans[ap_id].probes
        return sectors

    def _interference_mw(self, lp: int, victim_ap: int, extra_ap: Optional[int] = None,
                         extra_sector: Optional[int] = None) -> float:
        """Worst case at an LP: per AP other than the victim's, its strongest possible sector"""
        total = 0.0
        for ap in range(self.dbs.num_aps):
            if ap == victim_ap:
                continue
            sectors = self._emitting(ap, with_probes=ap != extra_ap)
            if ap == extra_ap:
                sectors.append(extra_sector)
            if sectors:
                total += max(float(self._sector_mw[lp, ap, s - 1]) for s in sectors)
        return total

    def _sinr_db(self, signal_dbm: float, lp: int, victim_ap: int, extra_ap: Optional[int] = None,
                 extra_sector: Optional[int] = None) -> float:
        if self._sector_mw is None or lp is None:
            return signal_dbm - self.noise_dbm
        interference = self._interference_mw(lp, victim_ap, extra_ap, extra_sector)
        return signal_dbm - mw_to_db(self._noise_mw + interference)

    def admissible_sectors(self, ap_id: int, sectors: Sequence[int]) -> List[int]:
        """
        Sectors an AP can emit without breaking a trained link of another AP.

        Each sector is tested on top of the worst case of every other AP;
        the AP's own trained beams stay in its worst case. Without the
        sector power map every sector passes.

        Args:
            ap_id: Emitting AP
            sectors: Candidate sectors, in order

        Returns:
            The admissible sectors, order kept
        """
        if self._sector_mw is None:
            return list(sectors)
        victims = [link for link in self.links.values() if link.ap_id != ap_id]
        admitted = []
        for sector in sectors:
            if all(
                self._sinr_db(v.signal_dbm, v.plan.lp, v.ap_id, ap_id, sector)
                >= self.mcs_table.min_snr_db(v.mcs) + ADMISSION_GUARD_DB
                for v in victims
            ):
                admitted.append(sector)
        return admitted

    def set_probes(self, ap_id: int, probes: Sequence[int]) -> None:
        """Register the sectors a training AP will probe"""
        plan = self.plans.get(ap_id)
        if plan is None:
            raise ProtocolError(f"AP {ap_id} has no training in progress")
        plan.probes = list(probes)

    # Training outcome

    def on_bid(self, ap_id: int, ue_id: int, beam: int) -> BeamPlan:
        """Record the confirmed beam of a training and refine its bad beams"""
        plan = self.plans.get(ap_id)
        if plan is None or plan.ue_id != ue_id:
            raise ProtocolError(f"BID for unknown link AP {ap_id} -> UE {ue_id}")
        refine_bad_beams_on_bid(plan, beam)
        return plan

    def conflicting_links(self, plan: BeamPlan) -> List[int]:
        """
        Trained links of other APs whose beam turned bad with a confirmed beam.

        Returns:
            UE ids, ascending
        """
        out = []
        for link in self.links.values():
            if link.ap_id == plan.ap_id:
                continue
            hit = link.beam in plan.refined_bad_beams.get(link.ap_id, set())
            if self.config.symmetric_elimination:
                hit = hit or plan.confirmed_beam in link.plan.bad_beams_for(plan.ap_id)
            if hit:
                out.append(link.ue_id)
        return sorted(out)

    def activate(self, ap_id: int, ue_id: int, signal_dbm: float) -> Optional[ActiveLink]:
        """
        Turn a confirmed training into a trained link and end the training.

        The MCS is chosen from the SINR expected under the current worst
        case, less the configured margin; without enough SINR for the
        margin the plain SINR decides.

        Args:
            ap_id: Training AP
            ue_id: Trained UE
            signal_dbm: Power measured on the confirmed beam

        Returns:
            The link, or None when no MCS is reachable
        """
        plan = self.plans.get(ap_id)
        if plan is None or plan.ue_id != ue_id or plan.confirmed_beam is None:
            raise ProtocolError(f"no confirmed training for AP {ap_id} -> UE {ue_id}")
        sinr = self._sinr_db(signal_dbm, plan.lp, ap_id)
        mcs = mcs_for_snr(self.mcs_table, sinr - self.config.mcs_margin_db)
        if mcs is None:
            mcs = mcs_for_snr(self.mcs_table, sinr - ADMISSION_GUARD_DB)
        plan.probes = []
        self.release(ap_id)
        if mcs is None:
            return None
        link = ActiveLink(ap_id=ap_id, ue_id=ue_id, beam=plan.confirmed_beam, mcs=mcs,
                          signal_dbm=signal_dbm, plan=plan)
        self.links[ue_id] = link
        logger.debug(f"APC link AP {ap_id} -> UE {ue_id}: beam {link.beam}, MCS {mcs}, SINR {sinr:.1f} dB")
        return link

    def drop_link(self, ue_id: int) -> Optional[ActiveLink]:
        return self.links.pop(ue_id, None)

    def links_of(self, ap_id: int) -> List[ActiveLink]:
        return [link for link in self.links.values() if link.ap_id == ap_id]

    def release(self, ap_id: int) -> None:
        """End a training, successful or not"""
        self.plans.pop(ap_id, None)
        self.busy.discard(ap_id)
