"""Online beam coordination: AP selection, best-beam estimation and bad-beam handling"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Set

import numpy as np

from src.learning.clustering import ExemplarSet
from src.learning.databases import NULL_SECTOR, FingerprintDatabases
from src.radio.mcs import McsTable, mcs_for_snr, mcs_rank
from src.radio.propagation import sinr_db, snr_db
from src.utils.errors import ConfigurationError, CoverageError, ProtocolError
from src.utils.logger import get_logger

logger = get_logger()

ExemplarMap = Mapping[int, Sequence[ExemplarSet]]


@dataclass(frozen=True)
class OnlineFingerprint:
    """Wi-Fi RSS vector reported by a UE (one reading per AP)"""
    rss: np.ndarray
    ue_id: int
    timestamp: float = 0.0

    def __post_init__(self):
        rss = np.asarray(self.rss, dtype=float)
        if rss.ndim != 1:
            raise ConfigurationError("fingerprint must be a vector", key="rss")
        object.__setattr__(self, 'rss', rss)

    def check(self, num_aps: int) -> None:
        if self.rss.size != num_aps:
            raise ConfigurationError(f"fingerprint has {self.rss.size} readings for {num_aps} APs", key="rss")


@dataclass
class BeamPlan:
    """
    Beam state of one AP-UE link.

    candidates[m][b] holds the sectors of AP m that degrade best beam b;
    refined_bad_beams[m] holds those against the confirmed beam only.
    """
    ap_id: int
    ue_id: int
    best_beams: List[int]
    candidates: Dict[int, Dict[int, Set[int]]] = field(default_factory=dict)
    eliminated: Set[int] = field(default_factory=set)
    confirmed_beam: Optional[int] = None
    refined_bad_beams: Dict[int, Set[int]] = field(default_factory=dict)
    probes: List[int] = field(default_factory=list)  # Sectors cleared for BRP
    lp: Optional[int] = None  # Learning point nearest to the fingerprint

    def __post_init__(self):
        if len(set(self.best_beams)) != len(self.best_beams):
            raise ConfigurationError(f"duplicate best beams {self.best_beams}", key="best_beams")

    def candidate_union(self, other_ap: int) -> Set[int]:
        out: Set[int] = set()
        for sectors in self.candidates.get(other_ap, {}).values():
            out |= sectors
        return out

    def bad_beams_for(self, other_ap: int) -> Set[int]:
        """Sectors AP ``other_ap`` must avoid while this link is active"""
        if self.confirmed_beam is None:
            return self.candidate_union(other_ap)
        return set(self.refined_bad_beams.get(other_ap, set()))

    @property
    def active_beams(self) -> List[int]:
        """Beams this link may be using: the confirmed one, or every best beam before BID"""
        if self.confirmed_beam is not None:
            return [self.confirmed_beam]
        return list(self.best_beams)


@dataclass(frozen=True)
class BrpResult:
    beam: int
    power_dbm: float
    probed: int
    fallback: bool = False


def _nearest_exemplar(fingerprint: np.ndarray, sets: Sequence[ExemplarSet]) -> float:
    return min(s.min_distance(fingerprint) for s in sets)


def select_ap(
    fp: OnlineFingerprint,
    dbs: FingerprintDatabases,
    exemplars: ExemplarMap,
    busy_aps: Set[int],
    gate_db2: float = 100.0,
) -> Optional[int]:
    """
    Pick the idle AP whose learned exemplars best match a fingerprint.

    An AP qualifies when its nearest exemplar (over all sectors) lies within
    the gate, measured as mean squared dB difference per AP reading. Among
    qualifying APs the smallest distance wins, ties going to the lowest id.

    Args:
        fp: Online fingerprint
        dbs: Fingerprint databases
        exemplars: Exemplar sets per AP
        busy_aps: APs currently serving a link
        gate_db2: Distance gate (dB^2 per reading)

    Returns:
        AP id, or None when no idle AP qualifies
    """
    fp.check(dbs.num_aps)
    best_ap, best_distance = None, math.inf
    for ap_id in range(dbs.num_aps):
        if ap_id in busy_aps or not exemplars.get(ap_id):
            continue
        distance = _nearest_exemplar(fp.rss, exemplars[ap_id])
        if distance / dbs.num_aps > gate_db2:
            continue
        if distance < best_distance:
            best_ap, best_distance = ap_id, distance
    return best_ap


def estimate_best_beams(fp: OnlineFingerprint, ap_id: int, exemplars: ExemplarMap, num_beams: int) -> List[int]:
    """
    Rank an AP's best sectors by nearest-exemplar distance.

    Args:
        fp: Online fingerprint
        ap_id: Serving AP
        exemplars: Exemplar sets per AP
        num_beams: Number of beams kept

    Returns:
        Up to X sector IDs, nearest first (lower sector ID on ties)
    """
    sets = exemplars.get(ap_id) or []
    if not sets:
        raise CoverageError(f"AP {ap_id} has no exemplar sets")
    ranked = sorted((s.min_distance(fp.rss), s.sector_id) for s in sets)
    return [sector for _, sector in ranked[:num_beams]]


def bad_beam_candidates(
    best_beams: Sequence[int],
    ap_id: int,
    other_ap: int,
    dbs: FingerprintDatabases,
    mcs_table: McsTable,
    noise_dbm: float,
) -> Dict[int, Set[int]]:
    """
    Sectors of another AP that would lower the MCS of each best beam.

    For best beam b of AP n and best sector c of AP m, the overlapped LPs are
    those whose best sectors are b for AP n and c for AP m. c is registered
    against b when at least one overlapped LP loses MCS with c interfering.

    Args:
        best_beams: Best beams of the serving AP
        ap_id: Serving AP n
        other_ap: Interfering AP m (m != n)
        dbs: Fingerprint databases
        mcs_table: MCS table
        noise_dbm: Noise power

    Returns:
        Best beam -> set of bad sectors of AP m (every best beam is a key)
    """
    if other_ap == ap_id:
        raise ConfigurationError("interfering AP must differ from the serving AP", key="other_ap")

    phi_n = dbs.phi[:, ap_id]
    phi_m = dbs.phi[:, other_ap]
    out: Dict[int, Set[int]] = {}
    for beam in best_beams:
        bad: Set[int] = set()
        for z in np.flatnonzero((phi_n == beam) & (phi_m != NULL_SECTOR)):
            sector_m = int(phi_m[z])
            if sector_m in bad:
                continue
            signal = float(dbs.p_off_dbm[z, ap_id])
            interference = float(dbs.p_off_dbm[z, other_ap])
            ideal = mcs_for_snr(mcs_table, snr_db(signal, noise_dbm))
            realized = mcs_for_snr(mcs_table, sinr_db(signal, [interference], noise_dbm))
            if mcs_rank(mcs_table, realized) < mcs_rank(mcs_table, ideal):
                bad.add(sector_m)
        out[beam] = bad
    return out


def refine_bad_beams_on_bid(plan: BeamPlan, confirmed_beam: int) -> Dict[int, Set[int]]:
    """
    Keep only the bad-beam candidates computed against the confirmed beam.

    Args:
        plan: Announcing link's plan (updated in place)
        confirmed_beam: Beam announced in the BID frame

    Returns:
        Other AP -> refined bad sectors
    """
    if confirmed_beam not in plan.best_beams:
        raise ProtocolError(
            f"BID beam {confirmed_beam} is not a best beam of AP {plan.ap_id} -> UE {plan.ue_id}"
        )
    plan.confirmed_beam = confirmed_beam
    plan.refined_bad_beams = {
        m: set(per_beam.get(confirmed_beam, set())) for m, per_beam in plan.candidates.items()
    }
    return plan.refined_bad_beams


def eliminate_bad_beams(best_beams: Sequence[int], eliminated: Set[int]) -> List[int]:
    """Best beams in order, minus the eliminated sectors"""
    return [b for b in best_beams if b not in eliminated]


def brp_refine(
    best_beams: Sequence[int],
    eliminated: Set[int],
    power_fn: Callable[[int], float],
) -> BrpResult:
    """
    Beam refinement against the true channel.

    Every surviving candidate is probed; the strongest wins (lower sector ID
    on equal power). When elimination removes every candidate, the full
    best-beam list is probed instead and the result is flagged.

    Args:
        best_beams: Estimated best beams, strongest first
        eliminated: Sectors removed by bad-beam elimination
        power_fn: Sector -> received power at the UE (dBm); -inf marks a lost probe

    Returns:
        BrpResult with the chosen beam, its power and the probe count
    """
    if not best_beams:
        raise CoverageError("no best beams to refine")
    candidates = eliminate_bad_beams(best_beams, eliminated)
    fallback = not candidates
    if fallback:
        logger.warning(f"All {len(best_beams)} best beams eliminated; probing the full list")
        candidates = list(best_beams)

    best_beam, best_power = None, -math.inf
    for beam in candidates:
        power = power_fn(beam)
        if best_beam is None or power > best_power or (power == best_power and beam < best_beam):
            best_beam, best_power = beam, power
    return BrpResult(beam=best_beam, power_dbm=best_power, probed=len(candidates), fallback=fallback)
