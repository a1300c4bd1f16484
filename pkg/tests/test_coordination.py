"""Tests for AP selection, beam estimation, bad-beam handling and the controller"""

import math

import numpy as np
import pytest

from src.coordination.beams import (
    BeamPlan,
    OnlineFingerprint,
    bad_beam_candidates,
    brp_refine,
    eliminate_bad_beams,
    estimate_best_beams,
    refine_bad_beams_on_bid,
    select_ap,
)
from src.coordination.controller import ApController
from src.learning.clustering import ExemplarSet, LearningConfig
from src.learning.databases import FingerprintDatabases
from src.radio.mcs import McsTable
from src.utils.errors import ConfigurationError, CoverageError, ProtocolError

NOISE_DBM = -80.0


def _set(ap_id, sector_id, rows, lps):
    return ExemplarSet(
        ap_id=ap_id,
        sector_id=sector_id,
        exemplars=np.array(rows, dtype=float),
        exemplar_lps=tuple(lps),
        member_lps=tuple((lp,) for lp in lps),
    )


@pytest.fixture
def dbs():
    """
    Two APs, two LPs.

    LP 0: AP 0 sector 3 at -50 dBm, AP 1 sector 5 at -55 dBm.
    LP 1: AP 0 sector 3 at -40 dBm, AP 1 sector 7 at -70 dBm.
    """
    return FingerprintDatabases(
        psi=[[-40.0, -60.0], [-45.0, -62.0]],
        phi=[[3, 5], [3, 7]],
        p_off_dbm=[[-50.0, -55.0], [-40.0, -70.0]],
        num_sectors=(8, 8),
    )


@pytest.fixture
def exemplars():
    return {
        0: [_set(0, 3, [[-40.0, -60.0]], [0])],
        1: [_set(1, 5, [[-60.0, -40.0]], [0]), _set(1, 7, [[-62.0, -45.0]], [1])],
    }


def _controller(dbs, exemplars, symmetric):
    config = LearningConfig(symmetric_elimination=symmetric)
    return ApController(dbs, exemplars, McsTable.default(), NOISE_DBM, config)


def test_select_nearest_ap(dbs, exemplars):
    """The AP with the nearest exemplar is selected"""
    fp = OnlineFingerprint(rss=[-41.0, -59.0], ue_id=0)
    assert select_ap(fp, dbs, exemplars, busy_aps=set()) == 0


def test_select_skips_busy_ap(dbs, exemplars):
    """Busy APs are never selected"""
    fp = OnlineFingerprint(rss=[-41.0, -59.0], ue_id=0)
    assert select_ap(fp, dbs, exemplars, busy_aps={0}, gate_db2=1000.0) == 1


def test_select_gate_rejects_far_fingerprint(dbs, exemplars):
    """No AP qualifies when the nearest exemplar is outside the gate"""
    fp = OnlineFingerprint(rss=[-41.0, -59.0], ue_id=0)
    assert select_ap(fp, dbs, exemplars, busy_aps={0}, gate_db2=100.0) is None


def test_select_rejects_wrong_length(dbs, exemplars):
    """A fingerprint must hold one reading per AP"""
    fp = OnlineFingerprint(rss=[-41.0], ue_id=0)
    with pytest.raises(ConfigurationError):
        select_ap(fp, dbs, exemplars, busy_aps=set())


def test_estimate_best_beams_order(exemplars):
    """Beams are ranked by nearest-exemplar distance"""
    fp = OnlineFingerprint(rss=[-60.0, -41.0], ue_id=0)
    assert estimate_best_beams(fp, 1, exemplars, 6) == [5, 7]
    assert estimate_best_beams(fp, 1, exemplars, 1) == [5]


def test_estimate_best_beams_tie_lower_sector():
    """Equal distances go to the lower sector ID"""
    sets = {0: [_set(0, 6, [[-50.0]], [0]), _set(0, 2, [[-50.0]], [1])]}
    fp = OnlineFingerprint(rss=[-45.0], ue_id=0)
    assert estimate_best_beams(fp, 0, sets, 2) == [2, 6]


def test_estimate_best_beams_without_coverage(exemplars):
    """An AP without exemplar sets cannot estimate beams"""
    fp = OnlineFingerprint(rss=[-60.0, -41.0], ue_id=0)
    with pytest.raises(CoverageError):
        estimate_best_beams(fp, 4, exemplars, 6)


def test_bad_beam_candidates(dbs):
    """Only sectors that lower the MCS of an overlapped LP are bad"""
    table = McsTable.default()
    assert bad_beam_candidates([3], 0, 1, dbs, table, NOISE_DBM) == {3: {5}}
    assert bad_beam_candidates([5, 7], 1, 0, dbs, table, NOISE_DBM) == {5: {3}, 7: {3}}


def test_bad_beam_candidates_no_overlap(dbs):
    """A best beam with no overlapped LP has no bad sectors"""
    assert bad_beam_candidates([1], 0, 1, dbs, McsTable.default(), NOISE_DBM) == {1: set()}


def test_bad_beam_candidates_same_ap(dbs):
    """The interfering AP must differ from the serving AP"""
    with pytest.raises(ConfigurationError):
        bad_beam_candidates([3], 0, 0, dbs, McsTable.default(), NOISE_DBM)


def test_refine_on_bid_keeps_confirmed_beam():
    """After BID only the confirmed beam's bad sectors remain"""
    plan = BeamPlan(ap_id=1, ue_id=0, best_beams=[5, 7], candidates={0: {5: {1, 2}, 7: {4}}})
    assert plan.bad_beams_for(0) == {1, 2, 4}
    assert refine_bad_beams_on_bid(plan, 7) == {0: {4}}
    assert plan.bad_beams_for(0) == {4}
    assert plan.active_beams == [7]


def test_refine_rejects_unknown_beam():
    """A BID beam outside the best beams is a protocol error"""
    plan = BeamPlan(ap_id=1, ue_id=0, best_beams=[5, 7])
    with pytest.raises(ProtocolError):
        refine_bad_beams_on_bid(plan, 3)


def test_plan_rejects_duplicate_beams():
    """Best beams are distinct"""
    with pytest.raises(ConfigurationError):
        BeamPlan(ap_id=0, ue_id=0, best_beams=[2, 2])


def test_eliminate_keeps_order():
    """Elimination preserves the estimated order"""
    assert eliminate_bad_beams([4, 1, 6, 2], {1, 9}) == [4, 6, 2]


def test_brp_picks_strongest_with_low_sector_tie():
    """Strongest surviving beam wins; ties go to the lower sector"""
    powers = {3: -50.0, 5: -40.0, 7: -50.0}
    result = brp_refine([7, 3, 5], {5}, powers.__getitem__)
    assert result.beam == 3
    assert result.probed == 2
    assert not result.fallback


def test_brp_falls_back_to_full_list():
    """With every beam eliminated the full list is probed"""
    powers = {3: -50.0, 5: -40.0}
    result = brp_refine([3, 5], {3, 5}, powers.__getitem__)
    assert result.beam == 5
    assert result.probed == 2
    assert result.fallback


def test_brp_all_probes_lost():
    """Lost probes still return a beam at zero power"""
    result = brp_refine([4], set(), lambda beam: -math.inf)
    assert result.beam == 4
    assert result.power_dbm == -math.inf


def test_brp_empty_list():
    """An empty best-beam list cannot be refined"""
    with pytest.raises(CoverageError):
        brp_refine([], set(), lambda beam: 0.0)


def test_controller_elimination_one_sided(dbs, exemplars):
    """Without symmetric elimination only the active link's bad beams are removed"""
    apc = _controller(dbs, exemplars, symmetric=False)
    apc.plan_link(0, OnlineFingerprint(rss=[-41.0, -59.0], ue_id=0))
    plan = apc.plan_link(1, OnlineFingerprint(rss=[-60.0, -41.0], ue_id=1))
    assert plan.best_beams == [5, 7]
    assert plan.eliminated == {5}


def test_controller_elimination_symmetric(dbs, exemplars):
    """Symmetric elimination also drops beams hurt by the active beam"""
    apc = _controller(dbs, exemplars, symmetric=True)
    apc.plan_link(0, OnlineFingerprint(rss=[-41.0, -59.0], ue_id=0))
    plan = apc.plan_link(1, OnlineFingerprint(rss=[-60.0, -41.0], ue_id=1))
    assert plan.eliminated == {5, 7}


def test_controller_first_link_unconstrained(dbs, exemplars):
    """The first link has nothing to avoid"""
    apc = _controller(dbs, exemplars, symmetric=True)
    plan = apc.plan_link(0, OnlineFingerprint(rss=[-41.0, -59.0], ue_id=0))
    assert plan.eliminated == set()
    assert apc.busy == {0}


def test_controller_bid_and_release(dbs, exemplars):
    """BID confirms the beam; release frees the AP"""
    apc = _controller(dbs, exemplars, symmetric=False)
    apc.plan_link(0, OnlineFingerprint(rss=[-41.0, -59.0], ue_id=0))
    plan = apc.on_bid(0, 0, 3)
    assert plan.confirmed_beam == 3
    assert plan.refined_bad_beams == {1: {5}}

    with pytest.raises(ProtocolError):
        apc.on_bid(0, 1, 3)
    with pytest.raises(ProtocolError):
        apc.on_bid(1, 0, 5)

    apc.release(0)
    assert apc.busy == set()
    assert apc.plans == {}


def test_controller_reserve_twice(dbs, exemplars):
    """Reserving a busy AP is a protocol error"""
    apc = _controller(dbs, exemplars, symmetric=False)
    apc.reserve(1)
    with pytest.raises(ProtocolError):
        apc.reserve(1)


def test_controller_select_respects_busy(dbs, exemplars):
    """The controller never selects a reserved AP"""
    apc = _controller(dbs, exemplars, symmetric=False)
    fp = OnlineFingerprint(rss=[-41.0, -59.0], ue_id=0)
    assert apc.select_ap(fp) == 0
    apc.reserve(0)
    assert apc.select_ap(fp) is None


@pytest.fixture
def mapped_dbs(dbs):
    """The two-LP databases plus a per-sector power map"""
    power = np.full((2, 2, 8), -100.0)
    power[0, 0, 2] = -50.0  # LP 0, AP 0 sector 3
    power[0, 1, 4] = -55.0  # LP 0, AP 1 sector 5
    power[0, 1, 6] = -95.0  # LP 0, AP 1 sector 7
    power[1, 0, 2] = -40.0
    power[1, 1, 6] = -70.0
    return FingerprintDatabases(dbs.psi, dbs.phi, dbs.p_off_dbm, dbs.num_sectors, power)


def _link_ap0(apc, signal_dbm=-50.0):
    apc.plan_link(0, OnlineFingerprint(rss=[-41.0, -59.0], ue_id=0))
    apc.on_bid(0, 0, 3)
    return apc.activate(0, 0, signal_dbm)


def test_activated_link_outlives_training(dbs, exemplars):
    """A confirmed training becomes a link and frees the AP"""
    apc = _controller(dbs, exemplars, symmetric=False)
    link = _link_ap0(apc)
    assert link.beam == 3
    assert link.mcs == 12
    assert apc.busy == set()
    assert apc.plans == {}
    assert apc.links == {0: link}
    assert apc.links_of(0) == [link]


def test_links_constrain_later_trainings(dbs, exemplars):
    """Beams that a trained link marks bad are eliminated for new trainings"""
    apc = _controller(dbs, exemplars, symmetric=False)
    _link_ap0(apc)
    plan = apc.plan_link(1, OnlineFingerprint(rss=[-60.0, -41.0], ue_id=1))
    assert plan.eliminated == {5}


def test_activate_without_confirmed_beam(dbs, exemplars):
    """Only a training confirmed by BID can become a link"""
    apc = _controller(dbs, exemplars, symmetric=False)
    apc.plan_link(0, OnlineFingerprint(rss=[-41.0, -59.0], ue_id=0))
    with pytest.raises(ProtocolError):
        apc.activate(0, 0, -50.0)


def test_plan_locates_nearest_learning_point(mapped_dbs, exemplars):
    """The plan records the LP whose stored fingerprint is closest"""
    apc = _controller(mapped_dbs, exemplars, symmetric=False)
    assert apc.plan_link(0, OnlineFingerprint(rss=[-41.0, -59.0], ue_id=0)).lp == 0
    assert apc.locate(OnlineFingerprint(rss=[-46.0, -62.0], ue_id=1)) == 1


def test_sectors_that_break_a_link_are_not_admitted(mapped_dbs, exemplars):
    """A sector is admitted only if every link of another AP keeps its MCS"""
    apc = _controller(mapped_dbs, exemplars, symmetric=False)
    assert apc.admissible_sectors(1, [5, 7]) == [5, 7]
    link = _link_ap0(apc)
    assert link.mcs == 12
    assert apc.admissible_sectors(1, [5, 7]) == [7]
    assert apc.admissible_sectors(0, [1, 2]) == [1, 2]


def test_link_mcs_counts_registered_sectors(mapped_dbs, exemplars):
    """A new link picks its MCS under the sectors other APs may emit"""
    apc = _controller(mapped_dbs, exemplars, symmetric=False)
    apc.plan_link(1, OnlineFingerprint(rss=[-60.0, -41.0], ue_id=1))
    apc.set_probes(1, [5])
    link = _link_ap0(apc)
    assert link.mcs == 0


def test_link_without_reachable_mcs(mapped_dbs, exemplars):
    """No link is created when interference leaves no MCS, and the AP is freed"""
    apc = _controller(mapped_dbs, exemplars, symmetric=False)
    _link_ap0(apc)
    apc.plan_link(1, OnlineFingerprint(rss=[-46.0, -62.0], ue_id=1))
    apc.on_bid(1, 1, 7)
    assert apc.activate(1, 1, -70.0) is None
    assert 1 not in apc.links
    assert apc.busy == set()


def test_confirmed_beam_conflicts_with_link(dbs, exemplars):
    """A link whose beam turns bad with a confirmed beam is reported, then dropped"""
    apc = _controller(dbs, exemplars, symmetric=False)
    link = _link_ap0(apc)
    apc.plan_link(1, OnlineFingerprint(rss=[-60.0, -41.0], ue_id=1))
    plan = apc.on_bid(1, 1, 5)
    assert apc.conflicting_links(plan) == [0]
    assert apc.drop_link(0) is link
    assert apc.links == {}
    assert apc.drop_link(0) is None


def test_brp_sectors_need_a_training(dbs, exemplars):
    """BRP sectors belong to a training in progress"""
    apc = _controller(dbs, exemplars, symmetric=False)
    with pytest.raises(ProtocolError):
        apc.set_probes(0, [3])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
