"""End-to-end runs of the baseline, centralized and dual-band protocols on small scenarios"""

import numpy as np
import pandas as pd
import pytest

from src.coordination.beams import BeamPlan
from src.environment.geometry import Point3, Room
from src.environment.layout import EnvironmentConfig, build_environment, generate_lp_grid
from src.macsim.frames import FrameKind
from src.macsim.protocols import BaselineProtocol, make_protocol, run_protocol
from src.macsim.protocols.centralized import CandidateLink, probe_groups
from src.macsim.protocols.dualband import _Training
from src.macsim.scenario import TRACE_COLUMNS, MacConfig, Scenario, SimSettings
from src.radio.blockage import BlockageConfig
from src.radio.propagation import RadioConfig
from src.utils.errors import ConfigurationError
from tests.conftest import make_env

HORIZON_S = 0.02


def test_baseline_single_link():
    """One AP and one UE: data flows without collisions or losses"""
    env = make_env([(3.0, 3.0, 3.0)], [(5.0, 3.0, 1.0)])
    record = run_protocol("baseline", env, SimSettings(), seed=1, horizon_s=HORIZON_S, phases=[0.0])
    assert record.delivered > 0
    assert record.collision_count == 0
    assert record.data_frames_lost == 0
    assert record.unreachable_ues == 0
    assert record.generated == record.delivered + record.dropped + record.in_flight


def test_baseline_colocated_aps_collide():
    """Co-located APs with aligned beacons and no backoff spread collide"""
    env = make_env([(5.9, 3.0, 3.0), (6.1, 3.0, 3.0)], [(2.0, 3.0, 1.0), (10.0, 3.0, 1.0)])
    settings = SimSettings(mac=MacConfig(cw_min=1, cw_max=1))
    record = run_protocol("baseline", env, settings, seed=1, horizon_s=HORIZON_S, phases=[0.0, 0.0])
    assert record.collision_count >= 1


def test_baseline_is_deterministic():
    """Equal seeds give equal counters"""
    env = make_env([(3.0, 3.0, 3.0), (9.0, 3.0, 3.0)], [(2.0, 2.0, 1.0), (6.0, 4.0, 1.0), (10.0, 2.0, 1.0)])
    a = run_protocol("baseline", env, SimSettings(), seed=4, horizon_s=HORIZON_S)
    b = run_protocol("baseline", env, SimSettings(), seed=4, horizon_s=HORIZON_S)
    assert a.as_dict() == b.as_dict()


def test_baseline_phase_count_mismatch(two_ap_env):
    """One beacon phase per AP is required"""
    scenario = Scenario(two_ap_env, SimSettings(), seed=1, horizon_s=HORIZON_S)
    with pytest.raises(ConfigurationError) as exc:
        BaselineProtocol(scenario, phases=[0.0])
    assert exc.value.key == "phases"


def test_unknown_protocol(two_ap_env):
    """The registry rejects unknown names"""
    scenario = Scenario(two_ap_env, SimSettings(), seed=1, horizon_s=HORIZON_S)
    with pytest.raises(ConfigurationError):
        make_protocol("token-ring", scenario)


def test_trace_file(tmp_path, two_ap_env):
    """The trace holds one row per frame with the fixed columns"""
    path = tmp_path / "traces" / "baseline.csv"
    run_protocol("baseline", two_ap_env, SimSettings(), seed=2, horizon_s=HORIZON_S, trace_path=path, phases=[0.0, 0.01])
    trace = pd.read_csv(path, dtype=str, keep_default_na=False)
    assert list(trace.columns) == TRACE_COLUMNS
    assert (trace["kind"] == FrameKind.SSW.value).any()
    assert (trace["dst"] == "broadcast").any()
    times = trace["time_s"].astype(float)
    assert times.min() >= 0.0
    assert times.max() <= HORIZON_S


def test_centralized_training_phases_do_not_overlap(two_ap_env):
    """Each AP sweeps, then each UE, one after another"""
    scenario = Scenario(two_ap_env, SimSettings(), seed=1, horizon_s=HORIZON_S, keep_frames=True)
    record = make_protocol("centralized", scenario).run()
    sweeps = [f for f in scenario.frame_log if f.kind == FrameKind.SSW]

    spans = {}
    for frame in sweeps:
        start, end = spans.get(frame.src, (frame.start, frame.end))
        spans[frame.src] = (min(start, frame.start), max(end, frame.end))
    ordered = sorted(spans.items(), key=lambda item: item[1][0])
    assert [src for src, _ in ordered] == [0, 1, 2, 3, 4]
    for (_, (_, end)), (_, (start, _)) in zip(ordered, ordered[1:]):
        assert end <= start + 1e-12

    assert record.bhi_overhead_fraction > 0.0
    assert record.generated == record.delivered + record.dropped + record.in_flight


def test_probe_groups_minimal_partition():
    """Incompatible links land in different groups, the rest share"""
    a, b, c = (CandidateLink(ap, ap + 10, 1) for ap in range(3))
    clash = {frozenset((a, b))}
    groups = probe_groups([a, b, c], lambda x, y: frozenset((x, y)) not in clash)
    assert len(groups) == 2
    assert not any(a in g and b in g for g in groups)
    assert sorted(len(g) for g in groups) == [1, 2]


def test_probe_groups_greedy_beyond_limit():
    """Large link sets are packed greedily"""
    links = [CandidateLink(ap, ap + 10, 1) for ap in range(6)]
    assert probe_groups(links, lambda x, y: True) == [links]
    alone = probe_groups(links, lambda x, y: False)
    assert alone == [[link] for link in links]


def test_centralized_delivers(two_ap_env):
    """The controller schedule delivers traffic"""
    record = run_protocol("centralized", two_ap_env, SimSettings(), seed=3, horizon_s=HORIZON_S)
    assert record.delivered > 0
    assert all(t > 0 for t in record.training_time_s)


def _far_apart_env():
    """Two APs 100 m apart, every UE on a learning point within 5 m of one of them"""
    room = Room(120.0, 6.0, 3.0)
    aps = [(10.0, 3.0, 3.0), (110.0, 3.0, 3.0)]
    lps = generate_lp_grid(room, 40, 1.0)
    near = [
        p for p in lps
        if min(p.distance_to(Point3(*ap)) for ap in aps) <= 5.0
    ]
    return make_env(aps, [(p.x, p.y, p.z) for p in near], room=room, num_lps=40)


def test_dualband_with_exact_fingerprints():
    """Isolated cells: BRP runs, no NAV breaks and no beam interference"""
    env = _far_apart_env()
    assert env.num_ues >= 2
    settings = SimSettings(radio=RadioConfig(measurement_sigma_db=0.0))
    scenario = Scenario(env, settings, seed=1, horizon_s=HORIZON_S, keep_frames=True)
    record = make_protocol("dualband", scenario).run()

    assert any(f.kind == FrameKind.BRP for f in scenario.frame_log)
    assert any(f.kind == FrameKind.BID for f in scenario.frame_log)
    assert record.nav_violations == 0
    assert record.data_losses_interference == 0
    assert record.delivered > 0
    assert record.generated == record.delivered + record.dropped + record.in_flight


def test_dualband_uses_prebuilt_state(two_ap_env):
    """Learned state passed in is used as is"""
    from src.learning.clustering import build_all_exemplars
    from src.learning.databases import build_databases

    settings = SimSettings()
    dbs = build_databases(two_ap_env, settings.radio, settings.mcs.build_table())
    exemplars = build_all_exemplars(dbs, settings.learning)
    scenario = Scenario(two_ap_env, settings, seed=1, horizon_s=HORIZON_S)
    protocol = make_protocol("dualband", scenario, databases=(dbs, exemplars))
    assert protocol.controller.dbs is dbs
    record = protocol.run()
    assert record.protocol == "dualband"


@pytest.mark.parametrize("num_aps", [2, 4, 8])
def test_dualband_same_room_exact_fingerprints(num_aps):
    """APs sharing one room: UEs on learning points with exact fingerprints never lose DATA to interference"""
    env = build_environment(EnvironmentConfig(num_aps=num_aps, num_ues=12, ue_placement="lps"), seed=1)
    settings = SimSettings(radio=RadioConfig(measurement_sigma_db=0.0), blockage=BlockageConfig(enabled=False))
    record = run_protocol("dualband", env, settings, seed=1, horizon_s=0.1)
    assert record.delivered > 0
    assert record.data_losses_interference == 0
    assert record.nav_violations == 0


def test_dualband_keeps_trained_links():
    """A UE is polled only before its first DATA frame; later TXOPs reuse the link"""
    env = _far_apart_env()
    settings = SimSettings(radio=RadioConfig(measurement_sigma_db=0.0))
    scenario = Scenario(env, settings, seed=1, horizon_s=0.05, keep_frames=True)
    make_protocol("dualband", scenario).run()

    txop = settings.mac.txop_limit_s
    long_lived = 0
    for ue in range(env.num_ues):
        node = scenario.ue_node(ue)
        data = [f.start for f in scenario.frame_log if f.kind == FrameKind.DATA and f.dst == node]
        if not data or max(data) - min(data) <= 3 * txop:
            continue
        long_lived += 1
        polls = [f.start for f in scenario.frame_log if f.kind == FrameKind.WIFI_M_REQ and f.dst == node]
        assert polls
        assert max(polls) < min(data)
    assert long_lived >= 1


def test_dualband_nav_window_overlap(two_ap_env):
    """A beam-training frame breaks a NAV window of another AP only when their intervals overlap"""
    slot = MacConfig().brp_slot_s

    def violations(windows):
        scenario = Scenario(two_ap_env, SimSettings(), seed=1, horizon_s=HORIZON_S)
        protocol = make_protocol("dualband", scenario)
        protocol.start()
        protocol.nav_windows = list(windows)
        training = _Training(ap=0, ue=0, plan=BeamPlan(ap_id=0, ue_id=0, best_beams=[1]), probes=[1])
        protocol._send_probe((training, 1))
        return scenario.record.nav_violations

    assert violations([(slot / 2, 1.0, 1)]) == 1
    assert violations([(slot, 1.0, 1), (-1.0, 0.0, 1), (0.0, 1.0, 0)]) == 0


def test_baseline_associates_with_strongest_sector(two_ap_env):
    """Each UE joins the AP whose best 60 GHz sector reaches it with the most power"""
    scenario = Scenario(two_ap_env, SimSettings(), seed=1, horizon_s=HORIZON_S)
    protocol = BaselineProtocol(scenario, phases=[0.0, 0.0])
    protocol.start()
    link = scenario.link
    for ue in range(two_ap_env.num_ues):
        node = scenario.ue_node(ue)
        powers = [link.power_dbm(ap, link.best_sector(ap, node), node) for ap in range(two_ap_env.num_aps)]
        assert protocol.ue_ap[ue] == int(np.argmax(powers))
    assert protocol.ue_ap[0] == 0
    assert protocol.ue_ap[2] == 1


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
