"""Brute-force cross-checks of the coordination algorithms on random instances"""

import math

import numpy as np
import pytest

from src.coordination.beams import OnlineFingerprint, bad_beam_candidates, estimate_best_beams, select_ap
from src.learning.clustering import ExemplarSet
from src.learning.databases import NULL_SECTOR, FingerprintDatabases, best_sector, build_databases
from src.radio.mcs import McsTable
from src.radio.propagation import RadioConfig, noise_power_dbm, rx_power_mmw
from tests.conftest import make_env

NOISE_DBM = -75.0
TABLE = McsTable.default()
INSTANCES = 200


def _random_instance(rng):
    num_aps = int(rng.integers(2, 4))
    num_lps = int(rng.integers(1, 21))
    num_sectors = int(rng.integers(1, 9))

    psi = rng.uniform(-80.0, -30.0, size=(num_lps, num_aps))
    phi = rng.integers(1, num_sectors + 1, size=(num_lps, num_aps))
    phi[rng.random((num_lps, num_aps)) < 0.2] = NULL_SECTOR
    p_off = np.where(phi == NULL_SECTOR, -np.inf, rng.uniform(-90.0, -40.0, size=(num_lps, num_aps)))
    dbs = FingerprintDatabases(psi=psi, phi=phi, p_off_dbm=p_off, num_sectors=(num_sectors,) * num_aps)

    exemplars = {}
    for ap in range(num_aps):
        sets = []
        for sector in range(1, num_sectors + 1):
            lps = [lp for lp in range(num_lps) if phi[lp, ap] == sector]
            if not lps:
                continue
            size = int(rng.integers(1, len(lps) + 1))
            chosen = sorted(int(lp) for lp in rng.choice(lps, size=size, replace=False))
            sets.append(
                ExemplarSet(
                    ap_id=ap,
                    sector_id=sector,
                    exemplars=psi[chosen].copy(),
                    exemplar_lps=tuple(chosen),
                    member_lps=tuple((lp,) for lp in chosen),
                )
            )
        exemplars[ap] = sets
    return dbs, exemplars


def _sq(a, b):
    return sum((x - y) ** 2 for x, y in zip(a, b))


def _brute_select(rss, exemplars, busy, gate, num_aps):
    best = None
    for ap in range(num_aps):
        if ap in busy or not exemplars[ap]:
            continue
        d = min(_sq(rss, row) for s in exemplars[ap] for row in s.exemplars)
        if d / num_aps > gate:
            continue
        if best is None or d < best[0]:
            best = (d, ap)
    return None if best is None else best[1]


def _brute_rank(rss, sets, count):
    scored = [(min(_sq(rss, row) for row in s.exemplars), s.sector_id) for s in sets]
    return [sector for _, sector in sorted(scored)[:count]]


def _brute_mcs(ratio_db):
    chosen = -1
    for position, entry in enumerate(TABLE.entries):
        if ratio_db >= entry.min_snr_db:
            chosen = position
    return chosen


def _brute_bad_beams(beams, n, m, dbs):
    out = {}
    for beam in beams:
        bad = set()
        for z in range(dbs.num_lps):
            if dbs.phi[z, n] != beam or dbs.phi[z, m] == NULL_SECTOR:
                continue
            signal = 10 ** (dbs.p_off_dbm[z, n] / 10)
            interference = 10 ** (dbs.p_off_dbm[z, m] / 10)
            noise = 10 ** (NOISE_DBM / 10)
            snr = 10 * math.log10(signal / noise)
            sinr = 10 * math.log10(signal / (noise + interference))
            if _brute_mcs(sinr) < _brute_mcs(snr):
                bad.add(int(dbs.phi[z, m]))
        out[beam] = bad
    return out


def test_select_ap_matches_brute_force():
    """AP selection equals an exhaustive search over every exemplar"""
    rng = np.random.default_rng(101)
    for _ in range(INSTANCES):
        dbs, exemplars = _random_instance(rng)
        rss = rng.uniform(-80.0, -30.0, size=dbs.num_aps)
        busy = {ap for ap in range(dbs.num_aps) if rng.random() < 0.3}
        gate = float(rng.choice([25.0, 100.0, 400.0]))
        fp = OnlineFingerprint(rss=rss, ue_id=0)
        expected = _brute_select(rss, exemplars, busy, gate, dbs.num_aps)
        assert select_ap(fp, dbs, exemplars, busy, gate) == expected


def test_best_beam_ranking_matches_brute_force():
    """Beam ranking equals sorting every sector by nearest exemplar"""
    rng = np.random.default_rng(202)
    for _ in range(INSTANCES):
        dbs, exemplars = _random_instance(rng)
        rss = rng.uniform(-80.0, -30.0, size=dbs.num_aps)
        fp = OnlineFingerprint(rss=rss, ue_id=0)
        count = int(rng.integers(1, 7))
        for ap, sets in exemplars.items():
            if not sets:
                continue
            ranked = estimate_best_beams(fp, ap, exemplars, count)
            assert ranked == _brute_rank(rss, sets, count)
            assert len(ranked) == min(count, len(sets))


def test_bad_beam_sets_match_brute_force():
    """Bad-beam candidates equal a direct scan of the overlapped LPs"""
    rng = np.random.default_rng(303)
    for _ in range(INSTANCES):
        dbs, _ = _random_instance(rng)
        sectors = list(range(1, dbs.num_sectors[0] + 1))
        for n in range(dbs.num_aps):
            for m in range(dbs.num_aps):
                if m == n:
                    continue
                got = bad_beam_candidates(sectors, n, m, dbs, TABLE, NOISE_DBM)
                assert got == _brute_bad_beams(sectors, n, m, dbs)



def _brute_best_sector(powers):
    top = max(powers)
    return min(i + 1 for i, p in enumerate(powers) if p == top)


def test_best_sector_matches_brute_force():
    """The strongest sector (lowest ID on ties) equals an exhaustive scan"""
    rng = np.random.default_rng(404)
    for _ in range(INSTANCES):
        count = int(rng.integers(1, 9))
        # Coarse grid so ties occur
        powers = [float(p) for p in rng.integers(-8, -3, size=count) * 10.0]
        assert best_sector(powers) == _brute_best_sector(powers)


def test_best_sector_map_matches_brute_force():
    """Best-sector and best-power tables equal a scan of every sector of every AP at every LP"""
    rng = np.random.default_rng(505)
    radio = RadioConfig()
    noise_dbm = noise_power_dbm(radio.noise)
    floor_db = TABLE.control.min_snr_db
    for _ in range(INSTANCES):
        num_aps = int(rng.integers(1, 4))
        aps = [(float(rng.uniform(0.5, 11.5)), float(rng.uniform(0.5, 5.5)), 3.0) for _ in range(num_aps)]
        env = make_env(aps, num_sectors=int(rng.integers(1, 9)), num_lps=int(rng.integers(1, 21)))
        dbs = build_databases(env, radio, TABLE)
        for lp, point in enumerate(env.learning_points):
            for ap in env.aps:
                powers = [
                    rx_power_mmw(ap, s, point, radio.pattern, radio.rx_gain_quasi_omni_dbi, radio.carrier_mmw_hz)
                    for s in ap.sector_ids
                ]
                sector = _brute_best_sector(powers)
                if powers[sector - 1] - noise_dbm >= floor_db:
                    assert dbs.phi[lp, ap.id] == sector
                    assert dbs.p_off_dbm[lp, ap.id] == powers[sector - 1]
                else:
                    assert dbs.phi[lp, ap.id] == NULL_SECTOR
                    assert np.isneginf(dbs.p_off_dbm[lp, ap.id])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
