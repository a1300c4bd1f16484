"""Tests for affinity propagation and exemplar construction"""

import numpy as np
import pytest
from sklearn.cluster import AffinityPropagation

from src.learning.clustering import (
    LearningConfig,
    affinity_propagation,
    build_exemplars,
    negative_squared_distances,
    summarize,
)
from src.learning.databases import FingerprintDatabases
from src.utils.errors import ConfigurationError


def _partition(labels):
    groups = {}
    for i, label in enumerate(labels):
        groups.setdefault(int(label), []).append(i)
    return sorted(tuple(g) for g in groups.values())


def test_two_pairs_give_two_exemplars():
    """Two tight pairs far apart form one cluster each"""
    points = np.array([[0.0], [0.1], [10.0], [10.1]])
    result = affinity_propagation(negative_squared_distances(points))
    assert result.converged
    assert len(result.exemplars) == 2
    assert _partition(result.labels) == [(0, 1), (2, 3)]


def test_exemplars_label_themselves():
    """Every exemplar is a member of its own cluster"""
    rng = np.random.default_rng(3)
    points = rng.normal(size=(30, 2))
    result = affinity_propagation(negative_squared_distances(points))
    for k in result.exemplars:
        assert result.labels[k] == k


def test_points_join_most_similar_exemplar():
    """Non-exemplars are assigned to the exemplar they are most similar to"""
    rng = np.random.default_rng(5)
    points = rng.normal(size=(25, 3))
    S = negative_squared_distances(points)
    result = affinity_propagation(S)
    exemplars = set(int(k) for k in result.exemplars)
    for i, label in enumerate(result.labels):
        if i in exemplars:
            continue
        best = max(S[i, k] for k in result.exemplars)
        assert S[i, label] == best


def test_matches_reference_on_separated_blobs():
    """Partition agrees with scikit-learn on well separated blobs"""
    rng = np.random.default_rng(11)
    centers = np.array([[0.0, 0.0], [40.0, 0.0], [0.0, 40.0]])
    points = np.vstack([c + rng.normal(scale=0.5, size=(8, 2)) for c in centers])
    S = negative_squared_distances(points)

    ours = affinity_propagation(S, damping=0.5)
    off_diagonal = S[~np.eye(len(S), dtype=bool)]
    reference = AffinityPropagation(
        affinity="precomputed",
        damping=0.5,
        preference=float(np.median(off_diagonal)),
        random_state=0,
    ).fit(S)
    assert _partition(ours.labels) == _partition(reference.labels_)


def test_single_point():
    """One point is its own exemplar"""
    result = affinity_propagation(np.array([[0.0]]))
    assert list(result.exemplars) == [0]
    assert list(result.labels) == [0]
    assert result.converged


def test_equal_similarities_give_one_cluster():
    """Identical fingerprints collapse into one cluster"""
    points = np.zeros((6, 2))
    result = affinity_propagation(negative_squared_distances(points))
    assert list(result.exemplars) == [0]
    assert set(result.labels) == {0}


def test_clustering_is_deterministic():
    """Repeated runs give identical exemplars"""
    rng = np.random.default_rng(2)
    S = negative_squared_distances(rng.normal(size=(20, 2)))
    a = affinity_propagation(S)
    b = affinity_propagation(S)
    assert np.array_equal(a.exemplars, b.exemplars)
    assert np.array_equal(a.labels, b.labels)


def test_non_square_similarity():
    """A non-square table is rejected"""
    with pytest.raises(ConfigurationError):
        affinity_propagation(np.zeros((2, 3)))


def test_damping_out_of_range():
    """Damping below 0.5 is rejected"""
    with pytest.raises(ConfigurationError) as exc:
        affinity_propagation(np.zeros((2, 2)), damping=0.3)
    assert exc.value.key == "damping"


def test_learning_config_validation():
    """Config checks damping and beam count"""
    with pytest.raises(ConfigurationError):
        LearningConfig(damping=1.0).validate()
    with pytest.raises(ConfigurationError):
        LearningConfig(num_best_beams=0).validate()


def test_build_exemplars_per_sector():
    """One exemplar set per best-sector group, members partition the group"""
    psi = [[-40.0], [-40.5], [-60.0], [-60.2], [-45.0]]
    phi = [[1], [1], [1], [1], [2]]
    p_off = [[-50.0]] * 5
    dbs = FingerprintDatabases(psi=psi, phi=phi, p_off_dbm=p_off, num_sectors=(4,))
    sets = build_exemplars(dbs, 0)
    assert [s.sector_id for s in sets] == [1, 2]

    first = sets[0]
    assert first.count == 2
    assert sorted(lp for members in first.member_lps for lp in members) == [0, 1, 2, 3]
    for lp, members in zip(first.exemplar_lps, first.member_lps):
        assert lp in members
    assert sets[1].exemplar_lps == (4,)
    assert sets[1].min_distance(np.array([-45.0])) == 0.0


def test_summarize_counts():
    """Summary rows report coverage and exemplar counts per AP"""
    psi = [[-40.0, -70.0], [-41.0, -71.0]]
    phi = [[1, -1], [1, -1]]
    p_off = [[-50.0, -np.inf], [-50.0, -np.inf]]
    dbs = FingerprintDatabases(psi=psi, phi=phi, p_off_dbm=p_off, num_sectors=(4, 4))
    exemplars = {0: build_exemplars(dbs, 0), 1: build_exemplars(dbs, 1)}
    rows = summarize(dbs, exemplars)
    assert rows[0]['covered_lps'] == 2
    assert rows[1]['null_lps'] == 2
    assert rows[1]['groups'] == 0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
