"""Offline statistical learning: fingerprint databases and exemplar clustering"""

from src.learning.clustering import (
    ClusteringResult,
    ExemplarSet,
    LearningConfig,
    affinity_propagation,
    build_all_exemplars,
    build_exemplars,
    summarize,
)
from src.learning.databases import NULL_SECTOR, FingerprintDatabases, build_databases, group_by_best_sector
from src.learning.storage import load_databases, save_databases

__all__ = [
    'NULL_SECTOR',
    'ClusteringResult',
    'ExemplarSet',
    'FingerprintDatabases',
    'LearningConfig',
    'affinity_propagation',
    'build_all_exemplars',
    'build_databases',
    'build_exemplars',
    'group_by_best_sector',
    'load_databases',
    'save_databases',
    'summarize',
]
