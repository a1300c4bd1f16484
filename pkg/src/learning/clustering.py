"""Affinity propagation and per-sector fingerprint exemplars"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.learning.databases import FingerprintDatabases, group_by_best_sector
from src.utils.errors import ConfigurationError
from src.utils.logger import get_logger

logger = get_logger()


@dataclass(frozen=True)
class LearningConfig:
    """Learning section: clustering and online beam-estimation parameters"""
    damping: float = 0.5
    max_iter: int = 200
    convergence_window: int = 15
    preference: Optional[float] = None  # None = median similarity
    num_best_beams: int = 6  # Best beams estimated per link
    selection_gate_db2: float = 100.0  # Nearest-exemplar distance gate for AP selection
    symmetric_elimination: bool = True
    mcs_margin_db: float = 3.0  # SINR headroom kept when a coordinated link picks its MCS

    def validate(self) -> None:
        if not 0.5 <= self.damping < 1.0:
            raise ConfigurationError("must satisfy 0.5 <= damping < 1", key="damping")
        if self.max_iter < 1:
            raise ConfigurationError("must be >= 1", key="max_iter")
        if self.convergence_window < 1:
            raise ConfigurationError("must be >= 1", key="convergence_window")
        if self.num_best_beams < 1:
            raise ConfigurationError("must be >= 1", key="num_best_beams")
        if self.selection_gate_db2 < 0:
            raise ConfigurationError("must be >= 0", key="selection_gate_db2")
        if self.mcs_margin_db < 0:
            raise ConfigurationError("must be >= 0", key="mcs_margin_db")


@dataclass(frozen=True)
class ClusteringResult:
    exemplars: np.ndarray  # Point indices, ascending
    labels: np.ndarray  # Exemplar point index assigned to every point
    converged: bool
    iterations: int


@dataclass(frozen=True)
class ExemplarSet:
    """Exemplar fingerprints of one (AP, best sector) group"""
    ap_id: int
    sector_id: int
    exemplars: np.ndarray  # C x N rows of psi
    exemplar_lps: Tuple[int, ...]
    member_lps: Tuple[Tuple[int, ...], ...]  # LPs of each cluster, aligned with exemplars
    converged: bool = True

    @property
    def count(self) -> int:
        return len(self.exemplar_lps)

    def min_distance(self, fingerprint: np.ndarray) -> float:
        """Smallest squared Euclidean distance from a fingerprint to an exemplar"""
        diff = self.exemplars - np.asarray(fingerprint, dtype=float)
        return float(np.min(np.sum(diff * diff, axis=1)))


def _result(exemplars: np.ndarray, S: np.ndarray, converged: bool, iterations: int) -> ClusteringResult:
    exemplars = np.sort(np.asarray(exemplars, dtype=int))
    assignment = np.argmax(S[:, exemplars], axis=1)
    assignment[exemplars] = np.arange(exemplars.size)
    return ClusteringResult(exemplars, exemplars[assignment], converged, iterations)


def affinity_propagation(
    similarity: np.ndarray,
    damping: float = 0.5,
    max_iter: int = 200,
    convergence_window: int = 15,
    preference: Optional[float] = None,
) -> ClusteringResult:
    """
    Cluster by responsibility/availability message passing.

    Exemplars are the points k with r(k,k) + a(k,k) > 0 once that set has
    been stable for ``convergence_window`` iterations; every other point is
    assigned to its most similar exemplar (lowest index on ties). A fixed,
    tiny perturbation breaks degenerate ties, so results are deterministic.

    Args:
        similarity: Square S x S similarity table (diagonal ignored)
        damping: Message damping in [0.5, 1)
        max_iter: Iteration cap
        convergence_window: Stable iterations required to stop
        preference: Self-similarity; None uses the median off-diagonal similarity

    Returns:
        ClusteringResult (``converged`` is False when the cap was hit)
    """
    S0 = np.array(similarity, dtype=float)
    if S0.ndim != 2 or S0.shape[0] != S0.shape[1]:
        raise ConfigurationError(f"similarity table must be square, got shape {S0.shape}", key="similarity")
    if not np.all(np.isfinite(S0)):
        raise ConfigurationError("similarity table must be finite", key="similarity")
    if not 0.5 <= damping < 1.0:
        raise ConfigurationError("must satisfy 0.5 <= damping < 1", key="damping")

    n = S0.shape[0]
    if n == 0:
        raise ConfigurationError("similarity table is empty", key="similarity")
    if n == 1:
        return ClusteringResult(np.array([0]), np.array([0]), True, 0)

    off_diagonal = S0[~np.eye(n, dtype=bool)]
    pref = float(np.median(off_diagonal)) if preference is None else float(preference)

    # Equal similarities and preference: one cluster, no message passing needed
    if np.all(off_diagonal == off_diagonal[0]) and pref <= off_diagonal[0]:
        return ClusteringResult(np.array([0]), np.zeros(n, dtype=int), True, 0)

    S = S0.copy()
    np.fill_diagonal(S, pref)
    S0 = S.copy()

    rng = np.random.default_rng(0)
    S += (np.finfo(float).eps * S + np.finfo(float).tiny * 100) * rng.standard_normal((n, n))

    A = np.zeros((n, n))
    R = np.zeros((n, n))
    history = np.zeros((n, convergence_window), dtype=bool)
    ind = np.arange(n)
    E = np.zeros(n, dtype=bool)
    converged = False
    it = 0

    for it in range(max_iter):
        # Responsibilities
        tmp = A + S
        I = np.argmax(tmp, axis=1)
        Y = tmp[ind, I]
        tmp[ind, I] = -np.inf
        Y2 = np.max(tmp, axis=1)
        tmp = S - Y[:, None]
        tmp[ind, I] = S[ind, I] - Y2
        R = damping * R + (1 - damping) * tmp

        # Availabilities
        tmp = np.maximum(R, 0)
        tmp.flat[::n + 1] = R.flat[::n + 1]
        tmp -= np.sum(tmp, axis=0)
        dA = np.diag(tmp).copy()
        tmp = np.clip(tmp, 0, np.inf)
        tmp.flat[::n + 1] = dA
        A = damping * A - (1 - damping) * tmp

        E = (np.diag(A) + np.diag(R)) > 0
        history[:, it % convergence_window] = E
        if it >= convergence_window - 1:
            stable = np.all(history.all(axis=1) | ~history.any(axis=1))
            if stable and E.any():
                converged = True
                break

    exemplars = np.flatnonzero(E)
    if exemplars.size == 0:
        exemplars = np.array([int(np.argmax(np.diag(A) + np.diag(R)))])
    if not converged:
        logger.warning(f"Affinity propagation did not converge in {max_iter} iterations ({n} points)")
    return _result(exemplars, S0, converged, it + 1)


def negative_squared_distances(rows: np.ndarray) -> np.ndarray:
    diff = rows[:, None, :] - rows[None, :, :]
    return -np.sum(diff * diff, axis=2)


def build_exemplars(db: FingerprintDatabases, ap_id: int, config: Optional[LearningConfig] = None) -> List[ExemplarSet]:
    """
    Cluster every best-sector group of an AP and keep the exemplar fingerprints.

    Args:
        db: Fingerprint databases
        ap_id: AP to process
        config: Clustering parameters

    Returns:
        One ExemplarSet per non-empty best-sector group, by ascending sector ID
    """
    config = config or LearningConfig()
    sets = []
    for sector_id, lps in group_by_best_sector(db, ap_id).items():
        rows = db.psi[lps]
        result = affinity_propagation(
            negative_squared_distances(rows),
            damping=config.damping,
            max_iter=config.max_iter,
            convergence_window=config.convergence_window,
            preference=config.preference,
        )
        exemplar_lps = tuple(lps[int(k)] for k in result.exemplars)
        members = tuple(
            tuple(lps[i] for i in range(len(lps)) if result.labels[i] == k) for k in result.exemplars
        )
        sets.append(
            ExemplarSet(
                ap_id=ap_id,
                sector_id=sector_id,
                exemplars=db.psi[list(exemplar_lps)].copy(),
                exemplar_lps=exemplar_lps,
                member_lps=members,
                converged=result.converged,
            )
        )
    logger.debug(f"AP {ap_id}: {len(sets)} sector groups, {sum(s.count for s in sets)} exemplars")
    return sets


def build_all_exemplars(
    db: FingerprintDatabases, config: Optional[LearningConfig] = None
) -> Dict[int, List[ExemplarSet]]:
    """Exemplar sets of every AP"""
    return {ap_id: build_exemplars(db, ap_id, config) for ap_id in range(db.num_aps)}


def summarize(db: FingerprintDatabases, exemplars: Dict[int, List[ExemplarSet]]) -> List[dict]:
    """Per-AP coverage, group and exemplar counts"""
    rows = []
    for ap_id in range(db.num_aps):
        sets = exemplars.get(ap_id, [])
        rows.append({
            'ap_id': ap_id,
            'covered_lps': int(db.covered(ap_id).size),
            'null_lps': int(db.num_lps - db.covered(ap_id).size),
            'groups': len(sets),
            'exemplars': sum(s.count for s in sets),
            'group_sizes': {s.sector_id: sum(len(m) for m in s.member_lps) for s in sets},
            'exemplar_counts': {s.sector_id: s.count for s in sets},
        })
    return rows
