"""Scenario sweeps: protocol x AP count x seed, one CSV row per run"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import pandas as pd

from src.cli.config import RunConfig
from src.environment.layout import build_environment
from src.learning.clustering import build_all_exemplars
from src.learning.databases import build_databases
from src.macsim.metrics import compute_metrics
from src.macsim.protocols import run_protocol
from src.utils.logger import get_logger

logger = get_logger()

RESULT_COLUMNS = [
    "scenario_id", "protocol", "num_aps", "num_ues", "seed", "horizon_s",
    "throughput_gbps", "avg_delay_ms", "collisions", "dropped", "bhi_overhead", "status",
]

RESULTS_FILE = "results.csv"


@dataclass(frozen=True)
class SweepPoint:
    protocol: str
    num_aps: int
    seed: int

    @property
    def scenario_id(self) -> str:
        return f"{self.protocol}-n{self.num_aps}-s{self.seed}"


def sweep_points(config: RunConfig, ap_counts: Optional[Sequence[int]] = None,
                 seeds: Optional[Sequence[int]] = None) -> List[SweepPoint]:
    """All points in (protocol, ap_count, seed) order"""
    run = config.run
    return [
        SweepPoint(protocol, n, seed)
        for protocol in run.protocols
        for n in (ap_counts if ap_counts is not None else run.ap_counts)
        for seed in (seeds if seeds is not None else run.seeds)
    ]


def run_point(config: RunConfig, point: SweepPoint, out_dir: Optional[str] = None, trace: bool = False) -> Dict:
    """
    Simulate one sweep point.

    Faults are caught and reported in the ``status`` column so that the
    remaining points still run.

    Args:
        config: Resolved configuration
        point: Protocol, AP count and seed
        out_dir: Directory for the per-frame trace
        trace: Write a per-frame trace

    Returns:
        One result row
    """
    env_config = config.environment_for(point.num_aps)
    row = {
        "scenario_id": point.scenario_id,
        "protocol": point.protocol,
        "num_aps": point.num_aps,
        "num_ues": env_config.num_ues,
        "seed": point.seed,
        "horizon_s": config.run.horizon_s,
        "throughput_gbps": None,
        "avg_delay_ms": None,
        "collisions": None,
        "dropped": None,
        "bhi_overhead": None,
        "status": "ok",
    }
    try:
        settings = config.sim_settings()
        env = build_environment(
            env_config, point.seed, config.radio.tx_power_mmw_dbm, config.radio.tx_power_wifi_dbm
        )
        databases = None
        if point.protocol == "dualband":
            dbs = build_databases(env, settings.radio, settings.mcs.build_table())
            databases = (dbs, build_all_exemplars(dbs, settings.learning))
        trace_path = None
        if trace and out_dir is not None:
            trace_path = Path(out_dir) / "traces" / f"{point.scenario_id}.csv"

        record = run_protocol(
            point.protocol, env, settings, point.seed, config.run.horizon_s,
            trace_path=trace_path, databases=databases,
        )
        throughput_gbps, delay_s = compute_metrics(record)
        row.update(
            throughput_gbps=throughput_gbps,
            avg_delay_ms=None if delay_s is None else delay_s * 1e3,
            collisions=record.collision_count,
            dropped=record.dropped,
            bhi_overhead=record.bhi_overhead_fraction,
        )
    except Exception as e:
        logger.exception(f"{point.scenario_id} failed: {e}")
        row["status"] = f"error: {type(e).__name__}"
    return row


def _run_point_args(args) -> Dict:
    return run_point(*args)


def run_sweep(
    config: RunConfig,
    points: Optional[Sequence[SweepPoint]] = None,
    out_dir: Optional[Union[str, Path]] = None,
    trace: Optional[bool] = None,
    on_row: Optional[Callable[[Dict], None]] = None,
) -> pd.DataFrame:
    """
    Run sweep points on a bounded process pool.

    Rows come back in point order regardless of completion order.

    Args:
        config: Resolved configuration
        points: Points to run (every configured point when None)
        out_dir: Directory for traces (config run.out_dir when None)
        trace: Override run.trace
        on_row: Called with each finished row, in point order

    Returns:
        DataFrame with RESULT_COLUMNS
    """
    points = list(points) if points is not None else sweep_points(config)
    out_dir = str(out_dir if out_dir is not None else config.run.out_dir)
    trace = config.run.trace if trace is None else trace
    workers = min(config.run.workers, max(len(points), 1))

    logger.info(f"Sweep: {len(points)} runs on {workers} worker(s), horizon {config.run.horizon_s}s")
    started = time.perf_counter()
    jobs = [(config, p, out_dir, trace) for p in points]
    rows: List[Dict] = []
    if workers == 1:
        for row in map(_run_point_args, jobs):
            rows.append(row)
            if on_row is not None:
                on_row(row)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for row in pool.map(_run_point_args, jobs):
                rows.append(row)
                if on_row is not None:
                    on_row(row)
    elapsed = time.perf_counter() - started
    logger.info(f"Sweep finished in {elapsed:.1f}s")
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def write_results(results: pd.DataFrame, out_dir: Union[str, Path]) -> Path:
    """Write result rows to ``<out_dir>/results.csv``"""
    path = Path(out_dir) / RESULTS_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    results.to_csv(path, index=False, float_format="%.6f", na_rep="")
    logger.info(f"{len(results)} rows written to {path}")
    return path


def all_ok(results: pd.DataFrame) -> bool:
    return bool((results["status"] == "ok").all())
