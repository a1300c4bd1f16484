"""Per-run simulation state: MAC timing, media, queues, blockage, trace and metrics"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from src.coordination.beams import OnlineFingerprint
from src.environment.geometry import Environment
from src.learning.clustering import LearningConfig
from src.macsim.engine import EventKind, EventLoop
from src.macsim.frames import Band, FrameKind, Outcome
from src.macsim.medium import Medium5, Medium60, Transmission, WiredLink, frame_threshold_db
from src.macsim.metrics import MetricsRecord
from src.macsim.traffic import TrafficConfig, UeQueue, poisson_traffic
from src.radio.blockage import BlockageConfig, BlockageProcess
from src.radio.mcs import McsConfig
from src.radio.propagation import LinkTable, RadioConfig, wifi_rss_dbm
from src.utils.errors import ConfigurationError
from src.utils.helpers import named_rng
from src.utils.logger import get_logger

logger = get_logger()

ACK_MODES = ("tdm", "simultaneous")

TRACE_COLUMNS = ["time_s", "kind", "band", "src", "dst", "sector", "duration_s", "outcome"]


@dataclass(frozen=True)
class MacConfig:
    """MAC section: timing constants, contention and session parameters"""
    sifs_s: float = 3e-6
    sbifs_s: float = 1e-6  # Gap between consecutive sweep frames
    slot_mmw_s: float = 5e-6
    slot_wifi_s: float = 9e-6
    sifs_wifi_s: float = 16e-6
    cw_min: int = 16
    cw_max: int = 1024
    ctrl_mmw_s: float = 15e-6  # ~26 octets at MCS 0 plus preamble
    ctrl_wifi_s: float = 40e-6  # Control frames at the 6 Mbps basic rate
    data_preamble_s: float = 2e-6
    brp_slot_s: float = 10e-6
    max_retx: int = 10
    beacon_interval_s: float = 1.0
    txop_limit_s: float = 2e-3
    wired_latency_s: float = 5e-6
    baseline_sls_per_txop: bool = True
    rss_floor_dbm: float = -70.0  # Centralized association floor
    min_sinr_db: float = 5.0  # Centralized pairwise compatibility
    frames_per_round: int = 64
    ack_mode: str = "simultaneous"

    @property
    def difs_mmw_s(self) -> float:
        return self.sifs_s + 2 * self.slot_mmw_s

    @property
    def difs_wifi_s(self) -> float:
        return self.sifs_wifi_s + 2 * self.slot_wifi_s

    def validate(self) -> None:
        if self.max_retx < 0:
            raise ConfigurationError("must be >= 0", key="max_retx")
        for key in (
            "sifs_s", "sbifs_s", "slot_mmw_s", "slot_wifi_s", "sifs_wifi_s", "ctrl_mmw_s",
            "ctrl_wifi_s", "brp_slot_s", "beacon_interval_s", "txop_limit_s",
        ):
            if getattr(self, key) <= 0:
                raise ConfigurationError("must be positive", key=key)
        for key in ("data_preamble_s", "wired_latency_s"):
            if getattr(self, key) < 0:
                raise ConfigurationError("must be >= 0", key=key)
        if self.cw_min < 1:
            raise ConfigurationError("must be >= 1", key="cw_min")
        if self.cw_max < self.cw_min:
            raise ConfigurationError("must be >= cw_min", key="cw_max")
        if self.frames_per_round < 1:
            raise ConfigurationError("must be >= 1", key="frames_per_round")
        if self.ack_mode not in ACK_MODES:
            raise ConfigurationError(f"must be one of {ACK_MODES}", key="ack_mode")


@dataclass(frozen=True)
class SimSettings:
    """Every section a protocol run needs"""
    radio: RadioConfig = field(default_factory=RadioConfig)
    mcs: McsConfig = field(default_factory=McsConfig)
    blockage: BlockageConfig = field(default_factory=BlockageConfig)
    learning: LearningConfig = field(default_factory=LearningConfig)
    mac: MacConfig = field(default_factory=MacConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)

    def validate(self) -> None:
        self.radio.validate()
        self.mcs.validate()
        self.blockage.validate()
        self.learning.validate()
        self.mac.validate()
        self.traffic.validate()


@dataclass(frozen=True)
class FrameRecord:
    """A finished frame as kept in memory for inspection"""
    start: float
    end: float
    kind: FrameKind
    band: Band
    src: int
    dst: Optional[int]
    sector: Optional[int]
    outcome: Outcome
    min_sinr_db: float


class TraceWriter:
    """
    Per-frame CSV trace.

    One row per finished frame, stamped with its start time. Rows are
    buffered and flushed through pandas in chunks.
    """

    def __init__(self, path: Union[str, Path], chunk_rows: int = 50000):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.chunk_rows = chunk_rows
        self._rows: List[List[str]] = []
        self._header_written = False
        self.rows_written = 0

    def record(self, tx: Transmission, outcome: Outcome) -> None:
        frame = tx.frame
        self._rows.append([
            f"{tx.start:.9f}",
            frame.kind.value,
            frame.band.value,
            str(frame.src),
            "broadcast" if frame.dst is None else str(frame.dst),
            "" if frame.sector_id is None else str(frame.sector_id),
            f"{frame.duration:.9f}",
            outcome.value,
        ])
        if len(self._rows) >= self.chunk_rows:
            self.flush()

    def flush(self) -> None:
        if not self._rows and self._header_written:
            return
        pd.DataFrame(self._rows, columns=TRACE_COLUMNS).to_csv(
            self.path, mode='a' if self._header_written else 'w', header=not self._header_written, index=False
        )
        self._header_written = True
        self.rows_written += len(self._rows)
        self._rows = []

    def close(self) -> None:
        self.flush()
        logger.debug(f"Trace {self.path}: {self.rows_written} frames")


class Scenario:
    """
    Everything one protocol run mutates.

    Owns the event loop, the three media, the per-UE queues, the blockage
    process and the metrics record. Every random stream is derived from the
    master seed by purpose name.
    """

    def __init__(
        self,
        env: Environment,
        settings: SimSettings,
        seed: int,
        horizon_s: float,
        protocol: str = "",
        trace_path: Optional[Union[str, Path]] = None,
        keep_frames: bool = False,
    ):
        settings.validate()
        self.env = env
        self.settings = settings
        self.seed = seed
        self.horizon_s = horizon_s
        self.mac = settings.mac

        self.loop = EventLoop()
        self.link = LinkTable(env, settings.radio)
        self.mcs_table = settings.mcs.build_table()
        self.noise_dbm = self.link.noise_dbm
        self.shadowing = settings.radio.shadowing()
        self._measurement_rng = self.rng("measurement")

        self.record = MetricsRecord(protocol=protocol, horizon_s=horizon_s, training_time_s=[0.0] * env.num_aps)
        self.trace = TraceWriter(trace_path) if trace_path is not None else None
        self.frame_log: Optional[List[FrameRecord]] = [] if keep_frames else None

        self.blockage = BlockageProcess(settings.blockage, env.num_aps, env.num_ues, seed)
        self.mmw = Medium60(
            self.loop, self.link, self.mcs_table, self.blockage,
            settings.radio.cca_threshold_dbm, recorder=self._record_frame,
        )
        self.wifi = Medium5(self.loop, recorder=self._record_frame)
        self.wired = WiredLink(self.loop, self.mac.wired_latency_s, recorder=self._record_frame)

        traffic = settings.traffic
        self.queues = [
            UeQueue(u, poisson_traffic(traffic.offered_load_bps, traffic.packet_bits, seed, u),
                    traffic.packet_bits, self.mac.max_retx, traffic.queue_limit)
            for u in range(env.num_ues)
        ]

    @property
    def num_aps(self) -> int:
        return self.env.num_aps

    @property
    def num_ues(self) -> int:
        return self.env.num_ues

    def rng(self, *names) -> np.random.Generator:
        return named_rng(self.seed, *names)

    def ue_node(self, ue: int) -> int:
        return self.link.ue_node(ue)

    def measure_fingerprint(self, ue: int) -> OnlineFingerprint:
        """Wi-Fi RSS of every AP at a UE, with shadowing and measurement noise"""
        position = self.env.ues[ue]
        rss = np.array([
            wifi_rss_dbm(ap, position, self.shadowing, self.settings.radio.carrier_wifi_hz)
            for ap in self.env.aps
        ])
        rss = rss + self.shadowing.measurement_noise_db(self._measurement_rng, rss.size)
        return OnlineFingerprint(rss=rss, ue_id=ue, timestamp=self.loop.now)

    def _record_frame(self, tx: Transmission, outcome: Outcome) -> None:
        frame = tx.frame
        # Frames too weak to be heard without interference are not collisions
        if outcome == Outcome.COLLISION and tx.snr_db >= frame_threshold_db(frame, self.mcs_table):
            self.record.collision_count += 1
        if frame.kind == FrameKind.DATA:
            self.record.data_frames_sent += 1
            if outcome != Outcome.SUCCESS:
                self.record.data_frames_lost += 1
                if outcome == Outcome.BLOCKED:
                    self.record.data_losses_blockage += 1
                elif tx.min_sinr_ap_db < frame_threshold_db(frame, self.mcs_table):
                    self.record.data_losses_interference += 1
                else:
                    self.record.data_losses_ue_interference += 1
        if self.trace is not None:
            self.trace.record(tx, outcome)
        if self.frame_log is not None:
            self.frame_log.append(FrameRecord(
                start=tx.start, end=tx.end, kind=frame.kind, band=frame.band, src=frame.src,
                dst=frame.dst, sector=frame.sector_id, outcome=outcome, min_sinr_db=tx.min_sinr_db,
            ))

    def schedule_blockage(self) -> None:
        for t, ap, ue in self.blockage.first_toggles():
            if t <= self.horizon_s:
                self.loop.schedule_at(t, EventKind.BLOCKAGE_TOGGLE, self._toggle, (ap, ue))

    def _toggle(self, link) -> None:
        ap, ue = link
        blocked, next_time = self.blockage.toggle(ap, ue, self.loop.now)
        self.mmw.on_blockage_toggle(ap, ue, blocked)
        if next_time <= self.horizon_s:
            self.loop.schedule_at(next_time, EventKind.BLOCKAGE_TOGGLE, self._toggle, (ap, ue))

    def finalize(self) -> MetricsRecord:
        """Collect queue totals at the horizon and check packet conservation"""
        record = self.record
        record.generated = sum(q.generated(self.horizon_s) for q in self.queues)
        record.delivered = sum(q.delivered for q in self.queues)
        record.dropped = sum(q.dropped for q in self.queues)
        record.queue_overflows = sum(q.overflow for q in self.queues)
        record.in_flight = sum(q.backlog(self.horizon_s) for q in self.queues)
        record.delivered_bits = sum(q.delivered_bits for q in self.queues)
        record.sum_delay_s = sum(q.sum_delay_s for q in self.queues)
        if self.trace is not None:
            self.trace.close()
        record.check_conservation()
        return record
