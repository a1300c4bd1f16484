"""Run metrics: counters, throughput/delay summary and the analytic N-link throughput"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

from src.utils.errors import ConsistencyError, DomainError


@dataclass
class MetricsRecord:
    """Counters accumulated over one protocol run"""
    protocol: str
    horizon_s: float = 0.0
    delivered_bits: int = 0
    generated: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0
    sum_delay_s: float = 0.0
    collision_count: int = 0  # 60 GHz and 5 GHz frames lost to overlap
    bhi_overhead_fraction: float = 0.0
    data_frames_sent: int = 0
    data_frames_lost: int = 0
    data_losses_interference: int = 0  # Beam interference from other APs
    data_losses_ue_interference: int = 0  # Interference from UE control frames
    data_losses_blockage: int = 0
    queue_overflows: int = 0  # Arrivals refused by a full queue, part of dropped
    training_time_s: List[float] = field(default_factory=list)  # Per AP
    protocol_errors: int = 0
    brp_fallbacks: int = 0
    nav_violations: int = 0
    training_refusals: int = 0  # No sector could be cleared for BRP
    bid_conflicts: int = 0  # Links dropped after another AP confirmed its beam
    unreachable_ues: int = 0
    events_processed: int = 0

    def check_conservation(self) -> None:
        """generated = delivered + dropped + in-flight, raised on violation"""
        accounted = self.delivered + self.dropped + self.in_flight
        if self.generated != accounted:
            raise ConsistencyError(
                f"{self.protocol}: generated {self.generated} != delivered {self.delivered} "
                f"+ dropped {self.dropped} + in-flight {self.in_flight}"
            )
        if self.sum_delay_s < 0:
            raise ConsistencyError(f"{self.protocol}: negative total delay {self.sum_delay_s}")

    def as_dict(self) -> Dict:
        return asdict(self)


def compute_metrics(record: MetricsRecord) -> Tuple[float, Optional[float]]:
    """
    Summarize a run.

    Args:
        record: Completed run

    Returns:
        (throughput in Gbps, average delay in seconds or None when nothing was delivered)
    """
    if record.horizon_s <= 0:
        raise DomainError(f"horizon must be positive, got {record.horizon_s}")
    throughput_gbps = record.delivered_bits / record.horizon_s / 1e9
    if record.delivered == 0:
        return throughput_gbps, None
    return throughput_gbps, record.sum_delay_s / record.delivered


def analytic_rn(num_links: int, alpha1: float, r1: float) -> float:
    """
    Total throughput of N simultaneous links sharing one training overhead.

    Args:
        num_links: N
        alpha1: Training overhead fraction of one link
        r1: Average single-link throughput

    Returns:
        (1 - N * alpha1) * N * r1
    """
    if num_links < 1:
        raise DomainError(f"need at least one link, got {num_links}")
    if num_links * alpha1 >= 1:
        raise DomainError(f"N * alpha1 = {num_links * alpha1:.4f} must stay below 1")
    return (1.0 - num_links * alpha1) * num_links * r1
