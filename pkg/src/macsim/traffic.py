"""Poisson downlink traffic and per-UE drop-tail queues"""

from collections import deque
from dataclasses import dataclass
from typing import Deque, Iterator, Optional

import numpy as np

from src.macsim.frames import Packet
from src.utils.errors import ConfigurationError, ConsistencyError
from src.utils.helpers import named_rng

ARRIVAL_BLOCK = 4096


@dataclass(frozen=True)
class TrafficConfig:
    """Traffic section: per-UE Poisson load, packet size and queue capacity"""
    offered_load_bps: float = 1e9
    packet_bits: int = 12000
    queue_limit: Optional[int] = 256  # Packets; None keeps every arrival

    def validate(self) -> None:
        if self.offered_load_bps <= 0:
            raise ConfigurationError("must be positive", key="offered_load_bps")
        if self.packet_bits <= 0:
            raise ConfigurationError("must be positive", key="packet_bits")
        if self.queue_limit is not None and self.queue_limit < 1:
            raise ConfigurationError("must be >= 1", key="queue_limit")

    @property
    def mean_interarrival_s(self) -> float:
        return self.packet_bits / self.offered_load_bps


class PoissonArrivals:
    """Infinite stream of arrival times with exponential gaps, drawn in blocks"""

    def __init__(self, rate_bps: float, packet_bits: int, rng: np.random.Generator, block: int = ARRIVAL_BLOCK):
        if rate_bps <= 0:
            raise ConfigurationError("offered load must be positive", key="offered_load_bps")
        self.mean_s = packet_bits / rate_bps
        self.rng = rng
        self.block = block
        self._last = 0.0

    def next_block(self) -> np.ndarray:
        gaps = self.rng.standard_exponential(self.block) * self.mean_s
        times = self._last + np.cumsum(gaps)
        self._last = float(times[-1])
        return times

    def __iter__(self) -> Iterator[float]:
        while True:
            for t in self.next_block():
                yield float(t)


def poisson_traffic(rate_bps: float, packet_bits: int, seed: int, ue_id: int = 0) -> PoissonArrivals:
    """
    Seeded Poisson arrival stream for one UE.

    Args:
        rate_bps: Offered load
        packet_bits: Packet size
        seed: Master seed
        ue_id: UE index (selects an independent sub-stream)

    Returns:
        PoissonArrivals with mean gap packet_bits / rate_bps
    """
    return PoissonArrivals(rate_bps, packet_bits, named_rng(seed, "arrivals", ue_id))


class UeQueue:
    """
    Drop-tail FIFO downlink queue of one UE with lazily admitted arrivals.

    Arrivals are admitted in time order up to the latest queried time; an
    arrival that finds ``capacity`` packets waiting is dropped. Packets
    otherwise leave only from the head (delivered or dropped after too many
    retries). Queries must come with non-decreasing times.
    """

    def __init__(
        self,
        ue_id: int,
        arrivals: PoissonArrivals,
        packet_bits: int,
        max_retx: int,
        capacity: Optional[int] = None,
    ):
        if capacity is not None and capacity < 1:
            raise ConfigurationError("must be >= 1", key="queue_limit")
        self.ue_id = ue_id
        self.arrivals = arrivals
        self.packet_bits = packet_bits
        self.max_retx = max_retx
        self.capacity = capacity
        self._pending = np.empty(0)
        self._next = 0
        self._waiting: Deque[float] = deque()
        self._clock = 0.0
        self._arrived = 0
        self._left = 0  # Admitted packets that left the queue
        self._hol_retx = 0
        self.delivered = 0
        self.dropped = 0
        self.overflow = 0
        self.delivered_bits = 0
        self.sum_delay_s = 0.0

    def _peek(self) -> float:
        if self._next >= self._pending.size:
            self._pending = self.arrivals.next_block()
            self._next = 0
        return float(self._pending[self._next])

    def _advance(self, t: float) -> None:
        if t < self._clock:
            raise ConsistencyError(f"UE {self.ue_id}: queue queried at {t} after {self._clock}")
        self._clock = t
        while self._peek() <= t:
            stop = int(np.searchsorted(self._pending, t, side='right'))
            batch = self._pending[self._next:stop]
            self._next = stop
            # No departure happens between two queries, so the first arrivals take the room
            take = batch.size
            if self.capacity is not None:
                take = max(0, min(take, self.capacity - len(self._waiting)))
            self._waiting.extend(batch[:take].tolist())
            self._arrived += batch.size
            self.overflow += batch.size - take
            self.dropped += batch.size - take

    def generated(self, t: float) -> int:
        """Packets arrived in [0, t], overflow included"""
        self._advance(t)
        return self._arrived

    def backlog(self, t: float) -> int:
        """Queued packets not yet delivered or dropped, HOL included"""
        self._advance(t)
        return len(self._waiting)

    def has_backlog(self, t: float) -> bool:
        self._advance(t)
        return bool(self._waiting)

    def next_arrival(self, t: float) -> float:
        """Arrival time of the head packet, or of the next arrival when the queue is empty at t"""
        self._advance(t)
        if self._waiting:
            return self._waiting[0]
        return self._peek()

    def hol(self, t: float) -> Optional[Packet]:
        if not self.has_backlog(t):
            return None
        return Packet(
            id=self._left,
            ue_id=self.ue_id,
            size_bits=self.packet_bits,
            arrival_time=self._waiting[0],
            retx_count=self._hol_retx,
        )

    def _pop(self) -> float:
        self._left += 1
        self._hol_retx = 0
        return self._waiting.popleft()

    def deliver_hol(self, now: float) -> float:
        """Complete the head packet; returns its delay"""
        if not self.has_backlog(now):
            raise ConsistencyError(f"UE {self.ue_id}: delivery with an empty queue at {now}")
        delay = now - self._pop()
        self.delivered += 1
        self.delivered_bits += self.packet_bits
        self.sum_delay_s += delay
        return delay

    def fail_hol(self, now: float) -> bool:
        """
        Register a failed attempt of the head packet.

        Returns:
            True when the packet exceeded max_retx and was dropped
        """
        if not self.has_backlog(now):
            raise ConsistencyError(f"UE {self.ue_id}: failure with an empty queue at {now}")
        if self._hol_retx >= self.max_retx:
            self._pop()
            self.dropped += 1
            return True
        self._hol_retx += 1
        return False
