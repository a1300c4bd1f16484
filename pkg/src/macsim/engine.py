"""Discrete-event engine: a (time, seq)-ordered event heap with a monotone clock"""

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, List, Optional

from src.utils.errors import ConsistencyError
from src.utils.logger import get_logger

logger = get_logger()


class EventKind(str, Enum):
    FRAME_START = "frame-start"
    FRAME_END = "frame-end"
    BACKOFF_EXPIRY = "backoff-expiry"
    PACKET_ARRIVAL = "packet-arrival"
    BLOCKAGE_TOGGLE = "blockage-toggle"
    TIMER = "timer"


@dataclass(order=True)
class SimEvent:
    time: float
    seq: int
    kind: EventKind = field(compare=False)
    handler: Optional[Callable[..., None]] = field(compare=False, default=None, repr=False)
    payload: Any = field(compare=False, default=None)
    cancelled: bool = field(compare=False, default=False)


class EventLoop:
    """
    Single-threaded event scheduler.

    Events fire in strict (time, seq) order; seq grows with every schedule
    call, so equal-time events keep insertion order. Cancelled events stay
    in the heap and are skipped when popped.
    """

    def __init__(self):
        self.now = 0.0
        self._queue: List[SimEvent] = []
        self._seq = 0
        self.processed = 0

    def __len__(self) -> int:
        return sum(1 for e in self._queue if not e.cancelled)

    def schedule_at(
        self,
        time: float,
        kind: EventKind,
        handler: Optional[Callable[..., None]] = None,
        payload: Any = None,
    ) -> SimEvent:
        """
        Schedule an event at an absolute time.

        Raises:
            ConsistencyError: time is not finite or lies before the clock
        """
        if not math.isfinite(time):
            raise ConsistencyError(f"{kind.value} event scheduled at non-finite time {time}")
        if time < self.now:
            raise ConsistencyError(f"{kind.value} event scheduled at {time:.9f}s before clock {self.now:.9f}s")
        event = SimEvent(time=time, seq=self._seq, kind=kind, handler=handler, payload=payload)
        self._seq += 1
        heapq.heappush(self._queue, event)
        return event

    def schedule(self, delay: float, kind: EventKind, handler=None, payload=None) -> SimEvent:
        return self.schedule_at(self.now + delay, kind, handler, payload)

    @staticmethod
    def cancel(event: Optional[SimEvent]) -> None:
        if event is not None:
            event.cancelled = True

    def run(self, horizon: float, observer: Optional[Callable[[SimEvent], None]] = None) -> int:
        """
        Process events up to and including ``horizon``.

        Args:
            horizon: Simulated end time (seconds)
            observer: Optional callback invoked with each event before its handler

        Returns:
            Number of events processed in this call
        """
        if not horizon > 0:
            raise ConsistencyError(f"horizon must be positive, got {horizon}")
        count = 0
        while self._queue and self._queue[0].time <= horizon:
            event = heapq.heappop(self._queue)
            if event.cancelled:
                continue
            if event.time < self.now:
                raise ConsistencyError(f"clock would move back from {self.now} to {event.time}")
            self.now = event.time
            if observer is not None:
                observer(event)
            if event.handler is not None:
                if event.payload is None:
                    event.handler()
                else:
                    event.handler(event.payload)
            count += 1
        self.now = max(self.now, horizon)
        self.processed += count
        logger.debug(f"Event loop reached {horizon}s after {count} events")
        return count
