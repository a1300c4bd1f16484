"""CSMA/CA backoff with freeze/resume and binary exponential contention window"""

import math
from typing import Callable, Optional

import numpy as np

from src.macsim.engine import EventKind, EventLoop, SimEvent

EPS_S = 1e-12


class Backoff:
    """
    Slotted backoff counter of one contending node.

    After ``start`` the node waits an inter-frame space and then counts down
    a random number of slots while the medium stays idle. A busy medium
    freezes the countdown; the remaining slots resume after the next idle
    inter-frame space. Two counters expiring in the same slot both fire, so
    their transmissions overlap.
    """

    def __init__(
        self,
        loop: EventLoop,
        rng: np.random.Generator,
        slot_s: float,
        ifs_s: float,
        cw_min: int,
        cw_max: int,
        on_expiry: Callable[[], None],
        is_busy: Callable[[], bool],
    ):
        self.loop = loop
        self.rng = rng
        self.slot_s = slot_s
        self.ifs_s = ifs_s
        self.cw_min = cw_min
        self.cw_max = cw_max
        self.cw = cw_min
        self.on_expiry = on_expiry
        self.is_busy = is_busy
        self.slots = 0
        self._armed = False
        self._event: Optional[SimEvent] = None
        self._resumed_at = 0.0

    @property
    def armed(self) -> bool:
        return self._armed

    def start(self) -> None:
        """Draw a fresh slot count and begin contending (no-op when already armed)"""
        if self._armed:
            return
        self.slots = int(self.rng.integers(0, self.cw))
        self._armed = True
        if not self.is_busy():
            self._resume()

    def _resume(self) -> None:
        self._resumed_at = self.loop.now
        self._event = self.loop.schedule(
            self.ifs_s + self.slots * self.slot_s, EventKind.BACKOFF_EXPIRY, self._expire
        )

    def medium_busy(self) -> None:
        if not self._armed or self._event is None:
            return
        now = self.loop.now
        if self._event.time - now <= EPS_S:
            return
        counted = now - self._resumed_at - self.ifs_s
        if counted > 0:
            self.slots = max(0, self.slots - int(math.floor(counted / self.slot_s + 1e-9)))
        self.loop.cancel(self._event)
        self._event = None

    def medium_idle(self) -> None:
        if self._armed and self._event is None and not self.is_busy():
            self._resume()

    def _expire(self) -> None:
        self._event = None
        self._armed = False
        self.on_expiry()

    def success(self) -> None:
        self.cw = self.cw_min

    def failure(self) -> None:
        self.cw = min(2 * self.cw, self.cw_max)

    def cancel(self) -> None:
        self.loop.cancel(self._event)
        self._event = None
        self._armed = False
