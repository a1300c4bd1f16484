"""Tests for slotted backoff with freeze and resume"""

import pytest

from src.macsim.contention import Backoff
from src.macsim.engine import EventKind, EventLoop


class FixedRng:
    """Always draws the same slot count (capped by the window)"""

    def __init__(self, slots):
        self.slots = slots
        self.windows = []

    def integers(self, low, high):
        self.windows.append(high)
        return min(self.slots, high - 1)


def _backoff(loop, medium, expiries, slots=5, cw_min=16, cw_max=64):
    return Backoff(
        loop, FixedRng(slots), slot_s=1.0, ifs_s=2.0, cw_min=cw_min, cw_max=cw_max,
        on_expiry=lambda: expiries.append(loop.now),
        is_busy=lambda: medium["busy"],
    )


def test_idle_expiry_after_ifs_and_slots():
    """On an idle medium the counter expires after IFS plus its slots"""
    loop, medium, expiries = EventLoop(), {"busy": False}, []
    backoff = _backoff(loop, medium, expiries)
    backoff.start()
    loop.run(100.0)
    assert expiries == [7.0]
    assert not backoff.armed


def test_busy_medium_freezes_countdown():
    """Counted slots are kept; the rest resume after a fresh IFS"""
    loop, medium, expiries = EventLoop(), {"busy": False}, []
    backoff = _backoff(loop, medium, expiries)
    backoff.start()

    def go_busy():
        medium["busy"] = True
        backoff.medium_busy()

    def go_idle():
        medium["busy"] = False
        backoff.medium_idle()

    loop.schedule_at(4.0, EventKind.TIMER, go_busy)
    loop.schedule_at(10.0, EventKind.TIMER, go_idle)
    loop.run(100.0)
    assert backoff.slots == 3
    assert expiries == [15.0]


def test_start_on_busy_medium_waits():
    """A counter started while busy waits for the idle indication"""
    loop, medium, expiries = EventLoop(), {"busy": True}, []
    backoff = _backoff(loop, medium, expiries)
    backoff.start()

    def go_idle():
        medium["busy"] = False
        backoff.medium_idle()

    loop.schedule_at(3.0, EventKind.TIMER, go_idle)
    loop.run(100.0)
    assert expiries == [10.0]


def test_start_is_idempotent_while_armed():
    """Starting an armed counter does not redraw"""
    loop, medium, expiries = EventLoop(), {"busy": False}, []
    backoff = _backoff(loop, medium, expiries)
    backoff.start()
    backoff.start()
    loop.run(100.0)
    assert expiries == [7.0]
    assert len(backoff.rng.windows) == 1


def test_window_doubles_and_caps():
    """Failures double the window up to cw_max; success resets it"""
    loop, expiries = EventLoop(), []
    backoff = _backoff(loop, {"busy": False}, expiries, cw_min=16, cw_max=64)
    backoff.failure()
    assert backoff.cw == 32
    backoff.failure()
    backoff.failure()
    assert backoff.cw == 64
    backoff.success()
    assert backoff.cw == 16


def test_draw_uses_current_window():
    """The slot count is drawn from [0, cw)"""
    loop, expiries = EventLoop(), []
    backoff = _backoff(loop, {"busy": False}, expiries, slots=100, cw_min=4, cw_max=8)
    backoff.failure()
    backoff.start()
    assert backoff.rng.windows == [8]
    assert backoff.slots == 7


def test_cancel_disarms():
    """A cancelled counter never expires"""
    loop, medium, expiries = EventLoop(), {"busy": False}, []
    backoff = _backoff(loop, medium, expiries)
    backoff.start()
    backoff.cancel()
    loop.run(100.0)
    assert expiries == []
    assert not backoff.armed


def test_same_slot_expiries_both_fire():
    """Two counters ending in the same slot both expire"""
    loop, medium, expiries = EventLoop(), {"busy": False}, []
    a = _backoff(loop, medium, expiries)
    b = _backoff(loop, medium, expiries)
    a.start()
    b.start()
    loop.run(100.0)
    assert expiries == [7.0, 7.0]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
