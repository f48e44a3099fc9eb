"""Spin-then-park waiting.

A thread that must wait polls its wakeup condition up to max_spins times
with a polite pause between polls, then parks on its per-thread handle.
Parking is a binary permit: unpark while parked wakes the thread, unpark
while running stores one permit that the next park consumes, and extra
unparks collapse into that single permit.

Spinning is polite in the sense that at most one thread spins on any one
location; the claim table below underpins the test for that property and
the global recorder tracks the poll high-water mark between parks. Both
are debug instrumentation off the mutation paths of the algorithms.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

__all__ = [
    "DEFAULT_MAX_SPINS",
    "SpinPolicy",
    "ParkHandle",
    "SpinRecorder",
    "recorder",
    "spin_then_park",
]

DEFAULT_MAX_SPINS = int(os.environ.get("LOCKLAB_MAX_SPINS", "2500"))


# sleep(0) only hints at a reschedule; the interpreter lock often stays
# with the spinner, starving the owner it is waiting for. After a budget
# of cheap yields, nap for real so the owner is guaranteed to run.
_YIELD_POLLS = 32
_NAP_SECONDS = 1e-6


def _pause(poll: int) -> None:
    if poll < _YIELD_POLLS:
        time.sleep(0)
    else:
        time.sleep(_NAP_SECONDS)


@dataclass(frozen=True)
class SpinPolicy:
    max_spins: int = DEFAULT_MAX_SPINS


class ParkHandle:
    """Per-thread parking spot with a one-permit mailbox."""

    __slots__ = ("_cv", "_permit", "parks", "unparks")

    def __init__(self) -> None:
        self._cv = threading.Condition(threading.Lock())
        self._permit = False
        self.parks = 0
        self.unparks = 0

    def park(self) -> None:
        with self._cv:
            self.parks += 1
            while not self._permit:
                self._cv.wait()
            self._permit = False

    def park_timed(self, timeout: float) -> bool:
        """Park for at most timeout seconds. True iff a permit was consumed."""
        deadline = time.monotonic() + timeout
        with self._cv:
            self.parks += 1
            while not self._permit:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return False
                self._cv.wait(remaining)
            self._permit = False
            return True

    def unpark(self) -> None:
        with self._cv:
            self.unparks += 1
            self._permit = True
            self._cv.notify()


class SpinRecorder:
    """Aggregates spin behavior across the process for assertions."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._claims: dict[object, int] = {}
        self.max_polls = 0
        self.shared_spin_violations = 0
        self.episodes = 0

    def reset(self) -> None:
        with self._lock:
            self._claims.clear()
            self.max_polls = 0
            self.shared_spin_violations = 0
            self.episodes = 0

    def claim(self, key: object, tid: int) -> None:
        with self._lock:
            holder = self._claims.get(key)
            if holder is not None and holder != tid:
                self.shared_spin_violations += 1
            self._claims[key] = tid

    def release(self, key: object, tid: int) -> None:
        with self._lock:
            if self._claims.get(key) == tid:
                del self._claims[key]

    def note_polls(self, polls: int) -> None:
        with self._lock:
            self.episodes += 1
            if polls > self.max_polls:
                self.max_polls = polls


recorder = SpinRecorder()


@dataclass(frozen=True)
class SpinOutcome:
    polls: int
    parks: int


def spin_then_park(
    condition: Callable[[], bool],
    handle: ParkHandle,
    policy: Optional[SpinPolicy] = None,
    spin_key: Optional[object] = None,
) -> SpinOutcome:
    """Wait until condition() is true; spin up to the bound, then park.

    condition must become true before the waiter is unparked for the
    final time (set-then-unpark on the waker side), so a consumed permit
    with a false condition means a stale permit and the thread parks
    again. Poll counts between consecutive parks never exceed the bound.
    """
    if condition():
        return SpinOutcome(0, 0)
    max_spins = (policy or SpinPolicy()).max_spins
    tid = threading.get_ident()
    key = spin_key if spin_key is not None else id(handle)
    recorder.claim(key, tid)
    polls = 0
    try:
        while polls < max_spins:
            _pause(polls)
            polls += 1
            if condition():
                return SpinOutcome(polls, 0)
    finally:
        recorder.release(key, tid)
        recorder.note_polls(polls)
    parks = 0
    while True:
        handle.park()
        parks += 1
        if condition():
            return SpinOutcome(polls, parks)
