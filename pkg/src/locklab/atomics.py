"""Word-sized atomic cells emulated with a guard lock.

CPython has no public CAS on plain attributes, so every mutation of an
AtomicU64 runs under a private lock, which linearizes load/store/cas/swap
exactly like a hardware 64-bit atomic. Loads skip the lock: attribute
reads are indivisible under the interpreter and all writers serialize.
"""

from __future__ import annotations

import threading

__all__ = ["MASK64", "AtomicU64"]

MASK64 = (1 << 64) - 1


class AtomicU64:
    __slots__ = ("_lock", "_value")

    def __init__(self, value: int = 0) -> None:
        self._lock = threading.Lock()
        self._value = value & MASK64

    def load(self) -> int:
        return self._value

    def store(self, value: int) -> None:
        with self._lock:
            self._value = value & MASK64

    def cas(self, expected: int, new: int) -> bool:
        """Compare-and-swap. True iff the cell held expected and now holds new."""
        with self._lock:
            if self._value != expected:
                return False
            self._value = new & MASK64
            return True

    def swap(self, new: int) -> int:
        """Unconditional exchange. Returns the prior value."""
        with self._lock:
            prior = self._value
            self._value = new & MASK64
            return prior

    def add(self, delta: int) -> int:
        """Fetch-and-add. Returns the new value."""
        with self._lock:
            self._value = (self._value + delta) & MASK64
            return self._value
