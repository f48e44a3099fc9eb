"""Lock records, the id registry, and per-thread record pools.

A lock record is the unit threads push onto bucket chains or header
queues. Records model a fixed native footprint (128 bytes: two lines,
so link fields and the parked flag stay off each other's false-sharing
paths) and are recycled through per-thread free lists; the registry maps
record id to record so a header word can carry a record reference in its
upper bits. Ids are never reused; recycling bumps a generation counter
that readers use to detect a record changing hands mid-read.
"""

from __future__ import annotations

import itertools
import threading
import typing
from enum import IntEnum

from .parking import ParkHandle

if typing.TYPE_CHECKING:
    from .header import SyncObject

__all__ = [
    "RECORD_FOOTPRINT",
    "RecordState",
    "LockRecord",
    "record_by_id",
    "ThreadContext",
    "HeldMonitor",
]

RECORD_FOOTPRINT = 128

_ids = itertools.count(1)
_registry: dict[int, "LockRecord"] = {}
_registry_lock = threading.Lock()


class RecordState(IntEnum):
    FREE = 0
    OWNER = 1
    ENTRY_WAIT = 2
    WAITSET = 3
    GRANTED = 4


class LockRecord:
    __slots__ = (
        "rid",
        "owner_tid",
        "park",
        "gen",
        "state",
        "obj",
        "spine_next",
        "rib_head",
        "rib_next",
        "successor",
        "displaced",
        "displaced_ready",
        "holds_header",
        "waitset",
        "saved_nest",
        "enqueue_time",
        "notified",
        "direct_grant",
    )

    def __init__(self, owner_tid: int, park: ParkHandle) -> None:
        self.rid = next(_ids)
        self.owner_tid = owner_tid
        self.park = park
        self.gen = 0
        self._clear()
        with _registry_lock:
            _registry[self.rid] = self

    def _clear(self) -> None:
        self.state = RecordState.FREE
        self.obj = None
        self.spine_next = None
        self.rib_head = None
        self.rib_next = None
        self.successor = None
        self.displaced = 0
        self.displaced_ready = False
        self.holds_header = False
        self.waitset = None
        self.saved_nest = 0
        self.enqueue_time = 0.0
        self.notified = False
        self.direct_grant = False

    def __repr__(self) -> str:
        return f"LockRecord(rid={self.rid}, state={self.state.name}, tid={self.owner_tid})"


def record_by_id(rid: int) -> LockRecord:
    with _registry_lock:
        return _registry[rid]


class HeldMonitor:
    """One entry of a thread's held list: object, record, nesting depth."""

    __slots__ = ("obj", "rec", "depth")

    def __init__(self, obj: "SyncObject", rec: LockRecord | None, depth: int) -> None:
        self.obj = obj
        self.rec = rec
        self.depth = depth


class ThreadContext:
    """Per-thread synchronization state: free list, held list, park handle.

    Records never migrate between threads; the thread that allocates one
    frees it, so free-list operations need no locking. allocated_total
    counts constructions only, which makes record-conservation checks a
    matter of comparing it with the free-list length at quiescence.
    """

    __slots__ = ("tid", "park", "free_list", "held", "allocated_total")

    def __init__(self) -> None:
        self.tid = threading.get_ident()
        self.park = ParkHandle()
        self.free_list: list[LockRecord] = []
        self.held: list[HeldMonitor] = []
        self.allocated_total = 0

    def alloc_record(self, obj: "SyncObject") -> LockRecord:
        if self.free_list:
            rec = self.free_list.pop()
            rec.gen += 1
        else:
            rec = LockRecord(self.tid, self.park)
            self.allocated_total += 1
        rec.obj = obj
        return rec

    def free_record(self, rec: LockRecord) -> None:
        rec.gen += 1
        rec._clear()
        self.free_list.append(rec)

    def find_held(self, obj: "SyncObject") -> HeldMonitor | None:
        for entry in reversed(self.held):
            if entry.obj is obj:
                return entry
        return None

    def push_held(self, obj: "SyncObject", rec: LockRecord | None, depth: int) -> HeldMonitor:
        entry = HeldMonitor(obj, rec, depth)
        self.held.append(entry)
        return entry

    def pop_held(self, entry: HeldMonitor) -> None:
        self.held.remove(entry)
