"""Header-free monitor over the shared bucket table.

The object header is never touched: all monitor state for an object is
the set of its lock records on the object's bucket chain. Entering means
taking the bucket lock, emplacing a record, and scanning the object's
records for a conflict; exiting means removing the record, granting the
oldest entry waiter, and unparking it. Every contended or uncontended
enter/exit pays the bucket lock, twice per pair, which is this design's
cost anchor.

The fast-path variant shaves the uncontended pair to two CASes on the
bucket word using the singleton encoding: install the owner record on
enter, remove it on exit, zero inner-lock acquisitions. Any concurrent
traffic on the bucket devolves the singleton onto the chain and both
sides fall back to the slow path.

Grant policy is FIFO over ENTRY_WAIT records in chain (arrival) order.
A thread in wait() flips its record to WAITSET in place; notify moves
records back to ENTRY_WAIT at the tail of the object's rib list, and a
timed-out waiter performs that move itself, acquiring directly when no
active record remains.
"""

from __future__ import annotations

import time
import typing

from .chains import BucketTable, TasBucket
from .parking import SpinPolicy, spin_then_park
from .records import LockRecord, RecordState, ThreadContext

if typing.TYPE_CHECKING:
    from .header import SyncObject

__all__ = ["HashChainsMonitor"]

_ACTIVE = (RecordState.OWNER, RecordState.ENTRY_WAIT, RecordState.GRANTED)


class HashChainsMonitor:
    def __init__(self, table: BucketTable, fastpath: bool = False, policy: SpinPolicy | None = None) -> None:
        if fastpath and table.inner != "tas":
            raise ValueError("the singleton fast path needs the tas bucket word")
        self.table = table
        self.fastpath = fastpath
        self.policy = policy or table.policy

    def enter(self, ctx: ThreadContext, obj: "SyncObject") -> None:
        held = ctx.find_held(obj)
        if held is not None:
            held.depth += 1
            return
        rec = ctx.alloc_record(obj)
        bucket = self.table.bucket_for(obj)
        if self.fastpath:
            rec.state = RecordState.OWNER
            if typing.cast(TasBucket, bucket).try_singleton_install(rec):
                ctx.push_held(obj, rec, 1)
                return
        bucket.lock()
        conflict = any(r.state in _ACTIVE for r in bucket.records_of(obj))
        if not conflict:
            rec.state = RecordState.OWNER
            bucket.add_record(rec)
            bucket.unlock()
            ctx.push_held(obj, rec, 1)
            return
        rec.state = RecordState.ENTRY_WAIT
        bucket.add_record(rec)
        bucket.unlock()
        spin_then_park(lambda: rec.state == RecordState.GRANTED, ctx.park, self.policy, spin_key=rec)
        rec.state = RecordState.OWNER
        ctx.push_held(obj, rec, 1)

    def exit(self, ctx: ThreadContext, obj: "SyncObject") -> None:
        held = ctx.find_held(obj)
        assert held is not None and held.rec is not None
        if held.depth > 1:
            held.depth -= 1
            return
        rec = held.rec
        bucket = self.table.bucket_for(obj)
        if self.fastpath and typing.cast(TasBucket, bucket).try_singleton_remove(rec):
            ctx.pop_held(held)
            ctx.free_record(rec)
            return
        bucket.lock()
        bucket.remove_record(rec)
        successor = self._oldest_entry_waiter(bucket, obj)
        if successor is not None:
            successor.state = RecordState.GRANTED
        bucket.unlock()
        if successor is not None:
            successor.park.unpark()
        ctx.pop_held(held)
        ctx.free_record(rec)

    @staticmethod
    def _oldest_entry_waiter(bucket, obj) -> LockRecord | None:
        for r in bucket.records_of(obj):
            if r.state == RecordState.ENTRY_WAIT:
                return r
        return None

    def wait(self, ctx: ThreadContext, obj: "SyncObject", timeout: float | None = None) -> bool:
        """Release, sleep until notified or timed out, reacquire.

        Returns True iff the wait timed out before a notification moved
        the record back to the entry queue. Nesting depth is restored on
        return regardless.
        """
        held = ctx.find_held(obj)
        assert held is not None and held.rec is not None
        rec = held.rec
        saved_depth = held.depth
        bucket = self.table.bucket_for(obj)
        bucket.lock()
        rec.state = RecordState.WAITSET
        successor = self._oldest_entry_waiter(bucket, obj)
        if successor is not None:
            successor.state = RecordState.GRANTED
        bucket.unlock()
        if successor is not None:
            successor.park.unpark()
        ctx.pop_held(held)

        timed_out = False
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            if rec.state == RecordState.GRANTED:
                break
            if deadline is None:
                ctx.park.park()
                continue
            remaining = deadline - time.monotonic()
            got_permit = ctx.park.park_timed(max(remaining, 0.0)) if remaining > 0 else False
            if got_permit or rec.state == RecordState.GRANTED:
                continue
            # timed out; the move below races with a concurrent notify,
            # so the state is re-examined under the bucket lock
            bucket.lock()
            if rec.state == RecordState.WAITSET:
                timed_out = True
                bucket.remove_record(rec)
                if any(r.state in _ACTIVE for r in bucket.records_of(obj)):
                    rec.state = RecordState.ENTRY_WAIT
                    bucket.add_record(rec)
                    deadline = None
                else:
                    rec.state = RecordState.OWNER
                    bucket.add_record(rec)
                    bucket.unlock()
                    break
                bucket.unlock()
            else:
                bucket.unlock()
                deadline = None

        if rec.state == RecordState.GRANTED:
            rec.state = RecordState.OWNER
        ctx.push_held(obj, rec, saved_depth)
        return timed_out

    def notify(self, ctx: ThreadContext, obj: "SyncObject", everyone: bool = False) -> None:
        bucket = self.table.bucket_for(obj)
        bucket.lock()
        moved = []
        for r in bucket.records_of(obj):
            if r.state == RecordState.WAITSET:
                moved.append(r)
                if not everyone:
                    break
        for r in moved:
            # re-entry at the tail: FIFO with respect to current waiters
            bucket.remove_record(r)
            r.state = RecordState.ENTRY_WAIT
            bucket.add_record(r)
        bucket.unlock()
