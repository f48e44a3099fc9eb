"""Flagged-header monitor: chains hold waiters only.

Three header bits carry the hot-path state. Locked is acquired and
released by CAS on the full header word, so an uncontended enter/exit
pair never touches the bucket table. WaitersExist tells an exiting owner
whether a successor might be chained; it may be conservatively set with
an empty chain, but whenever the chain holds an entry waiter the bit is
set at every instant the bucket lock is free. The Impatient bit is
reserved for the bounded-bypass queue monitor and stays clear here.

A contended enter emplaces a waiter record and parks. The owner is never
on the chain. Exit with a successor is a direct handoff: the owner
detaches the oldest entry waiter under the bucket lock, clears
WaitersExist if no further entry waiters remain, releases the bucket
lock, marks the record granted, and unparks the waiter. The Locked bit
stays set across the whole handoff, so the monitor is never observably
free while a grant is in flight. That continuity is what the
handoff_epoch counter makes testable: the exiting owner bumps it to odd
when the grant starts and the resumed successor bumps it back to even,
and a sampler that reads equal odd epochs around a header load must see
Locked set.

Stranding is prevented twice over: a blocked enterer re-tries the Locked
CAS once after setting WaitersExist, and re-checks Locked under the
bucket lock after emplacing, acquiring directly when it finds the
monitor free.
"""

from __future__ import annotations

import time
import typing

from .chains import BucketTable
from .header import BIT_LOCKED, BIT_WAITERS
from .parking import SpinPolicy, spin_then_park
from .records import LockRecord, RecordState, ThreadContext

if typing.TYPE_CHECKING:
    from .header import SyncObject

__all__ = ["HashChains3Monitor"]


class HashChains3Monitor:
    def __init__(self, table: BucketTable, policy: SpinPolicy | None = None) -> None:
        self.table = table
        self.policy = policy or table.policy

    @staticmethod
    def _try_lock(obj: "SyncObject") -> bool:
        while True:
            raw = obj.header.load()
            if raw & BIT_LOCKED:
                return False
            if obj.header.cas(raw, raw | BIT_LOCKED):
                return True

    @staticmethod
    def _set_waiters(obj: "SyncObject") -> None:
        while True:
            raw = obj.header.load()
            if raw & BIT_WAITERS:
                return
            if obj.header.cas(raw, raw | BIT_WAITERS):
                return

    @staticmethod
    def _clear_bits(obj: "SyncObject", bits: int) -> None:
        while True:
            raw = obj.header.load()
            if obj.header.cas(raw, raw & ~bits):
                return

    def enter(self, ctx: ThreadContext, obj: "SyncObject") -> None:
        held = ctx.find_held(obj)
        if held is not None:
            held.depth += 1
            return
        if self._try_lock(obj):
            ctx.push_held(obj, None, 1)
            return
        rec = ctx.alloc_record(obj)
        rec.state = RecordState.ENTRY_WAIT
        self._set_waiters(obj)
        if self._try_lock(obj):
            # the bit may now be spuriously set; exit tolerates that
            ctx.free_record(rec)
            ctx.push_held(obj, None, 1)
            return
        bucket = self.table.bucket_for(obj)
        bucket.lock()
        bucket.add_record(rec)
        if self._acquire_or_confirm_waiting(ctx, obj, bucket, rec):
            return
        bucket.unlock()
        spin_then_park(lambda: rec.state == RecordState.GRANTED, ctx.park, self.policy, spin_key=rec)
        obj.handoff_epoch += 1  # close the continuity window opened by the granter
        ctx.free_record(rec)
        ctx.push_held(obj, None, 1)

    def _acquire_or_confirm_waiting(self, ctx, obj, bucket, rec) -> bool:
        """With the bucket lock held and rec emplaced: either take the
        monitor because it turned out free (True, everything cleaned up),
        or guarantee WaitersExist is set before parking (False)."""
        while True:
            raw = obj.header.load()
            if not raw & BIT_LOCKED:
                if obj.header.cas(raw, raw | BIT_LOCKED):
                    bucket.remove_record(rec)
                    bucket.unlock()
                    ctx.free_record(rec)
                    ctx.push_held(obj, None, 1)
                    return True
                continue
            if not raw & BIT_WAITERS:
                if not obj.header.cas(raw, raw | BIT_WAITERS):
                    continue
            return False

    def exit(self, ctx: ThreadContext, obj: "SyncObject") -> None:
        held = ctx.find_held(obj)
        assert held is not None
        if held.depth > 1:
            held.depth -= 1
            return
        ctx.pop_held(held)
        self._release(ctx, obj)

    def _release(self, ctx: ThreadContext, obj: "SyncObject") -> None:
        while True:
            raw = obj.header.load()
            if raw & BIT_WAITERS:
                break
            # keep WaitersExist clear in the released word
            if obj.header.cas(raw, raw & ~BIT_LOCKED):
                return
        bucket = self.table.bucket_for(obj)
        bucket.lock()
        successor = None
        more_waiters = False
        for r in bucket.records_of(obj):
            if r.state == RecordState.ENTRY_WAIT:
                if successor is None:
                    successor = r
                else:
                    more_waiters = True
                    break
        if successor is None:
            self._clear_bits(obj, BIT_LOCKED | BIT_WAITERS)
            bucket.unlock()
            return
        bucket.remove_record(successor)
        if not more_waiters:
            self._clear_bits(obj, BIT_WAITERS)
        obj.handoff_epoch += 1  # continuity window opens; Locked stays set
        bucket.unlock()
        successor.state = RecordState.GRANTED
        successor.park.unpark()

    def wait(self, ctx: ThreadContext, obj: "SyncObject", timeout: float | None = None) -> bool:
        held = ctx.find_held(obj)
        assert held is not None
        saved_depth = held.depth
        rec = ctx.alloc_record(obj)
        rec.state = RecordState.WAITSET
        bucket = self.table.bucket_for(obj)
        bucket.lock()
        bucket.add_record(rec)
        bucket.unlock()
        ctx.pop_held(held)
        self._release(ctx, obj)

        timed_out = False
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            if rec.state == RecordState.GRANTED:
                obj.handoff_epoch += 1
                ctx.free_record(rec)
                ctx.push_held(obj, None, saved_depth)
                return timed_out
            if deadline is None:
                ctx.park.park()
                continue
            remaining = deadline - time.monotonic()
            got_permit = ctx.park.park_timed(max(remaining, 0.0)) if remaining > 0 else False
            if got_permit or rec.state != RecordState.WAITSET:
                if rec.state != RecordState.WAITSET:
                    deadline = None
                continue
            bucket.lock()
            if rec.state != RecordState.WAITSET:
                bucket.unlock()
                deadline = None
                continue
            timed_out = True
            rec.state = RecordState.ENTRY_WAIT
            bucket.remove_record(rec)
            bucket.add_record(rec)
            if self._acquire_or_confirm_waiting(ctx, obj, bucket, rec):
                # _acquire_or_confirm_waiting pushed depth 1; fix it up
                entry = ctx.find_held(obj)
                assert entry is not None
                entry.depth = saved_depth
                return True
            bucket.unlock()
            deadline = None

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
            bucket.remove_record(r)
            r.state = RecordState.ENTRY_WAIT
            bucket.add_record(r)
        if moved:
            self._set_waiters(obj)
        bucket.unlock()
