"""Queue monitor living in the displaced header word.

The header of a contended object is replaced wholesale by a tagged
reference to the tail lock record of a queue. The displaced neutral word
is captured by the thread that wins the neutral-to-displaced transition
and travels down the queue: every enqueuing record copies it from its
predecessor before linking, so the value is present at the tail for the
whole displacement episode (identity hash is assigned before the first
displacement and class/age never change, which is what makes the copy
stable). Readers that need header fields chase the tail, read its copy,
and revalidate that neither the header word nor the record generation
moved; self-owned objects read their own record directly.

Enqueue is one unconditional swap of the header. Exit hands the monitor
to the linked successor, or restores the neutral word by CAS when no
successor is linked; a failed restore means a successor is mid-link and
the exiter waits out the swap-to-store gap, the one place spinning is
unbounded because completion is imminent by construction.

Two succession policies share this structure. The FIFO variant grants
strictly in swap order. The bounded-bypass variant tracks ownership in a
separate test-and-set indicator co-located with the header: arriving
threads may barge with a bounded number of tries while the queue head
competes alongside them, and a head that has waited past the patience
bound raises an impatience flag that sends later arrivals straight to
the queue. Releases poke the published queue head, and the head
publishes itself before polling, so a release cannot slip between the
head's last poll and its park. A release that observes impatience hands
the indicator to the head directly instead of clearing it, so the head
gets the very next release rather than another race it may lose.

Wait sets ride along as a small holder object owned by whoever owns the
monitor: conveyed on handoff, parked in a bucket-keyed side table when
the queue dies out with waiters still present, and adopted by the next
thread to win the neutral-to-displaced transition. The bounded-bypass
variant anchors wait sets in the side table always, since barging owners
hold no record. All wait-set mutations run under the object's bucket
lock, which is also what resolves the race between a timing-out waiter
and a concurrent notification.
"""

from __future__ import annotations

import threading
import time
import typing

from .chains import BucketTable
from .header import IHASH_SHIFT, TAG_DISPLACED, TAG_MASK, TAG_NEUTRAL, IdentityHashSource, encode_displaced
from .parking import SpinPolicy, spin_then_park
from .records import LockRecord, RecordState, ThreadContext, record_by_id

if typing.TYPE_CHECKING:
    from .header import SyncObject

__all__ = ["WaitSet", "CjmMonitor"]

_IHASH_FIELD = ((1 << 31) - 1) << IHASH_SHIFT


class WaitSet:
    """Waiting records for one object, oldest first."""

    __slots__ = ("items",)

    def __init__(self) -> None:
        self.items: list[LockRecord] = []


class CjmMonitor:
    def __init__(
        self,
        table: BucketTable,
        ihash_source: IdentityHashSource,
        bypass: bool = False,
        patience: float = 0.001,
        barge_tries: int = 16,
        policy: SpinPolicy | None = None,
    ) -> None:
        self.table = table
        self.ihash_source = ihash_source
        self.bypass = bypass
        self.patience = patience
        self.barge_tries = barge_tries
        self.policy = policy or table.policy
        # high-water mark of arrival-to-ownership time, for bound checks
        self.entry_wait_max = 0.0
        self._stats_lock = threading.Lock()

    def _note_entry_wait(self, waited: float) -> None:
        if waited > self.entry_wait_max:
            with self._stats_lock:
                if waited > self.entry_wait_max:
                    self.entry_wait_max = waited

    # identity hash

    def ensure_identity_hash(self, obj: "SyncObject") -> int:
        """Assign the identity hash if needed; must complete before this
        thread may displace the header."""
        while True:
            raw = obj.header.load()
            if raw & TAG_MASK != TAG_NEUTRAL:
                # displaced implies some enterer assigned it already
                value = (self._chase_value(obj) & _IHASH_FIELD) >> IHASH_SHIFT
                if value:
                    return value
                continue
            have = (raw & _IHASH_FIELD) >> IHASH_SHIFT
            if have:
                return have
            candidate = self.ihash_source.next_value()
            if obj.header.cas(raw, raw | (candidate << IHASH_SHIFT)):
                return candidate

    # header reads

    def read_header(self, ctx: ThreadContext, obj: "SyncObject") -> int:
        """Return the object's neutral header word as of some instant
        during this call, whether or not the header is displaced."""
        held = ctx.find_held(obj)
        if held is not None and held.rec is not None and held.rec.displaced_ready:
            return held.rec.displaced
        raw = obj.header.load()
        if raw & TAG_MASK == TAG_NEUTRAL:
            return raw
        return self._chase_value(obj)

    def _chase_value(self, obj: "SyncObject") -> int:
        while True:
            raw1 = obj.header.load()
            if raw1 & TAG_MASK == TAG_NEUTRAL:
                return raw1
            rec = record_by_id(raw1 >> 2)
            gen1 = rec.gen
            if not rec.displaced_ready:
                time.sleep(0)
                continue
            value = rec.displaced
            gen2 = rec.gen
            raw2 = obj.header.load()
            if gen1 == gen2 and raw1 == raw2:
                return value

    # queue mechanics shared by both variants

    def _join_queue(self, ctx: ThreadContext, obj: "SyncObject", rec: LockRecord) -> bool:
        """Swap self in as tail. True if this thread won the
        neutral-to-displaced transition (immediate ownership for FIFO,
        queue headship for bypass); False after being granted by a
        predecessor."""
        rec.successor = None
        rec.displaced_ready = False
        prev = obj.header.swap(encode_displaced(rec.rid))
        if prev & TAG_MASK == TAG_NEUTRAL:
            rec.displaced = prev
            rec.displaced_ready = True
            with obj.debug_lock:
                rec.holds_header = True
                obj.displaced_live = True
            return True
        pred = record_by_id(prev >> 2)
        while not pred.displaced_ready:
            time.sleep(0)
        rec.displaced = pred.displaced
        rec.displaced_ready = True
        pred.successor = rec
        spin_then_park(lambda: rec.state == RecordState.GRANTED, ctx.park, self.policy, spin_key=rec)
        return False

    def _hand_over(self, obj: "SyncObject", rec: LockRecord, succ: LockRecord) -> None:
        succ.waitset = rec.waitset if (rec.waitset is not None and rec.waitset.items) else None
        rec.waitset = None
        with obj.debug_lock:
            succ.holds_header = True
            rec.holds_header = False
        succ.state = RecordState.GRANTED
        succ.park.unpark()

    def _leave_queue(self, ctx: ThreadContext, obj: "SyncObject", rec: LockRecord, free_rec: bool) -> None:
        """Drop rec out of the queue: restore the neutral header if rec
        is the sole record, otherwise convey to the linked successor."""
        succ = rec.successor
        if succ is None:
            parked = False
            if rec.waitset is not None and rec.waitset.items:
                self._park_waitset(obj, rec.waitset)
                rec.waitset = None
                parked = True
            if obj.header.cas(encode_displaced(rec.rid), rec.displaced):
                with obj.debug_lock:
                    rec.holds_header = False
                    obj.displaced_live = False
                if free_rec:
                    ctx.free_record(rec)
                return
            # a successor is between its swap and its link store; the
            # wait is unbounded in form but completion is imminent
            if parked:
                rec.waitset = self._take_parked_waitset(obj)
            while rec.successor is None:
                time.sleep(0)
            succ = rec.successor
        self._hand_over(obj, rec, succ)
        if free_rec:
            ctx.free_record(rec)

    # orphaned wait sets

    def _park_waitset(self, obj: "SyncObject", ws: WaitSet) -> None:
        bucket = self.table.bucket_for(obj)
        bucket.lock()
        existing = bucket.orphan_waitsets.get(obj)
        if existing is not None:
            existing.items.extend(ws.items)
        else:
            bucket.orphan_waitsets[obj] = ws
        obj.orphan_flag = True
        bucket.unlock()

    def _take_parked_waitset(self, obj: "SyncObject") -> WaitSet | None:
        bucket = self.table.bucket_for(obj)
        bucket.lock()
        ws = bucket.orphan_waitsets.pop(obj, None)
        obj.orphan_flag = False
        bucket.unlock()
        if ws is not None and not ws.items:
            ws = None
        return ws

    def _adopt_orphans(self, obj: "SyncObject", rec: LockRecord) -> None:
        ws = self._take_parked_waitset(obj)
        if ws is not None:
            if rec.waitset is None or not rec.waitset.items:
                rec.waitset = ws
            else:
                rec.waitset.items.extend(ws.items)

    # FIFO variant

    def _enter_fifo(self, ctx: ThreadContext, obj: "SyncObject", rec: LockRecord) -> None:
        rec.state = RecordState.ENTRY_WAIT
        if self._join_queue(ctx, obj, rec):
            if obj.orphan_flag:
                self._adopt_orphans(obj, rec)
        rec.state = RecordState.OWNER

    def _exit_fifo(self, ctx: ThreadContext, obj: "SyncObject", rec: LockRecord) -> None:
        self._leave_queue(ctx, obj, rec, free_rec=True)

    # bounded-bypass variant

    def _enter_bypass(self, ctx: ThreadContext, obj: "SyncObject") -> None:
        arrived = time.monotonic()
        if not obj.impatient:
            for _ in range(self.barge_tries):
                if obj.outer.cas(0, 1):
                    self._note_entry_wait(time.monotonic() - arrived)
                    return
                time.sleep(0)
        rec = ctx.alloc_record(obj)
        rec.state = RecordState.ENTRY_WAIT
        rec.enqueue_time = arrived
        self._join_queue(ctx, obj, rec)
        # queue head now; compete for the outer indicator
        obj.queue_head = rec
        while True:
            if rec.direct_grant:
                # an impatience-observing release kept the indicator set
                # and transferred it here wholesale
                rec.direct_grant = False
                break
            if obj.outer.cas(0, 1):
                break
            if time.monotonic() - rec.enqueue_time > self.patience:
                obj.impatient = True
            spin_then_park(
                lambda: rec.direct_grant or obj.outer.load() == 0,
                ctx.park,
                self.policy,
                spin_key=obj,
            )
        self._note_entry_wait(time.monotonic() - arrived)
        obj.queue_head = None
        # owner via the indicator; dequeue self and refresh impatience
        succ = rec.successor
        if succ is None:
            if obj.header.cas(encode_displaced(rec.rid), rec.displaced):
                with obj.debug_lock:
                    rec.holds_header = False
                    obj.displaced_live = False
                obj.impatient = False
                ctx.free_record(rec)
                return
            while rec.successor is None:
                time.sleep(0)
            succ = rec.successor
        obj.impatient = (time.monotonic() - succ.enqueue_time) > self.patience
        self._hand_over(obj, rec, succ)
        ctx.free_record(rec)

    def _exit_bypass(self, obj: "SyncObject") -> None:
        if obj.impatient:
            head = obj.queue_head
            if head is not None:
                # head ran out of patience: hand the indicator over rather
                # than reopening the race it keeps losing. The head cannot
                # advance past this episode before the store lands, since
                # the indicator stays set until it consumes the grant.
                head.direct_grant = True
                head.park.unpark()
                return
        obj.outer.store(0)
        head = obj.queue_head
        if head is not None:
            head.park.unpark()

    # monitor interface

    def enter(self, ctx: ThreadContext, obj: "SyncObject") -> None:
        held = ctx.find_held(obj)
        if held is not None:
            held.depth += 1
            return
        self.ensure_identity_hash(obj)
        if self.bypass:
            self._enter_bypass(ctx, obj)
            ctx.push_held(obj, None, 1)
            return
        rec = ctx.alloc_record(obj)
        self._enter_fifo(ctx, obj, rec)
        ctx.push_held(obj, rec, 1)

    def exit(self, ctx: ThreadContext, obj: "SyncObject") -> None:
        held = ctx.find_held(obj)
        assert held is not None
        if held.depth > 1:
            held.depth -= 1
            return
        ctx.pop_held(held)
        if self.bypass:
            self._exit_bypass(obj)
        else:
            assert held.rec is not None
            self._exit_fifo(ctx, obj, held.rec)

    def wait(self, ctx: ThreadContext, obj: "SyncObject", timeout: float | None = None) -> bool:
        if self.bypass:
            return self._wait_bypass(ctx, obj, timeout)
        return self._wait_fifo(ctx, obj, timeout)

    def notify(self, ctx: ThreadContext, obj: "SyncObject", everyone: bool = False) -> None:
        if self.bypass:
            self._notify_bypass(obj, everyone)
        else:
            held = ctx.find_held(obj)
            assert held is not None and held.rec is not None
            self._notify_fifo(obj, held.rec, everyone)

    # FIFO wait and notify: the notifier re-enqueues notified records at
    # the queue tail on the waiter's behalf

    def _wait_fifo(self, ctx: ThreadContext, obj: "SyncObject", timeout: float | None) -> bool:
        held = ctx.find_held(obj)
        assert held is not None and held.rec is not None
        rec = held.rec
        saved_depth = held.depth
        bucket = self.table.bucket_for(obj)
        ws = rec.waitset if rec.waitset is not None else WaitSet()
        bucket.lock()
        rec.state = RecordState.WAITSET
        rec.notified = False
        ws.items.append(rec)
        bucket.unlock()
        rec.waitset = ws
        ctx.pop_held(held)
        self._leave_queue(ctx, obj, rec, free_rec=False)

        timed_out = self._await_grant(ctx, obj, rec, ws, timeout, bucket)
        rec.state = RecordState.OWNER
        ctx.push_held(obj, rec, saved_depth)
        return timed_out

    def _await_grant(self, ctx, obj, rec, ws, timeout, bucket) -> bool:
        # ws is the wait set rec was appended to; the reference stays
        # valid while rec is a member even as the anchor travels
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            if rec.state == RecordState.GRANTED:
                return False
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
            ws.items.remove(rec)
            if not ws.items and bucket.orphan_waitsets.get(obj) is ws:
                del bucket.orphan_waitsets[obj]
                obj.orphan_flag = False
            rec.state = RecordState.ENTRY_WAIT
            bucket.unlock()
            rec.waitset = None
            # rejoin the queue directly; the monitor may even be free
            if self._join_queue(ctx, obj, rec):
                if obj.orphan_flag:
                    self._adopt_orphans(obj, rec)
            return True

    def _notify_fifo(self, obj: "SyncObject", rec: LockRecord, everyone: bool) -> None:
        ws = rec.waitset
        if ws is None:
            return
        bucket = self.table.bucket_for(obj)
        bucket.lock()
        if everyone:
            targets = list(ws.items)
            ws.items.clear()
        else:
            targets = [ws.items.pop(0)] if ws.items else []
        for t in targets:
            t.state = RecordState.ENTRY_WAIT
            t.notified = True
        bucket.unlock()
        for t in targets:
            t.waitset = None
            self._enqueue_for(obj, t)

    def _enqueue_for(self, obj: "SyncObject", rec: LockRecord) -> None:
        """Append someone else's record to the queue. The caller owns the
        monitor, so the header is displaced and the swap cannot observe
        a neutral word."""
        rec.successor = None
        rec.displaced_ready = False
        prev = obj.header.swap(encode_displaced(rec.rid))
        assert prev & TAG_MASK == TAG_DISPLACED
        pred = record_by_id(prev >> 2)
        while not pred.displaced_ready:
            time.sleep(0)
        rec.displaced = pred.displaced
        rec.displaced_ready = True
        pred.successor = rec

    # bypass wait and notify: notified waiters re-enter competitively

    def _wait_bypass(self, ctx: ThreadContext, obj: "SyncObject", timeout: float | None) -> bool:
        held = ctx.find_held(obj)
        assert held is not None
        saved_depth = held.depth
        rec = ctx.alloc_record(obj)
        rec.state = RecordState.WAITSET
        rec.notified = False
        bucket = self.table.bucket_for(obj)
        bucket.lock()
        ws = bucket.orphan_waitsets.get(obj)
        if ws is None:
            ws = WaitSet()
            bucket.orphan_waitsets[obj] = ws
        ws.items.append(rec)
        bucket.unlock()
        ctx.pop_held(held)
        self._exit_bypass(obj)

        timed_out = False
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            if rec.state != RecordState.WAITSET:
                break
            if deadline is None:
                ctx.park.park()
                continue
            remaining = deadline - time.monotonic()
            got_permit = ctx.park.park_timed(max(remaining, 0.0)) if remaining > 0 else False
            if got_permit or rec.state != RecordState.WAITSET:
                continue
            bucket.lock()
            if rec.state != RecordState.WAITSET:
                bucket.unlock()
                continue
            ws.items.remove(rec)
            if not ws.items and bucket.orphan_waitsets.get(obj) is ws:
                del bucket.orphan_waitsets[obj]
            bucket.unlock()
            timed_out = True
            break
        ctx.free_record(rec)
        self._enter_bypass(ctx, obj)
        ctx.push_held(obj, None, saved_depth)
        return timed_out

    def _notify_bypass(self, obj: "SyncObject", everyone: bool) -> None:
        bucket = self.table.bucket_for(obj)
        bucket.lock()
        ws = bucket.orphan_waitsets.get(obj)
        targets: list[LockRecord] = []
        if ws is not None and ws.items:
            if everyone:
                targets = list(ws.items)
                ws.items.clear()
            else:
                targets = [ws.items.pop(0)]
            if not ws.items:
                del bucket.orphan_waitsets[obj]
        for t in targets:
            t.state = RecordState.ENTRY_WAIT
            t.notified = True
        bucket.unlock()
        for t in targets:
            t.park.unpark()

    # debug inspection used by tests

    def queue_records(self, ctx: ThreadContext, obj: "SyncObject") -> list[LockRecord]:
        """Walk successor links from this thread's own record. Only
        meaningful while the caller owns the monitor (FIFO variant)."""
        held = ctx.find_held(obj)
        if held is None or held.rec is None:
            return []
        out = []
        r = held.rec
        while r is not None:
            out.append(r)
            r = r.successor
        return out
