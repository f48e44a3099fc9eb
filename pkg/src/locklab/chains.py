"""Global bucket table of lock-record chains.

Each synchronizable object hashes by address to one of nbuckets buckets.
A bucket guards a two-level chain: spine records link distinct objects,
rib records hang off their spine in arrival order, so records for one
object are [spine, rib, rib, ...] oldest first. All chain mutations run
under the bucket's inner lock.

The test-and-set inner lock multiplexes its word:

    0          unlocked, chain empty
    1          locked
    2          unlocked, chain nonempty
    rid<<2|3   unlocked, chain empty except one resident singleton record

The singleton encoding is the uncontended fast path: installing or
removing a sole owner record is one CAS on this word with no inner lock
acquisition at all. Any acquirer that finds a singleton devolves it by
taking the lock and migrating the record onto the chain. The
acquisitions counter moves only on a winning CAS to the locked state,
so fast-path traffic is visible as an unchanged counter.

A native variant backs the inner lock with threading.Lock for
comparison; it has no singleton encoding.
"""

from __future__ import annotations

import threading
import time
import typing

from .atomics import AtomicU64
from .header import bucket_index
from .parking import SpinPolicy, recorder
from .records import LockRecord, record_by_id

if typing.TYPE_CHECKING:
    from .header import SyncObject

__all__ = ["Bucket", "TasBucket", "NativeBucket", "BucketTable", "DEFAULT_NBUCKETS", "DEFAULT_SALT"]

DEFAULT_NBUCKETS = 4096
DEFAULT_SALT = 0x5A17ED00

_WORD_EMPTY = 0
_WORD_LOCKED = 1
_WORD_NONEMPTY = 2
_SINGLETON_TAG = 3


class Bucket:
    """Chain container; locking strategy supplied by subclasses."""

    __slots__ = ("chain_head", "acquisitions", "orphan_waitsets")

    def __init__(self) -> None:
        self.chain_head: LockRecord | None = None
        self.acquisitions = 0
        self.orphan_waitsets: dict = {}

    # chain operations, inner lock held

    def find_spine(self, obj: "SyncObject") -> LockRecord | None:
        s = self.chain_head
        while s is not None:
            if s.obj is obj:
                return s
            s = s.spine_next
        return None

    def records_of(self, obj: "SyncObject") -> list[LockRecord]:
        out: list[LockRecord] = []
        s = self.find_spine(obj)
        if s is not None:
            out.append(s)
            r = s.rib_head
            while r is not None:
                out.append(r)
                r = r.rib_next
        return out

    def add_record(self, rec: LockRecord) -> None:
        spine = self.find_spine(rec.obj)
        rec.spine_next = None
        rec.rib_head = None
        rec.rib_next = None
        if spine is None:
            rec.spine_next = self.chain_head
            self.chain_head = rec
            return
        r = spine.rib_head
        if r is None:
            spine.rib_head = rec
            return
        while r.rib_next is not None:
            r = r.rib_next
        r.rib_next = rec

    def remove_record(self, rec: LockRecord) -> None:
        prev_spine: LockRecord | None = None
        s = self.chain_head
        while s is not None:
            if s is rec:
                if s.rib_head is not None:
                    # promote the oldest rib so arrival order survives
                    p = s.rib_head
                    p.rib_head = p.rib_next
                    p.rib_next = None
                    p.spine_next = s.spine_next
                    if prev_spine is None:
                        self.chain_head = p
                    else:
                        prev_spine.spine_next = p
                else:
                    if prev_spine is None:
                        self.chain_head = s.spine_next
                    else:
                        prev_spine.spine_next = s.spine_next
                rec.spine_next = None
                rec.rib_head = None
                return
            if s.obj is rec.obj:
                prev_rib: LockRecord | None = None
                r = s.rib_head
                while r is not None:
                    if r is rec:
                        if prev_rib is None:
                            s.rib_head = r.rib_next
                        else:
                            prev_rib.rib_next = r.rib_next
                        rec.rib_next = None
                        return
                    prev_rib = r
                    r = r.rib_next
                break
            prev_spine = s
            s = s.spine_next
        raise LookupError(f"record {rec.rid} not on this bucket's chain")

    def lock(self) -> None:
        raise NotImplementedError

    def unlock(self) -> None:
        raise NotImplementedError


class TasBucket(Bucket):
    # inner sections are a few chain ops; spin briefly, then block. The
    # first tries yield cheaply, the rest nap so a preempted holder runs.
    _SPIN_TRIES = 48
    _YIELD_TRIES = 32

    __slots__ = ("word", "_cv")

    def __init__(self) -> None:
        super().__init__()
        self.word = AtomicU64(_WORD_EMPTY)
        self._cv = threading.Condition(threading.Lock())

    def _try_acquire(self) -> bool:
        w = self.word.load()
        if w == _WORD_LOCKED:
            return False
        if self.word.cas(w, _WORD_LOCKED):
            if (w & 0b11) == _SINGLETON_TAG:
                self._migrate(record_by_id(w >> 2))
            self.acquisitions += 1
            return True
        return False

    def _migrate(self, rec: LockRecord) -> None:
        self.add_record(rec)

    def lock(self) -> None:
        polls = 0
        for _ in range(self._SPIN_TRIES):
            if self._try_acquire():
                if polls:
                    recorder.note_polls(polls)
                return
            time.sleep(0 if polls < self._YIELD_TRIES else 1e-6)
            polls += 1
        recorder.note_polls(polls)
        with self._cv:
            while not self._try_acquire():
                self._cv.wait()

    def unlock(self) -> None:
        # store first, then notify; a waiter holds the condvar lock from
        # its failed acquire attempt until it blocks, so no wakeup is lost
        self.word.store(_WORD_NONEMPTY if self.chain_head is not None else _WORD_EMPTY)
        with self._cv:
            self._cv.notify()

    def try_singleton_install(self, rec: LockRecord) -> bool:
        return self.word.cas(_WORD_EMPTY, (rec.rid << 2) | _SINGLETON_TAG)

    def try_singleton_remove(self, rec: LockRecord) -> bool:
        return self.word.cas((rec.rid << 2) | _SINGLETON_TAG, _WORD_EMPTY)


class NativeBucket(Bucket):
    __slots__ = ("_inner",)

    def __init__(self) -> None:
        super().__init__()
        self._inner = threading.Lock()

    def lock(self) -> None:
        self._inner.acquire()
        self.acquisitions += 1

    def unlock(self) -> None:
        self._inner.release()


class BucketTable:
    """Fixed array of buckets addressed by the salted multiplicative hash."""

    def __init__(
        self,
        nbuckets: int = DEFAULT_NBUCKETS,
        salt: int = DEFAULT_SALT,
        inner: str = "tas",
        policy: SpinPolicy | None = None,
    ) -> None:
        if inner not in ("tas", "native"):
            raise ValueError("inner lock kind must be 'tas' or 'native'")
        self.nbuckets = nbuckets
        self.salt = salt
        self.inner = inner
        self.policy = policy or SpinPolicy()
        cls = TasBucket if inner == "tas" else NativeBucket
        self.buckets = [cls() for _ in range(nbuckets)]

    def bucket_for(self, obj: "SyncObject") -> Bucket:
        return self.buckets[bucket_index(obj.addr, self.nbuckets, self.salt)]

    def total_acquisitions(self) -> int:
        return sum(b.acquisitions for b in self.buckets)
