"""Uniform monitor facade over the candidate algorithms.

A MonitorRuntime owns one algorithm instance plus the shared plumbing
(address space, bucket table, identity hash source, per-thread
contexts) and exposes enter/exit/wait/notify/holds/identity_hash with
reentrancy and illegal-state checking in one place. Objects made by one
runtime must only be used through that runtime.

The native baseline embeds a full mutex and condition variable in every
object, the thing the other designs exist to avoid; it anchors both the
footprint and the behavior comparisons.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum

from .chains import DEFAULT_NBUCKETS, DEFAULT_SALT, BucketTable
from .cjm import CjmMonitor
from .hashchains import HashChainsMonitor
from .hashchains3 import HashChains3Monitor
from .header import (
    AddressSpace,
    IdentityHashSource,
    SyncObject,
    assign_identity_hash,
    decode,
)
from .parking import DEFAULT_MAX_SPINS, SpinPolicy
from .records import ThreadContext

__all__ = [
    "MonitorAlgo",
    "MonitorError",
    "IllegalMonitorStateError",
    "LockConfig",
    "MonitorRuntime",
]


class MonitorAlgo(Enum):
    HASH_CHAINS = "HashChains"
    HASH_CHAINS_FAST = "HashChainsFast"
    HASH_CHAINS_3 = "HashChains3"
    CJM_FIFO = "CjmFifo"
    CJM_BY = "CjmBy"
    NATIVE = "NativeBaseline"


class MonitorError(Exception):
    pass


class IllegalMonitorStateError(MonitorError):
    """An operation that requires ownership ran without it."""


@dataclass(frozen=True)
class LockConfig:
    nbuckets: int = DEFAULT_NBUCKETS
    salt: int = DEFAULT_SALT
    inner: str = "tas"
    max_spins: int = DEFAULT_MAX_SPINS
    patience: float = 0.001
    barge_tries: int = 16
    hash_seed: int = 0x1DEA5EED
    address_base: int = 0x10000


class NativeCell:
    __slots__ = ("lock", "cond")

    def __init__(self) -> None:
        self.lock = threading.Lock()
        self.cond = threading.Condition(self.lock)


class NativeMonitor:
    """threading.Lock plus Condition per object; nesting kept virtual."""

    def enter(self, ctx: ThreadContext, obj: SyncObject) -> None:
        held = ctx.find_held(obj)
        if held is not None:
            held.depth += 1
            return
        obj.native_cell.lock.acquire()
        ctx.push_held(obj, None, 1)

    def exit(self, ctx: ThreadContext, obj: SyncObject) -> None:
        held = ctx.find_held(obj)
        assert held is not None
        if held.depth > 1:
            held.depth -= 1
            return
        ctx.pop_held(held)
        obj.native_cell.lock.release()

    def wait(self, ctx: ThreadContext, obj: SyncObject, timeout: float | None = None) -> bool:
        held = ctx.find_held(obj)
        assert held is not None
        saved_depth = held.depth
        ctx.pop_held(held)
        notified = obj.native_cell.cond.wait(timeout)
        ctx.push_held(obj, None, saved_depth)
        return not notified

    def notify(self, ctx: ThreadContext, obj: SyncObject, everyone: bool = False) -> None:
        if everyone:
            obj.native_cell.cond.notify_all()
        else:
            obj.native_cell.cond.notify()


class MonitorRuntime:
    def __init__(self, algo: MonitorAlgo | str, config: LockConfig | None = None) -> None:
        self.algo = algo if isinstance(algo, MonitorAlgo) else MonitorAlgo(algo)
        self.config = config or LockConfig()
        self.policy = SpinPolicy(self.config.max_spins)
        self.space = AddressSpace(self.config.address_base)
        self.ihash_source = IdentityHashSource(self.config.hash_seed)
        if self.algo is MonitorAlgo.NATIVE:
            self.table = None
            self.impl = NativeMonitor()
        else:
            self.table = BucketTable(
                self.config.nbuckets, self.config.salt, self.config.inner, self.policy
            )
            if self.algo is MonitorAlgo.HASH_CHAINS:
                self.impl = HashChainsMonitor(self.table, fastpath=False, policy=self.policy)
            elif self.algo is MonitorAlgo.HASH_CHAINS_FAST:
                self.impl = HashChainsMonitor(self.table, fastpath=True, policy=self.policy)
            elif self.algo is MonitorAlgo.HASH_CHAINS_3:
                self.impl = HashChains3Monitor(self.table, policy=self.policy)
            elif self.algo is MonitorAlgo.CJM_FIFO:
                self.impl = CjmMonitor(
                    self.table, self.ihash_source, bypass=False, policy=self.policy
                )
            elif self.algo is MonitorAlgo.CJM_BY:
                self.impl = CjmMonitor(
                    self.table,
                    self.ihash_source,
                    bypass=True,
                    patience=self.config.patience,
                    barge_tries=self.config.barge_tries,
                    policy=self.policy,
                )
            else:
                raise ValueError(f"unknown algorithm {algo!r}")
        self._tls = threading.local()
        self._contexts: list[ThreadContext] = []
        self._contexts_lock = threading.Lock()

    # objects and contexts

    def new_object(self, payload: int = 64, klass: int = 0, age: int = 0) -> SyncObject:
        obj = self.space.new_object(payload=payload, klass=klass, age=age)
        if self.algo is MonitorAlgo.NATIVE:
            obj.native_cell = NativeCell()
        return obj

    def context(self) -> ThreadContext:
        ctx = getattr(self._tls, "ctx", None)
        if ctx is None:
            ctx = ThreadContext()
            self._tls.ctx = ctx
            with self._contexts_lock:
                self._contexts.append(ctx)
        return ctx

    def contexts(self) -> list[ThreadContext]:
        with self._contexts_lock:
            return list(self._contexts)

    # monitor operations

    def enter(self, obj: SyncObject) -> None:
        self.impl.enter(self.context(), obj)

    def exit(self, obj: SyncObject) -> None:
        ctx = self.context()
        if ctx.find_held(obj) is None:
            raise IllegalMonitorStateError("exit without ownership")
        self.impl.exit(ctx, obj)

    def wait(self, obj: SyncObject, timeout: float | None = None) -> bool:
        ctx = self.context()
        if ctx.find_held(obj) is None:
            raise IllegalMonitorStateError("wait without ownership")
        return self.impl.wait(ctx, obj, timeout)

    def notify(self, obj: SyncObject) -> None:
        ctx = self.context()
        if ctx.find_held(obj) is None:
            raise IllegalMonitorStateError("notify without ownership")
        self.impl.notify(ctx, obj, everyone=False)

    def notify_all(self, obj: SyncObject) -> None:
        ctx = self.context()
        if ctx.find_held(obj) is None:
            raise IllegalMonitorStateError("notify without ownership")
        self.impl.notify(ctx, obj, everyone=True)

    def holds(self, obj: SyncObject) -> bool:
        return self.context().find_held(obj) is not None

    def identity_hash(self, obj: SyncObject) -> int:
        if isinstance(self.impl, CjmMonitor):
            return self.impl.ensure_identity_hash(obj)
        return assign_identity_hash(obj, self.ihash_source)

    def read_header(self, obj: SyncObject) -> int:
        """The object's neutral header word, reconstructed if displaced."""
        if isinstance(self.impl, CjmMonitor):
            return self.impl.read_header(self.context(), obj)
        return obj.header.load()

    def header_fields(self, obj: SyncObject):
        return decode(self.read_header(obj))

    # aggregate statistics for tests and the benchmark

    def bucket_acquisitions(self) -> int:
        return self.table.total_acquisitions() if self.table is not None else 0

    def records_allocated(self) -> int:
        return sum(c.allocated_total for c in self.contexts())

    def records_free(self) -> int:
        return sum(len(c.free_list) for c in self.contexts())
