"""Behavior specific to the displaced-header queue monitor."""

from __future__ import annotations

import threading
import time

from conftest import run_threads

from locklab import records as records_mod
from locklab.header import TAG_DISPLACED, TAG_MASK, TAG_NEUTRAL, encode_displaced
from locklab.monitor import LockConfig, MonitorRuntime


def _poll(predicate, timeout: float = 30.0) -> None:
    deadline = time.monotonic() + timeout
    while not predicate():
        if time.monotonic() > deadline:
            raise TimeoutError("condition never became true")
        time.sleep(0.001)


def _side_table_size(rt, obj) -> int:
    bucket = rt.table.bucket_for(obj)
    bucket.lock()
    ws = bucket.orphan_waitsets.get(obj)
    n = len(ws.items) if ws is not None else 0
    bucket.unlock()
    return n


class TestHeaderDisplacement:
    def test_header_displaced_while_held_and_restored_exactly(self):
        rt = MonitorRuntime("CjmFifo")
        obj = rt.new_object(klass=5, age=2)
        h = rt.identity_hash(obj)
        neutral = obj.header.load()
        rt.enter(obj)
        assert obj.header.load() & TAG_MASK == TAG_DISPLACED
        assert rt.read_header(obj) == neutral
        fields = rt.header_fields(obj)
        assert fields.klass == 5 and fields.age == 2 and fields.ihash == h
        rt.exit(obj)
        assert obj.header.load() == neutral

    def test_first_enter_assigns_hash_before_displacing(self):
        rt = MonitorRuntime("CjmFifo")
        obj = rt.new_object()
        rt.enter(obj)
        h = rt.header_fields(obj).ihash
        assert h
        rt.exit(obj)
        assert obj.header.load() & TAG_MASK == TAG_NEUTRAL
        assert rt.identity_hash(obj) == h

    def test_header_word_is_identical_across_episodes(self):
        rt = MonitorRuntime("CjmFifo")
        obj = rt.new_object(klass=9)
        rt.enter(obj)
        rt.exit(obj)
        word = obj.header.load()
        for _ in range(50):
            rt.enter(obj)
            rt.exit(obj)
            assert obj.header.load() == word

    def test_displaced_word_references_the_queue_tail(self):
        rt = MonitorRuntime("CjmFifo")
        obj = rt.new_object()
        done = threading.Event()
        rt.enter(obj)

        def contender(_idx: int) -> None:
            rt.enter(obj)
            rt.exit(obj)
            done.set()

        t = threading.Thread(target=contender, args=(0,), daemon=True)
        t.start()
        _poll(lambda: len(rt.impl.queue_records(rt.context(), obj)) == 2)
        tail = rt.impl.queue_records(rt.context(), obj)[-1]
        assert obj.header.load() == encode_displaced(tail.rid)
        rt.exit(obj)
        assert done.wait(timeout=30.0)
        t.join(timeout=30.0)

    def test_read_header_is_constant_under_churn(self):
        rt = MonitorRuntime("CjmFifo")
        obj = rt.new_object(klass=3)
        rt.identity_hash(obj)
        neutral = obj.header.load()
        stop = threading.Event()

        def writer(_idx: int) -> None:
            while not stop.is_set():
                rt.enter(obj)
                rt.exit(obj)

        threads = [threading.Thread(target=writer, args=(i,), daemon=True) for i in range(2)]
        for t in threads:
            t.start()
        mismatches = 0
        for _ in range(2000):
            if rt.read_header(obj) != neutral:
                mismatches += 1
        stop.set()
        for t in threads:
            t.join(timeout=30.0)
        assert mismatches == 0
        assert obj.header.load() == neutral


class TestFifoQueue:
    def test_grants_follow_swap_order(self):
        rt = MonitorRuntime("CjmFifo")
        obj = rt.new_object()
        grants: list[int] = []
        rt.enter(obj)

        def contender(idx: int) -> None:
            rt.enter(obj)
            grants.append(idx)
            rt.exit(obj)

        threads = []
        for i in range(3):
            t = threading.Thread(target=contender, args=(i,), daemon=True)
            t.start()
            threads.append(t)
            _poll(lambda n=i + 2: len(rt.impl.queue_records(rt.context(), obj)) == n)
        rt.exit(obj)
        for t in threads:
            t.join(timeout=30.0)
            assert not t.is_alive()
        assert grants == [0, 1, 2]

    def test_wait_timeout_rejoins_the_queue_under_a_holder(self):
        rt = MonitorRuntime("CjmFifo")
        obj = rt.new_object()
        outcome: list[bool] = []

        def waiter(_idx: int) -> None:
            rt.enter(obj)
            outcome.append(rt.wait(obj, timeout=0.15))
            rt.exit(obj)

        t = threading.Thread(target=waiter, args=(0,), daemon=True)
        t.start()
        _poll(lambda: obj.orphan_flag)
        rt.enter(obj)
        time.sleep(0.4)
        rt.exit(obj)
        t.join(timeout=30.0)
        assert not t.is_alive()
        assert outcome == [True]
        assert rt.records_allocated() == rt.records_free()
        assert obj.header.load() & TAG_MASK == TAG_NEUTRAL

    def test_notified_waiters_requeue_oldest_first(self):
        rt = MonitorRuntime("CjmFifo")
        obj = rt.new_object()
        woken: list[tuple[int, bool]] = []

        def waiter(idx: int) -> None:
            rt.enter(obj)
            timed_out = rt.wait(obj, timeout=30.0)
            woken.append((idx, timed_out))
            rt.exit(obj)

        threads = []
        for i in range(2):
            t = threading.Thread(target=waiter, args=(i,), daemon=True)
            t.start()
            threads.append(t)
            _poll(lambda n=i + 1: _side_table_size(rt, obj) == n)
        rt.enter(obj)
        rt.notify_all(obj)
        rt.exit(obj)
        for t in threads:
            t.join(timeout=30.0)
            assert not t.is_alive()
        assert woken == [(0, False), (1, False)]

    def test_orphaned_waiters_survive_a_neutral_header(self):
        rt = MonitorRuntime("CjmFifo")
        obj = rt.new_object()
        outcome: list[bool] = []

        def waiter(_idx: int) -> None:
            rt.enter(obj)
            outcome.append(rt.wait(obj, timeout=30.0))
            rt.exit(obj)

        t = threading.Thread(target=waiter, args=(0,), daemon=True)
        t.start()
        # the sole owner waited: queue died out, waiter parked aside
        _poll(lambda: _side_table_size(rt, obj) == 1)
        assert obj.header.load() & TAG_MASK == TAG_NEUTRAL
        assert obj.orphan_flag
        rt.enter(obj)
        rt.notify(obj)
        rt.exit(obj)
        t.join(timeout=30.0)
        assert outcome == [False]
        assert not obj.orphan_flag
        assert rt.records_allocated() == rt.records_free()

    def test_records_conserved_after_mixed_traffic(self):
        rt = MonitorRuntime("CjmFifo")
        obj = rt.new_object()

        def worker(idx: int) -> None:
            for i in range(50):
                rt.enter(obj)
                if idx == 0 and i % 5 == 0:
                    rt.notify_all(obj)
                elif idx and i % 7 == 0:
                    rt.wait(obj, timeout=0.02)
                rt.exit(obj)

        run_threads(worker, 3)
        assert rt.records_allocated() == rt.records_free()
        assert obj.header.load() & TAG_MASK == TAG_NEUTRAL


class TestBypass:
    def test_uncontended_owner_holds_no_record_and_no_queue(self):
        rt = MonitorRuntime("CjmBy")
        obj = rt.new_object()
        rt.identity_hash(obj)
        rt.enter(obj)
        # ownership lives in the outer indicator; the header stays neutral
        assert obj.outer.load() == 1
        assert obj.header.load() & TAG_MASK == TAG_NEUTRAL
        assert rt.records_allocated() == 0
        rt.exit(obj)
        assert obj.outer.load() == 0

    def test_blocked_arrival_queues_then_wins_the_indicator(self):
        rt = MonitorRuntime("CjmBy")
        obj = rt.new_object()
        order: list[str] = []
        rt.enter(obj)

        def contender(_idx: int) -> None:
            rt.enter(obj)
            order.append("contender")
            rt.exit(obj)

        t = threading.Thread(target=contender, args=(0,), daemon=True)
        t.start()
        _poll(lambda: obj.queue_head is not None)
        assert obj.header.load() & TAG_MASK == TAG_DISPLACED
        order.append("owner-releasing")
        rt.exit(obj)
        t.join(timeout=30.0)
        assert not t.is_alive()
        assert order == ["owner-releasing", "contender"]
        assert obj.header.load() & TAG_MASK == TAG_NEUTRAL
        assert obj.outer.load() == 0
        assert rt.records_allocated() == rt.records_free()

    def test_impatient_head_gets_the_indicator_handed_over(self):
        rt = MonitorRuntime("CjmBy", LockConfig(patience=1e-6))
        obj = rt.new_object()
        entered = threading.Event()
        gate = threading.Event()
        rt.enter(obj)

        def contender(_idx: int) -> None:
            rt.enter(obj)
            entered.set()
            gate.wait(timeout=30.0)
            rt.exit(obj)

        t = threading.Thread(target=contender, args=(0,), daemon=True)
        t.start()
        # the head declares impatience on its own, before any release
        _poll(lambda: obj.impatient)
        rt.exit(obj)
        # handover keeps the indicator set across the whole transfer: the
        # head is either still consuming the grant or already the owner
        assert obj.outer.load() == 1
        assert entered.wait(timeout=30.0)
        assert obj.outer.load() == 1
        gate.set()
        t.join(timeout=30.0)
        assert obj.outer.load() == 0
        assert not obj.impatient
        assert obj.header.load() & TAG_MASK == TAG_NEUTRAL
        assert rt.records_allocated() == rt.records_free()
        assert rt.impl.entry_wait_max > 0.0

    def test_wait_parks_in_the_side_table(self):
        rt = MonitorRuntime("CjmBy")
        obj = rt.new_object()
        outcome: list[bool] = []

        def waiter(_idx: int) -> None:
            rt.enter(obj)
            outcome.append(rt.wait(obj, timeout=30.0))
            rt.exit(obj)

        t = threading.Thread(target=waiter, args=(0,), daemon=True)
        t.start()
        _poll(lambda: _side_table_size(rt, obj) == 1)
        assert obj.outer.load() == 0
        rt.enter(obj)
        rt.notify(obj)
        rt.exit(obj)
        t.join(timeout=30.0)
        assert not t.is_alive()
        assert outcome == [False]
        assert _side_table_size(rt, obj) == 0
        assert rt.records_allocated() == rt.records_free()

    def test_wait_timeout_cleans_the_side_table(self):
        rt = MonitorRuntime("CjmBy")
        obj = rt.new_object()
        rt.enter(obj)
        assert rt.wait(obj, timeout=0.05)
        assert rt.holds(obj)
        rt.exit(obj)
        assert _side_table_size(rt, obj) == 0
        assert rt.records_allocated() == rt.records_free()

    def test_exclusion_with_heavy_barging(self):
        rt = MonitorRuntime("CjmBy")
        obj = rt.new_object()
        counter = [0]

        def worker(_idx: int) -> None:
            for _ in range(2000):
                rt.enter(obj)
                counter[0] += 1
                rt.exit(obj)

        run_threads(worker, 4)
        assert counter[0] == 8000
        assert obj.outer.load() == 0
        assert obj.header.load() & TAG_MASK == TAG_NEUTRAL
        assert rt.records_allocated() == rt.records_free()


class TestDisplacedUniqueness:
    def test_exactly_one_record_holds_the_header_word(self):
        rt = MonitorRuntime("CjmFifo")
        obj = rt.new_object()
        stop = threading.Event()

        def writer(_idx: int) -> None:
            while not stop.is_set():
                rt.enter(obj)
                rt.exit(obj)

        threads = [threading.Thread(target=writer, args=(i,), daemon=True) for i in range(2)]
        for t in threads:
            t.start()
        violations = 0
        for _ in range(2000):
            with obj.debug_lock:
                with records_mod._registry_lock:
                    holders = sum(
                        1
                        for r in records_mod._registry.values()
                        if r.obj is obj and r.holds_header
                    )
                live = obj.displaced_live
            if holders != (1 if live else 0):
                violations += 1
        stop.set()
        for t in threads:
            t.join(timeout=30.0)
        assert violations == 0
