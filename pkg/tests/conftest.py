"""Shared test helpers: the algorithm grids and a thread runner that
propagates worker failures into the test instead of swallowing them."""

from __future__ import annotations

import threading
import time

from locklab.monitor import MonitorAlgo

ALL_ALGOS = [
    MonitorAlgo.HASH_CHAINS,
    MonitorAlgo.HASH_CHAINS_FAST,
    MonitorAlgo.HASH_CHAINS_3,
    MonitorAlgo.CJM_FIFO,
    MonitorAlgo.CJM_BY,
    MonitorAlgo.NATIVE,
]

# algorithms with their own lock records and bucket machinery
USER_ALGOS = [a for a in ALL_ALGOS if a is not MonitorAlgo.NATIVE]


def run_threads(target, count: int, timeout: float = 180.0) -> None:
    """Run target(idx) in count threads and join them all.

    The first exception raised by any worker is re-raised here; a worker
    that outlives the timeout raises instead of hanging the suite.
    """
    errors: list[BaseException] = []

    def shim(idx: int) -> None:
        try:
            target(idx)
        except BaseException as exc:
            errors.append(exc)

    threads = [
        threading.Thread(target=shim, args=(i,), name=f"worker-{i}", daemon=True)
        for i in range(count)
    ]
    for t in threads:
        t.start()
    deadline = time.monotonic() + timeout
    for t in threads:
        t.join(max(0.0, deadline - time.monotonic()))
    alive = [t.name for t in threads if t.is_alive()]
    if alive:
        raise TimeoutError(f"workers still running after {timeout}s: {alive}")
    if errors:
        raise errors[0]
