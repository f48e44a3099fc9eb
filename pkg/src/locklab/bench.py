"""Contention benchmark with a replayable mutual-exclusion oracle.

Worker threads repeatedly pick a lockset (sampled without replacement,
acquired in ascending address order), step a shared generator csl times
inside the critical section, release in reverse order, and burn a
thread-local uniform [0, 2*ncsl) draws outside. The shared generator is
the oracle: stepping it is a deliberately order-sensitive compound (a
step counter and a fold accumulator around the 32-bit draw), so any two
critical sections that interleave leave a final state no serial
execution can produce. After a run, replaying the seed forward by
total_iterations * csl steps single-threaded must reproduce generator
state, step count, and accumulator bit for bit.

Throughput is reported as a median over samples (odd counts take the
middle order statistic; even counts take the lower middle). Per-thread
iteration counts and the max/min fairness ratio come from the median
sample. Timing checks sit off the hot path: workers consult the clock
flag once every 64 iterations.

BrokenLockRuntime deliberately provides no exclusion; it exists to
demonstrate that the oracle actually fails when exclusion fails.
"""

from __future__ import annotations

import contextlib
import csv as _csv
import random
import sys
import threading
import time
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Iterator, Optional, Sequence

from .atomics import MASK64
from .monitor import LockConfig, MonitorAlgo, MonitorRuntime

__all__ = [
    "BenchConfig",
    "BenchResult",
    "SharedStepper",
    "fine_scheduling",
    "replay_state",
    "run_bench",
    "measure_latency",
    "run_cell",
    "write_csv",
    "CSV_FIELDS",
    "BrokenLockRuntime",
]

_FOLD_PRIME = 0x100000001B3
_GOLDEN = 0x9E3779B97F4A7C15

# The interpreter's default 5 ms switch interval quantizes every handoff
# between threads to multi-millisecond granularity, which swamps what a
# contention benchmark is trying to observe. Runs happen under a finer
# interval, restored afterwards.
_SWITCH_INTERVAL_S = 1e-4


@contextlib.contextmanager
def fine_scheduling(interval: float = _SWITCH_INTERVAL_S) -> Iterator[None]:
    previous = sys.getswitchinterval()
    sys.setswitchinterval(interval)
    try:
        yield
    finally:
        sys.setswitchinterval(previous)

CSV_FIELDS = [
    "algo",
    "threads",
    "locks",
    "na",
    "csl",
    "ncsl",
    "duration_s",
    "samples",
    "median_thruput",
    "min_thread_iters",
    "max_thread_iters",
    "fairness_ratio",
    "exclusion_ok",
    "latency_ns",
]


def _mix64(x: int) -> int:
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


class SharedStepper:
    """The shared in-critical-section generator plus tamper evidence.

    steps and check are read-modify-write against instance attributes,
    so concurrent steps that are not mutually excluded can interleave
    and produce a (state, steps, check) triple that no serial replay
    matches. One step consumes exactly one 32-bit draw.
    """

    __slots__ = ("_rng", "steps", "check")

    def __init__(self, seed: int) -> None:
        self._rng = random.Random(seed)
        self.steps = 0
        self.check = 0

    def step(self) -> None:
        n = self.steps
        v = self._rng.getrandbits(32)
        self.check = (self.check * _FOLD_PRIME + (n ^ v)) & MASK64
        self.steps = n + 1

    def state(self) -> tuple:
        return (self._rng.getstate(), self.steps, self.check)


def replay_state(seed: int, nsteps: int) -> tuple:
    """Single-threaded replay of nsteps from seed; the serial truth."""
    rng = random.Random(seed)
    getbits = rng.getrandbits
    check = 0
    for n in range(nsteps):
        v = getbits(32)
        check = (check * _FOLD_PRIME + (n ^ v)) & MASK64
    return (rng.getstate(), nsteps, check)


@dataclass(frozen=True)
class BenchConfig:
    algo: str = "HashChains"
    threads: int = 4
    locks: int = 1
    acquire: int = 1
    csl: int = 5
    ncsl: int = 0
    duration: float = 10.0
    seed: int = 0xBE5EED
    max_iterations: Optional[int] = None
    payload: int = 64
    lock_config: Optional[LockConfig] = None
    trace: int = 0

    def __post_init__(self) -> None:
        if self.acquire < 1 or self.acquire > self.locks:
            raise ValueError("acquire must be between 1 and locks")
        if self.threads < 1:
            raise ValueError("threads must be positive")


@dataclass
class BenchResult:
    config: BenchConfig
    per_thread: list[int]
    elapsed: float
    exclusion_ok: bool
    traces: list[list[tuple]] = field(default_factory=list)

    @property
    def total_iterations(self) -> int:
        return sum(self.per_thread)

    @property
    def throughput(self) -> float:
        return self.total_iterations / self.elapsed if self.elapsed > 0 else 0.0

    @property
    def fairness_ratio(self) -> float:
        lo, hi = min(self.per_thread), max(self.per_thread)
        return hi / lo if lo > 0 else float("inf")


def run_bench(config: BenchConfig, runtime: Optional[MonitorRuntime] = None) -> BenchResult:
    if runtime is None:
        runtime = MonitorRuntime(MonitorAlgo(config.algo), config.lock_config)
    objs = [runtime.new_object(payload=config.payload) for _ in range(config.locks)]
    addr_of = [o.addr for o in objs]
    stepper = SharedStepper(config.seed)
    stop = threading.Event()
    barrier = threading.Barrier(config.threads + 1)
    per_thread = [0] * config.threads
    traces: list[list[tuple]] = [[] for _ in range(config.threads)]
    errors: list[BaseException] = []

    nlocks = config.locks
    nacquire = config.acquire
    csl = config.csl
    ncsl = config.ncsl
    max_iters = config.max_iterations
    step = stepper.step

    def worker(idx: int) -> None:
        rng = random.Random(_mix64(config.seed + (idx + 1) * _GOLDEN))
        iters = 0
        trace = traces[idx]
        want_trace = config.trace
        try:
            barrier.wait()
            while True:
                if (iters & 63) == 0 and stop.is_set():
                    break
                if max_iters is not None and iters >= max_iters:
                    break
                if nlocks > 1:
                    picks = rng.sample(range(nlocks), nacquire)
                    picks.sort(key=addr_of.__getitem__)
                else:
                    picks = (0,)
                if want_trace and len(trace) < want_trace:
                    trace.append(tuple(picks))
                for i in picks:
                    runtime.enter(objs[i])
                for _ in range(csl):
                    step()
                for i in reversed(picks):
                    runtime.exit(objs[i])
                if ncsl:
                    for _ in range(rng.randrange(2 * ncsl)):
                        rng.getrandbits(32)
                iters += 1
        except BaseException as exc:
            errors.append(exc)
            stop.set()
        finally:
            per_thread[idx] = iters

    threads = [
        threading.Thread(target=worker, args=(i,), name=f"bench-{i}", daemon=True)
        for i in range(config.threads)
    ]
    with fine_scheduling():
        for t in threads:
            t.start()
        barrier.wait(timeout=60.0)
        t0 = time.perf_counter()
        if max_iters is None:
            stop.wait(config.duration)
            stop.set()
        for t in threads:
            t.join(timeout=max(60.0, config.duration * 20))
            if t.is_alive():
                stop.set()
                raise RuntimeError(f"bench worker {t.name} failed to stop")
        elapsed = time.perf_counter() - t0
    if errors:
        raise errors[0]

    expected = replay_state(config.seed, sum(per_thread) * csl)
    ok = stepper.state() == expected
    return BenchResult(
        config=config,
        per_thread=per_thread,
        elapsed=elapsed,
        exclusion_ok=ok,
        traces=traces if config.trace else [],
    )


def measure_latency(
    algo: MonitorAlgo | str,
    pairs: int = 20000,
    warmup: int = 2000,
    lock_config: Optional[LockConfig] = None,
) -> dict:
    """Uncontended enter/exit pair latency on one thread, in nanoseconds."""
    runtime = MonitorRuntime(MonitorAlgo(algo) if isinstance(algo, str) else algo, lock_config)
    obj = runtime.new_object()
    enter, exit_, clock = runtime.enter, runtime.exit, time.perf_counter_ns
    for _ in range(warmup):
        enter(obj)
        exit_(obj)
    samples = []
    for _ in range(pairs):
        a = clock()
        enter(obj)
        exit_(obj)
        samples.append(clock() - a)
    samples.sort()
    return {
        "p50_ns": samples[(len(samples) - 1) // 2],
        "mean_ns": sum(samples) / len(samples),
    }


def _median_sample(samples: Sequence[BenchResult]) -> BenchResult:
    ranked = sorted(samples, key=lambda r: r.throughput)
    return ranked[(len(ranked) - 1) // 2]


def run_cell(
    base: BenchConfig,
    subruns: int,
    repeats: int = 1,
    latency: bool = False,
) -> dict:
    """One CSV row: subruns x repeats samples of one (algo, threads) cell."""
    samples = []
    for rep in range(repeats):
        for sub in range(subruns):
            seed = _mix64(base.seed ^ ((rep * subruns + sub + 1) * _GOLDEN))
            samples.append(run_bench(replace(base, seed=seed)))
    med = _median_sample(samples)
    latency_ns = ""
    if latency:
        latency_ns = measure_latency(base.algo, lock_config=base.lock_config)["p50_ns"]
    return {
        "algo": MonitorAlgo(base.algo).value,
        "threads": base.threads,
        "locks": base.locks,
        "na": base.acquire,
        "csl": base.csl,
        "ncsl": base.ncsl,
        "duration_s": base.duration,
        "samples": len(samples),
        "median_thruput": med.throughput,
        "min_thread_iters": min(med.per_thread),
        "max_thread_iters": max(med.per_thread),
        "fairness_ratio": med.fairness_ratio,
        "exclusion_ok": all(s.exclusion_ok for s in samples),
        "latency_ns": latency_ns,
    }


def write_csv(rows: Iterable[dict], out: IO[str]) -> None:
    writer = _csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


class BrokenLockRuntime(MonitorRuntime):
    """Monitor whose enter and exit do nothing. Exists so tests can show
    the exclusion oracle rejecting a lock that excludes nothing."""

    def __init__(self, config: Optional[LockConfig] = None) -> None:
        super().__init__(MonitorAlgo.NATIVE, config)

    def enter(self, obj) -> None:
        pass

    def exit(self, obj) -> None:
        pass
