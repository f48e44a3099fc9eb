"""User-space monitor algorithms over an emulated 64-bit object header.

Three synchronization designs behind one facade: a header-free monitor
whose state lives entirely in hashed chains of lock records, a
three-flag variant whose chains hold only waiters, and a queue monitor
that displaces the header word itself. A native mutex-per-object
baseline and a contention benchmark with a replayable exclusion oracle
round out the package.
"""

from .bench import BenchConfig, BenchResult, measure_latency, run_bench, run_cell
from .header import HeaderDecodeError, SyncObject
from .monitor import (
    IllegalMonitorStateError,
    LockConfig,
    MonitorAlgo,
    MonitorError,
    MonitorRuntime,
)

__all__ = [
    "BenchConfig",
    "BenchResult",
    "HeaderDecodeError",
    "IllegalMonitorStateError",
    "LockConfig",
    "MonitorAlgo",
    "MonitorError",
    "MonitorRuntime",
    "SyncObject",
    "measure_latency",
    "run_bench",
    "run_cell",
]

__version__ = "0.1.0"
