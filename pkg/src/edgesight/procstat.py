"""Per-process CPU and memory sampling straight from /proc.

No external profiler: CPU time comes from utime+stime in /proc/<pid>/stat
and resident memory from /proc/<pid>/statm. CPU percent is the growth of
process CPU time between consecutive samples over the wall-clock interval,
so it can exceed 100 on multi-core work.
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field

from .errors import ConfigError, InputError

_CLOCK_TICKS = os.sysconf("SC_CLK_TCK")
_PAGE_SIZE = os.sysconf("SC_PAGE_SIZE")
MB = 1024 * 1024


@dataclass(frozen=True)
class StatSample:
    timestamp: float  # seconds, monotonic
    cpu_percent: float
    rss_mb: float


@dataclass
class StatSeries:
    pid: int
    period_ms: float
    samples: list[StatSample] = field(default_factory=list)
    partial: bool = False  # process exited mid-run

    @property
    def cpu_avg(self) -> float:
        if not self.samples:
            return 0.0
        return sum(s.cpu_percent for s in self.samples) / len(self.samples)

    @property
    def mem_peak_mb(self) -> float:
        if not self.samples:
            return 0.0
        return max(s.rss_mb for s in self.samples)

    @property
    def mem_baseline_mb(self) -> float:
        if not self.samples:
            return 0.0
        return min(s.rss_mb for s in self.samples)


def read_cpu_seconds(pid: int) -> float:
    """utime+stime of the process, in seconds."""
    with open(f"/proc/{pid}/stat", "rb") as fh:
        data = fh.read().decode("ascii", "replace")
    # field 2 is the command in parentheses and may contain spaces
    rest = data[data.rindex(")") + 2:].split()
    utime, stime = int(rest[11]), int(rest[12])
    return (utime + stime) / _CLOCK_TICKS


def read_rss_mb(pid: int) -> float:
    with open(f"/proc/{pid}/statm", "rb") as fh:
        pages = int(fh.read().split()[1])
    return pages * _PAGE_SIZE / MB


class ProcessSampler:
    """Background thread appending one StatSample per period.

    Single writer, so readers may consume `series.samples` after `stop()`
    without locking. If the watched process exits the series ends cleanly
    with its `partial` flag set.
    """

    def __init__(self, pid: int | None = None, period_ms: float = 100.0):
        if period_ms <= 0:
            raise ConfigError(f"period must be positive, got {period_ms}")
        self.pid = os.getpid() if pid is None else pid
        self.period_s = period_ms / 1000.0
        self.series = StatSeries(self.pid, period_ms)
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def _run(self):
        last_cpu = None
        last_t = None
        next_due = time.monotonic()
        while not self._stop.is_set():
            now = time.monotonic()
            try:
                cpu = read_cpu_seconds(self.pid)
                rss = read_rss_mb(self.pid)
            except (FileNotFoundError, ProcessLookupError):
                self.series.partial = True
                return
            if last_cpu is None:
                pct = 0.0
            else:
                dt = now - last_t
                pct = 100.0 * (cpu - last_cpu) / dt if dt > 0 else 0.0
            self.series.samples.append(StatSample(now, pct, rss))
            last_cpu, last_t = cpu, now
            next_due += self.period_s
            delay = next_due - time.monotonic()
            if delay > 0:
                self._stop.wait(delay)
            else:
                next_due = time.monotonic()

    def start(self) -> "ProcessSampler":
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> StatSeries:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        return self.series


def sample_process_stats(pid: int | None = None, period_ms: float = 100.0,
                         duration_s: float = 1.0) -> StatSeries:
    """Blocking convenience wrapper: sample for `duration_s`, return the series."""
    if duration_s <= 0:
        raise InputError(f"duration must be positive, got {duration_s}")
    sampler = ProcessSampler(pid, period_ms).start()
    time.sleep(duration_s)
    return sampler.stop()
