"""Process-wide implicit multithreading (IMT) switch.

Reader and writer options take their defaults from here, so flipping the
switch changes how work is scheduled but never what is returned.
"""

from __future__ import annotations

import os
import threading

_lock = threading.Lock()
_enabled = False
_threads: int | None = None


def hardware_threads() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # not on Linux
        return os.cpu_count() or 1


def enable_imt(thread_count: int | None = None) -> None:
    global _enabled, _threads
    if thread_count is not None and thread_count < 1:
        raise ValueError("thread_count must be positive")
    with _lock:
        _enabled = True
        _threads = thread_count


def disable_imt() -> None:
    global _enabled
    with _lock:
        _enabled = False


def imt_enabled() -> bool:
    return _enabled


def imt_thread_count() -> int:
    return _threads or hardware_threads()
