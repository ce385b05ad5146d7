"""Hooks that objects under test call so the executor can interleave them.

``preempt()`` marks a point where another execution context may run.  It is
a no-op unless an executor has installed a scheduler.  ``Lock`` behaves like
``threading.Lock`` but, under the cooperative scheduler, lets other contexts
run while it is contended instead of blocking the whole process.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager

_preempt = None
_yield = None


def preempt():
    hook = _preempt
    if hook is not None:
        hook()


@contextmanager
def installed(preempt_hook, yield_hook=None):
    global _preempt, _yield
    saved = _preempt, _yield
    _preempt, _yield = preempt_hook, yield_hook
    try:
        yield
    finally:
        _preempt, _yield = saved


class Lock:
    __slots__ = ("_lock",)

    def __init__(self):
        self._lock = threading.Lock()

    def acquire(self):
        lock = self._lock
        if lock.acquire(False):
            return True
        if _yield is None:
            return lock.acquire()
        while not lock.acquire(False):
            _yield()
        return True

    def release(self):
        self._lock.release()

    def locked(self) -> bool:
        return self._lock.locked()

    def __enter__(self):
        self.acquire()
        return self

    def __exit__(self, *exc):
        self._lock.release()
