"""Concurrent objects under test.

The ``locked-*`` objects run every method under one object-wide lock and are
atomic by construction.  The other entries each carry one deliberate
atomicity bug.  Bug windows are marked with ``runtime.preempt()``, the point
where a concurrent context may slip in; no lock is held across a window.
"""

from __future__ import annotations

import bisect
import random
import threading
from collections import deque
from dataclasses import dataclass

from . import runtime
from .adt import random_invocation, spec_for
from .executor import SutAdapter
from .harness import format_sequence
from .values import format_value, same_value

preempt = runtime.preempt


# -- atomic references -----------------------------------------------------------

class LockedMap:
    __slots__ = ("_d", "_lock")

    def __init__(self):
        self._d = {}
        self._lock = threading.Lock()

    def put(self, k, v):
        with self._lock:
            d = self._d
            old = d.get(k)
            d[k] = v
            return old

    def get(self, k):
        with self._lock:
            return self._d.get(k)

    def remove(self, k):
        with self._lock:
            return self._d.pop(k, None)

    def containsKey(self, k):
        with self._lock:
            return k in self._d

    def containsValue(self, v):
        with self._lock:
            return v in self._d.values()

    def clear(self):
        with self._lock:
            self._d.clear()

    def putAll(self, m):
        with self._lock:
            self._d.update(m)

    def size(self):
        with self._lock:
            return len(self._d)

    def isEmpty(self):
        with self._lock:
            return not self._d


class LockedQueue:
    __slots__ = ("_q", "_lock")

    def __init__(self):
        self._q = deque()
        self._lock = threading.Lock()

    def offer(self, x):
        with self._lock:
            self._q.append(x)
            return True

    def poll(self):
        with self._lock:
            return self._q.popleft() if self._q else None

    def peek(self):
        with self._lock:
            return self._q[0] if self._q else None

    def clear(self):
        with self._lock:
            self._q.clear()

    def addAll(self, c):
        with self._lock:
            self._q.extend(c)
            return len(c) > 0

    def removeAll(self, c):
        with self._lock:
            kept = [x for x in self._q if x not in c]
            changed = len(kept) != len(self._q)
            self._q = deque(kept)
            return changed

    def contains(self, x):
        with self._lock:
            return x in self._q

    def containsAll(self, c):
        with self._lock:
            return all(x in self._q for x in c)

    def size(self):
        with self._lock:
            return len(self._q)

    def isEmpty(self):
        with self._lock:
            return not self._q

    def toArray(self):
        with self._lock:
            return tuple(self._q)


class LockedDeque(LockedQueue):
    __slots__ = ()

    def offerFirst(self, x):
        with self._lock:
            self._q.appendleft(x)
            return True

    offerLast = LockedQueue.offer
    pollFirst = LockedQueue.poll
    peekFirst = LockedQueue.peek

    def pollLast(self):
        with self._lock:
            return self._q.pop() if self._q else None

    def peekLast(self):
        with self._lock:
            return self._q[-1] if self._q else None


class LockedSet:
    __slots__ = ("_s", "_lock")

    def __init__(self):
        self._s = []
        self._lock = threading.Lock()

    def add(self, x):
        with self._lock:
            s = self._s
            i = bisect.bisect_left(s, x)
            if i < len(s) and s[i] == x:
                return False
            s.insert(i, x)
            return True

    def remove(self, x):
        with self._lock:
            s = self._s
            i = bisect.bisect_left(s, x)
            if i < len(s) and s[i] == x:
                del s[i]
                return True
            return False

    def contains(self, x):
        with self._lock:
            s = self._s
            i = bisect.bisect_left(s, x)
            return i < len(s) and s[i] == x

    def clear(self):
        with self._lock:
            self._s.clear()

    def size(self):
        with self._lock:
            return len(self._s)

    def isEmpty(self):
        with self._lock:
            return not self._s

    def headSet(self, j):
        with self._lock:
            s = self._s
            return tuple(s[: bisect.bisect_left(s, j)])

    def subSet(self, i, j):
        if i > j:
            raise ValueError("fromKey > toKey")
        with self._lock:
            s = self._s
            return tuple(s[bisect.bisect_left(s, i): bisect.bisect_left(s, j)])


# -- seeded bugs -------------------------------------------------------------------

class NonAtomicClearMap(LockedMap):
    """``clear`` removes keys one at a time, then drops the table; the next
    ``put`` re-creates the table without synchronization, so two racing
    first puts can lose one of their entries."""

    __slots__ = ()

    def put(self, k, v):
        t = self._d
        if t is None:
            t = {}
            preempt()
            t[k] = v
            self._d = t
            return None
        with self._lock:
            old = t.get(k)
            t[k] = v
            return old

    def get(self, k):
        t = self._d
        if t is None:
            return None
        with self._lock:
            return t.get(k)

    def remove(self, k):
        t = self._d
        if t is None:
            return None
        with self._lock:
            return t.pop(k, None)

    def containsKey(self, k):
        t = self._d
        if t is None:
            return False
        with self._lock:
            return k in t

    def containsValue(self, v):
        t = self._d
        if t is None:
            return False
        with self._lock:
            return v in t.values()

    def clear(self):
        t = self._d
        if t is None:
            return
        for k in list(t):
            with self._lock:
                t.pop(k, None)
            preempt()
        self._d = None

    def putAll(self, m):
        for k, v in m:
            self.put(k, v)

    def size(self):
        t = self._d
        if t is None:
            return 0
        with self._lock:
            return len(t)

    def isEmpty(self):
        return self.size() == 0


class NonAtomicSizeMap:
    """Keys live in separately locked buckets; ``size``, ``isEmpty`` and
    ``containsValue`` visit the buckets one after another."""

    __slots__ = ("_buckets", "_locks")
    BUCKETS = 4

    def __init__(self):
        self._buckets = [{} for _ in range(self.BUCKETS)]
        self._locks = [threading.Lock() for _ in range(self.BUCKETS)]

    def put(self, k, v):
        i = k % self.BUCKETS
        with self._locks[i]:
            b = self._buckets[i]
            old = b.get(k)
            b[k] = v
            return old

    def get(self, k):
        i = k % self.BUCKETS
        with self._locks[i]:
            return self._buckets[i].get(k)

    def remove(self, k):
        i = k % self.BUCKETS
        with self._locks[i]:
            return self._buckets[i].pop(k, None)

    def containsKey(self, k):
        i = k % self.BUCKETS
        with self._locks[i]:
            return k in self._buckets[i]

    def _all_locked(self):
        for lock in self._locks:
            lock.acquire()

    def _unlock_all(self):
        for lock in reversed(self._locks):
            lock.release()

    def clear(self):
        self._all_locked()
        try:
            for b in self._buckets:
                b.clear()
        finally:
            self._unlock_all()

    def putAll(self, m):
        self._all_locked()
        try:
            for k, v in m:
                self._buckets[k % self.BUCKETS][k] = v
        finally:
            self._unlock_all()

    def size(self):
        n = 0
        for i, b in enumerate(self._buckets):
            if i:
                preempt()
            with self._locks[i]:
                n += len(b)
        return n

    def isEmpty(self):
        for i, b in enumerate(self._buckets):
            if i:
                preempt()
            with self._locks[i]:
                if b:
                    return False
        return True

    def containsValue(self, v):
        for i, b in enumerate(self._buckets):
            if i:
                preempt()
            with self._locks[i]:
                if v in b.values():
                    return True
        return False


class NonAtomicPutAllMap(LockedMap):
    """``putAll`` is a loop of independent ``put`` calls."""

    __slots__ = ()

    def putAll(self, m):
        for i, (k, v) in enumerate(m):
            if i:
                preempt()
            self.put(k, v)


class NonAtomicContainsAllQueue(LockedQueue):
    """``containsAll`` checks its argument's members one at a time."""

    __slots__ = ()

    def containsAll(self, c):
        for i, x in enumerate(c):
            if i:
                preempt()
            with self._lock:
                if x not in self._q:
                    return False
        return True


class NonAtomicPollLastDeque(LockedDeque):
    """``pollLast`` reads the tail, releases the lock, then removes whatever
    is last by then and returns the value it read first."""

    __slots__ = ()

    def pollLast(self):
        with self._lock:
            if not self._q:
                return None
            x = self._q[-1]
        preempt()
        with self._lock:
            if self._q:
                self._q.pop()
        return x


# -- registry ------------------------------------------------------------------------

@dataclass(frozen=True)
class SutInfo:
    name: str
    family: str
    cls: type
    expected_atomic: bool
    description: str
    buggy_method: str | None = None

    def adapter(self, spec=None) -> SutAdapter:
        return SutAdapter.from_class(self.cls, spec or spec_for(self.family), self.name)


_REGISTRY = {
    s.name: s for s in [
        SutInfo("locked-map", "OrderedMap", LockedMap, True, "every method under one lock"),
        SutInfo("locked-queue", "FifoQueue", LockedQueue, True, "every method under one lock"),
        SutInfo("locked-deque", "Deque", LockedDeque, True, "every method under one lock"),
        SutInfo("locked-set", "OrderedSet", LockedSet, True, "every method under one lock"),
        SutInfo("map-nonatomic-clear", "OrderedMap", NonAtomicClearMap, False,
                "clear removes keys one by one, then racy lazy re-initialization", "clear"),
        SutInfo("map-nonatomic-size", "OrderedMap", NonAtomicSizeMap, False,
                "size/isEmpty/containsValue scan striped buckets without a global lock", "size"),
        SutInfo("map-nonatomic-putall", "OrderedMap", NonAtomicPutAllMap, False,
                "putAll is a loop of independent puts", "putAll"),
        SutInfo("queue-nonatomic-containsall", "FifoQueue", NonAtomicContainsAllQueue, False,
                "containsAll checks members one by one", "containsAll"),
        SutInfo("deque-nonatomic-pollLast", "Deque", NonAtomicPollLastDeque, False,
                "pollLast removes the tail after a stale read", "pollLast"),
    ]
}


def builtin_suts() -> dict:
    return dict(_REGISTRY)


def get_sut(name: str) -> SutInfo:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown SUT {name!r}; choose from {sorted(_REGISTRY)}") from None


# -- sequential conformance ----------------------------------------------------------

class ConformanceError(AssertionError):
    def __init__(self, witness, expected, actual):
        self.witness = witness
        self.expected = expected
        self.actual = actual
        super().__init__(f"diverges on {format_sequence(witness)}: "
                         f"expected {format_value(expected)}, got {format_value(actual)}")


def _replay(sut: SutAdapter, spec, invs):
    inst, state = sut.fresh(), spec.new_state()
    for k, inv in enumerate(invs):
        got = sut.invoke(inst, inv)
        state, want = spec.apply(state, inv)
        if not same_value(got, want):
            return k, want, got
    return None


def _minimize(sut, spec, invs):
    k, _, _ = _replay(sut, spec, invs)
    invs = list(invs[: k + 1])
    i = 0
    while i < len(invs) - 1:
        cand = invs[:i] + invs[i + 1:]
        if _replay(sut, spec, cand) is not None:
            invs = cand
        else:
            i += 1
    return invs


def find_divergence(sut: SutAdapter, spec, trials: int = 1000, max_length: int = 20, val: int = 3, seed: int = 0):
    """A minimal invocation sequence on which ``sut`` and ``spec`` disagree, or None."""
    rng = random.Random(seed)
    for _ in range(trials):
        invs = [random_invocation(spec, rng, val) for _ in range(rng.randint(1, max_length))]
        if _replay(sut, spec, invs) is not None:
            w = _minimize(sut, spec, invs)
            _, want, got = _replay(sut, spec, w)
            return tuple(w), want, got
    return None


def sequential_conformance(sut: SutAdapter, spec, trials: int = 1000, max_length: int = 20,
                           seed: int = 0, strict: bool = False) -> bool:
    """Random single-context replays agree with ``spec``; with ``strict`` a
    divergence raises ConformanceError carrying a minimized witness."""
    d = find_divergence(sut, spec, trials, max_length, seed=seed)
    if d is not None and strict:
        raise ConformanceError(*d)
    return d is None
