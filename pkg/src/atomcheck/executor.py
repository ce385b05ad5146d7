"""Concurrent stress testing of one harness.

Two backends run a trial's sequences concurrently:

``interleave`` (default)
    Each sequence runs in its own greenlet inside one OS thread.  A seeded
    random scheduler switches contexts before every invocation but a
    sequence's first, and wherever the object under test calls
    ``runtime.preempt()``.  Contexts persist across trials, so a trial costs
    a handful of switches and reaches 10^5 trials per second on CPython.

``threads``
    One OS thread per sequence, also persistent, released by events.  Useful
    on free-threaded interpreters; under the GIL real overlap is rare.

In both, a sequence becomes runnable once every sequence that happens before
it has finished.
"""

from __future__ import annotations

import gc
import itertools
import os
import random
import threading
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from greenlet import getcurrent, greenlet

from . import runtime
from .harness import History, sequence_slots
from .values import EXC, UNIT, encode_outcome, format_outcome

BACKENDS = ("interleave", "threads")


# lock spins without any context reaching a preemption point or finishing
MAX_SPINS = 100_000


class TrialTimeout(RuntimeError):
    """A context did not finish: deadlock or a hung object under test."""


class SutError(RuntimeError):
    pass


class SutAdapter:
    """Creates objects under test and calls their methods.

    ``fresh()`` returns a new independent instance.  ``invoke(instance, inv)``
    returns the method's value, ``()`` for void methods, and ``E`` when the
    method raises.
    """

    def __init__(self, cls, void_methods=(), name=None, family=None):
        self.cls = cls
        self.void_methods = frozenset(void_methods)
        self.name = name or cls.__name__
        self.family = family

    @classmethod
    def from_class(cls, sut_cls, spec, name=None):
        void = [n for n, m in spec.methods.items() if m.void]
        return cls(sut_cls, void, name, spec.family)

    def fresh(self):
        try:
            return self.cls()
        except Exception as e:
            raise SutError(f"cannot construct {self.name}: {e}") from e

    def resolve(self, inv):
        """``(function, args, void)`` for calling ``function(instance, *args)``."""
        fn = getattr(self.cls, inv.method, None)
        if fn is None:
            raise SutError(f"{self.name} has no method {inv.method}")
        return fn, inv.args, inv.method in self.void_methods

    def invoke(self, instance, inv):
        fn, args, void = self.resolve(inv)
        try:
            r = fn(instance, *args)
        except Exception:
            return EXC
        return UNIT if void else r

    def __repr__(self):
        return f"SutAdapter({self.name})"


@dataclass(frozen=True)
class StressBudget:
    time: float | None = 1.0
    trials: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.time is None and self.trials is None:
            raise ValueError("a stress budget needs a time limit or a trial limit")
        if (self.time is not None and self.time <= 0) or (self.trials is not None and self.trials <= 0):
            raise ValueError("stress budget must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass
class OutcomeEntry:
    outcome: tuple
    count: int
    atomic: bool


@dataclass
class OutcomeHistogram:
    entries: dict = field(default_factory=dict)  # encoded outcome -> OutcomeEntry
    trials: int = 0
    elapsed: float = 0.0
    workers: int = 1
    validation: dict | None = None

    def add(self, outcome, count, atomic):
        key = encode_outcome(outcome)
        e = self.entries.get(key)
        if e is None:
            self.entries[key] = OutcomeEntry(tuple(outcome), count, atomic)
        else:
            e.count += count

    def merge(self, other: "OutcomeHistogram"):
        for e in other.entries.values():
            self.add(e.outcome, e.count, e.atomic)
        self.trials += other.trials
        self.elapsed = max(self.elapsed, other.elapsed)
        if other.validation:
            v = self.validation = self.validation or {}
            for k, x in other.validation.items():
                v[k] = v.get(k, 0) + x

    def sorted_entries(self):
        return sorted(self.entries.values(), key=lambda e: (e.atomic, -e.count))

    @property
    def non_atomic(self):
        return [e for e in self.sorted_entries() if not e.atomic]

    @property
    def throughput(self) -> float:
        """Trials per second per worker."""
        return self.trials / self.elapsed / self.workers if self.elapsed > 0 else 0.0

    def table(self) -> str:
        rows = [(format_outcome(e.outcome), "yes" if e.atomic else "NO", e.count)
                for e in self.sorted_entries()]
        w = max([len("outcome")] + [len(r[0]) for r in rows])
        lines = [f"{'outcome':<{w}}  atomic  {'frequency':>12}"]
        lines += [f"{o:<{w}}  {a:<6}  {c:>12,}" for o, a, c in rows]
        lines.append(f"{self.trials:,} trials in {self.elapsed:.2f} s "
                     f"({self.throughput:,.0f} trials/s per worker, {self.workers} worker(s))")
        return "\n".join(lines)


@dataclass(frozen=True)
class Violation:
    outcome: tuple
    count: int

    def __str__(self):
        return f"NON-ATOMIC: {format_outcome(self.outcome)} observed {self.count} time(s)"


@dataclass(frozen=True)
class AtomicSoFar:
    def __str__(self):
        return "atomic so far"


def _order_info(h):
    n = len(h.sequences)
    preds = [sum(1 for i in range(n) if (i, j) in h.closure) for j in range(n)]
    succs = [tuple(j for j in range(n) if (i, j) in h.closure) for i in range(n)]
    return preds, succs


class _Interleaver:
    """Greenlet contexts for one harness, reused across trials."""

    def __init__(self, h, adapter: SutAdapter, seed, record=False):
        self.h = h
        self.adapter = adapter
        self.n_slots = h.num_invocations
        slots = sequence_slots(h)
        self.plans = [[(slots[i][k],) + adapter.resolve(inv) for k, inv in enumerate(seq)]
                      for i, seq in enumerate(h.sequences)]
        self.preds, self.succs = _order_info(h)
        self.initial = [j for j, p in enumerate(self.preds) if p == 0]
        self.rng = random.Random(seed)
        self.record = record
        self.inst = None
        self.out = None
        self.stamps = None
        self.runnable = []
        self.main = None
        self.contexts = []
        self.spins = 0

    def _body(self, j):
        plan = self.plans[j]
        first_step = plan[0]
        rest = plan[1:]
        preempt = self.preempt
        while True:
            inst, out = self.inst, self.out
            if self.record:
                stamps, clock = self.stamps, self.clock
                for k, (slot, fn, args, void) in enumerate(plan):
                    if k:
                        preempt()
                    stamps[2 * slot] = next(clock)
                    try:
                        r = fn(inst, *args)
                    except TrialTimeout:
                        raise
                    except Exception:
                        r = EXC
                    stamps[2 * slot + 1] = next(clock)
                    out[slot] = UNIT if void else r
            else:
                slot, fn, args, void = first_step
                try:
                    r = fn(inst, *args)
                except TrialTimeout:
                    raise
                except Exception:
                    r = EXC
                out[slot] = UNIT if void else r
                for slot, fn, args, void in rest:
                    preempt()
                    try:
                        r = fn(inst, *args)
                    except TrialTimeout:
                        raise
                    except Exception:
                        r = EXC
                    out[slot] = UNIT if void else r
            self.main.switch(j)

    def preempt(self):
        self.spins = 0
        run = self.runnable
        if len(run) > 1:
            g = self.contexts[run[int(self._random() * len(run))]]
            if g is not getcurrent():
                g.switch()

    def yield_other(self):
        """Run some other context; called while a lock is contended."""
        me = getcurrent()
        others = [self.contexts[j] for j in self.runnable if self.contexts[j] is not me]
        self.spins += 1
        if not others or self.spins > MAX_SPINS:
            raise TrialTimeout("deadlock: every runnable context waits for a lock")
        others[int(self._random() * len(others))].switch()

    def start(self):
        self.main = getcurrent()
        self._random = self.rng.random
        self.contexts = [greenlet(lambda j=j: self._body(j)) for j in range(len(self.plans))]
        if self.record:
            self.clock = itertools.count()

    def trial(self, fresh):
        self.inst = fresh()
        out = self.out = [None] * self.n_slots
        if self.record:
            self.stamps = [0] * (2 * self.n_slots)
        run = self.runnable
        run[:] = self.initial
        waiting = list(self.preds)
        succs, contexts, rand = self.succs, self.contexts, self._random
        remaining = len(contexts)
        while remaining:
            self.spins = 0
            j = contexts[run[int(rand() * len(run))]].switch()
            run.remove(j)
            remaining -= 1
            for k in succs[j]:
                waiting[k] -= 1
                if not waiting[k]:
                    run.append(k)
        return out

    def close(self):
        for g in self.contexts:
            if g:
                g.throw(greenlet.GreenletExit)
        self.contexts = []


class _Threads:
    """One persistent OS thread per sequence."""

    def __init__(self, h, adapter: SutAdapter, seed, record=False, timeout=10.0):
        self.h = h
        self.n_slots = h.num_invocations
        slots = sequence_slots(h)
        self.plans = [[(slots[i][k],) + adapter.resolve(inv) for k, inv in enumerate(seq)]
                      for i, seq in enumerate(h.sequences)]
        self.preds, self.succs = _order_info(h)
        self.record = record
        self.timeout = timeout
        self.lock = threading.Lock()
        self.go = [threading.Event() for _ in self.plans]
        self.done = threading.Event()
        self.stop = False
        self.clock = itertools.count()

    def _worker(self, j):
        plan = self.plans[j]
        go = self.go[j]
        clock = self.clock
        while True:
            go.wait()
            go.clear()
            if self.stop:
                return
            inst, out, stamps = self.inst, self.out, self.stamps
            for k, (slot, fn, args, void) in enumerate(plan):
                if k:
                    time.sleep(0)
                if stamps is not None:
                    stamps[2 * slot] = next(clock)
                try:
                    r = fn(inst, *args)
                except TrialTimeout:
                    raise
                except Exception:
                    r = EXC
                if stamps is not None:
                    stamps[2 * slot + 1] = next(clock)
                out[slot] = UNIT if void else r
            with self.lock:
                self.remaining -= 1
                ready = []
                for k in self.succs[j]:
                    self.waiting[k] -= 1
                    if not self.waiting[k]:
                        ready.append(k)
                last = self.remaining == 0
            for k in ready:
                self.go[k].set()
            if last:
                self.done.set()

    def start(self):
        self.threads = [threading.Thread(target=self._worker, args=(j,), daemon=True)
                        for j in range(len(self.plans))]
        for t in self.threads:
            t.start()

    def trial(self, fresh):
        self.inst = fresh()
        out = self.out = [None] * self.n_slots
        self.stamps = [0] * (2 * self.n_slots) if self.record else None
        self.waiting = list(self.preds)
        self.remaining = len(self.plans)
        self.done.clear()
        for j, p in enumerate(self.preds):
            if p == 0:
                self.go[j].set()
        if not self.done.wait(self.timeout):
            self.stop = True
            raise TrialTimeout(f"trial did not finish within {self.timeout} s")
        return out

    def close(self):
        self.stop = True
        for e in self.go:
            e.set()


def _runner(backend, h, adapter, seed, record):
    if backend == "interleave":
        return _Interleaver(h, adapter, seed, record)
    if backend == "threads":
        return _Threads(h, adapter, seed, record)
    raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")


def _hooks(backend, runner):
    if backend == "interleave":
        return runtime.installed(runner.preempt, runner.yield_other)
    return runtime.installed(lambda: time.sleep(0))


def run_trial(h, sut: SutAdapter, backend: str = "interleave", seed=None) -> tuple:
    """One concurrent execution of ``h`` on a fresh instance; returns its outcome."""
    runner = _runner(backend, h, sut, seed, False)
    runner.start()
    try:
        with _hooks(backend, runner):
            return tuple(runner.trial(sut.fresh))
    finally:
        runner.close()


def _history(h, outcome, stamps) -> History:
    n = len(outcome)
    hb = frozenset((a, b) for a in range(n) for b in range(n)
                   if a != b and stamps[2 * a + 1] < stamps[2 * b])
    return History(h, tuple(outcome), hb)


def record_history_trial(h, sut: SutAdapter, backend: str = "interleave", seed=None) -> History:
    """One trial with call/return stamps: ``a`` happens before ``b`` iff ``a``
    returned before ``b`` was called."""
    runner = _runner(backend, h, sut, seed, True)
    runner.start()
    try:
        with _hooks(backend, runner):
            out = runner.trial(sut.fresh)
        return _history(h, out, runner.stamps)
    finally:
        runner.close()


def _stress_local(h, sut, atomic, budget: StressBudget, seed, fail_fast, backend, validate, spec):
    """Single-process stress loop; returns an OutcomeHistogram."""
    from .lincheck import is_linearizable

    runner = _runner(backend, h, sut, seed, validate)
    counts = {}
    flags = {}
    checked = {}
    vstats = {"histories": 0, "linearizable": 0, "counterexamples": 0} if validate else None
    limit = budget.trials
    deadline = None if budget.time is None else time.perf_counter() + budget.time
    fresh = sut.fresh
    trial = runner.trial
    n = 0
    stop = False
    t0 = time.perf_counter()
    runner.start()
    # trials allocate no reference cycles; a collection pass over a large
    # host heap would dominate the loop
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        with _hooks(backend, runner):
            while not stop:
                batch = 256 if limit is None else min(256, limit - n)
                for _ in range(batch):
                    o = tuple(trial(fresh))
                    n += 1
                    c = counts.get(o)
                    if c is None:
                        counts[o] = 1
                        ok = flags[o] = o in atomic
                        if not ok and fail_fast:
                            stop = True
                    else:
                        counts[o] = c + 1
                    if validate:
                        key = (o, tuple(runner.stamps))
                        lin = checked.get(key)
                        if lin is None:
                            lin = checked[key] = is_linearizable(_history(h, o, runner.stamps), spec)
                        vstats["histories"] += 1
                        if lin:
                            vstats["linearizable"] += 1
                            if not flags[o]:
                                vstats["counterexamples"] += 1
                    if stop:
                        break
                if (limit is not None and n >= limit) or (deadline is not None and time.perf_counter() >= deadline):
                    break
    finally:
        if gc_was_enabled:
            gc.enable()
        runner.close()
    hist = OutcomeHistogram(elapsed=time.perf_counter() - t0, validation=vstats)
    for o, c in counts.items():
        hist.add(o, c, flags[o])
    hist.trials = n
    return hist


def _worker_entry(args):
    h, sut, budget, seed, fail_fast, backend, validate, spec = args
    from .oracle import atomic_outcomes
    return _stress_local(h, sut, atomic_outcomes(h, spec), budget, seed, fail_fast, backend, validate, spec)


def stress(h, sut: SutAdapter, spec, budget: StressBudget = StressBudget(), seed: int = 0,
           fail_fast: bool = False, backend: str = "interleave", validate: bool = False,
           atomic=None, pool=None):
    """Stress ``h`` and return ``(OutcomeHistogram, verdict)``.

    With several workers each process runs its own stress loop for the same
    budget (trial limits are split between them) and the histograms are
    merged.  ``validate`` also checks every recorded history for
    linearizability and counts linearizable histories whose outcome is not
    in the atomic set (there should be none).
    """
    from .oracle import atomic_outcomes

    spec.validate_harness(h)
    if atomic is None:
        atomic = atomic_outcomes(h, spec)
    workers = budget.workers
    if workers == 1:
        hist = _stress_local(h, sut, atomic, budget, seed, fail_fast, backend, validate, spec)
    else:
        per = None if budget.trials is None else -(-budget.trials // workers)
        sub = StressBudget(budget.time, per, 1)
        jobs = [(h, sut, sub, seed * 7919 + w, fail_fast, backend, validate, spec) for w in range(workers)]
        t0 = time.perf_counter()
        own = pool or ProcessPoolExecutor(workers)
        try:
            hist = OutcomeHistogram()
            for part in own.map(_worker_entry, jobs):
                hist.merge(part)
        finally:
            if pool is None:
                own.shutdown()
        hist.elapsed = time.perf_counter() - t0
        hist.workers = workers
    bad = hist.non_atomic
    verdict = Violation(bad[0].outcome, bad[0].count) if bad else AtomicSoFar()
    return hist, verdict


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
