import threading

import pytest

from atomcheck import runtime
from atomcheck.executor import (AtomicSoFar, OutcomeHistogram, StressBudget, SutAdapter, TrialTimeout, Violation,
                                record_history_trial, run_trial, stress)
from atomcheck.harness import invocation_order, parse_harness
from atomcheck.oracle import atomic_outcomes
from atomcheck.suts import get_sut
from atomcheck.values import EXC, UNIT
from strategies import H1, H4, MAP, PUTALL

LOCKED = get_sut("locked-map").adapter()


def test_single_sequence_replays_spec():
    h = parse_harness("[put(0,0); put(0,1); get(0); clear(); containsKey(0); remove(0)]", MAP)
    assert run_trial(h, LOCKED, seed=3) == (None, 0, 1, UNIT, False, None)


def test_serialized_harness_is_deterministic():
    h = parse_harness("[put(0,0)], [clear(); put(1,1); containsKey(1)], {0 < 1}", MAP)
    for seed in range(20):
        assert run_trial(h, LOCKED, seed=seed) == (None, UNIT, None, True)


@pytest.mark.parametrize("backend", ["interleave", "threads"])
def test_trials_one(backend):
    h = parse_harness(H1, MAP)
    hist, verdict = stress(h, LOCKED, MAP, StressBudget(time=None, trials=1), backend=backend)
    assert hist.trials == 1
    assert sum(e.count for e in hist.entries.values()) == 1
    assert isinstance(verdict, AtomicSoFar)


def test_trial_budget_exact():
    hist, _ = stress(parse_harness(H4, MAP), LOCKED, MAP, StressBudget(time=None, trials=1000), seed=1)
    assert hist.trials == 1000
    assert sum(e.count for e in hist.entries.values()) == 1000


def test_many_outcomes_observed():
    h = parse_harness(PUTALL, MAP)
    hist, _ = stress(h, LOCKED, MAP, StressBudget(time=None, trials=20000))
    assert {e.outcome for e in hist.entries.values()} == set(atomic_outcomes(h, MAP))


def test_no_false_positives_locked_map():
    h = parse_harness(H1, MAP)
    hist, verdict = stress(h, LOCKED, MAP, StressBudget(time=None, trials=10**6), seed=11)
    assert hist.trials == 10**6
    assert isinstance(verdict, AtomicSoFar) and not hist.non_atomic


def test_seeded_bug_is_a_violation():
    h = parse_harness(H1, MAP)
    sut = get_sut("map-nonatomic-clear").adapter()
    hist, verdict = stress(h, sut, MAP, StressBudget(time=None, trials=50000), seed=2)
    assert isinstance(verdict, Violation)
    assert (None, UNIT, None, False) in [e.outcome for e in hist.non_atomic]
    assert "NON-ATOMIC" in str(verdict)


def test_fail_fast_stops_early():
    h = parse_harness(H1, MAP)
    sut = get_sut("map-nonatomic-clear").adapter()
    hist, verdict = stress(h, sut, MAP, StressBudget(time=None, trials=10**6), seed=2, fail_fast=True)
    assert isinstance(verdict, Violation)
    assert hist.trials < 10**6


def test_threads_backend_outcomes_are_atomic():
    h = parse_harness(PUTALL, MAP)
    hist, verdict = stress(h, LOCKED, MAP, StressBudget(time=None, trials=300), backend="threads")
    assert hist.trials == 300 and isinstance(verdict, AtomicSoFar)


def test_two_workers_merge():
    h = parse_harness(H1, MAP)
    hist, verdict = stress(h, LOCKED, MAP, StressBudget(time=None, trials=2000, workers=2))
    assert hist.trials == 2000 and hist.workers == 2
    assert isinstance(verdict, AtomicSoFar)


def test_record_history_respects_program_and_harness_order():
    h = parse_harness(H4, MAP)
    for seed in range(30):
        hist = record_history_trial(h, LOCKED, seed=seed)
        assert invocation_order(h) <= hist.hb_invocations


class Raising:
    def put(self, k, v):
        raise RuntimeError("boom")

    def get(self, k):
        return None


def test_exceptions_become_E():
    sut = SutAdapter.from_class(Raising, MAP)
    assert run_trial(parse_harness("[put(0,0)], [get(0)]", MAP), sut) == (EXC, None)


class Deadlocking:
    def __init__(self):
        self.a, self.b = runtime.Lock(), runtime.Lock()

    def get(self, k):
        first, second = (self.a, self.b) if k == 0 else (self.b, self.a)
        with first:
            runtime.preempt()
            with second:
                return None


def test_deadlock_is_reported():
    sut = SutAdapter.from_class(Deadlocking, MAP)
    h = parse_harness("[get(0)], [get(1)]", MAP)
    with pytest.raises(TrialTimeout):
        stress(h, sut, MAP, StressBudget(time=None, trials=5000))


def test_runtime_lock_plain_use():
    lock = runtime.Lock()
    with lock:
        assert lock.locked()
    assert not lock.locked()
    runtime.preempt()  # no scheduler installed: a no-op


def test_budget_validation():
    with pytest.raises(ValueError):
        StressBudget(time=None, trials=None)
    with pytest.raises(ValueError):
        StressBudget(time=0)
    with pytest.raises(ValueError):
        StressBudget(workers=0)


def test_malformed_harness_rejected():
    with pytest.raises(ValueError):
        stress(parse_harness("[frobnicate(0)]"), LOCKED, MAP, StressBudget(time=None, trials=1))


def test_histogram_table_and_merge():
    a, b = OutcomeHistogram(trials=3, elapsed=1.0), OutcomeHistogram(trials=2, elapsed=1.0)
    a.add((None, True), 3, True)
    b.add((None, True), 1, True)
    b.add((None, 1), 1, False)
    a.merge(b)
    assert a.trials == 5
    assert [(e.outcome, e.count) for e in a.sorted_entries()] == [((None, 1), 1), ((None, True), 4)]
    assert "NO" in a.table()
    assert threading.active_count() >= 1
