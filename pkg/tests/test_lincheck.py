import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from atomcheck.harness import History, invocation_order, parse_harness
from atomcheck.lincheck import TooLargeError, harness_linearizable_outcome, is_linearizable
from atomcheck.oracle import atomic_outcomes, is_atomic_outcome
from atomcheck.values import parse_outcome
from strategies import H1, MAP, SIZE, harnesses


def size_history(outcome):
    h = parse_harness(SIZE, MAP)
    # invocation 0 = size(), 1 = put(0,0), 2 = put(1,1)
    return History(h, parse_outcome(outcome), {(1, 0), (1, 2)})


def test_linearizable_history():
    assert is_linearizable(size_history("1, null, null"), MAP)


def test_non_linearizable_history():
    assert not is_linearizable(size_history("0, null, null"), MAP)


def test_sequential_replay_is_linearizable():
    h = parse_harness("[put(0,0); get(0); remove(0); containsKey(0)]", MAP)
    assert is_linearizable(History(h, parse_outcome("null, 0, 0, false"), invocation_order(h)), MAP)


def test_harness_1_outcomes():
    h = parse_harness(H1, MAP)
    assert harness_linearizable_outcome(h, parse_outcome("null, (), null, true"), MAP)
    assert not harness_linearizable_outcome(h, parse_outcome("null, (), null, false"), MAP)


def test_size_guard():
    h = parse_harness("[" + "; ".join(["get(0)"] * 11) + "]", MAP)
    with pytest.raises(TooLargeError):
        harness_linearizable_outcome(h, (None,) * 11, MAP)


def mutate(outcome, rng):
    o = list(outcome)
    k = rng.randrange(len(o))
    o[k] = rng.choice([None, True, False, 0, 1, 2, ()])
    return tuple(o)


@settings(max_examples=60)
@given(harnesses(max_seqs=3, max_len=2, max_total=5), st.integers(0, 1000))
def test_agrees_with_oracle(h, seed):
    atomic = atomic_outcomes(h, MAP)
    rng = random.Random(seed)
    candidates = list(atomic) + [mutate(o, rng) for o in list(atomic) * 3]
    for o in candidates:
        assert harness_linearizable_outcome(h, o, MAP) == is_atomic_outcome(o, atomic)


@settings(max_examples=60)
@given(harnesses(max_seqs=3, max_len=2, max_total=5), st.data())
def test_stronger_hb_never_helps(h, data):
    base = invocation_order(h)
    n = h.num_invocations
    atomic = list(atomic_outcomes(h, MAP))
    o = data.draw(st.sampled_from(atomic))
    extra = data.draw(st.lists(st.sampled_from(list(itertools.permutations(range(n), 2)) or [(0, 0)]),
                               max_size=3))
    strong = set(base)
    for a, b in extra:
        if a != b:
            try:
                History(h, o, strong | {(a, b)})
                strong.add((a, b))
            except ValueError:
                pass
    if is_linearizable(History(h, o, strong), MAP):
        assert is_linearizable(History(h, o, base), MAP)
