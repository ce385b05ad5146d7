import json
import random

import pytest
from hypothesis import given, strategies as st

from atomcheck.adt import (FAMILIES, Mutability, SpecError, apply, check_deterministic, classify, new_state,
                           random_invocation, spec_for)
from atomcheck.harness import Invocation, parse_harness
from atomcheck.values import EXC, UNIT

SPECS = [spec_for(f) for f in FAMILIES]


def run(spec, text):
    state, out = new_state(spec), []
    for inv in parse_harness(text).sequences[0]:
        state, r = apply(spec, state, inv)
        out.append(r)
    return out


def test_initial_states_empty():
    for fam in ("map", "queue", "set", "deque"):
        assert new_state(spec_for(fam)) == ()


def test_map_harness_1_serial():
    assert run(spec_for("map"), "[put(0,0); clear(); put(1,1); containsKey(1)]") == [None, UNIT, None, True]


def test_map_putall_serial():
    assert run(spec_for("map"), "[putAll({0=1,1=0}); get(0); remove(1)]") == [UNIT, 1, 0]


def test_queue_fifo():
    assert run(spec_for("queue"), "[offer(1); poll(); poll()]") == [True, 1, None]


def test_queue_bulk():
    q = spec_for("queue")
    assert run(q, "[offer(1); offer(0); offer(1); removeAll({1,1}); toArray(); containsAll({0,0}); size()]") == \
        [True, True, True, True, (0,), True, 1]
    assert run(q, "[addAll({1,0}); toArray(); peek()]") == [True, (1, 0), 1]


def test_deque_ends():
    d = spec_for("deque")
    assert run(d, "[offerFirst(0); offer(1); offerFirst(2); pollLast(); peekFirst(); peekLast(); pollFirst()]") == \
        [True, True, True, 1, 2, 0, 2]


def test_set_ranges():
    s = spec_for("set")
    assert run(s, "[add(2); add(0); add(2); headSet(2); subSet(0,2); subSet(2,0); remove(0); remove(0)]") == \
        [True, True, False, (0,), (0,), EXC, True, False]


def _fifo_model(ops):
    # independent list-based model
    q, out = [], []
    for op, arg in ops:
        if op == "offer":
            q.append(arg)
            out.append(True)
        elif op == "poll":
            out.append(q.pop(0) if q else None)
        else:
            out.append(q[0] if q else None)
    return out


@given(st.lists(st.tuples(st.sampled_from(["offer", "poll", "peek"]), st.integers(0, 2)), max_size=15))
def test_queue_against_list_model(ops):
    spec = spec_for("queue")
    state, out = new_state(spec), []
    for op, arg in ops:
        state, r = apply(spec, state, Invocation(op, (arg,) if op == "offer" else ()))
        out.append(r)
    assert out == _fifo_model(ops)


def test_classify():
    m = spec_for("map")
    assert classify(m, "get") == (Mutability.READ_ONLY, True)
    assert classify(m, "clear") == (Mutability.UPDATE, False)
    assert classify(m, "put") == (Mutability.UPDATE, True)
    with pytest.raises(SpecError):
        classify(m, "toString")


def test_arity_errors():
    with pytest.raises(SpecError):
        apply(spec_for("map"), (), Invocation("put", (0,)))
    with pytest.raises(SpecError):
        apply(spec_for("map"), (), Invocation("putAll", ((0, 1),)))


def test_overrides_and_core():
    m = spec_for("map").with_overrides([{"name": "size", "core": True}, {"name": "clear", "mutability": "read-only"}])
    assert "size" in m.core
    assert m.method("clear").read_only
    m2 = spec_for("map", core=["put", "get"])
    assert m2.core == {"put", "get"}
    with pytest.raises(SpecError):
        spec_for("map", core=["nope"])


def test_overrides_from_file(tmp_path):
    p = tmp_path / "methods.json"
    p.write_text(json.dumps({"isEmpty": {"core": True}}))
    from atomcheck.adt import load_overrides
    assert "isEmpty" in spec_for("map", overrides=load_overrides(p)).core


def test_toString_excluded():
    for spec in SPECS:
        assert "toString" not in spec.methods


def _reachable(spec, seed, steps=12):
    rng = random.Random(seed)
    state = spec.new_state()
    for _ in range(rng.randrange(steps)):
        state, _ = spec.apply(state, random_invocation(spec, rng, 3))
    return state


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.family)
def test_deterministic(spec):
    check_deterministic(spec)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.family)
@given(seed=st.integers(0, 10**6), inv_seed=st.integers(0, 10**6))
def test_read_only_leaves_state(spec, seed, inv_seed):
    state = _reachable(spec, seed)
    rng = random.Random(inv_seed)
    for name, ms in spec.methods.items():
        inv = random_invocation(spec, rng, 3, methods=[name])
        new, _ = spec.apply(state, inv)
        if ms.read_only:
            assert new == state


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.family)
@given(seed=st.integers(0, 10**6))
def test_is_empty_iff_size_zero(spec, seed):
    state = _reachable(spec, seed)
    _, size = spec.apply(state, Invocation("size"))
    _, empty = spec.apply(state, Invocation("isEmpty"))
    assert empty == (size == 0)


@given(st.integers(0, 10**6), st.integers(0, 2), st.integers(0, 2),
       st.lists(st.sampled_from(["get", "containsKey", "containsValue", "size", "put_other", "remove_other"]),
                max_size=6))
def test_map_put_get_algebra(seed, k, v, middle):
    spec = spec_for("map")
    state = _reachable(spec, seed)
    state, _ = spec.apply(state, Invocation("put", (k, v)))
    other = (k + 1) % 3
    for op in middle:
        if op == "put_other":
            inv = Invocation("put", (other, 0))
        elif op == "remove_other":
            inv = Invocation("remove", (other,))
        elif op in ("size",):
            inv = Invocation(op)
        else:
            inv = Invocation(op, (k,))
        state, _ = spec.apply(state, inv)
    assert spec.apply(state, Invocation("get", (k,)))[1] == v
