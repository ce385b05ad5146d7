"""Hypothesis strategies shared by the test modules."""

import itertools

from hypothesis import strategies as st

from atomcheck.adt import spec_for
from atomcheck.harness import Harness, Invocation
from atomcheck.values import EXC, UNIT, MapValue

MAP = spec_for("map")

H1 = "[put(0,0)], [clear(); put(1,1); containsKey(1)]"
H2 = "[put(0,0); put(2,0)], [clear(); put(1,1)]"
H3 = "[put(0,0); put(2,0)], [clear(); put(1,1); containsKey(1); get(2)]"
H4 = "[put(0,0); put(2,0)], [clear(); put(1,1); containsKey(1); get(2)], [put(3,1)], {0 < 2, 1 < 2}"
H4_SYM = "[put(3,1)], [put(0,0); put(2,0)], [clear(); put(1,1); containsKey(1); get(2)], {1 < 0, 2 < 0}"
PUTALL = "[putAll({0=1,1=0})], [get(0); remove(1)]"
SIZE = "[size()], [put(0,0); put(1,1)]"

small = st.integers(min_value=0, max_value=3)

scalars = st.one_of(st.none(), st.booleans(), small, st.just(UNIT), st.just(EXC))
values = st.recursive(
    scalars,
    lambda inner: st.one_of(
        st.lists(inner, max_size=3).map(tuple),
        # an empty map prints as "[]" and reads back as a list
        st.dictionaries(small, small, min_size=1, max_size=3).map(MapValue),
    ),
    max_leaves=6,
)


@st.composite
def map_invocations(draw, val=3):
    name = draw(st.sampled_from(sorted(MAP.methods)))
    args = []
    for kind in MAP.methods[name].arg_kinds:
        if kind.value == "KeyValueCollection":
            keys = draw(st.lists(st.integers(0, val - 1), min_size=2, max_size=2, unique=True))
            args.append(MapValue((k, draw(st.integers(0, val - 1))) for k in keys))
        else:
            args.append(draw(st.integers(0, val - 1)))
    return Invocation(name, tuple(args))


@st.composite
def dags(draw, n):
    """Random strict order on ``0..n-1``: edges follow a random topological order."""
    perm = draw(st.permutations(range(n)))
    pairs = [(perm[a], perm[b]) for a, b in itertools.combinations(range(n), 2)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    return frozenset(chosen)


@st.composite
def harnesses(draw, max_seqs=3, max_len=3, max_total=None, invocations=None):
    invocations = invocations or map_invocations()
    n = draw(st.integers(1, max_seqs))
    seqs = [tuple(draw(st.lists(invocations, min_size=1, max_size=max_len))) for _ in range(n)]
    if max_total is not None:
        while sum(map(len, seqs)) > max_total:
            longest = max(range(n), key=lambda i: len(seqs[i]))
            if len(seqs[longest]) == 1:
                seqs.pop(longest)
                n -= 1
            else:
                seqs[longest] = seqs[longest][:-1]
    return Harness(tuple(seqs), draw(dags(n)))
