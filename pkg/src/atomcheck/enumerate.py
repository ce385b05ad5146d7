"""Bounded enumeration of harnesses for checking one method against a core set.

For parameters ``(invoc, val, seq)`` the generated harnesses

* use only core methods plus the method under test ``m``,
* invoke ``m`` exactly once,
* have exactly ``invoc`` invocations in exactly ``seq`` sequences,
* use exactly the argument values ``0 .. val-1`` (each at least once),

and contain one representative per symmetry class: sequences are listed in
string order and, among sequences that are equal, the happens-before relation
is the lexicographically least relabeling.  Happens-before ranges over every
strict partial order for up to ``full_order_limit`` sequences and over layered
initial / parallel / final orders beyond that.
"""

from __future__ import annotations

import bisect
import itertools
import random
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache

from .adt import SCALAR_KINDS, ArgKind, SpecError
from .harness import Harness, Invocation, format_sequence, relabel
from .values import MapValue, value_ints

FILTERS = ("all-read-only", "serialized-read-only", "fully-serialized")


@dataclass(frozen=True, order=True)
class EnumParams:
    invoc: int
    val: int
    seq: int

    def __post_init__(self):
        if min(self.invoc, self.val, self.seq) < 1:
            raise ValueError(f"parameters must be positive: {self}")
        if self.invoc < self.seq:
            raise ValueError(f"{self.invoc} invocations cannot fill {self.seq} non-empty sequences")

    def covers(self, other) -> bool:
        return self.invoc >= other.invoc and self.val >= other.val and self.seq >= other.seq

    def __str__(self):
        return f"({self.invoc},{self.val},{self.seq})"


def _fit(i, v, s):
    return EnumParams(i, v, min(s, i))


class ParamSchedule:
    """Iterator of EnumParams.

    ``diagonal`` emits ``(k,k,k)`` for k = 1, 2, ...; with ``bounds`` every
    component is capped and the schedule stops once all caps are reached.
    ``graded`` emits every triple within ``bounds`` ordered by invocations,
    then values, then sequences.
    """

    KINDS = ("diagonal", "graded")

    def __init__(self, kind: str = "diagonal", bounds: EnumParams | None = None):
        if kind not in self.KINDS:
            raise ValueError(f"unknown schedule {kind!r}; choose from {self.KINDS}")
        if kind == "graded" and bounds is None:
            raise ValueError("the graded schedule needs bounds")
        self.kind = kind
        self.bounds = bounds
        self._it = self._diagonal() if kind == "diagonal" else self._graded()

    def _diagonal(self):
        k = 1
        while True:
            if self.bounds is None:
                yield EnumParams(k, k, k)
            else:
                b = self.bounds
                yield _fit(min(k, b.invoc), min(k, b.val), min(k, b.seq))
                if k >= max(b.invoc, b.val, b.seq):
                    return
            k += 1

    def _graded(self):
        b = self.bounds
        for i in range(1, b.invoc + 1):
            for v in range(1, b.val + 1):
                for s in range(1, min(i, b.seq) + 1):
                    yield EnumParams(i, v, s)

    def __iter__(self):
        return self

    def __next__(self) -> EnumParams:
        return next(self._it)


def next_params(sched: ParamSchedule) -> EnumParams:
    return next(sched)


# -- invocations and happens-before orders -------------------------------------

def method_invocations(spec, method: str, val: int) -> list:
    """Every invocation of ``method`` with arguments drawn from ``0 .. val-1``.

    Collections have two members: value collections are ordered pairs with
    repeats, key/value collections map two distinct keys.
    """
    choices = []
    for kind in spec.method(method).arg_kinds:
        if kind in SCALAR_KINDS:
            choices.append(list(range(val)))
        elif kind is ArgKind.COLLECTION:
            choices.append(list(itertools.product(range(val), repeat=2)))
        else:
            choices.append([MapValue(zip(keys, vals))
                            for keys in itertools.combinations(range(val), 2)
                            for vals in itertools.product(range(val), repeat=2)])
    return [Invocation(method, args) for args in itertools.product(*choices)]


def _is_transitive(pairs) -> bool:
    return all((a, d) in pairs for a, b in pairs for c, d in pairs if b == c)


@lru_cache(maxsize=None)
def strict_partial_orders(n: int) -> tuple:
    """All strict partial orders on ``0 .. n-1`` as sorted pair tuples."""
    cand = [(i, j) for i in range(n) for j in range(n) if i != j]
    out = []
    for bits in range(1 << len(cand)):
        pairs = {cand[k] for k in range(len(cand)) if bits >> k & 1}
        if any((j, i) in pairs for i, j in pairs):
            continue
        if _is_transitive(pairs):
            out.append(tuple(sorted(pairs)))
    return tuple(sorted(out))


@lru_cache(maxsize=None)
def layered_orders(n: int) -> tuple:
    """Orders that put each sequence in an initial, parallel or final layer."""
    out = set()
    for layers in itertools.product(range(3), repeat=n):
        out.add(tuple(sorted((i, j) for i in range(n) for j in range(n) if layers[i] < layers[j])))
    return tuple(sorted(out))


def hb_orders(n: int, full_order_limit: int = 3) -> tuple:
    return strict_partial_orders(n) if n <= full_order_limit else layered_orders(n)


def _relabel_pairs(pairs, perm):
    # perm[old] = new
    return tuple(sorted((perm[i], perm[j]) for i, j in pairs))


def _group_perms(strs):
    """Permutations (old -> new) that only exchange equal neighbouring strings."""
    groups = [list(g) for _, g in itertools.groupby(range(len(strs)), key=strs.__getitem__)]
    if all(len(g) == 1 for g in groups):
        return None
    perms = []
    for combo in itertools.product(*(itertools.permutations(g) for g in groups)):
        order = [i for part in combo for i in part]
        perm = [0] * len(order)
        for new, old in enumerate(order):
            perm[old] = new
        perms.append(perm)
    return perms


# -- filters -------------------------------------------------------------------

def filter_all_read_only(h: Harness, spec) -> bool:
    """True when ``h`` should be excluded: it has no update invocation."""
    return all(spec.method(inv.method).read_only for inv in h.invocations())


def filter_serialized_read_only_mut(h: Harness, m: str, spec) -> bool:
    """True when read-only ``m`` cannot run in parallel with any update."""
    if not spec.method(m).read_only:
        return False
    home = next(i for i, s in enumerate(h.sequences) if any(inv.method == m for inv in s))
    closure = h.closure
    for t, s in enumerate(h.sequences):
        if t == home or (t, home) in closure or (home, t) in closure:
            continue
        if any(not spec.method(inv.method).read_only for inv in s):
            return False
    return True


def filter_fully_serialized(h: Harness) -> bool:
    """True when happens-before orders every pair of sequences; every run is then a linearization."""
    n = len(h.sequences)
    return len(h.closure) == n * (n - 1) // 2


def excluded(h: Harness, m: str, spec, filters=FILTERS) -> bool:
    return (("all-read-only" in filters and filter_all_read_only(h, spec))
            or ("serialized-read-only" in filters and filter_serialized_read_only_mut(h, m, spec))
            or ("fully-serialized" in filters and filter_fully_serialized(h)))


# -- construction ----------------------------------------------------------------

class HarnessSet(Sequence):
    """Lazily materialized harnesses stored as (sequence ids, order id) rows."""

    def __init__(self, pool, orders, rows):
        self._pool = pool
        self._orders = orders
        self.rows = rows

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return HarnessSet(self._pool, self._orders, self.rows[i])
        ids, o = self.rows[i]
        return Harness(tuple(self._pool[k] for k in ids), self._orders[o])

    def permuted(self, order):
        return HarnessSet(self._pool, self._orders, [self.rows[k] for k in order])

    def __repr__(self):
        return f"<HarnessSet of {len(self)}>"


def _check_methods(core, m, spec):
    core = frozenset(core)
    if m in core:
        raise SpecError(f"method under test {m!r} is in the core set")
    for name in core | {m}:
        spec.method(name)
    return core


def _pool(core, m, p: EnumParams, spec):
    """Candidate sequences of each length, sorted by text, with ``m`` at most once."""
    core_invs = [inv for name in sorted(core) for inv in method_invocations(spec, name, p.val)]
    m_invs = method_invocations(spec, m, p.val)
    full = (1 << p.val) - 1
    pool, strs, masks, has_m = [], [], [], []
    inv_mask = {}
    for inv in core_invs + m_invs:
        bits = 0
        for a in inv.args:
            for x in value_ints(a):
                bits |= 1 << x
        inv_mask[inv] = bits
    by_key = {}
    for length in range(1, p.invoc - p.seq + 2):
        seqs = list(itertools.product(core_invs, repeat=length))
        for pos in range(length):
            for pre in itertools.product(core_invs, repeat=pos):
                for post in itertools.product(core_invs, repeat=length - pos - 1):
                    for mi in m_invs:
                        seqs.append(pre + (mi,) + post)
        for s in seqs:
            k = len(pool)
            pool.append(s)
            strs.append(format_sequence(s))
            mask = 0
            for inv in s:
                mask |= inv_mask[inv]
            masks.append(mask)
            hm = int(any(inv.method == m for inv in s))
            has_m.append(hm)
            by_key.setdefault((length, hm), []).append(k)
    for key, ids in by_key.items():
        ids.sort(key=strs.__getitem__)
        by_key[key] = (ids, [strs[k] for k in ids])
    return pool, strs, masks, has_m, by_key, full


def construct_harnesses(core, m: str, p: EnumParams, spec, filters=FILTERS,
                        symmetry: bool = True, full_order_limit: int = 3) -> HarnessSet:
    """All harnesses for ``p`` modulo symmetry, minus those excluded by ``filters``.

    Infeasible parameters give an empty set.  ``symmetry=False`` lists every
    member of each symmetry class instead of one representative.
    """
    core = _check_methods(core, m, spec)
    pool, strs, masks, has_m, by_key, full = _pool(core, m, p, spec)
    orders = list(hb_orders(p.seq, full_order_limit))
    order_id = {o: i for i, o in enumerate(orders)}
    filters = frozenset(filters)
    rows = []

    def emit(ids):
        seq_strs = [strs[k] for k in ids]
        perms = _group_perms(seq_strs)
        for o, pairs in enumerate(orders):
            if perms and any(_relabel_pairs(pairs, perm) < pairs for perm in perms):
                continue
            h = Harness(tuple(pool[k] for k in ids), pairs)
            if filters and excluded(h, m, spec, filters):
                continue
            if symmetry:
                rows.append((ids, o))
            else:
                seen = set()
                for order in itertools.permutations(range(len(ids))):
                    r = relabel(h, order)
                    key = (tuple(strs[ids[k]] for k in order), tuple(sorted(r.hb)))
                    if key not in seen:
                        seen.add(key)
                        rows.append((tuple(ids[k] for k in order), order_id[key[1]]))

    def rec(ids, left, m_left, mask, last_str):
        slots = p.seq - len(ids)
        if slots == 0:
            if left == 0 and m_left == 0 and mask == full:
                emit(tuple(ids))
            return
        for length in range(1, left - slots + 2):
            for hm in (0, 1):
                if hm > m_left or (slots == 1 and (length != left or hm != m_left)):
                    continue
                group = by_key.get((length, hm))
                if not group:
                    continue
                gids, gstrs = group
                start = bisect.bisect_left(gstrs, last_str) if last_str is not None else 0
                for k in gids[start:]:
                    ids.append(k)
                    rec(ids, left - length, m_left - hm, mask | masks[k], strs[k])
                    ids.pop()

    rec([], p.invoc, 1, 0, None)
    rows.sort(key=lambda r: ([strs[k] for k in r[0]], orders[r[1]]))
    return HarnessSet(pool, orders, rows)


def shuffle(hs, seed: int):
    """Seeded permutation using Python's Mersenne Twister and Fisher-Yates shuffle."""
    order = list(range(len(hs)))
    random.Random(seed).shuffle(order)
    if isinstance(hs, HarnessSet):
        return hs.permuted(order)
    return [hs[k] for k in order]


def enumerate_schedule(core, m, spec, bounds: EnumParams, seed: int = 0, schedule: str = "diagonal",
                       filters=FILTERS, symmetry: bool = True, full_order_limit: int = 3):
    """Yield ``(params, shuffled harness set)`` for each step of the schedule."""
    for p in ParamSchedule(schedule, bounds):
        hs = construct_harnesses(core, m, p, spec, filters, symmetry, full_order_limit)
        yield p, shuffle(hs, seed)
