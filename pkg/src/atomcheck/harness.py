"""Test harnesses: invocation sequences partially ordered by happens-before.

Text format::

    harness  := seq ("," seq)* ["," "{" [pair ("," pair)*] "}"]
    seq      := "[" invoc (";" invoc)* "]"
    invoc    := name "(" [value ("," value)*] ")"
    pair     := int "<" int

Collection arguments are written ``{1,1}`` or ``{0=1,1=0}``; brackets are
accepted too.  Happens-before pairs index sequences from 0.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

from .values import ValueReader, ValueSyntaxError, format_value, value_ints


class HarnessSyntaxError(ValueSyntaxError):
    pass


class MalformedHarnessError(ValueError):
    pass


class Invocation(NamedTuple):
    method: str
    args: tuple = ()

    def __str__(self):
        return format_invocation(self)


@lru_cache(maxsize=65536)
def format_invocation(inv: Invocation) -> str:
    return "%s(%s)" % (inv.method, ",".join(format_value(a, arg=True) for a in inv.args))


def format_sequence(seq) -> str:
    return "[" + "; ".join(format_invocation(i) for i in seq) + "]"


def transitive_closure(pairs, n: int) -> frozenset:
    reach = [set() for _ in range(n)]
    for i, j in pairs:
        reach[i].add(j)
    changed = True
    while changed:
        changed = False
        for i in range(n):
            extra = set()
            for j in reach[i]:
                extra |= reach[j]
            if not extra <= reach[i]:
                reach[i] |= extra
                changed = True
    return frozenset((i, j) for i in range(n) for j in reach[i])


@dataclass(frozen=True)
class Harness:
    sequences: tuple
    hb: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        seqs = tuple(tuple(Invocation(i.method, tuple(i.args)) for i in s) for s in self.sequences)
        object.__setattr__(self, "sequences", seqs)
        object.__setattr__(self, "hb", frozenset((int(i), int(j)) for i, j in self.hb))
        if not seqs:
            raise MalformedHarnessError("a harness needs at least one sequence")
        if any(not s for s in seqs):
            raise MalformedHarnessError("invocation sequences must be non-empty")
        n = len(seqs)
        for i, j in self.hb:
            if not (0 <= i < n and 0 <= j < n):
                raise MalformedHarnessError(f"happens-before pair {i} < {j} out of range")
            if i == j:
                raise MalformedHarnessError(f"happens-before is not irreflexive: {i} < {j}")
        if any(i == j for i, j in self.closure):
            raise MalformedHarnessError("happens-before constraints contain a cycle")

    @property
    def closure(self) -> frozenset:
        c = self.__dict__.get("_closure")
        if c is None:
            c = transitive_closure(self.hb, len(self.sequences))
            object.__setattr__(self, "_closure", c)
        return c

    @property
    def num_invocations(self) -> int:
        return sum(len(s) for s in self.sequences)

    def invocations(self):
        """Invocations in listing order, i.e. by invocation index."""
        return [inv for s in self.sequences for inv in s]

    def __str__(self):
        return format_harness(self)


def format_harness(h: Harness) -> str:
    parts = [format_sequence(s) for s in h.sequences]
    if h.hb:
        parts.append("{" + ", ".join(f"{i} < {j}" for i, j in sorted(h.hb)) + "}")
    return ", ".join(parts)


def parse_harness(text: str, spec=None) -> Harness:
    """Parse harness text; validate signatures too when ``spec`` is given."""
    r = ValueReader(text)
    seqs = []
    hb = []
    try:
        while True:
            c = r.peek()
            if c == "[":
                if hb:
                    raise r.error("sequence after happens-before block")
                seqs.append(_read_sequence(r))
            elif c == "{" and seqs:
                r.expect("{")
                if not r.accept("}"):
                    while True:
                        i = r.integer()
                        r.expect("<")
                        hb.append((i, r.integer()))
                        if r.accept("}"):
                            break
                        r.expect(",")
                if r.peek():
                    raise r.error("trailing input after happens-before block")
                break
            else:
                raise r.error("expected '[' or '{'")
            if not r.accept(","):
                if r.peek():
                    raise r.error("expected ','")
                break
    except ValueSyntaxError as e:
        if isinstance(e, HarnessSyntaxError):
            raise
        raise HarnessSyntaxError(e.message, e.text, e.pos) from None
    if not seqs:
        raise HarnessSyntaxError("empty harness", text, 0)
    h = Harness(tuple(seqs), frozenset(hb))
    if spec is not None:
        spec.validate_harness(h)
    return h


def _read_sequence(r: ValueReader):
    r.expect("[")
    seq = []
    while True:
        name = r.word()
        r.expect("(")
        args = []
        if not r.accept(")"):
            while True:
                args.append(r.value())
                if r.accept(")"):
                    break
                r.expect(",")
        seq.append(Invocation(name, tuple(args)))
        if r.accept("]"):
            return tuple(seq)
        r.expect(";")


# -- notations ---------------------------------------------------------------

@dataclass(frozen=True)
class HarnessStats:
    methods: frozenset
    values: frozenset
    num_sequences: int
    num_invocations: int
    per_method_invocations: dict

    def invocations_of(self, method: str) -> Counter:
        return self.per_method_invocations.get(method, Counter())

    def count(self, method: str) -> int:
        return sum(self.invocations_of(method).values())


def stats(h: Harness) -> HarnessStats:
    per_method: dict = {}
    values = set()
    for inv in h.invocations():
        per_method.setdefault(inv.method, Counter())[inv] += 1
        for a in inv.args:
            values.update(value_ints(a))
    return HarnessStats(
        methods=frozenset(per_method),
        values=frozenset(values),
        num_sequences=len(h.sequences),
        num_invocations=h.num_invocations,
        per_method_invocations=per_method,
    )


def invoc_index(h: Harness) -> dict:
    """Map each occurrence ``(sequence, position)`` to its index in listing order."""
    index = {}
    for i, seq in enumerate(h.sequences):
        for j in range(len(seq)):
            index[(i, j)] = len(index)
    return index


def sequence_slots(h: Harness) -> list:
    """Invocation indices of each sequence."""
    out, k = [], 0
    for seq in h.sequences:
        out.append(list(range(k, k + len(seq))))
        k += len(seq)
    return out


def invocation_order(h: Harness) -> frozenset:
    """Happens-before between invocation indices induced by the harness alone."""
    slots = sequence_slots(h)
    pairs = set()
    for idx in slots:
        pairs.update(itertools.combinations(idx, 2))
    for i, j in h.closure:
        pairs.update(itertools.product(slots[i], slots[j]))
    return frozenset(pairs)


# -- prefix relation ---------------------------------------------------------

def is_prefix(h1: Harness, h2: Harness) -> bool:
    """``h1`` embeds into ``h2``: its sequences prefix distinct sequences of
    ``h2``, and those happen before every other sequence of ``h2``."""
    n1, n2 = len(h1.sequences), len(h2.sequences)
    if n1 > n2:
        return False
    s1, s2 = h1.sequences, h2.sequences
    closure2 = h2.closure
    candidates = [
        [j for j in range(n2) if len(s1[i]) <= len(s2[j]) and s2[j][: len(s1[i])] == s1[i]]
        for i in range(n1)
    ]
    for image in itertools.product(*candidates):
        if len(set(image)) != n1:
            continue
        rest = [j for j in range(n2) if j not in image]
        if all((a, b) in closure2 for a in image for b in rest):
            return True
    return False


# -- symmetry ----------------------------------------------------------------

def relabel(h: Harness, order) -> Harness:
    """Harness whose k-th sequence is ``h.sequences[order[k]]``."""
    new_pos = {old: new for new, old in enumerate(order)}
    return Harness(
        tuple(h.sequences[o] for o in order),
        frozenset((new_pos[i], new_pos[j]) for i, j in h.hb),
    )


def canonical_key(h: Harness):
    return (tuple(format_sequence(s) for s in h.sequences), tuple(sorted(h.closure)))


def canonicalize(h: Harness) -> Harness:
    """Representative of ``h``'s symmetry class.

    The representative minimizes (sequence strings, sorted closed hb pairs)
    over all sequence reorderings.  Any minimizer lists its sequences in
    string order, so only reorderings among equal sequences need trying.
    """
    strs = [format_sequence(s) for s in h.sequences]
    base = sorted(range(len(strs)), key=strs.__getitem__)
    groups = [list(g) for _, g in itertools.groupby(base, key=strs.__getitem__)]
    closed = Harness(h.sequences, h.closure)
    best = None
    for combo in itertools.product(*(itertools.permutations(g) for g in groups)):
        order = [i for part in combo for i in part]
        cand = relabel(closed, order)
        key = tuple(sorted(cand.hb))
        if best is None or key < best[0]:
            best = (key, cand)
    return best[1]


# -- histories ---------------------------------------------------------------

@dataclass(frozen=True)
class History:
    harness: Harness
    outcome: tuple
    hb_invocations: frozenset

    def __post_init__(self):
        n = self.harness.num_invocations
        if len(self.outcome) != n:
            raise MalformedHarnessError(f"outcome has {len(self.outcome)} slots, expected {n}")
        hb = frozenset(self.hb_invocations)
        object.__setattr__(self, "hb_invocations", hb)
        for a, b in hb:
            if not (0 <= a < n and 0 <= b < n) or a == b:
                raise MalformedHarnessError(f"bad invocation order pair {a} < {b}")
        if any(a == b for a, b in transitive_closure(hb, n)):
            raise MalformedHarnessError("invocation order contains a cycle")
        missing = invocation_order(self.harness) - transitive_closure(hb, n)
        if missing:
            raise MalformedHarnessError(f"history drops harness ordering {sorted(missing)}")


def singletonize(hist: History) -> Harness:
    """One singleton sequence per invocation, ordered by the history's happens-before."""
    invs = hist.harness.invocations()
    return Harness(tuple((inv,) for inv in invs), hist.hb_invocations)
