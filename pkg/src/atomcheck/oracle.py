"""Linearizations of a harness and the outcomes they admit.

A linearization interleaves the sequences in program order; a sequence may
start only once every sequence that happens before it has finished.  The
atomic outcomes are the return vectors of all linearizations replayed on a
sequential specification.
"""

from __future__ import annotations

from functools import lru_cache

from .harness import Harness, invoc_index
from .values import encode_outcome, format_outcome


def _gates(h: Harness):
    n = len(h.sequences)
    preds = [tuple(i for i in range(n) if (i, j) in h.closure) for j in range(n)]
    return [len(s) for s in h.sequences], preds


def _enabled(lengths, preds, cursors):
    for j, c in enumerate(cursors):
        if c < lengths[j] and all(cursors[i] == lengths[i] for i in preds[j]):
            yield j


def linearizations(h: Harness):
    """Yield every linearization as a tuple of ``(sequence, position)`` pairs."""
    lengths, preds = _gates(h)
    total = sum(lengths)
    cursors = [0] * len(lengths)
    path = []

    def rec():
        if len(path) == total:
            yield tuple(path)
            return
        for j in list(_enabled(lengths, preds, cursors)):
            path.append((j, cursors[j]))
            cursors[j] += 1
            yield from rec()
            cursors[j] -= 1
            path.pop()

    yield from rec()


def linearized_invocations(h: Harness):
    """Linearizations as lists of invocations."""
    for lin in linearizations(h):
        yield [h.sequences[i][j] for i, j in lin]


def count_linearizations(h: Harness) -> int:
    lengths, preds = _gates(h)

    @lru_cache(maxsize=None)
    def count(cursors):
        if all(c == n for c, n in zip(cursors, lengths)):
            return 1
        total = 0
        for j in _enabled(lengths, preds, cursors):
            nxt = list(cursors)
            nxt[j] += 1
            total += count(tuple(nxt))
        return total

    return count(tuple([0] * len(lengths)))


class AtomicOutcomeSet:
    """Outcomes admitted by some linearization, keyed by their byte encoding."""

    __slots__ = ("harness", "_encoded", "outcomes", "linearizations")

    def __init__(self, harness: Harness, outcomes, linearizations: int = 0):
        self.harness = harness
        self.outcomes = {}
        for o in outcomes:
            self.outcomes.setdefault(encode_outcome(o), tuple(o))
        self._encoded = frozenset(self.outcomes)
        self.linearizations = linearizations

    def __contains__(self, outcome) -> bool:
        return encode_outcome(outcome) in self._encoded

    def __len__(self):
        return len(self._encoded)

    def __iter__(self):
        return iter(sorted(self.outcomes.values(), key=format_outcome))

    def __eq__(self, other):
        if isinstance(other, AtomicOutcomeSet):
            return self._encoded == other._encoded
        return NotImplemented

    def __hash__(self):
        return hash(self._encoded)

    def __repr__(self):
        return "AtomicOutcomeSet{%s}" % "; ".join(format_outcome(o) for o in self)


def atomic_outcomes(h: Harness, spec) -> AtomicOutcomeSet:
    """Replay every linearization of ``h`` on ``spec``.

    Linearizations sharing a prefix share its replay, so the cost is one
    ``apply`` per node of the prefix tree rather than per linearization.
    """
    spec.validate_harness(h)
    lengths, preds = _gates(h)
    index = invoc_index(h)
    slots = [[index[(i, j)] for j in range(n)] for i, n in enumerate(lengths)]
    total = sum(lengths)
    cursors = [0] * len(lengths)
    result = [None] * total
    found = []
    count = 0
    step = spec.step

    def rec(state, done):
        nonlocal count
        if done == total:
            found.append(tuple(result))
            count += 1
            return
        for j in list(_enabled(lengths, preds, cursors)):
            c = cursors[j]
            new_state, ret = step(state, h.sequences[j][c])
            result[slots[j][c]] = ret
            cursors[j] = c + 1
            rec(new_state, done + 1)
            cursors[j] = c

    rec(spec.new_state(), 0)
    return AtomicOutcomeSet(h, found, count)


def is_atomic_outcome(outcome, atomic: AtomicOutcomeSet) -> bool:
    if len(outcome) != atomic.harness.num_invocations:
        raise ValueError(f"outcome has {len(outcome)} slots, harness has {atomic.harness.num_invocations}")
    return outcome in atomic


def outcome_table(atomic: AtomicOutcomeSet, frequencies=None) -> str:
    """Outcome / atomic / frequency table; rows absent from ``atomic`` are marked ``x``."""
    rows = [(format_outcome(o), "yes", frequencies.get(encode_outcome(o), 0) if frequencies else None)
            for o in atomic]
    width = max([len("outcome")] + [len(r[0]) for r in rows])
    lines = [f"{'outcome':<{width}}  atomic" + ("  frequency" if frequencies else "")]
    for text, flag, freq in rows:
        lines.append(f"{text:<{width}}  {flag:<6}" + (f"  {freq:>9}" if frequencies else ""))
    return "\n".join(lines)
