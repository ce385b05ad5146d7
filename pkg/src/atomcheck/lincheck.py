"""Brute-force linearizability of single histories.

Slow on purpose: it searches total orders of the invocations directly and is
used to cross-check the outcome-set method on small instances.
"""

from __future__ import annotations

from .harness import History, invocation_order, transitive_closure
from .values import same_value

MAX_INVOCATIONS = 10


class TooLargeError(ValueError):
    pass


def is_linearizable(hist: History, spec) -> bool:
    """Some total order extending ``hist.hb_invocations`` replays to ``hist.outcome``."""
    invs = hist.harness.invocations()
    n = len(invs)
    if n > MAX_INVOCATIONS:
        raise TooLargeError(f"{n} invocations exceeds the checker limit of {MAX_INVOCATIONS}")
    spec.validate_harness(hist.harness)
    closure = transitive_closure(hist.hb_invocations, n)
    need = [0] * n
    for a, b in closure:
        need[b] |= 1 << a
    full = (1 << n) - 1
    dead = set()

    def search(mask, state):
        if mask == full:
            return True
        key = (mask, state)
        if key in dead:
            return False
        for a in range(n):
            bit = 1 << a
            if mask & bit or need[a] & ~mask:
                continue
            new_state, ret = spec.apply(state, invs[a])
            if same_value(ret, hist.outcome[a]) and search(mask | bit, new_state):
                return True
        dead.add(key)
        return False

    return search(0, spec.new_state())


def harness_linearizable_outcome(h, outcome, spec) -> bool:
    """Linearizability of the weakest history of ``h`` with this outcome."""
    return is_linearizable(History(h, tuple(outcome), invocation_order(h)), spec)
