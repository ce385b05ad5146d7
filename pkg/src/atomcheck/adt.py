"""Deterministic sequential specifications of the object families under test.

States are immutable tuples so that replaying a prefix can be shared across
linearizations:

    OrderedMap   tuple of (key, value) pairs sorted by key
    FifoQueue    tuple of elements, head first
    Deque        tuple of elements, first first
    OrderedSet   tuple of elements, ascending
"""

from __future__ import annotations

import bisect
import json
import random
from dataclasses import dataclass, replace
from enum import Enum

from .harness import Harness, Invocation, MalformedHarnessError
from .values import EXC, UNIT, MapValue, format_value


class Mutability(str, Enum):
    READ_ONLY = "read-only"
    UPDATE = "update"


class ArgKind(str, Enum):
    SCALAR = "ScalarValue"
    KEY = "KeyScalar"
    VALUE = "ValueScalar"
    COLLECTION = "ValueCollection"
    KEY_VALUE_COLLECTION = "KeyValueCollection"


SCALAR_KINDS = (ArgKind.SCALAR, ArgKind.KEY, ArgKind.VALUE)


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class MethodSpec:
    name: str
    arg_kinds: tuple
    returns: str  # "unit", "bool", "int", "value?" (int or null), "list"
    mutability: Mutability
    core: bool = False

    @property
    def read_only(self) -> bool:
        return self.mutability is Mutability.READ_ONLY

    @property
    def void(self) -> bool:
        return self.returns == "unit"


def _arg_ok(kind: ArgKind, a) -> bool:
    if kind in SCALAR_KINDS:
        return isinstance(a, int) and not isinstance(a, bool)
    if kind is ArgKind.KEY_VALUE_COLLECTION:
        return isinstance(a, MapValue)
    return isinstance(a, tuple) and not isinstance(a, MapValue)


class SequentialSpec:
    """A family's state machine plus per-method metadata."""

    family = ""
    aliases: tuple = ()

    def __init__(self, methods=None):
        self.methods = dict(methods if methods is not None else self._default_methods())

    # subclasses provide _default_methods(), initial and op_<name>(state, *args)

    def new_state(self):
        return self.initial

    def method(self, name: str) -> MethodSpec:
        try:
            return self.methods[name]
        except KeyError:
            raise SpecError(f"{self.family} has no method {name!r}") from None

    def check_invocation(self, inv: Invocation):
        ms = self.method(inv.method)
        if len(inv.args) != len(ms.arg_kinds):
            raise SpecError(f"{inv}: {inv.method} takes {len(ms.arg_kinds)} argument(s)")
        for kind, a in zip(ms.arg_kinds, inv.args):
            if not _arg_ok(kind, a):
                raise SpecError(f"{inv}: argument {format_value(a, arg=True)} is not a {kind.value}")

    def validate_harness(self, h: Harness):
        for inv in h.invocations():
            try:
                self.check_invocation(inv)
            except SpecError as e:
                raise MalformedHarnessError(str(e)) from None

    def apply(self, state, inv: Invocation):
        """Return ``(next_state, return_value)``."""
        self.check_invocation(inv)
        return self.step(state, inv)

    def step(self, state, inv: Invocation):
        # unchecked; the oracle validates a harness once, then replays with this
        new, ret = getattr(self, "op_" + inv.method)(state, *inv.args)
        return new, (UNIT if self.methods[inv.method].void else ret)

    def classify(self, name: str):
        ms = self.method(name)
        return ms.mutability, ms.core

    @property
    def core(self) -> frozenset:
        return frozenset(n for n, m in self.methods.items() if m.core)

    def with_core(self, names) -> "SequentialSpec":
        names = set(names)
        unknown = names - set(self.methods)
        if unknown:
            raise SpecError(f"unknown core method(s) for {self.family}: {sorted(unknown)}")
        return type(self)({n: replace(m, core=n in names) for n, m in self.methods.items()})

    def with_overrides(self, overrides) -> "SequentialSpec":
        """Apply ``[{"name": ..., "mutability": ..., "core": ...}, ...]`` or a name-keyed dict."""
        if isinstance(overrides, dict):
            overrides = [dict(v, name=k) for k, v in overrides.items()]
        methods = dict(self.methods)
        for o in overrides:
            ms = self.method(o["name"])
            if "mutability" in o:
                ms = replace(ms, mutability=Mutability(o["mutability"]))
            if "core" in o:
                ms = replace(ms, core=bool(o["core"]))
            methods[ms.name] = ms
        return type(self)(methods)

    def __repr__(self):
        return f"<{type(self).__name__} core={sorted(self.core)}>"


def _m(name, kinds, returns, mut, core=False):
    return name, MethodSpec(name, tuple(kinds), returns, mut, core)


R, U = Mutability.READ_ONLY, Mutability.UPDATE
K, V, X = ArgKind.KEY, ArgKind.VALUE, ArgKind.SCALAR
C, KV = ArgKind.COLLECTION, ArgKind.KEY_VALUE_COLLECTION


class OrderedMapSpec(SequentialSpec):
    family = "OrderedMap"
    aliases = ("map",)
    initial = ()

    @staticmethod
    def _default_methods():
        return dict([
            _m("put", [K, V], "value?", U, True),
            _m("get", [K], "value?", R, True),
            _m("remove", [K], "value?", U, True),
            _m("containsKey", [K], "bool", R, True),
            _m("containsValue", [V], "bool", R),
            _m("clear", [], "unit", U),
            _m("putAll", [KV], "unit", U),
            _m("size", [], "int", R),
            _m("isEmpty", [], "bool", R),
        ])

    @staticmethod
    def _find(s, k):
        for i, (key, _) in enumerate(s):
            if key == k:
                return i
        return -1

    def _put(self, s, k, v):
        i = self._find(s, k)
        if i >= 0:
            return s[:i] + ((k, v),) + s[i + 1:], s[i][1]
        return tuple(sorted(s + ((k, v),))), None

    def op_put(self, s, k, v):
        return self._put(s, k, v)

    def op_get(self, s, k):
        i = self._find(s, k)
        return s, (s[i][1] if i >= 0 else None)

    def op_remove(self, s, k):
        i = self._find(s, k)
        if i < 0:
            return s, None
        return s[:i] + s[i + 1:], s[i][1]

    def op_containsKey(self, s, k):
        return s, self._find(s, k) >= 0

    def op_containsValue(self, s, v):
        return s, any(x == v for _, x in s)

    def op_clear(self, s):
        return (), None

    def op_putAll(self, s, m):
        for k, v in m:
            s, _ = self._put(s, k, v)
        return s, None

    def op_size(self, s):
        return s, len(s)

    def op_isEmpty(self, s):
        return s, not s


class FifoQueueSpec(SequentialSpec):
    family = "FifoQueue"
    aliases = ("queue",)
    initial = ()

    @staticmethod
    def _default_methods():
        return dict([
            _m("offer", [X], "bool", U, True),
            _m("poll", [], "value?", U, True),
            _m("peek", [], "value?", R, True),
            _m("clear", [], "unit", U),
            _m("addAll", [C], "bool", U),
            _m("removeAll", [C], "bool", U),
            _m("contains", [X], "bool", R),
            _m("containsAll", [C], "bool", R),
            _m("size", [], "int", R),
            _m("isEmpty", [], "bool", R),
            _m("toArray", [], "list", R),
        ])

    def op_offer(self, s, x):
        return s + (x,), True

    def op_poll(self, s):
        return (s[1:], s[0]) if s else (s, None)

    def op_peek(self, s):
        return s, (s[0] if s else None)

    def op_clear(self, s):
        return (), None

    def op_addAll(self, s, c):
        return s + tuple(c), len(c) > 0

    def op_removeAll(self, s, c):
        kept = tuple(x for x in s if x not in c)
        return kept, len(kept) != len(s)

    def op_contains(self, s, x):
        return s, x in s

    def op_containsAll(self, s, c):
        return s, all(x in s for x in c)

    def op_size(self, s):
        return s, len(s)

    def op_isEmpty(self, s):
        return s, not s

    def op_toArray(self, s):
        return s, tuple(s)


class DequeSpec(FifoQueueSpec):
    family = "Deque"
    aliases = ("deque",)

    @staticmethod
    def _default_methods():
        methods = FifoQueueSpec._default_methods()
        methods.update([
            _m("offerFirst", [X], "bool", U),
            _m("offerLast", [X], "bool", U, True),
            _m("pollFirst", [], "value?", U, True),
            _m("pollLast", [], "value?", U),
            _m("peekFirst", [], "value?", R, True),
            _m("peekLast", [], "value?", R),
        ])
        return methods

    def op_offerFirst(self, s, x):
        return (x,) + s, True

    op_offerLast = FifoQueueSpec.op_offer
    op_pollFirst = FifoQueueSpec.op_poll
    op_peekFirst = FifoQueueSpec.op_peek

    def op_pollLast(self, s):
        return (s[:-1], s[-1]) if s else (s, None)

    def op_peekLast(self, s):
        return s, (s[-1] if s else None)


class OrderedSetSpec(SequentialSpec):
    family = "OrderedSet"
    aliases = ("set",)
    initial = ()

    @staticmethod
    def _default_methods():
        return dict([
            _m("add", [X], "bool", U, True),
            _m("remove", [X], "bool", U, True),
            _m("contains", [X], "bool", R, True),
            _m("clear", [], "unit", U),
            _m("size", [], "int", R),
            _m("isEmpty", [], "bool", R),
            _m("headSet", [X], "list", R),
            _m("subSet", [X, X], "list", R),
        ])

    def op_add(self, s, x):
        if x in s:
            return s, False
        return tuple(sorted(s + (x,))), True

    def op_remove(self, s, x):
        if x not in s:
            return s, False
        return tuple(e for e in s if e != x), True

    def op_contains(self, s, x):
        return s, x in s

    def op_clear(self, s):
        return (), None

    def op_size(self, s):
        return s, len(s)

    def op_isEmpty(self, s):
        return s, not s

    def op_headSet(self, s, j):
        return s, s[: bisect.bisect_left(s, j)]

    def op_subSet(self, s, i, j):
        if i > j:
            return s, EXC
        return s, s[bisect.bisect_left(s, i): bisect.bisect_left(s, j)]


FAMILIES = {cls.family: cls for cls in (OrderedMapSpec, FifoQueueSpec, DequeSpec, OrderedSetSpec)}


def spec_for(family: str, core=None, overrides=None) -> SequentialSpec:
    """Look up a family by name (``OrderedMap`` or alias ``map``, etc.)."""
    for cls in FAMILIES.values():
        if family == cls.family or family.lower() in (cls.family.lower(), *cls.aliases):
            spec = cls()
            break
    else:
        raise SpecError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    if overrides:
        spec = spec.with_overrides(overrides)
    if core is not None:
        spec = spec.with_core(core)
    return spec


def load_overrides(path: str):
    with open(path) as f:
        return json.load(f)


def new_state(spec: SequentialSpec):
    return spec.new_state()


def apply(spec: SequentialSpec, state, inv: Invocation):
    return spec.apply(state, inv)


def classify(spec: SequentialSpec, method: str):
    return spec.classify(method)


def random_invocation(spec: SequentialSpec, rng: random.Random, val: int, methods=None) -> Invocation:
    """Random well-formed invocation with integer arguments in ``[0, val)``."""
    name = rng.choice(sorted(methods or spec.methods))
    args = []
    for kind in spec.methods[name].arg_kinds:
        if kind in SCALAR_KINDS:
            args.append(rng.randrange(val))
        elif kind is ArgKind.COLLECTION:
            args.append((rng.randrange(val), rng.randrange(val)))
        else:
            keys = rng.sample(range(max(val, 2)), 2)
            args.append(MapValue((k, rng.randrange(val)) for k in keys))
    return Invocation(name, tuple(args))


def check_deterministic(spec: SequentialSpec, trials: int = 200, length: int = 12, seed: int = 0):
    """Replay random sequences twice; raise SpecError if any return differs."""
    rng = random.Random(seed)
    for _ in range(trials):
        invs = [random_invocation(spec, rng, 3) for _ in range(rng.randrange(1, length))]
        runs = []
        for _ in range(2):
            s, rets = spec.new_state(), []
            for inv in invs:
                s, r = spec.apply(s, inv)
                rets.append(format_value(r))
            runs.append(rets)
        if runs[0] != runs[1]:
            raise SpecError(f"{spec.family} is not deterministic on {[str(i) for i in invs]}")
