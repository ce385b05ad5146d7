"""Argument and return values.

Values are plain Python objects so that the stress loop never has to box
anything:

    null        None
    true/false  bool
    integers    int
    lists       tuple
    maps        MapValue (a tuple of (key, value) pairs sorted by key)
    ()          UNIT, the result of a void method
    E           EXC, any exception

Outcomes are tuples of values indexed by invocation index.
"""

from __future__ import annotations


class _Symbol:
    __slots__ = ("_text", "_name")

    def __init__(self, text: str, name: str):
        self._text = text
        self._name = name

    def __repr__(self):
        return self._text

    def __reduce__(self):
        return self._name


UNIT = _Symbol("()", "UNIT")
EXC = _Symbol("E", "EXC")


class MapValue(tuple):
    """Key/value pairs, normalized to ascending key order."""

    __slots__ = ()

    def __new__(cls, pairs=()):
        if isinstance(pairs, dict):
            pairs = pairs.items()
        pairs = sorted(pairs, key=lambda kv: kv[0])
        keys = [k for k, _ in pairs]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate map keys: {keys}")
        return super().__new__(cls, (tuple(kv) for kv in pairs))

    def __repr__(self):
        return "MapValue(%s)" % (tuple(self),)


def format_value(v, arg: bool = False) -> str:
    """Render a value; ``arg=True`` uses braces for collections, as in harness text."""
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if v is UNIT:
        return "()"
    if v is EXC:
        return "E"
    if isinstance(v, int):
        return str(v)
    open_, close = ("{", "}") if arg else ("[", "]")
    if isinstance(v, MapValue):
        body = ",".join(f"{format_value(k, arg)}={format_value(x, arg)}" for k, x in v)
        return open_ + body + close
    if isinstance(v, tuple):
        return open_ + ",".join(format_value(x, arg) for x in v) + close
    raise TypeError(f"not a value: {v!r}")


def format_outcome(outcome, sep: str = ", ") -> str:
    return sep.join(format_value(v) for v in outcome)


def encode_outcome(outcome) -> bytes:
    """Canonical byte encoding; distinguishes true from 1, unlike tuple equality."""
    return "|".join(format_value(v) for v in outcome).encode()


def value_ints(v):
    """Integers occurring in a value, including collection members."""
    if v is None or v is UNIT or v is EXC or isinstance(v, bool):
        return
    if isinstance(v, int):
        yield v
    elif isinstance(v, tuple):
        for x in v:
            yield from value_ints(x)


def same_value(a, b) -> bool:
    if a is b:
        return True
    if type(a) is not type(b):
        return False
    if isinstance(a, tuple):
        return len(a) == len(b) and all(same_value(x, y) for x, y in zip(a, b))
    return a == b


# -- parsing ---------------------------------------------------------------

_WORDS = {
    "null": None, "N": None,
    "true": True, "T": True,
    "false": False, "F": False,
    "E": EXC,
}


class ValueSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.message = message
        self.text = text
        self.pos = pos


class ValueReader:
    """Cursor over a string; shared with the harness parser."""

    def __init__(self, text: str, pos: int = 0):
        self.text = text
        self.pos = pos

    def error(self, message: str):
        return ValueSyntaxError(message, self.text, self.pos)

    def skip_ws(self):
        text, n = self.text, len(self.text)
        while self.pos < n and text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, token: str):
        self.skip_ws()
        if not self.text.startswith(token, self.pos):
            raise self.error(f"expected {token!r}")
        self.pos += len(token)

    def accept(self, token: str) -> bool:
        self.skip_ws()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def word(self) -> str:
        self.skip_ws()
        start = self.pos
        text, n = self.text, len(self.text)
        while self.pos < n and (text[self.pos].isalnum() or text[self.pos] == "_"):
            self.pos += 1
        if start == self.pos:
            raise self.error("expected a name")
        return text[start:self.pos]

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        if self.pos < len(self.text) and self.text[self.pos] == "-":
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.text[start:self.pos] in ("", "-"):
            self.pos = start
            raise self.error("expected an integer")
        return int(self.text[start:self.pos])

    def value(self):
        c = self.peek()
        if not c:
            raise self.error("unexpected end of input")
        if c == "(":
            self.expect("(")
            self.expect(")")
            return UNIT
        if c in "[{":
            return self._collection()
        if c == "-" or c.isdigit():
            return self.integer()
        start = self.pos
        w = self.word()
        if w not in _WORDS:
            self.pos = start
            raise self.error(f"unknown value {w!r}")
        return _WORDS[w]

    def _collection(self):
        close = "]" if self.peek() == "[" else "}"
        self.pos += 1
        items, pairs = [], []
        if not self.accept(close):
            while True:
                first = self.value()
                if self.accept("="):
                    pairs.append((first, self.value()))
                else:
                    items.append(first)
                if self.accept(close):
                    break
                self.expect(",")
        if items and pairs:
            raise self.error("collection mixes entries and elements")
        return MapValue(pairs) if pairs else tuple(items)


def parse_value(text: str):
    r = ValueReader(text)
    v = r.value()
    if r.peek():
        raise r.error("trailing input")
    return v


def parse_outcome(text: str, slots: int | None = None) -> tuple:
    """Parse ``null, (), null, true``, optionally wrapped in brackets or parens.

    A bracketed text such as ``[0,1]`` is either one list-valued slot or two
    wrapped slots; ``slots`` (the harness's invocation count) decides.
    Without it the wrapped reading wins.
    """
    body = text.strip()
    readings = []
    if len(body) >= 2 and (body[0], body[-1]) in (("[", "]"), ("(", ")")) and body != "()":
        readings.append(body[1:-1])
    readings.append(body)
    if slots is not None:
        readings.reverse()
    error = None
    for r in readings:
        try:
            out = _slots(ValueReader(r))
        except ValueSyntaxError as e:
            error = error or e
            continue
        if slots is None or len(out) == slots:
            return out
    if error is not None:
        raise error
    raise ValueSyntaxError(f"expected {slots} outcome slots", text, 0)


def _slots(r: ValueReader) -> tuple:
    out = [r.value()]
    while r.accept(","):
        out.append(r.value())
    if r.peek():
        raise r.error("trailing input")
    return tuple(out)
