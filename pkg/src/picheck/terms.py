"""Messages, the fixed equational theory, substitutions and frame knowledge.

Messages are tagged tuples so they hash, compare and sort natively:
``("n", ident)`` for names, ``("@", prefix, base)`` for aliases and
``("f", symbol, *args)`` for function applications.
"""
from __future__ import annotations

import gc
import itertools
import re
from contextlib import contextmanager
from functools import lru_cache
from operator import itemgetter
from typing import Iterable, Iterator, Mapping, NamedTuple

ARITY = {"pair": 2, "fst": 1, "snd": 1, "enc": 2, "dec": 2, "mac": 2, "h": 1}
SYMBOLS = tuple(ARITY)


class TermError(ValueError):
    pass


class Message(tuple):
    __slots__ = ()

    def __repr__(self) -> str:
        return show(self)


class Name(Message):
    """A name. Free names are public constants, variables share this class."""

    __slots__ = ()
    ident = property(itemgetter(1))

    def __new__(cls, ident: str):
        return tuple.__new__(cls, ("n", ident))

    def __getnewargs__(self):
        return (self[1],)


class Alias(Message):
    """A located alias ``prefix:base``; the prefix is a string over {0,1}."""

    __slots__ = ()
    prefix = property(itemgetter(1))
    base = property(itemgetter(2))

    def __new__(cls, prefix: str, base: str):
        return tuple.__new__(cls, ("@", prefix, base))

    def __getnewargs__(self):
        return (self[1], self[2])


class Apply(Message):
    __slots__ = ()
    symbol = property(itemgetter(1))

    def __new__(cls, symbol: str, *args: Message):
        if ARITY.get(symbol) != len(args):
            raise TermError(f"{symbol} expects {ARITY.get(symbol)} arguments, got {len(args)}")
        return tuple.__new__(cls, ("f", symbol) + args)

    @property
    def args(self) -> tuple:
        return self[2:]

    def __getnewargs__(self):
        return self[1:]


def app(symbol: str, *args: Message) -> Apply:
    """Unchecked constructor used on hot paths."""
    return tuple.__new__(Apply, ("f", symbol) + args)


def show(m: Message) -> str:
    tag = m[0]
    if tag == "n":
        return m[1]
    if tag == "@":
        return f"@{'.'.join(m[1])}:{m[2]}"
    return f"{m[1]}({', '.join(show(a) for a in m[2:])})"


# equational theory -------------------------------------------------------

def _root(symbol: str, args: tuple) -> Message:
    a = args[0]
    if a[0] == "f":
        if symbol == "fst" and a[1] == "pair":
            return a[2]
        if symbol == "snd" and a[1] == "pair":
            return a[3]
        if symbol == "dec" and a[1] == "enc" and a[3] == args[1]:
            return a[2]
    return tuple.__new__(Apply, ("f", symbol) + args)


def normalize(m: Message) -> Message:
    """Innermost rewriting with fst/snd of pairs and dec of enc under the same key."""
    if m[0] != "f":
        return m
    return _root(m[1], tuple(normalize(a) for a in m[2:]))


def eq_modulo(m: Message, n: Message) -> bool:
    return normalize(m) == normalize(n)


@contextmanager
def collector_paused():
    """Pause the cycle collector; searches allocate many long-lived acyclic tuples."""
    was = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was:
            gc.enable()


class _IdCache:
    """Results keyed by object identity; the key object is kept alive."""

    def __init__(self, fn, limit: int = 200_000):
        self.fn = fn
        self.limit = limit
        self.table: dict = {}

    def __call__(self, p):
        hit = self.table.get(id(p))
        if hit is not None and hit[0] is p:
            return hit[1]
        if len(self.table) >= self.limit:
            self.table.clear()
        res = self.fn(p)
        self.table[id(p)] = (p, res)
        return res


_atoms = _IdCache(lambda m: frozenset(s for s in subterms(m) if s[0] != "f"))


def substitute(m: Message, mapping: Mapping[Message, Message]) -> Message:
    """Replace atoms (names or aliases) occurring as keys of ``mapping``."""
    if m[0] == "f":
        if not any(a in mapping for a in _atoms(m)):
            return m
        return _subst_term(m, mapping)
    return mapping.get(m, m)


def _subst_term(m: Message, mapping: Mapping[Message, Message]) -> Message:
    if m[0] == "f":
        args = m[2:]
        new = tuple(_subst_term(a, mapping) for a in args)
        if all(x is y for x, y in zip(new, args)):
            return m
        return tuple.__new__(Apply, m[:2] + new)
    return mapping.get(m, m)


def subterms(m: Message) -> Iterator[Message]:
    yield m
    if m[0] == "f":
        for a in m[2:]:
            yield from subterms(a)


def names(m: Message) -> set[str]:
    return {t[1] for t in subterms(m) if t[0] == "n"}


def aliases(m: Message) -> set[Alias]:
    return {t for t in subterms(m) if t[0] == "@"}


def height(m: Message) -> int:
    if m[0] != "f":
        return 1
    return 1 + max(height(a) for a in m[2:])


# concrete syntax ---------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<alias>@[01.]*:[A-Za-z_][\w#']*)"
    r"|(?P<id>[A-Za-z_][\w#']*)"
    r"|(?P<num>[01]+)"
    r"|(?P<op>!=|->|<>|[()\[\]{},.|!+=<>~&@:;]))"
)


class Tokens:
    """A token stream shared by the message, process and formula parsers."""

    def __init__(self, text: str):
        text = _strip_comments(text)
        self.items: list[tuple[str, str, int]] = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            mo = _TOKEN.match(text, pos)
            if not mo or mo.end() == pos:
                raise TermError(f"unexpected character {text[pos]!r} at offset {pos}")
            kind = mo.lastgroup
            self.items.append((kind, mo.group(kind), mo.start(kind)))
            pos = mo.end()
        self.end = len(text)
        self.i = 0

    def peek(self, k: int = 0) -> tuple[str, str, int] | None:
        j = self.i + k
        return self.items[j] if j < len(self.items) else None

    def at(self, value: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok is not None and tok[1] == value and tok[0] in ("op", "id", "num")

    def take(self, value: str | None = None, kind: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise TermError(f"unexpected end of input at offset {self.end}, expected {value or kind}")
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            raise TermError(f"expected {value or kind} at offset {tok[2]}, found {tok[1]!r}")
        self.i += 1
        return tok[1]

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.i += 1
            return True
        return False

    def done(self) -> bool:
        return self.i >= len(self.items)

    def expect_end(self) -> None:
        if not self.done():
            tok = self.peek()
            raise TermError(f"trailing input at offset {tok[2]}: {tok[1]!r}")


def _strip_comments(text: str) -> str:
    # '#' begins a comment only when it cannot continue an identifier
    out = []
    for line in text.split("\n"):
        for i, ch in enumerate(line):
            if ch == "#" and (i == 0 or not (line[i - 1].isalnum() or line[i - 1] in "_#'")):
                line = line[:i]
                break
        out.append(line)
    return "\n".join(out)


def parse_message_tokens(ts: Tokens) -> Message:
    tok = ts.peek()
    if tok is None:
        raise TermError(f"expected a message at offset {ts.end} (end of input)")
    kind, value, _ = tok
    if kind == "alias":
        ts.i += 1
        prefix, base = value[1:].split(":")
        return Alias(prefix.replace(".", ""), base)
    if kind != "id":
        raise TermError(f"expected a message at offset {tok[2]}, found {value!r}")
    ts.i += 1
    if value in ARITY and ts.at("("):
        ts.take("(")
        args = [parse_message_tokens(ts)]
        while ts.accept(","):
            args.append(parse_message_tokens(ts))
        ts.take(")")
        return Apply(value, *args)
    return Name(value)


def parse_message(text: str) -> Message:
    ts = Tokens(text)
    m = parse_message_tokens(ts)
    ts.expect_end()
    return m


# deduction ----------------------------------------------------------------

class Knowledge:
    """What an attacker deduces from a frame, with one recipe per deducible message.

    The frame maps aliases to alias-free messages in normal form; ``private``
    holds the names bound by the surrounding extended process.
    """

    def __init__(self, frame: Iterable[tuple[Alias, Message]], private: Iterable[str]):
        self.frame = tuple(sorted(frame))
        self.private = frozenset(private)
        self.known: dict[Message, Message] = {}
        self._saturate()

    def _public(self, m: Message) -> bool:
        return m[0] == "n" and m[1] not in self.private

    def _saturate(self) -> None:
        known = self.known
        pool: list[Message] = []
        for _, m in self.frame:
            pool.extend(subterms(m))
        # public names are their own recipes, so they never create a link to an alias
        for t in pool:
            if self._public(t):
                known.setdefault(t, t)
        for alias, m in self.frame:
            known.setdefault(m, alias)
        pending = [t for t in dict.fromkeys(pool) if t not in known and t[0] == "f"]
        changed = True
        while changed:
            changed = False
            for m, r in list(known.items()):
                if m[0] != "f":
                    continue
                if m[1] == "pair":
                    for sym, part in (("fst", m[2]), ("snd", m[3])):
                        if part not in known:
                            known[part] = app(sym, r)
                            changed = True
                elif m[1] == "enc" and m[2] not in known:
                    k = self.recipe(m[3])
                    if k is not None:
                        known[m[2]] = app("dec", r, k)
                        changed = True
            rest = []
            for t in pending:
                if t in known:
                    continue
                rs = [known.get(a) for a in t[2:]]
                if all(x is not None for x in rs):
                    known[t] = app(t[1], *rs)
                    changed = True
                else:
                    rest.append(t)
            pending = rest

    def recipe(self, m: Message) -> Message | None:
        """A recipe for the normal-form message ``m``, or None if it is not deducible."""
        r = self.known.get(m)
        if r is not None:
            return r
        if m[0] == "n":
            return m if m[1] not in self.private else None
        if m[0] == "f":
            rs = []
            for a in m[2:]:
                x = self.recipe(a)
                if x is None:
                    return None
                rs.append(x)
            return app(m[1], *rs)
        return None

    def recipes(self) -> list[Message]:
        return sorted(set(self.known.values()))


def apply_frame(recipe: Message, frame: Mapping[Alias, Message]) -> Message:
    return normalize(substitute(recipe, frame))


def _class_table(values: list[Message]) -> dict[Message, int]:
    table: dict[Message, int] = {}
    for i, v in enumerate(values):
        table.setdefault(v, i)
    return table


class Frame(NamedTuple):
    """The attacker-visible part of an extended process."""

    bound_names: tuple = ()
    subst: tuple = ()  # sorted (alias, message) pairs

    @classmethod
    def of(cls, mapping: Mapping[Alias, Message], bound: Iterable[str] = ()) -> "Frame":
        return cls(tuple(sorted(bound)), tuple(sorted((k, normalize(v)) for k, v in mapping.items())))

    def mapping(self) -> dict[Alias, Message]:
        return dict(self.subst)


@lru_cache(maxsize=1 << 14)
def knowledge(subst: tuple, bound: tuple) -> Knowledge:
    return Knowledge(subst, bound)


def satisfies_equality(a, m: Message, n: Message) -> bool:
    """``a`` is anything with ``names`` and ``frame`` (or a Frame)."""
    bound, subst = _view(a)
    clash = (names(m) | names(n)) & set(bound)
    if clash:
        raise TermError(f"equality test mentions bound names {sorted(clash)}")
    frame = dict(subst)
    stray = (aliases(m) | aliases(n)) - set(frame)
    if stray:
        raise TermError(f"equality test mentions aliases outside the frame: {sorted(map(show, stray))}")
    return apply_frame(m, frame) == apply_frame(n, frame)


def _view(a) -> tuple[tuple, tuple]:
    if isinstance(a, Frame):
        return a.bound_names, a.subst
    return a.names, a.frame


def static_equivalent(a, b, rho: Mapping[Alias, Alias] | None = None) -> bool:
    """Decide whether every recipe equality holds in one frame iff it holds in the other.

    ``a`` and ``b`` are frames or extended processes; ``rho`` maps the aliases
    of ``a`` bijectively onto those of ``b`` (identity when omitted). Both
    saturations are pooled into a common recipe set Z; the frames agree iff Z
    induces the same partition on both sides and every one-symbol extension
    of Z lands in corresponding classes.
    """
    bound_a, subst_a = _view(a)
    bound_b, subst_b = _view(b)
    frame_a, frame_b = dict(subst_a), dict(subst_b)
    if rho is None:
        rho = {k: k for k in frame_a}
    if set(rho) != set(frame_a) or set(rho.values()) != set(frame_b) or len(set(rho.values())) != len(rho):
        raise TermError("rho is not a bijection between the two frame domains")
    return _static_equivalent_apart(tuple(sorted(subst_a)), tuple(sorted(bound_a)),
                                    tuple(sorted(subst_b)), tuple(sorted(bound_b)),
                                    tuple(sorted(rho.items())))


@lru_cache(maxsize=1 << 15)
def _static_equivalent_apart(subst_a, bound_a, subst_b, bound_b, rho_items) -> bool:
    subst_a, bound_a = _apart(subst_a, bound_a, "#a")
    subst_b, bound_b = _apart(subst_b, bound_b, "#b")
    return _static_equivalent(subst_a, bound_a, subst_b, bound_b, rho_items)


def _apart(subst, bound, tag: str):
    # bound names of the two sides must differ from each other and from every public name
    ren = {Name(x): Name(f"{x}{tag}{i}") for i, x in enumerate(sorted(bound))}
    subst = tuple(sorted((k, substitute(v, ren)) for k, v in subst))
    return subst, tuple(sorted(n[1] for n in ren.values()))


def _static_equivalent(subst_a, bound_a, subst_b, bound_b, rho_items) -> bool:
    rho = dict(rho_items)
    inv = {v: k for k, v in rho.items()}
    frame_b = dict(subst_b)
    ka = knowledge(subst_a, bound_a)
    kb = knowledge(subst_b, bound_b)
    zs = set(ka.known.values())
    zs.update(substitute(r, inv) for r in kb.known.values())
    # every alias and every public name of either frame, even when another recipe covers its value
    zs.update(rho)
    private = set(bound_a) | set(bound_b)
    for _, m in subst_a + subst_b:
        zs.update(t for t in subterms(m) if t[0] == "n" and t[1] not in private)
    zs = sorted(zs)
    fa = dict(subst_a)
    fb = {k: frame_b[rho[k]] for k in fa}
    va = [apply_frame(r, fa) for r in zs]
    vb = [apply_frame(r, fb) for r in zs]
    ta, tb = _class_table(va), _class_table(vb)
    for x, y in zip(va, vb):
        if ta[x] != tb[y]:
            return False
    reps = sorted(set(ta.values()))
    for sym, n in ARITY.items():
        for combo in itertools.product(reps, repeat=n):
            x = _root(sym, tuple(va[i] for i in combo))
            y = _root(sym, tuple(vb[i] for i in combo))
            if ta.get(x) != tb.get(y):
                return False
    return True
