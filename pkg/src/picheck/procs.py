"""Processes, extended processes, their concrete syntax and canonical forms."""
from __future__ import annotations

import itertools
from operator import itemgetter
from typing import Mapping

from .terms import (
    _IdCache,
    Alias,
    Message,
    Name,
    TermError,
    Tokens,
    aliases,
    names,
    normalize,
    parse_message_tokens,
    show,
    substitute,
)


class ParseError(TermError):
    pass


class Process(tuple):
    __slots__ = ()

    def __repr__(self) -> str:
        return pretty(self)


def _node(cls_name: str, tag: str, fields: tuple[str, ...]) -> type:
    def __new__(cls, *args):
        if len(args) != len(fields):
            raise TypeError(f"{cls_name} takes {len(fields)} fields")
        return tuple.__new__(cls, (tag,) + args)

    ns = {"__slots__": (), "__new__": __new__, "tag": tag, "_fields": fields,
          "__getnewargs__": lambda self: tuple(self[1:])}
    for i, f in enumerate(fields, start=1):
        ns[f] = property(itemgetter(i))
    return type(cls_name, (Process,), ns)


Nil = _node("Nil", "0", ())
New = _node("New", "new", ("name", "body"))
Par = _node("Par", "par", ("left", "right"))
Bang = _node("Bang", "!", ("body",))
Match = _node("Match", "match", ("lhs", "rhs", "body"))
In = _node("In", "in", ("channel", "var", "body"))
Out = _node("Out", "out", ("channel", "payload", "body"))
Sum = _node("Sum", "sum", ("left", "right"))
IfThenElse = _node("IfThenElse", "if", ("lhs", "rhs", "then", "orelse"))

NIL = Nil()


class ExtendedProcess(tuple):
    """``new names.(frame | body)`` with an alias-free body and frame range."""

    __slots__ = ()
    names = property(itemgetter(0))
    frame = property(itemgetter(1))
    body = property(itemgetter(2))

    def __new__(cls, names=(), frame=(), body=NIL):
        return tuple.__new__(cls, (tuple(sorted(names)), tuple(sorted(frame)), body))

    def __getnewargs__(self):
        return tuple(self)

    def subst(self) -> dict[Alias, Message]:
        return dict(self.frame)

    def __repr__(self) -> str:
        return pretty_ext(self)


def guarded(p: Process) -> bool:
    tag = p[0]
    if tag in ("in", "out"):
        return True
    if tag == "sum":
        return guarded(p[1]) and guarded(p[2])
    if tag == "match":
        return guarded(p[3])
    if tag == "new":
        return guarded(p[2])
    return False


# names and substitution ---------------------------------------------------

def process_messages(p: Process):
    tag = p[0]
    if tag == "in":
        yield p[1]
    elif tag == "out":
        yield p[1]
        yield p[2]
    elif tag in ("match", "if"):
        yield p[1]
        yield p[2]
    for child in children(p):
        yield from process_messages(child)


def children(p: Process) -> tuple:
    tag = p[0]
    if tag in ("par", "sum"):
        return (p[1], p[2])
    if tag in ("new", "!"):
        return (p[-1],)
    if tag == "match":
        return (p[3],)
    if tag in ("in", "out"):
        return (p[3],)
    if tag == "if":
        return (p[3], p[4])
    return ()


def free_names(p: Process) -> set[str]:
    return set(_free_names(p))


_free_names = _IdCache(lambda p: frozenset(_compute_free_names(p)))


def _compute_free_names(p) -> frozenset:
    tag = p[0]
    if tag == "0":
        return frozenset()
    if tag == "new":
        return _free_names(p[2]) - {p[1]}
    if tag == "in":
        return names(p[1]) | (_free_names(p[3]) - {p[2]})
    if tag == "out":
        return names(p[1]) | names(p[2]) | _free_names(p[3])
    if tag == "match":
        return names(p[1]) | names(p[2]) | _free_names(p[3])
    if tag == "if":
        return names(p[1]) | names(p[2]) | _free_names(p[3]) | _free_names(p[4])
    out = frozenset()
    for c in children(p):
        out |= _free_names(c)
    return out


def bound_names(p: Process) -> set[str]:
    tag = p[0]
    out = {p[1]} if tag == "new" else {p[2]} if tag == "in" else set()
    for c in children(p):
        out |= bound_names(c)
    return out


def process_aliases(p: Process) -> set[Alias]:
    out: set[Alias] = set()
    for m in process_messages(p):
        out |= aliases(m)
    return out


_fresh = itertools.count()


def fresh_name(stem: str) -> str:
    """A name that cannot clash with user names or canonical bound names."""
    return f"{stem.split('#')[0]}#f{next(_fresh)}"


def reset_fresh() -> None:
    """Restart fresh-name numbering so that runs are reproducible."""
    global _fresh
    _fresh = itertools.count()


def stem(name: str) -> str:
    return name.split("#")[0]


def subst_process(p: Process, mapping: Mapping[str, Message]) -> Process:
    """Capture-avoiding substitution of names by messages."""
    if not mapping:
        return p
    msub = {Name(k): v for k, v in mapping.items()}
    rng = set()
    for v in mapping.values():
        rng |= names(v)
    return _subst(p, msub, rng)


def _subst(p, msub, rng):
    tag = p[0]
    if tag == "0":
        return p
    if tag in ("new", "in"):
        x = p[1] if tag == "new" else p[2]
        inner = msub
        if Name(x) in msub:
            inner = {k: v for k, v in msub.items() if k != Name(x)}
        body = p[-1]
        if x in rng:
            y = fresh_name(x)
            body = _subst(body, {Name(x): Name(y)}, {y})
            x = y
        body = _subst(body, inner, rng) if inner else body
        if tag == "new":
            return New(x, body)
        return In(substitute(p[1], msub), x, body)
    if tag == "out":
        return Out(substitute(p[1], msub), substitute(p[2], msub), _subst(p[3], msub, rng))
    if tag == "match":
        return Match(substitute(p[1], msub), substitute(p[2], msub), _subst(p[3], msub, rng))
    if tag == "if":
        return IfThenElse(substitute(p[1], msub), substitute(p[2], msub),
                          _subst(p[3], msub, rng), _subst(p[4], msub, rng))
    if tag == "!":
        return Bang(_subst(p[1], msub, rng))
    return type(p)(_subst(p[1], msub, rng), _subst(p[2], msub, rng))


# parsing ------------------------------------------------------------------

_KEYWORDS = {"new", "in", "out", "if", "then", "else", "let", "def"}


class _Parser:
    def __init__(self, text: str, defs: dict | None = None):
        self.ts = Tokens(text)
        self.defs: dict[str, tuple[tuple[str, ...], Process]] = dict(defs or {})

    def err(self, msg: str) -> ParseError:
        tok = self.ts.peek()
        where = f" at offset {tok[2]} ({tok[1]!r})" if tok else f" at offset {self.ts.end} (end of input)"
        return ParseError(msg + where)

    def message(self) -> Message:
        try:
            return parse_message_tokens(self.ts)
        except ParseError:
            raise
        except TermError as e:
            raise ParseError(str(e)) from None

    def ident(self) -> str:
        tok = self.ts.peek()
        if tok is None or tok[0] != "id" or tok[1] in _KEYWORDS:
            raise self.err("expected an identifier")
        self.ts.i += 1
        return tok[1]

    def name_list(self) -> list[str]:
        out = [self.ident()]
        while self.ts.accept(","):
            out.append(self.ident())
        return out

    def par(self) -> Process:
        left = self.sum()
        if self.ts.accept("|"):
            return Par(left, self.par())
        return left

    def sum(self) -> Process:
        start = self.ts.peek()
        left = self.unary()
        if self.ts.at("+"):
            self.ts.take("+")
            right = self.sum()
            if not (guarded(left) and guarded(right)):
                raise ParseError(f"unguarded sum at offset {start[2]}: both branches must start with in/out")
            return Sum(left, right)
        return left

    def continuation(self) -> Process:
        if self.ts.accept("."):
            return self.unary()
        return NIL

    def unary(self) -> Process:
        ts = self.ts
        tok = ts.peek()
        if tok is None:
            raise self.err("expected a process")
        kind, value, _ = tok
        if kind == "num" and value == "0":
            ts.i += 1
            return NIL
        if value == "(" and kind == "op":
            ts.i += 1
            p = self.par()
            ts.take(")")
            return p
        if value == "!" and kind == "op":
            ts.i += 1
            return Bang(self.unary())
        if value == "[" and kind == "op":
            ts.i += 1
            m = self.message()
            ts.take("=")
            n = self.message()
            ts.take("]")
            return Match(m, n, self.unary())
        if kind != "id":
            raise self.err("expected a process")
        if value == "new":
            ts.i += 1
            xs = self.name_list()
            ts.take(".")
            body = self.unary()
            for x in reversed(xs):
                body = New(x, body)
            return body
        if value == "in":
            ts.i += 1
            ts.take("(")
            ch = self.message()
            ts.take(",")
            x = self.ident()
            ts.take(")")
            return In(ch, x, self.continuation())
        if value == "out":
            ts.i += 1
            ts.take("(")
            ch = self.message()
            ts.take(",")
            m = self.message()
            ts.take(")")
            return Out(ch, m, self.continuation())
        if value == "if":
            ts.i += 1
            m = self.message()
            ts.take("=")
            n = self.message()
            ts.take("then")
            p = self.unary()
            ts.take("else")
            return IfThenElse(m, n, p, self.unary())
        if value == "let":
            ts.i += 1
            x = self.ident()
            ts.take("=")
            m = self.message()
            ts.take("in")
            return subst_process(self.unary(), {x: m})
        if value in self.defs:
            ts.i += 1
            params, body = self.defs[value]
            args: list[Message] = []
            if ts.accept("("):
                if not ts.at(")"):
                    args.append(self.message())
                    while ts.accept(","):
                        args.append(self.message())
                ts.take(")")
            if len(args) != len(params):
                raise ParseError(f"{value} expects {len(params)} arguments, got {len(args)}")
            return subst_process(body, dict(zip(params, args)))
        raise self.err("expected a process")

    def definition(self) -> None:
        self.ts.take("def")
        name = self.ident()
        params: list[str] = []
        if self.ts.accept("("):
            if not self.ts.at(")"):
                params = self.name_list()
            self.ts.take(")")
        self.ts.take("=")
        self.defs[name] = (tuple(params), self.par())

    def frame_entries(self) -> list[tuple[Alias, Message]]:
        entries = []
        self.ts.take("{")
        while not self.ts.at("}"):
            a = self.message()
            if a[0] != "@":
                raise self.err("frame keys must be aliases")
            self.ts.take("=")
            entries.append((a, normalize(self.message())))
            if not self.ts.accept(","):
                break
        self.ts.take("}")
        return entries

    def extended(self) -> ExtendedProcess:
        ts = self.ts
        # new names . { frame } | body  is an extended process with a frame
        save = ts.i
        bound: list[str] = []
        while ts.at("new"):
            ts.take("new")
            bound += self.name_list()
            ts.take(".")
        if ts.at("{"):
            frame = self.frame_entries()
            body = self.par() if ts.accept("|") else NIL
            return make_extended(bound, frame, body)
        ts.i = save
        return make_extended((), (), self.par())


def make_extended(bound, frame, body: Process) -> ExtendedProcess:
    for a, m in frame:
        if aliases(m):
            raise ParseError(f"frame entry {show(a)} is not alias-free")
    if process_aliases(body):
        raise ParseError("process body mentions aliases; only frames and recipes may")
    return ExtendedProcess(bound, frame, body)


def parse_process(text: str, defs: dict | None = None) -> ExtendedProcess:
    """Parse a file: ``def`` blocks followed by one extended process."""
    defs_out, top = parse_file(text, defs)
    if top is None:
        raise ParseError("no top-level process")
    return top


def parse_file(text: str, defs: dict | None = None):
    p = _Parser(text, defs)
    while p.ts.at("def"):
        p.definition()
    top = None
    if not p.ts.done():
        top = p.extended()
        p.ts.expect_end()
    return p.defs, top


def definition_process(defs: dict, name: str) -> ExtendedProcess:
    params, body = defs[name]
    if params:
        raise ParseError(f"{name} takes parameters")
    return make_extended((), (), body)


# printing -----------------------------------------------------------------

def pretty(p: Process) -> str:
    return _pp(p, 0)


# precedence: 0 par, 1 sum, 2 prefix
def _pp(p: Process, ctx: int) -> str:
    tag = p[0]
    if tag == "par":
        s = f"{_pp(p[1], 1)} | {_pp(p[2], 0)}"
        return f"({s})" if ctx > 0 else s
    if tag == "sum":
        s = f"{_pp(p[1], 2)} + {_pp(p[2], 1)}"
        return f"({s})" if ctx > 1 else s
    if tag == "0":
        return "0"
    if tag == "new":
        xs = [p[1]]
        body = p[2]
        while body[0] == "new":
            xs.append(body[1])
            body = body[2]
        return f"new {','.join(xs)}.{_pp(body, 2)}"
    if tag == "!":
        return f"!{_pp(p[1], 2)}"
    if tag == "match":
        return f"[{show(p[1])} = {show(p[2])}]{_pp(p[3], 2)}"
    if tag == "if":
        return f"if {show(p[1])} = {show(p[2])} then {_pp(p[3], 2)} else {_pp(p[4], 2)}"
    if tag == "in":
        head = f"in({show(p[1])}, {p[2]})"
    else:
        head = f"out({show(p[1])}, {show(p[2])})"
    if p[3][0] == "0":
        return head
    return f"{head}.{_pp(p[3], 2)}"


def pretty_ext(a: ExtendedProcess) -> str:
    if not a.names and not a.frame:
        return pretty(a.body)
    head = f"new {','.join(a.names)}." if a.names else ""
    frame = ", ".join(f"{show(k)} = {show(v)}" for k, v in a.frame)
    if a.body[0] == "0":
        return f"{head}{{{frame}}}"
    return f"{head}{{{frame}}} | {pretty(a.body)}"


# canonical forms -------------------------------------------------------------

def threads(p: Process) -> list[Process]:
    """Flatten parallel composition, dropping inert components."""
    if p[0] == "par":
        return threads(p[1]) + threads(p[2])
    if p[0] == "0":
        return []
    return [p]


def _rebuild(ts: list[Process]) -> Process:
    if not ts:
        return NIL
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Par(t, out)
    return out




def _shape(p):
    # sort key with bound names abstracted; only bound names contain '#'
    if isinstance(p, Process):
        return _process_shape(p)
    if isinstance(p, tuple) and p:
        if p[0] == "n":
            return ("n", "#") if "#" in p[1] else p
        if p[0] == "f":
            return _term_shape(p)
        return tuple(_shape(x) for x in p)
    return p


_term_shape = _IdCache(lambda m: tuple(_shape(x) for x in m))


# shapes are invariant under renaming bound names, so renamed copies can reuse them
_process_shape = _IdCache(lambda p: tuple(_shape(x) for x in p))


def _thread_shape(t):
    return (_process_shape(t), t)


def canonical(a: ExtendedProcess, interleaving: bool = False) -> ExtendedProcess:
    """Rename top-level bound names by first occurrence and drop unused ones.

    With ``interleaving`` the body is also flattened into a sorted parallel
    composition without inert threads, and summands are sorted; that
    quotient forgets locations. Names are then numbered starting from the
    frame and the threads whose shape is unique, so that choices between
    symmetric copies (for instance sessions that differ only in their keys)
    tend to meet in one representative.
    """
    bound = set(a.names)
    body = a.body
    if interleaving:
        ts = [_ordered_sums(t) for t in threads(body)]
        ts.sort(key=_thread_shape)
        counts: dict = {}
        for t in ts:
            sh = _thread_shape(t)[0]
            counts[sh] = counts.get(sh, 0) + 1
        visit = [t for t in ts if counts[_thread_shape(t)[0]] == 1]
        visit += [t for t in ts if counts[_thread_shape(t)[0]] > 1]
    else:
        visit = ts = threads(body)
    order: dict[str, None] = {}
    for _, m in a.frame:
        for x in _ordered_names(m):
            if x in bound:
                order.setdefault(x)
    for t in visit:
        for x in _thread_order(t):
            if x in bound:
                order.setdefault(x)
    if interleaving:
        # stems would tell symmetric copies apart
        ren = {x: f"n#{i}" for i, x in enumerate(order)}
    else:
        ren = {x: f"{stem(x)}#{i}" for i, x in enumerate(order)}
    mapping = {Name(x): Name(y) for x, y in ren.items() if x != y}
    frame = tuple((k, substitute(v, mapping)) for k, v in a.frame) if mapping else a.frame
    if interleaving:
        if mapping:
            keyed = [(_process_shape(t), _rename_thread(t, mapping)) for t in ts]
            keyed.sort()
            ts = [t for _, t in keyed]
        body = _rebuild(ts)
    elif mapping:
        body = _rename_free(body, mapping)
    names_ = tuple(sorted(ren.values()))
    if names_ == a.names and frame is a.frame and body is a.body:
        return a
    return ExtendedProcess(names_, frame, body)


def _summands(p) -> list:
    if p[0] == "sum":
        return _summands(p[1]) + _summands(p[2])
    return [p]


def _sort_sums(p):
    tag = p[0]
    if tag == "sum":
        parts = [_ordered_sums(x) for x in _summands(p)]
        parts.sort(key=_thread_shape)
        out = parts[-1]
        for x in reversed(parts[:-1]):
            out = Sum(x, out)
        return out
    kids = children(p)
    if not kids:
        return p
    new = {id(k): _ordered_sums(k) for k in kids}
    if all(new[id(k)] is k for k in kids):
        return p
    return type(p)(*(new.get(id(x), x) if isinstance(x, Process) else x for x in p[1:]))


_ordered_sums = _IdCache(_sort_sums)


# names of a thread in order of first occurrence
_thread_order = _IdCache(lambda t: tuple(_first_occurrence(t)))


def _rename_free(p, mapping, resort: bool = False):
    """A simultaneous renaming of top-level names.

    With ``resort`` summands are put back in canonical order; their shapes
    are taken from the originals, which renaming does not change.
    """
    tag = p[0]
    if tag == "0":
        return p
    fn = _free_names(p)
    if not any(k[1] in fn for k in mapping):
        return p
    if tag == "new":
        inner = mapping
        if Name(p[1]) in mapping:
            inner = {k: v for k, v in mapping.items() if k != Name(p[1])}
        return New(p[1], _rename_free(p[2], inner, resort))
    if tag == "in":
        inner = mapping
        if Name(p[2]) in mapping:
            inner = {k: v for k, v in mapping.items() if k != Name(p[2])}
        return In(substitute(p[1], mapping), p[2], _rename_free(p[3], inner, resort))
    if tag == "out":
        return Out(substitute(p[1], mapping), substitute(p[2], mapping), _rename_free(p[3], mapping, resort))
    if tag == "match":
        return Match(substitute(p[1], mapping), substitute(p[2], mapping), _rename_free(p[3], mapping, resort))
    if tag == "if":
        return IfThenElse(substitute(p[1], mapping), substitute(p[2], mapping),
                          _rename_free(p[3], mapping, resort), _rename_free(p[4], mapping, resort))
    if tag == "!":
        return Bang(_rename_free(p[1], mapping, resort))
    if tag == "sum" and resort:
        keyed = [(_process_shape(x), _rename_free(x, mapping, True)) for x in _summands(p)]
        keyed.sort()
        out = keyed[-1][1]
        for _, x in reversed(keyed[:-1]):
            out = Sum(x, out)
        return out
    return type(p)(_rename_free(p[1], mapping, resort), _rename_free(p[2], mapping, resort))


_renamed: dict = {}


def _rename_thread(t, mapping):
    """``_rename_free`` with re-sorting, memoised on the thread and the relevant part of ``mapping``."""
    fn = _free_names(t)
    part = tuple(sorted((k, v) for k, v in mapping.items() if k[1] in fn))
    if not part:
        return t
    hit = _renamed.get(id(t))
    if hit is None or hit[0] is not t:
        if len(_renamed) >= 200_000:
            _renamed.clear()
        hit = _renamed[id(t)] = (t, {})
    res = hit[1].get(part)
    if res is None:
        res = hit[1][part] = _rename_free(t, dict(part), True)
    return res


def _debruijn(p, env: dict, depth: int, quotient: bool):
    tag = p[0]

    def msg(m):
        return substitute(m, env)

    if tag == "0":
        return ("0",)
    if tag == "new":
        xs = [p[1]]
        body = p[2]
        if quotient:
            while body[0] == "new":
                xs.append(body[1])
                body = body[2]
            fn = free_names(body)
            xs = [x for x in dict.fromkeys(reversed(xs)) if x in fn]
            # order the chain by first occurrence in the body
            occ = _first_occurrence(body)
            xs.sort(key=lambda x: occ.get(x, len(occ)))
            if not xs:
                return _debruijn(body, env, depth, quotient)
        inner = dict(env)
        for x in xs:
            inner[Name(x)] = Name(f"#{depth}")
            depth += 1
        return ("new", len(xs), _debruijn(body, inner, depth, quotient))
    if tag == "in":
        inner = dict(env)
        inner[Name(p[2])] = Name(f"#{depth}")
        return ("in", msg(p[1]), _debruijn(p[3], inner, depth + 1, quotient))
    if tag == "out":
        return ("out", msg(p[1]), msg(p[2]), _debruijn(p[3], env, depth, quotient))
    if tag == "match":
        return ("match", msg(p[1]), msg(p[2]), _debruijn(p[3], env, depth, quotient))
    if tag == "if":
        return ("if", msg(p[1]), msg(p[2]), _debruijn(p[3], env, depth, quotient),
                _debruijn(p[4], env, depth, quotient))
    if tag == "!":
        return ("!", _debruijn(p[1], env, depth, quotient))
    return (tag, _debruijn(p[1], env, depth, quotient), _debruijn(p[2], env, depth, quotient))


def _first_occurrence(p: Process) -> dict[str, int]:
    occ: dict[str, int] = {}
    for m in process_messages(p):
        for x in _ordered_names(m):
            occ.setdefault(x, len(occ))
    return occ


def _ordered_names(m):
    if m[0] == "n":
        return (m[1],)
    if m[0] == "f":
        return _ordered_term_names(m)
    return ()


def _term_names(m):
    out: dict[str, None] = {}
    for x in m[2:]:
        for y in _ordered_names(x):
            out.setdefault(y)
    return tuple(out)


_ordered_term_names = _IdCache(_term_names)


def alpha_key(a: ExtendedProcess, quotient: bool = True):
    """A key equal for alpha-equivalent extended processes.

    With ``quotient`` unused restrictions are dropped and restriction chains
    are order-insensitive, as the structural congruence allows.
    """
    c = canonical(a) if quotient else a
    env = {Name(x): Name(f"^{i}") for i, x in enumerate(c.names)}
    frame = tuple((k, substitute(v, env)) for k, v in c.frame)
    return (len(c.names), frame, _debruijn(c.body, env, 0, quotient))


def alpha_equal(a: ExtendedProcess, b: ExtendedProcess, quotient: bool = True) -> bool:
    return alpha_key(a, quotient) == alpha_key(b, quotient)


def _label_parts(a) -> tuple | None:
    # action labels: ("in", channel, payload), ("out", channel, alias), ("tau",)
    if isinstance(a, (Process, ExtendedProcess)) or not a or a[0] not in ("in", "out", "tau"):
        return None
    if a[0] == "in":
        return a[1], a[2]
    if a[0] == "out":
        return (a[1],)
    return ()


def free_vars(a) -> set[str]:
    """Free names of a message, process, extended process or action label."""
    parts = _label_parts(a)
    if parts is not None:
        return set().union(*(names(m) for m in parts))
    if isinstance(a, Message):
        return names(a)
    if isinstance(a, ExtendedProcess):
        out = free_names(a.body)
        for _, m in a.frame:
            out |= names(m)
        return out - set(a.names)
    return free_names(a)


def free_aliases(a) -> set[Alias]:
    """Aliases of a message, process, extended process or action label; an output's own alias is bound."""
    parts = _label_parts(a)
    if parts is not None:
        return set().union(*(aliases(m) for m in parts))
    if isinstance(a, ExtendedProcess):
        return set(dict(a.frame)) | process_aliases(a.body)
    if isinstance(a, Process):
        return process_aliases(a)
    return aliases(a)
