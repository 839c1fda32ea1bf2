"""Event-labelled transitions of extended processes.

Transitions are derived on the process body first (``_steps``), which yields
raw steps carrying a location, the channel as a message, the restricted
names that float to the top and a builder for the continuation. The
extended-process layer then turns raw steps into events by choosing
recipes and aliases.

Replication ``!P`` fires only in its next copy: the left ``P`` of the
unfolding ``P | !P`` (prefix ``0``), or for a communication between two new
copies, that copy and the one at prefix ``10``. Untouched copies are
interchangeable, both structurally and for independence, so this loses no
behaviour up to renaming of copies.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, NamedTuple

from .procs import (
    Bang,
    ExtendedProcess,
    Par,
    canonical,
    fresh_name,
    subst_process,
)
from .terms import Alias, Message, Name, aliases, apply_frame, knowledge, names, normalize


class BudgetExceeded(RuntimeError):
    """A derivation needed more replication unfoldings than allowed."""


class StepError(ValueError):
    pass


class Location(NamedTuple):
    prefix: str = ""
    branch: str = ""

    def __str__(self) -> str:
        return f"{'.'.join(self.prefix)}[{self.branch}]"


class LocPair(NamedTuple):
    out: Location
    inp: Location

    def __str__(self) -> str:
        return f"({self.out},{self.inp})"


class Action(tuple):
    __slots__ = ()


class Tau(Action):
    __slots__ = ()

    def __new__(cls):
        return tuple.__new__(cls, ("tau",))

    def __repr__(self) -> str:
        return "tau"


class FreeInput(Action):
    __slots__ = ()
    channel = property(lambda self: self[1])
    payload = property(lambda self: self[2])

    def __new__(cls, channel: Message, payload: Message):
        return tuple.__new__(cls, ("in", channel, payload))

    def __getnewargs__(self):
        return (self[1], self[2])

    def __repr__(self) -> str:
        return f"{self[1]!r}.{self[2]!r}"


class Output(Action):
    __slots__ = ()
    channel = property(lambda self: self[1])
    alias = property(lambda self: self[2])

    def __new__(cls, channel: Message, alias: Alias):
        return tuple.__new__(cls, ("out", channel, alias))

    def __getnewargs__(self):
        return (self[1], self[2])

    def __repr__(self) -> str:
        return f"out {self[1]!r}({self[2]!r})"


TAU = Tau()


class Event(NamedTuple):
    action: Action
    location: Location | LocPair

    def __str__(self) -> str:
        return f"{self.action!r} @ {self.location}"


def label_aliases(action: Action) -> set[Alias]:
    """Aliases free in a label; the alias bound by an output is not free."""
    if action[0] == "in":
        return aliases(action[1]) | aliases(action[2])
    if action[0] == "out":
        return aliases(action[1])
    return set()


def label_names(action: Action) -> set[str]:
    if action[0] == "in":
        return names(action[1]) | names(action[2])
    if action[0] == "out":
        return names(action[1])
    return set()


# raw steps on process bodies -------------------------------------------------

class _Step:
    __slots__ = ("kind", "loc", "chan", "data", "names", "build", "unfolds")

    def __init__(self, kind, loc, chan, data, names_, build, unfolds):
        self.kind = kind
        self.loc = loc
        self.chan = chan
        self.data = data
        self.names = names_
        self.build = build
        self.unfolds = unfolds


def _wrap(st: _Step, outer: Callable, extra: int = 0) -> _Step:
    inner = st.build
    return _Step(st.kind, st.loc, st.chan, st.data, st.names,
                 lambda arg=None: outer(inner(arg)), st.unfolds + extra)


def _close(o: _Step, i: _Step, combine: Callable, extra: int) -> _Step:
    ob, ib, payload = o.build, i.build, o.data
    return _Step("tau", LocPair(o.loc, i.loc), None, None, o.names + i.names,
                 lambda arg=None: combine(ob(), ib(payload)), o.unfolds + i.unfolds + extra)


def _closes(left, right, combine_out_first, combine_in_first, extra):
    """Communications between two parallel groups of raw steps."""
    res = []
    for o in left:
        if o.kind != "out":
            continue
        for i in right:
            if i.kind == "in" and i.chan == o.chan:
                res.append(_close(o, i, combine_out_first, extra))
    for i in left:
        if i.kind != "in":
            continue
        for o in right:
            if o.kind == "out" and i.chan == o.chan:
                res.append(_close(o, i, combine_in_first, extra))
    return res


def _steps(p, s: str, b: str) -> list[_Step]:
    tag = p[0]
    if tag == "out":
        cont = p[3]
        return [_Step("out", Location(s, b), normalize(p[1]), normalize(p[2]), (),
                      lambda arg=None: cont, 0)]
    if tag == "in":
        x, cont = p[2], p[3]
        return [_Step("in", Location(s, b), normalize(p[1]), None, (),
                      lambda arg: subst_process(cont, {x: arg}), 0)]
    if tag == "par":
        left, right = p[1], p[2]
        ls = _steps(left, s + "0", "")
        rs = _steps(right, s + "1", "")
        res = [_wrap(st, lambda q: Par(q, right)) for st in ls]
        res += [_wrap(st, lambda q: Par(left, q)) for st in rs]
        res += _closes(ls, rs,
                       lambda po, qi: Par(po, qi),
                       lambda po, qi: Par(qi, po), 0)
        return res
    if tag == "!":
        body = p[1]
        first = _steps(body, s + "0", "")
        res = [_wrap(st, lambda q: Par(q, p), 1) for st in first]
        ochans = {st.chan for st in first if st.kind == "out"}
        if any(st.kind == "in" and st.chan in ochans for st in first):
            second = _steps(body, s + "10", "")
            res += _closes(first, second,
                           lambda po, qi: Par(po, Par(qi, p)),
                           lambda po, qi: Par(qi, Par(po, p)), 2)
        return res
    if tag == "new":
        z = fresh_name(p[1])
        inner = _steps(subst_process(p[2], {p[1]: Name(z)}), s, b)
        for st in inner:
            st.names = (z,) + st.names
        return inner
    if tag == "sum":
        return _steps(p[1], s, b + "0") + _steps(p[2], s, b + "1")
    if tag == "match":
        return _steps(p[3], s, b) if normalize(p[1]) == normalize(p[2]) else []
    if tag == "if":
        return _steps(p[3] if normalize(p[1]) == normalize(p[2]) else p[4], s, b)
    return []


@lru_cache(maxsize=4096)
def _body_steps(body, cap: int) -> tuple[_Step, ...]:
    steps = tuple(_steps(body, "", ""))
    for st in steps:
        if st.unfolds > cap:
            raise BudgetExceeded(
                f"a derivation needs {st.unfolds} replication unfoldings, cap is {cap}")
    return steps


def fresh_alias(prefix: str, taken: Iterable[Alias]) -> Alias:
    taken = set(taken)
    i = 0
    while True:
        a = Alias(prefix, "lam" if i == 0 else f"lam{i}")
        if a not in taken:
            return a
        i += 1


# extended processes ----------------------------------------------------------

DEFAULT_CAP = 6


class Engine:
    """Transition enumeration with a fixed unfold cap and canonicalization mode.

    ``interleaving`` canonicalizes successors up to associativity and
    commutativity of ``|`` and inert threads, and numbers aliases by output
    order instead of locating them; use it only where locations are
    irrelevant.
    """

    def __init__(self, cap: int = DEFAULT_CAP, interleaving: bool = False):
        self.cap = cap
        self.interleaving = interleaving

    def canon(self, a: ExtendedProcess) -> ExtendedProcess:
        return canonical(a, self.interleaving)

    def _alias(self, prefix: str, taken: set, count: int) -> Alias:
        if not self.interleaving:
            return fresh_alias(prefix, taken)
        # locations are forgotten here, so aliases are numbered in order of output
        while Alias("", f"lam{count}") in taken:
            count += 1
        return Alias("", f"lam{count}")

    def raw(self, a: ExtendedProcess) -> tuple[_Step, ...]:
        return _body_steps(a.body, self.cap)

    def _succ(self, a, st: _Step, arg=None, frame_add=()) -> ExtendedProcess:
        return self.canon(ExtendedProcess(a.names + st.names, a.frame + tuple(frame_add), st.build(arg)))

    def outputs(self, a: ExtendedProcess, channel: Message | None = None,
                avoid: Iterable[Alias] = ()) -> list[tuple[Event, ExtendedProcess]]:
        """Output transitions; with ``channel`` given only those on that recipe."""
        return list(self.iter_outputs(a, channel, avoid))

    def iter_outputs(self, a: ExtendedProcess, channel: Message | None = None,
                     avoid: Iterable[Alias] = ()) -> Iterator[tuple[Event, ExtendedProcess]]:
        frame = dict(a.frame)
        taken = set(frame) | set(avoid)
        know = None
        target = None
        if channel is not None:
            if not _valid_recipe(channel, a):
                raise StepError(f"recipe {channel!r} mentions bound names or unknown aliases")
            target = apply_frame(channel, frame)
        for st in self.raw(a):
            if st.kind != "out":
                continue
            if target is not None:
                if st.chan != target or (st.names and names(target) & set(st.names)):
                    continue
                recipe = channel
            else:
                if st.names and names(st.chan) & set(st.names):
                    continue
                if know is None:
                    know = knowledge(a.frame, a.names)
                recipe = know.recipe(st.chan)
                if recipe is None:
                    continue
            alias = self._alias(st.loc.prefix, taken, len(frame))
            ev = Event(Output(recipe, alias), st.loc)
            yield ev, self._succ(a, st, None, ((alias, st.data),))

    def taus(self, a: ExtendedProcess) -> list[tuple[Event, ExtendedProcess]]:
        return list(self.iter_taus(a))

    def iter_taus(self, a: ExtendedProcess) -> Iterator[tuple[Event, ExtendedProcess]]:
        for st in self.raw(a):
            if st.kind == "tau":
                yield Event(TAU, st.loc), self._succ(a, st)

    def inputs(self, a: ExtendedProcess, channel: Message, payload: Message) -> list[tuple[Event, ExtendedProcess]]:
        return list(self.iter_inputs(a, channel, payload))

    def iter_inputs(self, a: ExtendedProcess, channel: Message,
                    payload: Message) -> Iterator[tuple[Event, ExtendedProcess]]:
        # validated eagerly so that callers see the error before iterating
        if not (_valid_recipe(channel, a) and _valid_recipe(payload, a)):
            raise StepError("input recipes must use only frame aliases and public names")
        return self._gen_inputs(a, channel, payload)

    def _gen_inputs(self, a, channel, payload):
        frame = dict(a.frame)
        ch = apply_frame(channel, frame)
        value = None
        for st in self.raw(a):
            if st.kind == "in" and st.chan == ch and not (st.names and names(ch) & set(st.names)):
                if value is None:
                    value = apply_frame(payload, frame)
                yield Event(FreeInput(channel, payload), st.loc), self._succ(a, st, value)

    def input_channels(self, a: ExtendedProcess) -> list[Message]:
        """Recipes for the channels of all receiving threads whose channel is deducible."""
        know = None
        out = {}
        for st in self.raw(a):
            if st.kind == "in" and st.chan not in out:
                if st.names and names(st.chan) & set(st.names):
                    continue
                if know is None:
                    know = knowledge(a.frame, a.names)
                out[st.chan] = know.recipe(st.chan)
        return sorted(r for r in out.values() if r is not None)

    def output_and_tau_steps(self, a):
        return self.outputs(a) + self.taus(a)

    def step(self, a: ExtendedProcess, e: Event) -> ExtendedProcess:
        act = e.action
        # only raw steps at the event's location can realize it
        if act[0] == "in":
            if not (_valid_recipe(act[1], a) and _valid_recipe(act[2], a)):
                raise StepError("input recipes must use only frame aliases and public names")
            frame = dict(a.frame)
            ch = apply_frame(act[1], frame)
            succ = [self._succ(a, st, apply_frame(act[2], frame)) for st in self.raw(a)
                    if st.kind == "in" and st.loc == e.location and st.chan == ch
                    and not (st.names and names(ch) & set(st.names))]
        elif act[0] == "out":
            if not _valid_recipe(act[1], a):
                raise StepError(f"recipe {act[1]!r} mentions bound names or unknown aliases")
            frame = dict(a.frame)
            if act[2] in frame:
                raise StepError(f"alias {act[2]!r} is not fresh")
            if not (self.interleaving or act[2].prefix == e.location.prefix):
                raise StepError(f"alias {act[2]!r} does not match location {e.location}")
            ch = apply_frame(act[1], frame)
            succ = [self._succ(a, st, None, ((act[2], st.data),)) for st in self.raw(a)
                    if st.kind == "out" and st.loc == e.location and st.chan == ch
                    and not (st.names and names(ch) & set(st.names))]
        else:
            succ = [self._succ(a, st) for st in self.raw(a) if st.kind == "tau" and st.loc == e.location]
        if not succ:
            raise StepError(f"event {e} is not enabled")
        if len(set(succ)) != 1:
            raise StepError(f"event {e} has {len(set(succ))} inequivalent successors")
        return succ[0]


def _valid_recipe(m: Message, a: ExtendedProcess) -> bool:
    bound = set(a.names)
    dom = {k for k, _ in a.frame}
    return not (names(m) & bound) and aliases(m) <= dom


# module-level conveniences with the default engine ------------------------------

def output_and_tau_steps(a: ExtendedProcess, cap: int = DEFAULT_CAP):
    return Engine(cap).output_and_tau_steps(a)


def input_steps(a: ExtendedProcess, channel_recipe: Message, payload_recipe: Message, cap: int = DEFAULT_CAP):
    return Engine(cap).inputs(a, channel_recipe, payload_recipe)


def step(a: ExtendedProcess, e: Event, cap: int = DEFAULT_CAP) -> ExtendedProcess:
    return Engine(cap).step(a, e)


def initial(a: ExtendedProcess, interleaving: bool = False) -> ExtendedProcess:
    return canonical(a, interleaving)


@dataclass
class Lts:
    """An explored fragment of the transition graph; state 0 is the root."""

    states: list[ExtendedProcess]
    edges: list[tuple[int, Event, int]]
    complete: bool  # False if the depth bound cut some state off


def explore(a: ExtendedProcess, depth: int, cap: int = DEFAULT_CAP,
            payloads: Iterable[Message] = ()) -> Lts:
    """Breadth-first exploration of output and τ steps up to ``depth``.

    Inputs are never enumerated on their own; each recipe in ``payloads`` is
    offered on every deducible input channel.
    """
    eng = Engine(cap)
    payloads = list(payloads)
    root = eng.canon(a)
    index = {root: 0}
    states = [root]
    edges = []
    frontier = [root]
    complete = True
    for level in range(depth + 1):
        nxt = []
        for s in frontier:
            moves = eng.output_and_tau_steps(s)
            for ch in eng.input_channels(s):
                for m in payloads:
                    if _valid_recipe(m, s):
                        moves += eng.inputs(s, ch, m)
            if level == depth:
                complete = complete and not moves
                continue
            for ev, t in moves:
                if t not in index:
                    index[t] = len(states)
                    states.append(t)
                    nxt.append(t)
                edges.append((index[s], ev, index[t]))
        frontier = nxt
    return Lts(states, edges, complete)


def lts_dot(lts: Lts) -> str:
    def esc(s: str) -> str:
        return s.replace("\\", "\\\\").replace('"', '\\"')

    lines = ["digraph lts {", "  node [shape=circle];"]
    lines += [f"  s{i};" for i in range(len(lts.states))]
    lines += [f'  s{i} -> s{j} [label="{esc(str(ev))}"];' for i, ev, j in lts.edges]
    lines.append("}")
    return "\n".join(lines) + "\n"
