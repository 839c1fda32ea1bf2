"""Bounded simulation and bisimulation games with witness strategies.

Positions are ``(A, B, rho, S, guide)``: the two extended processes, the
alias bijection from A's frame to B's, the relation of concurrently
started events (HP games only) and an optional guide formula that limits
the spoiler's moves. The spoiler wins a position within ``d`` moves if some
move leaves the duplicator without a reply from which the duplicator
survives ``d - 1`` further moves. Replies must match the action under
``rho``, keep the frames statically equivalent and, in HP games, have the
same independence pattern against ``S`` as the spoiler's event.

Depth counts spoiler moves. The search deepens iteratively, so the first
strategy found is one of minimal depth.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .indep import event_indep, hygienic
from .logic import Checker, Formula, advance_relation, formula_aliases, subst_formula
from .procs import ExtendedProcess, free_vars
from .sos import DEFAULT_CAP, Engine, Event, StepError
from .terms import (ARITY, Message, Name, app, apply_frame, collector_paused, knowledge,
                    static_equivalent, substitute)

RELATIONS = ("i-sim", "i-bisim", "hp-sim", "hp-bisim")

# two public constants that occur in no process; untouched ones are interchangeable
FRESH_CONSTANTS = ("z'0", "z'1")


class GameConfigError(ValueError):
    pass


class StrategyError(ValueError):
    """A strategy does not apply to the given processes."""


@dataclass(frozen=True)
class GameConfig:
    relation: str = "i-sim"
    depth: int = 6
    recipe_depth: int = 1
    bang_cap: int = DEFAULT_CAP
    guide: Formula | None = None
    public_payloads: bool = False

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise GameConfigError(f"unknown relation {self.relation!r}; use one of {', '.join(RELATIONS)}")
        for name in ("depth", "recipe_depth", "bang_cap"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise GameConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.guide is not None and self.relation.endswith("bisim"):
            raise GameConfigError("a guide formula restricts simulation games only")

    @property
    def located(self) -> bool:
        return self.relation.startswith("hp")

    @property
    def symmetric(self) -> bool:
        return self.relation.endswith("bisim")


@dataclass(frozen=True)
class Strategy:
    """A spoiler strategy tree.

    A node is either a leaf where the frames are distinguishable
    (``reason == "static"``) or a spoiler move on ``side`` with one subtree
    per valid duplicator reply. A move without replies leaves the duplicator
    stuck.
    """

    side: str | None = None
    event: Event | None = None
    replies: tuple = ()
    reason: str = "static"

    @property
    def depth(self) -> int:
        if self.event is None:
            return 0
        return 1 + max((s.depth for _, s in self.replies), default=0)

    def lines(self, indent: int = 0) -> list[str]:
        pad = "  " * indent
        if self.event is None:
            return [f"{pad}frames distinguishable"]
        out = [f"{pad}{self.side}: {self.event}"]
        if not self.replies:
            out.append(f"{pad}  no reply")
        for ev, sub in self.replies:
            out.append(f"{pad}  reply {ev}")
            out.extend(sub.lines(indent + 2))
        return out

    def to_json(self):
        if self.event is None:
            return {"leaf": "static"}
        return {
            "side": self.side,
            "event": str(self.event),
            "replies": [{"event": str(ev), "then": sub.to_json()} for ev, sub in self.replies],
        }


@dataclass(frozen=True)
class Position:
    left: ExtendedProcess
    right: ExtendedProcess
    rho: tuple  # sorted (left alias, right alias) pairs
    rel: frozenset = frozenset()  # (left event, right event) pairs


@dataclass
class RelatedUpToBound:
    depth: int
    relation: list[Position] = field(default_factory=list)

    verdict = "related-up-to-bound"


@dataclass
class Distinguished:
    strategy: Strategy

    verdict = "distinguished"

    @property
    def depth(self) -> int:
        return self.strategy.depth


GameVerdict = RelatedUpToBound | Distinguished


class Game:
    def __init__(self, a: ExtendedProcess, b: ExtendedProcess, cfg: GameConfig):
        self.cfg = cfg
        self.engine = Engine(cfg.bang_cap, interleaving=not cfg.located)
        self.a = self.engine.canon(a)
        self.b = self.engine.canon(b)
        self.public = sorted(free_vars(self.a) | free_vars(self.b))
        self.checker = Checker(cfg.bang_cap, located=cfg.located) if cfg.guide is not None else None
        # key -> (deepest bound the duplicator survived, winning strategy or None)
        self.memo: dict = {}

    # move generation -------------------------------------------------------------

    def _payloads(self, x: ExtendedProcess, y: ExtendedProcess) -> list[Message]:
        """Input recipes for the spoiler.

        Atoms are the recipes of the saturated frame and the fresh constants
        (plus the processes' free names when configured); deeper recipes
        apply constructors to them.
        """
        atoms = [k for k, _ in x.frame]
        atoms += knowledge(x.frame, x.names).recipes()
        if self.cfg.public_payloads:
            atoms += [Name(n) for n in self.public]
        used = free_vars(x) | free_vars(y)
        for c in FRESH_CONSTANTS:
            atoms.append(Name(c))
            if c not in used:
                break
        level = list(atoms)
        out = list(atoms)
        for _ in range(self.cfg.recipe_depth - 1):
            nxt = []
            for sym, n in ARITY.items():
                for args in itertools.product(level, repeat=n):
                    nxt.append(app(sym, *args))
            out += nxt
            level = out
        # recipes with the same value are interchangeable between equivalent frames
        frame = dict(x.frame)
        seen, res = set(), []
        for r in out:
            v = apply_frame(r, frame)
            if v not in seen:
                seen.add(v)
                res.append(r)
        return res

    def spoiler_moves(self, x: ExtendedProcess, y: ExtendedProcess,
                      guide) -> Iterator[tuple[Event, ExtendedProcess, object]]:
        if guide is not None:
            yield from self._guided_moves(x, guide)
            return
        seen = set()
        eng = self.engine
        moves = itertools.chain(eng.iter_outputs(x), eng.iter_taus(x))
        chans = eng.input_channels(x)
        if chans:
            pays = self._payloads(x, y)
            moves = itertools.chain(moves, (m for ch in chans for pl in pays
                                            for m in eng.iter_inputs(x, ch, pl)))
        for ev, x2 in moves:
            key = (ev.action, x2) if not self.cfg.located else (ev, x2)
            if key in seen:
                continue
            seen.add(key)
            yield ev, x2, None

    def _guided_moves(self, x: ExtendedProcess, guide):
        """Moves along which ``x`` still satisfies the rest of the guide.

        In HP games the guide carries the relation between process events
        and the formula's located events, as in located satisfaction.
        """
        phi, frel = guide
        for dia in _diamonds(phi):
            pat, body = dia[1], dia[3]
            try:
                if pat[0] == "tau":
                    gen = ((ev, x2, body) for ev, x2 in self.engine.iter_taus(x))
                elif pat[0] == "in":
                    gen = ((ev, x2, body) for ev, x2 in self.engine.iter_inputs(x, pat[1], pat[2]))
                else:
                    avoid = formula_aliases(body)
                    gen = ((ev, x2, subst_formula(body, {Name(pat[2]): ev.action[2]}))
                           for ev, x2 in self.engine.iter_outputs(x, pat[1], avoid))
                for ev, x2, b in gen:
                    nrel = frel
                    if self.cfg.located:
                        nrel = advance_relation(frel, ev, Event(ev.action, dia[2]))
                        if nrel is None:
                            continue
                    if self.checker.sat(x2, b, nrel):
                        yield ev, x2, (b, nrel)
            except StepError:
                continue

    def replies(self, side: str, pos: Position, ev: Event, x2: ExtendedProcess):
        """Valid duplicator replies: (event, next position) pairs."""
        y = pos.right if side == "left" else pos.left
        rho = dict(pos.rho) if side == "left" else {v: k for k, v in pos.rho}
        act = ev.action
        try:
            if act[0] == "out":
                cands = self.engine.iter_outputs(y, substitute(act[1], rho))
            elif act[0] == "in":
                cands = self.engine.iter_inputs(y, substitute(act[1], rho), substitute(act[2], rho))
            else:
                cands = self.engine.iter_taus(y)
            cands = list(cands)
        except StepError:
            return []
        out = []
        seen = set()
        for ev2, y2 in cands:
            rho2 = dict(rho)
            if act[0] == "out":
                rho2[act[2]] = ev2.action[2]
            rel = pos.rel
            if self.cfg.located:
                rel = _advance(rel, ev, ev2, side)
                if rel is None:
                    continue
            if side == "left":
                nxt = Position(x2, y2, tuple(sorted(rho2.items())), rel)
            else:
                nxt = Position(y2, x2, tuple(sorted((v, k) for k, v in rho2.items())), rel)
            key = (nxt, ev2) if self.cfg.located else nxt
            if key in seen:
                continue
            seen.add(key)
            if not static_equivalent(nxt.left, nxt.right, dict(nxt.rho)):
                continue
            out.append((ev2, nxt))
        return out

    # search ------------------------------------------------------------------------

    def spoiler_wins(self, pos: Position, guide, d: int) -> Strategy | None:
        if d == 0:
            return None
        key = (pos, guide)
        hit = self.memo.get(key)
        if hit is not None:
            survived, strat = hit
            if strat is not None and strat.depth <= d:
                return strat
            if survived >= d:
                return None
        sides = ("left", "right") if self.cfg.symmetric else ("left",)
        found = None
        for side in sides:
            x, y = (pos.left, pos.right) if side == "left" else (pos.right, pos.left)
            for ev, x2, g2 in self.spoiler_moves(x, y, guide):
                children = []
                cache = {}
                for ev2, nxt in self.replies(side, pos, ev, x2):
                    sub = cache.get(nxt)
                    if sub is None:
                        sub = self.spoiler_wins(nxt, g2, d - 1)
                        if sub is None:
                            break
                        cache[nxt] = sub
                    children.append((ev2, sub))
                else:
                    found = Strategy(side, ev, tuple(children), "stuck" if not children else "")
                    break
            if found is not None:
                break
        survived = hit[0] if hit is not None else 0
        if found is None:
            self.memo[key] = (max(survived, d), None)
        else:
            self.memo[key] = (survived, found)
        return found

    def root(self) -> Position:
        rho = tuple((k, k) for k, _ in self.a.frame) if dict(self.a.frame).keys() == dict(self.b.frame).keys() else None
        if rho is None:
            raise GameConfigError("the two frames must have the same domain at the start of a game")
        return Position(self.a, self.b, rho)

    def play(self) -> GameVerdict:
        with collector_paused():
            return self._play()

    def _play(self) -> GameVerdict:
        root = self.root()
        if not static_equivalent(root.left, root.right, dict(root.rho)):
            return Distinguished(Strategy())
        guide = None if self.cfg.guide is None else (self.cfg.guide, frozenset())
        for d in range(1, self.cfg.depth + 1):
            strat = self.spoiler_wins(root, guide, d)
            if strat is not None:
                return Distinguished(strat)
        related = [k[0] for k, (_, s) in self.memo.items() if s is None]
        return RelatedUpToBound(self.cfg.depth, related or [root])


def _diamonds(phi):
    """The diamonds reachable through conjunctions; other literals offer no move."""
    tag = phi[0]
    if tag == "dia":
        yield phi
    elif tag == "and":
        yield from _diamonds(phi[1])
        yield from _diamonds(phi[2])


def _advance(rel: frozenset, ev: Event, ev2: Event, side: str):
    """Thread the concurrency relation through a move and its reply, or None if the patterns differ."""
    mine, theirs = (0, 1) if side == "left" else (1, 0)
    kept = []
    for pair in rel:
        i = event_indep(ev, pair[mine])
        if i != event_indep(ev2, pair[theirs]):
            return None
        if i:
            kept.append(pair)
    kept.append((ev, ev2) if side == "left" else (ev2, ev))
    return frozenset(kept)


def play_game(a: ExtendedProcess, b: ExtendedProcess, cfg: GameConfig = GameConfig()) -> GameVerdict:
    return Game(a, b, cfg).play()


def replay_strategy(a: ExtendedProcess, b: ExtendedProcess, strategy: Strategy,
                    cfg: GameConfig = GameConfig()) -> bool:
    """Re-execute a strategy, recomputing every duplicator reply.

    True iff every reply is answered by the strategy and every branch ends
    with the duplicator stuck or the frames distinguishable.
    """
    game = Game(a, b, cfg)
    return _replay(game, game.root(), strategy)


def _replay(game: Game, pos: Position, st: Strategy) -> bool:
    if st.event is None:
        return not static_equivalent(pos.left, pos.right, dict(pos.rho))
    side = st.side
    if side == "right" and not game.cfg.symmetric:
        raise StrategyError("a simulation strategy moves on the left only")
    x = pos.left if side == "left" else pos.right
    try:
        x2 = game.engine.step(x, st.event)
    except StepError as e:
        raise StrategyError(f"spoiler move {st.event} is not enabled: {e}") from None
    plan = {}
    for ev, sub in st.replies:
        plan.setdefault(ev, sub)
    replies = game.replies(side, pos, st.event, x2)
    if not replies:
        return True
    for ev2, nxt in replies:
        sub = plan.get(ev2)
        if sub is None or not _replay(game, nxt, sub):
            return False
    return True


def snapshot_ok(verdict: RelatedUpToBound) -> bool:
    """Every stored pair is statically equivalent and every stored S is hygienic."""
    return all(static_equivalent(p.left, p.right, dict(p.rho)) and hygienic(p.rel)
               for p in verdict.relation)


def strategy_dot(strategy: Strategy) -> str:
    lines = ["digraph strategy {", "  node [shape=box, fontname=monospace];"]
    counter = itertools.count()

    def esc(s: str) -> str:
        return s.replace("\\", "\\\\").replace('"', '\\"')

    def visit(st: Strategy) -> str:
        me = f"n{next(counter)}"
        if st.event is None:
            lines.append(f'  {me} [label="frames distinguishable", shape=doubleoctagon];')
            return me
        lines.append(f'  {me} [label="{esc(st.side)}: {esc(str(st.event))}"];')
        if not st.replies:
            stuck = f"n{next(counter)}"
            lines.append(f'  {stuck} [label="no reply", shape=doubleoctagon];')
            lines.append(f"  {me} -> {stuck};")
        for ev, sub in st.replies:
            child = visit(sub)
            lines.append(f'  {me} -> {child} [label="{esc(str(ev))}"];')
        return me

    visit(strategy)
    lines.append("}")
    return "\n".join(lines) + "\n"
