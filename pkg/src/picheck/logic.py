"""Modal formulas over event-labelled processes and their model checkers.

Plain formulas (``fm``) label modalities with actions; located formulas
(``hpfm``) also carry a formula-side location for every modality and are
checked against a relation pairing process events with formula events.
"""
from __future__ import annotations

from dataclasses import dataclass
from operator import itemgetter
from typing import Iterable

from .indep import event_indep
from .procs import ExtendedProcess
from .sos import Engine, Event, LocPair, Location, StepError
from .terms import (
    collector_paused,
    Message,
    Name,
    TermError,
    Tokens,
    aliases,
    names,
    parse_message_tokens,
    satisfies_equality,
    show,
    substitute,
)

PUBLIC_CONSTANTS = frozenset({"a", "b", "c", "d", "p", "r", "ok", "getchallenge", "error"})


class FormulaError(TermError):
    pass


class Formula(tuple):
    __slots__ = ()

    def __repr__(self) -> str:
        return pretty_formula(self)


def _variant(cls_name, tag, fields, base=Formula):
    def __new__(cls, *args):
        if len(args) != len(fields):
            raise TypeError(f"{cls_name} takes {len(fields)} fields")
        return tuple.__new__(cls, (tag,) + args)

    ns = {"__slots__": (), "__new__": __new__, "tag": tag, "_fields": fields,
          "__getnewargs__": lambda self: tuple(self[1:])}
    for i, f in enumerate(fields, start=1):
        ns[f] = property(itemgetter(i))
    return type(cls_name, (base,), ns)


class Pattern(tuple):
    __slots__ = ()


TrueF = _variant("TrueF", "true", ())
Equal = _variant("Equal", "eq", ("lhs", "rhs"))
And = _variant("And", "and", ("left", "right"))
Not = _variant("Not", "not", ("body",))
Diamond = _variant("Diamond", "dia", ("pattern", "loc", "body"))
TauPat = _variant("TauPat", "tau", (), Pattern)
InPat = _variant("InPat", "in", ("channel", "payload"), Pattern)
OutPat = _variant("OutPat", "out", ("channel", "var"), Pattern)

TRUE = TrueF()
FALSE = Not(TRUE)


def neq(m: Message, n: Message) -> Formula:
    return Not(Equal(m, n))


def lor(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def implies(a: Formula, b: Formula) -> Formula:
    return Not(And(a, Not(b)))


def box(pattern, body: Formula, loc=None) -> Formula:
    return Not(Diamond(pattern, loc, Not(body)))


@dataclass(frozen=True)
class CheckBudget:
    bang_unfold_cap: int | None = None  # None: modal depth + 1
    congruence_quotient: bool = True

    def cap_for(self, phi: Formula) -> int:
        if self.bang_unfold_cap is not None:
            return self.bang_unfold_cap
        return modal_depth(phi) + 1


# structure -----------------------------------------------------------------

def modal_depth(phi: Formula) -> int:
    tag = phi[0]
    if tag == "dia":
        return 1 + modal_depth(phi[3])
    if tag == "and":
        return max(modal_depth(phi[1]), modal_depth(phi[2]))
    if tag == "not":
        return modal_depth(phi[1])
    return 0


def in_sim_fragment(phi: Formula) -> bool:
    """Negation is applied to equalities only."""
    tag = phi[0]
    if tag == "not":
        return phi[1][0] == "eq"
    if tag == "and":
        return in_sim_fragment(phi[1]) and in_sim_fragment(phi[2])
    if tag == "dia":
        return in_sim_fragment(phi[3])
    return True


def diamond_only(phi: Formula) -> bool:
    """No negation above a modality."""
    tag = phi[0]
    if tag == "not":
        return modal_depth(phi[1]) == 0
    if tag == "and":
        return diamond_only(phi[1]) and diamond_only(phi[2])
    if tag == "dia":
        return diamond_only(phi[3])
    return True


def _pattern_messages(pat) -> tuple:
    if pat[0] == "in":
        return (pat[1], pat[2])
    if pat[0] == "out":
        return (pat[1],)
    return ()


def formula_free_names(phi: Formula, bound: frozenset = frozenset()) -> set[str]:
    tag = phi[0]
    if tag == "eq":
        return (names(phi[1]) | names(phi[2])) - bound
    if tag in ("and",):
        return formula_free_names(phi[1], bound) | formula_free_names(phi[2], bound)
    if tag == "not":
        return formula_free_names(phi[1], bound)
    if tag == "dia":
        pat = phi[1]
        out = set()
        for m in _pattern_messages(pat):
            out |= names(m) - bound
        inner = bound | {pat[2]} if pat[0] == "out" else bound
        return out | formula_free_names(phi[3], inner)
    return set()


def formula_aliases(phi: Formula) -> set:
    tag = phi[0]
    if tag == "eq":
        return aliases(phi[1]) | aliases(phi[2])
    if tag in ("and",):
        return formula_aliases(phi[1]) | formula_aliases(phi[2])
    if tag == "not":
        return formula_aliases(phi[1])
    if tag == "dia":
        out = set()
        for m in _pattern_messages(phi[1]):
            out |= aliases(m)
        return out | formula_aliases(phi[3])
    return set()


def subst_formula(phi: Formula, mapping: dict) -> Formula:
    """Substitute names (as Message keys) by messages, respecting output binders."""
    if not mapping:
        return phi
    tag = phi[0]
    if tag == "eq":
        return Equal(substitute(phi[1], mapping), substitute(phi[2], mapping))
    if tag == "and":
        return And(subst_formula(phi[1], mapping), subst_formula(phi[2], mapping))
    if tag == "not":
        return Not(subst_formula(phi[1], mapping))
    if tag == "dia":
        pat = phi[1]
        if pat[0] == "in":
            return Diamond(InPat(substitute(pat[1], mapping), substitute(pat[2], mapping)),
                           phi[2], subst_formula(phi[3], mapping))
        if pat[0] == "out":
            inner = {k: v for k, v in mapping.items() if k != Name(pat[2])}
            return Diamond(OutPat(substitute(pat[1], mapping), pat[2]), phi[2], subst_formula(phi[3], inner))
        return Diamond(pat, phi[2], subst_formula(phi[3], mapping))
    return phi


def erase_locations(phi: Formula) -> Formula:
    tag = phi[0]
    if tag == "and":
        return And(erase_locations(phi[1]), erase_locations(phi[2]))
    if tag == "not":
        return Not(erase_locations(phi[1]))
    if tag == "dia":
        return Diamond(phi[1], None, erase_locations(phi[3]))
    return phi


def instantiate_free(phi: Formula, reserved: Iterable[str] = PUBLIC_CONSTANTS) -> Formula:
    """Replace free names outside ``reserved`` by distinct fresh public constants.

    Fresh constants are written ``x'0``, ``x'1``...; names already of that
    form are left alone, so instantiation is idempotent.
    """
    reserved = set(reserved)
    free = formula_free_names(phi)
    taken = reserved | free
    mapping = {}
    for x in sorted(free - reserved):
        if "'" in x:
            continue
        i = 0
        while f"{x}'{i}" in taken:
            i += 1
        taken.add(f"{x}'{i}")
        mapping[Name(x)] = Name(f"{x}'{i}")
    return subst_formula(phi, mapping)


# concrete syntax -----------------------------------------------------------------

class _FormulaParser:
    def __init__(self, text: str, dialect: str):
        if dialect not in ("fm", "hpfm"):
            raise FormulaError(f"unknown dialect {dialect!r}")
        self.ts = Tokens(text)
        self.dialect = dialect

    def message(self) -> Message:
        try:
            return parse_message_tokens(self.ts)
        except FormulaError:
            raise
        except TermError as e:
            raise FormulaError(str(e)) from None

    def imp(self):
        left = self.lor()
        if self.ts.accept("->"):
            return implies(left, self.imp())
        return left

    def lor(self):
        left = self.land()
        if self.ts.accept("|"):
            return lor(left, self.lor())
        return left

    def land(self):
        left = self.unary()
        if self.ts.accept("&"):
            return And(left, self.land())
        return left

    def unary(self):
        ts = self.ts
        tok = ts.peek()
        if tok is None:
            raise FormulaError("unexpected end of formula")
        if ts.accept("~"):
            return Not(self.unary())
        if ts.accept("("):
            f = self.imp()
            ts.take(")")
            return f
        if ts.accept("<"):
            pat, loc = self.modality(">")
            return Diamond(pat, loc, self.unary())
        if ts.accept("["):
            pat, loc = self.modality("]")
            return box(pat, self.unary(), loc)
        if ts.accept("true"):
            return TRUE
        if ts.accept("false"):
            return FALSE
        m = self.message()
        if ts.accept("="):
            return Equal(m, self.message())
        if ts.accept("!="):
            return neq(m, self.message())
        tok = ts.peek()
        raise FormulaError(f"expected '=' or '!=' at offset {tok[2] if tok else 'end'}")

    def modality(self, close: str):
        ts = self.ts
        if ts.accept("tau"):
            pat = TauPat()
        elif ts.at("out") and not ts.at(".", 1):
            ts.take("out")
            ch = self.message()
            ts.take("(")
            tok = ts.peek()
            if tok is None or tok[0] != "id":
                raise FormulaError("output modality needs a binder variable: out M (x)")
            x = ts.take(kind="id")
            ts.take(")")
            pat = OutPat(ch, x)
        else:
            ch = self.message()
            ts.take(".")
            pat = InPat(ch, self.message())
        loc = None
        if ts.accept("@"):
            loc = self.tau_location() if ts.at("(") else self.location()
            if self.dialect == "fm":
                raise FormulaError("fm formulas carry no locations")
            if (pat[0] == "tau") != isinstance(loc, LocPair):
                raise FormulaError("tau modalities take a pair of locations, others a single one")
        elif self.dialect == "hpfm":
            raise FormulaError("hpfm modalities need a location: <pi@loc>")
        ts.take(close)
        return pat, loc

    def location(self) -> Location:
        ts = self.ts
        prefix = ""
        while True:
            tok = ts.peek()
            if tok is not None and tok[0] == "num":
                prefix += tok[1]
                ts.i += 1
                ts.accept(".")
            else:
                break
        ts.take("[")
        branch = ""
        tok = ts.peek()
        if tok is not None and tok[0] == "num":
            branch = tok[1]
            ts.i += 1
        ts.take("]")
        return Location(prefix, branch)

    def tau_location(self) -> LocPair:
        self.ts.take("(")
        a = self.location()
        self.ts.take(",")
        b = self.location()
        self.ts.take(")")
        return LocPair(a, b)


def parse_formula(text: str, dialect: str = "fm") -> Formula:
    p = _FormulaParser(text, dialect)
    f = p.imp()
    p.ts.expect_end()
    return f


def _pp_pattern(pat, loc) -> str:
    if pat[0] == "tau":
        s = "tau"
    elif pat[0] == "in":
        s = f"{show(pat[1])}.{show(pat[2])}"
    else:
        s = f"out {show(pat[1])}({pat[2]})"
    return s if loc is None else f"{s}@{loc}"


def pretty_formula(phi: Formula, ctx: int = 0) -> str:
    # ctx 0: anywhere, 1: operand of a unary operator
    tag = phi[0]
    if tag == "true":
        return "true"
    if tag == "eq":
        s = f"{show(phi[1])} = {show(phi[2])}"
        return f"({s})" if ctx else s
    if tag == "and":
        s = f"{pretty_formula(phi[1], 1)} & {pretty_formula(phi[2], 0)}"
        return f"({s})" if ctx else s
    if tag == "not":
        inner = phi[1]
        if inner[0] == "eq":
            s = f"{show(inner[1])} != {show(inner[2])}"
            return f"({s})" if ctx else s
        if inner[0] == "true":
            return "false"
        if inner[0] == "dia" and inner[3][0] == "not":
            return f"[{_pp_pattern(inner[1], inner[2])}]{pretty_formula(inner[3][1], 1)}"
        return f"~{pretty_formula(inner, 1)}"
    return f"<{_pp_pattern(phi[1], phi[2])}>{pretty_formula(phi[3], 1)}"


# model checking ----------------------------------------------------------------

class Checker:
    """Satisfaction for one formula dialect with a shared memo table."""

    def __init__(self, cap: int, located: bool, quotient: bool = True):
        self.engine = Engine(cap, interleaving=quotient and not located)
        self.located = located
        self.memo: dict = {}

    def prepare(self, a: ExtendedProcess) -> ExtendedProcess:
        return self.engine.canon(a)

    def moves(self, a: ExtendedProcess, phi: Formula):
        """(event, successor, instantiated body) for every transition matching a diamond."""
        pat, body = phi[1], phi[3]
        try:
            if pat[0] == "tau":
                for ev, b in self.engine.iter_taus(a):
                    yield ev, b, body
            elif pat[0] == "in":
                for ev, b in self.engine.iter_inputs(a, pat[1], pat[2]):
                    yield ev, b, body
            else:
                avoid = formula_aliases(body)
                for ev, b in self.engine.iter_outputs(a, pat[1], avoid):
                    yield ev, b, subst_formula(body, {Name(pat[2]): ev.action[2]})
        except StepError:
            # recipes outside the frame denote no transition
            return

    def sat(self, a: ExtendedProcess, phi: Formula, rel: frozenset = frozenset()) -> bool:
        key = (a, phi, rel)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        tag = phi[0]
        if tag == "true":
            res = True
        elif tag == "eq":
            try:
                res = satisfies_equality(a, phi[1], phi[2])
            except TermError:
                res = False
        elif tag == "and":
            res = self.sat(a, phi[1], rel) and self.sat(a, phi[2], rel)
        elif tag == "not":
            res = not self.sat(a, phi[1], rel)
        else:
            res = False
            for ev, b, body in self.moves(a, phi):
                if self.located:
                    fev = Event(ev.action, phi[2])
                    nrel = advance_relation(rel, ev, fev)
                    if nrel is None:
                        continue
                else:
                    nrel = rel
                if self.sat(b, body, nrel):
                    res = True
                    break
        self.memo[key] = res
        return res


def advance_relation(rel: frozenset, ev: Event, fev: Event):
    """The relation after matching process event ``ev`` with formula event ``fev``.

    Pairs whose process event is independent of ``ev`` are kept; the formula
    event must be independent of exactly the corresponding formula events.
    """
    kept = []
    for left, right in rel:
        i = event_indep(ev, left)
        if i != event_indep(fev, right):
            return None
        if i:
            kept.append((left, right))
    kept.append((ev, fev))
    return frozenset(kept)


def check_fm(a: ExtendedProcess, phi: Formula, budget: CheckBudget = CheckBudget()) -> bool:
    if _has_locations(phi):
        raise FormulaError("fm formulas carry no locations")
    ch = Checker(budget.cap_for(phi), located=False, quotient=budget.congruence_quotient)
    with collector_paused():
        return ch.sat(ch.prepare(a), phi)


def check_hpfm(a: ExtendedProcess, rel, phi: Formula, budget: CheckBudget = CheckBudget()) -> bool:
    if not _all_located(phi):
        raise FormulaError("hpfm modalities need locations")
    ch = Checker(budget.cap_for(phi), located=True)
    with collector_paused():
        return ch.sat(ch.prepare(a), phi, frozenset(rel))


def _has_locations(phi) -> bool:
    tag = phi[0]
    if tag == "dia":
        return phi[2] is not None or _has_locations(phi[3])
    if tag == "and":
        return _has_locations(phi[1]) or _has_locations(phi[2])
    if tag == "not":
        return _has_locations(phi[1])
    return False


def _all_located(phi) -> bool:
    tag = phi[0]
    if tag == "dia":
        return phi[2] is not None and _all_located(phi[3])
    if tag == "and":
        return _all_located(phi[1]) and _all_located(phi[2])
    if tag == "not":
        return _all_located(phi[1])
    return True


def check(a: ExtendedProcess, phi: Formula, dialect: str, budget: CheckBudget = CheckBudget()) -> bool:
    if dialect == "fm":
        return check_fm(a, phi, budget)
    return check_hpfm(a, frozenset(), phi, budget)

