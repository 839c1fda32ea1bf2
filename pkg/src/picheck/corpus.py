"""Built-in protocol models and the attack formula library."""
from __future__ import annotations

from dataclasses import dataclass

from .logic import Formula, instantiate_free, parse_formula
from .procs import ExtendedProcess, parse_process

PROTOCOLS = ("bac", "feldhofer")
STYLES = ("min", "get", "ch", "two")
VARIANTS = ("silent", "error")
SIDES = ("system", "spec")

BAC_DEFS = """
# ePassport: challenge, check the MAC and the echoed nonce, answer
def P(c, d, ke, km) =
  new nt. out(c, nt). in(d, y).
  [snd(y) = mac(fst(y), km)]
  [nt = fst(snd(dec(fst(y), ke)))]
  new kt.
  let m = enc(pair(nt, pair(fst(dec(fst(y), ke)), kt)), ke) in
  out(c, pair(m, mac(m, km)))

# reader: answer any challenge
def V(c, d, ke, km) =
  in(d, nt). new nr. new kr.
  let m = enc(pair(nr, pair(nt, kr)), ke) in
  out(c, pair(m, mac(m, km)))
"""

FELDHOFER_DEFS = """
def P(c, d, k) =
  new nt. out(c, nt). in(d, y).
  [nt = snd(dec(y, k))]
  out(c, enc(pair(nt, fst(dec(y, k))), k))

def Perr(c, d, k) =
  new nt. out(c, nt). in(d, y).
  if nt = snd(dec(y, k))
  then out(c, enc(pair(nt, fst(dec(y, k))), k))
  else out(c, error)

def V(c, d, k) =
  in(d, nt). new nr. out(c, enc(pair(nr, nt), k))
"""

# session bodies per style; {P} is the prover definition, {K} the key list
_BAC_SESSIONS = {
    "min": ("new ke, km.!(V(c, d, ke, km) | {P}(c, d, ke, km))",
            "new ke, km.(V(c, d, ke, km) | {P}(c, d, ke, km))"),
    "get": ("new ke, km.!(out(c, getchallenge).V(c, d, ke, km) | in(d, x).[x = getchallenge]{P}(c, d, ke, km))",
            "new ke, km.(out(c, getchallenge).V(c, d, ke, km) | in(d, x).[x = getchallenge]{P}(c, d, ke, km))"),
    "ch": ("new ke, km.!(new c.out(r, c).V(c, c, ke, km) | new c.out(p, c).{P}(c, c, ke, km))",
           "new ke, km.(new c.out(r, c).V(c, c, ke, km) | new c.out(p, c).{P}(c, c, ke, km))"),
}

_FELD_SESSIONS = {
    "min": ("new k.!(V(c, d, k) | {P}(c, d, k))",
            "new k.(V(c, d, k) | {P}(c, d, k))"),
    "get": ("new k.!(out(c, getchallenge).V(c, d, k) | in(d, x).[x = getchallenge]{P}(c, d, k))",
            "new k.(out(c, getchallenge).V(c, d, k) | in(d, x).[x = getchallenge]{P}(c, d, k))"),
    "ch": ("new k.!(new c.out(r, c).V(c, c, k) | new c.out(p, c).{P}(c, c, k))",
           "new k.(new c.out(r, c).V(c, c, k) | new c.out(p, c).{P}(c, c, k))"),
}

_BAC_TWO = {
    "system": """new ke1, km1, ke2, km2.(
    (V(c, d, ke1, km1) + V(c, d, ke2, km2))
  | (P(c, d, ke1, km1) + P(c, d, ke2, km2))
  | (V(c, d, ke1, km1) + V(c, d, ke2, km2))
  | (P(c, d, ke1, km1) + P(c, d, ke2, km2)))""",
    "spec": """new ke1, km1, ke2, km2.(
    V(c, d, ke1, km1) | P(c, d, ke1, km1)
  | V(c, d, ke2, km2) | P(c, d, ke2, km2))""",
}

_FELD_TWO = {
    "system": """new k1, k2.(
    (V(c, d, k1) + V(c, d, k2))
  | ({P}(c, d, k1) + {P}(c, d, k2))
  | (V(c, d, k1) + V(c, d, k2))
  | ({P}(c, d, k1) + {P}(c, d, k2)))""",
    "spec": """new k1, k2.(
    V(c, d, k1) | {P}(c, d, k1)
  | V(c, d, k2) | {P}(c, d, k2))""",
}


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class ModelId:
    protocol: str
    style: str
    variant: str = "silent"
    side: str = "system"

    def __post_init__(self):
        if self.protocol not in PROTOCOLS or self.style not in STYLES:
            raise CorpusError(f"unknown model {self.protocol}-{self.style}")
        if self.variant not in VARIANTS or self.side not in SIDES:
            raise CorpusError(f"unknown variant {self.variant!r} or side {self.side!r}")
        if self.variant == "error" and self.protocol != "feldhofer":
            raise CorpusError("the error variant is defined for feldhofer only")

    @property
    def name(self) -> str:
        return f"{self.protocol}-{self.style}" + ("-err" if self.variant == "error" else "")


def model_names() -> list[str]:
    out = [f"bac-{s}" for s in STYLES]
    out += [f"feldhofer-{s}" for s in STYLES]
    out += [f"feldhofer-{s}-err" for s in STYLES]
    return out


def parse_model_name(name: str, side: str = "system") -> ModelId:
    parts = name.split("-")
    variant = "silent"
    if parts[-1] == "err":
        variant = "error"
        parts = parts[:-1]
    if len(parts) != 2:
        raise CorpusError(f"unknown model {name!r}; try one of {', '.join(model_names())}")
    return ModelId(parts[0], parts[1], variant, side)


def model_source(mid: ModelId) -> str:
    """The source text of a model: definitions followed by the top-level process."""
    if mid.protocol == "bac":
        defs, prover = BAC_DEFS, "P"
        sessions, two = _BAC_SESSIONS, _BAC_TWO
    else:
        defs = FELDHOFER_DEFS
        prover = "Perr" if mid.variant == "error" else "P"
        sessions, two = _FELD_SESSIONS, _FELD_TWO
    if mid.style == "two":
        top = two[mid.side].replace("{P}", prover)
    else:
        system, spec = sessions[mid.style]
        session = (system if mid.side == "system" else spec).replace("{P}", prover)
        top = f"!{session}"
    return f"{defs.strip()}\n\n{top}\n"


def build_model(mid: ModelId) -> ExtendedProcess:
    return parse_process(model_source(mid))


# attacks -------------------------------------------------------------------------

@dataclass(frozen=True)
class Attack:
    name: str
    dialect: str
    text: str
    note: str


_CHI_PREFIX = ("<out c(nt1)@0.0.1[]><d.nt1@0.0.0[]><d.nt1@0.1.0.0[]>"
               "<out c(u1)@0.0.0[]><out c(u2)@0.1.0.0[]>")

_PAIR = "pair(fst({0}), snd({0})) = {0}"

ATTACKS = {
    "phi-get": Attack("phi-get", "fm", """
<d.getchallenge><out c(g1)><out c(g2)>(
  g1 = getchallenge & g2 = getchallenge &
  <out c(nt1)><d.nt1><d.nt1><out c(u1)><out c(u2)>(
    nt1 != getchallenge & u1 != getchallenge & u2 != getchallenge &
    <d.u1><out c(w)>(w != getchallenge) &
    <d.u2><out c(w)>(w != getchallenge)))
""", "one passport answers two readers; the constant marks session starts"),
    "phi-ch": Attack("phi-ch", "fm", """
<out p(p1)><out r(r1)><out r(r2)><out p1(nt1)><r1.nt1><r2.nt1><out r1(u1)><out r2(u2)>(
  <p1.u1><out p1(w)>true &
  <p1.u2><out p1(w)>true)
""", "fresh endpoints tie every action to a participant"),
    "phi-2": Attack("phi-2", "fm", """
<out c(nt1)><out c(nt2)><d.nt1><d.nt1><out c(u1)><out c(u2)>(
  <d.u1><out c(w)>true &
  <d.u2><out c(w)>true)
""", "two bounded sessions are used up before authentication"),
    "psi-min": Attack("psi-min", "fm", f"""
<out c(nt1)><d.nt1><d.nt1><out c(u1)><out c(u2)>(
  {_PAIR.format('u1')} & {_PAIR.format('u2')} &
  <d.u1><out c(w)>({_PAIR.format('w')} & [d.z]<out c(v)>({_PAIR.format('v')})) &
  <d.u2><out c(w)>({_PAIR.format('w')} & [d.z]<out c(v)>({_PAIR.format('v')})))
""", "pair tests and a box over a dummy input detect a used passport"),
    "chi-feldhofer": Attack("chi-feldhofer", "hpfm", f"""
{_CHI_PREFIX}(
  <d.u1@0.0.1[]><out c(w)@0.0.1[]>[d.z@1.0.0.0[]]<out c(v)@1.0.0.0[]>true &
  <d.u2@0.0.1[]><out c(w)@0.0.1[]>[d.z@1.0.0.0[]]<out c(v)@1.0.0.0[]>true)
""", "causality between an input and the output it triggers"),
    "chi-prime-feldhofer": Attack("chi-prime-feldhofer", "hpfm", f"""
{_CHI_PREFIX}(
  [d.u1@1.0.0.0[]]<out c(w)@1.0.0.0[]>true &
  [d.u2@1.0.0.0[]]<out c(w)@1.0.0.0[]>true)
""", "the same attack with an earlier change of player"),
    "psi-err": Attack("psi-err", "fm", """
<out c(nt1)><d.nt1><d.nt1><out c(u1)><out c(u2)>(
  u1 != error & u2 != error &
  <d.z><out c(e)>(e = error & [d.z][out c(v)](v != error)) &
  <d.u1><out c(w)>(w != error & [d.z][out c(v)](v != error)) &
  <d.u2><out c(w)>(w != error & [d.z][out c(v)](v != error)))
""", "error messages reveal which passport is still waiting"),
    "chi-err": Attack("chi-err", "hpfm", f"""
{_CHI_PREFIX}(
  u1 != error & u2 != error &
  <d.u1@0.0.1[]><out c(w)@0.0.1[]>(w != error & [d.z@1.0.0.0[]][out c(v)@1.0.0.0[]](v != error)) &
  <d.u2@0.0.1[]><out c(w)@0.0.1[]>(w != error & [d.z@1.0.0.0[]][out c(v)@1.0.0.0[]](v != error)))
""", "located variant of the error attack"),
    "phi-nondist": Attack("phi-nondist", "hpfm", f"""
{_CHI_PREFIX}(
  <d.u1@0.0.1[]><out c(w)@0.0.1[]>true &
  <d.u2@0.0.1[]><out c(w)@0.0.1[]>true)
""", "satisfied by both sides: a dummy reader mimics the passport"),
}


def attack_names() -> list[str]:
    return list(ATTACKS)


def attack_formula(name: str) -> Formula:
    try:
        att = ATTACKS[name]
    except KeyError:
        raise CorpusError(f"unknown attack {name!r}; try one of {', '.join(ATTACKS)}") from None
    return instantiate_free(parse_formula(att.text, att.dialect))


def attack_dialect(name: str) -> str:
    return ATTACKS[name].dialect


@dataclass(frozen=True)
class Expectation:
    """One row of the regression table."""

    model: str
    side: str
    attack: str
    expected: bool
    bang_cap: int


def _row(model, attack, system, spec, cap):
    return [Expectation(model, "system", attack, system, cap),
            Expectation(model, "spec", attack, spec, cap)]


EXPECTATIONS = (
    _row("bac-get", "phi-get", True, False, 4)
    + _row("bac-ch", "phi-ch", True, False, 4)
    + _row("bac-two", "phi-2", True, False, 4)
    + _row("bac-min", "psi-min", True, False, 5)
    + _row("feldhofer-min", "chi-feldhofer", True, False, 5)
    + _row("feldhofer-min", "chi-prime-feldhofer", True, False, 5)
    + _row("feldhofer-min-err", "psi-err", True, False, 5)
    + _row("feldhofer-min-err", "chi-err", True, False, 5)
    + _row("bac-min", "phi-nondist", True, True, 5)
)


# small pairs separating the relations ---------------------------------------------

GAME_PAIRS = {
    # sequential versus parallel copies of one output
    "cc": ("out(a, a).out(a, a)", "out(a, a) | out(a, a)"),
    "ex8": ("new x, y, z.(out(a, x).(out(b, y) | out(c, z)))",
            "new x, y, z.(out(a, x).out(b, y) | out(c, z))"),
    # a replicated pair of outputs against replicated single outputs
    "ex8-bang": ("!(new x.out(a, x).new x.out(a, x))", "!(new x.out(a, x))"),
    "ex9": ("new c, d.((out(d, d) | new n.out(a, n).in(d, z).in(n, x)) | (out(c, c) | in(c, y)))",
            "new e, f, n.((out(f, f) | out(a, n).in(f, z)) | (out(e, e) | in(e, y).in(n, x)))"),
}

# located formulas satisfied by the left process of a pair only
EX8_FORMULA = "<out a(x)@0[]><out c(z)@0.1[]>true"
EX8_BANG_FORMULA = "<out a(x)@0[]><out a(y)@0[]>true"
# the located formula distinguishing the ex9 pair; m is any public message
EX9_FORMULA = "<tau@(1.0[],1.1[])><out a(x)@0.1[]><tau@(0.0[],0.1[])><x.m@0.1[]>true"


def game_pair(name: str) -> tuple[ExtendedProcess, ExtendedProcess]:
    try:
        left, right = GAME_PAIRS[name]
    except KeyError:
        raise CorpusError(f"unknown pair {name!r}; try one of {', '.join(GAME_PAIRS)}") from None
    return parse_process(left), parse_process(right)
