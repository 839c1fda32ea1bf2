import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from picheck.corpus import ATTACKS, attack_formula, build_model, model_names, model_source, parse_model_name
from picheck.logic import (
    FALSE,
    TRUE,
    And,
    CheckBudget,
    Diamond,
    Equal,
    FormulaError,
    InPat,
    Not,
    OutPat,
    TauPat,
    check,
    check_fm,
    check_hpfm,
    diamond_only,
    erase_locations,
    formula_free_names,
    in_sim_fragment,
    instantiate_free,
    modal_depth,
    parse_formula,
)
from picheck.procs import parse_process
from picheck.sos import BudgetExceeded, LocPair, Location
from picheck.terms import TermError, parse_message

M = parse_message
P = parse_process


def test_parse_example_four():
    phi = parse_formula("<out a (x)><out b (y)>(h(x)=y)")
    assert phi == Diamond(OutPat(M("a"), "x"), None,
                          Diamond(OutPat(M("b"), "y"), None, Equal(M("h(x)"), M("y"))))


def test_parse_abbreviations():
    assert parse_formula("~true") == Not(TRUE) == FALSE
    boxed = parse_formula("[d.z]<out c (v)>(pair(fst(v),snd(v))=v)")
    inner = Diamond(OutPat(M("c"), "v"), None, Equal(M("pair(fst(v), snd(v))"), M("v")))
    assert boxed == Not(Diamond(InPat(M("d"), M("z")), None, Not(inner)))
    assert parse_formula("a != b") == Not(Equal(M("a"), M("b")))
    assert parse_formula("<tau>true") == Diamond(TauPat(), None, TRUE)


def test_parse_located():
    phi = parse_formula("<out a(x)@0[]><out c(z)@0.1[]>true", "hpfm")
    assert phi[2] == Location("0") and phi[3][2] == Location("01")


@pytest.mark.parametrize("text, dialect", [
    ("<out a(x)@0[]>true", "fm"),
    ("<out a(x)>true", "hpfm"),
    ("<tau@0[]>true", "hpfm"),
    ("<out a(x)>true", "ltl"),
])
def test_dialect_errors(text, dialect):
    with pytest.raises(FormulaError):
        parse_formula(text, dialect)


def test_syntax_error():
    with pytest.raises(TermError, match="offset"):
        parse_formula("<out a(x)")


# satisfaction ------------------------------------------------------------------------

def test_example_four_both_orders():
    phi = parse_formula("<out a (x)><out b (y)>(h(x)=y)")
    assert check_fm(P("out(a,c) | out(b,h(c))"), phi)
    assert check_fm(P("out(b,h(c)) | out(a,c)"), phi)
    assert not check_fm(P("out(a,c) | out(b,c)"), phi)


def test_true_holds_everywhere():
    for text in ["0", "in(a, x)", "!out(a, a)"]:
        assert check_fm(P(text), TRUE)
        assert check_hpfm(P(text), frozenset(), TRUE)


def test_example_eight_located():
    phi = parse_formula("<out a(x)@0[]><out c(z)@0.1[]>true", "hpfm")
    assert check_hpfm(P("new x,y,z.(out(a,x).(out(b,y) | out(c,z)))"), frozenset(), phi)
    assert not check_hpfm(P("new x,y,z.(out(a,x).out(b,y) | out(c,z))"), frozenset(), phi)
    # without locations both processes satisfy it
    for text in ["new x,y,z.(out(a,x).(out(b,y) | out(c,z)))", "new x,y,z.(out(a,x).out(b,y) | out(c,z))"]:
        assert check_fm(P(text), erase_locations(phi))


def test_box_over_input_uses_fresh_message():
    a = P("in(d, y).out(c, y)")
    phi = instantiate_free(parse_formula("[d.z]<out c(v)>(v = z)"))
    assert check_fm(a, phi)
    assert not check_fm(a, instantiate_free(parse_formula("[d.z]<out c(v)>(v = a)")))


def test_budget_is_reported():
    # a communication between two fresh copies needs two unfoldings
    a = P("!(out(a, a) | in(a, x))")
    with pytest.raises(BudgetExceeded):
        check_fm(a, parse_formula("<tau>true"), CheckBudget(1))
    assert check_fm(a, parse_formula("<tau>true"), CheckBudget(2))


def test_default_cap_follows_modal_depth():
    phi = parse_formula("<tau><tau>true")
    assert modal_depth(phi) == 2
    assert CheckBudget().cap_for(phi) == 3
    assert CheckBudget(7).cap_for(phi) == 7


def test_check_dispatches_on_dialect():
    phi = parse_formula("<out a(x)@[]>true", "hpfm")
    assert check(P("out(a, a)"), phi, "hpfm")
    assert not check(P("out(b, b)"), phi, "hpfm")


# formula structure ---------------------------------------------------------------------

@pytest.mark.parametrize("name, expected", [
    ("phi-get", True), ("phi-ch", True), ("phi-2", True), ("phi-nondist", True),
    ("psi-min", False), ("chi-feldhofer", False), ("chi-prime-feldhofer", False),
    ("psi-err", False), ("chi-err", False),
])
def test_simulation_fragment(name, expected):
    assert in_sim_fragment(attack_formula(name)) == expected


def test_instantiate_free():
    psi = attack_formula("psi-min")
    assert "z" not in formula_free_names(psi)
    [fresh] = formula_free_names(psi) - {"c", "d"}
    corpus_text = " ".join(model_source(parse_model_name(n, side))
                           for n in model_names() for side in ("system", "spec"))
    assert fresh not in corpus_text and fresh not in {"error", "getchallenge"}
    closed = parse_formula("<out c(x)>(x = a)")
    assert instantiate_free(closed) == closed
    assert instantiate_free(instantiate_free(psi)) == instantiate_free(psi)


def test_attack_table_is_parsable():
    for name, att in ATTACKS.items():
        phi = attack_formula(name)
        assert modal_depth(phi) > 0
        if att.dialect == "hpfm":
            assert erase_locations(phi) != phi


# properties --------------------------------------------------------------------------

small_procs = st.sampled_from([
    "out(a, a) | out(b, h(a))",
    "new k.(out(a, k).in(b, x).[x = k]out(c, c))",
    "in(a, x).out(b, x) + out(c, c)",
    "(out(a, a) | in(a, y).out(b, y)) | new n.out(c, n)",
    "!in(a, x).out(a, h(x))",
    "new x,y,z.(out(a,x).out(b,y) | out(c,z))",
])
patterns = st.sampled_from([TauPat(), InPat(M("a"), M("a")), InPat(M("b"), M("c")),
                            OutPat(M("a"), "x"), OutPat(M("b"), "x"), OutPat(M("c"), "x")])
atoms = st.sampled_from([TRUE, Equal(M("x"), M("a")), Equal(M("h(a)"), M("x"))])


def formulas(located=False):
    locs = st.sampled_from([Location(""), Location("0"), Location("1"), Location("01"), Location("10")])

    def diamond(t):
        pat, body, loc = t
        if not located:
            loc = None
        elif pat[0] == "tau":
            loc = LocPair(loc, Location("1" + loc.prefix))
        return Diamond(pat, loc, body)

    def extend(inner):
        return st.one_of(
            st.tuples(patterns, inner, locs).map(diamond),
            st.tuples(inner, inner).map(lambda t: And(*t)),
            inner.map(Not),
        )

    return st.recursive(atoms, extend, max_leaves=5)


@settings(max_examples=80)
@given(small_procs, formulas())
def test_duality(text, phi):
    a = P(text)
    phi = instantiate_free(phi, reserved={"a", "b", "c", "x"})
    assert check_fm(a, Not(phi), CheckBudget(4)) == (not check_fm(a, phi, CheckBudget(4)))


@settings(max_examples=80)
@given(small_procs, formulas(located=True))
def test_located_checking_refines_plain(text, phi):
    phi = instantiate_free(phi, reserved={"a", "b", "c", "x"})
    if not diamond_only(phi):
        return
    a = P(text)
    if check_hpfm(a, frozenset(), phi, CheckBudget(4)):
        assert check_fm(a, erase_locations(phi), CheckBudget(4))


@settings(max_examples=40)
@given(st.sampled_from(["lam", "mu", "nu"]), formulas())
def test_alias_bases_do_not_matter(base, phi):
    # the same frame under a different alias base satisfies the same formulas
    phi = instantiate_free(phi, reserved={"a", "b", "c", "x"})
    left = P("new k.{@0:lam = h(k)} | out(a, k) | in(b, x).out(c, x)")
    right = P(f"new k.{{@0:{base} = h(k)}} | out(a, k) | in(b, x).out(c, x)")
    assert check_fm(left, phi, CheckBudget(4)) == check_fm(right, phi, CheckBudget(4))


def test_hp_refines_fm_on_corpus():
    for model in ["bac-min", "feldhofer-min"]:
        for side in ["system", "spec"]:
            a = build_model(parse_model_name(model, side))
            for name, att in ATTACKS.items():
                phi = attack_formula(name)
                if att.dialect == "hpfm" and diamond_only(phi):
                    if check_hpfm(a, frozenset(), phi, CheckBudget(5)):
                        assert check_fm(a, erase_locations(phi), CheckBudget(5))


def test_duality_on_corpus_models():
    phi = attack_formula("phi-nondist")
    for model in ["bac-min", "feldhofer-min"]:
        a = build_model(parse_model_name(model, "spec"))
        assert check_hpfm(a, frozenset(), Not(phi), CheckBudget(5)) == \
            (not check_hpfm(a, frozenset(), phi, CheckBudget(5)))
