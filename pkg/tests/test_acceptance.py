"""Acceptance suite: each criterion runs at its budget and prints a pass/fail line."""
import random
import time

import pytest

from frontier import corpus_states, determinism_violations, diamond_violations, leak_violations
from oracles import PRIVATE, distinguishing_test, mutate, random_frame
from picheck.corpus import (
    EX8_BANG_FORMULA,
    EX8_FORMULA,
    EX9_FORMULA,
    EXPECTATIONS,
    attack_dialect,
    attack_formula,
    build_model,
    game_pair,
    parse_model_name,
)
from picheck.equiv import Distinguished, GameConfig, RelatedUpToBound, play_game, replay_strategy
from picheck.logic import CheckBudget, check_fm, check_hpfm, in_sim_fragment, modal_depth, parse_formula
from picheck.procs import alpha_equal, parse_process, reset_fresh
from picheck.sos import Engine
from picheck.terms import Frame, parse_message, static_equivalent

pytestmark = pytest.mark.acceptance


def model(name, side):
    return build_model(parse_model_name(name, side))


def timed(f, *args):
    reset_fresh()
    t = time.perf_counter()
    out = f(*args)
    return out, time.perf_counter() - t


def expect_attack(notes, name, attack, cap, logic, budget):
    phi = attack_formula(attack)
    for side, want in (("system", True), ("spec", False)):
        if logic == "fm":
            got, dt = timed(check_fm, model(name, side), phi, CheckBudget(cap))
        else:
            got, dt = timed(check_hpfm, model(name, side), frozenset(), phi, CheckBudget(cap))
        notes.append(f"{attack} {side}={got} {dt:.1f}s")
        assert got is want, f"{attack} on {name}/{side}: got {got}"
        assert dt < budget, f"{attack} on {name}/{side} took {dt:.1f}s (budget {budget}s)"


def test_criterion_1(criterion):
    with criterion("1", "get-style attack") as notes:
        expect_attack(notes, "bac-get", "phi-get", 4, "fm", 60)


def test_criterion_2(criterion):
    with criterion("2", "fresh-channel attack") as notes:
        expect_attack(notes, "bac-ch", "phi-ch", 4, "fm", 60)


def test_criterion_3(criterion):
    with criterion("3", "two-session attack and game") as notes:
        expect_attack(notes, "bac-two", "phi-2", 4, "fm", 30)
        a, b = model("bac-two", "system"), model("bac-two", "spec")
        cfg = GameConfig("i-sim", depth=14, recipe_depth=1)
        v, dt = timed(play_game, a, b, cfg)
        notes.append(f"game {v.verdict} at depth {getattr(v, 'depth', '-')} {dt:.1f}s")
        assert isinstance(v, Distinguished)
        assert dt < 300, f"game took {dt:.1f}s"
        assert replay_strategy(a, b, v.strategy, cfg)


def test_criterion_4(criterion):
    with criterion("4", "box attack on the minimal model") as notes:
        expect_attack(notes, "bac-min", "psi-min", 5, "fm", 300)


def test_criterion_5(criterion):
    with criterion("5", "located attacks") as notes:
        expect_attack(notes, "feldhofer-min", "chi-feldhofer", 5, "hpfm", 300)
        expect_attack(notes, "feldhofer-min", "chi-prime-feldhofer", 5, "hpfm", 300)


def test_criterion_6(criterion):
    with criterion("6", "error-message attacks") as notes:
        expect_attack(notes, "feldhofer-min-err", "psi-err", 5, "fm", 300)
        expect_attack(notes, "feldhofer-min-err", "chi-err", 5, "hpfm", 300)


def test_criterion_7(criterion):
    with criterion("7", "formula satisfied by both sides") as notes:
        phi = attack_formula("phi-nondist")
        for side in ("system", "spec"):
            got, dt = timed(check_hpfm, model("bac-min", side), frozenset(), phi, CheckBudget(5))
            notes.append(f"{side}={got} {dt:.1f}s")
            assert got is True


def test_criterion_8(criterion):
    with criterion("8", "small pairs") as notes:
        failures = []
        for name in ("cc", "ex8", "ex8-bang", "ex9"):
            a, b = game_pair(name)
            for rel, want in (("hp-sim", Distinguished), ("i-bisim", RelatedUpToBound)):
                v, dt = timed(play_game, a, b, GameConfig(rel, depth=6))
                if not isinstance(v, want) or dt >= 10:
                    failures.append(f"{name} {rel}: {v.verdict} in {dt:.1f}s")
                if isinstance(v, Distinguished) and not replay_strategy(a, b, v.strategy, GameConfig(rel, depth=6)):
                    failures.append(f"{name} {rel}: strategy does not replay")
        a, b = game_pair("ex9")
        phi = parse_formula(EX9_FORMULA, "hpfm")
        sides = (check_hpfm(a, frozenset(), phi), check_hpfm(b, frozenset(), phi))
        if sides != (True, False):
            failures.append(f"ex9 formula: {sides}")
        notes.extend(failures)
        assert not failures, f"{len(failures)} sub-checks failed"


def test_criterion_9_transitions(criterion):
    with criterion("9(a-c)", "diamond, determinism, no leakage to depth 4") as notes:
        eng = Engine(3)
        n = 0
        bad = {"diamond": [], "determinism": [], "leakage": []}
        for name, s, mv in corpus_states(4, cap=3):
            n += 1
            if diamond_violations(eng, s, mv):
                bad["diamond"].append(name)
            if determinism_violations(eng, s, mv):
                bad["determinism"].append(name)
            if leak_violations(s, mv):
                bad["leakage"].append(name)
        notes.append(f"{n} states")
        assert not any(bad.values()), {k: len(v) for k, v in bad.items()}


def test_criterion_9_hm_consistency(criterion):
    with criterion("9(d)", "formula-guided simulation games") as notes:
        cases = [(f"{e.model}/{e.attack}", model(e.model, "system"), model(e.model, "spec"),
                  attack_formula(e.attack), "hp-sim" if attack_dialect(e.attack) == "hpfm" else "i-sim", e.bang_cap)
                 for e in EXPECTATIONS if e.side == "system" and in_sim_fragment(attack_formula(e.attack))]
        for name, text in (("ex8", EX8_FORMULA), ("ex8-bang", EX8_BANG_FORMULA), ("ex9", EX9_FORMULA)):
            a, b = game_pair(name)
            cases.append((name, a, b, parse_formula(text, "hpfm"), "hp-sim", 6))
        checked = 0
        for name, a, b, phi, rel, cap in cases:
            located = rel.startswith("hp")
            sat = (lambda p: check_hpfm(p, frozenset(), phi, CheckBudget(cap))) if located else \
                (lambda p: check_fm(p, phi, CheckBudget(cap)))
            if not (sat(a) and not sat(b)):
                continue
            cfg = GameConfig(rel, depth=modal_depth(phi), bang_cap=cap, guide=phi)
            v = play_game(a, b, cfg)
            assert isinstance(v, Distinguished), f"{name}: the game relates a pair the formula separates"
            assert replay_strategy(a, b, v.strategy, cfg), name
            checked += 1
        notes.append(f"{checked} distinguishing formulas")
        assert checked >= 5


def test_criterion_9_static_oracle(criterion):
    with criterion("9(e)", "static equivalence against brute force") as notes:
        rng = random.Random(1)
        disagreements = equivalent = 0
        for _ in range(200):
            a = random_frame(rng, rng.randint(1, 4))
            b = mutate(rng, a)
            brute = distinguishing_test(a, b, depth=3) is None
            equivalent += brute
            disagreements += brute != static_equivalent(Frame.of(a, PRIVATE), Frame.of(b, PRIVATE))
        notes.append(f"200 frames, {equivalent} equivalent, {disagreements} disagreements")
        assert disagreements == 0


def test_criterion_10(criterion):
    with criterion("10", "example derivations") as notes:
        t = time.perf_counter()
        eng = Engine()
        start = parse_process("new m,n.(out(a,pair(m,n)) | in(m,x).[x=n] out(ok,ok))")
        [(ev, b)] = eng.outputs(start)
        assert str(ev) == "out a(@0:lam) @ 0[]"
        assert alpha_equal(b, parse_process("new m,n.{@0:lam = pair(m, n)} | 0 | in(m, x).[x = n]out(ok, ok)"))
        [(ev2, c)] = eng.inputs(b, parse_message("fst(@0:lam)"), parse_message("snd(@0:lam)"))
        assert str(ev2) == "fst(@0:lam).snd(@0:lam) @ 1[]"
        assert alpha_equal(c, parse_process("new m,n.{@0:lam = pair(m, n)} | 0 | [n = n]out(ok, ok)"))
        dt = time.perf_counter() - t
        notes.append(f"{dt * 1000:.0f}ms")
        assert dt < 1
