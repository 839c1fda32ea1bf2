import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from picheck.corpus import EX9_FORMULA, game_pair
from picheck.equiv import (
    RELATIONS,
    Distinguished,
    Game,
    GameConfig,
    GameConfigError,
    RelatedUpToBound,
    Strategy,
    StrategyError,
    play_game,
    replay_strategy,
    snapshot_ok,
    strategy_dot,
)
from picheck.indep import hygienic
from picheck.logic import parse_formula
from picheck.procs import NIL, ExtendedProcess, In, New, Out, Par, parse_process
from picheck.sos import Event, Location, Output
from picheck.terms import Alias, Name

P = parse_process


def verdict(left, right, rel, **kw):
    return play_game(P(left), P(right), GameConfig(rel, **kw))


@pytest.mark.parametrize("name", ["cc", "ex8", "ex8-bang", "ex9"])
def test_small_pairs_separate_hp_from_interleaving(name):
    a, b = game_pair(name)
    hp = play_game(a, b, GameConfig("hp-sim"))
    assert isinstance(hp, Distinguished)
    assert replay_strategy(a, b, hp.strategy, GameConfig("hp-sim"))
    assert isinstance(play_game(a, b, GameConfig("i-sim")), RelatedUpToBound)


def test_sequential_and_parallel_outputs_are_i_bisimilar():
    a, b = game_pair("cc")
    v = play_game(a, b, GameConfig("i-bisim"))
    assert isinstance(v, RelatedUpToBound) and snapshot_ok(v)


def test_example_nine_strategy_uses_a_communication():
    a, b = game_pair("ex9")
    v = play_game(a, b, GameConfig("hp-sim"))
    events = []
    node = v.strategy
    while node.event is not None:
        events.append(node.event)
        node = node.replies[0][1] if node.replies else Strategy()
    assert any(ev.action[0] == "tau" for ev in events)
    assert replay_strategy(a, b, v.strategy, GameConfig("hp-sim"))


def test_example_nine_guided_game():
    a, b = game_pair("ex9")
    phi = parse_formula(EX9_FORMULA, "hpfm")
    v = play_game(a, b, GameConfig("hp-sim", guide=phi))
    assert isinstance(v, Distinguished)


def test_alias_bijection_examples():
    # one location on the left, two on the right, and the converse
    assert verdict("new x.(out(b,h(x)).out(a,x))", "new x.(out(b,h(x)) | out(a,x))", "i-sim").verdict \
        == "related-up-to-bound"
    assert verdict("new x.(out(a,x) | out(x,h(x)))", "new x.(out(a,x).out(x,h(x)))", "i-sim").verdict \
        == "related-up-to-bound"


@pytest.mark.parametrize("rel", RELATIONS)
def test_process_related_to_itself(rel):
    a = P("new k.(out(c, enc(a, k)) | in(d, x).[x = a]out(c, k))")
    v = play_game(a, a, GameConfig(rel, depth=4))
    assert isinstance(v, RelatedUpToBound) and snapshot_ok(v)


def test_empty_strategy_does_not_replay_on_identical_processes():
    a = P("out(a, a)")
    assert not replay_strategy(a, a, Strategy())


def test_replay_rejects_disabled_moves():
    a = P("out(a, a)")
    bogus = Strategy("left", Event(Output(Name("b"), Alias("", "lam")), Location("")))
    with pytest.raises(StrategyError):
        replay_strategy(a, a, bogus)
    with pytest.raises(StrategyError):
        replay_strategy(a, a, Strategy("right", bogus.event), GameConfig("i-sim"))


def test_static_equivalence_gates_replies():
    # the only reply would leave distinguishable frames, so the duplicator is stuck
    v = verdict("new k.out(c, k)", "out(c, a)", "i-sim", depth=2)
    assert isinstance(v, Distinguished) and v.strategy.replies == ()
    # distinguishable frames at the root need no move at all
    root = verdict("new k.{@0:lam = k} | 0", "{@0:lam = a} | 0", "i-sim")
    assert root.strategy.event is None
    assert replay_strategy(P("new k.{@0:lam = k} | 0"), P("{@0:lam = a} | 0"), root.strategy)


@pytest.mark.parametrize("kw", [
    {"relation": "x-sim"}, {"depth": 0}, {"recipe_depth": -1}, {"bang_cap": 0},
    {"relation": "i-bisim", "guide": parse_formula("true")},
])
def test_config_errors(kw):
    with pytest.raises(GameConfigError):
        GameConfig(**kw)


def test_strategy_exports():
    a, b = game_pair("ex8")
    v = play_game(a, b, GameConfig("hp-sim"))
    doc = v.strategy.to_json()
    assert json.loads(json.dumps(doc)) == doc and doc["side"] == "left"
    dot = strategy_dot(v.strategy)
    assert dot.startswith("digraph strategy {") and "->" in dot
    assert v.strategy.lines()[0].startswith("left: ")
    assert v.depth == v.strategy.depth >= 1


# properties over random small pairs -----------------------------------------------------

chans = st.sampled_from([Name("a"), Name("b")])
payloads = st.sampled_from([Name("a"), Name("k"), Name("x")])


def small_processes():
    def extend(inner):
        return st.one_of(
            st.tuples(chans, st.just("x"), inner).map(lambda t: In(*t)),
            st.tuples(chans, payloads, inner).map(lambda t: Out(*t)),
            st.tuples(inner, inner).map(lambda t: Par(*t)),
            inner.map(lambda p: New("k", p)),
        )

    return st.recursive(st.just(NIL), extend, max_leaves=4).map(lambda p: ExtendedProcess((), (), p))


def game(a, b, rel):
    return play_game(a, b, GameConfig(rel, depth=4))


@settings(max_examples=60)
@given(small_processes(), small_processes())
def test_game_properties(a, b):
    v = {rel: game(a, b, rel) for rel in RELATIONS}
    dist = {rel: isinstance(x, Distinguished) for rel, x in v.items()}
    # located relations are finer, bisimulation is finer than simulation
    assert dist["i-sim"] <= dist["hp-sim"] and dist["i-bisim"] <= dist["hp-bisim"]
    assert dist["i-sim"] <= dist["i-bisim"] and dist["hp-sim"] <= dist["hp-bisim"]
    for rel in ("i-bisim", "hp-bisim"):
        assert isinstance(game(b, a, rel), Distinguished) == dist[rel]
    for rel, x in v.items():
        if isinstance(x, Distinguished):
            assert replay_strategy(a, b, x.strategy, GameConfig(rel, depth=4))
        else:
            assert snapshot_ok(x)
            assert all(hygienic(p.rel) for p in x.relation)


def test_memo_records_explored_positions():
    a, b = game_pair("ex8")
    g = Game(a, b, GameConfig("hp-sim"))
    g.play()
    assert g.memo
