import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catecon.equilibria import random_game_pair
from catecon.games import (
    Combinator,
    Game,
    GameMorphism,
    PushoutError,
    amalgam_box,
    amalgamate,
    box_for,
    box_step,
    check_game_morphism,
    check_wiring_minimality,
    compose_cospans,
    coproduct,
    empty_game,
    game_from_dict,
    game_to_dict,
    identity_cospan,
    identity_morphism,
    initial_morphism,
    is_isomorphic,
    pushout,
    pushout_amalgam,
    sum_cospan,
    validate_game,
)


def solo(player, strategies, id="solo"):
    return Game.from_table(id, [player], {player: strategies}, {player: {s: 1.0 for s in strategies}})


def third(id="g3"):
    return Game.from_table(
        id, ["3", "4"], {"3": ["L", "R"], "4": ["U"]},
        {"3": {"L|U": 1.0, "R|U": 2.0}, "4": {"L|U": 3.0, "R|U": 1.0}},
    )


def inclusion(sub: Game, whole: Game) -> GameMorphism:
    """Embed a subgame form whose strategy labels reappear verbatim in `whole`."""
    smap = {i: {s: s for s in sub.strategies[i]} for i in sub.players}
    omap = {}
    for s in whole.profiles():
        choice = dict(zip(whole.players, s))
        ps = tuple(choice[i] for i in sub.players)
        if all(p in sub.strategies[i] for i, p in zip(sub.players, ps)):
            omap[whole.rho[s]] = sub.rho[ps]
    return GameMorphism(sub, whole, smap, omap)


# -- validation -------------------------------------------------------------------

def test_bos_valid_with_positivity_warning(bos):
    rep = validate_game(bos)
    assert rep.passed
    assert rep.sections["payoff_positivity"]["passed"] is None
    assert len(rep.sections["payoff_positivity"]["detail"]["entries"]) == 4


def test_empty_game_valid():
    g = empty_game()
    assert validate_game(g).passed
    assert g.players == () and list(g.profiles()) == []


def test_duplicate_outcome_rejected(bos):
    d = game_to_dict(bos)
    d["outcomes"] = {k: "same" for k in d["outcomes"]}
    assert not validate_game(game_from_dict(d)).passed


def test_file_round_trip(bos):
    again = game_from_dict(game_to_dict(bos))
    assert again.players == bos.players
    assert all(again.payoff(p, s) == bos.payoff(p, s) for p in bos.players for s in bos.profiles())


# -- morphisms -------------------------------------------------------------------

def test_initial_morphism(bos):
    assert check_game_morphism(initial_morphism(bos)).passed


def test_identity_morphism(bos, pd):
    for g in (bos, pd):
        assert check_game_morphism(identity_morphism(g)).passed


def test_coproduct_leg_into_bos_pd(bos, pd):
    am = amalgamate(bos, pd)
    rep = check_game_morphism(am.left)
    assert rep.passed
    assert rep.sections["commutes"]["detail"] == {"profiles_checked": 16}
    # oracle: project every target profile by hand
    for s in am.game.profiles():
        p1, p2, _ = s
        assert am.left.project(s) == (p1, p2.split("-")[0])


def test_swapped_strategy_breaks_commuting(bos, pd):
    am = amalgamate(bos, pd)
    smap = {i: dict(m) for i, m in am.left.strategy_map.items()}
    swap = {"Bx": "Bll", "Bll": "Bx"}
    smap["2"] = {t: swap[s] for t, s in smap["2"].items()}
    rep = check_game_morphism(GameMorphism(bos, am.game, smap, am.left.outcome_map))
    assert not rep.passed
    w = rep.witnesses[0]
    assert w.check == "commutes"
    assert len(w.data["target_profile"]) == 3


def test_missing_player_fails(bos, pd):
    rep = check_game_morphism(GameMorphism(pd, bos, {}, {}))
    assert not rep.passed and rep.witnesses[0].check == "players_included"


# -- coproducts -----------------------------------------------------------------------

def test_bos_pd_payoff_structure(bos, pd):
    g = coproduct(bos, pd)
    assert g.shape == (2, 4, 2)
    assert g.strategies["2"] == ("Bx-C", "Bx-D", "Bll-C", "Bll-D")
    s = ("Bx", "Bx-D", "D")
    assert (g.payoff("1", s), g.payoff("2", s), g.payoff("3", s)) == (2, 1 * 1, 1)
    # every entry against the component tables
    for p1, p2, p3 in g.profiles():
        b, q = p2.split("-")
        assert g.payoff("1", (p1, p2, p3)) == bos.payoff("1", (p1, b))
        assert g.payoff("3", (p1, p2, p3)) == pd.payoff("3", (q, p3))
        assert g.payoff("2", (p1, p2, p3)) == bos.payoff("2", (p1, b)) * pd.payoff("2", (q, p3))


def test_sum_combinator_payoffs(bos, pd):
    g = coproduct(bos, pd, Combinator.SUM)
    assert g.payoff("2", ("Bll", "Bll-C", "C")) == bos.payoff("2", ("Bll", "Bll")) + pd.payoff("2", ("C", "C"))


def test_empty_game_is_unit(bos):
    for g in (coproduct(empty_game(), bos), coproduct(bos, empty_game())):
        assert is_isomorphic(g, bos)
        assert len(list(g.profiles())) == 4


def test_disjoint_players_multiply(bos):
    g = coproduct(bos, third())
    assert len(list(g.profiles())) == 4 * 2
    assert len(set(g.rho.values())) == 8


def test_label_collisions_are_qualified():
    a = Game.from_table("a", ["1"], {"1": ["x", "x-y"]}, {"1": {"x": 1, "x-y": 2}})
    b = Game.from_table("b", ["1"], {"1": ["y-z", "z"]}, {"1": {"y-z": 1, "z": 2}})
    g = coproduct(a, b)
    assert len(set(g.strategies["1"])) == 4
    assert all(lab.startswith("a:") for lab in g.strategies["1"])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_coproduct_laws_on_random_games(seed):
    rng = np.random.default_rng(seed)
    g, h = random_game_pair(rng)
    k = random_game_pair(rng, tag="k")[1]
    for c in Combinator:
        am = amalgamate(g, h, c)
        assert len(set(am.game.rho.values())) == len(am.game.rho)
        assert check_game_morphism(am.left).passed
        assert check_game_morphism(am.right).passed
        left = coproduct(coproduct(g, h, c), k, c)
        right = coproduct(g, coproduct(h, k, c), c)
        assert is_isomorphic(left, right)
        assert is_isomorphic(coproduct(g, empty_game(), c), g)


# -- pushouts ---------------------------------------------------------------------------

def test_pushout_of_identities(bos):
    i = identity_morphism(bos)
    g = pushout(i, i)
    assert is_isomorphic(g, bos)
    assert set(g.rho.values()) == set(bos.rho.values())


def test_pushout_over_empty(bos):
    e = empty_game()
    g = pushout(initial_morphism(e), initial_morphism(bos))
    assert is_isomorphic(g, bos)


def test_pushout_over_shared_player(bos, pd):
    two_b = solo("2", ["Bx", "Bll"], id="two")
    f = GameMorphism(two_b, bos, {"2": {"Bx": "Bx", "Bll": "Bll"}}, {})
    g = GameMorphism(two_b, pd, {"2": {"C": "Bx", "D": "Bll"}}, {})
    am = pushout_amalgam(f, g)
    assert len(am.game.players) == 3
    # player 2's strategies are glued, not paired; the renamed side supplies the label
    assert am.game.strategies["2"] == ("C", "D")
    assert len(list(am.game.profiles())) == 2 * 2 * 2
    assert check_game_morphism(am.left).passed and check_game_morphism(am.right).passed


def test_pushout_rejects_non_inclusions(bos, pd):
    bad = GameMorphism(bos, pd, {}, {})
    with pytest.raises(PushoutError):
        pushout(bad, identity_morphism(pd))


# -- cospans and wiring ------------------------------------------------------------------

def test_identity_cospan_is_neutral(bos, pd):
    c = sum_cospan(bos, pd)
    assert c.check().passed
    d = compose_cospans(c, identity_cospan(pd))
    assert d.check().passed
    assert is_isomorphic(d.apex, c.apex)


def test_cospan_chain_collects_players(bos, pd):
    a = sum_cospan(bos, pd)
    b = sum_cospan(pd, third())
    c = compose_cospans(a, b)
    assert c.check().passed
    assert set(c.apex.players) == {"1", "2", "3", "4"}


def test_cospan_mismatch(bos, pd):
    with pytest.raises(ValueError):
        compose_cospans(sum_cospan(bos, pd), sum_cospan(bos, pd))


def test_wiring_minimality(bos, pd):
    whole = coproduct(bos, pd)
    assert check_wiring_minimality([bos, pd], whole)
    assert check_wiring_minimality([bos], bos)
    bigger = coproduct(whole, solo("9", ["only"]))
    assert not check_wiring_minimality([bos, pd], bigger)


# -- boxes ---------------------------------------------------------------------------------

def test_bos_box_step(bos):
    box = box_for(bos, ("Bx", "Bx"), node="n0")
    o = bos.rho[("Bx", "Bx")]
    payoffs, choice, nxt = box_step(box, [o])
    assert choice == ("Bx", "Bx")
    assert (payoffs["1"][o], payoffs["2"][o]) == (2, 1)
    assert all(len(nxt.paths[p]) == len(box.paths[p]) + 1 for p in bos.players)
    _, _, later = box_step(nxt, [o])
    assert all(later.paths[p][: len(nxt.paths[p])] == nxt.paths[p] for p in bos.players)


def test_empty_box_is_noop():
    box = box_for(empty_game())
    assert box_step(box, []) == ({}, (), box)


def test_box_rejects_foreign_input(bos):
    with pytest.raises(ValueError):
        box_step(box_for(bos), ["not-an-outcome"])


def test_product_state_multiplies_component_payoffs(bos, pd):
    am = amalgamate(bos, pd)
    box = amalgam_box(am, box_for(bos).state, box_for(pd).state, Combinator.PRODUCT)
    phi = box.payoff_vectors()
    for s in am.game.profiles():
        o = am.game.rho[s]
        b, q = s[1].split("-")
        assert phi["2"][o] == bos.payoff("2", (s[0], b)) * pd.payoff("2", (q, s[2]))
