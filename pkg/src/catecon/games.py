"""Finite normal-form games, their morphisms, sums, pushouts, cospans and boxes.

A game carries its game form (players, strategy sets, outcomes and the
bijection from profiles to outcomes) plus one positive payoff function per
player.  Morphisms G -> G' exhibit G as a subgame form of G': every player of
G plays in G', and each of G's strategies is read off from a strategy in G'.
"""
from __future__ import annotations

import itertools
import json
import operator
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import reduce
from pathlib import Path
from typing import Hashable, Iterator, Mapping, Sequence

import numpy as np

from .report import Report

Profile = tuple[str, ...]
Outcome = Hashable


class Combinator(str, Enum):
    """How a player present in two component games scores the combined outcome."""

    PRODUCT = "product"
    SUM = "sum"

    def __call__(self, a: float, b: float) -> float:
        return a * b if self is Combinator.PRODUCT else a + b

    def reduce(self, values: Sequence[float]) -> float:
        op = operator.mul if self is Combinator.PRODUCT else operator.add
        return reduce(op, values)


def profile_key(profile: Sequence[str]) -> str:
    return "|".join(profile)


@dataclass(frozen=True, eq=False)
class Game:
    id: str
    players: tuple[str, ...]
    strategies: Mapping[str, tuple[str, ...]]
    rho: Mapping[Profile, Outcome]
    payoffs: Mapping[str, Mapping[Outcome, float]]

    def profiles(self) -> Iterator[Profile]:
        if not self.players:
            return iter(())
        return itertools.product(*(self.strategies[p] for p in self.players))

    @property
    def outcomes(self) -> tuple[Outcome, ...]:
        return tuple(self.rho[s] for s in self.profiles())

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(self.strategies[p]) for p in self.players)

    def payoff(self, player: str, profile: Sequence[str]) -> float:
        return self.payoffs[player][self.rho[tuple(profile)]]

    def payoff_array(self, player: str, payoffs: Mapping | None = None) -> np.ndarray:
        table = (payoffs or self.payoffs)[player]
        vals = [table[self.rho[s]] for s in self.profiles()]
        return np.array(vals, dtype=float).reshape(self.shape)

    def index_of(self, profile: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.strategies[p].index(s) for p, s in zip(self.players, profile))

    def format_profile(self, profile: Sequence[str]) -> str:
        return ", ".join(f"{p}={s}" for p, s in zip(self.players, profile))

    def with_payoffs(self, payoffs: Mapping[str, Mapping[Outcome, float]], id: str | None = None) -> "Game":
        return replace(self, id=id or self.id, payoffs={p: dict(v) for p, v in payoffs.items()})

    @classmethod
    def from_table(
        cls,
        id: str,
        players: Sequence[str],
        strategies: Mapping[str, Sequence[str]],
        payoffs: Mapping[str, Mapping[str, float]],
        outcomes: Mapping[str, Outcome] | None = None,
    ) -> "Game":
        """Build a game whose payoffs are keyed by "s1|s2|..." profile keys.

        Outcomes default to the profile key itself.
        """
        players = tuple(str(p) for p in players)
        strategies = {p: tuple(strategies[p]) for p in players}
        profiles = list(itertools.product(*(strategies[p] for p in players))) if players else []
        rho = {s: (outcomes[profile_key(s)] if outcomes else profile_key(s)) for s in profiles}
        pay = {p: {rho[s]: float(payoffs[p][profile_key(s)]) for s in profiles} for p in players}
        return cls(id, players, strategies, rho, pay)


def empty_game() -> Game:
    return Game("empty", (), {}, {}, {})


def is_empty(g: Game) -> bool:
    return not g.players


def validate_game(g: Game) -> Report:
    rep = Report(f"validate[{g.id}]")
    if len(set(g.players)) != len(g.players):
        rep.fail("players", "duplicate player ids", list(g.players))
    for p in g.players:
        s = g.strategies.get(p)
        if not s:
            rep.fail("strategies", f"player {p} has no strategies", p)
        elif len(set(s)) != len(s):
            rep.fail("strategies", f"player {p} repeats a strategy label", list(s))
    if rep.status != "pass":
        return rep
    profiles = list(g.profiles())
    missing = [list(s) for s in profiles if s not in g.rho]
    if missing:
        rep.fail("rho_total", "profiles without an outcome", missing[:5])
    seen: dict = {}
    for s in profiles:
        o = g.rho.get(s)
        if o is not None and o in seen:
            rep.fail("rho_bijective", "two profiles share an outcome", [list(seen[o]), list(s), repr(o)])
            break
        seen[o] = s
    expected = int(np.prod(g.shape)) if g.players else 0
    rep.record("outcome_count", len(seen) == expected, {"outcomes": len(seen), "profiles": expected})
    nonpositive = []
    for p in g.players:
        table = g.payoffs.get(p, {})
        for s in profiles:
            o = g.rho.get(s)
            if o not in table:
                rep.fail("payoffs", f"player {p} has no payoff at {profile_key(s)}", [p, list(s)])
                return rep
            if table[o] <= 0:
                nonpositive.append([p, profile_key(s), table[o]])
    # the standard BoS and PD tables contain zero payoffs, so this is only a warning
    rep.record("payoff_positivity", None if nonpositive else True,
               {"warning": "non-positive payoffs", "entries": nonpositive} if nonpositive else None)
    return rep


# -- morphisms -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GameMorphism:
    """Subgame-form embedding source -> target.

    `strategy_map[i]` sends (some of) i's strategies in the target to the
    source strategy they realise; `outcome_map` sends (some) target outcomes
    to source outcomes.
    """

    source: Game
    target: Game
    strategy_map: Mapping[str, Mapping[str, str]]
    outcome_map: Mapping[Outcome, Outcome]

    def project(self, profile: Sequence[str]) -> Profile | None:
        pos = {p: k for k, p in enumerate(self.target.players)}
        out = []
        for i in self.source.players:
            s = self.strategy_map.get(i, {}).get(profile[pos[i]])
            if s is None:
                return None
            out.append(s)
        return tuple(out)


def identity_morphism(g: Game) -> GameMorphism:
    return GameMorphism(
        g, g, {p: {s: s for s in g.strategies[p]} for p in g.players}, {o: o for o in g.outcomes}
    )


def initial_morphism(g: Game) -> GameMorphism:
    return GameMorphism(empty_game(), g, {}, {})


def compose_morphisms(f: GameMorphism, g: GameMorphism) -> GameMorphism:
    """g . f for f: A -> B and g: B -> C."""
    smap = {}
    for i in f.source.players:
        gm, fm = g.strategy_map.get(i, {}), f.strategy_map.get(i, {})
        smap[i] = {c: fm[b] for c, b in gm.items() if b in fm}
    omap = {c: f.outcome_map[b] for c, b in g.outcome_map.items() if b in f.outcome_map}
    return GameMorphism(f.source, g.target, smap, omap)


def check_game_morphism(f: GameMorphism) -> Report:
    src, tgt = f.source, f.target
    rep = Report(f"morphism[{src.id}->{tgt.id}]")
    extra = [p for p in src.players if p not in tgt.players]
    rep.record("players_included", not extra, extra or None)
    if extra:
        rep.fail("players_included", "source players missing from target", extra)
        return rep
    for i in src.players:
        m = f.strategy_map.get(i, {})
        unknown = [t for t in m if t not in tgt.strategies[i]]
        bad = [s for s in m.values() if s not in src.strategies[i]]
        unrealised = sorted(set(src.strategies[i]) - set(m.values()))
        ok = not unknown and not bad and not unrealised
        rep.record(f"strategies[{i}]", ok)
        if not ok:
            rep.fail(f"strategies[{i}]", "strategy map is not an embedding",
                     {"unknown_target": unknown, "unknown_source": bad, "unrealised": unrealised})
    if rep.status != "pass":
        return rep
    src_outcomes = set(src.outcomes)
    tgt_outcomes = set(tgt.outcomes)
    stray = [repr(o) for o, v in f.outcome_map.items() if o not in tgt_outcomes or v not in src_outcomes]
    if stray:
        rep.fail("outcome_map", "outcome map leaves the outcome sets", stray[:5])
        return rep
    checked = 0
    for s in tgt.profiles():
        ps = f.project(s)
        o = tgt.rho[s]
        if ps is None or o not in f.outcome_map:
            continue
        checked += 1
        if src.rho[ps] != f.outcome_map[o]:
            rep.record("commutes", False, checked)
            rep.fail("commutes", "rho(project(s')) != outcome_map(rho'(s'))",
                     {"target_profile": list(s), "projected": list(ps)})
            return rep
    rep.record("commutes", True, {"profiles_checked": checked})
    return rep


# -- sums and pushouts -----------------------------------------------------------

class PushoutError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Amalgam:
    """An amalgamated game together with its two legs."""

    game: Game
    left: GameMorphism
    right: GameMorphism
    parts: Mapping[str, Mapping[str, tuple[str | None, str | None]]] = field(default_factory=dict)

    def join(self, left_profile: Sequence[str], right_profile: Sequence[str]) -> Profile:
        """The profile of the amalgam whose parts are the two given profiles."""
        lp = dict(zip(self.left.source.players, left_profile))
        rp = dict(zip(self.right.source.players, right_profile))
        out = []
        for i in self.game.players:
            want = (lp.get(i), rp.get(i))
            lookup = self._reverse[i]
            label = lookup.get(want)
            if label is None:
                raise KeyError(f"no strategy of player {i} with parts {want}")
            out.append(label)
        return tuple(out)

    @property
    def _reverse(self):
        cache = self.__dict__.get("_rev")
        if cache is None:
            cache = {}
            for i, labels in self.parts.items():
                cache[i] = {}
                for label, (a, b) in labels.items():
                    # a side that is absent from the component plays no part
                    key = (a if i in self.left.source.players else None,
                           b if i in self.right.source.players else None)
                    cache[i][key] = label
            object.__setattr__(self, "_rev", cache)
        return cache


def _pair_labels(a: Game, b: Game, pairs: list[tuple[str, str, str]]) -> list[tuple[str, str, str]]:
    labels = [lab for lab, _, _ in pairs]
    if len(set(labels)) == len(labels):
        return pairs
    return [(f"{a.id}:{x}-{b.id}:{y}", x, y) for _, x, y in pairs]


def amalgamate(
    a: Game,
    b: Game,
    combinator: Combinator = Combinator.PRODUCT,
    over: tuple[GameMorphism, GameMorphism] | None = None,
    id: str | None = None,
) -> Amalgam:
    """Coproduct of `a` and `b`, or their pushout when `over` = (f: G->a, g: G->b)."""
    combinator = Combinator(combinator)
    if over is not None:
        f, g = over
        if f.target is not a or g.target is not b:
            raise PushoutError("legs do not land in the games being glued")
        if f.source.id != g.source.id or f.source.players != g.source.players:
            raise PushoutError("legs start from different games")
        shared_base = set(f.source.players)
        base_id = f.source.id
    else:
        shared_base, base_id = set(), None
    if id is None:
        id = f"{a.id}+{b.id}" if over is None else f"{a.id}+[{base_id}]{b.id}"

    if is_empty(a) or is_empty(b):
        keep = b if is_empty(a) else a
        game = replace(keep, id=id)
        parts = {i: {s: ((s, None) if keep is a else (None, s)) for s in keep.strategies[i]} for i in keep.players}
        ident = identity_morphism(keep)
        leg = GameMorphism(keep, game, ident.strategy_map, ident.outcome_map)
        other = a if keep is b else b
        empty_leg = GameMorphism(other, game, {}, {})
        return Amalgam(game, leg if keep is a else empty_leg, leg if keep is b else empty_leg, parts)

    players = tuple(a.players) + tuple(p for p in b.players if p not in a.players)
    strategies: dict[str, tuple[str, ...]] = {}
    parts: dict[str, dict[str, tuple[str | None, str | None]]] = {}
    for i in players:
        in_a, in_b = i in a.players, i in b.players
        if in_a and not in_b:
            entries = [(s, s, None) for s in a.strategies[i]]
        elif in_b and not in_a:
            entries = [(s, None, s) for s in b.strategies[i]]
        elif i not in shared_base:
            entries = _pair_labels(a, b, [(f"{x}-{y}", x, y) for x in a.strategies[i] for y in b.strategies[i]])
        else:
            fm, gm = over[0].strategy_map.get(i, {}), over[1].strategy_map.get(i, {})
            pairs = []
            for x in a.strategies[i]:
                for y in b.strategies[i]:
                    fx, gy = fm.get(x), gm.get(y)
                    if fx is not None and gy is not None and fx != gy:
                        continue
                    if x == y:
                        label = x
                    elif fx is not None and fx == gy == y:
                        label = x
                    elif gy is not None and gy == fx == x:
                        label = y
                    else:
                        label = f"{x}-{y}"
                    pairs.append((label, x, y))
            entries = _pair_labels(a, b, pairs)
        strategies[i] = tuple(lab for lab, _, _ in entries)
        parts[i] = {lab: (x, y) for lab, x, y in entries}

    rho, pay = {}, {p: {} for p in players}
    for s in itertools.product(*(strategies[p] for p in players)):
        choice = dict(zip(players, s))
        sa = tuple(parts[i][choice[i]][0] for i in a.players)
        sb = tuple(parts[i][choice[i]][1] for i in b.players)
        oa, ob = a.rho[sa], b.rho[sb]
        glued = over is not None and oa == ob
        o = oa if glued else (oa, ob)
        rho[s] = o
        for i in players:
            if i in a.players and i in b.players:
                pa, pb = a.payoffs[i][oa], b.payoffs[i][ob]
                pay[i][o] = pa if glued else combinator(pa, pb)
            elif i in a.players:
                pay[i][o] = a.payoffs[i][oa]
            else:
                pay[i][o] = b.payoffs[i][ob]
    game = Game(id, players, strategies, rho, pay)

    def leg(src: Game, side: int) -> GameMorphism:
        smap = {i: {lab: xy[side] for lab, xy in parts[i].items() if xy[side] is not None} for i in src.players}
        omap = {}
        for s, o in rho.items():
            choice = dict(zip(players, s))
            ps = tuple(parts[i][choice[i]][side] for i in src.players)
            omap[o] = src.rho[ps]
        return GameMorphism(src, game, smap, omap)

    return Amalgam(game, leg(a, 0), leg(b, 1), parts)


def coproduct(g: Game, h: Game, combinator: Combinator = Combinator.PRODUCT) -> Game:
    return amalgamate(g, h, combinator).game


def pushout(f: GameMorphism, g: GameMorphism, combinator: Combinator = Combinator.PRODUCT) -> Game:
    return pushout_amalgam(f, g, combinator).game


def pushout_amalgam(f: GameMorphism, g: GameMorphism, combinator: Combinator = Combinator.PRODUCT) -> Amalgam:
    for m in (f, g):
        rep = check_game_morphism(m)
        if not rep:
            raise PushoutError(f"{rep.name} is not an inclusion of game forms: {rep.witnesses[0].reason}")
    return amalgamate(f.target, g.target, combinator, over=(f, g))


def is_isomorphic(g: Game, h: Game) -> bool:
    """Isomorphism of game forms: same players, equinumerous strategy sets."""
    if set(g.players) != set(h.players):
        return False
    if any(len(g.strategies[p]) != len(h.strategies[p]) for p in g.players):
        return False
    return len(set(g.rho.values())) == len(set(h.rho.values()))


def check_wiring_minimality(parts: Sequence[Game], whole: Game,
                            combinator: Combinator = Combinator.PRODUCT) -> bool:
    total = reduce(lambda x, y: coproduct(x, y, combinator), parts, empty_game())
    return is_isomorphic(total, whole)


# -- cospans ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Cospan:
    left: Game
    right: Game
    apex: Game
    left_leg: GameMorphism
    right_leg: GameMorphism

    def check(self) -> Report:
        rep = Report(f"cospan[{self.left.id}->{self.apex.id}<-{self.right.id}]")
        if self.left_leg.source is not self.left or self.right_leg.source is not self.right:
            rep.fail("legs", "legs do not start at the cospan ends")
        if self.left_leg.target is not self.apex or self.right_leg.target is not self.apex:
            rep.fail("legs", "legs do not end at the apex")
        rep.merge(check_game_morphism(self.left_leg), "left")
        rep.merge(check_game_morphism(self.right_leg), "right")
        return rep


def sum_cospan(g: Game, h: Game, combinator: Combinator = Combinator.PRODUCT) -> Cospan:
    am = amalgamate(g, h, combinator)
    return Cospan(g, h, am.game, am.left, am.right)


def identity_cospan(g: Game) -> Cospan:
    m = identity_morphism(g)
    return Cospan(g, g, g, m, m)


def compose_cospans(a: Cospan, b: Cospan, combinator: Combinator = Combinator.PRODUCT) -> Cospan:
    if a.right is not b.left:
        raise ValueError(f"cannot compose: middle games differ ({a.right.id} vs {b.left.id})")
    am = pushout_amalgam(a.right_leg, b.left_leg, combinator)
    return Cospan(
        a.left, b.right, am.game,
        compose_morphisms(a.left_leg, am.left),
        compose_morphisms(b.right_leg, am.right),
    )


# -- boxes -------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxState:
    """Internal state of a game box.

    `instantiation` names, per player, the combinator that turns component
    payoffs into the player's payoff ("own" reads the game's payoffs).
    """

    node: str
    choice: Profile
    instantiation: tuple[tuple[str, str], ...] = ()
    parts: tuple["BoxState", ...] = ()

    def tag(self, player: str) -> str:
        return dict(self.instantiation).get(player, "own")


@dataclass(frozen=True, eq=False)
class GameBox:
    game: Game
    state: BoxState
    legs: tuple[GameMorphism, ...] = ()
    paths: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    trace: tuple = ()

    def __post_init__(self):
        if self.game.players and tuple(self.state.choice) not in self.game.rho:
            raise ValueError(f"state {self.state.node!r} chooses a profile outside {self.game.id}")
        for leg in self.legs:
            if leg.target is not self.game:
                raise ValueError("box legs must land in the box's game")
        for i in self.game.players:
            tag = self.state.tag(i)
            if tag != "own" and not any(i in leg.source.players for leg in self.legs):
                raise ValueError(f"state instantiates player {i} via {tag} but the box has no components")

    def payoff_vectors(self) -> dict[str, dict[Outcome, float]]:
        out = {}
        for i in self.game.players:
            tag = self.state.tag(i)
            if tag == "own":
                out[i] = dict(self.game.payoffs[i])
                continue
            comb = Combinator(tag)
            legs = [leg for leg in self.legs if i in leg.source.players]
            out[i] = {
                o: comb.reduce([leg.source.payoffs[i][leg.outcome_map[o]] for leg in legs])
                for o in self.game.outcomes
            }
        return out

    @property
    def choice(self) -> Profile:
        return tuple(self.state.choice)


def box_for(game: Game, choice: Sequence[str] | None = None, node: str = "s0") -> GameBox:
    """Box with the game's own payoffs and (by default) its first profile chosen."""
    if choice is None:
        choice = next(iter(game.profiles()), ())
    return GameBox(game, BoxState(node, tuple(choice)), paths={p: () for p in game.players})


def amalgam_box(am: Amalgam, left: BoxState, right: BoxState, combinator: Combinator, node: str | None = None) -> GameBox:
    """Box of a sum game whose state pairs the component states."""
    state = paired_state(am, left, right, combinator, node)
    return GameBox(am.game, state, (am.left, am.right), paths={p: () for p in am.game.players})


def paired_state(am: Amalgam, left: BoxState, right: BoxState, combinator: Combinator, node: str | None = None) -> BoxState:
    combinator = Combinator(combinator)
    shared = [i for i in am.game.players if i in am.left.source.players and i in am.right.source.players]
    choice = am.join(left.choice, right.choice) if am.game.players else ()
    return BoxState(
        node or f"({left.node},{right.node})",
        choice,
        tuple((i, combinator.value) for i in shared),
        (left, right),
    )


def box_step(box: GameBox, inputs: Sequence[Outcome]):
    """One tick: payoff vectors (phi1), chosen profile (phi2), box with paths extended."""
    if not box.game.players:
        return {}, (), box
    outcomes = set(box.game.outcomes)
    for o in inputs:
        if o not in outcomes:
            raise ValueError(f"input {o!r} is not an outcome of {box.game.id}")
    payoffs = box.payoff_vectors()
    paths = {p: tuple(box.paths.get(p, ())) + (box.state.node,) for p in box.game.players}
    new = replace(box, paths=paths, trace=box.trace + ((box.state.node, tuple(inputs)),))
    return payoffs, box.choice, new


# -- file format ---------------------------------------------------------------------

def game_from_dict(d: Mapping) -> Game:
    return Game.from_table(
        str(d["id"]),
        [str(p) for p in d["players"]],
        {str(p): list(v) for p, v in d["strategies"].items()},
        {str(p): v for p, v in d["payoffs"].items()},
        d.get("outcomes"),
    )


def game_to_dict(g: Game) -> dict:
    return {
        "id": g.id,
        "players": list(g.players),
        "strategies": {p: list(g.strategies[p]) for p in g.players},
        "payoffs": {p: {profile_key(s): g.payoff(p, s) for s in g.profiles()} for p in g.players},
        "outcomes": {profile_key(s): _outcome_text(o) for s, o in g.rho.items()},
    }


def _outcome_text(o: Outcome) -> str:
    if isinstance(o, tuple):
        return "(" + ",".join(_outcome_text(x) for x in o) + ")"
    return str(o)


def load_game(path) -> Game:
    return game_from_dict(json.loads(Path(path).read_text()))
