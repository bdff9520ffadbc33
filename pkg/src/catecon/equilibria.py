"""Equilibrium sets of games and their behaviour under game sums."""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Hashable, Iterable, Sequence

import numpy as np

from .games import (
    Amalgam,
    BoxState,
    Combinator,
    Game,
    GameBox,
    Profile,
    amalgam_box,
    amalgamate,
    box_for,
    is_empty,
    paired_state,
)
from .report import Report

PayoffCombinator = Combinator
EPS = 1e-12


class Concept(str, Enum):
    PURE_NASH = "pure_nash"
    WEAK_DOMINANCE = "weak_dominance"


@dataclass(frozen=True, eq=False)
class EquilibriumSet:
    game: Game
    concept: Concept
    profiles: frozenset[Profile]
    state: Hashable | None = None

    @property
    def game_id(self) -> str:
        return self.game.id

    def __len__(self) -> int:
        return len(self.profiles)

    def __contains__(self, profile) -> bool:
        return tuple(profile) in self.profiles

    def sorted(self) -> list[Profile]:
        return sorted(self.profiles, key=self.game.index_of)

    def formatted(self) -> list[str]:
        return [self.game.format_profile(s) for s in self.sorted()]

    def same_as(self, other: "EquilibriumSet") -> bool:
        return (
            self.concept == other.concept
            and set(self.game.players) == set(other.game.players)
            and self._keyed() == other._keyed()
        )

    def _keyed(self) -> frozenset:
        return frozenset(frozenset(zip(self.game.players, s)) for s in self.profiles)


def _arrays(g: Game, payoffs=None) -> list[np.ndarray]:
    return [g.payoff_array(p, payoffs) for p in g.players]


def _profiles_from_mask(g: Game, mask: np.ndarray) -> frozenset[Profile]:
    return frozenset(
        tuple(g.strategies[p][k] for p, k in zip(g.players, idx)) for idx in np.argwhere(mask)
    )


def pure_nash(g: Game, payoffs=None, eps: float = EPS) -> EquilibriumSet:
    """Profiles with no strictly profitable unilateral deviation (ties admitted)."""
    if is_empty(g) or 0 in g.shape:
        return EquilibriumSet(g, Concept.PURE_NASH, frozenset())
    mask = np.ones(g.shape, dtype=bool)
    for axis, arr in enumerate(_arrays(g, payoffs)):
        mask &= arr >= arr.max(axis=axis, keepdims=True) - eps
    return EquilibriumSet(g, Concept.PURE_NASH, _profiles_from_mask(g, mask))


def dominant_equilibria(g: Game, payoffs=None, eps: float = EPS) -> EquilibriumSet:
    """Profiles of weakly dominant strategies."""
    if is_empty(g) or 0 in g.shape:
        return EquilibriumSet(g, Concept.WEAK_DOMINANCE, frozenset())
    choices = []
    for axis, arr in enumerate(_arrays(g, payoffs)):
        best = arr.max(axis=axis)
        dominant = [k for k in range(arr.shape[axis]) if np.all(arr.take(k, axis=axis) >= best - eps)]
        choices.append(dominant)
    mask = np.zeros(g.shape, dtype=bool)
    if all(choices):
        mask[np.ix_(*choices)] = True
    return EquilibriumSet(g, Concept.WEAK_DOMINANCE, _profiles_from_mask(g, mask))


SOLVERS = {Concept.PURE_NASH: pure_nash, Concept.WEAK_DOMINANCE: dominant_equilibria}


def equilibria(g: Game, concept: Concept = Concept.PURE_NASH, payoffs=None) -> EquilibriumSet:
    return SOLVERS[Concept(concept)](g, payoffs)


def combine_equilibria(
    eg: EquilibriumSet,
    eh: EquilibriumSet,
    c: Combinator = Combinator.PRODUCT,
    amalgam: Amalgam | None = None,
) -> EquilibriumSet:
    """Pair every equilibrium of one game with every equilibrium of the other.

    Shared players play the pair of their two strategies; the result is
    tagged with the sum game.  The empty game is a unit on either side.
    """
    if eg.concept != eh.concept:
        raise ValueError("cannot combine equilibria of different concepts")
    am = amalgam or amalgamate(eg.game, eh.game, c)
    if is_empty(eg.game) or is_empty(eh.game):
        keep = eh if is_empty(eg.game) else eg
        return EquilibriumSet(am.game, keep.concept, keep.profiles)
    combined = frozenset(am.join(s, t) for s in eg.profiles for t in eh.profiles)
    return EquilibriumSet(am.game, eg.concept, combined)


def _positive(g: Game) -> bool:
    return all(v > 0 for table in g.payoffs.values() for v in table.values())


def check_sum_equilibria(
    g: Game, h: Game, c: Combinator = Combinator.PRODUCT, concept: Concept = Concept.PURE_NASH
) -> Report:
    """Equilibria of the sum game versus the pairing of component equilibria."""
    c = Combinator(c)
    rep = Report(f"sum-equilibria[{g.id},{h.id},{c.value}]")
    in_scope = c is not Combinator.PRODUCT or (_positive(g) and _positive(h))
    rep.record("positivity_precondition", True if in_scope else None,
               None if in_scope else "outside positivity precondition")
    am = amalgamate(g, h, c)
    direct = equilibria(am.game, concept)
    paired = combine_equilibria(equilibria(g, concept), equilibria(h, concept), c, am)
    ok = direct.same_as(paired)
    rep.record("eq_of_sum", None, direct.formatted())
    rep.record("paired_eq", None, paired.formatted())
    rep.record("equal", ok)
    if not ok:
        only_direct = [am.game.format_profile(s) for s in direct.profiles - paired.profiles]
        only_paired = [am.game.format_profile(s) for s in paired.profiles - direct.profiles]
        rep.fail("equal", "equilibrium sets differ", {"only_in_sum": only_direct, "only_paired": only_paired})
    return rep


# -- state-extended variant -----------------------------------------------------

def stateful_eq(g: Game, box: GameBox, concept: Concept = Concept.PURE_NASH) -> EquilibriumSet:
    """Equilibria under the payoffs the box state instantiates, tagged with that state."""
    if box.game is not g and box.game.id != g.id:
        raise ValueError(f"box belongs to {box.game.id}, not {g.id}")
    payoffs = box.payoff_vectors()
    for i in g.players:
        if set(payoffs.get(i, {})) != set(g.rho.values()):
            raise ValueError(f"state {box.state.node!r} does not instantiate every payoff of player {i}")
    base = equilibria(g, concept, payoffs)
    return replace(base, state=box.state)


def tensor_stateful(
    a: EquilibriumSet, b: EquilibriumSet, c: Combinator, amalgam: Amalgam | None = None
) -> EquilibriumSet:
    """(s, sigma) x (s', sigma') -> (s-s', paired state)."""
    am = amalgam or amalgamate(a.game, b.game, c)
    combined = combine_equilibria(
        replace(a, state=None), replace(b, state=None), c, am
    )
    return replace(combined, state=paired_state(am, a.state, b.state, c))


# -- law suites -------------------------------------------------------------------

def random_game_pair(
    rng: np.random.Generator,
    max_players: int = 3,
    max_strategies: int = 3,
    low: float = 0.1,
    high: float = 10.0,
    tag: str = "",
) -> tuple[Game, Game]:
    """Two random games sharing exactly one player."""
    n_g = int(rng.integers(1, max_players + 1))
    n_h = int(rng.integers(1, max_players + 1))
    g_players = [f"g{k}" for k in range(n_g)]
    shared = g_players[int(rng.integers(n_g))]
    h_players = [shared] + [f"h{k}" for k in range(n_h - 1)]
    rng.shuffle(h_players)
    return (
        _random_game(rng, f"G{tag}", g_players, "a", max_strategies, low, high),
        _random_game(rng, f"H{tag}", h_players, "b", max_strategies, low, high),
    )


def _random_game(rng, id, players, prefix, max_strategies, low, high) -> Game:
    strategies = {p: [f"{prefix}{k}" for k in range(int(rng.integers(1, max_strategies + 1)))] for p in players}
    shape = [len(strategies[p]) for p in players]
    payoffs = {}
    for p in players:
        vals = rng.uniform(low, high, size=shape)
        payoffs[p] = {
            "|".join(strategies[q][k] for q, k in zip(players, idx)): float(vals[idx])
            for idx in np.ndindex(*shape)
        }
    return Game.from_table(id, players, strategies, payoffs)


def random_pairs(seed: int, trials: int, **kw) -> list[tuple[Game, Game]]:
    rng = np.random.default_rng(seed)
    return [random_game_pair(rng, tag=str(t), **kw) for t in range(trials)]


def check_stateful_pair(g: Game, h: Game, c: Combinator) -> Report:
    """State-extended sum: equilibria of the paired-state box equal the tensor of component results."""
    c = Combinator(c)
    rep = Report(f"stateful[{g.id},{h.id},{c.value}]")
    am = amalgamate(g, h, c)
    bg, bh = box_for(g, node=f"{g.id}.s0"), box_for(h, node=f"{h.id}.s0")
    eg, eh = stateful_eq(g, bg), stateful_eq(h, bh)
    box = amalgam_box(am, bg.state, bh.state, c)
    direct = stateful_eq(am.game, box)
    tensored = tensor_stateful(eg, eh, c, am)
    ok_profiles = direct.same_as(tensored)
    ok_state = direct.state == tensored.state
    rep.record("profiles", ok_profiles, direct.formatted())
    rep.record("state", ok_state, direct.state.node if direct.state else None)
    # profile variant agreement
    plain = pure_nash(am.game)
    ok_variant = plain.same_as(direct)
    rep.record("agrees_with_profile_variant", ok_variant)
    if not ok_profiles:
        rep.fail("profiles", "stateful equilibria of the sum differ from the tensor",
                 {"sum": direct.formatted(), "tensor": tensored.formatted()})
    if not ok_state:
        rep.fail("state", "state of the sum is not the paired state", [repr(direct.state), repr(tensored.state)])
    if not ok_variant:
        rep.fail("agrees_with_profile_variant", "state-extended and profile equilibria differ",
                 {"stateful": direct.formatted(), "profile": plain.formatted()})
    return rep


def check_lax_monoidal(
    sample: Iterable[tuple[Game, Game]],
    combinators: Sequence[Combinator] = (Combinator.PRODUCT, Combinator.SUM),
) -> Report:
    """Unit law, the sum/pairing isomorphism per pair, and the state-extended variant."""
    from .games import empty_game

    rep = Report("lax-monoidal")
    unit = pure_nash(empty_game())
    rep.record("unit", len(unit) == 0, unit.formatted())
    if len(unit):
        rep.fail("unit", "Eq of the empty game is not empty", unit.formatted())
    counts = {"checked": 0, "outside_precondition": 0}
    excluded = []
    for g, h in sample:
        for c in map(Combinator, combinators):
            r = check_sum_equilibria(g, h, c)
            if r.sections["positivity_precondition"]["passed"] is not True:
                counts["outside_precondition"] += 1
                excluded.append({"pair": [g.id, h.id], "combinator": c.value,
                                 "status": "outside positivity precondition",
                                 "observed": r.status})
                continue
            counts["checked"] += 1
            if not r:
                rep.merge(r)
            s = check_stateful_pair(g, h, c)
            if not s:
                rep.merge(s)
    rep.record("pairs", rep.status == "pass", counts)
    if excluded:
        rep.record("excluded", None, excluded)
    return rep
