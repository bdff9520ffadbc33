"""Problems and games as interfaces, and mechanism design over a library of game forms.

A solved local problem becomes a one-position polynomial whose directions are
its solution points; a game becomes one whose directions are its equilibria.
Only objects are embedded; morphisms of problems or games are not carried over.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .equilibria import Concept, equilibria
from .games import Game, Outcome, game_from_dict, profile_key
from .poly import Coalgebra, HomSpace, Poly, PolyMorphism, coalg_run, constant_poly, poly_product
from .problems import LocalProblem
from .report import Report


def embed_problem(p: LocalProblem) -> Poly:
    pts = p.require_solved()
    dirs = tuple(f"x{k}" for k in range(len(pts)))
    payload = {(p.id, d): tuple(float(c) for c in x) for d, x in zip(dirs, pts)}
    return Poly(p.id, {p.id: dirs}, payload)


def embed_game(g: Game, concept: Concept = Concept.PURE_NASH) -> Poly:
    eq = equilibria(g, concept)
    dirs = tuple(profile_key(s) for s in eq.sorted())
    return Poly(g.id, {g.id: dirs}, {(g.id, profile_key(s)): s for s in eq.sorted()})


# -- mechanism design ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MechanismLibrary:
    environments: tuple[str, ...]
    mechanisms: tuple[Game, ...]  # game forms; their own payoffs are ignored
    env_payoffs: Mapping[tuple[str, str], Mapping[str, Mapping[Outcome, float]]]
    targets: Mapping[str, Outcome]

    def mechanism(self, mid: str) -> Game:
        for m in self.mechanisms:
            if m.id == mid:
                return m
        raise KeyError(mid)

    def dressed(self, mid: str, env: str) -> Game:
        """The mechanism with the payoffs it induces in an environment."""
        m = self.mechanism(mid)
        return m.with_payoffs(self.env_payoffs[mid, env], id=f"{mid}@{env}")


def validate_library(lib: MechanismLibrary) -> Report:
    rep = Report("mechanism-library")
    ids = [m.id for m in lib.mechanisms]
    if len(set(ids)) != len(ids):
        rep.fail("ids", "duplicate mechanism ids", ids)
    for e in lib.environments:
        if e not in lib.targets:
            rep.fail("targets", "environment has no target", e)
    for m in lib.mechanisms:
        outcomes = set(m.rho.values())
        if len(outcomes) != len(m.rho):
            rep.fail("game_form", "profiles to outcomes is not a bijection", m.id)
        for e in lib.environments:
            table = lib.env_payoffs.get((m.id, e))
            if table is None:
                rep.fail("payoffs", "no payoffs for mechanism in environment", [m.id, e])
                continue
            for i in m.players:
                missing = outcomes - set(table.get(i, {}))
                if missing:
                    rep.fail("payoffs", "payoffs do not cover every outcome",
                             {"mechanism": m.id, "environment": e, "player": i, "missing": sorted(map(str, missing))})
    rep.record("valid", rep.status == "pass")
    return rep


def feasible_mechanisms(lib: MechanismLibrary, env: str, concept: Concept = Concept.PURE_NASH) -> tuple[str, ...]:
    """Mechanisms with an equilibrium whose outcome is the environment's target."""
    target = lib.targets[env]
    out = []
    for m in lib.mechanisms:
        g = lib.dressed(m.id, env)
        if any(g.rho[s] == target for s in equilibria(g, concept).profiles):
            out.append(m.id)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class Design:
    designer: Poly  # environments -> feasible mechanisms
    nature: Poly  # constant: environments, no directions
    library: Poly  # mechanisms -> their dressings, one per environment
    coalgebra: Coalgebra | None
    report: Report

    def emitted(self, n: int | None = None) -> list[tuple[str, str]]:
        """(environment, mechanism) pairs along a run visiting every covered environment once."""
        if self.coalgebra is None:
            return []
        c = self.coalgebra
        trace = coalg_run(c, c.states[0], len(c.states) if n is None else n)
        return [(s, c.hom.morphism(phi).fwd[i]) for s, (phi, i, _) in trace.entries]


def mech_design(lib: MechanismLibrary, concept: Concept = Concept.PURE_NASH) -> Design:
    rep = validate_library(lib)
    if not rep:
        return Design(constant_poly("D", ()), constant_poly("E", ()), constant_poly("M", ()), None, rep)
    feasible = {e: feasible_mechanisms(lib, e, concept) for e in lib.environments}
    designer = Poly("D", feasible, {(e, m): lib.dressed(m, e) for e in feasible for m in feasible[e]})
    nature = constant_poly("E", lib.environments)
    library = Poly("M", {m.id: lib.environments for m in lib.mechanisms},
                   {(m.id, e): lib.dressed(m.id, e) for m in lib.mechanisms for e in lib.environments})
    rep.record("directions", None, {e: list(v) for e, v in feasible.items()})
    covered = [e for e in lib.environments if feasible[e]]
    uncovered = [e for e in lib.environments if not feasible[e]]
    if uncovered:
        rep.record("no_feasible_mechanism", None, uncovered)
    coalgebra = _designer_coalgebra(designer, nature, library, covered) if covered else None
    design = Design(designer, nature, library, coalgebra, rep)
    emitted = design.emitted()
    rep.record("emitted", None, emitted)
    ok = [e for e, _ in emitted] == covered and all(m == feasible[e][0] for e, m in emitted)
    rep.record("coalgebra_matches_directions", ok)
    if not ok:
        rep.fail("coalgebra_matches_directions", "run does not emit the lowest feasible mechanism per environment",
                 {"emitted": emitted, "expected": {e: feasible[e][:1] for e in covered}})
    return design


def _designer_coalgebra(designer: Poly, nature: Poly, library: Poly, covered: Sequence[str]) -> Coalgebra:
    """States are the covered environments, visited in order.

    The single morphism used sends every (environment, nature) position to the
    environment's first feasible mechanism and pulls each of its dressings back
    to that mechanism as a direction of the designer.
    """
    sub = Poly(designer.id, {e: designer[e] for e in covered})
    p = poly_product(sub, nature)
    choice = {e: designer[e][0] for e in covered}
    fwd = {(e, n): choice[e] for e, n in p.positions}
    bwd = {(e, n): {d: (0, choice[e]) for d in library[choice[e]]} for e, n in p.positions}
    phi_map = PolyMorphism(p, library, fwd, bwd)
    hom = HomSpace(p, library)
    phi = hom.morphism_id(phi_map)
    rho = {e: (phi, (e, e), e) for e in covered}
    mu = {rho[e]: covered[(k + 1) % len(covered)] for k, e in enumerate(covered)}
    return Coalgebra(hom, tuple(covered), rho, mu)


def library_from_dict(d: Mapping, base: Path | None = None) -> MechanismLibrary:
    """{"environments": [...], "mechanisms": [game or path, ...],
    "payoffs": {mech: {env: {player: {outcome: value}}}}, "targets": {env: outcome}}"""
    games = []
    for entry in d["mechanisms"]:
        if isinstance(entry, str):
            entry = json.loads(((base or Path(".")) / entry).read_text())
        if "payoffs" not in entry:
            entry = {**entry, "payoffs": _flat_payoffs(entry)}
        games.append(game_from_dict(entry))
    env_payoffs = {}
    for mid, per_env in d["payoffs"].items():
        for e, table in per_env.items():
            env_payoffs[mid, e] = {str(i): {o: float(v) for o, v in row.items()} for i, row in table.items()}
    return MechanismLibrary(tuple(d["environments"]), tuple(games), env_payoffs, dict(d["targets"]))


def _flat_payoffs(form: Mapping) -> dict:
    """Placeholder payoffs for a bare game form."""
    keys = [profile_key(s) for s in itertools.product(*(form["strategies"][p] for p in form["players"]))]
    return {p: dict.fromkeys(keys, 1.0) for p in form["players"]}


def load_library(path) -> MechanismLibrary:
    path = Path(path)
    return library_from_dict(json.loads(path.read_text()), path.parent)
