"""catecon command line: one verb per construction, reports on stdout, exit 0/1/2."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import equilibria as eqm
from . import games, org, poly, principal_agent as pa, problems
from .report import Report

INPUT_ERRORS = (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, ArithmeticError)


# -- verbs ---------------------------------------------------------------------

def cmd_solve_problem(args) -> Report:
    probs, _, _ = problems.load_bundle(args.file)
    rep = Report("solve-problem")
    for p in probs:
        s = problems.solve_problem(p, args.tol_value)
        rep.record(p.id, True, {"value": s.value, "solutions": s.solutions.tolist()})
    return rep


def cmd_sheaf_check(args) -> Report:
    probs, universe, cover = problems.load_bundle(args.file)
    tol = args.tol_point
    solved = {p.id: problems.solve_problem(p, args.tol_value) for p in probs}
    rep = Report("sheaf-check")
    for p in solved.values():
        rep.record(f"solve[{p.id}]", True, {"value": p.value, "solutions": p.solutions.tolist()})
    if universe is None:
        universe = problems.Universe.from_solutions(list(solved.values()), tol)
    table = problems.section_table(list(solved.values()), universe, tol)
    rep.record("section_table", None, table.render())
    if cover:
        target = solved[cover["target"]]
        family = [solved[k] for k in cover["family"]]
        for k in family:
            m = problems.check_morphism(k, target)
            rep.record(f"morphism[{k.id}->{target.id}]", m.verified, m.failure)
            if not m:
                rep.fail(f"morphism[{k.id}->{target.id}]", f"{m.failure} fails", m.witness)
        for a in range(len(family)):
            for b in range(a + 1, len(family)):
                rep.merge(problems.check_compatibility(family[a], family[b], universe, tol))
        rep.merge(problems.check_glue(family, target, universe, tol))
        cov = problems.check_cover(family, target)
        if cover.get("require_cover", True):
            rep.merge(cov)
        else:
            rep.record("cover", None, {"status": cov.status, "witnesses": [w.data for w in cov.witnesses]})
    return rep


def cmd_game_eq(args) -> Report:
    g = games.load_game(args.file)
    rep = Report("game-eq")
    rep.merge(games.validate_game(g))
    eq = eqm.equilibria(g, args.concept)
    rep.record("equilibria", None, eq.formatted())
    return rep


def cmd_game_compose(args) -> Report:
    a, b = games.load_game(args.left), games.load_game(args.right)
    c = games.Combinator(args.combinator)
    am = games.amalgamate(a, b, c)
    rep = Report("game-compose")
    rep.record("game", None, games.game_to_dict(am.game))
    rep.merge(games.check_game_morphism(am.left), "left")
    rep.merge(games.check_game_morphism(am.right), "right")
    rep.merge(eqm.check_sum_equilibria(a, b, c), "equilibria")
    return rep


def cmd_law_check(args) -> Report:
    if args.prop == "poly":
        rng = np.random.default_rng(args.seed)
        chains = [poly.random_chain(rng) for _ in range(args.trials)]
        return poly.check_poly_laws(chains)
    pairs = eqm.random_pairs(args.seed, args.trials)
    if args.prop == "lax":
        return eqm.check_lax_monoidal(pairs)
    rep = Report(f"sum-equilibria[seed={args.seed},trials={args.trials}]")
    for g, h in pairs:
        for c in games.Combinator:
            r = eqm.check_sum_equilibria(g, h, c)
            if not r:
                rep.merge(r)
    rep.record("pairs", rep.passed, {"trials": args.trials, "combinators": [c.value for c in games.Combinator]})
    return rep


def cmd_poly_hom(args) -> Report:
    p, q = poly.load_poly(args.p), poly.load_poly(args.q)
    hom = poly.internal_hom(p, q, args.bound)
    expected = poly.morphism_count(p, q)
    rep = Report("poly-hom")
    rep.record("positions", hom.n_positions() == expected, {"positions": hom.n_positions(), "closed_form": expected})
    if hom.n_positions() != expected:
        rep.fail("positions", "enumeration disagrees with the closed form", [hom.n_positions(), expected])
    rep.record("hom", None, hom.to_dict())
    return rep


def cmd_coalg_run(args) -> Report:
    c, raw = poly.load_coalgebra(args.file)
    start = args.start or raw.get("start") or c.states[0]
    trace = poly.coalg_run(c, start, args.steps)
    rep = Report("coalg-run")
    rep.record("trace", None, [{"state": s, "output": list(o)} for s, o in trace.entries])
    rep.record("cycle", None, None if trace.cycle_step is None else {"step": trace.cycle_step, "state": trace.cycle_state})
    return rep


def cmd_pa_solve(args) -> Report:
    problem = pa.load_pa(args.file)
    rep = Report("pa-solve")
    inv = pa.check_pa(problem)
    rep.merge(inv)
    if not inv:
        return rep
    sol = pa.pa_solve(problem)
    rep.record("optimum", None, {"x": sol.x, "y": sol.y, "u_agent": sol.u_agent, "transfer": sol.transfer,
                                 "value": sol.value})
    rep.merge(pa.check_round_trip(problem, problem.x_grid, problem.y_grid, problem.u_grid[:: max(1, len(problem.u_grid) // 10)]))
    return rep


def cmd_mech_design(args) -> Report:
    design = org.mech_design(org.load_library(args.file), args.concept)
    return design.report


VERBS = {
    "solve-problem": cmd_solve_problem,
    "sheaf-check": cmd_sheaf_check,
    "game-eq": cmd_game_eq,
    "game-compose": cmd_game_compose,
    "law-check": cmd_law_check,
    "poly-hom": cmd_poly_hom,
    "coalg-run": cmd_coalg_run,
    "pa-solve": cmd_pa_solve,
    "mech-design": cmd_mech_design,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-point", type=float, default=problems.POINT_TOL,
                        help="distance at which two points count as equal")
    common.add_argument("--tol-value", type=float, default=problems.VALUE_TIE,
                        help="utility gap within which maximisers tie")
    common.add_argument("--format", choices=("text", "structured"), default="text")

    parser = argparse.ArgumentParser(prog="catecon", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    def verb(name, help):
        return sub.add_parser(name, parents=[common], help=help)

    verb("solve-problem", "solve one local problem or every problem of a bundle").add_argument("file")
    verb("sheaf-check", "sections, compatibility, gluing and cover checks on a bundle").add_argument("file")
    v = verb("game-eq", "equilibria of a game")
    v.add_argument("file")
    v.add_argument("--concept", choices=[c.value for c in eqm.Concept], default=eqm.Concept.PURE_NASH.value)
    v = verb("game-compose", "sum of two games with leg and equilibrium checks")
    v.add_argument("left")
    v.add_argument("right")
    v.add_argument("--combinator", choices=[c.value for c in games.Combinator], default="product")
    v = verb("law-check", "seeded property suites")
    v.add_argument("--prop", choices=("3", "lax", "poly"), required=True,
                   help="3: sum equilibria vs paired equilibria; lax: unit and state-extended suite; poly: polynomial laws")
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--trials", type=int, default=200)
    v = verb("poly-hom", "internal hom [p,q] of two polynomial files")
    v.add_argument("p")
    v.add_argument("q")
    v.add_argument("--bound", type=int, default=poly.HOM_BOUND)
    v = verb("coalg-run", "run a coalgebra file")
    v.add_argument("file")
    v.add_argument("--steps", type=int, default=5)
    v.add_argument("--start")
    verb("pa-solve", "discretised Principal-Agent problem").add_argument("file")
    v = verb("mech-design", "feasible mechanisms per environment and the designer's run")
    v.add_argument("file")
    v.add_argument("--concept", choices=[c.value for c in eqm.Concept], default=eqm.Concept.PURE_NASH.value)
    return parser


def dispatch(argv=None) -> tuple[Report, argparse.Namespace]:
    args = build_parser().parse_args(argv)
    try:
        return VERBS[args.verb](args), args
    except INPUT_ERRORS as exc:
        rep = Report(args.verb)
        rep.error("input", f"{type(exc).__name__}: {exc}")
        return rep, args


def main(argv=None) -> int:
    rep, args = dispatch(argv)
    out = rep.to_json() if args.format == "structured" else rep.to_text()
    print(out)
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
