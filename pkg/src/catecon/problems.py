"""Local optimisation problems, the solution presheaf and its gluing checks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .euclid import (
    FeasibleSet,
    Param,
    PointSet,
    VALUE_TIE,
    Subspace,
    as_vector,
    complement,
    compile_on,
    distances_to_set,
    grid_maximize,
    nearest_points,
    orthonormalize,
    project,
)
from .expr import Expr, parse_expr
from .report import Report

POINT_TOL = 1e-3
CONTAIN_TOL = 1e-6
UTILITY_TOL = 1e-8
SAMPLES = 1000


class UnsolvedProblem(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LocalProblem:
    id: str
    subspace: Subspace
    feasible: FeasibleSet
    utility: Expr
    solutions: PointSet | None = None
    value: float | None = None

    def __post_init__(self):
        if isinstance(self.utility, str):
            object.__setattr__(self, "utility", parse_expr(self.utility))
        if self.subspace.ambient_dim != self.feasible.ambient_dim:
            raise ValueError(f"{self.id}: subspace and feasible set live in different spaces")

    @property
    def ambient_dim(self) -> int:
        return self.subspace.ambient_dim

    @property
    def solved(self) -> bool:
        return self.solutions is not None

    def require_solved(self) -> PointSet:
        if self.solutions is None:
            raise UnsolvedProblem(f"problem {self.id!r} has not been solved")
        return self.solutions

    def feasible_outside_subspace(self, count: int = SAMPLES, tol: float = 1e-8) -> np.ndarray | None:
        """First feasible sample farther than `tol` from the subspace, if any."""
        pts = self.feasible.samples(count)
        resid = np.linalg.norm(pts - pts @ self.subspace.basis.T @ self.subspace.basis, axis=1)
        bad = np.flatnonzero(resid > tol)
        return pts[bad[0]] if len(bad) else None


@dataclass(frozen=True)
class ProblemMorphism:
    source: str
    target: str
    checks: dict = field(default_factory=dict)
    failure: str | None = None
    witness: tuple[float, ...] | None = None

    @property
    def verified(self) -> bool:
        return self.failure is None

    def __bool__(self) -> bool:
        return self.verified


@dataclass(frozen=True, eq=False)
class Universe:
    names: tuple[str, ...]
    points: np.ndarray

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("universe point names must be unique")
        pts = np.asarray(self.points, dtype=float)
        if pts.size or self.names:
            pts = pts.reshape(len(self.names), -1)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_mapping(cls, points: Mapping[str, Sequence[float]]) -> "Universe":
        names = tuple(points)
        return cls(names, np.array([points[n] for n in names], dtype=float))

    @classmethod
    def from_solutions(cls, problems: Sequence[LocalProblem], tol: float = POINT_TOL) -> "Universe":
        """Union of all solution sets, one name per distinct point."""
        names, pts = [], []
        for p in problems:
            for i, x in enumerate(p.require_solved()):
                if any(np.linalg.norm(x - q) <= tol for q in pts):
                    continue
                names.append(f"{p.id}.{i}")
                pts.append(x)
        return cls(tuple(names), np.array(pts).reshape(len(pts), -1))

    def __len__(self) -> int:
        return len(self.names)

    def point(self, name: str) -> np.ndarray:
        return self.points[self.names.index(name)]


@dataclass(frozen=True)
class SectionTable:
    columns: tuple[str, ...]
    rows: dict  # problem id -> frozenset of universe names

    def cell(self, problem: str, name: str) -> bool:
        return name in self.rows[problem]

    def render(self) -> str:
        width = max([len(r) for r in self.rows] + [8])
        head = "problem".ljust(width) + " " + " ".join(c.center(5) for c in self.columns)
        lines = [head]
        for pid, row in self.rows.items():
            cells = " ".join(("X" if c in row else "-").center(5) for c in self.columns)
            lines.append(pid.ljust(width) + " " + cells)
        return "\n".join(lines)


# -- operations ----------------------------------------------------------------

def solve_problem(p: LocalProblem, tie: float = VALUE_TIE) -> LocalProblem:
    sols, value = grid_maximize(p.utility, p.feasible, tie)
    return replace(p, solutions=sols, value=value)


def check_morphism(
    k: LocalProblem,
    j: LocalProblem,
    samples: int = SAMPLES,
    contain_tol: float = CONTAIN_TOL,
    utility_tol: float = UTILITY_TOL,
) -> ProblemMorphism:
    """Test whether k is a restriction of j; the first failing check is reported."""
    checks = {}
    pts = k.feasible.samples(samples)

    dist = distances_to_set(j.feasible, pts)
    bad = np.flatnonzero(dist > contain_tol)
    checks["feasible_inclusion"] = len(bad) == 0
    if len(bad):
        return ProblemMorphism(k.id, j.id, checks, "feasible_inclusion", tuple(float(v) for v in pts[bad[0]]))

    uk = compile_on(k.utility, k.feasible.coord_names)(pts)
    uj = compile_on(j.utility, j.feasible.coord_names)(pts)
    bad = np.flatnonzero(np.abs(uk - uj) > utility_tol)
    checks["utility_restriction"] = len(bad) == 0
    if len(bad):
        return ProblemMorphism(k.id, j.id, checks, "utility_restriction", tuple(float(v) for v in pts[bad[0]]))

    checks["dimension"] = k.subspace.dim <= j.subspace.dim
    if not checks["dimension"]:
        return ProblemMorphism(k.id, j.id, checks, "dimension", None)
    return ProblemMorphism(k.id, j.id, checks)


def gamma(p: LocalProblem, x) -> PointSet:
    """Feasible points of `p` closest to the projection of `x` on its subspace."""
    x = as_vector(x, p.ambient_dim)
    return nearest_points(p.feasible, project(p.subspace, x))


def sigma_member(p: LocalProblem, x, tol: float = POINT_TOL) -> bool:
    sols = p.require_solved()
    return any(sols.contains(y, tol) for y in gamma(p, x))


def section_table(problems: Sequence[LocalProblem], u: Universe, tol: float = POINT_TOL) -> SectionTable:
    rows = {}
    for p in problems:
        rows[p.id] = frozenset(n for n, x in zip(u.names, u.points) if sigma_member(p, x, tol))
    return SectionTable(u.names, rows)


def restrict_section(j: LocalProblem, k: LocalProblem) -> PointSet:
    """Solutions of j's utility over k's feasible set."""
    sols, _ = grid_maximize(j.utility, k.feasible)
    return sols


def restricted_problem(j: LocalProblem, k: LocalProblem) -> LocalProblem:
    sols, value = grid_maximize(j.utility, k.feasible)
    return LocalProblem(f"{j.id}|{k.id}", k.subspace, k.feasible, j.utility, sols, value)


def presheaf_laws(
    k: LocalProblem, j: LocalProblem, l: LocalProblem, tol: float = POINT_TOL
) -> Report:
    """Identity and composition laws of restriction along k -> j -> l."""
    rep = Report("presheaf-laws")
    for a, b in ((k, j), (j, l)):
        m = check_morphism(a, b)
        if not m:
            rep.fail(f"morphism {a.id}->{b.id}", f"{m.failure} fails", m.witness)
            return rep
    for p in (k, j, l):
        own = restrict_section(p, p)
        ok = own.same_as(p.require_solved(), tol)
        rep.record(f"identity[{p.id}]", ok, own.tolist())
        if not ok:
            rep.fail(f"identity[{p.id}]", "r_kk differs from the solution set", own.tolist())
    # r^j_k after r^l_j is determined by j's own data; r^l_k uses l's utility directly
    two_step = restrict_section(j, k)
    direct = restrict_section(l, k)
    ok = two_step.same_as(direct, tol)
    rep.record("composition", ok, {"via": two_step.tolist(), "direct": direct.tolist()})
    if not ok:
        rep.fail("composition", "restriction paths disagree", two_step.tolist() + direct.tolist())
    return rep


def check_cover(
    family: Sequence[LocalProblem], j: LocalProblem, samples: int = SAMPLES, contain_tol: float = CONTAIN_TOL
) -> Report:
    rep = Report("cover")
    for k in family:
        m = check_morphism(k, j, samples)
        rep.record(f"morphism[{k.id}]", m.verified, m.failure)
        if not m:
            rep.fail(f"morphism[{k.id}]", f"{m.failure} fails", m.witness)
    pts = j.feasible.samples(samples)
    best = np.full(len(pts), np.inf)
    for k in family:
        best = np.minimum(best, distances_to_set(k.feasible, pts))
    bad = np.flatnonzero(best > contain_tol)
    rep.record("union_contains_target", len(bad) == 0, len(bad))
    if len(bad):
        rep.fail("union_contains_target", "feasible point of the target outside every member", tuple(float(v) for v in pts[bad[0]]))
    return rep


def _section_points(p: LocalProblem, u: Universe, tol: float) -> list[np.ndarray]:
    return [x for x in u.points if sigma_member(p, x, tol)]


def _gamma_image(p: LocalProblem, xs: Sequence[np.ndarray]) -> PointSet:
    out = PointSet.empty(p.ambient_dim)
    for x in xs:
        out = out.union(gamma(p, x))
    return out


def check_compatibility(k: LocalProblem, l: LocalProblem, u: Universe, tol: float = POINT_TOL) -> Report:
    """Gamma_k(X^k) & Gamma_l(X^k) == Gamma_k(X^l) & Gamma_l(X^l) over universe sections."""
    xk = _section_points(k, u, tol)
    xl = _section_points(l, u, tol)
    lhs = _gamma_image(k, xk).intersect(_gamma_image(l, xk), tol)
    rhs = _gamma_image(k, xl).intersect(_gamma_image(l, xl), tol)
    ok = lhs.same_as(rhs, tol)
    rep = Report("compatibility")
    rep.record(f"{k.id}~{l.id}", ok, {"lhs": lhs.tolist(), "rhs": rhs.tolist()})
    if not ok:
        witnesses = [p for p in lhs.tolist() if not rhs.contains(p, tol)]
        witnesses += [p for p in rhs.tolist() if not lhs.contains(p, tol)]
        rep.fail(f"{k.id}~{l.id}", "intersections differ", witnesses)
    return rep


def check_glue(cover: Sequence[LocalProblem], j: LocalProblem, u: Universe, tol: float = POINT_TOL) -> Report:
    """Gluing of the cover's sections into the section over j.

    (a) restricting j to each member reproduces that member's solutions;
    (b) on universe points, the section of the restricted problem equals the
        member's own section.
    """
    rep = Report("glue")
    for k in cover:
        r = restricted_problem(j, k)
        ok = r.solutions.same_as(k.require_solved(), tol)
        rep.record(f"restriction[{k.id}]", ok, r.solutions.tolist())
        if not ok:
            rep.fail(
                f"restriction[{k.id}]",
                "restriction of the global problem differs from the local solutions",
                [p for p in r.solutions.tolist() if not k.solutions.contains(p, tol)]
                + [p for p in k.solutions.tolist() if not r.solutions.contains(p, tol)],
            )
            continue
        own = {n for n, x in zip(u.names, u.points) if sigma_member(k, x, tol)}
        via = {n for n, x in zip(u.names, u.points) if sigma_member(r, x, tol)}
        rep.record(f"section[{k.id}]", own == via, sorted(own))
        if own != via:
            rep.fail(f"section[{k.id}]", "universe sections disagree", sorted(own ^ via))
    return rep


# -- file formats -------------------------------------------------------------

def problem_from_dict(d: Mapping) -> LocalProblem:
    n = int(d["ambient_dim"])
    coords = tuple(d.get("coords", ())) or None
    sub = d.get("subspace", {})
    if "spanning" in sub:
        subspace = orthonormalize(sub["spanning"])
    elif "normals" in sub:
        subspace = complement(sub["normals"], n)
    else:
        subspace = Subspace.full(n)
    if subspace.ambient_dim != n:
        raise ValueError(f"{d['id']}: subspace dimension mismatch")
    fd = d["feasible"]
    params = tuple(
        Param(p["name"], float(p["min"]), float(p["max"]), bool(p.get("periodic", False)))
        for p in fd["params"]
    )
    feasible = FeasibleSet(
        n, params, tuple(fd["map"]), int(fd.get("resolution", 720)), coords or ()
    )
    return LocalProblem(str(d["id"]), subspace, feasible, parse_expr(d["utility"]))


def load_problem(path) -> LocalProblem:
    return problem_from_dict(json.loads(Path(path).read_text()))


def load_universe(path) -> Universe:
    return Universe.from_mapping(json.loads(Path(path).read_text())["points"])


def load_bundle(path) -> tuple[list[LocalProblem], Universe | None, dict | None]:
    """A single problem file, or {"problems": [...], "universe": {...}, "cover": {...}}."""
    d = json.loads(Path(path).read_text())
    if "problems" not in d:
        return [problem_from_dict(d)], None, None
    problems = [problem_from_dict(p) for p in d["problems"]]
    universe = Universe.from_mapping(d["universe"]) if "universe" in d else None
    return problems, universe, d.get("cover")
