"""Finite polynomial functors, their morphisms, internal homs and coalgebras.

A polynomial is a finite family of positions, each carrying a finite set of
directions.  A morphism p -> q sends every position i of p forward to a
position of q and pulls the directions of q at that image back to directions
of p at i.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Hashable, Iterator, Mapping, Sequence

from .report import Report

HOM_BOUND = 10**6


class PolyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Poly:
    id: str
    positions: Mapping[Hashable, tuple]
    payload: Mapping[Hashable, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "positions", {i: tuple(d) for i, d in self.positions.items()})
        for i, dirs in self.positions.items():
            if len(set(dirs)) != len(dirs):
                raise PolyError(f"{self.id}: repeated direction at position {i!r}")

    def __getitem__(self, i) -> tuple:
        return self.positions[i]

    @property
    def position_ids(self) -> tuple:
        return tuple(self.positions)

    def n_positions(self) -> int:
        return len(self.positions)

    def n_directions(self) -> int:
        return sum(len(d) for d in self.positions.values())

    def same_shape(self, other: "Poly") -> bool:
        return dict(self.positions) == dict(other.positions)

    def to_dict(self) -> dict:
        return {"id": self.id, "positions": {str(i): [_label(d) for d in dirs] for i, dirs in self.positions.items()}}


def _label(x) -> str:
    if isinstance(x, tuple):
        return ":".join(_label(v) for v in x)
    return str(x)


def unit_poly() -> Poly:
    return Poly("1", {"*": ("*",)})


def constant_poly(id: str, positions: Sequence[Hashable]) -> Poly:
    """Positions without directions."""
    return Poly(id, {i: () for i in positions})


@dataclass(frozen=True, eq=False)
class PolyMorphism:
    source: Poly
    target: Poly
    fwd: Mapping[Hashable, Hashable]
    bwd: Mapping[Hashable, Mapping[Hashable, Hashable]]

    def __post_init__(self):
        p, q = self.source, self.target
        for i in p.positions:
            if i not in self.fwd:
                raise PolyError(f"forward map undefined at {i!r}")
            j = self.fwd[i]
            if j not in q.positions:
                raise PolyError(f"{i!r} maps to {j!r}, not a position of {q.id}")
            back = self.bwd.get(i, {})
            if set(back) != set(q[j]):
                raise PolyError(f"backward map at {i!r} must be defined exactly on {q.id}[{j!r}]")
            for d, e in back.items():
                if e not in p[i]:
                    raise PolyError(f"backward map at {i!r} sends {d!r} to {e!r}, not a direction of {p.id}[{i!r}]")

    def key(self) -> tuple:
        return tuple((i, self.fwd[i], tuple(self.bwd[i][d] for d in self.target[self.fwd[i]]))
                     for i in self.source.positions)

    def __eq__(self, other) -> bool:
        return (isinstance(other, PolyMorphism) and self.source is other.source
                and self.target is other.target and self.key() == other.key())

    def __hash__(self) -> int:
        return hash(self.key())


def identity(p: Poly) -> PolyMorphism:
    return PolyMorphism(p, p, {i: i for i in p.positions}, {i: {d: d for d in p[i]} for i in p.positions})


def poly_compose(f: PolyMorphism, g: PolyMorphism) -> PolyMorphism:
    """g after f: forward maps compose, backward maps compose the other way."""
    if f.target is not g.source and not f.target.same_shape(g.source):
        raise PolyError(f"cannot compose {f.source.id}->{f.target.id} with {g.source.id}->{g.target.id}")
    fwd = {i: g.fwd[f.fwd[i]] for i in f.source.positions}
    bwd = {i: {d: f.bwd[i][g.bwd[f.fwd[i]][d]] for d in g.target[fwd[i]]} for i in f.source.positions}
    return PolyMorphism(f.source, g.target, fwd, bwd)


def poly_tensor(a: Poly, b: Poly) -> Poly:
    """Positions and directions both pair up."""
    return Poly(
        f"{a.id}⊗{b.id}",
        {(i, j): tuple(itertools.product(a[i], b[j])) for i in a.positions for j in b.positions},
    )


def poly_product(a: Poly, b: Poly) -> Poly:
    """Positions pair up; directions form a tagged disjoint union."""
    return Poly(
        f"{a.id}×{b.id}",
        {(i, j): tuple((0, d) for d in a[i]) + tuple((1, e) for e in b[j])
         for i in a.positions for j in b.positions},
    )


# -- morphism enumeration and the internal hom ---------------------------------

def morphism_count(p: Poly, q: Poly) -> int:
    """Closed form: prod over i of sum over j of |p[i]| ** |q[j]|."""
    return math.prod(sum(len(p[i]) ** len(q[j]) for j in q.positions) for i in p.positions)


@dataclass(frozen=True, eq=False)
class HomSpace:
    """All morphisms p -> q, ranked in enumeration order without materialising them."""

    p: Poly
    q: Poly

    def _local_counts(self, i) -> list[int]:
        return [len(self.p[i]) ** len(self.q[j]) for j in self.q.positions]

    def __len__(self) -> int:
        return morphism_count(self.p, self.q)

    def __iter__(self) -> Iterator[PolyMorphism]:
        p, q = self.p, self.q
        per_position = []
        for i in p.positions:
            choices = []
            for j in q.positions:
                for back in itertools.product(p[i], repeat=len(q[j])):
                    choices.append((j, dict(zip(q[j], back))))
            per_position.append(choices)
        for combo in itertools.product(*per_position):
            yield PolyMorphism(p, q, {i: c[0] for i, c in zip(p.positions, combo)},
                               {i: c[1] for i, c in zip(p.positions, combo)})

    def rank(self, f: PolyMorphism) -> int:
        r = 0
        for i in self.p.positions:
            counts = self._local_counts(i)
            js = list(self.q.positions)
            j = f.fwd[i]
            local = sum(counts[: js.index(j)])
            sub = 0
            for d in self.q[j]:
                sub = sub * len(self.p[i]) + self.p[i].index(f.bwd[i][d])
            r = r * sum(counts) + local + sub
        return r

    def unrank(self, r: int) -> PolyMorphism:
        if not 0 <= r < len(self):
            raise PolyError(f"no morphism with index {r}")
        fwd, bwd = {}, {}
        for i in reversed(self.p.positions):
            counts = self._local_counts(i)
            r, local = divmod(r, sum(counts))
            for j, n in zip(self.q.positions, counts):
                if local < n:
                    break
                local -= n
            picks = []
            for _ in self.q[j]:
                local, k = divmod(local, len(self.p[i]))
                picks.append(self.p[i][k])
            fwd[i] = j
            bwd[i] = dict(zip(self.q[j], reversed(picks)))
        return PolyMorphism(self.p, self.q, fwd, bwd)

    def morphism_id(self, f: PolyMorphism) -> str:
        return f"phi{self.rank(f)}"

    def morphism(self, morphism_id: str) -> PolyMorphism:
        if not str(morphism_id).startswith("phi"):
            raise PolyError(f"bad morphism id {morphism_id!r}")
        try:
            return self.unrank(int(str(morphism_id)[3:]))
        except ValueError as exc:
            raise PolyError(f"bad morphism id {morphism_id!r}") from exc

    @staticmethod
    def directions(f: PolyMorphism) -> tuple:
        """Directions of the hom at f: q's directions at every image, tagged by source position."""
        return tuple((i, d) for i in f.source.positions for d in f.target[f.fwd[i]])


def internal_hom(p: Poly, q: Poly, bound: int = HOM_BOUND) -> Poly:
    space = HomSpace(p, q)
    n = len(space)
    widest = max((len(q[j]) for j in q.positions), default=0)
    size = n * max(1, len(p.positions) * widest)
    if size > bound:
        raise PolyError(f"[{p.id},{q.id}] has {n} morphisms; enumeration size {size} exceeds {bound}")
    positions, payload = {}, {}
    for k, f in enumerate(space):
        positions[f"phi{k}"] = space.directions(f)
        payload[f"phi{k}"] = f
    return Poly(f"[{p.id},{q.id}]", positions, payload)


# -- coalgebras ----------------------------------------------------------------

Triple = tuple  # (morphism id, position of p, direction of q at the image)


@dataclass(frozen=True, eq=False)
class Coalgebra:
    hom: HomSpace
    states: tuple
    rho: Mapping[Hashable, Triple]
    mu: Mapping[Triple, Hashable]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        for s in self.states:
            if s not in self.rho:
                raise PolyError(f"rho undefined at state {s!r}")
            phi, i, d = out = tuple(self.rho[s])
            f = self.hom.morphism(phi)
            if i not in self.hom.p.positions:
                raise PolyError(f"state {s!r}: {i!r} is not a position of {self.hom.p.id}")
            if d not in self.hom.q[f.fwd[i]]:
                raise PolyError(f"state {s!r}: {d!r} is not a direction of {self.hom.q.id} at {f.fwd[i]!r}")
            if out not in self.mu:
                raise PolyError(f"mu undefined at {out!r}")
            if self.mu[out] not in self.states:
                raise PolyError(f"mu sends {out!r} to unknown state {self.mu[out]!r}")


def coalg_step(c: Coalgebra, s) -> tuple[Triple, Hashable]:
    if s not in c.states:
        raise PolyError(f"unknown state {s!r}")
    out = tuple(c.rho[s])
    return out, c.mu[out]


@dataclass
class Trace:
    entries: list  # (state, output) per step
    cycle_step: int | None = None  # 1-based step whose state was already visited
    cycle_state: Hashable | None = None

    def states(self) -> list:
        return [s for s, _ in self.entries]

    def outputs(self) -> list:
        return [o for _, o in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def coalg_run(c: Coalgebra, s0, n: int) -> Trace:
    if s0 not in c.states:
        raise PolyError(f"unknown state {s0!r}")
    trace = Trace([])
    seen, s = set(), s0
    for step in range(1, n + 1):
        if s in seen and trace.cycle_step is None:
            trace.cycle_step, trace.cycle_state = step, s
        seen.add(s)
        out, nxt = coalg_step(c, s)
        trace.entries.append((s, out))
        s = nxt
    return trace


# -- law checks ----------------------------------------------------------------

def random_poly(rng, id: str, max_positions: int = 3, max_directions: int = 3) -> Poly:
    n = int(rng.integers(1, max_positions + 1))
    return Poly(id, {f"{id}{k}": tuple(f"d{m}" for m in range(int(rng.integers(0, max_directions + 1))))
                     for k in range(n)})


def random_chain(rng, budget: int = 20000, max_positions: int = 3, max_directions: int = 3) -> tuple[Poly, ...]:
    """Four seeded polys p, q, r, s whose composable triples number at most `budget`."""
    while True:
        chain = tuple(random_poly(rng, n, max_positions, max_directions) for n in "pqrs")
        counts = [morphism_count(a, b) for a, b in zip(chain, chain[1:])]
        if 0 < math.prod(counts) <= budget:
            return chain


def check_poly_laws(chains: Sequence[Sequence[Poly]]) -> Report:
    """Identity and associativity on every morphism pair and triple along each chain."""
    rep = Report("poly-laws")
    counted = {"morphisms": 0, "pairs": 0, "triples": 0}
    for chain in chains:
        homs = [list(HomSpace(a, b)) for a, b in zip(chain, chain[1:])]
        for (a, b), fs in zip(zip(chain, chain[1:]), homs):
            if len(fs) != morphism_count(a, b):
                rep.fail("hom_count", "enumeration disagrees with the closed form", [a.id, b.id, len(fs)])
            ia, ib = identity(a), identity(b)
            for f in fs:
                counted["morphisms"] += 1
                if poly_compose(ia, f) != f or poly_compose(f, ib) != f:
                    rep.fail("identity", "identity law fails", [a.id, b.id, repr(f.key())])
        fs, gs, hs = homs
        for g in gs:
            gh = [poly_compose(g, h) for h in hs]
            for f in fs:
                counted["pairs"] += 1
                fg = poly_compose(f, g)
                for h, g_h in zip(hs, gh):
                    counted["triples"] += 1
                    if poly_compose(fg, h) != poly_compose(f, g_h):
                        rep.fail("associativity", "composites differ", [p.id for p in chain])
    rep.record("identity", not any(w.check == "identity" for w in rep.witnesses), counted["morphisms"])
    rep.record("associativity", not any(w.check == "associativity" for w in rep.witnesses),
               {"pairs": counted["pairs"], "triples": counted["triples"]})
    rep.record("hom_count", not any(w.check == "hom_count" for w in rep.witnesses))
    return rep


# -- files -------------------------------------------------------------------------

def poly_from_dict(d: Mapping) -> Poly:
    return Poly(str(d["id"]), {str(i): tuple(str(x) for x in dirs) for i, dirs in d["positions"].items()})


def load_poly(path) -> Poly:
    return poly_from_dict(json.loads(Path(path).read_text()))


def coalgebra_from_dict(d: Mapping, polys: Mapping[str, Poly]) -> Coalgebra:
    """{"p": id, "q": id, "states": [...], "rho": {s: [phi, i, d]}, "mu": [[phi, i, d, s'], ...]}"""
    try:
        hom = HomSpace(polys[d["p"]], polys[d["q"]])
    except KeyError as exc:
        raise PolyError(f"unknown polynomial {exc.args[0]!r}") from None
    rho = {str(s): tuple(str(x) for x in t) for s, t in d["rho"].items()}
    mu = {tuple(str(x) for x in row[:3]): str(row[3]) for row in d["mu"]}
    return Coalgebra(hom, tuple(str(s) for s in d["states"]), rho, mu)


def load_coalgebra(path) -> tuple[Coalgebra, dict]:
    """Load a coalgebra file whose polys are inline or referenced by relative path."""
    path = Path(path)
    d = json.loads(path.read_text())
    polys = {}
    for entry in d.get("polys", []):
        poly = load_poly(path.parent / entry) if isinstance(entry, str) else poly_from_dict(entry)
        polys[poly.id] = poly
    return coalgebra_from_dict(d, polys), d
