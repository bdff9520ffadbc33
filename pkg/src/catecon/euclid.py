"""Finite-dimensional Euclidean geometry and the grid-with-refinement optimiser.

Feasible sets are compact images of a parameter box under coordinate maps.
Every optimiser here scans the image of a parameter grid, keeps the grid
local optima close to the best value, and polishes each one with a
shrinking-box coordinate search in parameter space.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .expr import EvalError, Expr, parse_expr

log = logging.getLogger(__name__)

Vector = np.ndarray

ORTHO_TOL = 1e-12
PIVOT_TOL = 1e-10
VALUE_TIE = 1e-9
CLUSTER_RADIUS = 1e-4
REFINE_ROUNDS = 40
MAX_CANDIDATES = 4096
COARSE_POINTS = 16384


def default_coord_names(dim: int) -> tuple[str, ...]:
    if dim <= 3:
        return ("x", "y", "z")[:dim]
    return tuple(f"x{i + 1}" for i in range(dim))


def as_vector(x, dim: int | None = None) -> Vector:
    v = np.asarray(x, dtype=float).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    return v


@dataclass(frozen=True, eq=False)
class Subspace:
    ambient_dim: int
    basis: np.ndarray  # (k, ambient_dim), orthonormal rows

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float).reshape(-1, self.ambient_dim)
        object.__setattr__(self, "basis", b)
        if b.shape[0] > self.ambient_dim:
            raise ValueError("more basis vectors than the ambient dimension")
        gram = b @ b.T
        if not np.allclose(gram, np.eye(b.shape[0]), atol=ORTHO_TOL, rtol=0):
            raise ValueError("basis is not orthonormal")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, np.eye(n))

    def contains(self, x, tol: float = 1e-8) -> bool:
        x = as_vector(x, self.ambient_dim)
        return float(np.linalg.norm(x - project(self, x))) <= tol


def orthonormalize(spanning: Sequence) -> Subspace:
    """Gram-Schmidt (two passes) over `spanning`; near-dependent vectors are dropped."""
    vecs = [as_vector(v) for v in spanning]
    if not vecs:
        raise ValueError("cannot infer the ambient dimension of an empty spanning set")
    n = vecs[0].shape[0]
    basis: list[np.ndarray] = []
    for v in vecs:
        if v.shape[0] != n:
            raise ValueError(f"dimension mismatch: {v.shape[0]} != {n}")
        r = v.copy()
        for _ in range(2):
            for b in basis:
                r = r - (r @ b) * b
        norm = np.linalg.norm(r)
        if norm > PIVOT_TOL:
            basis.append(r / norm)
    return Subspace(n, np.array(basis).reshape(-1, n))


def complement(normals: Sequence, ambient_dim: int | None = None) -> Subspace:
    """Orthogonal complement of the span of `normals`."""
    normals = [as_vector(v) for v in normals]
    n = ambient_dim if ambient_dim is not None else normals[0].shape[0]
    if not normals:
        return Subspace.full(n)
    nb = orthonormalize(normals)
    if nb.ambient_dim != n:
        raise ValueError("dimension mismatch")
    full = orthonormalize(list(nb.basis) + list(np.eye(n)))
    return Subspace(n, full.basis[nb.dim:])


def project(s: Subspace, x) -> Vector:
    x = as_vector(x, s.ambient_dim)
    return s.basis.T @ (s.basis @ x)


@dataclass(frozen=True)
class Param:
    name: str
    lower: float
    upper: float
    periodic: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"parameter {self.name}: need lower < upper")

    def axis(self, n: int) -> np.ndarray:
        return np.linspace(self.lower, self.upper, n, endpoint=not self.periodic)

    def spacing(self, n: int) -> float:
        width = self.upper - self.lower
        return width / n if self.periodic else width / max(n - 1, 1)


@dataclass(frozen=True)
class FeasibleSet:
    """Compact set given as the image of a parameter box under `coord_maps`."""

    ambient_dim: int
    params: tuple[Param, ...]
    coord_maps: tuple[Expr, ...]
    grid_resolution: int = 720
    coord_names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        maps = tuple(parse_expr(m) if isinstance(m, str) else m for m in self.coord_maps)
        object.__setattr__(self, "coord_maps", maps)
        if not self.coord_names:
            object.__setattr__(self, "coord_names", default_coord_names(self.ambient_dim))
        if len(maps) != self.ambient_dim:
            raise ValueError("need one coordinate map per ambient coordinate")
        declared = {p.name for p in self.params}
        for m in maps:
            extra = m.variables() - declared
            if extra:
                raise ValueError(f"coordinate map uses undeclared parameters {sorted(extra)}")

    @property
    def lower(self) -> np.ndarray:
        return np.array([p.lower for p in self.params])

    @property
    def upper(self) -> np.ndarray:
        return np.array([p.upper for p in self.params])

    @property
    def periodic(self) -> np.ndarray:
        return np.array([p.periodic for p in self.params], dtype=bool)

    def embed(self, P: np.ndarray) -> np.ndarray:
        """Map parameter rows (m, d) to ambient points (m, n)."""
        P = np.atleast_2d(P)
        env = {p.name: P[:, i] for i, p in enumerate(self.params)}
        m = P.shape[0]
        cols = [np.broadcast_to(np.asarray(f.evaluate(env), dtype=float), (m,)) for f in self.coord_maps]
        return np.stack(cols, axis=1)

    def grid_axes(self, resolution: int | None = None) -> list[np.ndarray]:
        n = resolution or self.grid_resolution
        return [p.axis(n) for p in self.params]

    def grid(self, resolution: int | None = None) -> tuple[np.ndarray, tuple[int, ...]]:
        axes = self.grid_axes(resolution)
        mesh = np.meshgrid(*axes, indexing="ij")
        shape = mesh[0].shape
        return np.stack([g.reshape(-1) for g in mesh], axis=1), shape

    def samples(self, count: int = 1000) -> np.ndarray:
        """Deterministic, evenly spread sample of at least `count` feasible points."""
        per_axis = max(2, int(np.ceil(count ** (1.0 / len(self.params)))))
        P, _ = self.grid(per_axis)
        return self.embed(P)

    def steps(self, resolution: int | None = None) -> np.ndarray:
        n = resolution or self.grid_resolution
        return np.array([p.spacing(n) for p in self.params])


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray  # (m, n)
    cluster_radius: float = CLUSTER_RADIUS

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(0, 0) if pts.size == 0 else pts.reshape(1, -1)
        if len(pts) > 1:
            pts = cluster(pts, radius=self.cluster_radius)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __iter__(self):
        return iter(self.points)

    @classmethod
    def empty(cls, dim: int = 0) -> "PointSet":
        return cls(np.zeros((0, dim)))

    def contains(self, x, tol: float) -> bool:
        if len(self) == 0:
            return False
        return bool(np.min(np.linalg.norm(self.points - as_vector(x), axis=1)) <= tol)

    def intersect(self, other: "PointSet", tol: float) -> "PointSet":
        keep = [p for p in self.points if other.contains(p, tol)]
        return PointSet(np.array(keep).reshape(-1, self.points.shape[1]), self.cluster_radius)

    def union(self, other: "PointSet") -> "PointSet":
        if len(self) == 0:
            return other
        if len(other) == 0:
            return self
        return PointSet(np.vstack([self.points, other.points]), self.cluster_radius)

    def same_as(self, other: "PointSet", tol: float) -> bool:
        """Set equality up to `tol`: every point of each side is near the other side."""
        if len(self) == 0 or len(other) == 0:
            return len(self) == len(other)
        return all(other.contains(p, tol) for p in self.points) and all(
            self.contains(q, tol) for q in other.points
        )

    def tolist(self) -> list[list[float]]:
        return self.points.tolist()


def cluster(points: np.ndarray, order: np.ndarray | None = None, radius: float = CLUSTER_RADIUS) -> np.ndarray:
    """Greedy representatives: a point is kept unless within `radius` of a kept one."""
    if len(points) == 0:
        return points
    idx = np.arange(len(points)) if order is None else order
    kept: list[np.ndarray] = []
    for i in idx:
        p = points[i]
        if kept and np.min(np.linalg.norm(np.asarray(kept) - p, axis=1)) <= radius:
            continue
        kept.append(p)
    out = np.asarray(kept)
    return out[np.lexsort(out.T[::-1])]


def _wrap(P, lo, hi, periodic):
    P = np.where(periodic, lo + np.mod(P - lo, hi - lo), P)
    return np.clip(P, lo, hi)


def refine(
    objective: Callable[[np.ndarray], np.ndarray],
    P: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    periodic: np.ndarray,
    step0: np.ndarray,
    rounds: int = REFINE_ROUNDS,
    moves_per_round: int = 8,
) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise shrinking-box coordinate ascent.

    `objective` maps parameter rows (m, d) to values (m,) and may depend on
    the row index (callers use that for per-row targets).
    """
    P = np.array(P, dtype=float)
    val = objective(P)
    step = np.array(step0, dtype=float)
    m, d = P.shape
    for _ in range(rounds):
        for k in range(d):
            for _ in range(moves_per_round):
                improved = np.zeros(m, dtype=bool)
                for sign in (1.0, -1.0):
                    trial = P.copy()
                    trial[:, k] += sign * step[k]
                    trial = _wrap(trial, lo, hi, periodic)
                    tv = objective(trial)
                    # float-noise moves on plateaus would let points drift together
                    better = tv > val + 1e-15 * np.maximum(1.0, np.abs(val))
                    P[better] = trial[better]
                    val = np.where(better, tv, val)
                    improved |= better
                if not improved.any():
                    break
        step *= 0.5
    return P, val


def _grid_local_maxima(values: np.ndarray, periodic: np.ndarray, tie: float) -> np.ndarray:
    """Boolean mask of grid nodes that are >= each axis neighbour (up to `tie`)."""
    mask = np.ones(values.shape, dtype=bool)
    for ax in range(values.ndim):
        for shift in (1, -1):
            if periodic[ax]:
                nb = np.roll(values, shift, axis=ax)
            else:
                nb = np.full_like(values, -np.inf)
                src = [slice(None)] * values.ndim
                dst = [slice(None)] * values.ndim
                if shift == 1:
                    src[ax], dst[ax] = slice(None, -1), slice(1, None)
                else:
                    src[ax], dst[ax] = slice(1, None), slice(None, -1)
                nb[tuple(dst)] = values[tuple(src)]
            mask &= values >= nb - tie
    return mask


def _maximize(
    objective_of_points: Callable[[np.ndarray], np.ndarray],
    fs: FeasibleSet,
    tie: float,
    radius: float,
) -> tuple[PointSet, float]:
    P, shape = fs.grid()
    pts = fs.embed(P)
    values = np.asarray(objective_of_points(pts), dtype=float)
    if not np.all(np.isfinite(values)):
        raise EvalError("objective is not finite on the feasible grid")
    gmax, gmin = values.max(), values.min()
    slack = max(tie, 0.05 * (gmax - gmin))
    local = _grid_local_maxima(values.reshape(shape), fs.periodic, tie).reshape(-1)
    cand = np.flatnonzero(local & (values >= gmax - slack))
    if len(cand) > MAX_CANDIDATES:
        log.debug("thinning %d candidates to %d", len(cand), MAX_CANDIDATES)
        cand = cand[np.linspace(0, len(cand) - 1, MAX_CANDIDATES).round().astype(int)]
    Pr, vr = refine(
        lambda Q: objective_of_points(fs.embed(Q)),
        P[cand], fs.lower, fs.upper, fs.periodic, fs.steps(),
    )
    best = float(vr.max())
    win = np.flatnonzero(vr >= best - tie)
    order = win[np.argsort(-vr[win], kind="stable")]
    reps = cluster(fs.embed(Pr), order, radius)
    return PointSet(reps, radius), best


def compile_on(f: Expr, names: Sequence[str]) -> Callable[[np.ndarray], np.ndarray]:
    """Turn `f` over coordinate names into a function of point rows (m, n)."""
    missing = f.variables() - set(names)
    if missing:
        raise ValueError(f"expression uses unknown coordinates {sorted(missing)}")

    def fn(pts: np.ndarray) -> np.ndarray:
        env = {name: pts[:, i] for i, name in enumerate(names)}
        return np.broadcast_to(np.asarray(f.evaluate(env), dtype=float), (pts.shape[0],))

    return fn


def grid_maximize(
    f: Expr, fs: FeasibleSet, tie: float = VALUE_TIE, radius: float = CLUSTER_RADIUS
) -> tuple[PointSet, float]:
    """All (clustered) maximisers of `f` over `fs`, and the maximum value."""
    return _maximize(compile_on(f, fs.coord_names), fs, tie, radius)


def nearest_points(
    fs: FeasibleSet, target, tie: float = VALUE_TIE, radius: float = CLUSTER_RADIUS
) -> PointSet:
    """All (clustered) points of `fs` closest to `target`."""
    t = as_vector(target, fs.ambient_dim)
    reps, _ = _maximize(lambda pts: -np.linalg.norm(pts - t, axis=1), fs, tie, radius)
    return reps


def distances_to_set(
    fs: FeasibleSet, targets: np.ndarray, resolution: int = 96, chunk: int = 64
) -> np.ndarray:
    """Distance from each target row to `fs` (coarse grid, then refinement per row)."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    # keep the coarse grid near COARSE_POINTS in total, whatever the parameter count
    resolution = max(2, min(resolution, int(COARSE_POINTS ** (1 / len(fs.params)))))
    P, _ = fs.grid(resolution)
    pts = fs.embed(P)
    out = np.empty(len(targets))
    for start in range(0, len(targets), chunk):
        T = targets[start:start + chunk]
        d = np.linalg.norm(pts[None, :, :] - T[:, None, :], axis=2)
        P0 = P[np.argmin(d, axis=1)]
        _, val = refine(
            lambda Q, T=T: -np.linalg.norm(fs.embed(Q) - T, axis=1),
            P0, fs.lower, fs.upper, fs.periodic, fs.steps(resolution),
        )
        out[start:start + chunk] = -val
    return out
