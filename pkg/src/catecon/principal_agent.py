"""Discretised Principal-Agent contracting.

The Agent of type x taking decision y under transfer v gets agent_utility(x, y, v),
strictly decreasing in v; the Principal gets principal_utility(x, y, v),
increasing in v.  The Principal picks a grid cell (x, y) and a promised Agent
utility u >= reservation; the transfer is recovered by inverting agent_utility
in v with bisection.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .expr import Expr, parse_expr
from .poly import Poly, identity, poly_tensor
from .report import Report

MONO_SAMPLES = 100
MONO_TOL = 1e-12
RESIDUAL_TOL = 1e-10
MAX_EXPANSIONS = 60
MAX_ITER = 200
U_POINTS = 101
U_SPAN = 10.0


class BracketError(ArithmeticError):
    """Agent utility never straddles the requested level; it is not full range in v."""


@dataclass(frozen=True, eq=False)
class PAProblem:
    x_grid: np.ndarray
    y_grid: np.ndarray
    agent_utility: Expr
    principal_utility: Expr
    reservation: float
    u_grid: np.ndarray | None = None
    bracket: tuple[float, float] = (-10.0, 10.0)
    reservations: tuple[float, ...] = ()
    v_grid: np.ndarray | None = None

    def __post_init__(self):
        for name in ("agent_utility", "principal_utility"):
            val = getattr(self, name)
            if isinstance(val, str):
                object.__setattr__(self, name, parse_expr(val))
        object.__setattr__(self, "x_grid", np.atleast_1d(np.asarray(self.x_grid, dtype=float)))
        object.__setattr__(self, "y_grid", np.atleast_1d(np.asarray(self.y_grid, dtype=float)))
        if self.u_grid is None:
            object.__setattr__(self, "u_grid", self.reservation + np.linspace(0.0, U_SPAN, U_POINTS))
        else:
            object.__setattr__(self, "u_grid", np.atleast_1d(np.asarray(self.u_grid, dtype=float)))
        if not self.reservations:
            object.__setattr__(self, "reservations", (float(self.reservation),))
        if self.v_grid is None:
            object.__setattr__(self, "v_grid", np.linspace(*self.bracket, 11))
        lo, hi = self.bracket
        if not lo < hi:
            raise ValueError(f"empty bracket {self.bracket}")

    def agent(self, x, y, v) -> np.ndarray:
        return _eval(self.agent_utility, x, y, v)

    def principal(self, x, y, v) -> np.ndarray:
        return _eval(self.principal_utility, x, y, v)

    def with_reservation(self, u: float) -> "PAProblem":
        shift = float(u) - self.reservation
        return PAProblem(self.x_grid, self.y_grid, self.agent_utility, self.principal_utility,
                         float(u), self.u_grid + shift, self.bracket, (float(u),), self.v_grid)


def _eval(e: Expr, x, y, v) -> np.ndarray:
    x, y, v = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, v)))
    return np.broadcast_to(np.asarray(e.evaluate({"x": x, "y": y, "v": v}), dtype=float), x.shape)


def check_pa(pa: PAProblem) -> Report:
    """Sampled monotonicity in v on the bracket for every grid cell."""
    rep = Report("pa-invariants")
    x, y = np.meshgrid(pa.x_grid, pa.y_grid, indexing="ij")
    v = np.linspace(*pa.bracket, MONO_SAMPLES)
    X, Y, V = x[..., None], y[..., None], v
    da = np.diff(pa.agent(X, Y, V), axis=-1)
    dp = np.diff(pa.principal(X, Y, V), axis=-1)
    agent_ok = bool(np.all(da <= -MONO_TOL))
    principal_ok = bool(np.all(dp >= -MONO_TOL))
    rep.record("agent_strictly_decreasing", agent_ok)
    rep.record("principal_increasing", principal_ok)
    for ok, diffs, label, bad in ((agent_ok, da, "agent utility", da > -MONO_TOL),
                                  (principal_ok, dp, "principal utility", dp < -MONO_TOL)):
        if not ok:
            i, j, k = np.argwhere(bad)[0]
            rep.fail(label, "monotonicity in v violated",
                     {"x": pa.x_grid[i], "y": pa.y_grid[j], "v": [v[k], v[k + 1]], "diff": diffs[i, j, k]})
    return rep


def pa_inverse_array(pa: PAProblem, y, x, u) -> np.ndarray:
    """Vectorised transfer v with agent_utility(x, y, v) = u."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _bisect(pa, y, x, u)


def _bisect(pa: PAProblem, y, x, u) -> np.ndarray:
    x, y, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, u)))
    lo = np.full(x.shape, pa.bracket[0])
    hi = np.full(x.shape, pa.bracket[1])
    for _ in range(MAX_EXPANSIONS + 1):
        f_lo = pa.agent(x, y, lo) - u
        f_hi = pa.agent(x, y, hi) - u
        short = (f_lo < 0) | (f_hi > 0)
        if not short.any():
            break
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        lo = np.where(short, mid - 2 * half, lo)
        hi = np.where(short, mid + 2 * half, hi)
    else:
        raise BracketError(f"no bracket within {MAX_EXPANSIONS} expansions")
    v = (lo + hi) / 2
    done = np.zeros(x.shape, dtype=bool)
    for _ in range(MAX_ITER):
        v = np.where(done, v, (lo + hi) / 2)
        f = pa.agent(x, y, v) - u
        done |= (np.abs(f) <= RESIDUAL_TOL) | (hi - lo <= 4 * np.spacing(np.maximum(np.abs(lo), np.abs(hi))))
        if done.all():
            break
        lo = np.where(~done & (f > 0), v, lo)
        hi = np.where(~done & (f < 0), v, hi)
    return v


def pa_inverse(pa: PAProblem, y: float, x: float, u: float) -> float:
    return float(pa_inverse_array(pa, y, x, u))


@dataclass(frozen=True)
class PASolution:
    x: float
    y: float
    u_agent: float
    transfer: float
    value: float
    index: tuple[int, int, int]


def pa_solve(pa: PAProblem) -> PASolution:
    """Best (x, y, u) on the grids with u >= reservation; ties go to the lowest index."""
    u = pa.u_grid[pa.u_grid >= pa.reservation]
    if u.size == 0:
        raise ValueError("no agent utility level meets the reservation")
    X, Y, U = np.meshgrid(pa.x_grid, pa.y_grid, u, indexing="ij")
    V = pa_inverse_array(pa, Y, X, U)
    values = pa.principal(X, Y, V)
    k = int(np.argmax(values))
    idx = np.unravel_index(k, values.shape)
    return PASolution(float(X[idx]), float(Y[idx]), float(U[idx]), float(V[idx]), float(values[idx]),
                      tuple(int(i) for i in idx))


@dataclass(frozen=True, eq=False)
class PAPolys:
    principal: Poly
    agent: Poly

    @property
    def pairing(self):
        """The identity on agent ⊗ principal; its content is the round trip of the inverse."""
        return identity(poly_tensor(self.agent, self.principal))


def _key(v: float) -> str:
    return f"{v:.6g}"


def agent_best_responses(pa: PAProblem, v: float) -> dict:
    """Per type x: the grid decision maximising the Agent's utility at transfer v, and the Principal's payoff."""
    X, Y = np.meshgrid(pa.x_grid, pa.y_grid, indexing="ij")
    ua = pa.agent(X, Y, v)
    best = np.argmax(ua, axis=1)
    out = {}
    for i, x in enumerate(pa.x_grid):
        y = pa.y_grid[best[i]]
        out[float(x)] = (float(y), float(pa.principal(x, y, v)))
    return out


def build_pa_polys(pa: PAProblem) -> PAPolys:
    principal_pos, principal_load = {}, {}
    for r in pa.reservations:
        pos = _key(r)
        principal_pos[pos] = ("optimum",)
        principal_load[pos, "optimum"] = pa_solve(pa.with_reservation(r))
    agent_pos, agent_load = {}, {}
    for v in pa.v_grid:
        pos = _key(v)
        agent_pos[pos] = ("response",)
        agent_load[pos, "response"] = agent_best_responses(pa, float(v))
    return PAPolys(Poly("principal", principal_pos, principal_load), Poly("agent", agent_pos, agent_load))


def check_round_trip(pa: PAProblem, xs: Sequence[float], ys: Sequence[float], us: Sequence[float],
                     vs: Sequence[float] | None = None, tol: float = 1e-8) -> Report:
    """Both defining identities of the inverse on a product sample."""
    rep = Report("pa-round-trip")
    X, Y, U = np.meshgrid(xs, ys, us, indexing="ij")
    res = np.abs(pa.agent(X, Y, pa_inverse_array(pa, Y, X, U)) - U)
    rep.record("agent_round_trip", bool(res.max() <= tol), {"max_residual": res.max(), "samples": res.size})
    if res.max() > tol:
        k = np.unravel_index(np.argmax(res), res.shape)
        rep.fail("agent_round_trip", "residual above tolerance", {"x": X[k], "y": Y[k], "u": U[k], "residual": res[k]})
    vs = us if vs is None else vs
    X, Y, V = np.meshgrid(xs, ys, vs, indexing="ij")
    back = np.abs(pa_inverse_array(pa, Y, X, pa.agent(X, Y, V)) - V)
    rep.record("transfer_round_trip", bool(back.max() <= tol), {"max_error": back.max()})
    if back.max() > tol:
        k = np.unravel_index(np.argmax(back), back.shape)
        rep.fail("transfer_round_trip", "transfer not recovered", {"x": X[k], "y": Y[k], "v": V[k], "error": back[k]})
    return rep


def pa_from_dict(d: Mapping) -> PAProblem:
    def grid(entry):
        if isinstance(entry, Mapping):
            return np.linspace(entry["min"], entry["max"], int(entry["points"]))
        return np.asarray(entry, dtype=float)

    return PAProblem(
        grid(d["x"]), grid(d["y"]), d["agent_utility"], d["principal_utility"],
        float(d["reservation"]),
        grid(d["u"]) if "u" in d else None,
        tuple(d.get("bracket", (-10.0, 10.0))),
        tuple(float(r) for r in d.get("reservations", ())),
        grid(d["v"]) if "v" in d else None,
    )


def load_pa(path) -> PAProblem:
    return pa_from_dict(json.loads(Path(path).read_text()))
