"""Inner-problem oracles: minimize a linear price over one subsystem.

Every oracle returns a minimizer that is a vertex of conv(X_i). For
enumerable subsystems the tie-break is the lexicographically smallest
minimizer, which is always an extreme point of the minimizer set and hence
of conv(X_i). PEV schedules are 0/1 vectors and therefore always vertices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptySubsystem, Infeasible, InvalidInstance
from .model import ENUMERATION_CAP, Instance, LatticePolytope, PevBattery, VertexList
from .simplex import extreme_points

TIE_TOL = 1e-9


@dataclass
class InnerSolution:
    point: np.ndarray
    value: float
    is_vertex_certified: bool = True


def enumerate_points(sub, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """All points of an enumerable subsystem in lexicographic order."""
    if isinstance(sub, (LatticePolytope, VertexList)):
        return sub.points(cap)
    raise InvalidInstance(f"{type(sub).__name__} is not enumerable")


def subsystem_vertices(sub) -> np.ndarray:
    """vert(X_i) for an enumerable subsystem, in lexicographic order."""
    cached = sub.__dict__.get("_vertices")
    if cached is None:
        pts = enumerate_points(sub)
        cached = pts[extreme_points(pts)]
        cached.setflags(write=False)
        sub.__dict__["_vertices"] = cached
    return cached


def _tie_scale(price: np.ndarray, pts: np.ndarray) -> float:
    return TIE_TOL * max(1.0, float(np.abs(price).max(initial=0.0)) * float(np.abs(pts).max(initial=0.0)))


def _argmin_lex(pts: np.ndarray, price: np.ndarray) -> int:
    vals = pts @ price
    vmin = vals.min()
    ties = np.nonzero(vals <= vmin + _tie_scale(price, pts))[0]
    return int(ties[0])  # points are stored in lexicographic order


def inner_solve(sub, price) -> InnerSolution:
    """Vertex minimizer of ``price' x`` over the subsystem."""
    price = np.asarray(price, dtype=float)
    if price.shape != (sub.dim,):
        raise InvalidInstance(f"price has shape {price.shape}, expected ({sub.dim},)")
    if not np.all(np.isfinite(price)):
        raise InvalidInstance("price must be finite")
    if isinstance(sub, PevBattery):
        N = sub.n_steps
        if sub.v2g:
            sol = dp_v2g_solve(sub, price[:N], -price[N:])
        else:
            sol = greedy_charge_solve(sub, price)
        return sol
    pts = enumerate_points(sub)
    k = _argmin_lex(pts, price)
    x = pts[k].copy()
    return InnerSolution(point=x, value=float(price @ x), is_vertex_certified=True)


def vertex_minimizers(sub, price) -> np.ndarray:
    """The full set vert(X_i) ∩ argmin price' x, as rows."""
    price = np.asarray(price, dtype=float)
    verts = subsystem_vertices(sub)
    vals = verts @ price
    return verts[vals <= vals.min() + _tie_scale(price, verts)]


def linear_range(sub, h) -> tuple[float, float]:
    """(min, max) of ``h' x`` over the subsystem."""
    h = np.asarray(h, dtype=float)
    if not np.any(h):
        return 0.0, 0.0
    lo = inner_solve(sub, h).value
    hi = -inner_solve(sub, -h).value
    return lo, hi


def greedy_charge_solve(sub: PevBattery, slot_prices) -> InnerSolution:
    """Cheapest charge-only schedule: mandatory slots first, then any negative-price slots."""
    prices = np.asarray(slot_prices, dtype=float)
    kmin, kmax = sub.k_min, sub.k_max
    if kmin > sub.n_steps or kmin > kmax:
        raise Infeasible(f"battery needs {kmin} charging slots but at most {kmax} fit")
    u = kernels.greedy_charge_batch(prices[None, :], [kmin], [kmax])[0].astype(float)
    x = np.concatenate([u, np.zeros(sub.n_steps)]) if sub.v2g else u
    return InnerSolution(point=x, value=float(prices @ u))


def dp_v2g_solve(sub: PevBattery, charge_prices, discharge_prices, allow_discharge: bool = True) -> InnerSolution:
    """Exact charge/discharge schedule by dynamic programming.

    Objective is ``sum_k charge_prices[k] u[k] - discharge_prices[k] v[k]``.
    """
    cp = np.asarray(charge_prices, dtype=float)[None, :]
    dp = np.asarray(discharge_prices, dtype=float)[None, :]
    u, v, ok = kernels.dp_v2g_batch(
        cp, dp, [sub.e_init], [sub.e_min], [sub.e_max], [sub.e_ref],
        [sub.charge_step], [sub.discharge_step], allow_discharge,
    )
    if not ok[0]:
        raise Infeasible("no admissible charging schedule")
    u, v = u[0].astype(float), v[0].astype(float)
    x = np.concatenate([u, v]) if sub.v2g else u
    return InnerSolution(point=x, value=float(cp[0] @ u - dp[0] @ v))


# ---------------------------------------------------------------- batched path


def adjusted_prices(inst: Instance, lam) -> np.ndarray | list:
    """c_i + H_i' lam for every subsystem (stacked array when dims are uniform)."""
    lam = np.asarray(lam, dtype=float)
    if inst.stacked_coupling is not None:
        return inst.stacked_costs + np.einsum("imn,m->in", inst.stacked_coupling, lam)
    return [s.cost + H.T @ lam for s, H in zip(inst.subsystems, inst.coupling)]


class _PevGroup:
    """Column arrays for a batch of batteries sharing N and the v2g flag."""

    def __init__(self, idx, subs):
        self.idx = np.asarray(idx)
        self.N = subs[0].n_steps
        self.v2g = subs[0].v2g
        self.kmin = np.array([s.k_min for s in subs], dtype=np.int64)
        self.kmax = np.array([s.k_max for s in subs], dtype=np.int64)
        self.e_init = np.array([s.e_init for s in subs])
        self.e_min = np.array([s.e_min for s in subs])
        self.e_max = np.array([s.e_max for s in subs])
        self.e_ref = np.array([s.e_ref for s in subs])
        self.up = np.array([s.charge_step for s in subs])
        self.down = np.array([s.discharge_step for s in subs])
        bad = (self.kmin > self.N) | (self.kmin > self.kmax)
        if not self.v2g and bad.any():
            raise Infeasible(f"battery {int(self.idx[np.argmax(bad)])} cannot reach e_ref")

    def solve(self, prices: np.ndarray) -> np.ndarray:
        N = self.N
        if not self.v2g:
            return kernels.greedy_charge_batch(prices, self.kmin, self.kmax).astype(float)
        u, v, ok = kernels.dp_v2g_batch(
            prices[:, :N], -prices[:, N:], self.e_init, self.e_min, self.e_max, self.e_ref, self.up, self.down, True
        )
        if not ok.all():
            raise Infeasible(f"battery {int(self.idx[np.argmin(ok)])} has no admissible schedule")
        return np.hstack([u, v]).astype(float)


def _plan(inst: Instance):
    plan = inst.cache.get("inner_plan")
    if plan is None:
        groups: dict = {}
        other = []
        for i, s in enumerate(inst.subsystems):
            if isinstance(s, PevBattery):
                groups.setdefault((s.n_steps, s.v2g), []).append(i)
            else:
                other.append(i)
        pev = [_PevGroup(idx, [inst.subsystems[i] for i in idx]) for idx in groups.values()]
        plan = (pev, other)
        inst.cache["inner_plan"] = plan
    return plan


def solve_inner_all(inst: Instance, prices):
    """Vertex minimizers for every subsystem at the given per-subsystem prices.

    Returns ``(points, values)``; ``points`` is an (|I|, n) array when all
    subsystems share a dimension, otherwise a list of arrays.
    """
    pev, other = _plan(inst)
    uniform = inst.uniform_dim is not None
    if uniform:
        prices = np.asarray(prices, dtype=float).reshape(inst.size, inst.uniform_dim)
        points = np.zeros((inst.size, inst.uniform_dim))
    else:
        points = [None] * inst.size
    for g in pev:
        P = np.array([prices[i] for i in g.idx]) if not uniform else prices[g.idx]
        X = g.solve(P)
        if uniform:
            points[g.idx] = X
        else:
            for row, i in enumerate(g.idx):
                points[i] = X[row]
    for i in other:
        try:
            points[i] = inner_solve(inst.subsystems[i], prices[i]).point
        except EmptySubsystem:
            raise EmptySubsystem(f"subsystem {i} has no feasible point") from None
    if uniform:
        values = np.einsum("in,in->i", prices, points)
    else:
        values = np.array([float(np.dot(p, x)) for p, x in zip(prices, points)])
    return points, values
