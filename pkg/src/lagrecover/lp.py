"""Extended vertex LP of the convexified problem and its dual.

The LP has one weight ``p_ij`` per vertex ``x_i^j`` of conv(X_i), one
slack ``q_k`` per coupling row, and one convexity row per subsystem::

    minimize    sum_ij (c_i' x_i^j) p_ij
    subject to  sum_ij (H_i x_i^j) p_ij + q = b
                sum_j p_ij = 1                 for every i
                p, q >= 0

Its optimal value equals the best Lagrangian dual bound, and its row duals
give the dual optimizer ``lam`` (coupling rows) and ``z_i`` (convexity rows).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInstance
from .inner import subsystem_vertices
from .model import Instance, PevBattery
from .simplex import PIVOT_TOL, dense_simplex

COMPLEMENTARITY_TOL = 1e-9


@dataclass
class ExtendedLp:
    A: np.ndarray
    rhs: np.ndarray
    cost: np.ndarray
    vertices: list  # per subsystem, (|J_i|, n_i) array
    owner: np.ndarray  # subsystem index per p column
    offsets: np.ndarray  # first p column of each subsystem, plus total
    m: int

    @property
    def n_weights(self) -> int:
        return int(self.offsets[-1])

    def columns_of(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))


@dataclass
class LpSolution:
    p: np.ndarray
    q: np.ndarray
    lam: np.ndarray
    z: np.ndarray
    objective: float
    dual_objective: float
    basis: list
    reduced_slacks: np.ndarray  # s_ij for every p column
    iterations: int
    vertex_flag: bool = True

    @property
    def duals(self) -> np.ndarray:
        return np.concatenate([self.lam, self.z])


def build_extended_lp(inst: Instance) -> ExtendedLp:
    """Assemble the vertex LP from the enumerated vertices of every subsystem."""
    verts, cols_A, cols_c, owner = [], [], [], []
    m, n_sub = inst.m, inst.size
    for i, (sub, H) in enumerate(zip(inst.subsystems, inst.coupling)):
        if isinstance(sub, PevBattery):
            raise InvalidInstance("the extended LP needs enumerable subsystems")
        V = subsystem_vertices(sub)
        verts.append(V)
        block = np.zeros((m + n_sub, len(V)))
        block[:m] = H @ V.T
        block[m + i] = 1.0
        cols_A.append(block)
        cols_c.append(V @ sub.cost)
        owner.extend([i] * len(V))
    slack = np.vstack([np.eye(m), np.zeros((n_sub, m))])
    A = np.hstack(cols_A + [slack]) if cols_A else slack
    cost = np.concatenate(cols_c + [np.zeros(m)])
    rhs = np.concatenate([inst.resource, np.ones(n_sub)])
    offsets = np.concatenate([[0], np.cumsum([len(V) for V in verts])]).astype(int)
    return ExtendedLp(A=A, rhs=rhs, cost=cost, vertices=verts, owner=np.array(owner, dtype=int),
                      offsets=offsets, m=m)


def simplex_solve(lp: ExtendedLp, tol: float = PIVOT_TOL) -> LpSolution:
    """Optimal basic solution with row duals (Bland's rule)."""
    res = dense_simplex(lp.A, lp.rhs, lp.cost, tol=tol)
    m, nw = lp.m, lp.n_weights
    lam = -res.y[:m]
    z = res.y[m:]
    # clean round-off on multipliers that must be nonnegative
    lam[np.abs(lam) < 1e-12] = 0.0
    return LpSolution(
        p=res.x[:nw],
        q=res.x[nw:],
        lam=lam,
        z=z,
        objective=res.objective,
        dual_objective=float(lp.rhs @ res.y),
        basis=res.basis,
        reduced_slacks=res.reduced_costs[:nw],
        iterations=res.iterations,
    )


def solve_extended(inst: Instance) -> tuple[ExtendedLp, LpSolution]:
    lp = build_extended_lp(inst)
    return lp, simplex_solve(lp)


def recover_xlp(lp: ExtendedLp, sol: LpSolution) -> list:
    """x_i = sum_j p_ij x_i^j for every subsystem."""
    out = []
    for i, V in enumerate(lp.vertices):
        w = sol.p[lp.columns_of(i)]
        x = w @ V
        near = np.abs(x - np.round(x)) < 1e-12
        x[near] = np.round(x[near])
        out.append(x)
    return out


def fractional_subsystems(lp: ExtendedLp, sol: LpSolution, tol: float = 1e-9) -> list:
    """Subsystems whose LP weight is spread over more than one vertex."""
    return [i for i in range(len(lp.vertices)) if np.count_nonzero(sol.p[lp.columns_of(i)] > tol) > 1]


def _carry_caches(old, new):
    for key in ("_points", "_vertices"):
        if key in old.__dict__:
            new.__dict__[key] = old.__dict__[key]
    return new


def perturb_costs(inst: Instance, magnitude: float, seed=None) -> Instance:
    """Add i.i.d. uniform[-magnitude, magnitude] noise to every cost vector."""
    if magnitude < 0:
        raise ValueError("perturbation magnitude must be nonnegative")
    if magnitude == 0:
        return inst
    rng = np.random.default_rng(seed)
    subs = []
    for sub in inst.subsystems:
        noise = rng.uniform(-magnitude, magnitude, size=sub.dim)
        subs.append(_carry_caches(sub, replace(sub, cost=sub.cost + noise)))
    return inst.with_subsystems(subs)


def default_perturbation(inst: Instance) -> float:
    """1e-6 times the largest absolute cost entry."""
    cmax = max((float(np.abs(s.cost).max(initial=0.0)) for s in inst.subsystems), default=0.0)
    return 1e-6 * cmax if cmax > 0 else 1e-6


@dataclass
class ComplementarityReport:
    """Strict complementarity of (p, s) and (q, lam) at an LP optimum.

    ``violations`` lists columns ``(i, j)`` where neither the weight nor
    the reduced slack is positive; ``coupling_violations`` lists rows where
    neither ``q_k`` nor ``lam_k`` is. ``degenerate_basics`` counts basic
    variables sitting at zero (a sign of non-unique duals).
    """

    violations: list = field(default_factory=list)
    coupling_violations: list = field(default_factory=list)
    both_positive: list = field(default_factory=list)
    degenerate_basics: int = 0
    tol: float = COMPLEMENTARITY_TOL

    @property
    def strictly_complementary(self) -> bool:
        return not (self.violations or self.coupling_violations)

    @property
    def degenerate(self) -> bool:
        return not self.strictly_complementary or self.degenerate_basics > 0

    def to_dict(self) -> dict:
        return {
            "strictly_complementary": self.strictly_complementary,
            "degenerate": self.degenerate,
            "violations": [list(v) for v in self.violations],
            "coupling_violations": list(self.coupling_violations),
            "degenerate_basics": self.degenerate_basics,
        }


def strict_complementarity_check(lp: ExtendedLp, sol: LpSolution, tol: float = COMPLEMENTARITY_TOL) -> ComplementarityReport:
    rep = ComplementarityReport(tol=tol)
    for i, V in enumerate(lp.vertices):
        sl = lp.columns_of(i)
        for j, (p, s) in enumerate(zip(sol.p[sl], sol.reduced_slacks[sl])):
            if p <= tol and s <= tol:
                rep.violations.append((i, j))
            elif p > tol and s > tol:
                rep.both_positive.append((i, j))
    for k in range(lp.m):
        if sol.q[k] <= tol and sol.lam[k] <= tol:
            rep.coupling_violations.append(k)
    x = np.concatenate([sol.p, sol.q])
    rep.degenerate_basics = int(sum(1 for b in sol.basis if abs(x[b]) <= tol))
    return rep
