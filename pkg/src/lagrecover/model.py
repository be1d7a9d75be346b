"""Data model for block-coupled integer programs.

An instance is

    minimize    sum_i c_i' x_i
    subject to  sum_i H_i x_i <= b
                x_i in X_i          for every subsystem i

where each X_i is one of three subsystem kinds: a bounded integer lattice
polytope, an explicit vertex list, or a PEV battery charging model.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Sequence, Union

import numpy as np

from .errors import EmptySubsystem, Infeasible, InvalidInstance, TooLarge

INTEGRALITY_TOL = 1e-9
FEASIBILITY_TOL = 1e-7
ENERGY_TOL = 1e-9
BRUTE_FORCE_CAP = 10**7
ENUMERATION_CAP = 10**6

Assignment = list  # list of per-subsystem points (1-D float arrays)


def _as_float(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        if ndim == 2 and arr.size == 0:
            return arr.reshape(0, 0)
        raise InvalidInstance(f"expected a {ndim}-D array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _as_int(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
        raise InvalidInstance("lattice bounds must be finite integers")
    arr = arr.astype(np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LatticePolytope:
    """Integer points x with A x <= d and lower <= x <= upper."""

    A: np.ndarray
    d: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    cost: np.ndarray

    kind: ClassVar[str] = "lattice"

    def __post_init__(self):
        object.__setattr__(self, "A", _as_float(self.A, 2))
        object.__setattr__(self, "d", _as_float(self.d, 1))
        object.__setattr__(self, "lower", _as_int(self.lower))
        object.__setattr__(self, "upper", _as_int(self.upper))
        object.__setattr__(self, "cost", _as_float(self.cost, 1))

    @property
    def dim(self) -> int:
        return len(self.cost)

    @property
    def box_size(self) -> int:
        widths = np.maximum(self.upper - self.lower + 1, 0)
        return int(np.prod(widths, dtype=object))

    def points(self, cap: int = ENUMERATION_CAP) -> np.ndarray:
        """All feasible lattice points in lexicographic order, shape (p, n)."""
        cached = self.__dict__.get("_points")
        if cached is not None:
            return cached
        if self.box_size > cap:
            raise TooLarge(f"lattice box has {self.box_size} points (cap {cap})")
        axes = [np.arange(lo, hi + 1) for lo, hi in zip(self.lower, self.upper)]
        grid = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, self.dim)
        if self.A.size:
            ok = np.all(grid @ self.A.T <= self.d + INTEGRALITY_TOL, axis=1)
            grid = grid[ok]
        if len(grid) == 0:
            raise EmptySubsystem("lattice polytope has no integer point")
        grid.setflags(write=False)
        self.__dict__["_points"] = grid
        return grid

    def contains(self, x: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x - np.round(x)) > INTEGRALITY_TOL):
            return False
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            return False
        if self.A.size and np.any(self.A @ x > self.d + tol):
            return False
        return True


@dataclass(frozen=True, eq=False)
class VertexList:
    """Subsystem given by an explicit list of points (assumed to be vert(X_i))."""

    points_: np.ndarray
    cost: np.ndarray

    kind: ClassVar[str] = "vertices"

    def __post_init__(self):
        pts = _as_float(self.points_, 2)
        order = np.lexsort(pts.T[::-1]) if len(pts) else np.arange(0)
        pts = np.ascontiguousarray(pts[order])
        pts.setflags(write=False)
        object.__setattr__(self, "points_", pts)
        object.__setattr__(self, "cost", _as_float(self.cost, 1))

    @property
    def dim(self) -> int:
        return len(self.cost)

    def points(self, cap: int = ENUMERATION_CAP) -> np.ndarray:
        if len(self.points_) > cap:
            raise TooLarge(f"vertex list has {len(self.points_)} points (cap {cap})")
        return self.points_

    def contains(self, x: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.any(np.all(np.abs(self.points_ - x) <= tol, axis=1)))


@dataclass(frozen=True, eq=False)
class PevBattery:
    """One plug-in EV battery over N charging slots.

    The decision vector is ``u`` (length N) for charge-only batteries and
    ``(u, v)`` (length 2N) when vehicle-to-grid discharging is enabled.
    Power in kW, energies in kWh, ``dt`` in hours, price perturbations in
    EUR/MWh. ``zeta`` is the conversion loss: charging efficiency is
    ``1 - zeta`` and discharging drains ``1 + zeta`` per unit delivered.
    """

    power: float
    e_init: float
    e_ref: float
    e_min: float
    e_max: float
    zeta: float
    n_steps: int
    dt: float
    v2g: bool
    cost: np.ndarray
    delta_u: np.ndarray = None
    delta_v: np.ndarray = None

    kind: ClassVar[str] = "pev"

    def __post_init__(self):
        for name in ("power", "e_init", "e_ref", "e_min", "e_max", "zeta", "dt"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "v2g", bool(self.v2g))
        object.__setattr__(self, "cost", _as_float(self.cost, 1))
        zeros = np.zeros(self.n_steps)
        for name in ("delta_u", "delta_v"):
            val = getattr(self, name)
            object.__setattr__(self, name, _as_float(zeros if val is None else val, 1))

    @property
    def dim(self) -> int:
        return 2 * self.n_steps if self.v2g else self.n_steps

    @property
    def eta_charge(self) -> float:
        return 1.0 - self.zeta

    @property
    def eta_discharge(self) -> float:
        return 1.0 + self.zeta

    @property
    def charge_step(self) -> float:
        """Energy gained by one charging slot (kWh)."""
        return self.power * self.dt * self.eta_charge

    @property
    def discharge_step(self) -> float:
        """Energy drained by one discharging slot (kWh)."""
        return self.power * self.dt * self.eta_discharge

    @property
    def k_min(self) -> int:
        """Fewest charging slots reaching ``e_ref`` without discharging."""
        need = (self.e_ref - self.e_init) / self.charge_step
        return max(0, math.ceil(need - ENERGY_TOL))

    @property
    def k_max(self) -> int:
        """Most charging slots before ``e_max`` is exceeded (no discharging)."""
        room = (self.e_max - self.e_init) / self.charge_step
        return min(self.n_steps, max(-1, math.floor(room + ENERGY_TOL)))

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        n = self.n_steps
        if self.v2g:
            return x[:n], x[n:]
        return x, np.zeros(n)

    def soc_trajectory(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """SoC e[0..N] under schedule (u, v)."""
        delta = self.charge_step * np.asarray(u) - self.discharge_step * np.asarray(v)
        return self.e_init + np.concatenate(([0.0], np.cumsum(delta)))

    def contains(self, x: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            return False
        if np.any(np.abs(x - np.round(x)) > INTEGRALITY_TOL) or np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        u, v = self.split(np.round(x))
        if np.any(u + v > 1):
            return False
        e = self.soc_trajectory(u, v)
        etol = max(tol, ENERGY_TOL)
        if np.any(e < self.e_min - etol) or np.any(e > self.e_max + etol):
            return False
        return bool(e[-1] >= self.e_ref - etol)


Subsystem = Union[LatticePolytope, VertexList, PevBattery]


@dataclass(frozen=True, eq=False)
class Instance:
    """Coupled program: subsystems, per-subsystem coupling blocks, resource vector.

    ``coupling[i]`` is the m x n_i block H_i. ``meta`` carries free-form
    annotations (for example ``{"blocks": [[...], ...]}`` overriding the
    per-row subsystem sets used by block contraction).
    """

    subsystems: tuple
    coupling: tuple
    resource: np.ndarray
    meta: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "subsystems", tuple(self.subsystems))
        object.__setattr__(self, "resource", _as_float(self.resource, 1))
        m = len(self.resource)
        blocks = []
        for H in self.coupling:
            H = np.array(H, dtype=float)
            if H.ndim == 1 and m == 1:
                H = H.reshape(1, -1)
            if H.ndim != 2:
                raise InvalidInstance(f"coupling block must be 2-D, got shape {H.shape}")
            H.setflags(write=False)
            blocks.append(H)
        object.__setattr__(self, "coupling", tuple(blocks))

    @property
    def m(self) -> int:
        return len(self.resource)

    @property
    def size(self) -> int:
        return len(self.subsystems)

    @property
    def dims(self) -> list[int]:
        return [s.dim for s in self.subsystems]

    @cached_property
    def uniform_dim(self) -> int | None:
        dims = set(self.dims)
        return dims.pop() if len(dims) == 1 else None

    @cached_property
    def stacked_coupling(self) -> np.ndarray | None:
        """H blocks as an (|I|, m, n) array when all subsystems share n."""
        if self.uniform_dim is None:
            return None
        return np.stack(self.coupling) if self.coupling else np.zeros((0, self.m, 0))

    @cached_property
    def stacked_costs(self) -> np.ndarray | None:
        if self.uniform_dim is None:
            return None
        return np.stack([s.cost for s in self.subsystems])

    @cached_property
    def full_coupling(self) -> np.ndarray:
        """The m x sum(n_i) matrix H = [H_1, ..., H_|I|]."""
        if not self.coupling:
            return np.zeros((self.m, 0))
        return np.hstack(self.coupling)

    def with_resource(self, resource) -> Instance:
        return Instance(self.subsystems, self.coupling, np.asarray(resource, dtype=float), dict(self.meta))

    def with_subsystems(self, subsystems) -> Instance:
        return Instance(tuple(subsystems), self.coupling, self.resource, dict(self.meta))


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


def validate_instance(inst: Instance, enumeration_cap: int = ENUMERATION_CAP) -> ValidationReport:
    """List violations of the instance invariants. Empty report means well-formed."""
    rep = ValidationReport()
    m = inst.m
    if len(inst.coupling) != len(inst.subsystems):
        rep.violations.append(
            f"dimension mismatch: {len(inst.coupling)} coupling blocks for {len(inst.subsystems)} subsystems"
        )
    for i, (sub, H) in enumerate(zip(inst.subsystems, inst.coupling)):
        if H.shape != (m, sub.dim):
            rep.violations.append(f"dimension mismatch: H_{i} has shape {H.shape}, expected ({m}, {sub.dim})")
        if not np.all(np.isfinite(H)):
            rep.violations.append(f"H_{i} has non-finite entries")
        if not np.all(np.isfinite(sub.cost)):
            rep.violations.append(f"subsystem {i}: non-finite cost")
        rep.violations.extend(f"subsystem {i}: {msg}" for msg in _subsystem_violations(sub, enumeration_cap))
    if not np.all(np.isfinite(inst.resource)):
        rep.violations.append("resource vector has non-finite entries")
    if m >= inst.size:
        rep.warnings.append(f"m={m} is not smaller than the number of subsystems ({inst.size})")
    return rep


def _subsystem_violations(sub, cap: int) -> list[str]:
    out = []
    if isinstance(sub, LatticePolytope):
        n = sub.dim
        if sub.lower.shape != (n,) or sub.upper.shape != (n,):
            out.append("dimension mismatch: bounds length differs from cost length")
            return out
        if sub.A.size and (sub.A.shape[1] != n or sub.A.shape[0] != len(sub.d)):
            out.append(f"dimension mismatch: A has shape {sub.A.shape}, d has length {len(sub.d)}")
            return out
        if np.any(sub.lower > sub.upper):
            out.append("empty bounding box (lower > upper)")
            return out
        if sub.box_size <= cap:
            try:
                sub.points(cap)
            except EmptySubsystem:
                out.append("no feasible lattice point")
    elif isinstance(sub, VertexList):
        pts = sub.points_
        if pts.ndim != 2 or len(pts) == 0:
            out.append("vertex list is empty")
        elif pts.shape[1] != sub.dim:
            out.append(f"dimension mismatch: points have {pts.shape[1]} coordinates, cost has {sub.dim}")
        elif len(np.unique(pts, axis=0)) != len(pts):
            out.append("vertex list has duplicate points")
    elif isinstance(sub, PevBattery):
        if len(sub.cost) != sub.dim:
            out.append(f"dimension mismatch: cost length {len(sub.cost)}, expected {sub.dim}")
        if not sub.e_min <= sub.e_init <= sub.e_max:
            out.append("bound violation: e_init outside [e_min, e_max]")
        if not sub.e_min <= sub.e_ref <= sub.e_max:
            out.append("bound violation: e_ref outside [e_min, e_max]")
        if sub.power <= 0 or sub.dt <= 0 or sub.n_steps <= 0:
            out.append("power, dt and n_steps must be positive")
        if not 0 <= sub.zeta < 1:
            out.append("zeta must lie in [0, 1)")
    else:
        out.append(f"unknown subsystem type {type(sub).__name__}")
    return out


def _check_dims(inst: Instance, asg) -> None:
    if len(asg) != inst.size:
        raise InvalidInstance(f"assignment has {len(asg)} blocks, instance has {inst.size} subsystems")
    for i, (sub, x) in enumerate(zip(inst.subsystems, asg)):
        if np.shape(x) != (sub.dim,):
            raise InvalidInstance(f"x_{i} has shape {np.shape(x)}, expected ({sub.dim},)")


def evaluate_objective(inst: Instance, asg) -> float:
    """sum_i c_i' x_i, summed in subsystem order."""
    _check_dims(inst, asg)
    total = 0.0
    for sub, x in zip(inst.subsystems, asg):
        total += float(sub.cost @ np.asarray(x, dtype=float))
    return total


def coupling_usage(inst: Instance, asg) -> np.ndarray:
    """sum_i H_i x_i, summed in subsystem order."""
    _check_dims(inst, asg)
    if isinstance(asg, np.ndarray) and inst.stacked_coupling is not None:
        return np.einsum("imn,in->m", inst.stacked_coupling, asg)
    total = np.zeros(inst.m)
    for H, x in zip(inst.coupling, asg):
        total = total + H @ np.asarray(x, dtype=float)
    return total


@dataclass
class FeasibilityReport:
    slack: np.ndarray
    membership: list
    tol: float

    @property
    def max_violation(self) -> float:
        return float(max(0.0, -np.min(self.slack))) if len(self.slack) else 0.0

    @property
    def coupling_ok(self) -> bool:
        return bool(np.all(self.slack >= -self.tol))

    @property
    def members_ok(self) -> bool:
        return all(self.membership)

    @property
    def feasible(self) -> bool:
        return self.coupling_ok and self.members_ok

    def __bool__(self) -> bool:
        return self.feasible


def check_feasibility(inst: Instance, asg, tol: float = FEASIBILITY_TOL) -> FeasibilityReport:
    """Per-row coupling slack b - sum H_i x_i and per-subsystem membership."""
    _check_dims(inst, asg)
    slack = inst.resource - coupling_usage(inst, asg)
    members = [bool(sub.contains(x, tol)) for sub, x in zip(inst.subsystems, asg)]
    return FeasibilityReport(slack=slack, membership=members, tol=tol)


def brute_force_solve(inst: Instance, cap: int = BRUTE_FORCE_CAP, tol: float = FEASIBILITY_TOL):
    """Exact minimum of (P) by enumerating every combination of subsystem points.

    Ties are broken by the first combination in lexicographic index order.
    Returns ``(objective, assignment)``.
    """
    point_sets = []
    for sub in inst.subsystems:
        if isinstance(sub, PevBattery):
            raise TooLarge("PEV subsystems are not enumerable by brute force")
        point_sets.append(sub.points())
    total = 1
    for pts in point_sets:
        total *= len(pts)
    if total > cap:
        raise TooLarge(f"{total} combinations exceed cap {cap}")

    costs = [pts @ sub.cost for pts, sub in zip(point_sets, inst.subsystems)]
    usages = [pts @ H.T for pts, H in zip(point_sets, inst.coupling)]

    # split: outer subsystems by itertools, an inner suffix by broadcasting
    n = inst.size
    split, inner_size = n, 1
    while split > 0 and inner_size * len(point_sets[split - 1]) <= 200_000:
        split -= 1
        inner_size *= len(point_sets[split])

    inner_cost = np.zeros(1)
    inner_use = np.zeros((1, inst.m))
    for j in range(split, n):
        inner_cost = (inner_cost[:, None] + costs[j][None, :]).reshape(-1)
        inner_use = (inner_use[:, None, :] + usages[j][None, :, :]).reshape(-1, inst.m)

    best_val, best_idx = math.inf, None
    b = inst.resource + tol
    for outer in itertools.product(*(range(len(point_sets[j])) for j in range(split))):
        oc = 0.0
        ou = np.zeros(inst.m)
        for j, k in enumerate(outer):
            oc += costs[j][k]
            ou = ou + usages[j][k]
        ok = np.all(inner_use + ou <= b, axis=1)
        if not ok.any():
            continue
        vals = np.where(ok, inner_cost + oc, np.inf)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_idx = float(vals[k]), (outer, k)
    if best_idx is None:
        raise Infeasible("no combination satisfies the coupling constraints")

    outer, k = best_idx
    inner_sizes = [len(point_sets[j]) for j in range(split, n)]
    inner_idx = np.unravel_index(k, inner_sizes) if inner_sizes else ()
    idx = list(outer) + [int(t) for t in inner_idx]
    asg = [point_sets[j][idx[j]].copy() for j in range(n)]
    return evaluate_objective(inst, asg), asg


def as_assignment(points) -> list:
    """Normalize a stacked (|I|, n) array or a sequence of points to a list of arrays."""
    return [np.asarray(p, dtype=float) for p in points]


def zero_assignment(inst: Instance) -> list:
    return [np.zeros(d) for d in inst.dims]


def stack_if_uniform(points: Sequence) -> np.ndarray | list:
    dims = {len(p) for p in points}
    if len(dims) == 1:
        return np.array(points, dtype=float)
    return list(points)
