"""Feasible primal recovery from the dual of a resource-contracted instance.

The pipeline contracts b by rho, maximizes the contracted dual with
subgradient ascent, and returns the inner minimizers at the best
contracted multipliers. Those are feasible for the original instance at the
exact dual optimum; with finitely many iterations the pipeline re-checks
feasibility and falls back to earlier feasible iterates or extra dual
iterations with smaller steps.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .contraction import ContractionVector, compute_contraction, contract_instance, detect_zero_contraction
from .dual import Constant, ConstantEpochDecay, Diminishing, DualTrace, StopCriteria, subgradient_solve
from .errors import InvalidInstance, NoSlater, RepairFailed
from .inner import adjusted_prices, inner_solve, solve_inner_all, vertex_minimizers
from .model import (
    FEASIBILITY_TOL,
    Instance,
    PevBattery,
    as_assignment,
    check_feasibility,
    coupling_usage,
    evaluate_objective,
)

COINCIDENCE_TOL = 1e-7
MAX_EXTENSIONS = 5


@dataclass
class RecoveredSolution:
    assignment: list
    objective: float
    feasible_for_original: bool
    max_violation: float
    dual_bound: float | None = None
    dual_bound_kind: str | None = None  # "original" or "contracted" (not a valid lower bound)
    source: str = "best_dual"
    coincidence_count: int | None = None

    @property
    def gap(self) -> float | None:
        if self.dual_bound is None:
            return None
        return self.objective - self.dual_bound

    @property
    def relative_gap(self) -> float | None:
        if self.dual_bound is None or self.dual_bound == 0:
            return None
        return self.gap / abs(self.dual_bound)


def recover_primal(original: Instance, contracted_result, dual_bound=None, dual_bound_kind=None,
                   tol: float = FEASIBILITY_TOL) -> RecoveredSolution:
    """Check the inner assignment at the best contracted multipliers against the original b.

    ``contracted_result`` is ``(lam, assignment)``; if the assignment is
    ``None`` it is recomputed from ``lam`` on ``original`` (the inner
    problems do not depend on b).
    """
    lam, asg = contracted_result
    if asg is None:
        asg, _ = solve_inner_all(original, adjusted_prices(original, lam))
    asg = as_assignment(asg)
    rep = check_feasibility(original, asg, tol)
    return RecoveredSolution(
        assignment=asg,
        objective=evaluate_objective(original, asg),
        feasible_for_original=rep.feasible,
        max_violation=rep.max_violation,
        dual_bound=dual_bound,
        dual_bound_kind=dual_bound_kind,
    )


def zero_contraction_repair(inst: Instance, asg, tol: float = FEASIBILITY_TOL) -> list:
    """Zero out subsystems until the coupling holds.

    Each round picks the most violated row and zeroes the subsystem whose
    contribution to it is largest. Raises ``RepairFailed`` after |I| rounds.
    """
    asg = [np.array(x, dtype=float) for x in as_assignment(asg)]
    for sub in inst.subsystems:
        if not sub.contains(np.zeros(sub.dim)):
            raise RepairFailed("zero-out repair needs 0 in every subsystem")
    usage = coupling_usage(inst, asg)
    for _ in range(inst.size + 1):
        viol = usage - inst.resource
        k = int(np.argmax(viol))
        if viol[k] <= tol:
            return asg
        contrib = np.array([float(H[k] @ x) for H, x in zip(inst.coupling, asg)])
        i = int(np.argmax(contrib))
        if contrib[i] <= 0:
            break
        usage = usage - inst.coupling[i] @ asg[i]
        asg[i] = np.zeros_like(asg[i])
    raise RepairFailed("coupling still violated after zeroing every contributing subsystem")


def count_coincident(x_dual, x_lp, tol: float = COINCIDENCE_TOL) -> int:
    """Number of subsystems where the two assignments agree in the inf-norm."""
    x_dual, x_lp = as_assignment(x_dual), as_assignment(x_lp)
    if len(x_dual) != len(x_lp):
        raise InvalidInstance("assignments have different lengths")
    return sum(1 for a, b in zip(x_dual, x_lp) if np.max(np.abs(a - b), initial=0.0) <= tol)


def gamma(inst: Instance) -> tuple[np.ndarray, float]:
    """Per-subsystem cost spread max c'x - min c'x over X_i, and its maximum."""
    costs = [s.cost for s in inst.subsystems]
    if inst.uniform_dim is not None:
        costs = np.array(costs)
        neg = -costs
    else:
        neg = [-c for c in costs]
    _, lo = solve_inner_all(inst, costs)
    _, nhi = solve_inner_all(inst, neg)
    g = np.maximum(-nhi - lo, 0.0)
    return g, float(g.max(initial=0.0))


def default_slater_point(inst: Instance) -> list:
    """A point of prod conv(X_i) with small coupling usage.

    PEV batteries spread their mandatory charge uniformly, ``u = K_min / N``
    in every slot (an average of feasible schedules). Other subsystems use
    the minimizer of the summed coupling rows.
    """
    out = []
    for sub, H in zip(inst.subsystems, inst.coupling):
        if isinstance(sub, PevBattery):
            u = np.full(sub.n_steps, sub.k_min / sub.n_steps)
            out.append(np.concatenate([u, np.zeros(sub.n_steps)]) if sub.v2g else u)
        else:
            out.append(inner_solve(sub, H.sum(axis=0)).point)
    return out


def slater_margin(inst: Instance, point) -> float:
    """zeta = min_k (b - sum_i H_i x_i)_k / |I|; nonpositive means no margin."""
    if inst.size == 0 or inst.m == 0:
        return float("inf")
    slack = inst.resource - coupling_usage(inst, as_assignment(point))
    return float(slack.min() / inst.size)


@dataclass
class BoundReport:
    gammas: np.ndarray
    max_gamma: float
    m: int
    rho_inf: float
    zeta: float | None
    duality_gap_bound: float
    performance_bound: float | None

    def to_dict(self) -> dict:
        return {
            "gamma": [float(g) for g in self.gammas],
            "max_gamma": self.max_gamma,
            "m": self.m,
            "rho_inf": self.rho_inf,
            "zeta": self.zeta,
            "duality_gap_bound": self.duality_gap_bound,
            "performance_bound": self.performance_bound,
        }


def bounds(inst: Instance, rho=None, zeta: float | None = None, strict: bool = False) -> BoundReport:
    """Duality-gap bound m*max(gamma) and performance bound (m + |rho|_inf/zeta)*max(gamma).

    The performance bound is ``None`` when ``zeta <= 0`` (or missing and
    ``rho != 0``); with ``strict=True`` that case raises ``NoSlater``.
    """
    g, gmax = gamma(inst)
    rho = np.zeros(inst.m) if rho is None else np.asarray(getattr(rho, "rho", rho), dtype=float)
    rho_inf = float(np.abs(rho).max(initial=0.0))
    perf = None
    if zeta is not None and zeta > 0:
        perf = (inst.m + rho_inf / zeta) * gmax
    elif rho_inf == 0:
        perf = inst.m * gmax
    elif strict:
        raise NoSlater(f"Slater margin {zeta} is not positive")
    return BoundReport(gammas=g, max_gamma=gmax, m=inst.m, rho_inf=rho_inf, zeta=zeta,
                       duality_gap_bound=inst.m * gmax, performance_bound=perf)


def all_selections_feasible(original: Instance, contracted: Instance, lam, cap: int = 4096,
                            tol: float = FEASIBILITY_TOL) -> tuple[bool, int]:
    """Check every vertex selection from the inner sets at ``lam`` against the original b.

    Returns ``(all_feasible, n_checked)``; at most ``cap`` combinations.
    """
    prices = adjusted_prices(contracted, lam)
    choices = [vertex_minimizers(sub, p) for sub, p in zip(contracted.subsystems, prices)]
    n = 0
    for combo in itertools.islice(itertools.product(*choices), cap):
        n += 1
        if not check_feasibility(original, list(combo), tol).feasible:
            return False, n
    return True, n


# ------------------------------------------------------------------ pipeline


@dataclass
class SolveResult:
    recovered: RecoveredSolution
    contraction: ContractionVector
    trace: DualTrace
    original_trace: DualTrace | None
    lam: np.ndarray
    extensions: int = 0
    wall_time: float = 0.0
    timings: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.trace.iterations


def _shrink(rule, trace: DualTrace, factor: float):
    last = trace.steps[-1] if trace.steps else 1.0
    if isinstance(rule, Diminishing):
        return Diminishing(rule.a * factor)
    if isinstance(rule, ConstantEpochDecay):
        return replace(rule, c0=last * factor)
    return Constant(last * factor)


class _Incumbent:
    """Best-dual iterate whose inner point is feasible for the original b."""

    def __init__(self, original: Instance, contracted: Instance, tol: float):
        # subgrad = usage - b_bar, so usage <= b + tol  <=>  subgrad <= rho + tol
        self.limit = original.resource - contracted.resource + tol
        self.value = -np.inf
        self.lam = None
        self.points = None

    def __call__(self, k, lam, ev):
        if ev.value > self.value and np.all(ev.subgrad <= self.limit):
            self.value = ev.value
            self.lam = lam.copy()
            self.points = ev.inner


def solve(
    inst: Instance,
    contraction: str | ContractionVector = "basic",
    rule=None,
    max_iters: int = 500,
    stop: StopCriteria | None = StopCriteria(),
    tol: float = FEASIBILITY_TOL,
    dual_bound: str = "original",
    max_extensions: int = MAX_EXTENSIONS,
    warn: bool = True,
) -> SolveResult:
    """Contract, solve the contracted dual, recover, and certify.

    ``dual_bound`` is ``"original"`` (extra dual solve on the uncontracted
    instance, a valid lower bound on the optimum), ``"contracted"`` (reuse
    the contracted bound; flagged, not a valid certificate) or ``"none"``.
    """
    t0 = time.perf_counter()
    timings = {}
    if isinstance(contraction, ContractionVector):
        rho = contraction
    else:
        if contraction == "zero" and not detect_zero_contraction(inst):
            raise InvalidInstance("zero contraction needs 0 in every X_i and H_i x >= 0")
        rho = compute_contraction(inst, contraction)
    contracted = contract_instance(inst, rho, warn=warn)
    timings["contraction"] = time.perf_counter() - t0

    inc = _Incumbent(inst, contracted, tol)
    lam, trace = subgradient_solve(contracted, rule, max_iters, stop, callback=inc)
    timings["dual"] = time.perf_counter() - t0 - timings["contraction"]

    rec = recover_primal(inst, (lam, trace.best_inner), tol=tol)
    extensions = 0
    current_rule = rule if rule is not None else ConstantEpochDecay()
    last_trace = trace
    while not rec.feasible_for_original and inc.lam is None and extensions < max_extensions:
        extensions += 1
        current_rule = _shrink(current_rule, last_trace, 0.5)
        lam, last_trace = subgradient_solve(contracted, current_rule, max_iters, stop, lam0=lam, callback=inc)
        rec = recover_primal(inst, (lam, last_trace.best_inner), tol=tol)
    if not rec.feasible_for_original and inc.lam is not None:
        lam = inc.lam
        rec = recover_primal(inst, (lam, inc.points), tol=tol)
        rec.source = "feasible_iterate"
    if not rec.feasible_for_original and rho.method == "zero":
        asg = zero_contraction_repair(inst, rec.assignment, tol)
        rec = recover_primal(inst, (lam, asg), tol=tol)
        rec.source = "zero_repair"

    original_trace = None
    if dual_bound == "original":
        t1 = time.perf_counter()
        _, original_trace = subgradient_solve(inst, rule, max_iters, stop)
        rec.dual_bound, rec.dual_bound_kind = original_trace.best_value, "original"
        timings["bound"] = time.perf_counter() - t1
    elif dual_bound == "contracted":
        rec.dual_bound, rec.dual_bound_kind = trace.best_value, "contracted"
    elif dual_bound != "none":
        raise ValueError(f"unknown dual_bound mode {dual_bound!r}")

    return SolveResult(
        recovered=rec,
        contraction=rho,
        trace=trace,
        original_trace=original_trace,
        lam=np.asarray(lam, dtype=float),
        extensions=extensions,
        wall_time=time.perf_counter() - t0,
        timings=timings,
    )
