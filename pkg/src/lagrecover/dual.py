"""Projected subgradient ascent on the Lagrangian dual of a coupled program."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np

from .inner import adjusted_prices, solve_inner_all
from .model import Instance, coupling_usage


@dataclass(frozen=True)
class Constant:
    c: float


@dataclass(frozen=True)
class ConstantEpochDecay:
    """Step ``c0 * factor**(k // epoch_len)``.

    ``c0=None`` means ``theta / ||g(0)||_inf`` with ``theta`` the price scale
    of :func:`price_scale`, so the first move of lam is about one price unit.
    """

    c0: float | None = None
    factor: float = 0.5
    epoch_len: int = 25


@dataclass(frozen=True)
class Diminishing:
    a: float = 1.0


StepRule = Union[Constant, ConstantEpochDecay, Diminishing]


def step_size(rule: StepRule, k: int) -> float:
    if isinstance(rule, Constant):
        return rule.c
    if isinstance(rule, ConstantEpochDecay):
        if rule.c0 is None:
            raise ValueError("ConstantEpochDecay.c0 is unresolved; pass it explicitly or let subgradient_solve scale it")
        return rule.c0 * rule.factor ** (k // rule.epoch_len)
    if isinstance(rule, Diminishing):
        return rule.a / (1 + k)
    raise TypeError(f"unknown step rule {rule!r}")


def price_scale(inst: Instance) -> float:
    """max |c| / max |H| over all subsystems (1 when either is zero)."""
    cmax = max((float(np.abs(s.cost).max(initial=0.0)) for s in inst.subsystems), default=0.0)
    hmax = max((float(np.abs(H).max(initial=0.0)) for H in inst.coupling), default=0.0)
    return cmax / hmax if cmax > 0 and hmax > 0 else 1.0


def _check_rule(rule: StepRule) -> None:
    bad = (
        (isinstance(rule, Constant) and rule.c <= 0)
        or (isinstance(rule, ConstantEpochDecay) and (
            (rule.c0 is not None and rule.c0 <= 0) or not 0 < rule.factor <= 1 or rule.epoch_len < 1))
        or (isinstance(rule, Diminishing) and rule.a <= 0)
    )
    if bad:
        raise ValueError(f"step rule parameters must be positive: {rule!r}")


@dataclass
class DualEval:
    value: float
    inner: object  # (|I|, n) array or list of points
    subgrad: np.ndarray
    inner_values: np.ndarray


def dual_value(inst: Instance, lam) -> DualEval:
    """d(lam) = -lam'b + sum_i min_x (c_i + H_i' lam)' x, with inner minimizers and subgradient."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (inst.m,):
        raise ValueError(f"multipliers have shape {lam.shape}, expected ({inst.m},)")
    if np.any(lam < 0):
        raise ValueError("multipliers must be nonnegative")
    points, values = solve_inner_all(inst, adjusted_prices(inst, lam))
    value = float(-lam @ inst.resource + np.sum(values))
    subgrad = coupling_usage(inst, points) - inst.resource
    return DualEval(value=value, inner=points, subgrad=subgrad, inner_values=values)


@dataclass
class StopCriteria:
    """Stop once the inner point is feasible and the iterates have settled.

    Feasible means ``max((g)+) <= tol_viol``. Settled means the best dual
    value improved by at most ``tol_obj * max(1, |best|)`` over ``window``
    iterations and the last update moved lam by at most
    ``tol_move * max(1, ||lam||_inf)`` (so oscillation does not count).
    """

    tol_viol: float = 0.0
    tol_obj: float = 1e-7
    window: int = 50
    tol_move: float = 1e-3


@dataclass
class DualTrace:
    lams: list = field(default_factory=list)
    values: list = field(default_factory=list)
    subgrads: list = field(default_factory=list)
    max_violation: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    best_values: list = field(default_factory=list)
    inner: list = field(default_factory=list)
    best_index: int = -1
    best_inner: object = None

    @property
    def iterations(self) -> int:
        return len(self.values)

    @property
    def best_value(self) -> float:
        return self.best_values[-1] if self.best_values else -np.inf

    @property
    def best_lam(self) -> np.ndarray:
        return self.lams[self.best_index]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "dual_value", "best_dual", "max_violation", "step"])
            for k in range(self.iterations):
                w.writerow([k, repr(self.values[k]), repr(self.best_values[k]),
                            repr(self.max_violation[k]), repr(self.steps[k])])


def subgradient_solve(
    inst: Instance,
    rule: StepRule | None = None,
    max_iters: int = 500,
    stop: StopCriteria | None = StopCriteria(),
    lam0=None,
    callback: Callable | None = None,
    store_inner: bool = False,
):
    """Maximize d(lam) over lam >= 0 by lam <- max(0, lam + step_k * g).

    ``callback(k, lam, ev)`` runs after each evaluation. Pass ``stop=None``
    to always run ``max_iters`` iterations. Returns ``(best_lam, trace)``.
    """
    rule = ConstantEpochDecay() if rule is None else rule
    _check_rule(rule)
    theta = price_scale(inst)
    lam = np.zeros(inst.m) if lam0 is None else np.maximum(0.0, np.asarray(lam0, dtype=float))
    trace = DualTrace()
    best = -np.inf
    for k in range(max_iters):
        ev = dual_value(inst, lam)
        g = ev.subgrad
        if isinstance(rule, ConstantEpochDecay) and rule.c0 is None:
            gmax = float(np.abs(g).max(initial=0.0))
            rule = replace(rule, c0=theta / gmax if gmax > 0 else theta)
        step = step_size(rule, k)
        if ev.value > best:
            best = ev.value
            trace.best_index = k
            trace.best_inner = ev.inner
        trace.lams.append(lam.copy())
        trace.values.append(ev.value)
        trace.subgrads.append(g.copy())
        trace.max_violation.append(float(np.maximum(g, 0.0).max(initial=0.0)))
        trace.steps.append(step)
        trace.best_values.append(best)
        if store_inner:
            trace.inner.append(ev.inner)
        if callback is not None:
            callback(k, lam, ev)
        new = np.maximum(0.0, lam + step * g)
        if stop is not None and k >= stop.window:
            stalled = best - trace.best_values[k - stop.window] <= stop.tol_obj * max(1.0, abs(best))
            move = float(np.abs(new - lam).max(initial=0.0))
            settled = move <= stop.tol_move * max(1.0, float(np.abs(lam).max(initial=0.0)))
            if stalled and settled and trace.max_violation[-1] <= stop.tol_viol:
                break
        lam = new
    return trace.best_lam.copy(), trace
