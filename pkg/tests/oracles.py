"""Independent reference implementations used only by the tests.

Nothing here calls the library's solvers; only plain numpy and itertools.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def lattice_points(A, d, lower, upper, tol=1e-9):
    """Integer points of {lower <= x <= upper, A x <= d} in lexicographic order."""
    A = np.asarray(A, dtype=float).reshape(-1, len(lower))
    d = np.asarray(d, dtype=float)
    out = []
    for x in itertools.product(*(range(int(lo), int(hi) + 1) for lo, hi in zip(lower, upper))):
        x = np.array(x, dtype=float)
        if len(A) == 0 or np.all(A @ x <= d + tol):
            out.append(x)
    return out


def sub_points(sub):
    if sub.kind == "lattice":
        return lattice_points(sub.A, sub.d, sub.lower, sub.upper)
    return [np.array(p) for p in sub.points_]


def argmin_lex(points, price, tol=1e-9):
    """Lexicographically smallest minimizer of price' x (points need not be sorted)."""
    vals = [float(np.dot(price, p)) for p in points]
    best = min(vals)
    scale = tol * max(1.0, float(np.max(np.abs(price))) * max(float(np.max(np.abs(p))) for p in points))
    cands = [tuple(p) for p, v in zip(points, vals) if v <= best + scale]
    return np.array(min(cands)), best


def is_midpoint_of_others(x, points, tol=1e-12):
    """True if x = (a + b) / 2 for two distinct listed points a != b."""
    pts = [np.asarray(p) for p in points]
    for a, b in itertools.combinations(pts, 2):
        if np.max(np.abs(a - b)) > tol and np.max(np.abs((a + b) / 2 - x)) <= tol:
            return True
    return False


def brute_force(inst, tol=1e-7):
    """Exact optimum of the coupled program by full enumeration."""
    sets = [sub_points(s) for s in inst.subsystems]
    best, arg = math.inf, None
    for combo in itertools.product(*sets):
        use = sum(H @ x for H, x in zip(inst.coupling, combo))
        if np.all(use <= inst.resource + tol):
            val = sum(float(s.cost @ x) for s, x in zip(inst.subsystems, combo))
            if val < best - 1e-12:
                best, arg = val, [x.copy() for x in combo]
    return best, arg


# -------------------------------------------------------------- dual oracle


class _DualData:
    def __init__(self, inst):
        self.b = np.asarray(inst.resource, dtype=float)
        self.vals, self.uses, self.pairs = [], [], []
        for s, H in zip(inst.subsystems, inst.coupling):
            pts = np.array(sub_points(s))
            self.vals.append(pts @ s.cost)
            self.uses.append(pts @ H.T)
            self.pairs.append(np.array(list(itertools.combinations(range(len(pts)), 2))).reshape(-1, 2))

    def d_many(self, lams: np.ndarray) -> np.ndarray:
        """d at each row of ``lams`` (K x m)."""
        total = -lams @ self.b
        for v, u in zip(self.vals, self.uses):
            total = total + np.min(v[:, None] + u @ lams.T, axis=0)
        return total

    def breakpoints_1d(self, base: np.ndarray, axis: int) -> np.ndarray:
        """lam[axis] > 0 values where a subsystem's minimizer can switch, others fixed at ``base``."""
        cands = [np.zeros(1)]
        for v, u, pr in zip(self.vals, self.uses, self.pairs):
            if len(pr) == 0:
                continue
            off = v + u @ base
            a, b = pr[:, 0], pr[:, 1]
            ds = u[a, axis] - u[b, axis]
            ok = np.abs(ds) > 1e-15
            t = (off[b][ok] - off[a][ok]) / ds[ok]
            cands.append(t[t > 0])
        return np.unique(np.concatenate(cands))


def _max_1d(data: _DualData, axis: int, base: np.ndarray):
    """Exact max over lam[axis] >= 0 of d with the other coordinates held at ``base``."""
    base = base.copy()
    base[axis] = 0.0
    ts = data.breakpoints_1d(base, axis)
    lams = np.repeat(base[None, :], len(ts), axis=0)
    lams[:, axis] = ts
    vals = data.d_many(lams)
    k = int(np.argmax(vals))
    return float(vals[k]), float(ts[k])


def exact_dual_max(inst, iters: int = 200):
    """max_{lam >= 0} d(lam) for m in {1, 2} without any LP or subgradient code.

    m = 1: d is concave piecewise linear, so its maximum sits at 0 or at a
    breakpoint where two points of one subsystem tie; all are evaluated.
    m = 2: g(t) = max_s d(t, s) is concave; each g is exact by breakpoint
    enumeration in s, and t is located by golden-section search.
    Returns ``(value, argmax_first_coordinate)``.
    """
    data = _DualData(inst)
    m = len(data.b)
    if m == 1:
        return _max_1d(data, 0, np.zeros(1))
    if m != 2:
        raise ValueError("oracle supports m <= 2")

    def g(t):
        return _max_1d(data, 1, np.array([t, 0.0]))[0]

    hi = 1.0
    while g(2 * hi) > g(hi) and hi < 1e8:
        hi *= 2
    lo, hi = 0.0, 2 * hi
    phi = (math.sqrt(5) - 1) / 2
    x1, x2 = hi - phi * (hi - lo), lo + phi * (hi - lo)
    f1, f2 = g(x1), g(x2)
    for _ in range(iters):
        if hi - lo < 1e-13 * max(1.0, hi):
            break
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = g(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = g(x1)
    t = (lo + hi) / 2
    return max((g(t), t), (g(0.0), 0.0))


# -------------------------------------------------------------- PEV oracles


def pev_exhaustive(bat, charge, discharge, allow_discharge=True):
    """Best schedule over all 3^N (u, v) sequences; ties go to the first in enumeration order.

    Returns ``(value, u, v)`` or ``(inf, None, None)`` if nothing is admissible.
    """
    N = bat.n_steps
    up = bat.power * bat.dt * (1 - bat.zeta)
    down = bat.power * bat.dt * (1 + bat.zeta)
    actions = (0, 1, 2) if allow_discharge else (0, 1)
    best, bu, bv = math.inf, None, None
    for seq in itertools.product(actions, repeat=N):
        e = bat.e_init
        ok = True
        val = 0.0
        for k, a in enumerate(seq):
            if a == 1:
                e += up
                val += charge[k]
            elif a == 2:
                e -= down
                val -= discharge[k]
            if e < bat.e_min - 1e-9 or e > bat.e_max + 1e-9:
                ok = False
                break
        if ok and e >= bat.e_ref - 1e-9 and val < best - 1e-12:
            best = val
            bu = np.array([1.0 if a == 1 else 0.0 for a in seq])
            bv = np.array([1.0 if a == 2 else 0.0 for a in seq])
    return best, bu, bv


def greedy_reference(prices, kmin, kmax):
    """Charge the kmin cheapest slots (earliest first on ties), then any further negative ones."""
    order = sorted(range(len(prices)), key=lambda k: (prices[k], k))
    u = np.zeros(len(prices))
    for count, k in enumerate(order):
        if count < kmin or (prices[k] < 0 and count < kmax):
            u[k] = 1.0
        else:
            break
    return u
