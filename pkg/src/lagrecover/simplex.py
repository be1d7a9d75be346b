"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``min c'x  s.t.  A x = b, x >= 0`` and returns a basic optimal
solution together with the row duals ``y`` (so ``c - A'y >= 0``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, Unbounded

PIVOT_TOL = 1e-9


@dataclass
class SimplexResult:
    x: np.ndarray
    y: np.ndarray
    basis: list
    objective: float
    reduced_costs: np.ndarray
    iterations: int
    redundant_rows: list


def _pivot(T: np.ndarray, r: int, s: int) -> None:
    T[r] /= T[r, s]
    col = T[:, s].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T: np.ndarray, basis: list, ncols: int, tol: float, max_iter: int) -> int:
    """Bland-rule pivoting on tableau T restricted to the first ``ncols`` columns."""
    it = 0
    while True:
        red = T[-1, :ncols]
        cand = np.nonzero(red < -tol)[0]
        if len(cand) == 0:
            return it
        s = int(cand[0])
        col = T[:-1, s]
        pos = np.nonzero(col > tol)[0]
        if len(pos) == 0:
            raise Unbounded("LP is unbounded")
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + tol * (1.0 + abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, r, s)
        basis[r] = s
        it += 1
        if it > max_iter:
            raise RuntimeError("simplex iteration limit reached")


def dense_simplex(A, b, c, tol: float = PIVOT_TOL, max_iter: int = 100_000) -> SimplexResult:
    A = np.array(A, dtype=float, ndmin=2)
    b = np.array(b, dtype=float).reshape(-1)
    c = np.array(c, dtype=float).reshape(-1)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A1 = A * sign[:, None]
    b1 = b * sign

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A1
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b1
    T[m, :n] = -A1.sum(axis=0)
    T[m, -1] = -b1.sum()
    basis = list(range(n, n + m))
    iters = _run(T, basis, n + m, tol, max_iter)
    scale = max(1.0, float(np.abs(b1).max(initial=0.0)))
    if -T[m, -1] > 1e-7 * scale:
        raise Infeasible(f"LP infeasible (phase-1 residual {-T[m, -1]:.3g})")

    redundant = []
    for r in range(m):
        if basis[r] >= n:
            js = np.nonzero(np.abs(T[r, :n]) > tol)[0]
            if len(js):
                _pivot(T, r, int(js[0]))
                basis[r] = int(js[0])
            else:
                redundant.append(r)
    keep = [r for r in range(m) if r not in redundant]
    basis = [basis[r] for r in keep]
    T = np.vstack([T[keep][:, list(range(n)) + [n + m]], np.zeros((1, n + 1))])
    cb = c[basis]
    T[-1, :n] = c - cb @ T[:-1, :n]
    T[-1, -1] = -cb @ T[:-1, -1]
    iters += _run(T, basis, n, tol, max_iter)

    # recompute from the final basis for accuracy
    B = A1[keep][:, basis]
    x = np.zeros(n)
    if basis:
        x[basis] = np.linalg.solve(B, b1[keep])
        y_keep = np.linalg.solve(B.T, c[basis])
    else:
        y_keep = np.zeros(0)
    x[np.abs(x) < 1e-13] = 0.0
    y1 = np.zeros(m)
    y1[keep] = y_keep
    y = y1 * sign
    return SimplexResult(
        x=x,
        y=y,
        basis=list(basis),
        objective=float(c @ x),
        reduced_costs=c - A.T @ y,
        iterations=iters,
        redundant_rows=redundant,
    )


def in_convex_hull(point, others, tol: float = PIVOT_TOL) -> bool:
    """True if ``point`` is a convex combination of the rows of ``others``."""
    others = np.asarray(others, dtype=float)
    if len(others) == 0:
        return False
    A = np.vstack([others.T, np.ones(len(others))])
    b = np.append(np.asarray(point, dtype=float), 1.0)
    try:
        dense_simplex(A, b, np.zeros(len(others)), tol=tol)
    except Infeasible:
        return False
    return True


def extreme_points(points) -> np.ndarray:
    """Boolean mask of the rows of ``points`` that are vertices of their convex hull."""
    pts = np.asarray(points, dtype=float)
    p = len(pts)
    mask = np.zeros(p, dtype=bool)
    if p <= 2:
        mask[:] = True
        return mask
    # lexicographic extremes are always vertices
    order = np.lexsort(pts.T[::-1])
    mask[order[0]] = mask[order[-1]] = True
    for j in range(p):
        if mask[j]:
            continue
        mask[j] = not in_convex_hull(pts[j], np.delete(pts, j, axis=0))
    return mask
