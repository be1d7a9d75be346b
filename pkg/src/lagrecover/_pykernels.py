"""Pure-Python (numpy) implementations of the hot PEV inner-problem kernels.

Semantics are identical to the compiled ``_kernels`` module; this one is
used when the extension is not built or ``LAGRECOVER_BACKEND=python``.
"""

import numpy as np

ENERGY_TOL = 1e-9
TIE_RTOL = 1e-12


def _threshold(best):
    # a challenger must beat the incumbent by a relative margin to win a tie
    with np.errstate(invalid="ignore"):
        return np.where(np.isfinite(best), best - TIE_RTOL * (1.0 + np.abs(best)), np.inf)


def greedy_charge_batch(prices, kmin, kmax):
    """Charge-only schedules for a batch of batteries.

    Row r takes its ``kmin[r]`` cheapest slots, then keeps adding the next
    cheapest slot while its price is negative and fewer than ``kmax[r]``
    slots are taken. Equal prices resolve to the earlier slot.
    """
    prices = np.ascontiguousarray(prices, dtype=np.float64)
    n, N = prices.shape
    kmin = np.asarray(kmin, dtype=np.int64)
    kmax = np.asarray(kmax, dtype=np.int64)
    order = np.argsort(prices, axis=1, kind="stable")
    ranked = np.take_along_axis(prices, order, axis=1)
    pos = np.arange(N)[None, :]
    take = (pos < kmin[:, None]) | ((pos < kmax[:, None]) & (ranked < 0.0))
    u = np.zeros((n, N), dtype=np.uint8)
    np.put_along_axis(u, order, take.astype(np.uint8), axis=1)
    return u


def dp_v2g_batch(charge, discharge, e_init, e_min, e_max, e_ref, up, down, allow_discharge=True):
    """Exact charge/discharge schedules by backward DP over (charges, discharges) counts.

    Minimizes ``sum_k charge[k] u[k] - discharge[k] v[k]`` subject to
    ``u[k] + v[k] <= 1``, ``e_min <= e[k] <= e_max`` for all k and
    ``e[N] >= e_ref``, where ``e = e_init + a*up - b*down`` after ``a``
    charges and ``b`` discharges. On ties the rollout prefers idle, then
    charge, then discharge.

    Returns ``(u, v, feasible)``; rows with ``feasible == False`` are zero.
    """
    charge = np.ascontiguousarray(charge, dtype=np.float64)
    discharge = np.ascontiguousarray(discharge, dtype=np.float64)
    n, N = charge.shape
    e_init, e_min, e_max, e_ref, up, down = (
        np.asarray(a, dtype=np.float64)[:, None, None] for a in (e_init, e_min, e_max, e_ref, up, down)
    )
    a = np.arange(N + 1)[None, :, None]
    b = np.arange(N + 1)[None, None, :]
    energy = e_init + a * up - b * down
    if not allow_discharge:
        # b > 0 can never be reached; mask it out so it never wins
        energy = np.where(b > 0, -np.inf, energy)
    in_bounds = (energy >= e_min - ENERGY_TOL) & (energy <= e_max + ENERGY_TOL)

    V = np.full((n, N + 2, N + 2), np.inf)
    V[:, : N + 1, : N + 1] = np.where(in_bounds & (energy >= e_ref - ENERGY_TOL), 0.0, np.inf)
    decisions = np.zeros((N, n, N + 1, N + 1), dtype=np.uint8)

    for k in range(N - 1, -1, -1):
        stay = V[:, : N + 1, : N + 1]
        ch = charge[:, k, None, None] + V[:, 1 : N + 2, : N + 1]
        best = stay.copy()
        dec = np.zeros((n, N + 1, N + 1), dtype=np.uint8)
        better = (ch < _threshold(best)) & np.isfinite(ch)
        best = np.where(better, ch, best)
        dec[better] = 1
        if allow_discharge:
            dis = -discharge[:, k, None, None] + V[:, : N + 1, 1 : N + 2]
            better = (dis < _threshold(best)) & np.isfinite(dis)
            best = np.where(better, dis, best)
            dec[better] = 2
        best = np.where(in_bounds, best, np.inf)
        decisions[k] = dec
        V = np.full((n, N + 2, N + 2), np.inf)
        V[:, : N + 1, : N + 1] = best

    feasible = np.isfinite(V[:, 0, 0])
    u = np.zeros((n, N), dtype=np.uint8)
    v = np.zeros((n, N), dtype=np.uint8)
    rows = np.arange(n)
    ca = np.zeros(n, dtype=np.int64)
    cb = np.zeros(n, dtype=np.int64)
    for k in range(N):
        d = decisions[k, rows, ca, cb]
        d = np.where(feasible, d, 0)
        u[:, k] = d == 1
        v[:, k] = d == 2
        ca += d == 1
        cb += d == 2
    return u, v, feasible
