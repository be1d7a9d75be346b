"""Plug-in EV fleet charging instances.

Each vehicle is a :class:`~lagrecover.model.PevBattery`; the fleet shares
an aggregate power box ``-P^max <= sum_i P_i (u_i - v_i) <= P^max`` in every
slot. The box is stored as 2N one-sided rows: rows ``0..N-1`` carry
``P_i (u - v) <= P^max`` and rows ``N..2N-1`` carry
``-P_i (u - v) <= -P^min``. Paired rows are linearly dependent, so rank
based contraction needs factor N rather than 2N.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .contraction import ContractionVector
from .model import Instance, PevBattery

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FleetParams:
    """Sampling ranges for a fleet; ``(lo, hi)`` pairs are drawn uniformly.

    Power in kW, energy in kWh, ``dt`` in hours, prices in EUR/MWh.
    """

    n_pevs: int
    seed: int = 0
    v2g: bool = False
    n_steps: int = 24
    dt: float = 1.0 / 3.0
    power: tuple = (3.0, 5.0)
    e_max: tuple = (8.0, 16.0)
    e_init_frac: tuple = (0.2, 0.5)
    e_ref_frac: tuple = (0.55, 0.8)
    e_min: float = 1.0
    zeta: tuple = (0.015, 0.075)
    price: tuple = (19.0, 35.0)
    injection_markup: float = 1.1
    delta: tuple = (-0.3, 0.3)
    pmax_per_pev: float = 3.0

    def __post_init__(self):
        if int(self.n_pevs) < 1:
            raise ValueError("n_pevs must be at least 1")
        if int(self.n_steps) < 1 or self.dt <= 0:
            raise ValueError("n_steps and dt must be positive")
        for name in ("power", "e_max", "e_init_frac", "e_ref_frac", "zeta", "price", "delta"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: empty range ({lo}, {hi})")

    @property
    def p_max(self) -> float:
        return self.pmax_per_pev * self.n_pevs

    @property
    def p_min(self) -> float:
        return -self.p_max


def _box_rows(power: float, N: int, v2g: bool) -> np.ndarray:
    """2N x dim block: P (u - v) on the upper rows, its negative on the lower rows."""
    eye = power * np.eye(N)
    top = np.hstack([eye, -eye]) if v2g else eye
    return np.vstack([top, -top])


def generate_fleet(params: FleetParams) -> Instance:
    """Sample a fleet instance; deterministic per seed.

    Draw order: the slot price profile, then each battery's
    ``(P, e_max, e_init, e_ref, zeta)`` (redrawn while it cannot reach
    ``e_ref`` without exceeding ``e_max``), then per-vehicle, per-slot
    perturbations ``delta_u`` and ``delta_v``. The same seed gives the same
    batteries and prices with and without V2G.
    """
    rng = np.random.default_rng(params.seed)
    N = int(params.n_steps)
    c_u = rng.uniform(*params.price, size=N)
    c_v = params.injection_markup * c_u
    subs, blocks = [], []
    resampled = 0
    for _ in range(int(params.n_pevs)):
        while True:
            P = rng.uniform(*params.power)
            e_max = rng.uniform(*params.e_max)
            e_init = rng.uniform(*params.e_init_frac) * e_max
            e_ref = rng.uniform(*params.e_ref_frac) * e_max
            zeta = rng.uniform(*params.zeta)
            d_u = rng.uniform(*params.delta, size=N)
            d_v = rng.uniform(*params.delta, size=N)
            cost_u = P * (c_u + d_u)
            cost = np.concatenate([cost_u, -P * (c_v + d_v)]) if params.v2g else cost_u
            bat = PevBattery(power=P, e_init=e_init, e_ref=e_ref, e_min=params.e_min, e_max=e_max, zeta=zeta,
                             n_steps=N, dt=params.dt, v2g=params.v2g, cost=cost, delta_u=d_u, delta_v=d_v)
            if bat.e_min <= bat.e_init and bat.k_min <= min(N, bat.k_max):
                break
            resampled += 1
        subs.append(bat)
        blocks.append(_box_rows(P, N, params.v2g))
    if resampled:
        log.info("resampled %d infeasible batteries", resampled)
    resource = np.concatenate([np.full(N, params.p_max), np.full(N, -params.p_min)])
    meta = {
        "generator": "pev",
        "params": asdict(params),
        "price_u": c_u.tolist(),
        "price_v": c_v.tolist(),
        "resampled": resampled,
    }
    return Instance(subs, blocks, resource, meta)


def pev_contraction(inst_or_params) -> ContractionVector:
    """rho = N * max P_i (charge-only) or 2N * max P_i (V2G) on every box row."""
    inst = generate_fleet(inst_or_params) if isinstance(inst_or_params, FleetParams) else inst_or_params
    bats = inst.subsystems
    if not bats or not all(isinstance(b, PevBattery) for b in bats):
        raise ValueError("pev_contraction needs an instance made of PEV batteries")
    N = bats[0].n_steps
    factor = 2 if bats[0].v2g else 1
    rho = np.full(inst.m, factor * N * max(b.power for b in bats))
    return ContractionVector(rho=rho, method="pev")


def mandatory_spread(inst: Instance, capacity=None) -> tuple[bool, np.ndarray]:
    """Greedy spread of every battery's K_min charging slots onto the least loaded slots.

    Returns ``(fits, load)`` where ``fits`` says the per-slot load never
    exceeds ``capacity`` (default: the upper box rows of ``inst``). A
    successful spread is a feasible charge-only schedule for the fleet.
    """
    bats = inst.subsystems
    N = bats[0].n_steps
    cap = inst.resource[:N] if capacity is None else np.broadcast_to(np.asarray(capacity, dtype=float), (N,))
    load = np.zeros(N)
    order = sorted(range(len(bats)), key=lambda i: (-bats[i].k_min * bats[i].power, i))
    for i in order:
        b = bats[i]
        slots = np.argsort(load, kind="stable")[: b.k_min]
        load[slots] += b.power
    return bool(np.all(load <= cap + 1e-9)), load


def mandatory_schedule_fits(inst: Instance, rho=None) -> bool:
    """True if the mandatory energy fits under the contracted upper box."""
    rho = pev_contraction(inst).rho if rho is None else np.asarray(getattr(rho, "rho", rho), dtype=float)
    N = inst.subsystems[0].n_steps
    return mandatory_spread(inst, inst.resource[:N] - rho[:N])[0]
