"""Built-in instances and seeded random generators for enumerable problems."""

from __future__ import annotations

import numpy as np

from .model import Instance, LatticePolytope


def example1() -> Instance:
    """Four 2-D lattice subsystems in Z_+^2 sharing one resource row (b = 11.1)."""
    subs = [
        LatticePolytope(A=[[0, 1], [1, 1]], d=[1.2, 2.1], lower=[0, 0], upper=[2, 1], cost=[1, 1]),
        LatticePolytope(A=[[0, 1], [1, 0]], d=[0.6, 2.1], lower=[0, 0], upper=[2, 0], cost=[-2, 1]),
        LatticePolytope(A=[[1, 0], [-0.5, 1]], d=[2.2, 1.1], lower=[0, 0], upper=[2, 2], cost=[0.5, -1]),
        LatticePolytope(A=[[1, 0], [0, 1]], d=[1.2, 2], lower=[0, 0], upper=[1, 2], cost=[-3, 0.5]),
    ]
    H = [[[1, 1]], [[5, 1]], [[1, 1]], [[1, 1]]]
    return Instance(subs, H, [11.1], {"name": "example1"})


def symmetric_counterexample() -> Instance:
    """Four identical subsystems {0..3} x {0, 1}, cost (-1, 1), H = (1, 1), b = 6."""
    sub = dict(A=np.eye(2), d=[3.2, 1.4], lower=[0, 0], upper=[3, 1], cost=[-1, 1])
    subs = [LatticePolytope(**sub) for _ in range(4)]
    return Instance(subs, [[[1, 1]]] * 4, [6.0], {"name": "symmetric_counterexample"})


def _random_lattice(rng, max_points: int, monotone: bool) -> LatticePolytope:
    n = 2
    while True:
        upper = rng.integers(1, 5, size=n)
        A, d = [], []
        for _ in range(rng.integers(0, 3)):
            row = rng.integers(-2, 3, size=n).astype(float)
            if monotone:
                row = np.abs(row)
            if not row.any():
                continue
            top = float(np.maximum(row, 0) @ upper)
            A.append(row)
            d.append(rng.uniform(0.3, 1.0) * max(top, 1.0) + rng.uniform(0.05, 0.45))
        A = np.array(A).reshape(-1, n)
        cost = np.round(rng.uniform(-5, 5, size=n), 1)
        sub = LatticePolytope(A=A, d=d, lower=[0] * n, upper=upper, cost=cost)
        pts = sub.points()
        if 2 <= len(pts) <= max_points:
            return sub


def random_lattice_instance(seed: int, n_sub: int | None = None, m: int | None = None,
                            max_points: int = 20, monotone: bool = False, tightness: float | None = None) -> Instance:
    """Random enumerable instance with lattice subsystems containing 0.

    |I| in [4, 8] and m in {1, 2} unless given. Coupling entries are
    integers in [1, 5] when ``monotone`` (so H_i x >= 0 and shrinking x
    never increases usage), otherwise in [-2, 5]. The resource is a
    non-round fraction ``tightness`` of the summed per-row maximum usage.
    """
    rng = np.random.default_rng(seed)
    n_sub = int(rng.integers(4, 9)) if n_sub is None else n_sub
    m = int(rng.integers(1, 3)) if m is None else m
    subs = [_random_lattice(rng, max_points, monotone) for _ in range(n_sub)]
    lo_h = 1 if monotone else -2
    blocks = [rng.integers(lo_h, 6, size=(m, s.dim)).astype(float) for s in subs]
    hi = np.zeros(m)
    for s, H in zip(subs, blocks):
        hi += (s.points() @ H.T).max(axis=0)
    frac = rng.uniform(0.35, 0.65) if tightness is None else tightness
    b = frac * hi + rng.uniform(0.05, 0.95)
    return Instance(subs, blocks, b, {"name": f"random_lattice_{seed}", "seed": seed})
