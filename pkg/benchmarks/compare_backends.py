"""Time the compiled and pure-Python PEV kernels on identical batches.

Usage::

    python3 benchmarks/compare_backends.py --batteries 1000 --repeat 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lagrecover import kernels
from lagrecover.inner import _PevGroup
from lagrecover.pev import FleetParams, generate_fleet


def _best_time(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(n: int, repeat: int, seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    rows = []
    for v2g in (False, True):
        inst = generate_fleet(FleetParams(n_pevs=n, seed=seed, v2g=v2g))
        g = _PevGroup(np.arange(n), list(inst.subsystems))
        N = g.N
        prices = rng.normal(25, 15, size=(n, N))
        discharge = rng.normal(27, 15, size=(n, N))
        results, times = {}, {}
        for name in kernels.available_backends():
            mod = kernels.get_backend(name)
            if v2g:
                def call(mod=mod):
                    return mod.dp_v2g_batch(prices, discharge, g.e_init, g.e_min, g.e_max, g.e_ref, g.up, g.down, True)
            else:
                def call(mod=mod):
                    return mod.greedy_charge_batch(prices, g.kmin, g.kmax)
            out = call()
            results[name] = [np.asarray(a) for a in (out if v2g else (out,))]
            times[name] = _best_time(call, repeat)
        ref = results["python"]
        agree = all(all(np.array_equal(a, b) for a, b in zip(ref, r)) for r in results.values())
        row = {"kernel": "dp_v2g" if v2g else "greedy", "batteries": n, "agree": agree}
        row.update({f"{k}_s": v for k, v in times.items()})
        if "cython" in times:
            row["speedup"] = times["python"] / times["cython"]
        rows.append(row)
    return rows


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--batteries", type=int, default=1000)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    print(f"selected backend: {kernels.BACKEND}; available: {', '.join(kernels.available_backends())}")
    for row in run(args.batteries, args.repeat, args.seed):
        parts = [f"{row['kernel']:<7} n={row['batteries']}"]
        parts += [f"{k[:-2]}={row[k] * 1e3:.2f} ms" for k in row if k.endswith("_s")]
        if "speedup" in row:
            parts.append(f"speedup={row['speedup']:.1f}x")
        parts.append(f"agree={row['agree']}")
        print("  ".join(parts))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
