"""Resource contraction: how far to tighten b so dual-recovered points stay feasible."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractionWarning, InvalidInstance
from .inner import solve_inner_all
from .model import Instance

RANK_TOL = 1e-10
METHODS = ("basic", "block", "topk", "zero", "none")


@dataclass
class ContractionVector:
    rho: np.ndarray
    method: str
    blocks: list | None = None
    ranks: list = field(default_factory=list)

    @property
    def norm_inf(self) -> float:
        return float(np.abs(self.rho).max(initial=0.0))


def numeric_rank(mat, tol: float = RANK_TOL) -> int:
    """Rank by Gaussian elimination with partial pivoting.

    A pivot counts when it exceeds ``tol`` times the largest absolute entry.
    """
    M = np.array(mat, dtype=float, ndmin=2)
    if M.size == 0:
        return 0
    if M.shape[0] < M.shape[1]:
        M = M.T.copy()
    thr = tol * float(np.abs(M).max())
    if thr == 0.0:
        return 0
    rank, rows = 0, M.shape[0]
    for j in range(M.shape[1]):
        if rank == rows:
            break
        piv = rank + int(np.argmax(np.abs(M[rank:, j])))
        if abs(M[piv, j]) <= thr:
            continue
        if piv != rank:
            M[[rank, piv]] = M[[piv, rank]]
        below = M[rank + 1 :, j] / M[rank, j]
        M[rank + 1 :] -= np.outer(below, M[rank])
        rank += 1
    return rank


def coupling_ranges(inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Per-subsystem, per-row (min, max) of H_i^k x over X_i; arrays of shape (|I|, m)."""
    cached = inst.cache.get("coupling_ranges")
    if cached is not None:
        return cached
    n_sub, m = inst.size, inst.m
    lo = np.zeros((n_sub, m))
    hi = np.zeros((n_sub, m))
    for k in range(m):
        rows = [H[k] for H in inst.coupling]
        if inst.uniform_dim is not None:
            rows = np.array(rows).reshape(n_sub, inst.uniform_dim)
            neg = -rows
        else:
            neg = [-r for r in rows]
        active = np.array([np.any(r) for r in rows], dtype=bool)
        if not active.any():
            continue
        _, vmin = solve_inner_all(inst, rows)
        _, vmax = solve_inner_all(inst, neg)
        lo[:, k] = np.where(active, vmin, 0.0)
        hi[:, k] = np.where(active, -vmax, 0.0)
    inst.cache["coupling_ranges"] = (lo, hi)
    return lo, hi


def row_blocks(inst: Instance) -> list:
    """I_k for each row: metadata override or the support of row k."""
    if "blocks" in inst.meta:
        blocks = [sorted(int(i) for i in b) for b in inst.meta["blocks"]]
        if len(blocks) != inst.m:
            raise InvalidInstance(f"meta.blocks has {len(blocks)} entries, expected {inst.m}")
        return blocks
    return [[i for i, H in enumerate(inst.coupling) if np.any(H[k])] for k in range(inst.m)]


def _check_blocks(inst: Instance, blocks) -> None:
    for k, Ik in enumerate(blocks):
        members = set(Ik)
        for i, H in enumerate(inst.coupling):
            if np.any(H[k]) and i not in members:
                raise InvalidInstance(f"block for row {k} misses subsystem {i} with nonzero H_i^k")


def _block_rank(inst: Instance, Ik, cache: dict) -> int:
    key = tuple(Ik)
    if key not in cache:
        cache[key] = numeric_rank(np.hstack([inst.coupling[i] for i in Ik])) if Ik else 0
    return cache[key]


def contraction_basic(inst: Instance) -> ContractionVector:
    """rho^k = rank(H) * max_i (range of H_i^k x over X_i)."""
    lo, hi = coupling_ranges(inst)
    r = numeric_rank(inst.full_coupling)
    spread = (hi - lo).max(axis=0) if inst.size else np.zeros(inst.m)
    return ContractionVector(rho=r * spread, method="basic", ranks=[r] * inst.m)


def contraction_block(inst: Instance, blocks=None) -> ContractionVector:
    """rho^k = rank([H_i]_{i in I_k}) * max_{i in I_k} range_ik."""
    blocks = row_blocks(inst) if blocks is None else [sorted(b) for b in blocks]
    _check_blocks(inst, blocks)
    lo, hi = coupling_ranges(inst)
    spread = hi - lo
    rho = np.zeros(inst.m)
    ranks, cache = [], {}
    for k, Ik in enumerate(blocks):
        r = _block_rank(inst, Ik, cache)
        ranks.append(r)
        if Ik:
            rho[k] = r * spread[Ik, k].max()
    return ContractionVector(rho=rho, method="block", blocks=blocks, ranks=ranks)


def contraction_topk(inst: Instance, blocks=None) -> ContractionVector:
    """rho^k = sum of the rank([H_i]_{i in I_k}) largest ranges within I_k."""
    blocks = row_blocks(inst) if blocks is None else [sorted(b) for b in blocks]
    _check_blocks(inst, blocks)
    lo, hi = coupling_ranges(inst)
    spread = hi - lo
    rho = np.zeros(inst.m)
    ranks, cache = [], {}
    for k, Ik in enumerate(blocks):
        r = _block_rank(inst, Ik, cache)
        ranks.append(r)
        if Ik:
            top = np.sort(spread[Ik, k])[::-1][:r]
            rho[k] = top.sum()
    return ContractionVector(rho=rho, method="topk", blocks=blocks, ranks=ranks)


def detect_zero_contraction(inst: Instance, tol: float = 1e-9) -> bool:
    """True iff 0 lies in every X_i and H_i x >= 0 over every X_i."""
    if not all(sub.contains(np.zeros(sub.dim)) for sub in inst.subsystems):
        return False
    lo, _ = coupling_ranges(inst)
    return bool(np.all(lo >= -tol))


def compute_contraction(inst: Instance, method: str = "basic") -> ContractionVector:
    if method == "basic":
        return contraction_basic(inst)
    if method == "block":
        return contraction_block(inst)
    if method == "topk":
        return contraction_topk(inst)
    if method in ("zero", "none"):
        return ContractionVector(rho=np.zeros(inst.m), method=method)
    raise ValueError(f"unknown contraction method {method!r}; choose from {METHODS}")


def contract_instance(inst: Instance, rho, probe=None, warn: bool = True) -> Instance:
    """Copy of ``inst`` with resource b - rho.

    Warns with ``ContractionWarning`` when a Slater probe (``probe`` or the
    default point of ``recover.default_slater_point``) leaves no margin.
    """
    rho = np.asarray(getattr(rho, "rho", rho), dtype=float)
    if rho.shape != (inst.m,):
        raise InvalidInstance(f"rho has shape {rho.shape}, expected ({inst.m},)")
    out = Instance(inst.subsystems, inst.coupling, inst.resource - rho, dict(inst.meta))
    out.cache.update({k: v for k, v in inst.cache.items() if k in ("inner_plan", "coupling_ranges")})
    if warn and np.any(rho):
        from .recover import default_slater_point, slater_margin

        point = default_slater_point(inst) if probe is None else probe
        zeta = slater_margin(out, point)
        if zeta <= 0:
            warnings.warn(
                f"contracted resource leaves no Slater margin (zeta={zeta:.4g}); the contracted problem may be infeasible",
                ContractionWarning,
                stacklevel=2,
            )
    return out
