import warnings

import numpy as np
import pytest

from lagrecover.contraction import (
    compute_contraction,
    contract_instance,
    contraction_basic,
    contraction_block,
    contraction_topk,
    coupling_ranges,
    detect_zero_contraction,
    numeric_rank,
)
from lagrecover.errors import ContractionWarning, InvalidInstance
from lagrecover.instances import random_lattice_instance
from lagrecover.model import Instance, LatticePolytope
from oracles import sub_points


def test_numeric_rank_matches_numpy(rng):
    for _ in range(50):
        r, c = rng.integers(1, 6, size=2)
        k = rng.integers(0, min(r, c) + 1)
        M = rng.normal(size=(r, k)) @ rng.normal(size=(k, c))
        assert numeric_rank(M) == np.linalg.matrix_rank(M)
    assert numeric_rank(np.zeros((3, 3))) == 0
    assert numeric_rank([[1, 2], [2, 4]]) == 1


def test_example1_basic(ex1):
    cv = contraction_basic(ex1)
    # ranges of H_i x: [0,2], [0,10], [0,3], [0,3]; rank 1
    assert cv.rho.tolist() == [10.0]
    assert cv.norm_inf == 10.0


def test_ranges_match_enumeration():
    inst = random_lattice_instance(4, m=2)
    lo, hi = coupling_ranges(inst)
    for i, (s, H) in enumerate(zip(inst.subsystems, inst.coupling)):
        use = np.array(sub_points(s)) @ H.T
        assert lo[i] == pytest.approx(use.min(axis=0))
        assert hi[i] == pytest.approx(use.max(axis=0))


def _block_instance():
    sub = LatticePolytope(A=np.zeros((0, 1)), d=[], lower=[0], upper=[2], cost=[-1])
    big = LatticePolytope(A=np.zeros((0, 1)), d=[], lower=[0], upper=[5], cost=[-1])
    # row 0 couples subsystems 0,1; row 1 couples 2,3
    H = [[[1], [0]], [[1], [0]], [[0], [1]], [[0], [1]]]
    return Instance([sub, sub, sub, big], H, [3.0, 4.0])


def test_block_and_topk_tighter_than_basic():
    inst = _block_instance()
    basic, block, topk = contraction_basic(inst), contraction_block(inst), contraction_topk(inst)
    assert basic.rho.tolist() == [4.0, 10.0]  # rank 2 times the row's largest range
    assert block.rho.tolist() == [2.0, 5.0]
    assert block.blocks == [[0, 1], [2, 3]]
    assert topk.rho.tolist() == [2.0, 5.0]
    assert np.all(topk.rho <= block.rho + 1e-12) and np.all(block.rho <= basic.rho + 1e-12)


def test_topk_sums_largest_ranges():
    sub = LatticePolytope(A=np.zeros((0, 2)), d=[], lower=[0, 0], upper=[1, 3], cost=[0, 0])
    inst = Instance([sub] * 3, [[[1, 0], [0, 1]], [[2, 0], [0, 1]], [[1, 0], [0, 0]]], [1.0, 1.0])
    # rank([H_0 H_1 H_2]) = 2 on each row's block
    assert contraction_topk(inst).rho.tolist() == [3.0, 6.0]
    assert contraction_block(inst).rho.tolist() == [4.0, 6.0]


def test_block_override_must_cover_support():
    inst = _block_instance()
    with pytest.raises(InvalidInstance):
        contraction_block(inst, blocks=[[0], [2, 3]])


@pytest.mark.parametrize("seed", range(20))
def test_contraction_ordering(seed):
    inst = random_lattice_instance(seed)
    b, k, t = (compute_contraction(inst, m).rho for m in ("basic", "block", "topk"))
    assert np.all(t <= k + 1e-9) and np.all(k <= b + 1e-9) and np.all(t >= 0)


def test_zero_and_none(ex1):
    assert compute_contraction(ex1, "zero").rho.tolist() == [0.0]
    assert compute_contraction(ex1, "none").norm_inf == 0.0
    with pytest.raises(ValueError):
        compute_contraction(ex1, "bogus")


def test_detect_zero_contraction(ex1):
    assert detect_zero_contraction(ex1)
    neg = random_lattice_instance(1, monotone=False)
    mono = random_lattice_instance(1, monotone=True)
    assert detect_zero_contraction(mono)
    lo, _ = coupling_ranges(neg)
    assert detect_zero_contraction(neg) == bool(np.all(lo >= 0))


def test_contract_instance(ex1):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = contract_instance(ex1, contraction_basic(ex1))
    assert out.resource.tolist() == pytest.approx([1.1])
    assert ex1.resource.tolist() == [11.1]
    # the default probe uses nothing, so only a negative resource leaves no margin
    with pytest.warns(ContractionWarning):
        contract_instance(ex1, [11.5])
    with pytest.raises(InvalidInstance):
        contract_instance(ex1, [1.0, 2.0])
