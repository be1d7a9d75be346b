import numpy as np
import pytest
from scipy.optimize import linprog

from lagrecover.errors import Infeasible, InvalidInstance
from lagrecover.instances import random_lattice_instance
from lagrecover.lp import (
    build_extended_lp,
    default_perturbation,
    fractional_subsystems,
    perturb_costs,
    recover_xlp,
    simplex_solve,
    solve_extended,
    strict_complementarity_check,
)
from lagrecover.model import Instance, LatticePolytope, VertexList
from lagrecover.pev import FleetParams, generate_fleet
from lagrecover.simplex import dense_simplex, extreme_points, in_convex_hull
from oracles import exact_dual_max


def test_dense_simplex_small():
    # min -x - y s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
    A = np.array([[1.0, 2, 1, 0], [3, 1, 0, 1]])
    res = dense_simplex(A, [4.0, 6.0], [-1.0, -1, 0, 0])
    assert res.objective == pytest.approx(-2.8)
    assert res.x[:2] == pytest.approx([1.6, 1.2])


def test_dense_simplex_infeasible():
    with pytest.raises(Infeasible):
        dense_simplex(np.array([[1.0, 1.0]]), [-1.0], [0.0, 0.0])


@pytest.mark.parametrize("seed", range(15))
def test_dense_simplex_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 6), rng.integers(6, 12)
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0, 1, size=n)
    b = A @ x0
    c = rng.uniform(0.1, 2, size=n)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    res = dense_simplex(A, b, c)
    assert res.objective == pytest.approx(ref.fun, abs=1e-8)
    assert np.allclose(A @ res.x, b, atol=1e-8) and np.all(res.x >= -1e-12)
    # strong duality with the returned multipliers
    assert float(b @ res.y) == pytest.approx(res.objective, abs=1e-8)


def test_extreme_points_and_hull():
    pts = np.array([[0, 0], [1, 0], [2, 0], [0, 1], [1, 1]], dtype=float)
    assert extreme_points(pts).tolist() == [True, False, True, True, True]
    assert in_convex_hull([1.0, 0.5], pts)
    assert not in_convex_hull([2.0, 1.0], pts)


def test_example1_lp(ex1):
    lp, sol = solve_extended(ex1)
    assert lp.A.shape[0] == 5
    assert lp.n_weights == sum(len(V) for V in lp.vertices)
    assert sol.objective == pytest.approx(-7.64, abs=1e-9)
    assert sol.dual_objective == pytest.approx(sol.objective, abs=1e-8)
    assert sol.lam[0] == pytest.approx(0.4, abs=1e-8)
    x = recover_xlp(lp, sol)
    assert [v.tolist() for v in x] == [[0, 0], pytest.approx([1.82, 0]), [0, 1], [1, 0]]
    assert fractional_subsystems(lp, sol) == [1]
    rep = strict_complementarity_check(lp, sol)
    assert rep.strictly_complementary and not rep.degenerate


def test_reduced_slacks_definition(ex1):
    lp, sol = solve_extended(ex1)
    for i, (sub, H) in enumerate(zip(ex1.subsystems, ex1.coupling)):
        V = lp.vertices[i]
        s = V @ sub.cost + (H @ V.T).T @ sol.lam - sol.z[i]
        assert sol.reduced_slacks[lp.columns_of(i)] == pytest.approx(s, abs=1e-9)
        assert np.all(s >= -1e-9)


def test_single_vertex_subsystem():
    v = VertexList(points_=[[1.0, 2.0]], cost=[3.0, -1.0])
    inst = Instance([v], [[[1.0, 1.0]]], [5.0])
    lp, sol = solve_extended(inst)
    assert lp.n_weights == 1 and sol.p.tolist() == [1.0]
    assert sol.objective == pytest.approx(1.0)
    assert strict_complementarity_check(lp, sol).violations == []


def test_trivial_zero_cost():
    v = VertexList(points_=[[0.0]], cost=[0.0])
    lp, sol = solve_extended(Instance([v], [[[1.0]]], [1.0]))
    assert sol.objective == 0.0


def test_counterexample_lp(counter):
    lp, sol = solve_extended(counter)
    assert len(lp.vertices) == 4
    assert all(np.array_equal(V, lp.vertices[0]) for V in lp.vertices)
    assert lp.vertices[0].tolist() == [[0, 0], [0, 1], [3, 0], [3, 1]]
    assert sol.lam[0] == pytest.approx(1.0, abs=1e-8)
    assert sol.objective == pytest.approx(-6.0, abs=1e-9)
    assert strict_complementarity_check(lp, sol).degenerate


def test_infeasible_lp():
    sub = LatticePolytope(A=np.zeros((0, 1)), d=[], lower=[1], upper=[2], cost=[1])
    with pytest.raises(Infeasible):
        solve_extended(Instance([sub, sub], [[[1.0]], [[1.0]]], [1.0]))


def test_pev_rejected():
    with pytest.raises(InvalidInstance):
        build_extended_lp(generate_fleet(FleetParams(n_pevs=2, n_steps=3)))


@pytest.mark.parametrize("seed", range(20))
def test_lp_equals_exact_dual(seed):
    inst = random_lattice_instance(seed)
    try:
        _, sol = solve_extended(inst)
    except Infeasible:
        pytest.skip("relaxation infeasible")
    best, _ = exact_dual_max(inst)
    assert sol.objective == pytest.approx(best, abs=1e-6)


def test_perturb_costs(ex1):
    assert perturb_costs(ex1, 0.0) is ex1
    a, b = perturb_costs(ex1, 1e-3, seed=4), perturb_costs(ex1, 1e-3, seed=4)
    for sa, sb, s in zip(a.subsystems, b.subsystems, ex1.subsystems):
        assert np.array_equal(sa.cost, sb.cost)
        assert np.max(np.abs(sa.cost - s.cost)) <= 1e-3
        assert not np.array_equal(sa.cost, s.cost)
    with pytest.raises(ValueError):
        perturb_costs(ex1, -1.0)
    assert default_perturbation(ex1) == pytest.approx(3e-6)
