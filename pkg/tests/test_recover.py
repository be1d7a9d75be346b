import numpy as np
import pytest

from lagrecover.contraction import compute_contraction, contract_instance
from lagrecover.dual import Constant
from lagrecover.errors import InvalidInstance, NoSlater, RepairFailed
from lagrecover.inner import adjusted_prices, solve_inner_all
from lagrecover.instances import random_lattice_instance
from lagrecover.lp import recover_xlp, solve_extended
from lagrecover.model import Instance, LatticePolytope, check_feasibility
from lagrecover.pev import FleetParams, generate_fleet
from lagrecover.recover import (
    all_selections_feasible,
    bounds,
    count_coincident,
    default_slater_point,
    gamma,
    recover_primal,
    slater_margin,
    solve,
    zero_contraction_repair,
)
from oracles import sub_points


def test_gamma_example1(ex1):
    g, gmax = gamma(ex1)
    assert g.tolist() == [2.0, 4.0, 2.0, 4.0]
    assert gmax == 4.0


def test_gamma_matches_enumeration():
    inst = random_lattice_instance(11)
    g, _ = gamma(inst)
    for s, gi in zip(inst.subsystems, g):
        v = np.array(sub_points(s)) @ s.cost
        assert gi == pytest.approx(v.max() - v.min())


def test_example1_bounds(ex1):
    rho = compute_contraction(ex1)
    contracted = contract_instance(ex1, rho)
    zeta = slater_margin(contracted, default_slater_point(contracted))
    assert zeta == pytest.approx(0.275)
    rep = bounds(ex1, rho, zeta)
    assert rep.duality_gap_bound == 4.0
    assert rep.performance_bound == pytest.approx(149.4545454545, abs=1e-6)
    d = rep.to_dict()
    assert d["gamma"] == [2.0, 4.0, 2.0, 4.0] and d["rho_inf"] == 10.0


def test_bounds_without_slater(ex1):
    rep = bounds(ex1, [10.0], zeta=-0.1)
    assert rep.performance_bound is None
    with pytest.raises(NoSlater):
        bounds(ex1, [10.0], zeta=0.0, strict=True)
    assert bounds(ex1).performance_bound == 4.0


def test_count_coincident(ex1):
    _, sol = solve_extended(ex1)
    lp, sol = solve_extended(ex1)
    xlp = recover_xlp(lp, sol)
    pts, _ = solve_inner_all(ex1, adjusted_prices(ex1, sol.lam))
    assert count_coincident(pts, xlp) == 3
    with pytest.raises(InvalidInstance):
        count_coincident(pts[:2], xlp)


def test_recover_primal_recomputes_inner(ex1):
    rec = recover_primal(ex1, ([0.3], None))
    assert rec.objective == pytest.approx(-8.0)
    assert not rec.feasible_for_original
    assert rec.max_violation == pytest.approx(0.9)
    assert rec.gap is None


def test_zero_repair(ex1):
    asg = [np.array([0.0, 0.0]), np.array([2.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, 0.0])]
    fixed = zero_contraction_repair(ex1, asg)
    assert check_feasibility(ex1, fixed).feasible
    assert fixed[1].tolist() == [0.0, 0.0]


def test_zero_repair_needs_zero_member():
    sub = LatticePolytope(A=np.zeros((0, 1)), d=[], lower=[1], upper=[2], cost=[1])
    inst = Instance([sub], [[[1.0]]], [0.5])
    with pytest.raises(RepairFailed):
        zero_contraction_repair(inst, [np.array([1.0])])


def test_all_selections_feasible(ex1):
    contracted = contract_instance(ex1, compute_contraction(ex1))
    lp, sol = solve_extended(contracted)
    ok, n = all_selections_feasible(ex1, contracted, sol.lam)
    assert ok and n >= 1


def test_default_slater_point_pev():
    inst = generate_fleet(FleetParams(n_pevs=4, seed=3, n_steps=6))
    pt = default_slater_point(inst)
    for bat, x in zip(inst.subsystems, pt):
        assert x == pytest.approx(np.full(6, bat.k_min / 6))


def test_solve_example1(ex1):
    res = solve(ex1)
    rec = res.recovered
    assert rec.feasible_for_original
    assert rec.dual_bound_kind == "original"
    assert rec.dual_bound == pytest.approx(-7.64, abs=1e-3)
    assert rec.objective >= -7.0 - 1e-9
    assert rec.gap >= 0 and rec.relative_gap == pytest.approx(rec.gap / abs(rec.dual_bound))
    assert res.contraction.rho.tolist() == [10.0]
    assert set(res.timings) >= {"contraction", "dual", "bound"}


def test_solve_zero_contraction(ex1):
    res = solve(ex1, contraction="zero", dual_bound="none")
    assert res.recovered.feasible_for_original
    assert res.recovered.dual_bound is None
    assert res.recovered.source in ("best_dual", "feasible_iterate", "zero_repair")


def test_solve_zero_rejected_when_not_applicable():
    inst = random_lattice_instance(2, monotone=False)
    from lagrecover.contraction import detect_zero_contraction

    if detect_zero_contraction(inst):
        pytest.skip("instance happens to satisfy the zero-contraction condition")
    with pytest.raises(InvalidInstance):
        solve(inst, contraction="zero")


def test_solve_contracted_bound_and_bad_mode(ex1):
    res = solve(ex1, dual_bound="contracted")
    assert res.recovered.dual_bound_kind == "contracted"
    with pytest.raises(ValueError):
        solve(ex1, dual_bound="psychic")


def test_extensions_used_when_steps_too_coarse(ex1):
    # a huge constant step never settles; the feasible-iterate fallback or extensions must rescue it
    res = solve(ex1, rule=Constant(5.0), max_iters=30, stop=None, dual_bound="none")
    assert res.recovered.feasible_for_original
