from __future__ import annotations

import math

import numpy as np
import pytest

from tiesec.envelope import compute_envelope
from tiesec.formulation import (
    build_op1,
    build_operating_region,
    check_point_feasibility,
    coupling_flow,
    solve_islanded,
    zero_exchange_consistent,
)
from tiesec.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, solve_lp
from tiesec.network import Branch, Bus, DemandSite, Generator, RegionNetwork, RenewableSite, TieLinePort
from tiesec.oracles import solve_centralized_op1
from tiesec.synthetic import case9, two_region


def test_min_x_at_least_three():
    lp = LpProblem()
    x = lp.add_var("x")
    lp.add_row([x], [1.0], ">=", 3.0)
    lp.set_objective({x: 1.0})
    sol = solve_lp(lp)
    assert sol.status == OPTIMAL and sol.x[x] == pytest.approx(3.0)


def test_crossed_rows_are_infeasible():
    lp = LpProblem()
    x = lp.add_var("x")
    lp.add_row([x], [1.0], "<=", 1.0)
    lp.add_row([x], [1.0], ">=", 2.0)
    lp.set_objective({x: 1.0}, "max")
    assert solve_lp(lp).status == INFEASIBLE


def test_textbook_simplex_case():
    lp = LpProblem()
    x, y = lp.add_vars("v", 2, 0.0)
    lp.add_row([x, y], [1.0, 1.0], "<=", 1.0)
    lp.set_objective({x: -1.0, y: -1.0})
    assert solve_lp(lp).objective == pytest.approx(-1.0)


def test_unbounded_reported():
    lp = LpProblem()
    x = lp.add_var("x", 0.0)
    lp.set_objective({x: 1.0}, "max")
    assert solve_lp(lp).status == UNBOUNDED


def test_invalid_problem_rejected():
    lp = LpProblem()
    x = lp.add_var("x")
    with pytest.raises(ValueError):
        lp.add_row([x], [math.nan], "<=", 1.0)
        solve_lp(lp)


def _random_lp(rng, m=8, n=5):
    lp = LpProblem()
    x = lp.add_vars("x", n, -10.0, 10.0)
    A = rng.normal(size=(m, n))
    b = rng.uniform(1, 5, m)
    for i in range(m):
        lp.add_row(x, A[i], "<=", b[i])
    lp.set_objective(dict(zip(map(int, x), rng.normal(size=n))))
    return lp, A, b, x


def test_relaxing_rhs_never_hurts():
    rng = np.random.default_rng(0)
    for _ in range(20):
        lp, A, b, x = _random_lp(rng)
        base = solve_lp(lp)
        assert base.ok
        relaxed = LpProblem()
        xr = relaxed.add_vars("x", len(x), -10.0, 10.0)
        delta = rng.uniform(0, 1, len(b))
        for i in range(len(b)):
            relaxed.add_row(xr, A[i], "<=", b[i] + delta[i])
        relaxed.set_objective(lp.objective)
        assert solve_lp(relaxed).objective <= base.objective + 1e-9


def test_solve_is_deterministic():
    rng = np.random.default_rng(1)
    lp, *_ = _random_lp(rng)
    a, b = solve_lp(lp), solve_lp(lp.copy())
    assert a.objective == b.objective and np.array_equal(a.x, b.x)


def test_mps_dump_lists_every_column_and_row():
    lp = build_operating_region(case9())
    text = lp.lp.to_mps()
    assert text.startswith("NAME") and text.rstrip().endswith("ENDATA")
    assert text.count("\n E  ") + text.count("\n L  ") + text.count("\n G  ") == lp.lp.n_rows


def _tiny(pr, pd, cap=0.0):
    return RegionNetwork(
        region_id="tiny",
        n_T=1,
        buses=[Bus(1), Bus(2, True)],
        branches=[Branch(1, 2, 10.0, -500, 500)],
        generators=[Generator(1, 0.0, cap, 10.0, 10.0)],
        renewables=[RenewableSite(1, (pr,))],
        demands=[DemandSite(2, (pd,))],
        tie_lines=[TieLinePort(2, "g", -5.0, 5.0)],
        reference_bus=1,
    )


def test_balance_by_renewables_alone_needs_no_curtailment():
    sol = solve_islanded(_tiny(50.0, 50.0))
    assert sol.ok and sol.objective == pytest.approx(0.0)


def test_demand_beyond_supply_is_infeasible():
    frag = build_operating_region(_tiny(10.0, 100.0, cap=20.0))
    assert solve_lp(frag.lp).status == INFEASIBLE


def test_ramps_link_periods_only_in_full_region():
    net = case9(2)
    full = build_operating_region(net)
    env = compute_envelope(net)
    dec = build_operating_region(net, envelope=env, include_ramps=False)
    assert any("ramp" in n for n in full.lp.row_names)
    assert not any("ramp" in n for n in dec.lp.row_names)
    with pytest.raises(ValueError):
        build_operating_region(net, include_ramps=False)


def test_op1_single_region_equals_islanded():
    net = case9(2)
    assert solve_centralized_op1([net]).objective == pytest.approx(solve_islanded(net).objective, abs=1e-6)


def test_zero_renewables_give_zero_curtailment():
    net = _tiny(0.0, 10.0, cap=20.0)
    res = solve_centralized_op1([net])
    assert res.objective == pytest.approx(0.0)


def test_exchange_lowers_centralized_curtailment():
    # surplus region A, deficit region B over one tie
    nets, inter = two_region(31)
    coupled = solve_centralized_op1(nets, inter).objective
    islanded = sum(solve_islanded(n).objective for n in nets)
    assert coupled < islanded - 1.0


def test_op1_rejects_mismatched_endpoints():
    nets, inter = two_region(31)
    link = inter.links[0]
    inter.links[0] = type(link)(link.name, link.from_region, link.from_bus, link.to_region, 999, link.reactance)
    with pytest.raises(ValueError, match="not a border port"):
        build_op1(nets, inter)


def test_coupling_flow_arithmetic():
    assert coupling_flow(0.3, 0.3, 0.1) == 0.0
    assert coupling_flow(0.05, 0.0, 0.1) == pytest.approx(0.5)


def test_zero_exchange_consistency_reports_both_sides():
    nets, inter = two_region(31)
    ok, at_zero, isl = zero_exchange_consistent(nets, inter)
    assert ok and at_zero == pytest.approx(isl, abs=1e-6)


def test_point_feasibility_rejects_out_of_box_tie_power():
    net = case9(1)
    res = check_point_feasibility(net, np.array([[500.0, 0, 0, 0]]), np.array([0.0]))
    assert not res.feasible


def test_point_feasibility_accepts_islanded_schedule():
    net = case9(2)
    z = solve_islanded(net)
    frag = build_operating_region(net)
    zs = np.array([z.x[frag.periods[t].z] for t in range(2)])
    assert check_point_feasibility(net, np.zeros((2, net.n_tie)), zs).feasible
