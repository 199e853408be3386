from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import linprog

from tiesec.envelope import (
    EnvelopeInfeasible,
    _reference_schedule,
    compute_envelope,
    ramp_chain_holds,
    verify_decomposition,
    widen,
)
from tiesec.network import Branch, Bus, DemandSite, Generator, RegionNetwork, RenewableSite, TieLinePort
from tiesec.synthetic import case9, two_region


def one_gen(n_T=2, ramp=10.0, demand=50.0, cap=(0.0, 100.0)):
    return RegionNetwork(
        region_id="one",
        n_T=n_T,
        buses=[Bus(1), Bus(2, True)],
        branches=[Branch(1, 2, 10.0, -500, 500)],
        generators=[Generator(1, cap[0], cap[1], ramp, ramp)],
        renewables=[RenewableSite(1, (0.0,) * n_T)],
        demands=[DemandSite(2, (demand,) * n_T)],
        tie_lines=[TieLinePort(2, "g", -100.0, 100.0)],
        reference_bus=1,
    )


def test_loose_ramps_give_full_capacity_range():
    net = one_gen(ramp=500.0)
    env = compute_envelope(net)
    np.testing.assert_allclose(env.level_min, 0.0)
    np.testing.assert_allclose(env.level_max, 100.0)


def test_single_period_is_capacity_box_without_ramp_rows():
    net = one_gen(n_T=1, ramp=1.0)
    env = compute_envelope(net)
    assert env.level_min.shape == (1, 1)
    assert env.level_min[0, 0] == pytest.approx(0.0) and env.level_max[0, 0] == pytest.approx(100.0)


def _toy_width_oracle(ramp, cap):
    # variables (l1, h1, l2, h2); every dispatch inside [l, h] is feasible here
    c = -np.array([-1.0, 1.0, -1.0, 1.0])
    A = [
        [1, -1, 0, 0],
        [0, 0, 1, -1],
        [-1, 0, 0, 1],  # h2 - l1 <= up
        [0, 1, -1, 0],  # h1 - l2 <= down
    ]
    b = [0, 0, ramp, ramp]
    res = linprog(c, A_ub=A, b_ub=b, bounds=[cap] * 4, method="highs")
    return -res.fun


def test_two_period_toy_matches_lp_oracle():
    net = one_gen(ramp=10.0)
    expected = _toy_width_oracle(10.0, (0.0, 100.0))
    assert expected == pytest.approx(20.0)
    for mode in ("anchored", "widest"):
        env = compute_envelope(net, mode=mode)
        lo, hi = env.level_min[:, 0], env.level_max[:, 0]
        assert hi[1] - lo[0] <= 10.0 and hi[0] - lo[1] <= 10.0
        assert env.width() == pytest.approx(expected, abs=1e-6)


def test_ramp_chain_on_seeded_regions():
    for seed in range(6):
        for net in two_region(seed)[0]:
            for mode in ("anchored", "widest"):
                assert ramp_chain_holds(net, compute_envelope(net, mode=mode))


def test_anchored_envelope_contains_stand_alone_schedule():
    for seed in (10, 14, 28):
        for net in two_region(seed)[0]:
            ref = _reference_schedule(net)
            env = compute_envelope(net)
            assert np.all(env.level_min <= ref + 1e-7) and np.all(ref <= env.level_max + 1e-7)


def test_widest_mode_is_at_least_as_wide():
    for net in two_region(10)[0] + [case9(2)]:
        assert compute_envelope(net, mode="widest").width() >= compute_envelope(net).width() - 1e-6


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        compute_envelope(one_gen(), mode="middle")


def test_infeasible_period_is_named():
    net = one_gen(demand=500.0)
    with pytest.raises(EnvelopeInfeasible, match="period"):
        compute_envelope(net)


def test_sampled_trajectories_respect_ramps():
    net = case9(2)
    rep = verify_decomposition(net, compute_envelope(net), samples=300, seed=2)
    assert rep.ok and rep.violations == 0


def test_widened_envelope_breaks_ramps():
    net = case9(2)
    env = compute_envelope(net)
    up, _ = net.ramps()
    wide = widen(env, net, 2 * up)
    assert not ramp_chain_holds(net, wide)
    assert verify_decomposition(net, wide, samples=300, seed=2).violations > 0


def test_constant_demand_symmetric_envelope_is_tight():
    net = one_gen(ramp=10.0)
    env = compute_envelope(net, mode="widest")
    lo, hi = env.level_min[:, 0], env.level_max[:, 0]
    # total width 20 forces both ramp rows to bind
    assert hi[1] - lo[0] == pytest.approx(10.0) and hi[0] - lo[1] == pytest.approx(10.0)


def test_round_trip():
    env = compute_envelope(case9(2))
    back = type(env).from_dict(env.to_dict())
    assert np.array_equal(back.level_min, env.level_min) and np.array_equal(back.level_max, env.level_max)
