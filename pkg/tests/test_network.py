from __future__ import annotations

import numpy as np
import pytest

from tiesec.network import (
    Branch,
    Bus,
    DemandSite,
    DisconnectedNetworkError,
    Generator,
    RegionNetwork,
    RenewableSite,
    TieLinePort,
    build_border_angle_map,
    build_matrices,
    build_ptdf,
    dc_solve,
    validate_network,
)
from tiesec.synthetic import case9, make_region


def two_bus(b=10.0, border=1):
    return RegionNetwork(
        region_id="two",
        n_T=1,
        buses=[Bus(1, border == 1), Bus(2, border == 2)],
        branches=[Branch(1, 2, b, -100, 100)],
        tie_lines=[TieLinePort(border, "g", -50, 50)],
        reference_bus=2,
    )


def triangle(ref=3):
    return RegionNetwork(
        region_id="tri",
        n_T=1,
        buses=[Bus(1, True), Bus(2, True), Bus(3)],
        branches=[Branch(1, 2, 5.0, -100, 100), Branch(2, 3, 5.0, -100, 100), Branch(1, 3, 5.0, -100, 100)],
        tie_lines=[TieLinePort(1, "a", -10, 10), TieLinePort(2, "b", -10, 10)],
        reference_bus=ref,
    )


def test_two_bus_single_path_ptdf_is_one():
    S = build_ptdf(two_bus())
    assert S[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_reference_column_is_zero():
    S = build_ptdf(triangle())
    assert np.all(S[:, 2] == 0.0)


def test_triangle_split_two_thirds_one_third():
    net = triangle()
    # inject 1 MW at bus 1, withdraw at bus 3 (the reference)
    _, flows = dc_solve(net, np.array([1.0, 0.0, -1.0]))
    np.testing.assert_allclose(flows, [1 / 3, 1 / 3, 2 / 3], atol=1e-12)
    S = build_ptdf(net)
    np.testing.assert_allclose(S[:, 0], flows, atol=1e-9)


def test_ptdf_matches_direct_solve_for_every_pair():
    net = case9()
    S = build_ptdf(net)
    idx = net.bus_index
    ref = idx[net.reference_bus]
    for i in range(net.n_bus):
        for j in range(net.n_bus):
            if i == j:
                continue
            inj = np.zeros(net.n_bus)
            inj[i], inj[j] = 1.0, -1.0
            _, flows = dc_solve(net, inj)
            np.testing.assert_allclose(S[:, i] - S[:, j], flows, atol=1e-9)
    assert np.all(S[:, ref] == 0)


def test_zero_injection_gives_zero_angles():
    net = case9()
    X = build_border_angle_map(net)
    assert np.all(X @ np.zeros(net.n_bus) == 0)


def test_two_bus_angle_is_p_over_b():
    b, p = 8.0, 40.0
    net = two_bus(b)
    X = build_border_angle_map(net)
    # MW to per unit on the 100 MVA base
    assert (X @ np.array([p, 0.0]))[0] == pytest.approx(p / net.base_mva / b, rel=1e-12)


def test_border_angles_match_direct_solve():
    rng = np.random.default_rng(3)
    net = make_region("R", [(1, "a"), (-1, "b")], True, rng)
    m = build_matrices(net)
    for _ in range(5):
        pg = rng.uniform(0, 50, net.n_gen)
        pb = rng.uniform(-20, 20, net.n_tie)
        pr = net.renewable_at(0)
        cr = rng.uniform(0, 1, net.n_ren) * pr
        pd = net.demand_at(0)
        inj = m.M_G @ pg + m.M_B @ pb + m.M_R @ (pr - cr) + m.M_D @ pd
        theta, _ = dc_solve(net, inj)
        border = [net.bus_index[p.border_bus] for p in net.tie_lines]
        via_blocks = m.B_G @ pg + m.B_B @ pb + m.B_R @ (pr - cr) + m.B_D @ pd
        np.testing.assert_allclose(via_blocks, theta[border], atol=1e-9)


def test_demand_blocks_carry_withdrawal_sign():
    m = build_matrices(case9())
    np.testing.assert_allclose(m.A_D, -(m.ptdf @ np.abs(m.M_D)))


def test_disconnected_network_raises():
    net = RegionNetwork(
        region_id="split",
        n_T=1,
        buses=[Bus(1), Bus(2), Bus(3)],
        branches=[Branch(1, 2, 5.0, -10, 10)],
        reference_bus=1,
    )
    assert any("not connected" in p for p in validate_network(net))
    with pytest.raises(DisconnectedNetworkError):
        build_ptdf(net)


def test_validation_lists_locations():
    net = RegionNetwork(
        region_id="bad",
        n_T=2,
        buses=[Bus(1, True), Bus(1), Bus(3, True)],
        branches=[Branch(1, 3, -1.0, 5, 10)],
        generators=[Generator(1, 20, 10, -1, 0)],
        renewables=[RenewableSite(3, (1.0,))],
        demands=[DemandSite(3, (1.0, -2.0))],
        tie_lines=[TieLinePort(1, "g", 5, -5, 2), TieLinePort(1, "g", -1, 1)],
        reference_bus=9,
    )
    problems = "\n".join(validate_network(net))
    for needle in (
        "duplicate bus ids",
        "reference_bus",
        "branches[0]: susceptance",
        "branches[0]: flow limits",
        "generators[0]: need 0 <= cap_min",
        "generators[0]: ramp",
        "renewables[0]: profile length",
        "demands[0]: profile must be nonnegative",
        "tie_lines[0]: flow_min > flow_max",
        "tie_lines[0]: orientation",
        "tie_lines[1]: one tie-line per border bus",
        "border bus 3 hosts no tie-line",
    ):
        assert needle in problems


def test_bundled_9bus_is_valid():
    assert validate_network(case9(2)) == []
