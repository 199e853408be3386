"""Small synthetic systems used by the tests, the bundled cases and the benchmark.

``case9`` is a 9-bus, 3-machine system with four border buses (1, 3, 7, 9),
each terminating one tie-line. ``two_region`` builds seeded surplus/deficit
pairs; ``five_region`` chains five such areas with five tie-lines.
"""

from __future__ import annotations

import numpy as np

from .network import (
    Branch,
    Bus,
    DemandSite,
    Generator,
    Interconnection,
    RegionNetwork,
    RenewableSite,
    TieLinePort,
    TieLink,
)

# (from, to, reactance p.u., limit MW)
_CASE9_BRANCHES = [
    (1, 4, 0.0576, 250.0),
    (4, 5, 0.092, 120.0),
    (5, 6, 0.17, 150.0),
    (3, 6, 0.0586, 300.0),
    (6, 7, 0.1008, 120.0),
    (7, 8, 0.072, 250.0),
    (8, 2, 0.0625, 250.0),
    (8, 9, 0.161, 250.0),
    (9, 4, 0.085, 250.0),
]
_CASE9_BORDER = (1, 3, 7, 9)


def case9(
    n_T: int = 1,
    groups: dict | None = None,
    tie_limit: float = 100.0,
    region_id="R9",
) -> RegionNetwork:
    """9-bus region with tie-lines at buses 1, 3, 7 and 9.

    ``groups`` maps border bus to group label; the default pairs
    ``{1, 9}`` and ``{3, 7}``. Load and renewable profiles grow mildly
    over the horizon.
    """
    if groups is None:
        groups = {1: "g19", 9: "g19", 3: "g37", 7: "g37"}
    load_scale = [1.0 + 0.15 * t for t in range(n_T)]
    ren_scale = [1.0 + 0.25 * t for t in range(n_T)]
    return RegionNetwork(
        region_id=region_id,
        n_T=n_T,
        buses=[Bus(b, b in _CASE9_BORDER) for b in range(1, 10)],
        branches=[Branch(f, t, 1.0 / x, -lim, lim) for f, t, x, lim in _CASE9_BRANCHES],
        generators=[
            Generator(1, 10.0, 250.0, 60.0, 60.0),
            Generator(2, 10.0, 300.0, 80.0, 80.0),
            Generator(3, 10.0, 270.0, 60.0, 60.0),
        ],
        renewables=[
            RenewableSite(5, tuple(120.0 * s for s in ren_scale)),
            RenewableSite(8, tuple(80.0 * s for s in ren_scale)),
        ],
        demands=[
            DemandSite(5, tuple(90.0 * s for s in load_scale)),
            DemandSite(7, tuple(100.0 * s for s in load_scale)),
            DemandSite(9, tuple(125.0 * s for s in load_scale)),
        ],
        tie_lines=[TieLinePort(b, groups[b], -tie_limit, tie_limit) for b in _CASE9_BORDER],
        reference_bus=2,
    )


def _round(x: float) -> float:
    return float(round(x, 3))


def make_region(
    region_id,
    ports: list[tuple[int, object]],
    surplus: bool,
    rng: np.random.Generator,
    n_T: int = 2,
    n_inner: int = 4,
) -> RegionNetwork:
    """Seeded region: an inner ring with a chord plus one radial spur per port.

    ``ports`` lists ``(orientation, group)``; port ``k`` sits on bus
    ``n_inner + 1 + k``, closes a loop between two neighbouring inner buses
    and carries a fast unit, so the region can steer its border angles by
    redispatch. Bus 1 is the reference and carries a slow unit. A surplus region has a large
    renewable site and light load, a deficit region the reverse.
    """
    inner = list(range(1, n_inner + 1))
    border = [n_inner + 1 + k for k in range(len(ports))]
    edges = [(b, b % n_inner + 1) for b in inner] + [(1, 3)]
    branches = [Branch(f, t, _round(rng.uniform(5.0, 20.0)), -300.0, 300.0) for f, t in edges]
    for k, b in enumerate(border):
        a = k % (n_inner - 1) + 2
        for hub in (a, a % n_inner + 1):
            branches.append(Branch(hub, b, _round(rng.uniform(5.0, 20.0)), -300.0, 300.0))
    gens = [Generator(1, _round(rng.uniform(5, 15)), 150.0, 50.0, 50.0)]
    gens += [Generator(b, 0.0, _round(rng.uniform(40, 80)), 40.0, 40.0) for b in border]
    ren_bus, load_bus = 2, n_inner
    if surplus:
        ren = [_round(rng.uniform(110, 160)) for _ in range(n_T)]
        load = [_round(rng.uniform(20, 40)) for _ in range(n_T)]
    else:
        ren = [_round(rng.uniform(0, 15)) for _ in range(n_T)]
        load = [_round(rng.uniform(120, 180)) for _ in range(n_T)]
    lim = [_round(rng.uniform(60, 120)) for _ in ports]
    return RegionNetwork(
        region_id=region_id,
        n_T=n_T,
        buses=[Bus(b, b in border) for b in inner + border],
        branches=branches,
        generators=gens,
        renewables=[RenewableSite(ren_bus, tuple(ren))],
        demands=[DemandSite(load_bus, tuple(load))],
        tie_lines=[TieLinePort(b, g, -l, l, o) for b, (o, g), l in zip(border, ports, lim)],
        reference_bus=1,
    )


def two_region(seed: int, n_T: int = 2, n_links: int = 1) -> tuple[list[RegionNetwork], Interconnection]:
    """Surplus region ``A`` exporting to deficit region ``B`` over one or two ties."""
    rng = np.random.default_rng(seed)
    A = make_region("A", [(-1, "AB")] * n_links, True, rng, n_T)
    B = make_region("B", [(1, "AB")] * n_links, False, rng, n_T)
    links = [
        TieLink(f"AB{k}", "A", A.tie_lines[k].border_bus, "B", B.tie_lines[k].border_bus, _round(rng.uniform(0.05, 0.2)))
        for k in range(n_links)
    ]
    return [A, B], Interconnection(links)


def five_region(seed: int = 5, n_T: int = 2) -> tuple[list[RegionNetwork], Interconnection]:
    """Chain R1-R2-R3-R4-R5 with a doubled R2-R3 corridor (five tie-lines).

    Odd regions are surplus areas, even regions deficit areas.
    """
    rng = np.random.default_rng(seed)
    # (region, neighbour, orientation) per port, in port order
    ports = {
        "R1": [(-1, "R2")],
        "R2": [(1, "R1"), (-1, "R3"), (-1, "R3")],
        "R3": [(1, "R2"), (1, "R2"), (-1, "R4")],
        "R4": [(1, "R3"), (-1, "R5")],
        "R5": [(1, "R4")],
    }
    surplus = {"R1": True, "R2": False, "R3": True, "R4": False, "R5": True}
    nets = {r: make_region(r, ports[r], surplus[r], rng, n_T) for r in ports}

    def bus(r, k):
        return nets[r].tie_lines[k].border_bus

    pairs = [("R1", 0, "R2", 0), ("R2", 1, "R3", 0), ("R2", 2, "R3", 1), ("R3", 2, "R4", 0), ("R4", 1, "R5", 0)]
    links = [
        TieLink(f"L{k + 1}", a, bus(a, i), b, bus(b, j), _round(rng.uniform(0.05, 0.2)))
        for k, (a, i, b, j) in enumerate(pairs)
    ]
    return list(nets.values()), Interconnection(links)
