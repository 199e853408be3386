"""Multi-period DC network model of one regional power system.

Powers are in MW on a common base (``base_mva``), susceptances in per-unit.
Tie-line power ``P_B`` is always expressed as the injection *into* the
region at its border bus; the interconnection maps it to the shared
directed flow through the port orientation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

BusId = Hashable


class NetworkError(ValueError):
    """Raised when a network cannot be turned into constraint matrices."""


class DisconnectedNetworkError(NetworkError):
    """The reduced susceptance matrix is singular."""


@dataclass(frozen=True)
class Bus:
    id: BusId
    is_border: bool = False


@dataclass(frozen=True)
class Branch:
    from_bus: BusId
    to_bus: BusId
    susceptance: float
    flow_min: float
    flow_max: float


@dataclass(frozen=True)
class Generator:
    bus: BusId
    cap_min: float
    cap_max: float
    ramp_up: float
    ramp_down: float


@dataclass(frozen=True)
class RenewableSite:
    bus: BusId
    profile: tuple[float, ...]


@dataclass(frozen=True)
class DemandSite:
    bus: BusId
    profile: tuple[float, ...]


@dataclass(frozen=True)
class TieLinePort:
    border_bus: BusId
    group: Hashable
    flow_min: float
    flow_max: float
    orientation: int = 1


@dataclass
class RegionNetwork:
    region_id: Hashable
    n_T: int
    buses: list[Bus]
    branches: list[Branch]
    generators: list[Generator] = field(default_factory=list)
    renewables: list[RenewableSite] = field(default_factory=list)
    demands: list[DemandSite] = field(default_factory=list)
    tie_lines: list[TieLinePort] = field(default_factory=list)
    reference_bus: BusId = None
    base_mva: float = 100.0

    @property
    def bus_index(self) -> dict:
        return {b.id: i for i, b in enumerate(self.buses)}

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_gen(self) -> int:
        return len(self.generators)

    @property
    def n_ren(self) -> int:
        return len(self.renewables)

    @property
    def n_tie(self) -> int:
        return len(self.tie_lines)

    def renewable_at(self, t: int) -> np.ndarray:
        return np.array([r.profile[t] for r in self.renewables], dtype=float)

    def demand_at(self, t: int) -> np.ndarray:
        return np.array([d.profile[t] for d in self.demands], dtype=float)

    def tie_box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([p.flow_min for p in self.tie_lines], dtype=float)
        hi = np.array([p.flow_max for p in self.tie_lines], dtype=float)
        return lo, hi

    def gen_caps(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([g.cap_min for g in self.generators], dtype=float)
        hi = np.array([g.cap_max for g in self.generators], dtype=float)
        return lo, hi

    def ramps(self) -> tuple[np.ndarray, np.ndarray]:
        up = np.array([g.ramp_up for g in self.generators], dtype=float)
        down = np.array([g.ramp_down for g in self.generators], dtype=float)
        return up, down


@dataclass(frozen=True)
class NetworkMatrices:
    """Constant matrices of one region and period.

    ``ptdf`` maps bus injections (MW) to branch flows (MW); ``border_angle_map``
    maps bus injections (MW) to border-bus angles (rad). The ``A_*`` and
    ``B_*`` blocks are those maps restricted to generator, tie-line,
    renewable and demand injections. ``B_D``/``A_D`` already carry the
    withdrawal sign, so a demand profile enters with a plus sign.
    """

    ptdf: np.ndarray
    border_angle_map: np.ndarray
    M_G: np.ndarray
    M_B: np.ndarray
    M_R: np.ndarray
    M_D: np.ndarray
    tie_sign: np.ndarray

    @property
    def A_G(self) -> np.ndarray:
        return self.ptdf @ self.M_G

    @property
    def A_B(self) -> np.ndarray:
        return self.ptdf @ self.M_B

    @property
    def A_R(self) -> np.ndarray:
        return self.ptdf @ self.M_R

    @property
    def A_D(self) -> np.ndarray:
        return self.ptdf @ self.M_D

    @property
    def B_G(self) -> np.ndarray:
        return self.border_angle_map @ self.M_G

    @property
    def B_B(self) -> np.ndarray:
        return self.border_angle_map @ self.M_B

    @property
    def B_R(self) -> np.ndarray:
        return self.border_angle_map @ self.M_R

    @property
    def B_D(self) -> np.ndarray:
        return self.border_angle_map @ self.M_D


def _incidence(net: RegionNetwork, buses: Sequence[BusId], sign: float = 1.0) -> np.ndarray:
    idx = net.bus_index
    M = np.zeros((net.n_bus, len(buses)))
    for k, b in enumerate(buses):
        M[idx[b], k] = sign
    return M


def susceptance_matrix(net: RegionNetwork) -> np.ndarray:
    idx = net.bus_index
    n = net.n_bus
    Bbus = np.zeros((n, n))
    for br in net.branches:
        i, j = idx[br.from_bus], idx[br.to_bus]
        Bbus[i, i] += br.susceptance
        Bbus[j, j] += br.susceptance
        Bbus[i, j] -= br.susceptance
        Bbus[j, i] -= br.susceptance
    return Bbus


def branch_incidence(net: RegionNetwork) -> np.ndarray:
    """Branch-by-bus matrix with +1 at the from bus and -1 at the to bus."""
    idx = net.bus_index
    C = np.zeros((len(net.branches), net.n_bus))
    for k, br in enumerate(net.branches):
        C[k, idx[br.from_bus]] = 1.0
        C[k, idx[br.to_bus]] = -1.0
    return C


def angle_sensitivity(net: RegionNetwork) -> np.ndarray:
    """Bus-by-bus map from MW injections to angles (rad), reference grounded."""
    if net.reference_bus not in net.bus_index:
        raise NetworkError(f"reference bus {net.reference_bus!r} not in region {net.region_id!r}")
    ref = net.bus_index[net.reference_bus]
    keep = [i for i in range(net.n_bus) if i != ref]
    Bred = susceptance_matrix(net)[np.ix_(keep, keep)]
    n = net.n_bus
    X = np.zeros((n, n))
    if keep:
        if np.linalg.matrix_rank(Bred) < len(keep):
            raise DisconnectedNetworkError(f"region {net.region_id!r}: reduced susceptance matrix is singular")
        X[np.ix_(keep, keep)] = np.linalg.inv(Bred)
    return X / net.base_mva


def build_ptdf(net: RegionNetwork, t: int = 0) -> np.ndarray:
    """Branch-by-bus PTDF with the reference bus as the balancing sink.

    The network topology is static, so ``t`` only exists for symmetry with
    the time-indexed constraint builders.
    """
    X = angle_sensitivity(net)
    b = np.array([br.susceptance for br in net.branches])
    return net.base_mva * (b[:, None] * branch_incidence(net)) @ X


def build_border_angle_map(net: RegionNetwork, t: int = 0) -> np.ndarray:
    """Rows of the reduced inverse susceptance matrix at the border buses."""
    X = angle_sensitivity(net)
    idx = net.bus_index
    rows = [idx[p.border_bus] for p in net.tie_lines]
    return X[rows, :]


def build_matrices(net: RegionNetwork, t: int = 0) -> NetworkMatrices:
    return NetworkMatrices(
        ptdf=build_ptdf(net, t),
        border_angle_map=build_border_angle_map(net, t),
        M_G=_incidence(net, [g.bus for g in net.generators]),
        M_B=_incidence(net, [p.border_bus for p in net.tie_lines]),
        M_R=_incidence(net, [r.bus for r in net.renewables]),
        M_D=_incidence(net, [d.bus for d in net.demands], sign=-1.0),
        tie_sign=np.array([float(p.orientation) for p in net.tie_lines]),
    )


def dc_solve(net: RegionNetwork, injections: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Direct DC power flow: bus angles and branch flows for MW injections.

    The reference bus absorbs the imbalance. Solved with a linear solve on
    the reduced system rather than through any precomputed sensitivity.
    """
    idx = net.bus_index
    ref = idx[net.reference_bus]
    keep = [i for i in range(net.n_bus) if i != ref]
    Bbus = susceptance_matrix(net)
    theta = np.zeros(net.n_bus)
    if keep:
        p = np.asarray(injections, dtype=float)[keep] / net.base_mva
        theta[keep] = np.linalg.solve(Bbus[np.ix_(keep, keep)], p)
    flows = np.array(
        [net.base_mva * br.susceptance * (theta[idx[br.from_bus]] - theta[idx[br.to_bus]]) for br in net.branches]
    )
    return theta, flows


def validate_network(net: RegionNetwork) -> list[str]:
    """Check the model invariants; return human-readable violations."""
    out: list[str] = []
    ids = [b.id for b in net.buses]
    if len(set(ids)) != len(ids):
        out.append("buses: duplicate bus ids")
    known = set(ids)
    if net.reference_bus not in known:
        out.append(f"reference_bus: {net.reference_bus!r} is not a bus")
    if net.n_T < 1:
        out.append("n_T: must be >= 1")

    for k, br in enumerate(net.branches):
        where = f"branches[{k}]"
        for end in (br.from_bus, br.to_bus):
            if end not in known:
                out.append(f"{where}: unknown bus {end!r}")
        if not br.susceptance > 0:
            out.append(f"{where}: susceptance must be > 0")
        if not br.flow_min <= 0 <= br.flow_max:
            out.append(f"{where}: flow limits must satisfy flow_min <= 0 <= flow_max")

    for k, g in enumerate(net.generators):
        where = f"generators[{k}]"
        if g.bus not in known:
            out.append(f"{where}: unknown bus {g.bus!r}")
        if not 0 <= g.cap_min <= g.cap_max:
            out.append(f"{where}: need 0 <= cap_min <= cap_max")
        if g.ramp_up < 0 or g.ramp_down < 0:
            out.append(f"{where}: ramp magnitudes must be >= 0")

    for kind, sites in (("renewables", net.renewables), ("demands", net.demands)):
        for k, s in enumerate(sites):
            where = f"{kind}[{k}]"
            if s.bus not in known:
                out.append(f"{where}: unknown bus {s.bus!r}")
            if len(s.profile) != net.n_T:
                out.append(f"{where}: profile length {len(s.profile)} != n_T {net.n_T}")
            if any(v < 0 for v in s.profile):
                out.append(f"{where}: profile must be nonnegative")

    border = {b.id for b in net.buses if b.is_border}
    seen: dict = {}
    for k, p in enumerate(net.tie_lines):
        where = f"tie_lines[{k}]"
        if p.border_bus not in known:
            out.append(f"{where}: unknown bus {p.border_bus!r}")
        elif p.border_bus not in border:
            out.append(f"{where}: bus {p.border_bus!r} is not flagged as a border bus")
        if p.border_bus in seen:
            out.append(f"{where}: one tie-line per border bus violated at bus {p.border_bus!r}")
        seen[p.border_bus] = k
        if not p.flow_min <= p.flow_max:
            out.append(f"{where}: flow_min > flow_max")
        if p.orientation not in (1, -1):
            out.append(f"{where}: orientation must be +1 or -1")
    for b in sorted(border - set(seen), key=str):
        out.append(f"buses: border bus {b!r} hosts no tie-line")

    if not out and not _connected(net):
        out.append("branches: network graph is not connected")
    return out


def _connected(net: RegionNetwork) -> bool:
    if not net.buses:
        return False
    adj: dict = {b.id: set() for b in net.buses}
    for br in net.branches:
        adj[br.from_bus].add(br.to_bus)
        adj[br.to_bus].add(br.from_bus)
    stack = [net.buses[0].id]
    seen = set(stack)
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(adj)


def group_labels(net: RegionNetwork) -> list:
    """Distinct group labels in order of first appearance."""
    labels: list = []
    for p in net.tie_lines:
        if p.group not in labels:
            labels.append(p.group)
    return labels


@dataclass(frozen=True)
class TieLink:
    """One tie-line between two regions; positive flow runs from -> to."""

    name: str
    from_region: Hashable
    from_bus: BusId
    to_region: Hashable
    to_bus: BusId
    reactance: float


@dataclass
class Interconnection:
    links: list[TieLink] = field(default_factory=list)

    def check(self, networks: Sequence[RegionNetwork]) -> None:
        """Raise :class:`NetworkError` on dangling endpoints or bad orientation."""
        ports = {}
        for net in networks:
            for p in net.tie_lines:
                ports[(net.region_id, p.border_bus)] = p
        used = set()
        for link in self.links:
            if not link.reactance > 0:
                raise NetworkError(f"tie-line {link.name!r}: reactance must be > 0")
            if link.from_region == link.to_region:
                raise NetworkError(f"tie-line {link.name!r}: both ends in region {link.from_region!r}")
            for end, sign in (((link.from_region, link.from_bus), -1), ((link.to_region, link.to_bus), 1)):
                if end not in ports:
                    raise NetworkError(f"tie-line {link.name!r}: endpoint {end!r} is not a border port")
                if end in used:
                    raise NetworkError(f"tie-line {link.name!r}: border port {end!r} already connected")
                used.add(end)
                if ports[end].orientation != sign:
                    raise NetworkError(
                        f"tie-line {link.name!r}: port {end!r} orientation {ports[end].orientation} != {sign}"
                    )
