"""One-shot coordination over published security regions and dispatch recovery.

Each region publishes, per period, the vertices of its region together with
the witness point behind every vertex. The coordinator picks convex weights
per region and period, ties neighbouring regions through the shared tie-line
flows and minimises total curtailment in a single LP; each region then fixes
the agreed tie powers and border angles and recovers its own dispatch.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .formulation import add_coupling_rows, build_operating_region
from .lp import INFEASIBLE, LpError, LpProblem, LpSolution, solve_lp
from .network import Interconnection, NetworkError, RegionNetwork
from .projection import SecurityRegion, _threads

# the interconnection record already carries everything the coupling rows need
InterconnectionModel = Interconnection


class CoordinationInfeasible(LpError):
    """No choice of region points satisfies every coupling row.

    ``links`` lists the tie-lines whose removal alone restores feasibility.
    """

    def __init__(self, message: str, links: list[str]):
        super().__init__(message, INFEASIBLE)
        self.links = links


class RecoveryError(LpError):
    """A region cannot realise the coordinated tie powers and angles."""


@dataclass
class RegionPeriodInput:
    """What the coordinator needs from one region in one period."""

    region: SecurityRegion
    membership: np.ndarray  # K x n_tie
    tie_lo: np.ndarray
    tie_hi: np.ndarray


@dataclass
class _Cols:
    lam: np.ndarray
    pt: np.ndarray
    pb: np.ndarray
    theta: np.ndarray
    z: int


@dataclass
class CoordinationSolution:
    """Coordinated coupling values, keyed by region id then period."""

    objective: float
    lam: dict = field(default_factory=dict)  # weights over each region's witness pool
    pt: dict = field(default_factory=dict)
    pb: dict = field(default_factory=dict)
    theta: dict = field(default_factory=dict)
    z: dict = field(default_factory=dict)
    flows: dict = field(default_factory=dict)
    dispatch: dict = field(default_factory=dict)
    solution: LpSolution | None = None

    def coupling(self, rid) -> tuple[np.ndarray, np.ndarray]:
        """Per-period arrays ``(P_B*, theta_B*)`` for region ``rid``."""
        ts = sorted(self.pb[rid])
        return np.array([self.pb[rid][t] for t in ts]), np.array([self.theta[rid][t] for t in ts])


def build_coupling_rows(lp: LpProblem, inter: Interconnection, t: int, pb_of: dict, theta_of: dict, base_mva: float = 100.0):
    """Shared flow per tie-line with its angle-difference row; see :func:`add_coupling_rows`."""
    return add_coupling_rows(lp, inter, t, pb_of, theta_of, base_mva)


def _region_block(lp: LpProblem, rid, t: int, inp: RegionPeriodInput, pin_split: bool) -> _Cols:
    R = inp.region
    V, W, _ = R.pool()
    S = V.shape[0]
    K = inp.membership.shape[0]
    n_tie = inp.membership.shape[1]
    p = f"{rid}.t{t}."
    lam = lp.add_vars(p + "lambda", S, 0.0, math.inf)
    lp.add_row(lam, np.ones(S), "=", 1.0, p + "convex")
    pt = lp.add_vars(p + "pt", K)
    for j in range(K):
        lp.add_row(np.r_[pt[j], lam], np.r_[1.0, -V[:, j]], "=", 0.0, f"{p}pt_mix[{j}]")
    z = lp.add_var(p + "z")
    lp.add_row(np.r_[z, lam], np.r_[1.0, -V[:, K]], "=", 0.0, p + "z_mix")
    th = W[:, R.columns["theta"]]
    theta = lp.add_vars(p + "theta", n_tie)
    for b in range(n_tie):
        lp.add_row(np.r_[theta[b], lam], np.r_[1.0, -th[:, b]], "=", 0.0, f"{p}theta_mix[{b}]")
    pb = lp.add_vars(p + "pb", n_tie, inp.tie_lo, inp.tie_hi)
    for j in range(K):
        members = np.flatnonzero(inp.membership[j])
        lp.add_row(np.r_[pt[j], pb[members]], np.r_[1.0, -np.ones(members.size)], "=", 0.0, f"{p}split[{j}]")
    if pin_split:
        wb = W[:, R.columns["pb"]]
        for b in range(n_tie):
            lp.add_row(np.r_[pb[b], lam], np.r_[1.0, -wb[:, b]], "=", 0.0, f"{p}pb_mix[{b}]")
    return _Cols(lam, pt, pb, theta, z)


def build_coordination_lp(
    inputs: Mapping,
    networks: Sequence[RegionNetwork],
    inter: Interconnection,
    pin_split: bool = True,
    skip_links: frozenset = frozenset(),
):
    """Assemble the coordination LP.

    ``inputs[rid][t]`` is a :class:`RegionPeriodInput`. With ``pin_split``
    the individual tie powers follow the same convex weights as the group
    totals, so the coordinated angles and tie powers come from one witness
    mixture and are jointly realisable by the region.
    """
    nets = {net.region_id: net for net in networks}
    if set(nets) != set(inputs):
        raise NetworkError("coordination inputs and networks cover different regions")
    inter.check(networks)
    base = networks[0].base_mva if networks else 100.0
    periods = sorted({t for per in inputs.values() for t in per})
    lp = LpProblem()
    cols: dict = {rid: {} for rid in inputs}
    for rid in inputs:
        for t in periods:
            cols[rid][t] = _region_block(lp, rid, t, inputs[rid][t], pin_split)
    links = Interconnection([k for k in inter.links if k.name not in skip_links])
    flows = {}
    for t in periods:
        pb_of, th_of = {}, {}
        for rid, net in nets.items():
            c = cols[rid][t]
            for i, port in enumerate(net.tie_lines):
                pb_of[(rid, port.border_bus)] = c.pb[i]
                th_of[(rid, port.border_bus)] = c.theta[i]
        flows[t] = build_coupling_rows(lp, links, t, pb_of, th_of, base)
    lp.set_objective({c.z: 1.0 for per in cols.values() for c in per.values()})
    return lp, cols, flows, links


def _conflicting_links(inputs, networks, inter, pin_split) -> list[str]:
    out = []
    for link in inter.links:
        lp, *_ = build_coordination_lp(inputs, networks, inter, pin_split, frozenset({link.name}))
        if solve_lp(lp).ok:
            out.append(link.name)
    return out


def solve_coordination(
    inputs: Mapping,
    networks: Sequence[RegionNetwork],
    inter: Interconnection | None = None,
    pin_split: bool = True,
) -> CoordinationSolution:
    """Single LP choosing every region's point; minimises total curtailment."""
    inter = inter if inter is not None else Interconnection([])
    lp, cols, flows, links = build_coordination_lp(inputs, networks, inter, pin_split)
    sol = solve_lp(lp)
    if not sol.ok:
        if sol.status == INFEASIBLE:
            bad = _conflicting_links(inputs, networks, inter, pin_split)
            raise CoordinationInfeasible(
                "coordination infeasible: the regions do not meet through the coupling rows"
                + (f"; conflicting tie-lines: {', '.join(bad)}" if bad else ""),
                bad,
            )
        raise LpError(f"coordination LP failed: {sol.status} {sol.message}", sol.status)
    x = sol.x
    out = CoordinationSolution(objective=float(sol.objective), solution=sol)
    for rid, per in cols.items():
        out.lam[rid], out.pt[rid], out.pb[rid], out.theta[rid], out.z[rid] = {}, {}, {}, {}, {}
        for t, c in per.items():
            out.lam[rid][t] = x[c.lam].copy()
            out.pt[rid][t] = x[c.pt].copy()
            out.pb[rid][t] = x[c.pb].copy()
            out.theta[rid][t] = x[c.theta].copy()
            out.z[rid][t] = float(x[c.z])
    for t, f in flows.items():
        out.flows[t] = {link.name: float(x[k]) for link, k in zip(links.links, f)}
    return out


@dataclass
class RecoveredDispatch:
    pg: np.ndarray  # periods x gen
    cr: np.ndarray  # periods x renewable
    z: np.ndarray  # periods
    solution: LpSolution


def recover_regional_dispatch(net: RegionNetwork, pb_star: np.ndarray, theta_star: np.ndarray) -> RecoveredDispatch:
    """Least-curtailment dispatch of the full region with tie powers and angles fixed."""
    pb_star = np.atleast_2d(np.asarray(pb_star, dtype=float))
    theta_star = np.atleast_2d(np.asarray(theta_star, dtype=float))
    if pb_star.shape != (net.n_T, net.n_tie) or theta_star.shape != (net.n_T, net.n_tie):
        raise ValueError(f"coupling arrays must be {net.n_T} x {net.n_tie}")
    frag = build_operating_region(net)
    lp = frag.lp
    for t, v in frag.periods.items():
        lp.fix(v.pb, pb_star[t])
        lp.fix(v.theta, theta_star[t])
    lp.set_objective({v.z: 1.0 for v in frag.periods.values()})
    sol = solve_lp(lp)
    if not sol.ok:
        raise RecoveryError(
            f"region {net.region_id!r}: recovery LP {sol.status} with the coordinated coupling fixed "
            f"(max |P_B*| {np.abs(pb_star).max(initial=0):.6g}, max |theta*| {np.abs(theta_star).max(initial=0):.6g})",
            sol.status,
        )
    ts = sorted(frag.periods)
    return RecoveredDispatch(
        pg=np.array([sol.x[frag.periods[t].pg] for t in ts]),
        cr=np.array([sol.x[frag.periods[t].cr] for t in ts]),
        z=np.array([sol.x[frag.periods[t].z] for t in ts]),
        solution=sol,
    )


def recover_all(solution: CoordinationSolution, networks: Sequence[RegionNetwork]) -> dict:
    """One recovery LP per region (run concurrently when threads are enabled)."""

    def one(net):
        pb, th = solution.coupling(net.region_id)
        return net.region_id, recover_regional_dispatch(net, pb, th)

    n = _threads()
    if n > 1 and len(networks) > 1:
        with ThreadPoolExecutor(max_workers=n) as ex:
            done = list(ex.map(one, networks))
    else:
        done = [one(net) for net in networks]
    solution.dispatch = dict(done)
    return solution.dispatch


def convex_combination_gap(solution: CoordinationSolution, inputs: Mapping) -> float:
    """Largest deviation between coordinated values and the weighted witnesses."""
    worst = 0.0
    for rid, per in inputs.items():
        for t, inp in per.items():
            lam = solution.lam[rid][t]
            V, W, _ = inp.region.pool()
            K = inp.membership.shape[0]
            worst = max(
                worst,
                float(np.abs(lam @ V[:, :K] - solution.pt[rid][t]).max(initial=0.0)),
                abs(float(lam @ V[:, K]) - solution.z[rid][t]),
                float(np.abs(lam @ W[:, inp.region.columns["theta"]] - solution.theta[rid][t]).max(initial=0.0)),
            )
    return worst


def vertex_weights(solution: CoordinationSolution, inputs: Mapping, rid, t: int) -> np.ndarray:
    """Pool weights summed per owning vertex.

    Witnesses at non-vertex sites (owner ``-1``) are collected in one extra
    trailing entry.
    """
    _, _, owner = inputs[rid][t].region.pool()
    n = inputs[rid][t].region.n_vertices
    slot = np.where(owner < 0, n, owner)
    return np.bincount(slot, weights=solution.lam[rid][t], minlength=n + 1)
