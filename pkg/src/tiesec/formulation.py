"""Assembly of the regional operating region and the centralized problem.

Per region and period the columns are generator output ``pg``, renewable
curtailment ``cr``, tie-line injection ``pb``, border angle ``theta`` and the
curtailment epigraph ``z``. The full region ``X`` uses physical capacities
plus ramp rows; the decoupled region ``Y`` replaces both by the dispatch
envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .lp import OPTIMAL, LpProblem, LpSolution, solve_lp, FEAS_TOL
from .network import Interconnection, NetworkError, NetworkMatrices, RegionNetwork, build_matrices

if TYPE_CHECKING:
    from .envelope import DispatchEnvelope


@dataclass
class PeriodVars:
    """Column indices of one region-period block inside an :class:`LpProblem`."""

    pg: np.ndarray
    cr: np.ndarray
    pb: np.ndarray
    theta: np.ndarray
    z: int
    pt: np.ndarray | None = None


@dataclass
class RegionFragment:
    lp: LpProblem
    periods: dict[int, PeriodVars] = field(default_factory=dict)
    region_id: object = None


@dataclass(frozen=True)
class BranchApprox:
    """Aggregated replacement of the tie-line term in the branch rows."""

    alpha: np.ndarray  # branch x group
    beta: np.ndarray  # branch
    eps: np.ndarray  # branch
    membership: np.ndarray  # group x tie


def add_period_block(
    lp: LpProblem,
    net: RegionNetwork,
    mats: NetworkMatrices,
    t: int,
    gen_lo: np.ndarray,
    gen_hi: np.ndarray,
    tie_lo: np.ndarray | None = None,
    tie_hi: np.ndarray | None = None,
    approx: BranchApprox | None = None,
    prefix: str = "",
) -> PeriodVars:
    """Append the single-period rows (power balance through epigraph) to ``lp``."""
    pr = net.renewable_at(t)
    pd = net.demand_at(t)
    if tie_lo is None or tie_hi is None:
        tie_lo, tie_hi = net.tie_box()
    p = f"{prefix}t{t}."
    pg = lp.add_vars(p + "pg", net.n_gen, gen_lo, gen_hi)
    cr = lp.add_vars(p + "cr", net.n_ren, 0.0, pr)
    pb = lp.add_vars(p + "pb", net.n_tie, tie_lo, tie_hi)
    theta = lp.add_vars(p + "theta", net.n_tie, -math.pi, math.pi)
    z = lp.add_var(p + "z", 0.0, float(pr.sum()))
    pt = None
    if approx is not None:
        K = approx.membership.shape[0]
        pt = lp.add_vars(p + "pt", K)
        for j in range(K):
            members = np.flatnonzero(approx.membership[j])
            lp.add_row(np.r_[pt[j], pb[members]], np.r_[1.0, -np.ones(members.size)], "=", 0.0, f"{p}aggregate[{j}]")

    # power balance
    if approx is None:
        bal_idx = np.r_[pg, pb, cr]
        bal_coef = np.r_[np.ones(net.n_gen), np.ones(net.n_tie), -np.ones(net.n_ren)]
    else:
        bal_idx = np.r_[pg, pt, cr]
        bal_coef = np.r_[np.ones(net.n_gen), np.ones(pt.size), -np.ones(net.n_ren)]
    lp.add_row(bal_idx, bal_coef, "=", float(pd.sum() - pr.sum()), p + "balance")

    # border angles
    const_theta = mats.B_R @ pr + mats.B_D @ pd
    for b in range(net.n_tie):
        idx = np.r_[theta[b], pg, pb, cr]
        coef = np.r_[1.0, -mats.B_G[b], -mats.B_B[b], mats.B_R[b]]
        lp.add_row(idx, coef, "=", float(const_theta[b]), f"{p}angle[{b}]")

    # branch flows
    fmin = np.array([br.flow_min for br in net.branches], dtype=float)
    fmax = np.array([br.flow_max for br in net.branches], dtype=float)
    const_flow = mats.A_R @ pr + mats.A_D @ pd
    A_G, A_B, A_R = mats.A_G, mats.A_B, mats.A_R
    for l in range(len(net.branches)):
        if approx is None:
            idx = np.r_[pg, pb, cr]
            coef = np.r_[A_G[l], A_B[l], -A_R[l]]
            shift, eps = 0.0, 0.0
        else:
            idx = np.r_[pg, pt, cr]
            coef = np.r_[A_G[l], approx.alpha[l], -A_R[l]]
            shift, eps = float(approx.beta[l]), float(approx.eps[l])
        c = float(const_flow[l]) + shift
        lp.add_row(idx, coef, "<=", fmax[l] - eps - c, f"{p}flow_max[{l}]")
        lp.add_row(idx, coef, ">=", fmin[l] + eps - c, f"{p}flow_min[{l}]")

    # curtailment epigraph
    lp.add_row(np.r_[cr, z], np.r_[np.ones(net.n_ren), -1.0], "<=", 0.0, p + "epigraph")
    return PeriodVars(pg=pg, cr=cr, pb=pb, theta=theta, z=z, pt=pt)


def build_operating_region(
    net: RegionNetwork,
    periods: int | Sequence[int] | None = None,
    envelope: "DispatchEnvelope | None" = None,
    include_ramps: bool = True,
    lp: LpProblem | None = None,
    mats: NetworkMatrices | None = None,
    prefix: str = "",
    tie_bounds: dict | None = None,
) -> RegionFragment:
    """Rows of the operating region over ``periods`` (default: whole horizon).

    ``include_ramps=True`` gives the full region: generator capacities (cut
    to the envelope when one is given) and ramp rows between consecutive
    listed periods. ``include_ramps=False`` gives the decoupled region whose
    generator bounds are the envelope levels, so an envelope is required.
    """
    if periods is None:
        periods = range(net.n_T)
    elif isinstance(periods, (int, np.integer)):
        periods = [int(periods)]
    periods = list(periods)
    if not include_ramps and envelope is None:
        raise ValueError("decoupled operating region requires a dispatch envelope")
    lp = lp if lp is not None else LpProblem()
    mats = mats if mats is not None else build_matrices(net)
    frag = RegionFragment(lp=lp, region_id=net.region_id)
    cap_lo, cap_hi = net.gen_caps()
    for t in periods:
        lo, hi = cap_lo, cap_hi
        if envelope is not None:
            lo, hi = envelope.level_min[t], envelope.level_max[t]
        tlo, thi = (None, None)
        if tie_bounds is not None and t in tie_bounds:
            tlo, thi = tie_bounds[t]
        frag.periods[t] = add_period_block(lp, net, mats, t, lo, hi, tlo, thi, prefix=prefix)
    if include_ramps:
        add_ramp_rows(lp, net, frag, periods, prefix)
    return frag


def add_ramp_rows(lp: LpProblem, net: RegionNetwork, frag: RegionFragment, periods: Sequence[int], prefix: str = "") -> None:
    up, down = net.ramps()
    for a, b in zip(periods[:-1], periods[1:]):
        if b != a + 1:
            continue
        va, vb = frag.periods[a], frag.periods[b]
        for g in range(net.n_gen):
            idx = [vb.pg[g], va.pg[g]]
            lp.add_row(idx, [1.0, -1.0], "<=", up[g], f"{prefix}t{b}.ramp_up[{g}]")
            lp.add_row(idx, [1.0, -1.0], ">=", -down[g], f"{prefix}t{b}.ramp_down[{g}]")


def add_coupling_rows(
    lp: LpProblem,
    inter: Interconnection,
    t: int,
    pb_of: dict,
    theta_of: dict,
    base_mva: float = 100.0,
    with_angles: bool = True,
) -> np.ndarray:
    """One shared directed flow per tie-line and period.

    ``pb_of``/``theta_of`` map ``(region_id, border_bus)`` to column indices.
    The flow runs from the ``from`` end to the ``to`` end and equals
    ``base_mva * (theta_from - theta_to) / reactance``; it enters the ``to``
    region and leaves the ``from`` region.
    """
    flows = np.empty(len(inter.links), dtype=int)
    for k, link in enumerate(inter.links):
        src = (link.from_region, link.from_bus)
        dst = (link.to_region, link.to_bus)
        for end in (src, dst):
            if end not in pb_of:
                raise NetworkError(f"tie-line {link.name!r}: endpoint {end!r} is not a border port")
        f = lp.add_var(f"t{t}.flow[{link.name}]")
        flows[k] = f
        lp.add_row([pb_of[dst], f], [1.0, -1.0], "=", 0.0, f"t{t}.inject_to[{link.name}]")
        lp.add_row([pb_of[src], f], [1.0, 1.0], "=", 0.0, f"t{t}.inject_from[{link.name}]")
        if with_angles:
            g = base_mva / link.reactance
            lp.add_row(
                [f, theta_of[src], theta_of[dst]], [1.0, -g, g], "=", 0.0, f"t{t}.coupling[{link.name}]"
            )
    return flows


def coupling_flow(theta_from: float, theta_to: float, reactance: float, base_mva: float = 1.0) -> float:
    """Directed tie-line flow for a given angle pair (per unit when ``base_mva`` is 1)."""
    return base_mva * (theta_from - theta_to) / reactance


@dataclass
class Op1:
    lp: LpProblem
    fragments: dict
    flows: dict


def build_op1(networks: Sequence[RegionNetwork], inter: Interconnection | None = None) -> Op1:
    """Centralized curtailment minimisation over all regions and periods."""
    inter = inter if inter is not None else Interconnection([])
    inter.check(networks)
    lp = LpProblem()
    frags = {}
    for net in networks:
        frags[net.region_id] = build_operating_region(net, lp=lp, prefix=f"{net.region_id}.")
    base = _common_base(networks)
    n_T = networks[0].n_T if networks else 0
    if any(net.n_T != n_T for net in networks):
        raise NetworkError("regions disagree on n_T")
    flows = {}
    for t in range(n_T):
        pb_of, th_of = {}, {}
        for net in networks:
            v = frags[net.region_id].periods[t]
            for i, port in enumerate(net.tie_lines):
                pb_of[(net.region_id, port.border_bus)] = v.pb[i]
                th_of[(net.region_id, port.border_bus)] = v.theta[i]
        flows[t] = add_coupling_rows(lp, inter, t, pb_of, th_of, base)
    lp.set_objective({v.z: 1.0 for f in frags.values() for v in f.periods.values()})
    return Op1(lp=lp, fragments=frags, flows=flows)


def _common_base(networks: Sequence[RegionNetwork]) -> float:
    bases = {net.base_mva for net in networks}
    if len(bases) > 1:
        raise NetworkError("regions use different base_mva")
    return bases.pop() if bases else 100.0


def solve_islanded(net: RegionNetwork) -> LpSolution:
    """Minimum total curtailment with every tie-line open (zero exchange)."""
    frag = build_operating_region(net)
    for v in frag.periods.values():
        frag.lp.fix(v.pb, np.zeros(v.pb.size))
    frag.lp.set_objective({v.z: 1.0 for v in frag.periods.values()})
    return solve_lp(frag.lp)


def zero_exchange_consistent(
    networks: Sequence[RegionNetwork], inter: Interconnection, tol: float = 1e-6
) -> tuple[bool, float, float]:
    """Do the stand-alone schedules fit one common angle frame?

    Compares the centralized optimum with every tie flow fixed to zero
    (border angles of linked ports must then agree) against the sum of the
    islanded optima. Returns ``(consistent, coupled_at_zero, islanded)``.
    """
    op1 = build_op1(networks, inter)
    for f in op1.flows.values():
        op1.lp.fix(f, np.zeros(f.size))
    sol = solve_lp(op1.lp)
    isl = 0.0
    for net in networks:
        s = solve_islanded(net)
        if not s.ok:
            return False, math.nan, math.nan
        isl += s.objective
    if not sol.ok:
        return False, math.inf, isl
    return bool(sol.objective <= isl + tol * max(1.0, abs(isl))), float(sol.objective), float(isl)


@dataclass
class FeasibilityResult:
    feasible: bool
    solution: LpSolution
    reason: str = ""


def check_point_feasibility(
    net: RegionNetwork,
    tie_power: np.ndarray,
    z: np.ndarray,
    membership: np.ndarray | None = None,
    periods: Sequence[int] | None = None,
    tol: float = FEAS_TOL,
) -> FeasibilityResult:
    """Is the coupling point inside the full region (capacities and ramps)?

    ``tie_power`` has one row per period: tie-line injections, or aggregated
    group powers when ``membership`` (group x tie 0/1 matrix) is given, in
    which case any split of each group total is allowed. ``z`` must satisfy
    ``sum(C_R) <= z <= sum(P_R)`` per period.
    """
    periods = list(range(net.n_T)) if periods is None else list(periods)
    tie_power = np.atleast_2d(np.asarray(tie_power, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if tie_power.shape[0] != len(periods) or z.size != len(periods):
        raise ValueError("coupling point does not match the number of periods")
    frag = build_operating_region(net, periods=periods)
    lp = frag.lp
    for k, t in enumerate(periods):
        v = frag.periods[t]
        ceiling = float(net.renewable_at(t).sum())
        if z[k] > ceiling + tol or z[k] < -tol:
            return FeasibilityResult(False, LpSolution("infeasible"), f"z outside [0, {ceiling}] at t={t}")
        lp.lb[v.z] = -math.inf
        lp.ub[v.z] = math.inf
        lp.fix([v.z], [z[k] + tol])
        if membership is None:
            lo, hi = net.tie_box()
            if np.any(tie_power[k] < lo - tol) or np.any(tie_power[k] > hi + tol):
                return FeasibilityResult(False, LpSolution("infeasible"), f"tie power outside limits at t={t}")
            lp.fix(v.pb, np.clip(tie_power[k], lo, hi))
        else:
            for j, row in enumerate(np.asarray(membership)):
                members = np.flatnonzero(row)
                lp.add_row(v.pb[members], np.ones(members.size), "=", float(tie_power[k, j]), f"t{t}.fix_group[{j}]")
    sol = solve_lp(lp, tol=tol)
    return FeasibilityResult(sol.status == OPTIMAL, sol, "" if sol.ok else sol.status)
