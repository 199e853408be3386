"""Per-period dispatch envelopes that make ramp limits redundant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formulation import add_period_block, build_operating_region
from .lp import LpError, LpProblem, solve_lp
from .network import RegionNetwork, build_matrices


class EnvelopeInfeasible(LpError):
    """No envelope exists: the region cannot be decoupled in time."""


@dataclass(frozen=True)
class DispatchEnvelope:
    """``level_min[t, g] <= P_G[t, g] <= level_max[t, g]``."""

    level_min: np.ndarray
    level_max: np.ndarray

    @property
    def n_T(self) -> int:
        return self.level_min.shape[0]

    def width(self) -> float:
        return float(np.sum(self.level_max - self.level_min))

    def to_dict(self) -> dict:
        return {"level_min": self.level_min.tolist(), "level_max": self.level_max.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DispatchEnvelope":
        n = len(d["level_min"])
        lo = np.array(d["level_min"], dtype=float).reshape(n, -1)
        hi = np.array(d["level_max"], dtype=float).reshape(n, -1)
        return cls(lo, hi)


ENVELOPE_MODES = ("anchored", "widest")


def compute_envelope(net: RegionNetwork, mode: str = "anchored", centre: bool = True) -> DispatchEnvelope:
    """Widest per-period generator levels whose every pairing respects ramps.

    Solves one LP over all periods: levels inside capacities, one feasible
    dispatch per period within its levels, and the level-to-level ramp rows.

    Parameters
    ----------
    net : RegionNetwork
    mode : {"anchored", "widest"}
        ``"anchored"`` maximises width among envelopes that contain the
        region's stand-alone schedule (least curtailment with tie-lines open,
        smallest border angles among those). Such envelopes always exist
        since that schedule obeys the ramps, and keeping it inside preserves
        the zero-exchange operating point. ``"widest"`` maximises width
        alone. Without a stand-alone schedule both modes coincide.
    centre : bool
        Among width-optimal envelopes, move each band midpoint as close as
        possible (L1) to the stand-alone schedule.

    Returns
    -------
    DispatchEnvelope
        Snapped onto the ramp rows in floating point, so the redundancy
        check holds exactly.
    """
    if mode not in ENVELOPE_MODES:
        raise ValueError(f"unknown envelope mode {mode!r}")
    mats = build_matrices(net)
    lp = LpProblem()
    cap_lo, cap_hi = net.gen_caps()
    up, down = net.ramps()
    n_T, n_G = net.n_T, net.n_gen
    ref = _reference_schedule(net) if n_G and (centre or mode == "anchored") else None
    lo_idx = np.zeros((n_T, n_G), dtype=int)
    hi_idx = np.zeros((n_T, n_G), dtype=int)
    for t in range(n_T):
        if mode == "anchored" and ref is not None:
            r = np.clip(ref[t], cap_lo, cap_hi)
            lo_idx[t] = lp.add_vars(f"t{t}.level_min", n_G, cap_lo, r)
            hi_idx[t] = lp.add_vars(f"t{t}.level_max", n_G, r, cap_hi)
        else:
            lo_idx[t] = lp.add_vars(f"t{t}.level_min", n_G, cap_lo, cap_hi)
            hi_idx[t] = lp.add_vars(f"t{t}.level_max", n_G, cap_lo, cap_hi)
        v = add_period_block(lp, net, mats, t, cap_lo, cap_hi)
        for g in range(n_G):
            lp.add_row([lo_idx[t, g], hi_idx[t, g]], [1.0, -1.0], "<=", 0.0, f"t{t}.level_order[{g}]")
            lp.add_row([lo_idx[t, g], v.pg[g]], [1.0, -1.0], "<=", 0.0, f"t{t}.in_level_min[{g}]")
            lp.add_row([v.pg[g], hi_idx[t, g]], [1.0, -1.0], "<=", 0.0, f"t{t}.in_level_max[{g}]")
    for t in range(1, n_T):
        for g in range(n_G):
            lp.add_row([hi_idx[t, g], lo_idx[t - 1, g]], [1.0, -1.0], "<=", up[g], f"t{t}.level_ramp_up[{g}]")
            lp.add_row([hi_idx[t - 1, g], lo_idx[t, g]], [1.0, -1.0], "<=", down[g], f"t{t}.level_ramp_down[{g}]")
    obj = {}
    for t in range(n_T):
        for g in range(n_G):
            obj[int(hi_idx[t, g])] = 1.0
            obj[int(lo_idx[t, g])] = -1.0
    lp.set_objective(obj, "max")
    sol = solve_lp(lp)
    if not sol.ok:
        raise EnvelopeInfeasible(_diagnose(net), sol.status)
    if centre and ref is not None:
        width = float(sol.objective)
        idx = [int(i) for i in obj]
        lp.add_row(idx, [obj[i] for i in idx], ">=", width - 1e-9 * max(1.0, abs(width)), "keep_width")
        dev = lp.add_vars("centre_dev", n_T * n_G, 0.0)
        for k, (t, g) in enumerate(np.ndindex(n_T, n_G)):
            pair = [lo_idx[t, g], hi_idx[t, g], dev[k]]
            lp.add_row(pair, [0.5, 0.5, -1.0], "<=", ref[t, g], f"t{t}.centre_hi[{g}]")
            lp.add_row(pair, [0.5, 0.5, 1.0], ">=", ref[t, g], f"t{t}.centre_lo[{g}]")
        lp.set_objective({int(i): 1.0 for i in dev}, "min")
        second = solve_lp(lp)
        if second.ok:
            sol = second
    lo = sol.x[lo_idx].reshape(n_T, n_G)
    hi = sol.x[hi_idx].reshape(n_T, n_G)
    return DispatchEnvelope(*_snap(lo, hi, cap_lo, cap_hi, up, down))


def _reference_schedule(net: RegionNetwork) -> np.ndarray | None:
    """Generator outputs of an islanded least-curtailment schedule, if any.

    Among the least-curtailment schedules the one with the smallest border
    angles (L1) is taken, so regions grounded at their own reference bus
    tend to agree on the angles at zero exchange.
    """
    frag = build_operating_region(net)
    lp = frag.lp
    for v in frag.periods.values():
        lp.fix(v.pb, np.zeros(v.pb.size))
    zs = [int(v.z) for v in frag.periods.values()]
    lp.set_objective({k: 1.0 for k in zs})
    sol = solve_lp(lp)
    if not sol.ok:
        return None
    best = float(sol.objective)
    if net.n_tie:
        lp.add_row(zs, np.ones(len(zs)), "<=", best + 1e-9 * max(1.0, abs(best)), "keep_curtailment")
        obj = {}
        for t, v in frag.periods.items():
            dev = lp.add_vars(f"t{t}.angle_dev", v.theta.size, 0.0)
            for b in range(v.theta.size):
                lp.add_row([v.theta[b], dev[b]], [1.0, -1.0], "<=", 0.0, f"t{t}.angle_hi[{b}]")
                lp.add_row([v.theta[b], dev[b]], [1.0, 1.0], ">=", 0.0, f"t{t}.angle_lo[{b}]")
                obj[int(dev[b])] = 1.0
        lp.set_objective(obj)
        second = solve_lp(lp)
        if second.ok:
            sol = second
    return np.array([sol.x[frag.periods[t].pg] for t in range(net.n_T)])


def _diagnose(net: RegionNetwork) -> str:
    bad = []
    for t in range(net.n_T):
        frag = build_operating_region(net, periods=[t])
        if not solve_lp(frag.lp).ok:
            bad.append(t)
    if bad:
        return f"region {net.region_id!r}: single-period operating region infeasible at periods {bad}"
    return f"region {net.region_id!r}: ramp limits block every envelope across the horizon"


def _snap(lo, hi, cap_lo, cap_hi, up, down):
    lo = np.clip(lo, cap_lo, cap_hi)
    hi = np.clip(hi, cap_lo, cap_hi)
    hi = np.maximum(hi, lo)
    for t in range(1, lo.shape[0]):
        for g in range(lo.shape[1]):
            while hi[t, g] - lo[t - 1, g] > up[g]:
                hi[t, g] = min(np.nextafter(hi[t, g], -np.inf), lo[t - 1, g] + up[g])
            while hi[t - 1, g] - lo[t, g] > down[g]:
                lo[t, g] = max(np.nextafter(lo[t, g], np.inf), hi[t - 1, g] - down[g])
            # snapping may cross the pair by rounding noise only
            if lo[t, g] > hi[t, g]:
                lo[t, g] = hi[t, g]
    return lo, hi


def ramp_chain_holds(net: RegionNetwork, env: DispatchEnvelope) -> bool:
    """Check the level-to-level ramp chain for every generator and period pair."""
    cap_lo, cap_hi = net.gen_caps()
    up, down = net.ramps()
    lo, hi = env.level_min, env.level_max
    if np.any(lo < cap_lo) or np.any(hi > cap_hi) or np.any(lo > hi):
        return False
    if lo.shape[0] < 2:
        return True
    rise = hi[1:] - lo[:-1]
    fall = hi[:-1] - lo[1:]
    return bool(np.all(rise <= up) and np.all(fall <= down))


def widen(env: DispatchEnvelope, net: RegionNetwork, amount: np.ndarray | float) -> DispatchEnvelope:
    """Envelope grown by ``amount`` MW on both sides, clipped to capacity."""
    cap_lo, cap_hi = net.gen_caps()
    return DispatchEnvelope(
        np.clip(env.level_min - amount, cap_lo, cap_hi), np.clip(env.level_max + amount, cap_lo, cap_hi)
    )


@dataclass
class DecompositionReport:
    samples: int
    violations: int
    max_excess: float
    seed: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def period_point_pool(net: RegionNetwork, env: DispatchEnvelope, t: int, rng: np.random.Generator, n_dirs: int = 24):
    """Extreme generator dispatches of the decoupled region at period ``t``."""
    frag = build_operating_region(net, periods=[t], envelope=env, include_ramps=False)
    v = frag.periods[t]
    pts = []
    dirs = [np.eye(net.n_gen)[g] * s for g in range(net.n_gen) for s in (1.0, -1.0)]
    dirs += list(rng.standard_normal((n_dirs, net.n_gen)))
    for d in dirs:
        lp = frag.lp.copy()
        lp.set_objective({int(i): float(c) for i, c in zip(v.pg, d)}, "max")
        sol = solve_lp(lp)
        if not sol.ok:
            raise LpError(f"period {t}: decoupled region is empty", sol.status)
        pts.append(sol.x[v.pg])
    return np.array(pts)


def verify_decomposition(net: RegionNetwork, env: DispatchEnvelope, samples: int = 1000, seed: int = 0, tol: float = 1e-6):
    """Sample per-period dispatches independently and count ramp violations."""
    rng = np.random.default_rng(seed)
    pools = [period_point_pool(net, env, t, rng) for t in range(net.n_T)]
    up, down = net.ramps()
    violations = 0
    worst = 0.0
    for _ in range(samples):
        traj = np.array([rng.dirichlet(np.ones(len(p))) @ p for p in pools])
        if net.n_T < 2:
            continue
        step = np.diff(traj, axis=0)
        excess = np.maximum(step - up, -down - step)
        m = float(excess.max(initial=-np.inf))
        worst = max(worst, m)
        if m > tol:
            violations += 1
    return DecompositionReport(samples=samples, violations=violations, max_excess=worst, seed=seed)
