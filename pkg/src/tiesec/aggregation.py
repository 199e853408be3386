"""Tie-line grouping, minimax aggregation of PTDF terms and the reduced region."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable

import numpy as np

from .envelope import DispatchEnvelope
from .formulation import BranchApprox, RegionFragment, add_period_block
from .lp import LpError, LpProblem, solve_lp
from .network import NetworkError, NetworkMatrices, RegionNetwork, build_matrices, group_labels


class AggregationTooCoarse(NetworkError):
    """Error bounds leave no room between a branch's tightened limits."""

    def __init__(self, message: str, rows: list[int]):
        super().__init__(message)
        self.rows = rows


@dataclass(frozen=True)
class AggregationPlan:
    labels: tuple
    membership: np.ndarray  # K x n_tie, 0/1

    @property
    def K(self) -> int:
        return self.membership.shape[0]

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.membership[j])

    def aggregate(self, tie_power: np.ndarray) -> np.ndarray:
        return self.membership @ np.asarray(tie_power, dtype=float)

    def to_dict(self) -> dict:
        return {"groups": [list(map(int, self.members(j))) for j in range(self.K)], "labels": list(self.labels)}

    @classmethod
    def from_dict(cls, d: dict, n_tie: int) -> "AggregationPlan":
        M = np.zeros((len(d["groups"]), n_tie))
        for j, members in enumerate(d["groups"]):
            M[j, members] = 1.0
        return cls(tuple(d["labels"]), M)


def build_aggregation_matrix(net: RegionNetwork) -> AggregationPlan:
    """0/1 group-membership matrix from the ports' ``group`` labels."""
    labels = group_labels(net)
    if net.n_tie and not labels:
        raise NetworkError("tie-lines carry no group labels")
    M = np.zeros((len(labels), net.n_tie))
    pos = {g: j for j, g in enumerate(labels)}
    for i, port in enumerate(net.tie_lines):
        M[pos[port.group], i] = 1.0
    if np.any(M.sum(axis=1) == 0):
        raise NetworkError("empty tie-line group")
    return AggregationPlan(tuple(labels), M)


@dataclass(frozen=True)
class TieBounds:
    lo: np.ndarray
    hi: np.ndarray

    def to_dict(self) -> dict:
        return {"min": self.lo.tolist(), "max": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TieBounds":
        return cls(np.array(d["min"], dtype=float), np.array(d["max"], dtype=float))


def compute_tie_bounds(net: RegionNetwork, env: DispatchEnvelope, t: int, mats: NetworkMatrices | None = None) -> TieBounds:
    """Attainable range of every tie-line injection in the decoupled region."""
    mats = mats if mats is not None else build_matrices(net)
    base = LpProblem()
    v = add_period_block(base, net, mats, t, env.level_min[t], env.level_max[t])
    lo = np.empty(net.n_tie)
    hi = np.empty(net.n_tie)
    box_lo, box_hi = net.tie_box()
    for i in range(net.n_tie):
        for sense, out in (("min", lo), ("max", hi)):
            lp = base.copy()
            lp.set_objective({int(v.pb[i]): 1.0}, sense)
            sol = solve_lp(lp)
            if not sol.ok:
                raise LpError(f"region {net.region_id!r} period {t}: decoupled region infeasible", sol.status)
            out[i] = sol.x[v.pb[i]]
    # stay inside the declared limits despite solver round-off
    lo = np.clip(lo, box_lo, box_hi)
    hi = np.clip(np.maximum(hi, lo), box_lo, box_hi)
    return TieBounds(lo, hi)


def minimax_fit(a, x_max, x_min=None) -> tuple[float, float, float]:
    """Best uniform affine fit of ``sum a_s x_s`` by ``a0 * sum x_s + b0`` on a box.

    The box is ``x_min <= x <= x_max`` (``x_min`` defaults to zero). Returns
    ``(a0, b0, eps)`` with ``|sum a_s x_s - a0 sum x_s - b0| <= eps`` on the
    whole box and ``eps`` minimal. The slope is a weighted median of the
    coefficients with the box widths as weights; the intercept centres the
    residual range.
    """
    a = np.asarray(a, dtype=float).ravel()
    hi = np.asarray(x_max, dtype=float).ravel()
    lo = np.zeros_like(hi) if x_min is None else np.asarray(x_min, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("empty coefficient vector")
    w = hi - lo
    if np.any(w < 0):
        raise ValueError("empty box")
    order = np.argsort(a, kind="stable")
    a_s, w_s = a[order], w[order]
    if not np.any(w_s > 0):
        a0, b0, eps = float(a_s[0]), 0.0, 0.0
    else:
        total = w_s.sum()
        before = np.concatenate(([0.0], np.cumsum(w_s)[:-1]))
        # lam[c] = (weight strictly below c) - (weight from c on), nondecreasing in c
        lam = before - (total - before)
        lam_next = np.append(lam[1:], total)
        c = int(np.flatnonzero((lam <= 0) & (lam_next >= 0))[0])
        a0 = float(a_s[c])
        b0 = 0.5 * float(np.sum((a_s - a0) * w_s))
        eps = 0.5 * float(np.sum(np.abs(a_s - a0) * w_s))
    b0 += float(np.sum((a - a0) * lo))
    return a0, b0, eps


@dataclass(frozen=True)
class MinMaxFit:
    alpha: np.ndarray  # rows x K
    beta: np.ndarray  # rows x K
    eps_group: np.ndarray  # rows x K

    @property
    def eps(self) -> np.ndarray:
        return self.eps_group.sum(axis=1)

    @property
    def beta_row(self) -> np.ndarray:
        return self.beta.sum(axis=1)

    def branch_approx(self, plan: AggregationPlan) -> BranchApprox:
        return BranchApprox(alpha=self.alpha, beta=self.beta_row, eps=self.eps, membership=plan.membership)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha.tolist(), "beta": self.beta.tolist(), "eps": self.eps_group.tolist()}

    @classmethod
    def from_dict(cls, d: dict, K: int) -> "MinMaxFit":
        def arr(key):
            return np.array(d[key], dtype=float).reshape(-1, K)

        return cls(arr("alpha"), arr("beta"), arr("eps"))


def build_approx_model(mats: NetworkMatrices, plan: AggregationPlan, bounds: TieBounds, t: int = 0) -> MinMaxFit:
    """Per branch row and group, fit the tie-line PTDF term on the tightened box."""
    A_B = mats.A_B
    L = A_B.shape[0]
    alpha = np.zeros((L, plan.K))
    beta = np.zeros((L, plan.K))
    eps = np.zeros((L, plan.K))
    for l in range(L):
        for j in range(plan.K):
            m = plan.members(j)
            alpha[l, j], beta[l, j], eps[l, j] = minimax_fit(A_B[l, m], bounds.hi[m], bounds.lo[m])
    return MinMaxFit(alpha, beta, eps)


def build_reduced_region(
    net: RegionNetwork,
    env: DispatchEnvelope,
    plan: AggregationPlan,
    fit: MinMaxFit,
    bounds: TieBounds,
    t: int,
    mats: NetworkMatrices | None = None,
) -> RegionFragment:
    """Single-period reduced region over aggregated tie power.

    Tie injections are kept as columns (boxed by the tightened bounds) and
    tied to the group totals; branch rows use the fitted affine term with
    limits pulled in by the row's error bound.
    """
    mats = mats if mats is not None else build_matrices(net)
    fmin = np.array([br.flow_min for br in net.branches], dtype=float)
    fmax = np.array([br.flow_max for br in net.branches], dtype=float)
    eps = fit.eps
    bad = [int(l) for l in np.flatnonzero(fmax - eps < fmin + eps)]
    if bad:
        raise AggregationTooCoarse(
            f"region {net.region_id!r} period {t}: aggregation too coarse on branch rows {bad}; use finer groups",
            bad,
        )
    lp = LpProblem()
    v = add_period_block(
        lp, net, mats, t, env.level_min[t], env.level_max[t], bounds.lo, bounds.hi, approx=fit.branch_approx(plan)
    )
    return RegionFragment(lp=lp, periods={t: v}, region_id=net.region_id)


def aggregation_identity_gap(plan: AggregationPlan, tie_power: np.ndarray) -> float:
    """``|sum(group totals) - sum(tie powers)|``; zero for any partition."""
    p = np.asarray(tie_power, dtype=float)
    return float(abs(plan.aggregate(p).sum() - p.sum()))


def group_index(net: RegionNetwork, label: Hashable) -> int:
    return group_labels(net).index(label)
