"""Region artifacts and the end-to-end run: envelope, grouping, regions, coordination."""

from __future__ import annotations

import datetime as _dt
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .aggregation import (
    AggregationPlan,
    MinMaxFit,
    TieBounds,
    build_aggregation_matrix,
    build_approx_model,
    build_reduced_region,
    compute_tie_bounds,
)
from .coordination import CoordinationSolution, RegionPeriodInput, recover_all, solve_coordination
from .envelope import DispatchEnvelope, compute_envelope
from .formulation import solve_islanded
from .geometry import Polytope
from .io import CaseFile
from .network import Interconnection, RegionNetwork, build_matrices
from .oracles import SampleReport, sample_and_check, solve_centralized_op1
from .projection import MAX_ITERS, VOLUME_TOL, SecurityRegion, compute_region, enrich_witnesses

ARTIFACT_FORMAT = "tiesec-region-artifact"
ARTIFACT_VERSION = 1


class PipelineError(RuntimeError):
    """Failure inside one pipeline stage; ``stage`` names it."""

    def __init__(self, stage: str, region, cause: BaseException):
        where = f" (region {region!r})" if region is not None else ""
        super().__init__(f"[{stage}]{where} {cause}")
        self.stage = stage
        self.region = region
        self.cause = cause


@dataclass
class RegionArtifact:
    region_id: object
    n_T: int
    envelope: DispatchEnvelope
    plan: AggregationPlan
    bounds: dict  # t -> TieBounds
    fits: dict  # t -> MinMaxFit
    regions: dict  # t -> SecurityRegion
    provenance: dict = field(default_factory=dict)

    def inputs(self) -> dict:
        """Per-period coordinator inputs."""
        return {
            t: RegionPeriodInput(self.regions[t], self.plan.membership, self.bounds[t].lo, self.bounds[t].hi)
            for t in sorted(self.regions)
        }

    def to_dict(self) -> dict:
        return {
            "format": ARTIFACT_FORMAT,
            "version": ARTIFACT_VERSION,
            "region_id": self.region_id,
            "n_T": self.n_T,
            "envelope": self.envelope.to_dict(),
            "plan": self.plan.to_dict(),
            "periods": [
                {
                    "t": t,
                    "tie_bounds": self.bounds[t].to_dict(),
                    "fit": self.fits[t].to_dict(),
                    "region": region_to_dict(self.regions[t]),
                }
                for t in sorted(self.regions)
            ],
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegionArtifact":
        if d.get("format") != ARTIFACT_FORMAT:
            raise ValueError("not a region artifact")
        if d.get("version") != ARTIFACT_VERSION:
            raise ValueError(f"unsupported artifact version {d.get('version')!r}")
        n_tie = len(d["periods"][0]["tie_bounds"]["min"]) if d["periods"] else 0
        plan = AggregationPlan.from_dict(d["plan"], n_tie)
        bounds, fits, regions = {}, {}, {}
        for p in d["periods"]:
            t = int(p["t"])
            bounds[t] = TieBounds.from_dict(p["tie_bounds"])
            fits[t] = MinMaxFit.from_dict(p["fit"], plan.K)
            regions[t] = region_from_dict(p["region"], d["region_id"], t)
        return cls(
            region_id=d["region_id"],
            n_T=int(d["n_T"]),
            envelope=DispatchEnvelope.from_dict(d["envelope"]),
            plan=plan,
            bounds=bounds,
            fits=fits,
            regions=regions,
            provenance=dict(d.get("provenance", {})),
        )

    def deterministic_dict(self) -> dict:
        """Artifact content without the creation timestamp."""
        d = self.to_dict()
        d["provenance"] = {k: v for k, v in d["provenance"].items() if k != "created"}
        return d


def region_to_dict(r: SecurityRegion) -> dict:
    P = r.polytope
    return {
        "coords": r.coords.tolist(),
        "vertices": P.vertices.tolist(),
        "normals": P.normals.tolist(),
        "offsets": P.offsets.tolist(),
        "dim": P.dim,
        "tol": P.tol,
        "origin": P.origin.tolist(),
        "basis": P.basis.tolist(),
        "simplices": P.simplices.tolist(),
        "columns": {k: np.asarray(v).tolist() for k, v in r.columns.items()},
        "witness": r.witness.tolist(),
        "converged": r.converged,
        "exact": r.exact,
        "iterations": r.iterations,
        "volume_history": list(r.volume_history),
        "extra_witness": [] if r.extra_witness is None else r.extra_witness.tolist(),
        "extra_owner": [] if r.extra_owner is None else r.extra_owner.tolist(),
    }


def region_from_dict(d: dict, region_id=None, t: int = 0) -> SecurityRegion:
    V = np.array(d["vertices"], dtype=float)
    amb = V.shape[1]
    dim = int(d["dim"])
    poly = Polytope(
        vertices=V,
        normals=np.array(d["normals"], dtype=float).reshape(-1, amb),
        offsets=np.array(d["offsets"], dtype=float),
        tol=float(d["tol"]),
        dim=dim,
        origin=np.array(d["origin"], dtype=float),
        basis=np.array(d["basis"], dtype=float).reshape(amb, dim),
        simplices=np.array(d["simplices"], dtype=int).reshape(-1, dim) if dim else np.zeros((0, 0), dtype=int),
    )
    columns = {k: np.array(v, dtype=int) for k, v in d["columns"].items()}
    W = np.array(d["witness"], dtype=float).reshape(V.shape[0], -1)
    return SecurityRegion(
        polytope=poly,
        witness=W,
        coords=np.array(d["coords"], dtype=int),
        columns=columns,
        converged=bool(d["converged"]),
        exact=bool(d["exact"]),
        iterations=int(d["iterations"]),
        volume_history=[float(v) for v in d["volume_history"]],
        region_id=region_id,
        t=t,
        extra_witness=np.array(d.get("extra_witness", []), dtype=float).reshape(-1, W.shape[1]),
        extra_owner=np.array(d.get("extra_owner", []), dtype=int),
    )


def singleton_plan(net: RegionNetwork) -> AggregationPlan:
    """Every tie-line in its own group (no aggregation error)."""
    return AggregationPlan(tuple(range(net.n_tie)), np.eye(net.n_tie))


def compute_region_artifact(
    net: RegionNetwork,
    volume_tol: float = VOLUME_TOL,
    max_iters: int = MAX_ITERS,
    aggregate: bool = True,
    case_sha256: str | None = None,
    witness_pool: bool = True,
    envelope_mode: str = "anchored",
) -> RegionArtifact:
    """Envelope, grouping, fit and one projected region per period.

    With ``witness_pool`` every vertex also carries the feasible points that
    reach its extreme border angles and tie-line injections, giving the
    coordinator room to meet the coupling rows.

    Raises :class:`PipelineError` labelled with the failing stage.
    """
    try:
        env = compute_envelope(net, mode=envelope_mode)
    except Exception as exc:
        raise PipelineError("envelope", net.region_id, exc) from exc
    try:
        plan = build_aggregation_matrix(net) if aggregate else singleton_plan(net)
        mats = build_matrices(net)
    except Exception as exc:
        raise PipelineError("aggregation", net.region_id, exc) from exc
    bounds, fits, regions = {}, {}, {}
    for t in range(net.n_T):
        try:
            bounds[t] = compute_tie_bounds(net, env, t, mats)
            fits[t] = build_approx_model(mats, plan, bounds[t], t)
            frag = build_reduced_region(net, env, plan, fits[t], bounds[t], t, mats)
        except Exception as exc:
            raise PipelineError("aggregation", net.region_id, exc) from exc
        v = frag.periods[t]
        coords = np.r_[v.pt, v.z].astype(int)
        columns = {"pg": v.pg, "cr": v.cr, "pb": v.pb, "theta": v.theta, "pt": v.pt, "z": np.array([v.z])}
        try:
            r = compute_region(frag.lp, coords, columns, volume_tol=volume_tol, max_iters=max_iters, floor=coords.size - 1)
            if witness_pool:
                enrich_witnesses(frag.lp, r)
        except Exception as exc:
            raise PipelineError("projection", net.region_id, exc) from exc
        r.region_id, r.t = net.region_id, t
        regions[t] = r
    prov = {
        "tool": "tiesec",
        "tool_version": __version__,
        "options": {
            "volume_tol": volume_tol,
            "max_iters": max_iters,
            "aggregate": aggregate,
            "witness_pool": witness_pool,
            "envelope_mode": envelope_mode,
        },
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if case_sha256 is not None:
        prov["case_sha256"] = case_sha256
    return RegionArtifact(net.region_id, net.n_T, env, plan, bounds, fits, regions, prov)


def check_artifact(art: RegionArtifact, net: RegionNetwork, n: int, seed: int = 0, tol: float = 1e-6) -> SampleReport:
    """Sampling test of the Cartesian product of the artifact's period regions."""
    regions = [art.regions[t] for t in sorted(art.regions)]
    return sample_and_check(regions, net, n, seed=seed, membership=art.plan.membership, tol=tol)


@dataclass
class PipelineReport:
    islanded: dict
    coordination: CoordinationSolution | None
    centralized: float
    timings: dict
    samples: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)

    @property
    def islanded_total(self) -> float:
        return float(sum(self.islanded.values()))

    def to_dict(self) -> dict:
        c = self.coordination
        out = {
            "curtailment": {
                "islanded": {str(k): v for k, v in self.islanded.items()},
                "islanded_total": self.islanded_total,
                "coordinated": None if c is None else c.objective,
                "centralized": self.centralized,
            },
            "timings": dict(self.timings),
            "samples": {
                str(k): {"total": s.total, "feasible": s.feasible, "infeasible": s.infeasible, "seed": s.seed}
                for k, s in self.samples.items()
            },
        }
        if c is not None:
            out["coordination"] = coordination_to_dict(c)
        return out


def coordination_to_dict(c: CoordinationSolution) -> dict:
    regions = {}
    for rid in c.lam:
        per = []
        for t in sorted(c.lam[rid]):
            row = {
                "t": t,
                "lambda": c.lam[rid][t].tolist(),
                "pt": c.pt[rid][t].tolist(),
                "pb": c.pb[rid][t].tolist(),
                "theta": c.theta[rid][t].tolist(),
                "z": c.z[rid][t],
            }
            d = c.dispatch.get(rid)
            if d is not None:
                row["recovered"] = {"pg": d.pg[t].tolist(), "cr": d.cr[t].tolist(), "z": float(d.z[t])}
            per.append(row)
        regions[str(rid)] = per
    return {
        "objective": c.objective,
        "flows": {str(t): f for t, f in sorted(c.flows.items())},
        "regions": regions,
    }


def coordinate_artifacts(
    artifacts: dict, networks: Sequence[RegionNetwork], inter: Interconnection, recover: bool = True
) -> CoordinationSolution:
    inputs = {rid: art.inputs() for rid, art in artifacts.items()}
    try:
        sol = solve_coordination(inputs, networks, inter)
    except Exception as exc:
        raise PipelineError("coordination", None, exc) from exc
    if recover:
        try:
            recover_all(sol, networks)
        except Exception as exc:
            raise PipelineError("recovery", None, exc) from exc
    return sol


def run_pipeline(
    case: CaseFile,
    volume_tol: float = VOLUME_TOL,
    max_iters: int = MAX_ITERS,
    samples: int = 0,
    seed: int = 0,
    aggregate: bool = True,
) -> PipelineReport:
    """Regions for every region, then coordination, recovery and baselines."""
    timings: dict = {}
    nets = case.regions
    sha = case.sha256()
    t0 = time.perf_counter()
    arts = {net.region_id: compute_region_artifact(net, volume_tol, max_iters, aggregate, sha) for net in nets}
    timings["regions"] = time.perf_counter() - t0

    rep_samples = {}
    if samples:
        t0 = time.perf_counter()
        for net in nets:
            rep_samples[net.region_id] = check_artifact(arts[net.region_id], net, samples, seed)
        timings["sampling"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sol = coordinate_artifacts(arts, nets, case.interconnection)
    timings["coordination"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    islanded = {}
    for net in nets:
        s = solve_islanded(net)
        islanded[net.region_id] = float(s.objective) if s.ok else float("inf")
    op1 = solve_centralized_op1(nets, case.interconnection)
    timings["baselines"] = time.perf_counter() - t0
    return PipelineReport(
        islanded=islanded,
        coordination=sol,
        centralized=float(op1.objective),
        timings=timings,
        samples=rep_samples,
        artifacts=arts,
    )
