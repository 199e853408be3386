"""Command line: ``tiesec <command> ...``.

Exit status is 0 on success, 1 on a domain failure (bad case, infeasible
stage, infeasible samples) and 2 on a usage error. Human summaries go to
stdout, machine output to the files named by ``--out``. ``TIESEC_THREADS``
sets the worker count for the per-direction and per-region solves.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import __version__
from .io import CaseError, CaseFile, parse_case, read_json, rows_to_csv, write_json
from .lp import LpError
from .network import NetworkError
from .pipeline import (
    PipelineError,
    RegionArtifact,
    check_artifact,
    compute_region_artifact,
    coordinate_artifacts,
    coordination_to_dict,
    run_pipeline,
)
from .projection import MAX_ITERS, VOLUME_TOL

DOMAIN_ERRORS = (CaseError, PipelineError, LpError, NetworkError, ValueError, KeyError, OSError)


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def _load_artifact(path) -> RegionArtifact:
    return RegionArtifact.from_dict(read_json(path))


def _check_hash(art: RegionArtifact, case: CaseFile, where) -> None:
    want = art.provenance.get("case_sha256")
    if want is not None and want != case.sha256():
        raise ValueError(f"{where}: artifact was computed from a different case file")


# --- commands ------------------------------------------------------------------


def cmd_compute_region(args) -> int:
    case = parse_case(args.case)
    net = case.region(args.region)
    art = compute_region_artifact(
        net,
        volume_tol=args.volume_tol,
        max_iters=args.max_iters,
        aggregate=not args.no_aggregate,
        case_sha256=case.sha256(),
        envelope_mode=args.envelope,
    )
    write_json(args.out, art.to_dict())
    for t in sorted(art.regions):
        r = art.regions[t]
        state = "converged" if r.converged else "iteration cap"
        print(f"region {net.region_id} t={t}: {r.n_vertices} vertices, {r.iterations} sweeps, {state}")
    print(f"wrote {args.out}")
    return 0


def cmd_coordinate(args) -> int:
    case = parse_case(args.case)
    paths = sorted(Path(args.artifacts).glob("*.json"))
    arts = {}
    for p in paths:
        art = _load_artifact(p)
        _check_hash(art, case, p)
        arts[case.region(art.region_id).region_id] = art
    missing = [net.region_id for net in case.regions if net.region_id not in arts]
    if missing:
        raise ValueError(f"no artifact for region(s) {', '.join(map(str, missing))} in {args.artifacts}")
    sol = coordinate_artifacts(arts, case.regions, case.interconnection)
    out = coordination_to_dict(sol)
    write_json(args.out, out)
    print(f"coordinated curtailment {sol.objective:.6f} MW over {len(arts)} region(s)")
    print(f"wrote {args.out}")
    return 0


def cmd_check(args) -> int:
    case = parse_case(args.case)
    art = _load_artifact(args.artifact)
    _check_hash(art, case, args.artifact)
    rep = check_artifact(art, case.region(art.region_id), args.samples, seed=args.seed, tol=args.tol)
    print(rep.table())
    return 0 if rep.infeasible == 0 else 1


def cmd_run(args) -> int:
    case = parse_case(args.case)
    if args.scenario:
        case = case.with_scenario(args.scenario)
    rep = run_pipeline(case, args.volume_tol, args.max_iters, samples=args.samples, seed=args.seed)
    if args.out:
        write_json(args.out, rep.to_dict())
    print(f"islanded    {rep.islanded_total:.6f}")
    print(f"coordinated {rep.coordination.objective:.6f}")
    print(f"centralized {rep.centralized:.6f}")
    for k, v in rep.timings.items():
        print(f"time {k:<13s}{v:.3f} s")
    bad = sum(s.infeasible for s in rep.samples.values())
    return 0 if bad == 0 else 1


def cmd_oracle_fme(args) -> int:
    from .oracles import fourier_motzkin_project

    d = read_json(args.system)
    A = np.asarray(d["A"], float)
    b = np.asarray(d["b"], float)
    A2, b2 = fourier_motzkin_project(A, b, int(d["keep"]))
    out = {"A": A2.tolist(), "b": b2.tolist()}
    if args.out:
        write_json(args.out, out)
    else:
        print(json.dumps(out))
    return 0


def cmd_oracle_minmax(args) -> int:
    from .aggregation import minimax_fit
    from .oracles import minmax_bruteforce

    a = _floats(args.a)
    hi = _floats(args.box_max) if args.box_max else [1.0] * len(a)
    lo = _floats(args.box_min) if args.box_min else [0.0] * len(a)
    if not (len(a) == len(hi) == len(lo)):
        raise UsageError("--a, --box-max and --box-min need the same length")
    a0, b0, e0 = minmax_bruteforce(a, hi, lo)
    a1, b1, e1 = minimax_fit(a, hi, lo)
    print("method       a0            b0            eps")
    print(f"brute force  {a0:<13.8g} {b0:<13.8g} {e0:.8g}")
    print(f"closed form  {a1:<13.8g} {b1:<13.8g} {e1:.8g}")
    return 0


def cmd_oracle_op1(args) -> int:
    from .formulation import solve_islanded
    from .oracles import solve_centralized_op1

    case = parse_case(args.case)
    res = solve_centralized_op1(case.regions, case.interconnection)
    if not res.solution.ok:
        print(f"centralized problem {res.solution.status}", file=sys.stderr)
        return 1
    isl = 0.0
    for net in case.regions:
        s = solve_islanded(net)
        isl += s.objective if s.ok else float("inf")
    print(f"centralized {res.objective:.6f}")
    print(f"islanded    {isl:.6f}")
    return 0


def cmd_report(args) -> int:
    art = _load_artifact(args.artifact)
    try:
        i, j = (int(v) for v in args.slice.split(","))
    except ValueError as exc:
        raise UsageError(f"--slice expects two indices i,j, got {args.slice!r}") from exc
    periods = sorted(art.regions) if args.period is None else [args.period]
    rows = []
    for t in periods:
        V = art.regions[t].vertices
        if not (0 <= i < V.shape[1] and 0 <= j < V.shape[1]):
            raise UsageError(f"--slice indices must lie in [0, {V.shape[1] - 1}]")
        P = V[:, [i, j]]
        try:
            order = ConvexHull(P).vertices  # counter-clockwise in 2-D
        except (QhullError, ValueError):
            order = np.lexsort((P[:, 1], P[:, 0]))
        rows += [(t, int(k), P[k, 0], P[k, 1]) for k in order]
    text = rows_to_csv(["t", "vertex", f"y{i}", f"y{j}"], rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tiesec", description="Tie-line security regions and one-shot coordination.")
    p.add_argument("--version", action="version", version=f"tiesec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def region_opts(sp):
        sp.add_argument("--volume-tol", type=float, default=VOLUME_TOL)
        sp.add_argument("--max-iters", type=int, default=MAX_ITERS)

    sp = sub.add_parser("compute-region", help="envelope, grouping and projected regions for one region")
    sp.add_argument("--case", required=True)
    sp.add_argument("--region", required=True)
    sp.add_argument("--out", required=True)
    region_opts(sp)
    sp.add_argument("--no-aggregate", action="store_true", help="one group per tie-line")
    sp.add_argument("--envelope", choices=("anchored", "widest"), default="anchored")
    sp.set_defaults(func=cmd_compute_region)

    sp = sub.add_parser("coordinate", help="coordinate published region artifacts and recover dispatch")
    sp.add_argument("--case", required=True)
    sp.add_argument("--artifacts", required=True, help="directory of region artifact files")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_coordinate)

    sp = sub.add_parser("check", help="sampling feasibility test of an artifact")
    sp.add_argument("--artifact", required=True)
    sp.add_argument("--case", required=True)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("run", help="full pipeline with baselines")
    sp.add_argument("--case", required=True)
    sp.add_argument("--out")
    sp.add_argument("--scenario")
    sp.add_argument("--samples", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    region_opts(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("oracle", help="reference computations")
    osub = sp.add_subparsers(dest="oracle", required=True)
    o = osub.add_parser("fme", help="Fourier-Motzkin projection of {y : A y <= b}")
    o.add_argument("--system", required=True, help='JSON file {"A": [[...]], "b": [...], "keep": n}')
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle_fme)
    o = osub.add_parser("minmax", help="best uniform affine fit of sum a_s x_s")
    o.add_argument("--a", required=True, help="comma-separated coefficients")
    o.add_argument("--box-max")
    o.add_argument("--box-min")
    o.set_defaults(func=cmd_oracle_minmax)
    o = osub.add_parser("op1", help="centralized and islanded curtailment")
    o.add_argument("--case", required=True)
    o.set_defaults(func=cmd_oracle_op1)

    sp = sub.add_parser("report", help="CSV of a 2-D vertex slice for plotting")
    sp.add_argument("--artifact", required=True)
    sp.add_argument("--slice", required=True, help="two coordinate indices i,j")
    sp.add_argument("--period", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return int(args.func(args))
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tiesec: error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"tiesec: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
