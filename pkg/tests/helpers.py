"""Random tiny systems shared by the projection tests and the acceptance suite."""

from __future__ import annotations

import functools

import numpy as np
from scipy.optimize import linprog

from tiesec.lp import LpProblem


def random_system(rng: np.random.Generator, max_vars: int = 6, max_rows: int = 12):
    """Bounded full-dimensional ``{x : A x <= b}`` containing the origin.

    Returns ``(A, b, n_keep)``; the first ``n_keep`` variables are projected
    onto. Boundedness is checked by LP in every coordinate direction.
    """
    while True:
        n = int(rng.integers(3, max_vars + 1))
        m = int(rng.integers(n + 1, max_rows + 1))
        A = rng.normal(size=(m, n))
        A /= np.linalg.norm(A, axis=1, keepdims=True)
        b = rng.uniform(0.5, 2.0, m)
        bounded = True
        for k in range(n):
            for s in (1.0, -1.0):
                res = linprog(-s * np.eye(n)[k], A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
                if res.status != 0:
                    bounded = False
                    break
            if not bounded:
                break
        if bounded:
            return A, b, int(rng.integers(2, min(3, n - 1) + 1))


def system_lp(A: np.ndarray, b: np.ndarray) -> tuple[LpProblem, np.ndarray]:
    lp = LpProblem()
    x = lp.add_vars("x", A.shape[1])
    for i in range(A.shape[0]):
        lp.add_row(x, A[i], "<=", float(b[i]), f"r{i}")
    return lp, x


@functools.lru_cache(maxsize=None)
def sandwich_case(seed: int, n_links: int = 1, n_T: int = 2):
    """Islanded, coordinated and centralized curtailment on a synthetic pair.

    Returns ``None`` when the stand-alone schedules do not share an angle
    frame (the precondition for the sandwich). Otherwise a dict with the
    three totals, the recovered total, and ``error`` naming a failed stage.
    """
    from tiesec.coordination import CoordinationInfeasible, recover_all, solve_coordination
    from tiesec.formulation import zero_exchange_consistent
    from tiesec.oracles import solve_centralized_op1
    from tiesec.pipeline import compute_region_artifact
    from tiesec.synthetic import two_region

    nets, inter = two_region(seed, n_T=n_T, n_links=n_links)
    ok, _, islanded = zero_exchange_consistent(nets, inter)
    if not ok:
        return None
    arts = {n.region_id: compute_region_artifact(n) for n in nets}
    inputs = {rid: a.inputs() for rid, a in arts.items()}
    out = {"seed": seed, "islanded": islanded, "op1": solve_centralized_op1(nets, inter).objective}
    try:
        sol = solve_coordination(inputs, nets, inter)
    except CoordinationInfeasible as exc:
        out["error"] = f"coordination: {exc}"
        return out
    out["coordinated"] = sol.objective
    try:
        disp = recover_all(sol, nets)
    except Exception as exc:  # recovery failures are what the callers count
        out["error"] = f"recovery: {exc}"
        return out
    out["recovered"] = float(sum(d.z.sum() for d in disp.values()))
    return out
