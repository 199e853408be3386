"""Small linear-program container and the HiGHS-backed solve contract."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

FEAS_TOL = 1e-6

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
SOLVER_FAILURE = "solver_failure"

_RELATIONS = ("<=", "=", ">=")


class LpError(RuntimeError):
    """An LP that must be solvable was not."""

    def __init__(self, message: str, status: str | None = None):
        super().__init__(message)
        self.status = status


@dataclass
class LpProblem:
    """Named columns with bounds, sparse rows and a linear objective.

    Rows are kept as ``(indices, coefficients, relation, rhs)``. Builders
    append to a problem in place; :meth:`copy` gives an independent problem
    for extension (e.g. adding an objective or fixing coupling values).
    """

    names: list[str] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    rows: list[tuple[np.ndarray, np.ndarray, str, float]] = field(default_factory=list)
    row_names: list[str] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    sense: str = "min"

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def add_var(self, name: str, lb: float = -math.inf, ub: float = math.inf) -> int:
        self.names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        return len(self.names) - 1

    def add_vars(self, prefix: str, n: int, lb=-math.inf, ub=math.inf) -> np.ndarray:
        lbs = np.broadcast_to(np.asarray(lb, dtype=float), (n,))
        ubs = np.broadcast_to(np.asarray(ub, dtype=float), (n,))
        return np.array([self.add_var(f"{prefix}[{k}]", lbs[k], ubs[k]) for k in range(n)], dtype=int)

    def add_row(self, idx: Sequence[int], coef: Sequence[float], rel: str, rhs: float, name: str = "") -> int:
        if rel not in _RELATIONS:
            raise ValueError(f"unknown relation {rel!r}")
        idx = np.asarray(idx, dtype=int).ravel()
        coef = np.asarray(coef, dtype=float).ravel()
        keep = coef != 0.0
        self.rows.append((idx[keep], coef[keep], rel, float(rhs)))
        self.row_names.append(name)
        return len(self.rows) - 1

    def add_rows(self, idx: Sequence[int], coef: np.ndarray, rel: str, rhs: Iterable[float], name: str = "") -> None:
        """Add one row per line of the dense block ``coef`` over columns ``idx``."""
        coef = np.atleast_2d(np.asarray(coef, dtype=float))
        for k, (row, r) in enumerate(zip(coef, np.asarray(list(rhs), dtype=float))):
            self.add_row(idx, row, rel, r, f"{name}[{k}]" if name else "")

    def set_objective(self, coefs: dict[int, float] | Sequence[tuple[int, float]], sense: str = "min") -> None:
        if sense not in ("min", "max"):
            raise ValueError(f"unknown sense {sense!r}")
        self.objective = dict(coefs)
        self.sense = sense

    def fix(self, idx: Sequence[int], values: Sequence[float]) -> None:
        for i, v in zip(np.asarray(idx, dtype=int).ravel(), np.asarray(values, dtype=float).ravel()):
            self.lb[i] = self.ub[i] = float(v)

    def copy(self) -> "LpProblem":
        return LpProblem(
            names=list(self.names),
            lb=list(self.lb),
            ub=list(self.ub),
            rows=list(self.rows),
            row_names=list(self.row_names),
            objective=dict(self.objective),
            sense=self.sense,
        )

    def validate(self) -> None:
        n = self.n_vars
        for k, (idx, coef, rel, rhs) in enumerate(self.rows):
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ValueError(f"row {k} references an unknown column")
            if not np.all(np.isfinite(coef)):
                raise ValueError(f"row {k} has a non-finite coefficient")
            if not math.isfinite(rhs):
                raise ValueError(f"row {k} has a non-finite rhs")
        for i, c in self.objective.items():
            if not 0 <= i < n or not math.isfinite(c):
                raise ValueError(f"bad objective entry at column {i}")
        for i, (lo, hi) in enumerate(zip(self.lb, self.ub)):
            if math.isnan(lo) or math.isnan(hi):
                raise ValueError(f"column {self.names[i]} has NaN bound")

    def matrices(self):
        """``(c, A_ub, b_ub, A_eq, b_eq, bounds)`` in linprog (minimise) form."""
        n = self.n_vars
        ub_r, ub_c, ub_v, b_ub = [], [], [], []
        eq_r, eq_c, eq_v, b_eq = [], [], [], []
        for idx, coef, rel, rhs in self.rows:
            if rel == "=":
                k = len(b_eq)
                eq_r.extend([k] * idx.size)
                eq_c.extend(idx)
                eq_v.extend(coef)
                b_eq.append(rhs)
            else:
                s = 1.0 if rel == "<=" else -1.0
                k = len(b_ub)
                ub_r.extend([k] * idx.size)
                ub_c.extend(idx)
                ub_v.extend(s * coef)
                b_ub.append(s * rhs)
        A_ub = sp.csr_matrix((ub_v, (ub_r, ub_c)), shape=(len(b_ub), n))
        A_eq = sp.csr_matrix((eq_v, (eq_r, eq_c)), shape=(len(b_eq), n))
        c = np.zeros(n)
        for i, v in self.objective.items():
            c[i] = v
        if self.sense == "max":
            c = -c
        bounds = list(zip(self.lb, self.ub))
        bounds = [(None if math.isinf(lo) else lo, None if math.isinf(hi) else hi) for lo, hi in bounds]
        return c, A_ub, np.asarray(b_ub), A_eq, np.asarray(b_eq), bounds

    def max_violation(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        worst = 0.0
        lb = np.asarray(self.lb)
        ub = np.asarray(self.ub)
        worst = max(worst, float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0)))
        for idx, coef, rel, rhs in self.rows:
            lhs = float(coef @ x[idx])
            if rel == "<=":
                v = lhs - rhs
            elif rel == ">=":
                v = rhs - lhs
            else:
                v = abs(lhs - rhs)
            worst = max(worst, v)
        return worst

    def to_mps(self, name: str = "TIESEC") -> str:
        """Fixed-column MPS text for cross-checking with external solvers."""
        rname = [f"R{k}" for k in range(self.n_rows)]
        cname = [f"C{k}" for k in range(self.n_vars)]
        lines = [f"NAME          {name}"]
        if self.sense == "max":
            lines += ["OBJSENSE", "    MAX"]
        lines.append("ROWS")
        lines.append(" N  OBJ")
        tag = {"<=": "L", ">=": "G", "=": "E"}
        for k, (_, _, rel, _) in enumerate(self.rows):
            lines.append(f" {tag[rel]}  {rname[k]}")
        lines.append("COLUMNS")
        by_col: dict[int, list[tuple[str, float]]] = {i: [] for i in range(self.n_vars)}
        for i, v in self.objective.items():
            by_col[i].append(("OBJ", v))
        for k, (idx, coef, _, _) in enumerate(self.rows):
            for i, v in zip(idx, coef):
                by_col[int(i)].append((rname[k], float(v)))
        for i in range(self.n_vars):
            for r, v in by_col[i]:
                lines.append(f"    {cname[i]:<8}  {r:<8}  {v:>12.6g}")
        lines.append("RHS")
        for k, (_, _, _, rhs) in enumerate(self.rows):
            if rhs != 0.0:
                lines.append(f"    {'RHS':<8}  {rname[k]:<8}  {rhs:>12.6g}")
        lines.append("BOUNDS")
        for i, (lo, hi) in enumerate(zip(self.lb, self.ub)):
            c = cname[i]
            if lo == hi:
                lines.append(f" FX {'BND':<8}  {c:<8}  {lo:>12.6g}")
                continue
            if math.isinf(lo) and math.isinf(hi):
                lines.append(f" FR {'BND':<8}  {c:<8}")
                continue
            if math.isinf(lo):
                lines.append(f" MI {'BND':<8}  {c:<8}")
            elif lo != 0.0:
                lines.append(f" LO {'BND':<8}  {c:<8}  {lo:>12.6g}")
            if not math.isinf(hi):
                lines.append(f" UP {'BND':<8}  {c:<8}  {hi:>12.6g}")
        lines.append("ENDATA")
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    status: str
    objective: float = math.nan
    x: np.ndarray | None = None
    tolerance: float = FEAS_TOL
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def solve_lp(problem: LpProblem, tol: float = FEAS_TOL) -> LpSolution:
    """Solve with HiGHS dual simplex and verify the returned point.

    A point that violates a row or bound by more than ``tol`` is reported as
    ``solver_failure`` rather than passed on as optimal.
    """
    problem.validate()
    c, A_ub, b_ub, A_eq, b_eq, bounds = problem.matrices()
    for lo, hi in bounds:
        if lo is not None and hi is not None and lo > hi + tol:
            return LpSolution(INFEASIBLE, message="crossed bounds", tolerance=tol)
    res = linprog(
        c,
        A_ub=A_ub if A_ub.shape[0] else None,
        b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=A_eq if A_eq.shape[0] else None,
        b_eq=b_eq if A_eq.shape[0] else None,
        bounds=bounds,
        method="highs-ds",
        options={"presolve": True},
    )
    if res.status == 2:
        return LpSolution(INFEASIBLE, message=res.message, tolerance=tol)
    if res.status == 3:
        return LpSolution(UNBOUNDED, message=res.message, tolerance=tol)
    if res.status != 0 or res.x is None:
        return LpSolution(SOLVER_FAILURE, message=res.message, tolerance=tol)
    x = np.asarray(res.x, dtype=float)
    viol = problem.max_violation(x)
    if viol > tol:
        return LpSolution(SOLVER_FAILURE, x=x, message=f"returned point violates rows by {viol:.3g}", tolerance=tol)
    obj = float(res.fun) if problem.sense == "min" else -float(res.fun)
    return LpSolution(OPTIMAL, objective=obj, x=x, tolerance=tol, message=res.message)
