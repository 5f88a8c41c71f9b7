"""Conic model container and the continuous solve behind the optimizer.

A ConicModel is linear rows plus 4-row second-order-cone blocks of the
form ||G x + g||_2 <= h^T x + k, maximizing a linear objective. Binary
variables are declared by index and relaxed to their bounds here; the
branch-and-bound layer manages their integrality.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import clarabel
import numpy as np
from scipy import sparse


@dataclass
class SocBlock:
    """||G x + g|| <= h^T x + k with G of shape [3, n]."""
    g_rows: list[tuple[dict[int, float], float]]  # 3 rows: (coeffs, const)
    h: dict[int, float]
    k: float
    label: str = ""


@dataclass
class ConicModel:
    objective: list[float] = field(default_factory=list)  # maximize
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    eq_rows: list[tuple[dict[int, float], float]] = field(default_factory=list)
    ub_rows: list[tuple[dict[int, float], float]] = field(default_factory=list)
    soc_blocks: list[SocBlock] = field(default_factory=list)
    binaries: list[int] = field(default_factory=list)
    names: dict[int, str] = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return len(self.lb)

    def add_var(self, lb: float = -np.inf, ub: float = np.inf,
                obj: float = 0.0, name: str = "", binary: bool = False) -> int:
        idx = self.n_vars
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.objective.append(float(obj))
        if name:
            self.names[idx] = name
        if binary:
            self.binaries.append(idx)
        return idx

    def add_eq(self, coeffs: dict[int, float], rhs: float) -> None:
        self.eq_rows.append((coeffs, rhs))

    def add_ub(self, coeffs: dict[int, float], rhs: float) -> None:
        self.ub_rows.append((coeffs, rhs))

    def validate(self) -> None:
        n = self.n_vars
        if not (len(self.ub) == len(self.objective) == n):
            raise ValueError("bound/objective arrays out of sync")
        for idx in self.binaries:
            if not (0 <= idx < n):
                raise ValueError(f"binary index {idx} out of range")
        for rows in (self.eq_rows, self.ub_rows):
            for coeffs, _ in rows:
                if any(not (0 <= j < n) for j in coeffs):
                    raise ValueError("constraint references unknown variable")
        for blk in self.soc_blocks:
            if len(blk.g_rows) != 3:
                raise ValueError(f"SOC block {blk.label} must have 3 rows")
            refs = set(blk.h)
            for coeffs, _ in blk.g_rows:
                refs |= set(coeffs)
            if any(not (0 <= j < n) for j in refs):
                raise ValueError(
                    f"SOC block {blk.label} references unknown variable")


@dataclass(frozen=True)
class SolveResult:
    status: str  # optimal | infeasible | unbounded | inaccurate | error
    x: np.ndarray | None
    objective: float | None  # in maximize orientation
    residuals: dict[str, float]
    iterations: int
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


_STATUS = {
    "Solved": "optimal",
    "AlmostSolved": "inaccurate",
    "PrimalInfeasible": "infeasible",
    "AlmostPrimalInfeasible": "infeasible",
    "DualInfeasible": "unbounded",
    "AlmostDualInfeasible": "unbounded",
}


def _assemble(model: ConicModel, lb: np.ndarray, ub: np.ndarray):
    rows, rhs, cones = [], [], []

    def push(coeffs: dict[int, float], const: float):
        rows.append(coeffs)
        rhs.append(const)

    n_eq = len(model.eq_rows)
    for coeffs, b in model.eq_rows:
        push(coeffs, b)
    if n_eq:
        cones.append(clarabel.ZeroConeT(n_eq))

    n_ineq = 0
    for coeffs, b in model.ub_rows:
        push(coeffs, b)
        n_ineq += 1
    for j in range(model.n_vars):
        if np.isfinite(ub[j]):
            push({j: 1.0}, float(ub[j]))
            n_ineq += 1
        if np.isfinite(lb[j]):
            push({j: -1.0}, float(-lb[j]))
            n_ineq += 1
    if n_ineq:
        cones.append(clarabel.NonnegativeConeT(n_ineq))

    for blk in model.soc_blocks:
        push({j: -v for j, v in blk.h.items()}, blk.k)
        for coeffs, const in blk.g_rows:
            push({j: -v for j, v in coeffs.items()}, const)
        cones.append(clarabel.SecondOrderConeT(4))

    m = len(rows)
    data, ri, ci = [], [], []
    for r, coeffs in enumerate(rows):
        for j, v in coeffs.items():
            if v != 0.0:
                ri.append(r)
                ci.append(j)
                data.append(v)
    a = sparse.csc_matrix((data, (ri, ci)), shape=(m, model.n_vars))
    return a, np.asarray(rhs, dtype=float), cones


def solve_socp(
    model: ConicModel,
    lb_override: np.ndarray | None = None,
    ub_override: np.ndarray | None = None,
    tol: float = 1e-9,
) -> SolveResult:
    """Continuous solve (binaries relaxed into their bounds).

    Returns primal/dual residuals and the duality gap so callers can hold
    the solution to the stated accuracy; infeasibility and unboundedness
    come back as certificates, never silently.
    """
    model.validate()
    lb = np.asarray(model.lb) if lb_override is None else lb_override
    ub = np.asarray(model.ub) if ub_override is None else ub_override
    a, b, cones = _assemble(model, lb, ub)
    n = model.n_vars
    p = sparse.csc_matrix((n, n))
    q = -np.asarray(model.objective, dtype=float)

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_feas = tol
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    solver = clarabel.DefaultSolver(p, q, a, b, cones, settings)
    sol = solver.solve()
    status = _STATUS.get(str(sol.status), "error")
    if status in ("infeasible", "unbounded"):
        return SolveResult(status, None, None,
                           {"r_prim": float(sol.r_prim),
                            "r_dual": float(sol.r_dual)},
                           int(sol.iterations))
    if status == "error":
        return SolveResult(
            "error", None, None,
            {"r_prim": float(sol.r_prim), "r_dual": float(sol.r_dual)},
            int(sol.iterations),
            message=f"solver returned {sol.status}",
        )
    x = np.asarray(sol.x)
    gap = abs(sol.obj_val - sol.obj_val_dual) / max(1.0, abs(sol.obj_val))
    residuals = {
        "r_prim": float(sol.r_prim),
        "r_dual": float(sol.r_dual),
        "duality_gap": float(gap),
    }
    msg = "" if status == "optimal" else f"solver returned {sol.status}"
    if (status == "inaccurate"
            and residuals["r_prim"] < 1e-7
            and residuals["r_dual"] < 1e-7
            and residuals["duality_gap"] < 1e-6):
        # reduced-precision exit that still meets the accuracy contract
        status = "optimal"
    return SolveResult(status, x, float(-sol.obj_val), residuals,
                       int(sol.iterations), message=msg)
