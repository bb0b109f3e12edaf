"""
Dense two-phase simplex with bounded variables and Bland's rule.

Sized for the tiny LPs met in this package (a handful of rows and columns):
the per-block dual and primal penalized problems, and the monolithic reference
problem used to certify the decomposition. Correctness and determinism are
preferred over speed; there is no presolve and no sparsity.

Sign convention for the returned multipliers ``duals``: they are the ``y`` of
the Lagrangian ``c.x - y.(A x - rhs)``, so reduced costs are ``c - A^T y`` and,
for a minimization, ``<=`` rows carry ``y <= 0`` and ``>=`` rows ``y >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidProblem, MaxPivotsExceeded
from .problem import BlockPoint, DecomposableLP

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"

PIVOT_TOL = 1e-10
RATIO_TIE_TOL = 1e-12
SENSES = ("<=", ">=", "=")


@dataclass(frozen=True)
class LPInstance:
    """``min c.x  s.t.  A x (<=|>=|=) rhs,  lower <= x <= upper``."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple
    rhs: np.ndarray
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        n = c.shape[0]
        A = np.array(self.A, dtype=float).reshape(-1, n) if n else np.zeros((len(self.senses), 0))
        rhs = np.array(self.rhs, dtype=float).reshape(-1)
        senses = tuple(self.senses)
        lower = np.zeros(n) if self.lower is None else np.array(self.lower, dtype=float).reshape(-1)
        upper = np.full(n, np.inf) if self.upper is None else np.array(self.upper, dtype=float).reshape(-1)
        if A.shape[0] != rhs.shape[0] or len(senses) != rhs.shape[0]:
            raise DimensionError(f"A has {A.shape[0]} rows, rhs {rhs.shape[0]}, senses {len(senses)}")
        if lower.shape[0] != n or upper.shape[0] != n:
            raise DimensionError("bounds must have one entry per variable")
        if any(s not in SENSES for s in senses):
            raise ValueError(f"row senses must be among {SENSES}, got {senses}")
        for arr in (c, A, rhs, lower):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data and lower bounds must be finite")
        if np.any(np.isnan(upper)) or np.any(upper == -np.inf):
            raise ValueError("upper bounds must be finite or +inf")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        for name, val in (("c", c), ("A", A), ("rhs", rhs), ("lower", lower), ("upper", upper)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "senses", senses)

    @property
    def shape(self):
        return self.A.shape


@dataclass(frozen=True)
class LPSolution:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    pivots: int = 0
    pivot_log: tuple = field(default=(), repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def format_pivot_log(self) -> str:
        lines = ["phase entering leaving kind"]
        lines += [f"{ph} {e} {lv} {kind}" for ph, e, lv, kind in self.pivot_log]
        return "\n".join(lines) + "\n"


class _Tableau:
    """Bounded-variable tableau over the standard form ``A_std z = r, lo <= z <= hi``."""

    def __init__(self, A_std, r, hi, basis, max_pivots, log):
        N = A_std.shape[1]
        self.T = A_std.copy()
        self.lo = np.zeros(N)
        self.hi = hi
        self.basis = list(basis)
        self.at_upper = np.zeros(N, dtype=bool)
        self.z = np.zeros(N)
        self.z[self.basis] = r
        self.pivots = 0
        self.max_pivots = max_pivots
        self.log = log

    def _is_basic(self):
        mask = np.zeros(self.T.shape[1], dtype=bool)
        mask[self.basis] = True
        return mask

    def pivot(self, row, col):
        T = self.T
        T[row] /= T[row, col]
        for i in range(T.shape[0]):
            if i != row and T[i, col] != 0.0:
                T[i] -= T[i, col] * T[row]
        self.basis[row] = col

    def run(self, cost, can_enter, phase):
        """Iterate until no entering column remains; raises _Unbounded on a free ray."""
        while True:
            basic = self._is_basic()
            d = cost - cost[self.basis] @ self.T
            entering = None
            for j in np.flatnonzero(can_enter & ~basic):
                if self.hi[j] <= self.lo[j]:
                    continue
                if (not self.at_upper[j] and d[j] < -PIVOT_TOL) or (self.at_upper[j] and d[j] > PIVOT_TOL):
                    entering = j
                    break
            if entering is None:
                return OPTIMAL
            if self.pivots >= self.max_pivots:
                raise MaxPivotsExceeded(f"pivot cap {self.max_pivots} reached in phase {phase}")
            self._step(entering, phase)

    def _step(self, j, phase):
        direction = -1.0 if self.at_upper[j] else 1.0
        col = self.T[:, j]
        best, cands = np.inf, []

        def offer(limit, var, row, to_upper):
            nonlocal best, cands
            limit = max(limit, 0.0)
            if limit < best - RATIO_TIE_TOL:
                best, cands = limit, [(var, row, to_upper)]
            elif limit <= best + RATIO_TIE_TOL:
                cands.append((var, row, to_upper))

        if np.isfinite(self.hi[j]):
            offer(self.hi[j] - self.lo[j], j, None, not self.at_upper[j])
        for row, var in enumerate(self.basis):
            a = direction * col[row]
            if a > PIVOT_TOL:
                offer((self.z[var] - self.lo[var]) / a, var, row, False)
            elif a < -PIVOT_TOL and np.isfinite(self.hi[var]):
                offer((self.hi[var] - self.z[var]) / -a, var, row, True)
        if not cands:
            raise _Unbounded()
        leave, row, to_upper = min(cands, key=lambda c: c[0])
        step = best
        self.z[j] += direction * step
        self.z[self.basis] -= direction * step * col
        self.pivots += 1
        if row is None:
            self.at_upper[j] = to_upper
            self.z[j] = self.hi[j] if to_upper else self.lo[j]
            if self.log is not None:
                self.log.append((phase, int(j), int(j), "flip"))
            return
        self.z[leave] = self.hi[leave] if to_upper else self.lo[leave]
        self.at_upper[leave] = to_upper
        self.at_upper[j] = False
        self.pivot(row, j)
        if self.log is not None:
            self.log.append((phase, int(j), int(leave), "pivot"))


class _Unbounded(Exception):
    pass


def solve_lp(inst: LPInstance, max_pivots: int = 50_000, debug: bool = False) -> LPSolution:
    """Solve ``inst`` with the two-phase bounded simplex.

    The result is deterministic for identical input. Optimal solutions are
    re-derived from the final basis with a dense linear solve, so primal and
    dual values carry no accumulated tableau drift.

    Raises
    ------
    MaxPivotsExceeded
        If more than ``max_pivots`` pivots or bound flips are needed.
    """
    k, n = inst.A.shape
    log = [] if debug else None

    # Shift to z = x - lower >= 0 and add one slack per inequality row.
    rhs = inst.rhs - inst.A @ inst.lower
    n_slack = sum(s != "=" for s in inst.senses)
    A_std = np.zeros((k, n + n_slack))
    A_std[:, :n] = inst.A
    hi = np.concatenate([inst.upper - inst.lower, np.full(n_slack, np.inf)])
    slack_of = {}
    s = n
    for i, sense in enumerate(inst.senses):
        if sense != "=":
            A_std[i, s] = 1.0 if sense == "<=" else -1.0
            slack_of[i] = s
            s += 1
    sign = np.where(rhs < 0, -1.0, 1.0)
    A_std *= sign[:, None]
    rhs = rhs * sign

    # Rows whose slack has a +1 coefficient start with that slack basic;
    # the others get an artificial column.
    basis = []
    art_rows = []
    for i in range(k):
        sl = slack_of.get(i)
        if sl is not None and A_std[i, sl] > 0:
            basis.append(sl)
        else:
            basis.append(None)
            art_rows.append(i)
    n_art = len(art_rows)
    N = n + n_slack + n_art
    A_full = np.zeros((k, N))
    A_full[:, : n + n_slack] = A_std
    for a, i in enumerate(art_rows):
        A_full[i, n + n_slack + a] = 1.0
        basis[i] = n + n_slack + a
    hi = np.concatenate([hi, np.full(n_art, np.inf)])
    is_art = np.zeros(N, dtype=bool)
    is_art[n + n_slack:] = True

    tab = _Tableau(A_full, rhs, hi, basis, max_pivots, log)
    try:
        if n_art:
            tab.run(is_art.astype(float), np.ones(N, dtype=bool), phase=1)
            infeas = float(tab.z[is_art].sum())
            if infeas > 1e-9 * max(1.0, float(np.abs(rhs).max(initial=0.0))):
                return LPSolution(INFEASIBLE, pivots=tab.pivots, pivot_log=tuple(log or ()))
            _drive_out_artificials(tab, is_art)
            tab.hi[is_art] = 0.0
            tab.z[is_art] = 0.0
        cost = np.zeros(N)
        cost[:n] = inst.c
        tab.run(cost, ~is_art, phase=2)
    except _Unbounded:
        return LPSolution(UNBOUNDED, pivots=tab.pivots, pivot_log=tuple(log or ()))

    # Recompute the vertex and multipliers from the final basis.
    B = A_full[:, tab.basis]
    z = tab.z.copy()
    basic = np.zeros(N, dtype=bool)
    basic[tab.basis] = True
    z[~basic] = np.where(tab.at_upper[~basic], tab.hi[~basic], 0.0)
    if k:
        z[tab.basis] = np.linalg.solve(B, rhs - A_full[:, ~basic] @ z[~basic])
        y_std = np.linalg.solve(B.T, cost[tab.basis])
    else:
        y_std = np.zeros(0)
    x = inst.lower + z[:n]
    x = np.clip(x, inst.lower, inst.upper)
    duals = y_std * sign
    reduced = inst.c - inst.A.T @ duals
    return LPSolution(
        OPTIMAL,
        x=x,
        objective=float(inst.c @ x),
        duals=duals,
        reduced_costs=reduced,
        pivots=tab.pivots,
        pivot_log=tuple(log or ()),
    )


def _drive_out_artificials(tab: _Tableau, is_art):
    for row, var in enumerate(tab.basis):
        if not is_art[var]:
            continue
        basic = tab._is_basic()
        for j in np.flatnonzero(~is_art & ~basic):
            if abs(tab.T[row, j]) > PIVOT_TOL:
                tab.z[var] = 0.0
                tab.pivot(row, j)
                break
        # Otherwise the row is redundant; the artificial stays basic at zero.


def dual_objective(inst: LPInstance, sol: LPSolution) -> float:
    r = sol.reduced_costs
    lo_part = inst.lower @ np.maximum(r, 0.0)
    neg = np.minimum(r, 0.0)
    finite = np.isfinite(inst.upper)
    up_part = inst.upper[finite] @ neg[finite]
    return float(inst.rhs @ sol.duals + lo_part + up_part)


def certify(inst: LPInstance, sol: LPSolution) -> dict:
    """Residuals of the optimality conditions for an Optimal solution.

    Keys: ``primal`` (row and bound violation), ``dual`` (sign violations of
    multipliers and reduced costs), ``complementarity`` and ``gap``
    (``|primal objective - dual objective|``).
    """
    if not sol.optimal:
        raise ValueError("only Optimal solutions can be certified")
    x, y, r = sol.x, sol.duals, sol.reduced_costs
    act = inst.A @ x - inst.rhs
    senses = np.array(inst.senses, dtype=object)
    le, ge, eq = senses == "<=", senses == ">=", senses == "="
    primal = max(
        float(np.max(act[le], initial=0.0)),
        float(np.max(-act[ge], initial=0.0)),
        float(np.max(np.abs(act[eq]), initial=0.0)),
        float(np.max(inst.lower - x, initial=0.0)),
        float(np.max(x - inst.upper, initial=0.0)),
    )
    infinite_up = ~np.isfinite(inst.upper)
    dual = max(
        float(np.max(y[le], initial=0.0)),
        float(np.max(-y[ge], initial=0.0)),
        float(np.max(-r[infinite_up], initial=0.0)),
    )
    row_cs = np.abs(y * act)
    var_cs = np.where(
        r > 0,
        r * (x - inst.lower),
        np.where(r < 0, np.where(infinite_up, 0.0, -r * (np.where(infinite_up, 0.0, inst.upper) - x)), 0.0),
    )
    comp = max(float(np.max(row_cs, initial=0.0)), float(np.max(np.abs(var_cs), initial=0.0)))
    gap = abs(sol.objective - dual_objective(inst, sol))
    return {"primal": primal, "dual": dual, "complementarity": comp, "gap": gap}


def assemble_full_lp(p: DecomposableLP) -> LPInstance:
    """The monolithic ``min sum <-c_i, x_i>  s.t.  sum A_i x_i <= b,  x >= 0``."""
    return LPInstance(
        c=-np.concatenate(p.c),
        A=np.hstack(p.A),
        senses=("<=",) * p.m,
        rhs=p.b,
    )


@dataclass(frozen=True)
class ReferenceSolution:
    """Exact optimum of the undecomposed problem."""

    f_star: float
    x: BlockPoint
    lambda_star: np.ndarray
    lp: LPSolution


def solve_full_reference(p: DecomposableLP, max_pivots: int = 50_000) -> ReferenceSolution:
    """Solve the original coupled LP exactly.

    ``lambda_star`` are the (nonnegative) prices of the joint constraints
    ``sum_i A_i x_i <= b``.

    Raises
    ------
    InvalidProblem
        If the LP is infeasible or unbounded.
    """
    sol = solve_lp(assemble_full_lp(p), max_pivots=max_pivots)
    if not sol.optimal:
        raise InvalidProblem(f"reference LP is {sol.status}")
    splits = np.cumsum(p.n)[:-1]
    x = BlockPoint(np.split(sol.x, splits))
    lam = -sol.duals
    lam[lam == 0.0] = 0.0  # no negative zeros in reports
    return ReferenceSolution(f_star=sol.objective, x=x, lambda_star=lam, lp=sol)
