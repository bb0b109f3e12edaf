"""
Exact non-smooth penalty decomposition of the share-allocation master problem.

For a fixed penalty vector ``t`` each block value is

    mu_i(u_i, t) = min_{x_i >= 0}  <-c_i, x_i> + <t, [A_i x_i - u_i]_+>,

and by LP duality ``mu_i = -min { <u_i, y> : A_i^T y >= c_i, 0 <= y <= t }``.
The dual minimizer ``y_i'`` gives the subgradient ``-y_i'`` of ``mu_i`` in
``u_i``. The master function ``mu(u, t) = sum_i mu_i(u_i, t)`` is convex and
piecewise linear in ``u``; its minimum over U equals the original optimum as
soon as ``t`` strictly dominates the joint-constraint prices.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidPenaltyBound, OracleDisagreementWarning
from .lp import INFEASIBLE, LPInstance, ReferenceSolution, solve_full_reference, solve_lp
from .problem import BlockPoint, DecomposableLP, PenaltyBound, ShareAllocation

log = logging.getLogger(__name__)

#: Primal/dual block values further apart than this trigger a warning.
DISAGREEMENT_TOL = 1e-6


@dataclass(frozen=True)
class BlockEvaluation:
    value: float
    y: np.ndarray
    x: np.ndarray
    primal_value: float | None


@dataclass(frozen=True)
class MasterEvaluation:
    """Value and one subgradient of ``mu(., t)`` at a share allocation.

    ``subgradient`` and ``y`` are ``(l, m)`` arrays with ``subgradient == -y``.
    ``x`` holds the per-block minimizers of the penalized problems.
    """

    value: float
    subgradient: np.ndarray
    block_values: np.ndarray
    y: np.ndarray
    x: BlockPoint
    primal_values: np.ndarray | None = None


@dataclass(frozen=True)
class CalibrationResult:
    lambda_star: np.ndarray
    t: PenaltyBound
    f_star: float
    reference: ReferenceSolution


def _tvec(t) -> np.ndarray:
    return t.t if isinstance(t, PenaltyBound) else PenaltyBound(t).t


def block_dual_lp(c, A, u_i, t) -> LPInstance:
    """``min <u_i, y>  s.t.  A^T y >= c,  0 <= y <= t``."""
    return LPInstance(c=u_i, A=A.T, senses=(">=",) * c.shape[0], rhs=c, upper=t)


def block_primal_lp(c, A, u_i, t) -> LPInstance:
    """Epigraph form ``min <-c, x> + <t, z>  s.t.  A x - z <= u_i,  x, z >= 0``."""
    m, n = A.shape
    return LPInstance(
        c=np.concatenate([-c, t]),
        A=np.hstack([A, -np.eye(m)]),
        senses=("<=",) * m,
        rhs=u_i,
    )


def eval_mu_block(p: DecomposableLP, i: int, u_i, t, cross_check: bool = True) -> BlockEvaluation:
    """Evaluate ``mu_i(u_i, t)``, a dual maximizer ``y_i'`` and a primal minimizer ``x_i``.

    The value is taken from the dual path as ``-<y_i', u_i>``. With
    ``cross_check`` the primal epigraph LP is solved as well and supplies
    ``x_i``; otherwise ``x_i`` is read off the dual LP multipliers.

    Raises
    ------
    InvalidPenaltyBound
        If no ``y`` in ``[0, t]`` satisfies ``A_i^T y >= c_i``.
    """
    c, A = p.block(i)
    t = _tvec(t)
    u_i = np.asarray(u_i, dtype=float)
    if u_i.shape != (p.m,) or t.shape != (p.m,):
        raise DimensionError(f"block {i}: u_i and t must have length m = {p.m}")
    dual = solve_lp(block_dual_lp(c, A, u_i, t))
    if dual.status == INFEASIBLE:
        raise InvalidPenaltyBound("no y in [0, t] satisfies A_i^T y >= c_i; t is too small", block=i)
    # The dual box is bounded, so Infeasible is the only non-optimal outcome.
    y = np.clip(dual.x, 0.0, t)
    value = -float(y @ u_i)
    if not cross_check:
        return BlockEvaluation(value, y, np.maximum(dual.duals, 0.0), None)
    primal = solve_lp(block_primal_lp(c, A, u_i, t))
    n = c.shape[0]
    if abs(primal.objective - value) > DISAGREEMENT_TOL:
        msg = f"block {i}: primal value {primal.objective!r} vs dual value {value!r}"
        log.warning(msg)
        warnings.warn(msg, OracleDisagreementWarning, stacklevel=2)
    return BlockEvaluation(value, y, primal.x[:n], primal.objective)


def eval_master(p: DecomposableLP, u, t, cross_check: bool = True) -> MasterEvaluation:
    """Evaluate ``mu(u, t)`` and the stacked subgradient ``(-y_1', ..., -y_l')``.

    Blocks are independent; they are evaluated and summed in index order so
    the result is reproducible bit for bit.
    """
    u = u.u if isinstance(u, ShareAllocation) else np.asarray(u, dtype=float)
    if u.shape != (p.l, p.m):
        raise DimensionError(f"shares have shape {u.shape}, expected {(p.l, p.m)}")
    t = _tvec(t)
    blocks = [eval_mu_block(p, i, u[i], t, cross_check=cross_check) for i in range(p.l)]
    values = np.array([bk.value for bk in blocks])
    y = np.array([bk.y for bk in blocks])
    total = 0.0
    for val in values:
        total += val
    primal = np.array([bk.primal_value for bk in blocks]) if cross_check else None
    return MasterEvaluation(
        value=total,
        subgradient=-y,
        block_values=values,
        y=y,
        x=BlockPoint([bk.x for bk in blocks]),
        primal_values=primal,
    )


def calibrate_penalty(p: DecomposableLP, margin: float = 1.0) -> CalibrationResult:
    """Pick ``t = 2 lambda* + margin`` from the exact reference solve.

    Raises
    ------
    InvalidProblem
        If the reference LP is infeasible or unbounded.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    ref = solve_full_reference(p)
    lam = np.maximum(ref.lambda_star, 0.0)
    return CalibrationResult(lambda_star=lam, t=PenaltyBound(2.0 * lam + margin), f_star=ref.f_star, reference=ref)


def optimal_allocation(p: DecomposableLP, x_star: BlockPoint) -> ShareAllocation:
    """Shares that make an optimal ``x*`` block-feasible.

    Each block gets its own consumption ``A_i x*_i`` plus an equal part of the
    unused resources, ``u*_i = (b - sum_s A_s x*_s) / l + A_i x*_i``.
    """
    used = np.array([Ai @ xi for Ai, xi in zip(p.A, x_star.x)])
    return ShareAllocation((p.b - used.sum(axis=0)) / p.l + used)


def recover_primal(ev: MasterEvaluation) -> BlockPoint:
    return ev.x


def subgradient_norm_bound(p: DecomposableLP, t) -> float:
    """``sqrt(l) * ||t||``: every ``y_i'`` lies in ``[0, t]``."""
    return float(np.sqrt(p.l) * np.linalg.norm(_tvec(t)))


class MasterOracle:
    """First-order oracle ``u -> (mu(u, t), subgradient)`` over flat share vectors.

    The most recent :class:`MasterEvaluation` is kept in ``last`` and the one
    with the lowest value in ``best``.
    """

    def __init__(self, p: DecomposableLP, t, cross_check: bool = True):
        self.p = p
        self.t = _tvec(t)
        self.cross_check = cross_check
        self.last = None
        self.best = None
        self.calls = 0

    def __call__(self, v):
        ev = eval_master(self.p, np.reshape(v, (self.p.l, self.p.m)), self.t, cross_check=self.cross_check)
        self.calls += 1
        self.last = ev
        if self.best is None or ev.value < self.best.value:
            self.best = ev
        return ev.value, ev.subgradient.reshape(-1)


def penalized_minimum(p: DecomposableLP, t) -> float:
    """``min_{u in U} mu(u, t)``, computed as one monolithic LP.

    Summing the block epigraph problems over a partition of ``b`` gives
    ``min <-c, x> + <t, w>  s.t.  sum_i A_i x_i - w <= b,  x, w >= 0``.
    It equals the original optimum when ``t`` dominates the joint prices and
    drops below it when some ``t_j`` is under every valid price.
    """
    t = _tvec(t)
    lp = LPInstance(
        c=np.concatenate([-np.concatenate(p.c), t]),
        A=np.hstack([np.hstack(p.A), -np.eye(p.m)]),
        senses=("<=",) * p.m,
        rhs=p.b,
    )
    sol = solve_lp(lp)
    if not sol.optimal:
        raise InvalidPenaltyBound(f"penalized problem is {sol.status}; t is too small")
    return sol.objective
