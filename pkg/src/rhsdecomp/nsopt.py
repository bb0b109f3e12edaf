"""
Subgradient methods for non-smooth convex minimization over a simple set.

Two iterations are provided:

* :func:`run_subgradient` -- the projected subgradient step
  ``v <- proj(v - theta_k g)`` with a pluggable step schedule (SGM, SGMTS,
  SGMSQ).
* :func:`run_dasg` -- simple double averaging: a running subgradient sum
  anchored at the start point, averaged into the iterate (unconstrained only).

An oracle is any callable ``v -> (phi(v), g)`` with ``g`` a subgradient at
``v``. Both runs return a :class:`RunTrace`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

TARGET_REACHED = "TargetReached"
BUDGET_EXHAUSTED = "BudgetExhausted"
STATIONARY_STOP = "StationaryStop"

#: Steps shorter than this count as ``v^{k+1} == v^k``.
STATIONARY_TOL = 1e-14

METHODS = ("sgm", "sgmts", "sgmsq", "dasg")


class OracleFailure(RuntimeError):
    """The first-order oracle raised; the original error is ``__cause__``."""

    def __init__(self, iteration, cause):
        super().__init__(f"oracle failed at iteration {iteration}: {cause}")
        self.iteration = iteration


@dataclass(frozen=True)
class StepSchedule:
    """Step-size rule ``k -> theta_k``.

    kind ``"plain"``: ``theta / (k + offset)``.
    kind ``"sqrt"``: ``theta / sqrt(k + 1)``.
    kind ``"two_speed"``: restarts at ``beta_s = theta / (s + offset)`` every
    ``d`` iterations (``k = s d``) and shrinks by ``nu`` in between.
    """

    kind: str
    theta: float
    nu: float | None = None
    d: int | None = None
    offset: int = 1

    def __post_init__(self):
        if self.kind not in ("plain", "sqrt", "two_speed"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.offset < 1:
            raise ValueError("offset must be >= 1")
        if self.kind == "two_speed":
            if self.nu is None or not 0 < self.nu < 1:
                raise ValueError("two-speed schedule needs 0 < nu < 1")
            if self.d is None or int(self.d) != self.d or self.d < 1:
                raise ValueError("two-speed schedule needs an integer spacing d >= 1")

    @classmethod
    def plain(cls, theta, offset=1):
        return cls("plain", theta, offset=offset)

    @classmethod
    def square_root(cls, theta):
        return cls("sqrt", theta)

    @classmethod
    def two_speed(cls, theta, nu, d, offset=1):
        return cls("two_speed", theta, nu=nu, d=int(d), offset=offset)

    def anchor(self, s: int) -> float:
        """``beta_s``, the step at the ``s``-th restart of a two-speed schedule."""
        return self.theta / (s + self.offset)


def step(schedule: StepSchedule, k: int) -> float:
    if k < 0:
        raise ValueError("k must be nonnegative")
    if schedule.kind == "plain":
        return schedule.theta / (k + schedule.offset)
    if schedule.kind == "sqrt":
        return schedule.theta / math.sqrt(k + 1)
    s, r = divmod(k, schedule.d)
    return schedule.anchor(s) * schedule.nu**r


@dataclass(frozen=True)
class SolverConfig:
    """Run settings.

    ``target`` is the optimal value ``phi*`` used for accuracy stopping; the
    run stops once ``best - target <= min(eps)``. Without a target only the
    iteration budget ``max_iter`` (number of steps) applies.
    """

    method: str
    schedule: StepSchedule
    normalize: bool = False
    max_iter: int = 1000
    target: float | None = None
    eps: tuple = ()
    stride: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        eps = tuple(float(e) for e in self.eps)
        if any(not e > 0 for e in eps):
            raise ValueError("accuracy targets must be positive")
        if self.target is not None and not eps:
            raise ValueError("target-value stopping needs at least one eps")
        object.__setattr__(self, "eps", eps)

    @classmethod
    def for_method(cls, method, theta, nu=None, d=None, offset=1, **kw):
        """Config with the step rule each method uses by convention."""
        if method == "sgm":
            sched = StepSchedule.plain(theta, offset)
        elif method == "sgmts":
            sched = StepSchedule.two_speed(theta, nu, d, offset)
        elif method in ("sgmsq", "dasg"):
            sched = StepSchedule.square_root(theta)
        else:
            raise ValueError(f"method must be one of {METHODS}")
        return cls(method=method, schedule=sched, **kw)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TraceRecord:
    k: int
    theta: float
    f: float
    best: float
    elapsed: float


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    status: str | None = None
    hits: dict = field(default_factory=dict)
    iterations: int = 0
    best: float = math.inf
    best_k: int = 0
    v_best: np.ndarray | None = None
    v_final: np.ndarray | None = None

    @property
    def evaluations(self) -> int:
        """Number of subgradient computations made."""
        return self.iterations + 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "theta", "f", "best", "elapsed_s"])
        for r in self.records:
            w.writerow([r.k, repr(r.theta), repr(r.f), repr(r.best), repr(r.elapsed)])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


class _Recorder:
    def __init__(self, cfg: SolverConfig, clock):
        self.cfg = cfg
        self.clock = clock
        self.t0 = clock() if clock else 0.0
        self.trace = RunTrace()
        self.pending = None
        self.eps_left = sorted(cfg.eps, reverse=True)

    def observe(self, k, theta, f, v):
        tr = self.trace
        if f < tr.best:
            tr.best, tr.best_k, tr.v_best = f, k, v.copy()
        tr.iterations = k
        elapsed = (self.clock() - self.t0) if self.clock else 0.0
        rec = TraceRecord(k, theta, float(f), tr.best, elapsed)
        if k % self.cfg.stride == 0:
            tr.records.append(rec)
            self.pending = None
        else:
            self.pending = rec
        if self.cfg.target is not None:
            gap = tr.best - self.cfg.target
            while self.eps_left and gap <= self.eps_left[0]:
                tr.hits[self.eps_left.pop(0)] = k
            return not self.eps_left
        return False

    def finish(self, status, v):
        if self.pending is not None:
            self.trace.records.append(self.pending)
        self.trace.status = status
        self.trace.v_final = v.copy()
        self.trace.hits = dict(sorted(self.trace.hits.items(), reverse=True))
        return self.trace


def _call(oracle, v, k):
    try:
        f, g = oracle(v)
    except Exception as exc:
        raise OracleFailure(k, exc) from exc
    return float(f), np.asarray(g, dtype=float)


def run_subgradient(
    oracle: Callable,
    project: Callable | None,
    v0,
    cfg: SolverConfig,
    project_direction: Callable | None = None,
    clock: Callable | None = None,
) -> RunTrace:
    """Projected subgradient method ``v^{k+1} = proj(v^k - theta_k g^k)``.

    Parameters
    ----------
    oracle : callable
        ``v -> (phi(v), g)``.
    project : callable or None
        Euclidean projection onto the feasible set; None for the whole space.
    v0 : array_like
        Start point, assumed feasible.
    cfg : SolverConfig
    project_direction : callable, optional
        For an affine feasible set, projection onto its direction subspace.
        When given the step is ``v - theta_k P0(g)`` and ``project`` is not
        called; with ``cfg.normalize`` the projected direction is normalized.
    clock : callable, optional
        Wall clock for the ``elapsed`` column; without one elapsed is 0.

    Returns
    -------
    RunTrace
        ``hits`` maps each accuracy in ``cfg.eps`` to the first iteration
        index whose best value is within it.
    """
    v = np.array(v0, dtype=float)
    rec = _Recorder(cfg, clock)
    k = 0
    while True:
        f, g = _call(oracle, v, k)
        theta = step(cfg.schedule, k)
        if rec.observe(k, theta, f, v):
            return rec.finish(TARGET_REACHED, v)
        d = project_direction(g) if project_direction is not None else g
        norm = float(np.linalg.norm(d))
        if norm == 0.0:
            return rec.finish(STATIONARY_STOP, v)
        if k >= cfg.max_iter:
            return rec.finish(BUDGET_EXHAUSTED, v)
        if cfg.normalize:
            d = d / norm
        v_next = v - theta * d
        if project_direction is None and project is not None:
            v_next = project(v_next)
        if np.linalg.norm(v_next - v) <= STATIONARY_TOL:
            return rec.finish(STATIONARY_STOP, v)
        v = v_next
        k += 1


def run_dasg(oracle: Callable, v0, cfg: SolverConfig, clock: Callable | None = None) -> RunTrace:
    """Simple double averaging for unconstrained problems.

    ``p^k = g^0 + ... + g^k``, ``y^k = v^0 - theta_k p^k`` and
    ``v^{k+1} = (k+1)/(k+2) v^k + 1/(k+2) y^k``.
    """
    v_start = np.array(v0, dtype=float)
    v = v_start.copy()
    p = np.zeros_like(v)
    rec = _Recorder(cfg, clock)
    k = 0
    while True:
        f, g = _call(oracle, v, k)
        theta = step(cfg.schedule, k)
        if rec.observe(k, theta, f, v):
            return rec.finish(TARGET_REACHED, v)
        norm = float(np.linalg.norm(g))
        if norm == 0.0:
            return rec.finish(STATIONARY_STOP, v)
        if k >= cfg.max_iter:
            return rec.finish(BUDGET_EXHAUSTED, v)
        p += g / norm if cfg.normalize else g
        y = v_start - theta * p
        mu = (k + 1) / (k + 2)
        v_next = mu * v + (1 - mu) * y
        if np.linalg.norm(v_next - v) <= STATIONARY_TOL:
            return rec.finish(STATIONARY_STOP, v)
        v = v_next
        k += 1


def run(oracle, v0, cfg: SolverConfig, project=None, project_direction=None, clock=None) -> RunTrace:
    """Dispatch on ``cfg.method``."""
    if cfg.method == "dasg":
        if project is not None or project_direction is not None:
            raise ValueError("DASG is only defined here for unconstrained problems")
        return run_dasg(oracle, v0, cfg, clock=clock)
    return run_subgradient(oracle, project, v0, cfg, project_direction=project_direction, clock=clock)
