"""
Problem data model for block-decomposable LPs and the share-partition set.

The original problem is

    min  sum_i <-c_i, x_i>   s.t.  sum_i A_i x_i <= b,  x_i >= 0,

and the shares ``u = (u_1, ..., u_l)`` live in the affine set
``U = {u : sum_i u_i = b}``. Shares are stored as an ``(l, m)`` array; negative
entries are allowed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionError, ProblemFormatError

#: Absolute per-component tolerance for membership in U.
U_TOL = 1e-9


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DecomposableLP:
    """Blocks ``(c_i, A_i)`` coupled through the joint resource vector ``b``."""

    c: tuple
    A: tuple
    b: np.ndarray

    def __init__(self, c: Sequence, A: Sequence, b):
        c = tuple(_frozen(ci) for ci in c)
        A = tuple(_frozen(Ai) for Ai in A)
        b = _frozen(b)
        if len(c) != len(A) or len(c) == 0:
            raise DimensionError(f"need l >= 1 blocks with matching c and A, got {len(c)} and {len(A)}")
        if b.ndim != 1:
            raise DimensionError(f"b must be a vector, got shape {b.shape}")
        m = b.shape[0]
        for i, (ci, Ai) in enumerate(zip(c, A)):
            if ci.ndim != 1 or Ai.ndim != 2:
                raise DimensionError(f"block {i}: c must be 1-d and A 2-d")
            if Ai.shape != (m, ci.shape[0]):
                raise DimensionError(f"block {i}: A has shape {Ai.shape}, expected {(m, ci.shape[0])}")
        for arr in (b, *c, *A):
            if not np.all(np.isfinite(arr)):
                raise DimensionError("problem data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def l(self) -> int:
        return len(self.c)

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def n(self) -> tuple:
        return tuple(ci.shape[0] for ci in self.c)

    def block(self, i: int):
        """Return ``(c_i, A_i)``."""
        return self.c[i], self.A[i]


@dataclass(frozen=True)
class ShareAllocation:
    """A point of U, stored as an ``(l, m)`` array of shares."""

    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen(self.u))
        if self.u.ndim != 2:
            raise DimensionError(f"shares must be an (l, m) array, got shape {self.u.shape}")

    @property
    def l(self) -> int:
        return self.u.shape[0]

    def total(self) -> np.ndarray:
        return self.u.sum(axis=0)

    def in_U(self, b, tol: float = U_TOL) -> bool:
        return bool(np.all(np.abs(self.total() - np.asarray(b, dtype=float)) <= tol))


@dataclass(frozen=True)
class PenaltyBound:
    """Per-constraint penalty weights ``t >= 0`` (upper bounds of the dual box)."""

    t: np.ndarray

    def __post_init__(self):
        t = _frozen(self.t)
        if t.ndim != 1:
            raise DimensionError(f"t must be a vector, got shape {t.shape}")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValueError(f"t must be finite and nonnegative, got {t}")
        object.__setattr__(self, "t", t)

    def dominates(self, lam) -> bool:
        """True when ``t > lam`` componentwise (the exactness condition)."""
        return bool(np.all(self.t > np.asarray(lam, dtype=float)))


@dataclass(frozen=True)
class BlockPoint:
    """Per-block output vectors ``x_i >= 0``."""

    x: tuple

    def __init__(self, x: Sequence):
        x = tuple(_frozen(xi) for xi in x)
        for i, xi in enumerate(x):
            if xi.ndim != 1:
                raise DimensionError(f"block {i}: x must be 1-d")
        object.__setattr__(self, "x", x)

    def is_nonnegative(self, tol: float = 0.0) -> bool:
        return all(np.all(xi >= -tol) for xi in self.x)


def _as_blocks(v, b=None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 2:
        raise DimensionError(f"expected an (l, m) array of blocks, got shape {v.shape}")
    if b is not None and v.shape[1] != np.shape(b)[0]:
        raise DimensionError(f"block length {v.shape[1]} does not match len(b) = {np.shape(b)[0]}")
    return v


def project_onto_U(v, b) -> ShareAllocation:
    """Euclidean projection of the stacked blocks ``v`` onto ``{u : sum_i u_i = b}``.

    The excess ``sum_s v_s - b`` is split evenly over the ``l`` blocks.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 1:
        raise DimensionError(f"b must be a vector, got shape {b.shape}")
    v = _as_blocks(v, b)
    excess = v.sum(axis=0) - b
    return ShareAllocation(v - excess / v.shape[0])


def project_direction_onto_U0(g) -> np.ndarray:
    """Remove the block mean from ``g`` so that its blocks sum to zero."""
    g = _as_blocks(g)
    return g - g.mean(axis=0)


def _check_point(p: DecomposableLP, x: BlockPoint):
    if len(x.x) != p.l:
        raise DimensionError(f"point has {len(x.x)} blocks, problem has {p.l}")
    for i, (xi, ni) in enumerate(zip(x.x, p.n)):
        if xi.shape[0] != ni:
            raise DimensionError(f"block {i}: x has length {xi.shape[0]}, expected {ni}")


def full_objective(p: DecomposableLP, x: BlockPoint) -> float:
    """``sum_i <-c_i, x_i>``."""
    _check_point(p, x)
    return float(sum(-(ci @ xi) for ci, xi in zip(p.c, x.x)))


def joint_violation(p: DecomposableLP, x: BlockPoint) -> np.ndarray:
    """``[sum_i A_i x_i - b]_+``; all zeros iff x satisfies the joint constraints."""
    _check_point(p, x)
    used = sum(Ai @ xi for Ai, xi in zip(p.A, x.x))
    return np.maximum(used - p.b, 0.0)


# -- JSON problem files -------------------------------------------------------


def _reject_constant(name):
    raise ValueError(f"non-finite literal {name} is not allowed")


def _vector(obj, field):
    if not isinstance(obj, list):
        raise ProblemFormatError(field, "expected an array of numbers")
    out = []
    for k, val in enumerate(obj):
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ProblemFormatError(f"{field}[{k}]", f"expected a number, got {val!r}")
        if not math.isfinite(val):
            raise ProblemFormatError(f"{field}[{k}]", "value must be finite")
        out.append(float(val))
    return out


def problem_from_dict(doc: dict):
    """Build ``(problem, t or None)`` from a decoded problem document."""
    if not isinstance(doc, dict):
        raise ProblemFormatError("$", "top level must be an object")
    for key in ("l", "m", "blocks", "b"):
        if key not in doc:
            raise ProblemFormatError(key, "missing required field")
    l, m = doc["l"], doc["m"]
    for key, val in (("l", l), ("m", m)):
        if isinstance(val, bool) or not isinstance(val, int) or val < 1:
            raise ProblemFormatError(key, f"expected a positive integer, got {val!r}")
    b = _vector(doc["b"], "b")
    if len(b) != m:
        raise ProblemFormatError("b", f"length {len(b)} does not match m = {m}")
    blocks = doc["blocks"]
    if not isinstance(blocks, list) or len(blocks) != l:
        raise ProblemFormatError("blocks", f"expected an array of l = {l} blocks")
    cs, As = [], []
    for i, blk in enumerate(blocks):
        where = f"blocks[{i}]"
        if not isinstance(blk, dict) or "c" not in blk or "A" not in blk:
            raise ProblemFormatError(where, "expected an object with fields c and A")
        c = _vector(blk["c"], f"{where}.c")
        rows = blk["A"]
        if not isinstance(rows, list) or len(rows) != m:
            raise ProblemFormatError(f"{where}.A", f"expected m = {m} rows")
        A = []
        for j, row in enumerate(rows):
            row = _vector(row, f"{where}.A[{j}]")
            if len(row) != len(c):
                raise ProblemFormatError(f"{where}.A[{j}]", f"row length {len(row)} does not match len(c) = {len(c)}")
            A.append(row)
        cs.append(c)
        As.append(A)
    t = None
    if doc.get("t") is not None:
        tv = _vector(doc["t"], "t")
        if len(tv) != m:
            raise ProblemFormatError("t", f"length {len(tv)} does not match m = {m}")
        if any(x < 0 for x in tv):
            raise ProblemFormatError("t", "penalty bounds must be nonnegative")
        t = PenaltyBound(tv)
    return DecomposableLP(cs, As, b), t


def problem_to_dict(p: DecomposableLP, t: PenaltyBound | None = None) -> dict:
    doc = {
        "l": p.l,
        "m": p.m,
        "blocks": [{"c": ci.tolist(), "A": Ai.tolist()} for ci, Ai in zip(p.c, p.A)],
        "b": p.b.tolist(),
    }
    if t is not None:
        doc["t"] = t.t.tolist()
    return doc


def loads_problem(text: str):
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"line {exc.lineno}", exc.msg) from exc
    except ValueError as exc:
        raise ProblemFormatError("$", str(exc)) from exc
    return problem_from_dict(doc)


def load_problem(path):
    """Read a problem JSON file. Returns ``(problem, t)`` where ``t`` may be None."""
    return loads_problem(Path(path).read_text())


def save_problem(path, p: DecomposableLP, t: PenaltyBound | None = None):
    Path(path).write_text(json.dumps(problem_to_dict(p, t), indent=2) + "\n")
