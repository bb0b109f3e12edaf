"""
Test problems: Shor's max-of-quadratics function and a deterministic generator
of positive decomposable LPs with two factors and two products per block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import DecomposableLP, ShareAllocation


@dataclass(frozen=True)
class ShorProblem:
    """``phi(v) = max_i b_i * ||v - a_i||^2`` over ``R^5``, ten quadratics."""

    weights: np.ndarray
    centers: np.ndarray  # (10, 5); row i is a_i
    phi_star: float
    v0: np.ndarray

    @property
    def n(self):
        return self.centers.shape[1]

    @property
    def m(self):
        return self.centers.shape[0]


# Printed column-wise (5 x 10); the centers are its columns.
_SHOR_CENTERS_T = (
    (0, 2, 1, 1, 3, 0, 1, 1, 0, 1),
    (0, 1, 2, 4, 2, 2, 1, 0, 0, 1),
    (0, 1, 1, 1, 1, 1, 1, 1, 2, 2),
    (0, 1, 1, 2, 0, 0, 1, 2, 1, 0),
    (0, 3, 2, 2, 1, 1, 1, 1, 0, 0),
)
_SHOR_WEIGHTS = (1, 5, 10, 2, 4, 3, 1.7, 2.5, 6, 3.5)


def _ro(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


SHOR = ShorProblem(
    weights=_ro(_SHOR_WEIGHTS),
    centers=_ro(np.array(_SHOR_CENTERS_T, dtype=float).T),
    phi_star=22.60016,
    v0=_ro((0, 0, 0, 0, 1)),
)


def shor_eval(v, problem: ShorProblem = SHOR):
    """Return ``(phi(v), g, i)`` with ``g = 2 b_i (v - a_i)`` for the first maximizing ``i``."""
    v = np.asarray(v, dtype=float)
    diff = v - problem.centers
    eta = problem.weights * np.einsum("ij,ij->i", diff, diff)
    i = int(np.argmax(eta))  # lowest index on ties
    return float(eta[i]), 2.0 * problem.weights[i] * diff[i], i


def shor_oracle(problem: ShorProblem = SHOR):
    def oracle(v):
        f, g, _ = shor_eval(v, problem)
        return f, g

    return oracle


@dataclass(frozen=True)
class GeneratorSpec:
    l: int
    phase: float = 0.0
    m: int = 2
    n_i: int = 2

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("need at least one block")
        if self.m != 2 or self.n_i != 2:
            raise ValueError("the generator only produces m = 2, n_i = 2 instances")


def generate_declp(spec: GeneratorSpec) -> DecomposableLP:
    """Deterministic positive instance built from sines and cosines.

    With 1-based block ``i``, factor ``j`` and product ``k``:
    ``A_i[j, k] = 1.5 + sin(i (j + 1) + k + p)``,
    ``c_i[k] = 2 + cos(i + k + p)`` and ``b_j = l (2 + 0.5 sin(j + 1 + p))``.
    """
    p = spec.phase
    cs, As = [], []
    for i in range(1, spec.l + 1):
        A = [[1.5 + math.sin(i * (j + 1) + k + p) for k in range(1, spec.n_i + 1)] for j in range(1, spec.m + 1)]
        c = [2.0 + math.cos(i + k + p) for k in range(1, spec.n_i + 1)]
        As.append(A)
        cs.append(c)
    b = [spec.l * (2.0 + 0.5 * math.sin(j + 1 + p)) for j in range(1, spec.m + 1)]
    return DecomposableLP(cs, As, b)


def initial_allocation(p: DecomposableLP) -> ShareAllocation:
    """Equal split ``u_i = b / l``."""
    return ShareAllocation(np.tile(p.b / p.l, (p.l, 1)))
