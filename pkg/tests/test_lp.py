import numpy as np
import pytest

from oracles import enumerate_vertices
from rhsdecomp import DecomposableLP, InvalidProblem, LPInstance, MaxPivotsExceeded, solve_full_reference, solve_lp
from rhsdecomp.lp import assemble_full_lp, certify
from rhsdecomp.testbed import GeneratorSpec, generate_declp


def random_bounded_lp(rng, max_rows=5, max_cols=6):
    k = int(rng.integers(1, max_rows + 1))
    n = int(rng.integers(1, max_cols + 1))
    A = np.round(rng.uniform(-3, 3, (k, n)), 1)
    senses = tuple(rng.choice(["<=", ">=", "="], size=k, p=[0.5, 0.3, 0.2]))
    rhs = np.round(rng.uniform(-2, 5, k), 1)
    lower = np.round(rng.uniform(-2, 1, n), 1)
    upper = lower + np.round(rng.uniform(0, 4, n), 1)
    c = np.round(rng.uniform(-3, 3, n), 1)
    return LPInstance(c, A, senses, rhs, lower, upper)


def test_unit_simplex_edge():
    sol = solve_lp(LPInstance([-1.0, -1.0], [[1.0, 1.0]], ["<="], [1.0]))
    assert sol.status == "Optimal"
    assert sol.objective == pytest.approx(-1.0, abs=1e-12)
    again = solve_lp(LPInstance([-1.0, -1.0], [[1.0, 1.0]], ["<="], [1.0]))
    np.testing.assert_array_equal(sol.x, again.x)


def test_contradictory_bound_is_infeasible():
    sol = solve_lp(LPInstance([1.0], [[1.0]], ["<="], [-1.0]))
    assert sol.status == "Infeasible"


def test_unbounded_detected():
    sol = solve_lp(LPInstance([-1.0, 0.0], [[1.0, -1.0]], ["<="], [1.0]))
    assert sol.status == "Unbounded"


def test_bounded_variables_without_rows():
    sol = solve_lp(LPInstance([1.0, -2.0], np.zeros((0, 2)), [], [], lower=[-1.0, 0.0], upper=[3.0, 4.0]))
    np.testing.assert_allclose(sol.x, [-1.0, 4.0])
    assert sol.objective == pytest.approx(-9.0)


def test_equality_and_redundant_rows():
    # second row duplicates the first; phase 1 must leave an artificial at zero
    inst = LPInstance([1.0, 2.0, 0.5], [[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]], ["=", "="], [3.0, 6.0])
    sol = solve_lp(inst)
    # cheapest coordinate takes all of the budget: 0.5 * 3
    assert sol.objective == pytest.approx(1.5, abs=1e-9)
    np.testing.assert_allclose(sol.x, [0.0, 0.0, 3.0], atol=1e-12)
    assert max(certify(inst, sol).values()) <= 1e-8


def test_random_3x4_against_vertex_enumeration(rng):
    for _ in range(100):
        A = rng.uniform(0.2, 3, (3, 4))
        c = rng.uniform(-3, 3, 4)
        rhs = rng.uniform(1, 5, 3)
        inst = LPInstance(c, A, ["<="] * 3, rhs)
        sol = solve_lp(inst)
        # positive A and x >= 0 make the region bounded; 100 is a safe box for the oracle
        ref, _ = enumerate_vertices(c, A, inst.senses, rhs, np.zeros(4), np.full(4, 100.0))
        assert sol.objective == pytest.approx(ref, abs=1e-9)


def test_random_bounded_lps_certified(rng):
    n_opt = 0
    for _ in range(150):
        inst = random_bounded_lp(rng)
        sol = solve_lp(inst)
        ref, _ = enumerate_vertices(inst.c, inst.A, inst.senses, inst.rhs, inst.lower, inst.upper)
        if ref is None:
            assert sol.status == "Infeasible"
            continue
        n_opt += 1
        assert sol.objective == pytest.approx(ref, abs=1e-9)
        res = certify(inst, sol)
        assert max(res.values()) <= 1e-8, res
    assert n_opt > 30


def test_determinism(rng):
    inst = random_bounded_lp(rng)
    a, b = solve_lp(inst), solve_lp(inst)
    assert a.status == b.status and a.objective == b.objective
    if a.optimal:
        assert a.x.tobytes() == b.x.tobytes()


def test_pivot_cap():
    inst = LPInstance([-1.0, -1.0], [[1.0, 2.0], [3.0, 1.0]], ["<=", "<="], [4.0, 6.0])
    with pytest.raises(MaxPivotsExceeded):
        solve_lp(inst, max_pivots=0)


def test_debug_pivot_log():
    inst = LPInstance([-1.0, -1.0], [[1.0, 2.0], [3.0, 1.0]], ["<=", "<="], [4.0, 6.0])
    sol = solve_lp(inst, debug=True)
    assert len(sol.pivot_log) == sol.pivots > 0
    assert sol.format_pivot_log().startswith("phase entering leaving kind\n")


def test_instance_validation():
    with pytest.raises(ValueError):
        LPInstance([1.0], [[1.0]], ["<"], [1.0])
    with pytest.raises(ValueError):
        LPInstance([1.0], [[1.0]], ["<="], [1.0], lower=[2.0], upper=[1.0])
    with pytest.raises(ValueError):
        LPInstance([np.nan], [[1.0]], ["<="], [1.0])


def test_reference_single_variable():
    ref = solve_full_reference(DecomposableLP([[1.0]], [[[1.0]]], [1.0]))
    assert ref.f_star == pytest.approx(-1.0)
    np.testing.assert_allclose(ref.x.x[0], [1.0])
    np.testing.assert_allclose(ref.lambda_star, [1.0])


def test_reference_symmetric_blocks():
    ref = solve_full_reference(DecomposableLP([[1.0], [1.0]], [[[1.0]], [[1.0]]], [1.0]))
    assert ref.f_star == pytest.approx(-1.0)
    np.testing.assert_allclose(ref.lambda_star, [1.0])
    assert ref.x.x[0][0] + ref.x.x[1][0] == pytest.approx(1.0)


def test_reference_generated_l2_matches_enumeration():
    p = generate_declp(GeneratorSpec(2))
    inst = assemble_full_lp(p)
    ref = solve_full_reference(p)
    bound = float(p.b.max() / min(A.min() for A in p.A)) + 1.0
    val, _ = enumerate_vertices(inst.c, inst.A, inst.senses, inst.rhs, inst.lower, np.full(4, bound))
    assert ref.f_star == pytest.approx(val, abs=1e-9)
    assert max(certify(inst, ref.lp).values()) <= 1e-8


def test_reference_rejects_unbounded():
    with pytest.raises(InvalidProblem):
        solve_full_reference(DecomposableLP([[1.0]], [[[-1.0]]], [1.0]))
