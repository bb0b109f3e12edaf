"""Acceptance criteria C1 to C9, one or more tests each.

Run with ``pytest -m acceptance``; the terminal summary prints one PASS/FAIL
line per test.
"""

import math
import time

import numpy as np
import pytest

from oracles import enumerate_vertices
from rhsdecomp import (
    LPInstance,
    calibrate_penalty,
    eval_master,
    eval_mu_block,
    optimal_allocation,
    penalized_minimum,
    project_onto_U,
    solve_lp,
    subgradient_norm_bound,
)
from rhsdecomp.harness import declp_experiment, shor_experiment, verify_experiment
from rhsdecomp.lp import certify
from rhsdecomp.nsopt import StepSchedule, step
from rhsdecomp.problem import full_objective, joint_violation
from rhsdecomp.testbed import GeneratorSpec, generate_declp

pytestmark = pytest.mark.acceptance

# (accuracy, subgradient evaluations) as printed in the Shor comparison table
SHOR_TABLE = {
    "sgm": [(0.1, 60), (0.01, 252), (0.001, 1410), (0.0001, 6728)],
    "sgmts": [(0.1, 21), (0.01, 292), (0.001, 570), (0.0001, 3696)],
    "sgmsq": [(0.1, 404), (0.01, 14575), (0.003, 35000)],
    "dasg": [(0.1, 117), (0.01, 1542), (0.001, 9982), (0.0003, 35000)],
}
SHOR_PARAMS = {
    "sgm": dict(offset=1),
    "sgmts": dict(nu=0.7, d=25, offset=1),
    "sgmsq": {},
    "dasg": {},
}


def within_table_tolerance(ours, paper):
    if ours is None:
        return False
    return abs(ours - paper) <= 0.15 * paper or ours <= 1.25 * paper


@pytest.fixture(scope="module")
def shor_runs():
    runs, elapsed = {}, 0.0
    for method, table in SHOR_TABLE.items():
        eps = tuple(e for e, _ in table)
        budget = math.ceil(1.25 * max(n for _, n in table))
        t0 = time.perf_counter()
        report, _ = shor_experiment(method, 0.1, eps=eps, max_iter=budget, timed=False, **SHOR_PARAMS[method])
        elapsed += time.perf_counter() - t0
        runs[method] = {row["eps"]: row["evaluations"] for row in report.rows}
    return runs, elapsed


@pytest.mark.parametrize(
    "method, eps, paper",
    [(m, e, n) for m, table in SHOR_TABLE.items() for e, n in table],
    ids=lambda x: str(x),
)
def test_c1_shor_table(shor_runs, method, eps, paper):
    ours = shor_runs[0][method][eps]
    print(f"C1 {method} eps={eps}: {ours} evaluations (table: {paper})")
    assert within_table_tolerance(ours, paper)


def test_c1_shor_runtime(shor_runs):
    print(f"C1 runtime: {shor_runs[1]:.2f} s")
    assert shor_runs[1] < 5.0


def test_c2_two_speed_beats_plain(shor_runs):
    runs = shor_runs[0]
    print(f"C2 eps=1e-4: sgmts {runs['sgmts'][0.0001]} vs sgm {runs['sgm'][0.0001]}")
    assert runs["sgmts"][0.0001] < runs["sgm"][0.0001]


@pytest.mark.parametrize("l", [1, 2, 5])
def test_c3_exact_penalty(l):
    p = generate_declp(GeneratorSpec(l))
    cal = calibrate_penalty(p)
    ev = eval_master(p, optimal_allocation(p, cal.reference.x), cal.t)
    viol = float(np.max(joint_violation(p, ev.x)))
    obj = full_objective(p, ev.x)
    print(f"C3 l={l}: mu(u*) - f* = {ev.value - cal.f_star:.2e}, violation {viol:.2e}, objective error {obj - cal.f_star:.2e}")
    assert abs(ev.value - cal.f_star) <= 1e-7
    assert viol <= 1e-6
    assert abs(obj - cal.f_star) <= 1e-6


def test_c4_small_penalty_breaks_exactness():
    p = generate_declp(GeneratorSpec(2))
    cal = calibrate_penalty(p)
    lam = cal.lambda_star
    j = int(np.argmax(lam))
    # one component under its price; the rest generous so every block dual stays feasible
    t = 10.0 * cal.t.t
    t[j] = 0.2 * lam[j]
    assert t[j] < lam[j]
    u_star = optimal_allocation(p, cal.reference.x)
    mu = eval_master(p, u_star, t).value
    low = penalized_minimum(p, t)
    print(f"C4 t={t.tolist()}: mu(u*) - f* = {mu - cal.f_star:.4f}, min_U mu - f* = {low - cal.f_star:.4f}")
    assert mu < cal.f_star - 1e-9
    assert low < cal.f_star - 1e-9


def test_c4_verify_reports_failed_precondition():
    p = generate_declp(GeneratorSpec(2))
    cal = calibrate_penalty(p)
    t = 10.0 * cal.t.t
    t[0] = 0.2 * cal.lambda_star[0]
    report = verify_experiment(ls=(2,), t=t.tolist(), samples=5, timed=False)
    row = report.rows[0]
    assert row["precondition"] is False
    assert row["checks"]["exactness"]["passed"] is False


@pytest.mark.parametrize("l", [2, 5])
def test_c5_oracle_consistency(l):
    p = generate_declp(GeneratorSpec(l))
    t = calibrate_penalty(p).t
    rng = np.random.default_rng(100 + l)
    worst_block = 0.0
    for _ in range(200):
        i = int(rng.integers(p.l))
        u_i = rng.uniform(-2, 2, p.m) * p.b / p.l + p.b / p.l
        bk = eval_mu_block(p, i, u_i, t)
        worst_block = max(worst_block, abs(bk.primal_value - bk.value))
    worst_ineq, worst_norm = np.inf, 0.0
    bound = subgradient_norm_bound(p, t)
    scale = float(np.max(p.b)) / p.l + 1.0
    for _ in range(200):
        u1 = project_onto_U(rng.uniform(-scale, scale, (p.l, p.m)) + p.b / p.l, p.b).u
        u2 = project_onto_U(rng.uniform(-scale, scale, (p.l, p.m)) + p.b / p.l, p.b).u
        e1 = eval_master(p, u1, t, cross_check=False)
        e2 = eval_master(p, u2, t, cross_check=False)
        worst_ineq = min(worst_ineq, e2.value - e1.value - float(np.sum(e1.subgradient * (u2 - u1))))
        worst_norm = max(worst_norm, float(np.linalg.norm(e1.subgradient)), float(np.linalg.norm(e2.subgradient)))
    print(f"C5 l={l}: block agreement {worst_block:.1e}, inequality slack {worst_ineq:.1e}, "
          f"norm {worst_norm:.3f} <= {bound:.3f}")
    assert worst_block <= 1e-8
    assert worst_ineq >= -1e-9
    assert worst_norm <= bound


def _random_lp(rng):
    k = int(rng.integers(1, 6))
    n = int(rng.integers(1, 7))
    A = np.round(rng.uniform(-3, 3, (k, n)), 1)
    senses = tuple(rng.choice(["<=", ">=", "="], size=k, p=[0.5, 0.3, 0.2]))
    rhs = np.round(rng.uniform(-2, 5, k), 1)
    lower = np.round(rng.uniform(-2, 1, n), 1)
    upper = lower + np.round(rng.uniform(0, 4, n), 1)
    c = np.round(rng.uniform(-3, 3, n), 1)
    return LPInstance(c, A, senses, rhs, lower, upper)


def test_c6_lp_certification():
    rng = np.random.default_rng(6)
    mismatches, worst_cert, n_opt = 0, 0.0, 0
    for _ in range(500):
        inst = _random_lp(rng)
        sol = solve_lp(inst)
        ref, _ = enumerate_vertices(inst.c, inst.A, inst.senses, inst.rhs, inst.lower, inst.upper)
        if ref is None:
            mismatches += sol.status != "Infeasible"
            continue
        n_opt += 1
        if sol.status != "Optimal" or abs(sol.objective - ref) > 1e-9:
            mismatches += 1
            continue
        worst_cert = max(worst_cert, *certify(inst, sol).values())
    print(f"C6: {mismatches} mismatches, {n_opt} optimal, worst certificate residual {worst_cert:.1e}")
    assert mismatches == 0
    assert worst_cert <= 1e-8


def test_c7_master_convergence():
    p = generate_declp(GeneratorSpec(2))
    report, _ = declp_experiment(p, "declp-l2", method="sgmts", theta=5.0, nu=0.8, d=25, offset=2,
                                 budget=2000, timed=False)
    s = report.summary
    print(f"C7: best {s['best']:.8f}, f* {s['f_star']:.8f}, relative gap {s['relative_gap']:.2e}")
    assert s["iterations"] == 2000
    assert s["relative_gap"] <= 0.05


TWO_SPEED = StepSchedule.two_speed(0.1, 0.7, 25)
K_MAX = 100_000


def _prefix_sums(sched):
    theta = np.array([step(sched, k) for k in range(K_MAX + 1)])
    beta = np.array([sched.anchor(s) for s in range(K_MAX // sched.d + 1)])
    return theta, beta


def test_c8_step_sum_dominates_anchor_sum():
    theta, beta = _prefix_sums(TWO_SPEED)
    # prefix sums compared at every anchor index k = s d
    th_cum = np.cumsum(theta)[:: TWO_SPEED.d]
    be_cum = np.cumsum(beta)[: th_cum.size]
    print(f"C8: sum theta {theta.sum():.4f}, sum beta {beta.sum():.4f}")
    assert np.all(th_cum >= be_cum)


def test_c8_step_sum_exceeds_ten():
    theta, _ = _prefix_sums(TWO_SPEED)
    print(f"C8: sum of theta_k for k <= 1e5 is {theta.sum():.4f}")
    assert theta.sum() > 10


def test_c8_square_sum_bound():
    theta, beta = _prefix_sums(TWO_SPEED)
    sq = np.cumsum(theta**2)
    bsq = TWO_SPEED.d * np.cumsum(beta**2)
    idx = np.arange(K_MAX + 1) // TWO_SPEED.d
    print(f"C8: sum theta^2 {sq[-1]:.4f} <= d sum beta^2 {bsq[-1]:.4f}")
    assert np.all(sq <= bsq[idx] + 1e-15)


def test_c9_determinism():
    a_rep, a_tr = shor_experiment("sgmts", 0.1, nu=0.7, d=25, max_iter=2000, timed=False)
    b_rep, b_tr = shor_experiment("sgmts", 0.1, nu=0.7, d=25, max_iter=2000, timed=False)
    assert a_rep.to_json() == b_rep.to_json()
    assert a_tr.to_csv() == b_tr.to_csv()
    p = generate_declp(GeneratorSpec(3))
    c_rep, c_tr = declp_experiment(p, "declp-l3", budget=300, timed=False)
    d_rep, d_tr = declp_experiment(p, "declp-l3", budget=300, timed=False)
    assert c_rep.to_json() == d_rep.to_json()
    assert c_tr.to_csv() == d_tr.to_csv()
    assert verify_experiment(samples=5, timed=False).to_json() == verify_experiment(samples=5, timed=False).to_json()
