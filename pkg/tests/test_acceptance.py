"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from conftest import SWEEP_MUS, fig1_problem, step_weight

from indefshoot import (
    AnnulusProblem,
    EigenProblem,
    ShootingOptions,
    back_map,
    check_hypotheses,
    choose_r,
    degree_bookkeeping_check,
    first_eigenvalue,
    isolate_roots,
    parse,
    predicted_degree,
    solve_all,
    transform,
)
from indefshoot.multiplicity import nonempty_subsets


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nacceptance {number}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def timed_fig1():
    t = time.perf_counter()
    rep = solve_all(fig1_problem(), (0.0, 5.0, 500))
    return rep, time.perf_counter() - t


def test_criterion_1_figure_reproduction(timed_fig1, verdict):
    rep, seconds = timed_fig1
    checks = [rep.count == 3, seconds < 10.0]
    for sol in rep.solutions:
        tr = sol.trajectory
        checks += [abs(tr.u_end) <= 1e-8, bool(np.all(tr.u[1:-1] > 0)), sol.up_start > 0 > sol.up_end]
    slopes = ", ".join(f"{s.slope:.10f}" for s in rep.solutions)
    verdict(1, all(checks), f"count={rep.count} slopes=[{slopes}] time={seconds:.2f}s")


def test_criterion_2_signatures(timed_fig1, verdict):
    rep, _ = timed_fig1
    lam0 = rep.hypotheses.lambda0
    r = choose_r(parse("max(0, 100*s*atan(abs(s)))", "s"), lam0, 0.1 * lam0)
    labels = sorted(rep.signature_labels(), key=lambda s: (len(s), s))
    ok = (
        labels == ["{1}", "{2}", "{1,2}"]
        and rep.r_used == r
        and not any(s.ambiguous for s in rep.signatures)
        and rep.full_coverage
    )
    verdict(2, ok, f"signatures={' '.join(labels)} r={r:.6g}")


def test_criterion_3_constant_weight(verdict):
    errs = []
    for L in (1.0, 0.5, 1 / 3):
        lam = first_eigenvalue(EigenProblem(lambda x: 1.0, 0.0, L))
        errs.append(abs(lam - (math.pi / L) ** 2) / (math.pi / L) ** 2)
    verdict(3, max(errs) <= 1e-8, f"max relative error {max(errs):.2e}")


def test_criterion_4_step_weight(verdict):
    a, bps = step_weight(math.pi / 6)
    hump = first_eigenvalue(EigenProblem(a, 0.0, math.pi / 3, bps))
    a, bps = step_weight(0.01)
    merged = first_eigenvalue(EigenProblem(a, 0.0, math.pi, bps))
    ok = abs(hump - 9.0) <= 1e-7 and merged < 4.0
    verdict(4, ok, f"hump={hump:.12f} merged(eps=0.01)={merged:.6f}")


def test_criterion_5_degree_bookkeeping(verdict):
    t = time.perf_counter()
    ok = True
    for n in range(1, 11):
        subsets = nonempty_subsets(n)
        ok &= len(subsets) == 2**n - 1
        ok &= all(predicted_degree(s) == (-1) ** len(s) for s in subsets)
        ok &= predicted_degree(()) + sum(predicted_degree(s) for s in subsets) == 0
        ok &= degree_bookkeeping_check(n)
    seconds = time.perf_counter() - t
    verdict(5, ok and seconds < 1.0, f"n=1..10 exact, time={seconds:.3f}s")


def test_criterion_6_hypothesis_checker(sin3_oracle, verdict):
    p = fig1_problem()
    rep = check_hypotheses(p.w, p.d, p.g)
    full, hump1, hump2 = sin3_oracle
    ok = (
        rep.g0_estimate <= 1e-5 < rep.lambda0
        and abs(rep.ginf_estimate - 50 * math.pi) <= 1e-3 * 50 * math.pi
        and rep.ginf_estimate > max(rep.lambda1)
        and abs(rep.lambda0 - full) <= 1e-6 * full
        and abs(rep.lambda1[0] - hump1) <= 1e-6 * hump1
        and abs(rep.lambda1[1] - hump2) <= 1e-6 * hump2
    )
    verdict(
        6,
        ok,
        f"g0={rep.g0_estimate:.3e} lambda0={rep.lambda0:.9f} (oracle {full:.9f}) "
        f"ginf={rep.ginf_estimate:.6f} lambda1={rep.lambda1[0]:.9f},{rep.lambda1[1]:.9f} "
        f"(oracle {hump1:.9f})",
    )


def test_criterion_7_mu_sweep_stability(fig1_sweep, verdict):
    mu_hat = fig1_sweep.mu_hat
    if mu_hat is None:
        verdict(7, False, "no grid mu reached full coverage")
    p = fig1_problem()
    checks = {}
    for factor in (2, 4):
        rep = solve_all(p.with_mu(factor * mu_hat), (0.0, 5.0, 500))
        checks[factor * mu_hat] = (rep.full_coverage, rep.count)
    ok = all(full for full, _ in checks.values())
    counts = " ".join(f"mu={mu:g}:count={c}" for mu, (_, c) in checks.items())
    grid = " ".join(f"{mu:g}:{r.count}" for mu, r in zip(SWEEP_MUS, fig1_sweep.reports))
    verdict(7, ok, f"mu_hat={mu_hat:g} {counts} sweep[{grid}]")


def test_criterion_8_radial_round_trip(verdict):
    from test_radial import _direct_radial, test_chain_rule_identity

    ap = AnnulusProblem(2, 1.0, math.e, parse("1", "r"), 1.0, parse("s^3", "s"))
    p = transform(ap)
    rep = solve_all(p, (0.0, 50.0, 500))
    worst = 0.0
    for sol in rep.solutions:
        rad = back_map(ap, sol, problem=p)
        worst = max(worst, float(np.max(np.abs(rad.v - _direct_radial(ap, float(rad.vp[0]), rad.r)))))
    chain_ok = True
    for args in [(2, 1.0, math.e), (3, 1.0, 2.0), (4, 0.5, 1.5)]:
        try:
            test_chain_rule_identity(*args)
        except AssertionError:
            chain_ok = False
    ok = rep.count >= 1 and worst <= 1e-6 and chain_ok
    verdict(8, ok, f"solutions={rep.count} sup-norm gap={worst:.2e} chain rule={'ok' if chain_ok else 'violated'}")


def test_criterion_9_property_suites(timed_fig1, verdict):
    import test_expr
    import test_shooting

    rep, _ = timed_fig1
    p = fig1_problem()
    failures = []
    suites = {
        "curvature": lambda: test_shooting.test_concave_on_humps_convex_on_gaps(p, rep),
        "residual": lambda: test_shooting.test_residual_bound(p, rep),
        "maximum principle": lambda: test_shooting.test_maximum_principle(rep),
        "precedence": lambda: [test_expr.test_precedence(s, v) for s, v in [("2+3*4", 14.0), ("2^3^2", 512.0), ("-2^2", -4.0)]],
        "round trip": test_expr.test_round_trip,
    }
    for name, fn in suites.items():
        try:
            fn()
        except AssertionError:
            failures.append(name)
    halved = isolate_roots(p, 0.0, 5.0, 500, opts=ShootingOptions().halved())
    a = sorted(s.slope for s in rep.solutions)
    b = sorted(s.slope for s in halved.solutions)
    drift = max(abs(x - y) / x for x, y in zip(a, b)) if len(a) == len(b) else math.inf
    if not drift <= 1e-7:
        failures.append("tolerance halving")
    verdict(9, not failures, f"failed={failures or 'none'} halving drift={drift:.2e}")
