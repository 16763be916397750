import math

import numpy as np
import pytest
from conftest import fig1_problem
from hypothesis import given, settings
from hypothesis import strategies as st

from indefshoot import (
    Problem,
    ShootingOptions,
    WeightFunction,
    decompose,
    integrate,
    isolate_roots,
    parse,
    shoot_value,
)
from indefshoot.shooting import fd_second_derivative, ode_residual, slope_grid, validate_solution

# frozen from tests/oracles.py: 1e5 slopes in (0, 50], fixed-step RK4 with 1e5 steps
ORACLE_CAPPED_COUNT = 1


def linear_problem():
    w = WeightFunction(parse("1"), 1.0, 1.0)
    return Problem(w, decompose(w), parse("s", "s"))


def capped_problem():
    w = WeightFunction(parse("1"), 1.0, 1.0)
    return Problem(w, decompose(w), parse("s*min(s, 1000)", "s"))


def test_linear_closed_form():
    tr = integrate(linear_problem(), 2.0)
    assert abs(tr.u_end - 2 * math.sin(1.0)) <= 1e-8
    assert abs(tr.up_end - 2 * math.cos(1.0)) <= 1e-8
    assert np.max(np.abs(tr.u - 2 * np.sin(tr.x))) <= 1e-8


@pytest.mark.parametrize("problem", [linear_problem, fig1_problem, capped_problem])
def test_zero_slope_is_equilibrium(problem):
    tr = integrate(problem(), 0.0)
    assert not tr.u.any() and not tr.up.any()
    assert shoot_value(problem(), 0.0) == 0.0


def test_g_must_vanish_at_zero():
    w = WeightFunction(parse("1"), 1.0, 1.0)
    with pytest.raises(ValueError):
        Problem(w, decompose(w), parse("s + 1", "s"))


def test_fig1_top_slope_does_not_escape():
    tr = integrate(fig1_problem(), 5.0, u_cap=1e6)
    assert not tr.escaped
    assert tr.x[-1] == 1.0 and tr.x_end == 1.0
    assert np.all(np.diff(tr.x) > 0)
    assert np.all(np.isfinite(tr.u)) and np.all(np.isfinite(tr.up))


def test_trajectory_grid_is_exact():
    tr = integrate(fig1_problem(), 3.0)
    assert np.array_equal(tr.x, np.linspace(0.0, 1.0, 2001))


def test_escape_sentinel():
    w = WeightFunction(parse("1"), 1.0, 1.0)
    p = Problem(w, decompose(w), parse("s^3", "s"))
    tr = integrate(p, 1e4, u_cap=10.0)
    assert tr.escaped and tr.x_end < 1.0
    assert shoot_value(p, 1e4, u_cap=10.0) == 10.0


def test_fig1_sign_pattern():
    p = fig1_problem()
    ds = [round(0.1 * k, 1) for k in range(1, 51)]
    signs = "".join("+" if shoot_value(p, d) > 0 else "-" for d in ds)
    runs = [c for k, c in enumerate(signs) if k == 0 or c != signs[k - 1]]
    assert "".join(runs) == "+-+-"
    assert signs == "+" * 8 + "-" * 24 + "+" * 7 + "-" * 11


def test_linear_shoot_value():
    p = linear_problem()
    for d in np.linspace(0.1, 10.0, 25):
        v = shoot_value(p, float(d))
        assert v > 0 and abs(v - d * math.sin(1.0)) <= 1e-8 * d


def test_linear_has_no_roots():
    assert len(isolate_roots(linear_problem(), 0.0, 10.0, 500)) == 0


def test_fig1_exactly_three(fig1_report):
    assert fig1_report.count == 3


def test_capped_count_matches_frozen_oracle():
    res = isolate_roots(capped_problem(), 0.0, 50.0, 500)
    assert len(res) == ORACLE_CAPPED_COUNT


@pytest.mark.slow
def test_capped_count_matches_live_oracle():
    from oracles import count_positive_roots_capped

    res = isolate_roots(capped_problem(), 0.0, 50.0, 500)
    assert len(res) == count_positive_roots_capped(50.0, 10**5, 10**5)


def test_slope_grid_drops_zero():
    ds = slope_grid(0.0, 5.0, 500)
    assert len(ds) == 500 and ds[0] == 0.01 and ds[-1] == 5.0


# -- properties of accepted solutions ---------------------------------------


def test_residual_bound(fig1, fig1_report):
    for sol in fig1_report.solutions:
        assert sol.max_residual <= 1e-6
        assert ode_residual(fig1, sol.trajectory) <= 1e-6


def test_maximum_principle(fig1_report):
    for sol in fig1_report.solutions:
        tr = sol.trajectory
        assert np.all(tr.u[1:-1] > 0)
        assert sol.up_start > 0 > sol.up_end
        assert abs(tr.u_end) <= 1e-8


def _second_differences(x, u):
    hl = x[1:-1] - x[:-2]
    hr = x[2:] - x[1:-1]
    return 2.0 * (hl * u[2:] - (hl + hr) * u[1:-1] + hr * u[:-2]) / (hl * hr * (hl + hr))


def test_concave_on_humps_convex_on_gaps(fig1, fig1_report):
    for sol in fig1_report.solutions:
        x, u = sol.trajectory.x, sol.trajectory.u
        dd = _second_differences(x, u)
        for s, t in fig1.d.humps:
            sel = (x[:-2] >= s) & (x[2:] <= t)
            assert dd[sel].max() <= 1e-6
        for s, t in fig1.d.gaps:
            sel = (x[:-2] >= s) & (x[2:] <= t) & (u[1:-1] > 0)
            assert dd[sel].min() >= -1e-6


def test_tolerance_halving(fig1, fig1_report):
    halved = isolate_roots(fig1, 0.0, 5.0, 500, opts=ShootingOptions().halved())
    assert len(halved) == fig1_report.count
    for a, b in zip(sorted(s.slope for s in fig1_report.solutions), sorted(s.slope for s in halved)):
        assert abs(a - b) <= 1e-7 * a


def test_mirror_symmetry(fig1_report):
    # sin(3 pi x) is symmetric about 1/2, so -u'(1) of a solution is another slope
    slopes = sorted(s.slope for s in fig1_report.solutions)
    mirrored = sorted(-s.up_end for s in fig1_report.solutions)
    for a, b in zip(slopes, mirrored):
        assert abs(a - b) <= 1e-6 * a


def test_validate_rejects_non_root(fig1):
    sol, reasons = validate_solution(fig1, 1.0)
    assert sol is None and any("bc_tol" in r for r in reasons)


# -- finite differences -----------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(-5, 5), st.floats(0.1, 0.9))
def test_fd_exact_on_cubics_across_breakpoint(coef, jump, b):
    # C1 function whose second derivative jumps by 2*jump at b
    x = np.linspace(0.0, 1.0, 201)
    f = np.polyval(coef, x) + jump * np.where(x > b, (x - b) ** 2, 0.0)
    upp, mask = fd_second_derivative(x, f, (b,))
    exact = np.polyval(np.polyder(coef, 2), x) + np.where(x > b, 2 * jump, 0.0)
    # windows never straddle the kink, so every node off it is exact
    off = np.abs(x - b) > 1e-12
    assert np.max(np.abs(upp - exact)[mask & off]) <= 1e-7


def test_fd_fourth_order():
    errs = []
    for n in (101, 201):
        x = np.linspace(0.0, 1.0, n)
        upp, mask = fd_second_derivative(x, np.sin(5 * x))
        errs.append(np.max(np.abs(upp + 25 * np.sin(5 * x))[mask]))
    assert errs[0] / errs[1] > 12
