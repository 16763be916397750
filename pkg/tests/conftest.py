import pytest

from indefshoot import Problem, WeightFunction, decompose, parse, solve_all

FIG1_WEIGHT = "sin(3*pi*x)"
FIG1_G = "max(0, 100*s*atan(abs(s)))"


def fig1_problem(mu=0.5):
    w = WeightFunction(parse(FIG1_WEIGHT), mu, 1.0)
    return Problem(w, decompose(w), parse(FIG1_G, "s"))


@pytest.fixture(scope="session")
def fig1():
    return fig1_problem()


@pytest.fixture(scope="session")
def fig1_report(fig1):
    return solve_all(fig1, (0.0, 5.0, 500))


def step_weight(eps):
    """1 on [0, pi/2 - eps] and [pi/2 + eps, pi], 0 between, -1 on (pi, 2 pi]."""
    import math

    lo, hi = math.pi / 2 - eps, math.pi / 2 + eps

    def a(x):
        if x > math.pi:
            return -1.0
        if lo < x < hi:
            return 0.0
        return 1.0

    return a, (lo, hi, math.pi)


# frozen outputs of tests/oracles.py (fixed-step Pruefer RK4, 1e6 steps, Richardson)
ORACLE_LAMBDA_SIN3_HUMP = 104.14022554612674
ORACLE_LAMBDA_SIN3_FULL = 34.25874751420882


@pytest.fixture(scope="session")
def sin3_oracle():
    """Live oracle eigenvalues for max(0, sin(3 pi x)): (on [0,1], on [0,1/3], on [2/3,1])."""
    from oracles import eigen_oracle, q_sin3_plus

    return (
        eigen_oracle(q_sin3_plus, 0.0, 1.0),
        eigen_oracle(q_sin3_plus, 0.0, 1.0 / 3.0),
        eigen_oracle(q_sin3_plus, 2.0 / 3.0, 1.0),
    )


SWEEP_MUS = (0.05, 0.1, 0.2, 0.5, 1.0, 2.0)


@pytest.fixture(scope="session")
def fig1_sweep(fig1):
    from indefshoot import sweep_mu

    return sweep_mu(fig1, SWEEP_MUS, (0.0, 5.0, 500))
