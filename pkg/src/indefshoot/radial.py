"""Radial solutions on an annulus via the substitution t = h(r) = int_{R1}^r xi^(1-N) dxi.

Radial solutions ``v(r)`` of ``v'' + (N-1)/r v' + A_mu(r) g(v) = 0`` on
``[R1, R2]`` correspond to solutions ``u(t) = v(r(t))`` of
``u'' + r(t)^(2(N-1)) A_mu(r(t)) g(u) = 0`` on ``[0, h(R2)]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .expr import Expr
from .shooting import (
    Problem,
    ShootingOptions,
    Solution,
    fd_second_derivative,
    integrate,
)
from .weights import Decomposition, WeightFunction, decompose

__all__ = [
    "AnnulusProblem",
    "RadialResidualError",
    "RadialSolution",
    "back_map",
    "h_inverse",
    "h_map",
    "transform",
]


class RadialResidualError(RuntimeError):
    pass


def h_map(N: int, R1: float, r: float) -> float:
    if r < R1:
        raise ValueError(f"r={r!r} is below R1={R1!r}")
    if N == 2:
        return math.log(r / R1)
    return (R1 ** (2 - N) - r ** (2 - N)) / (N - 2)


def h_inverse(N: int, R1: float, t: float, L: Optional[float] = None) -> float:
    if t < 0 or (L is not None and t > L):
        raise ValueError(f"t={t!r} outside [0, {L!r}]")
    if N == 2:
        return R1 * math.exp(t)
    return (R1 ** (2 - N) - (N - 2) * t) ** (1.0 / (2 - N))


@dataclass(frozen=True)
class AnnulusProblem:
    """Radial weight ``A`` (in r) and nonlinearity ``g`` on ``R1 < |x| < R2`` in R^N."""

    N: int
    R1: float
    R2: float
    A: Callable[[float], float]
    mu: float
    g: Callable[[float], float]
    sigma: Optional[tuple] = None  # explicit hump endpoints in r, optional
    tau: Optional[tuple] = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError("N must be an integer >= 2")
        if not 0 < self.R1 < self.R2:
            raise ValueError("need 0 < R1 < R2")

    @property
    def L(self) -> float:
        return h_map(self.N, self.R1, self.R2)

    def radial_weight(self) -> WeightFunction:
        return WeightFunction(self.A, self.mu, self.R2 - self.R1)

    def A_mu(self, r: float) -> float:
        v = self.A(r)
        return max(v, 0.0) - self.mu * max(-v, 0.0)


class _TransformedBase:
    """``t -> r(t)^(2(N-1)) A(r(t))``; multiplying by a positive factor keeps signs."""

    def __init__(self, ap: AnnulusProblem):
        self.N, self.R1, self.L = ap.N, ap.R1, ap.L
        self.A = ap.A._fn if isinstance(ap.A, Expr) else ap.A
        N, R1 = self.N, self.R1
        if N == 2:
            self._r = lambda t: R1 * math.exp(t)
        else:
            c, e = R1 ** (2 - N), 1.0 / (2 - N)
            self._r = lambda t: (c - (N - 2) * t) ** e

    def __call__(self, t: float) -> float:
        r = self._r(t)
        return r ** (2 * (self.N - 1)) * self.A(r)


def _shifted(A, R1):
    fn = A._fn if isinstance(A, Expr) else A
    return lambda s: fn(R1 + s)


def transform(ap: AnnulusProblem, sign_tol: float = 1e-12, grid: int = 4096) -> Problem:
    """The equivalent 1D problem on ``[0, L]``.

    The hump decomposition is computed in ``r`` (or taken from ``ap``) and
    mapped through ``h``; ``a_mu(t) = r^(2(N-1)) A_mu(r)`` because the factor
    is positive.
    """
    L = ap.L
    if ap.sigma is not None:
        sig_r, tau_r = tuple(ap.sigma), tuple(ap.tau)
    else:
        rd = decompose(WeightFunction(_shifted(ap.A, ap.R1), 1.0, ap.R2 - ap.R1), sign_tol, grid)
        sig_r = tuple(ap.R1 + s for s in rd.sigma)
        tau_r = tuple(ap.R1 + t for t in rd.tau)

    def to_t(r):
        if r >= ap.R2:
            return L
        return min(max(h_map(ap.N, ap.R1, max(r, ap.R1)), 0.0), L)

    d = Decomposition(tuple(to_t(s) for s in sig_r), tuple(to_t(t) for t in tau_r), L)
    w = WeightFunction(_TransformedBase(ap), ap.mu, L)
    return Problem(w, d, ap.g)


@dataclass
class RadialSolution:
    r: np.ndarray
    v: np.ndarray
    vp: np.ndarray
    source: Solution
    residual: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "slope_t": self.source.slope,
            "slope_r": float(self.vp[0]),
            "sup_norm": float(self.v.max()),
            "radial_residual": self.residual,
            "signature": sorted(self.source.signature) if self.source.signature is not None else None,
        }


def back_map(
    ap: AnnulusProblem,
    sol: Solution,
    points: int = 2001,
    opts: ShootingOptions = ShootingOptions(),
    residual_tol: float = 1e-6,
    problem: Optional[Problem] = None,
) -> RadialSolution:
    """``v(r) = u(h(r))`` on a uniform r-grid, checked against the radial ODE.

    The 1D problem is re-integrated so that the t-images of the r-grid are
    integrator nodes; ``v'(r) = u'(h(r)) r^(1-N)``.
    """
    p = problem if problem is not None else transform(ap)
    rs = np.linspace(ap.R1, ap.R2, points)
    ts = np.array([h_map(ap.N, ap.R1, float(r)) for r in rs])
    ts[0], ts[-1] = 0.0, p.length
    tr = integrate(p, sol.slope, opts=opts, grid=ts)
    if tr.escaped or len(tr.x) != points:
        raise RadialResidualError("re-integration of the transformed problem did not complete")
    v = tr.u.copy()
    vp = tr.up * rs ** (1 - ap.N)
    r_breaks = [h_inverse(ap.N, ap.R1, b) for b in p.breakpoints]
    vpp, mask = fd_second_derivative(rs, v, r_breaks)
    force = np.array([ap.A_mu(float(r)) * (ap.g(float(x)) if x >= 0 else 0.0) for r, x in zip(rs, v)])
    res = np.abs(vpp + (ap.N - 1) / rs * vp + force) / (1.0 + np.abs(force))
    resid = float(res[mask].max())
    if not resid <= residual_tol:
        raise RadialResidualError(f"radial residual {resid:.3g} exceeds {residual_tol:g}")
    return RadialSolution(rs, v, vp, sol, resid)
