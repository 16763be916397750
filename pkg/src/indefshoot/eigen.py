"""First Dirichlet eigenvalue of ``phi'' + lam q(x) phi = 0`` via the Pruefer angle.

With ``phi = rho sin(theta)``, ``phi' = rho cos(theta)`` the angle obeys
``theta' = cos^2 theta + lam q sin^2 theta``, ``theta(x1) = 0``, and the first
eigenvalue is the unique ``lam`` with ``theta(x2) = pi``.  ``theta(x2)`` is
non-decreasing in ``lam`` for ``q >= 0``, so bisection brackets it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import rk
from .expr import DomainError, Expr
from .weights import Decomposition, WeightFunction

__all__ = [
    "EigenError",
    "EigenProblem",
    "HypothesisReport",
    "check_hypotheses",
    "first_eigenvalue",
    "prufer_angle",
]

ANGLE_TOL = 1e-12
LAMBDA_MAX = 1e12


class EigenError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenProblem:
    """Non-negative weight ``q`` on ``J = [x1, x2]``.

    ``breakpoints`` are points inside J where q may be non-smooth; the
    integrator restarts there instead of stepping across.
    """

    q: Callable[[float], float]
    x1: float
    x2: float
    breakpoints: tuple = ()

    def __post_init__(self):
        if not self.x2 > self.x1:
            raise ValueError(f"empty interval [{self.x1}, {self.x2}]")
        object.__setattr__(
            self, "breakpoints", tuple(b for b in self.breakpoints if self.x1 < b < self.x2)
        )

    def check(self, samples: int = 2048) -> None:
        xs = np.linspace(self.x1, self.x2, samples + 1)
        qs = np.array([self.q(float(x)) for x in xs])
        if np.any(qs < 0):
            x = float(xs[np.argmax(qs < 0)])
            raise ValueError(f"weight is negative at x={x:.6g}")
        if not np.trapezoid(qs, xs) > 0:
            raise ValueError("weight vanishes identically on the interval")


def prufer_angle(p: EigenProblem, lam: float, tol: float = ANGLE_TOL) -> float:
    """Return ``theta(x2)`` for the given ``lam``."""
    if not math.isfinite(lam):
        raise ValueError("lambda must be finite")
    q = p.q._fn if isinstance(p.q, Expr) else p.q

    def rhs(x, y):
        s = math.sin(y[0])
        c = math.cos(y[0])
        return (c * c + lam * q(x) * s * s,)

    res = rk.integrate(
        rhs, p.x1, (0.0,), p.x2, rtol=tol, atol=tol, breakpoints=p.breakpoints
    )
    return res.y_end[0]


def first_eigenvalue(p: EigenProblem, rel_tol: float = 1e-10) -> float:
    """Smallest positive ``lam`` with ``theta(x2) = pi``."""
    lo, hi = 0.0, 1.0
    while prufer_angle(p, hi) < math.pi:
        lo, hi = hi, 2.0 * hi
        if hi > LAMBDA_MAX:
            raise EigenError(f"no eigenvalue below {LAMBDA_MAX:g}; is q effectively zero?")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if prufer_angle(p, mid) < math.pi:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class HypothesisReport:
    lambda0: float
    lambda1: list
    g0_estimate: float
    ginf_estimate: float
    g0_range: tuple
    ginf_range: tuple
    g0_ok: bool
    ginf_ok: bool
    caveat: str = "numeric limit estimate"
    notes: list = field(default_factory=list)

    @property
    def guaranteed(self) -> bool:
        return self.g0_ok and self.ginf_ok

    def verdict(self, ok: bool) -> str:
        return "PASS" if ok else "NOT GUARANTEED"

    def to_dict(self) -> dict:
        return {
            "lambda0": self.lambda0,
            "lambda1": list(self.lambda1),
            "max_lambda1": max(self.lambda1),
            "g0_estimate": self.g0_estimate,
            "g0_range": list(self.g0_range),
            "ginf_estimate": self.ginf_estimate,
            "ginf_range": list(self.ginf_range),
            "g0_below_lambda0": self.verdict(self.g0_ok),
            "ginf_above_max_lambda1": self.verdict(self.ginf_ok),
            "caveat": self.caveat,
            "notes": list(self.notes),
        }


def hump_eigenvalues(w: WeightFunction, d: Decomposition, rel_tol: float = 1e-10):
    """``(lambda0, [lambda1_i])`` for the weight ``a+`` on I and on each hump."""
    plus = w.plus
    bps = d.breakpoints
    lam0 = first_eigenvalue(EigenProblem(plus, 0.0, w.length, bps), rel_tol)
    lam1 = [first_eigenvalue(EigenProblem(plus, s, t, bps), rel_tol) for s, t in d.humps]
    return lam0, lam1


def check_hypotheses(
    w: WeightFunction,
    d: Decomposition,
    g: Callable[[float], float],
    s_lo: float = 1e-10,
    s_hi: float = 1e8,
    samples: int = 256,
    rel_tol: float = 1e-10,
) -> HypothesisReport:
    """Compare ``g(s)/s`` near 0 and near infinity with the hump eigenvalues.

    ``g0`` is estimated as the max of ``g(s)/s`` over ``[s_lo, 1e3 s_lo]`` and
    ``g_inf`` as the min over ``[s_hi/1e3, s_hi]``, both on geometric grids.
    """
    if not 0 < s_lo < s_hi:
        raise ValueError("need 0 < s_lo < s_hi")
    g0 = g(0.0)
    if g0 != 0.0:
        raise ValueError(f"g(0) must be 0, got {g0!r}")
    probe = np.concatenate([np.geomspace(s_lo, s_hi, 4 * samples), np.linspace(0, s_hi, samples)[1:]])
    for s in probe:
        try:
            v = g(float(s))
        except DomainError as exc:
            raise ValueError(f"g is undefined at s={s:.6g}: {exc}") from None
        if not v > 0:
            raise ValueError(f"g must be positive on (0, s_hi]; g({s:.6g}) = {v!r}")

    lo_grid = np.geomspace(s_lo, s_lo * 1e3, samples)
    hi_grid = np.geomspace(s_hi / 1e3, s_hi, samples)
    g0_est = max(g(float(s)) / float(s) for s in lo_grid)
    ginf_est = min(g(float(s)) / float(s) for s in hi_grid)

    lam0, lam1 = hump_eigenvalues(w, d, rel_tol)
    notes = []
    if lam0 > min(lam1) * (1 + 1e-8):
        notes.append("lambda0 exceeds a hump eigenvalue; domain monotonicity violated numerically")
    return HypothesisReport(
        lambda0=lam0,
        lambda1=lam1,
        g0_estimate=g0_est,
        ginf_estimate=ginf_est,
        g0_range=(s_lo, s_lo * 1e3),
        ginf_range=(s_hi / 1e3, s_hi),
        g0_ok=g0_est < lam0,
        ginf_ok=ginf_est > max(lam1),
        notes=notes,
    )
