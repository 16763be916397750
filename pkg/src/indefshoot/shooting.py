"""Shooting for positive solutions of u'' + a_mu(x) g(u) = 0, u(0) = u(L) = 0.

The nonlinearity is extended by zero to negative arguments, so the initial
value problem from ``(u, u')(0) = (0, d)`` is defined for every slope and
every non-negative solution of the extended problem solves the original one.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import rk
from .expr import Expr
from .weights import Decomposition, WeightFunction

__all__ = [
    "IsolationResult",
    "Problem",
    "ShootingOptions",
    "Solution",
    "Trajectory",
    "fd_second_derivative",
    "integrate",
    "isolate_roots",
    "shoot_value",
    "validate_solution",
]


@dataclass(frozen=True)
class ShootingOptions:
    rtol: float = 1e-10
    atol: float = 1e-12
    u_cap: float = 1e6
    points: int = 2001
    bc_tol: float = 1e-8
    curv_tol: float = 1e-6
    residual_tol: float = 1e-6
    slope_width: float = 1e-13
    dedup: float = 1e-9
    threads: int = 1

    def __post_init__(self):
        for name in ("rtol", "atol", "u_cap", "bc_tol", "curv_tol", "residual_tol", "slope_width"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.points < 5:
            raise ValueError("need at least 5 output points")

    def halved(self) -> "ShootingOptions":
        return replace(self, rtol=self.rtol / 2, atol=self.atol / 2)


@dataclass(frozen=True)
class Problem:
    """``u'' + a_mu(x) g~(u) = 0`` on ``[0, L]`` with ``g~(s) = g(max(s, 0))``-style extension."""

    w: WeightFunction
    d: Decomposition
    g: Callable[[float], float]
    breakpoints: tuple = ()

    def __post_init__(self):
        g0 = self.g(0.0)
        if g0 != 0.0:
            raise ValueError(f"g(0) must be 0 for the zero extension to be continuous, got {g0!r}")
        if abs(self.d.length - self.w.length) > 1e-12 * self.w.length:
            raise ValueError("decomposition and weight have different domains")
        extra = tuple(b for b in self.breakpoints if 0.0 < b < self.w.length)
        object.__setattr__(self, "breakpoints", tuple(sorted(set(self.d.breakpoints + extra))))

    @property
    def length(self) -> float:
        return self.w.length

    def with_mu(self, mu: float) -> "Problem":
        return Problem(self.w.with_mu(mu), self.d, self.g, self.breakpoints)

    def g_ext(self, s: float) -> float:
        return self.g(s) if s >= 0.0 else 0.0

    def rhs(self) -> Callable[[float, tuple], tuple]:
        a_mu = self.w.fast()
        g = self.g._fn if isinstance(self.g, Expr) else self.g

        def f(x, y):
            u = y[0]
            return (y[1], -a_mu(x) * g(u)) if u > 0.0 else (y[1], 0.0)

        return f

    def forcing(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """``a_mu(x) g~(u)`` sampled pointwise."""
        return np.array([self.w(float(xi)) * self.g_ext(float(ui)) for xi, ui in zip(x, u)])


@dataclass
class Trajectory:
    x: np.ndarray
    u: np.ndarray
    up: np.ndarray
    u_end: float
    up_end: float
    x_end: float
    escape: Optional[str] = None
    stats: rk.Stats = field(default_factory=rk.Stats)

    @property
    def escaped(self) -> bool:
        return self.escape is not None


def _stopper(u_cap):
    up_cap = 10.0 * u_cap

    def stop(x, y):
        if abs(y[0]) > u_cap:
            return "|u| exceeded u_cap"
        if abs(y[1]) > up_cap:
            return "|u'| exceeded 10 u_cap"
        if not (math.isfinite(y[0]) and math.isfinite(y[1])):
            return "non-finite state"
        return None

    return stop


def integrate(
    p: Problem,
    d: float,
    u_cap: Optional[float] = None,
    opts: ShootingOptions = ShootingOptions(),
    grid: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Integrate from ``(0, d)`` across ``[0, L]``.

    Samples land exactly on ``grid`` (default: ``opts.points`` uniform
    points).  Integration stops early once ``|u| > u_cap`` or
    ``|u'| > 10 u_cap``.
    """
    if not math.isfinite(d):
        raise ValueError("slope must be finite")
    u_cap = opts.u_cap if u_cap is None else u_cap
    L = p.length
    xs = np.linspace(0.0, L, opts.points) if grid is None else np.asarray(grid, dtype=float)
    if d == 0.0:
        zero = np.zeros_like(xs)
        return Trajectory(xs, zero, zero.copy(), 0.0, 0.0, L)
    res = rk.integrate(
        p.rhs(),
        0.0,
        (0.0, float(d)),
        L,
        rtol=opts.rtol,
        atol=opts.atol,
        breakpoints=p.breakpoints,
        outputs=xs,
        stop=_stopper(u_cap),
    )
    ys = np.array(res.ys, dtype=float).reshape(-1, 2)
    return Trajectory(
        np.array(res.xs, dtype=float),
        ys[:, 0],
        ys[:, 1],
        res.y_end[0],
        res.y_end[1],
        res.x_end,
        res.escaped,
        res.stats,
    )


def shoot_value(
    p: Problem, d: float, u_cap: Optional[float] = None, opts: ShootingOptions = ShootingOptions()
) -> float:
    """``u(L; d)``, or ``sign(u) * u_cap`` if the trajectory escapes first."""
    if d < 0:
        raise ValueError("slope must be non-negative")
    if d == 0.0:
        return 0.0
    u_cap = opts.u_cap if u_cap is None else u_cap
    res = rk.integrate(
        p.rhs(),
        0.0,
        (0.0, float(d)),
        p.length,
        rtol=opts.rtol,
        atol=opts.atol,
        breakpoints=p.breakpoints,
        stop=_stopper(u_cap),
    )
    if res.escaped:
        return math.copysign(u_cap, res.y_end[0])
    return res.y_end[0]


# -- finite differences -----------------------------------------------------


def _fornberg(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Weights for the ``m``-th derivative at ``z`` from nodes ``x`` (Fornberg 1988)."""
    n = len(x) - 1
    c = np.zeros((n + 1, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n + 1):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def fd_second_derivative(x: np.ndarray, f: np.ndarray, breakpoints: Sequence[float] = ()):
    """Fourth-order second derivative on a grid, never differencing across a breakpoint.

    Uses the centred 5-point stencil where it fits inside one smooth piece
    and a 6-point one-sided window otherwise.  Returns ``(values, mask)``;
    ``mask`` is False where no admissible window exists (pieces with fewer
    than six nodes) and at the two end nodes.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    n = len(x)
    edges = [x[0]] + sorted(b for b in breakpoints if x[0] < b < x[-1]) + [x[-1]]
    out = np.zeros(n)
    mask = np.zeros(n, dtype=bool)
    piece_lo = np.searchsorted(x, edges[:-1], side="left")
    piece_hi = np.searchsorted(x, edges[1:], side="right") - 1
    cache = {}
    uniform = _is_uniform(x)
    for lo, hi in zip(piece_lo, piece_hi):
        if hi - lo + 1 < 6:
            continue
        for j in range(max(lo, 1), min(hi, n - 2) + 1):
            if j - 2 >= lo and j + 2 <= hi:
                win = range(j - 2, j + 3)
            else:
                start = min(max(j - 2, lo), hi - 5)
                win = range(start, start + 6)
            idx = np.fromiter(win, dtype=int)
            key = (tuple(np.round((x[idx] - x[j]) / (x[1] - x[0]), 9)),)
            wts = cache.get(key)
            if wts is None:
                wts = _fornberg(x[j], x[idx], 2)
                if uniform:
                    cache[key] = wts
            out[j] = wts @ f[idx]
            mask[j] = True
    return out, mask


def _is_uniform(x):
    dx = np.diff(x)
    return np.allclose(dx, dx[0], rtol=1e-9, atol=0)


# -- solutions --------------------------------------------------------------


@dataclass
class Solution:
    slope: float
    trajectory: Trajectory
    bc_residual: float
    positivity_margin: float
    up_start: float
    up_end: float
    max_residual: float
    sup_norm: float
    signature: Optional[frozenset] = None
    ambiguous: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "u_L": self.trajectory.u_end,
            "bc_residual": self.bc_residual,
            "positivity_margin": self.positivity_margin,
            "u_prime_0": self.up_start,
            "u_prime_L": self.up_end,
            "max_ode_residual": self.max_residual,
            "sup_norm": self.sup_norm,
            "signature": sorted(self.signature) if self.signature is not None else None,
            "ambiguous": self.ambiguous,
            "notes": list(self.notes),
        }


@dataclass
class Rejected:
    slope: float
    reasons: list

    def to_dict(self):
        return {"slope": self.slope, "reasons": list(self.reasons)}


def _curvature_violations(p: Problem, tr: Trajectory, curv_tol: float) -> list:
    x, u = tr.x, tr.u
    dd = np.zeros_like(u)
    # three-point second difference, valid on nonuniform grids
    hl = x[1:-1] - x[:-2]
    hr = x[2:] - x[1:-1]
    dd[1:-1] = 2.0 * (hl * u[2:] - (hl + hr) * u[1:-1] + hr * u[:-2]) / (hl * hr * (hl + hr))
    problems = []
    for i, (s, t) in enumerate(p.d.humps):
        inside = np.nonzero((x[:-2] >= s) & (x[2:] <= t))[0] + 1
        if inside.size and dd[inside].max() > curv_tol:
            j = inside[np.argmax(dd[inside])]
            problems.append(f"not concave on hump {i + 1} near x={x[j]:.6g} (u''~{dd[j]:.3g})")
    for s, t in p.d.gaps:
        inside = np.nonzero((x[:-2] >= s) & (x[2:] <= t) & (u[1:-1] > 0))[0] + 1
        if inside.size and dd[inside].min() < -curv_tol:
            j = inside[np.argmin(dd[inside])]
            problems.append(f"not convex on gap near x={x[j]:.6g} (u''~{dd[j]:.3g})")
    return problems


def ode_residual(p: Problem, tr: Trajectory) -> float:
    """max |u'' + a_mu g(u)| / (1 + |a_mu g(u)|) over admissible interior nodes."""
    upp, mask = fd_second_derivative(tr.x, tr.u, p.breakpoints)
    force = p.forcing(tr.x, tr.u)
    r = np.abs(upp + force) / (1.0 + np.abs(force))
    return float(r[mask].max()) if mask.any() else math.nan


def validate_solution(
    p: Problem, d: float, opts: ShootingOptions = ShootingOptions()
) -> tuple[Optional[Solution], list]:
    """Re-integrate from slope ``d`` on the output grid and check every solution property.

    Returns ``(solution, [])`` on success or ``(None, reasons)``.
    """
    tr = integrate(p, d, opts=opts)
    if tr.escaped:
        return None, [f"trajectory escaped at x={tr.x_end:.6g}: {tr.escape}"]
    reasons = []
    bc = abs(tr.u_end)
    if not bc <= opts.bc_tol:
        reasons.append(f"|u(L)| = {bc:.3g} > bc_tol")
    interior = tr.u[1:-1]
    margin = float(interior.min())
    if not margin > 0:
        j = 1 + int(np.argmin(interior))
        reasons.append(f"not positive: u({tr.x[j]:.6g}) = {margin:.3g}")
    if not d > 0:
        reasons.append("u'(0) <= 0")
    if not tr.up_end < 0:
        reasons.append(f"u'(L) = {tr.up_end:.3g} is not negative")
    if not reasons:
        reasons.extend(_curvature_violations(p, tr, opts.curv_tol))
    resid = ode_residual(p, tr)
    if not reasons and not resid <= opts.residual_tol:
        reasons.append(f"ODE residual {resid:.3g} > {opts.residual_tol:g}")
    if reasons:
        return None, reasons
    sol = Solution(
        slope=float(d),
        trajectory=tr,
        bc_residual=bc,
        positivity_margin=margin,
        up_start=float(tr.up[0]),
        up_end=float(tr.up_end),
        max_residual=resid,
        sup_norm=float(tr.u.max()),
    )
    return sol, []


@dataclass
class IsolationResult:
    solutions: list
    rejected: list
    slopes: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    @property
    def sign_changes(self) -> int:
        v = self.values[self.values != 0]
        return int(np.sum(np.sign(v[1:]) != np.sign(v[:-1])))


def slope_grid(d_min: float, d_max: float, grid: int) -> np.ndarray:
    """``grid`` uniform steps from ``d_min`` to ``d_max``; the trivial slope 0 is dropped."""
    if not 0 <= d_min < d_max:
        raise ValueError("need 0 <= d_min < d_max")
    if grid < 2:
        raise ValueError("grid must be at least 2")
    ds = d_min + (d_max - d_min) * np.arange(grid + 1) / grid
    ds[-1] = d_max
    return ds[ds > 0]


def _bisect(fn, lo, flo, hi, fhi, width, ftol):
    best = (abs(flo), lo) if abs(flo) <= abs(fhi) else (abs(fhi), hi)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = fn(mid)
        if abs(fm) < best[0]:
            best = (abs(fm), mid)
        if fm == 0.0 or abs(fm) <= ftol:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return best[1]


def isolate_roots(
    p: Problem,
    d_min: float,
    d_max: float,
    grid: int,
    bc_tol: Optional[float] = None,
    opts: ShootingOptions = ShootingOptions(),
) -> IsolationResult:
    """Scan ``shoot_value`` on a uniform slope grid and refine every sign change.

    Brackets are bisected until narrower than ``opts.slope_width`` or until
    ``|u(L)|`` is below a hundredth of ``bc_tol``; each candidate is then
    validated on the output grid.  Only sign information is used, so
    tangential (even-order) zeros of the shooting map are not detected.
    """
    if bc_tol is not None:
        opts = replace(opts, bc_tol=bc_tol)
    ds = slope_grid(d_min, d_max, grid)

    def fn(d):
        return shoot_value(p, d, opts=opts)

    if opts.threads > 1:
        with ThreadPoolExecutor(opts.threads) as pool:
            vals = np.array(list(pool.map(fn, ds)))
    else:
        vals = np.array([fn(d) for d in ds])

    candidates = []
    for k in range(len(ds)):
        if vals[k] == 0.0:
            candidates.append(float(ds[k]))
        elif k + 1 < len(ds) and vals[k + 1] != 0.0 and (vals[k] < 0) != (vals[k + 1] < 0):
            candidates.append(
                _bisect(fn, ds[k], vals[k], ds[k + 1], vals[k + 1], opts.slope_width, 1e-2 * opts.bc_tol)
            )
    roots = []
    for c in sorted(candidates):
        if not roots or c - roots[-1] > opts.dedup:
            roots.append(c)

    solutions, rejected = [], []
    for d in roots:
        sol, reasons = validate_solution(p, d, opts)
        if sol is None:
            rejected.append(Rejected(d, reasons))
        else:
            solutions.append(sol)
    return IsolationResult(solutions, rejected, ds, vals)
