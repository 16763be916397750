"""Sign-changing weights a_mu = a+ - mu a- and their hump decomposition."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .expr import Expr

__all__ = [
    "Decomposition",
    "DecompositionError",
    "ValidationReport",
    "WeightFunction",
    "decompose",
    "eval_weight",
    "validate_decomposition",
]

DEFAULT_SIGN_TOL = 1e-12
DEFAULT_GRID = 4096


class DecompositionError(ValueError):
    pass


@dataclass(frozen=True)
class WeightFunction:
    """The weight ``a_mu(x) = max(a, 0) - mu * max(-a, 0)`` on ``[0, length]``.

    ``base`` is any real callable of one variable, usually an :class:`Expr`.
    """

    base: Callable[[float], float]
    mu: float = 1.0
    length: float = 1.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"domain length must be positive, got {self.length!r}")
        if not self.mu >= 0:
            raise ValueError(f"mu must be non-negative, got {self.mu!r}")

    def with_mu(self, mu: float) -> "WeightFunction":
        return WeightFunction(self.base, mu, self.length)

    def a(self, x: float) -> float:
        return self.base(x)

    def plus(self, x: float) -> float:
        v = self.base(x)
        return v if v > 0.0 else 0.0

    def minus(self, x: float) -> float:
        v = self.base(x)
        return -v if v < 0.0 else 0.0

    def __call__(self, x: float) -> float:
        v = self.base(x)
        return max(v, 0.0) - self.mu * max(-v, 0.0)

    def fast(self) -> Callable[[float], float]:
        """Unchecked evaluator for inner loops."""
        base = self.base._fn if isinstance(self.base, Expr) else self.base
        mu = self.mu

        def a_mu(x):
            v = base(x)
            return max(v, 0.0) - mu * max(-v, 0.0)

        return a_mu

    def sample(self, xs, which: str = "a") -> np.ndarray:
        fn = {"a": self.a, "plus": self.plus, "minus": self.minus, "mu": self}[which]
        return np.array([fn(float(x)) for x in xs])


def eval_weight(w: WeightFunction, x: float) -> float:
    if not 0.0 <= x <= w.length:
        raise ValueError(f"x={x!r} outside [0, {w.length!r}]")
    return w(x)


@dataclass(frozen=True)
class Decomposition:
    """Humps ``I_i = [sigma_i, tau_i]`` where a >= 0, separated by gaps where a <= 0."""

    sigma: tuple
    tau: tuple
    length: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))
        object.__setattr__(self, "tau", tuple(float(t) for t in self.tau))
        if len(self.sigma) != len(self.tau) or not self.sigma:
            raise DecompositionError("sigma and tau must be non-empty and of equal length")
        pts = [p for pair in zip(self.sigma, self.tau) for p in pair]
        if pts[0] < 0 or pts[-1] > self.length:
            raise DecompositionError("decomposition points must lie in [0, L]")
        if any(not b > a for a, b in zip(pts, pts[1:])):
            raise DecompositionError(f"points must interleave strictly: {pts}")

    @property
    def n(self) -> int:
        return len(self.sigma)

    @property
    def humps(self) -> list:
        return list(zip(self.sigma, self.tau))

    @property
    def gaps(self) -> list:
        """Closed gaps between humps, including leading/trailing ones if non-empty."""
        edges = [0.0] + [p for pair in zip(self.sigma, self.tau) for p in pair] + [self.length]
        out = []
        for k in range(0, len(edges), 2):
            lo, hi = edges[k], edges[k + 1]
            if hi > lo:
                out.append((lo, hi))
        return out

    @property
    def breakpoints(self) -> tuple:
        return tuple(p for pair in zip(self.sigma, self.tau) for p in pair if 0.0 < p < self.length)

    def hump_of(self, x: float) -> Optional[int]:
        for i, (s, t) in enumerate(self.humps):
            if s <= x <= t:
                return i
        return None


def _bisect_predicate(pred, lo, hi, width=1e-12):
    """Shrink [lo, hi] with pred(lo) false and pred(hi) true to ``width``."""
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def decompose(
    w: WeightFunction, sign_tol: float = DEFAULT_SIGN_TOL, grid: int = DEFAULT_GRID
) -> Decomposition:
    """Locate the humps of ``w.base`` by sampling and bisection.

    Samples with ``|a| <= sign_tol`` count as zero.  A maximal run of
    non-negative samples is a hump only if it contains a positive sample;
    zero stretches are thereby merged into the adjacent hump, and zero runs
    with no positive part fall into the surrounding gap.
    """
    L = w.length
    xs = np.linspace(0.0, L, grid + 1)
    vals = w.sample(xs)
    if not np.all(np.isfinite(vals)):
        raise DecompositionError("weight is not finite on the sampling grid")
    neg = vals < -sign_tol
    pos = vals > sign_tol

    runs = []  # (first, last) sample indices of non-negative runs with a positive sample
    k = 0
    while k <= grid:
        if neg[k]:
            k += 1
            continue
        j = k
        while j + 1 <= grid and not neg[j + 1]:
            j += 1
        if pos[k : j + 1].any():
            runs.append((k, j))
        k = j + 1
    if not runs:
        raise DecompositionError("no positivity hump found at this resolution")

    def negative(x):
        return w.a(x) < -sign_tol

    sigma, tau = [], []
    for first, last in runs:
        if first == 0:
            s = 0.0
        else:
            # a < -tol at xs[first-1], a >= -tol at xs[first]
            _, s = _bisect_predicate(lambda x: not negative(x), xs[first - 1], xs[first])
        if last == grid:
            t = L
        else:
            t, _ = _bisect_predicate(negative, xs[last], xs[last + 1])
        sigma.append(s)
        tau.append(t)
    d = Decomposition(tuple(sigma), tuple(tau), L)
    report = validate_decomposition(w, d, sign_tol, grid=grid)
    if not report.ok:
        raise DecompositionError(f"decomposition invariant violated: {report.reason}")
    return d


@dataclass
class ValidationReport:
    ok: bool
    reason: str = ""
    x: Optional[float] = None
    checks: list = field(default_factory=list)


def _samples(lo, hi, L, grid, interior):
    m = max(64, int(math.ceil(grid * (hi - lo) / L)))
    xs = np.linspace(lo, hi, m + 1)
    return xs[1:-1] if interior else xs


def validate_decomposition(
    w: WeightFunction,
    d: Decomposition,
    sign_tol: float = DEFAULT_SIGN_TOL,
    grid: int = DEFAULT_GRID,
) -> ValidationReport:
    """Check the hump/gap sign conditions on dense samples.

    Humps are sampled including their endpoints, gaps on their open
    interior only.  Returns the first failing sample, scanning left to right.
    """
    L = w.length
    if abs(d.length - L) > 1e-12 * L:
        return ValidationReport(False, f"decomposition length {d.length} != weight length {L}")
    checks = []
    intervals = [("hump", lo, hi, i) for i, (lo, hi) in enumerate(d.humps)]
    intervals += [("gap", lo, hi, None) for lo, hi in d.gaps]
    intervals.sort(key=lambda item: item[1])
    for kind, lo, hi, idx in intervals:
        if kind == "hump":
            xs = _samples(lo, hi, L, grid, interior=False)
            vals = w.sample(xs)
            bad = np.nonzero(vals < -sign_tol)[0]
            if bad.size:
                x = float(xs[bad[0]])
                return ValidationReport(
                    False, f"a({x:.6g}) = {vals[bad[0]]:.3g} < 0 on hump {idx + 1}", x, checks
                )
            plus = np.maximum(vals, 0.0)
            if not np.trapezoid(plus, xs) > 0:
                return ValidationReport(False, f"a+ vanishes on hump {idx + 1}", lo, checks)
            checks.append(f"hump {idx + 1} [{lo:.12g}, {hi:.12g}] ok")
        else:
            xs = _samples(lo, hi, L, grid, interior=False)
            vals = w.sample(xs)
            inner = slice(1, len(xs) - 1)
            bad = np.nonzero(vals[inner] > sign_tol)[0]
            if bad.size:
                x = float(xs[1 + bad[0]])
                return ValidationReport(
                    False, f"a({x:.6g}) = {vals[1 + bad[0]]:.3g} > 0 in gap", x, checks
                )
            minus = np.maximum(-vals, 0.0)
            left = np.concatenate([[0.0], np.cumsum(0.5 * (minus[1:] + minus[:-1]) * np.diff(xs))])
            right = left[-1] - left
            # running integrals from a hump endpoint must be positive in the open gap
            if lo > 0.0 and not np.all(left[inner] > 0):
                x = float(xs[1 + np.argmin(left[inner] > 0)])
                return ValidationReport(False, f"a- vanishes right of {lo:.12g}", x, checks)
            if hi < L and not np.all(right[inner] > 0):
                x = float(xs[1 + np.nonzero(~(right[inner] > 0))[0][0]])
                return ValidationReport(False, f"a- vanishes left of {hi:.12g}", x, checks)
            checks.append(f"gap [{lo:.12g}, {hi:.12g}] ok")
    return ValidationReport(True, "", None, checks)
