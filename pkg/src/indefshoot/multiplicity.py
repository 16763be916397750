"""Signature classification and multiplicity experiments.

A positive solution ``u`` is assigned the set of humps ``I_i`` on which its
maximum exceeds a small threshold ``r``.  Solutions whose maxima sit between
``r`` and a large ``R`` on exactly the humps in ``S`` live in the box
``Lambda^S``, whose Leray-Schauder degree is ``(-1)^#S``; every non-empty
``S`` therefore carries at least one solution once the negative part of the
weight is strong enough, giving ``2^n - 1`` solutions in total.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .eigen import HypothesisReport, check_hypotheses, hump_eigenvalues
from .expr import Expr
from .shooting import Problem, ShootingOptions, Solution, Trajectory, isolate_roots
from .weights import Decomposition

__all__ = [
    "AMBIGUITY_TOL",
    "MultiplicityReport",
    "NoAdmissibleR",
    "Signature",
    "SweepReport",
    "choose_r",
    "degree_bookkeeping_check",
    "nonempty_subsets",
    "predicted_degree",
    "signature_of",
    "solve_all",
    "sweep_mu",
]

AMBIGUITY_TOL = 1e-12
R_MIN, R_MAX = 1e-10, 1e2


class NoAdmissibleR(ValueError):
    pass


def choose_r(
    g: Callable[[float], float],
    lambda0: float,
    delta: float,
    r_grid: int = 241,
    samples: int = 1024,
) -> float:
    """Largest grid ``r`` with ``g(s)/s <= lambda0 - delta`` for all sampled ``0 < s <= r``.

    Candidates form a geometric grid of ``r_grid`` points on ``[1e-10, 1e2]``;
    each is tested on ``samples`` uniform points of ``(0, r]``.
    """
    if not 0 < delta < lambda0:
        raise ValueError("need 0 < delta < lambda0")
    bound = lambda0 - delta
    fn = g._fn if isinstance(g, Expr) else g
    frac = np.arange(1, samples + 1) / samples
    for r in np.geomspace(R_MIN, R_MAX, r_grid)[::-1]:
        r = float(r)
        if all(fn(s) / s <= bound for s in (r * frac).tolist()):
            return r
    raise NoAdmissibleR(f"g(s)/s exceeds {bound:.6g} arbitrarily close to 0 on the grid")


@dataclass(frozen=True)
class Signature:
    """Humps (1-based) on which ``max u > r``."""

    indices: frozenset
    maxima: tuple
    r: float
    ambiguous: bool = False

    def __iter__(self):
        return iter(sorted(self.indices))

    def __len__(self):
        return len(self.indices)

    def label(self) -> str:
        return "{" + ",".join(str(i) for i in sorted(self.indices)) + "}"


def signature_of(sol, d: Decomposition, r: float) -> Signature:
    """Classify a solution (or trajectory, or ``(x, u)`` pair) against threshold ``r``."""
    if isinstance(sol, Solution):
        x, u = sol.trajectory.x, sol.trajectory.u
    elif isinstance(sol, Trajectory):
        x, u = sol.x, sol.u
    else:
        x, u = (np.asarray(v, dtype=float) for v in sol)
    maxima = []
    idx = set()
    ambiguous = False
    for i, (s, t) in enumerate(d.humps, start=1):
        sel = (x >= s) & (x <= t)
        m = float(u[sel].max()) if sel.any() else -math.inf
        maxima.append(m)
        if m > r:
            idx.add(i)
        if abs(m - r) <= AMBIGUITY_TOL:
            ambiguous = True
    return Signature(frozenset(idx), tuple(maxima), r, ambiguous)


def predicted_degree(subset: Iterable[int]) -> int:
    return -1 if len(set(subset)) % 2 else 1


def _popcount(k: int) -> int:
    return bin(k).count("1")


def degree_bookkeeping_check(n: int) -> bool:
    """Verify the subset-parity identities behind the box degrees, exactly.

    For masks ``J`` over ``{1..n}``: the alternating sum over subsets of a
    non-empty ``J`` vanishes, and solving
    ``deg(Omega^J) = sum_{K subset J} deg(Lambda^K)`` with
    ``deg(Omega^J) = [J empty]`` recovers ``deg(Lambda^J) = (-1)^#J``.
    """
    if not 1 <= n <= 20:
        raise ValueError("n must be in 1..20")
    if n > 12:
        # masks of equal size behave identically; check one per cardinality
        for m in range(n + 1):
            alt = sum((-1) ** k * math.comb(m, k) for k in range(m + 1))
            if alt != (1 if m == 0 else 0):
                return False
        return degree_bookkeeping_check(12)
    full = 1 << n
    lam = [0] * full
    for J in sorted(range(full), key=_popcount):
        alt = 0
        proper = 0
        K = J
        while True:
            alt += -1 if _popcount(K) % 2 else 1
            if K != J:
                proper += lam[K]
            if K == 0:
                break
            K = (K - 1) & J
        omega = 1 if J == 0 else 0
        if alt != omega:
            return False
        lam[J] = omega - proper
        if lam[J] != predicted_degree(i for i in range(n) if J >> i & 1):
            return False
    return sum(lam) == 0


def nonempty_subsets(n: int) -> list:
    out = []
    for k in range(1, n + 1):
        out.extend(frozenset(c) for c in itertools.combinations(range(1, n + 1), k))
    return out


@dataclass
class MultiplicityReport:
    mu: float
    n: int
    solutions: list
    signatures: list
    rejected: list
    r_used: float
    R_used: Optional[float]
    coverage: dict
    hypotheses: Optional[HypothesisReport] = None
    annotations: list = field(default_factory=list)
    R_mode: str = "empirical: R = 2 x largest observed sup-norm"

    @property
    def count(self) -> int:
        return len(self.solutions)

    @property
    def full_coverage(self) -> bool:
        return all(self.coverage[k] for k in self.coverage)

    @property
    def predicted(self) -> int:
        return 2**self.n - 1

    @property
    def prediction_met(self) -> bool:
        return self.count >= self.predicted and self.full_coverage

    def signature_labels(self) -> list:
        return [s.label() for s in self.signatures]

    def to_dict(self) -> dict:
        sols = []
        for sol, sig in zip(self.solutions, self.signatures):
            item = sol.to_dict()
            item["signature"] = sorted(sig.indices)
            item["hump_maxima"] = list(sig.maxima)
            item["ambiguous"] = sig.ambiguous
            item["predicted_degree"] = predicted_degree(sig.indices)
            sols.append(item)
        return {
            "mu": self.mu,
            "n": self.n,
            "count": self.count,
            "predicted_minimum": self.predicted,
            "prediction_met": self.prediction_met,
            "r_used": self.r_used,
            "R_used": self.R_used,
            "R_mode": self.R_mode,
            "coverage": {
                _label(k): [s for s in v] for k, v in sorted(self.coverage.items(), key=_subset_key)
            },
            "solutions": sols,
            "rejected": [r.to_dict() for r in self.rejected],
            "hypotheses": self.hypotheses.to_dict() if self.hypotheses else None,
            "annotations": list(self.annotations),
        }


def _label(subset) -> str:
    return "{" + ",".join(str(i) for i in sorted(subset)) + "}"


def _subset_key(item):
    k = item[0]
    return (len(k), sorted(k))


def solve_all(
    p: Problem,
    slopes: Sequence = (0.0, 5.0, 500),
    r: Optional[float] = None,
    R_mode: str = "empirical",
    opts: ShootingOptions = ShootingOptions(),
    delta_fraction: float = 0.1,
    hypotheses: Optional[HypothesisReport] = None,
    check: bool = True,
    s_range: tuple = (1e-10, 1e8),
    r_grid: int = 241,
) -> MultiplicityReport:
    """Find, validate and classify every positive solution reachable from ``slopes``.

    ``slopes`` is ``(d_min, d_max, grid)``.  When ``r`` is None it is chosen
    by :func:`choose_r` with ``delta = delta_fraction * lambda0``.
    """
    if R_mode != "empirical":
        raise ValueError(f"unknown R_mode {R_mode!r}")
    d_min, d_max, grid = slopes
    annotations = []
    if check and hypotheses is None:
        hypotheses = check_hypotheses(p.w, p.d, p.g, *s_range)
    if r is None:
        lam0 = hypotheses.lambda0 if hypotheses else hump_eigenvalues(p.w, p.d)[0]
        r = choose_r(p.g, lam0, delta_fraction * lam0, r_grid)
    found = isolate_roots(p, d_min, d_max, int(grid), opts=opts)
    sigs = []
    coverage = {k: [] for k in nonempty_subsets(p.d.n)}
    for sol in found.solutions:
        sig = signature_of(sol, p.d, r)
        sol.signature = sig.indices
        sol.ambiguous = sig.ambiguous
        if sig.ambiguous:
            annotations.append(f"slope {sol.slope:.17g}: hump maximum within {AMBIGUITY_TOL:g} of r")
        if not sig.indices:
            annotations.append(
                f"slope {sol.slope:.17g}: empty signature for a validated solution (inconsistent; r too large?)"
            )
        else:
            coverage[sig.indices].append(sol.slope)
        sigs.append(sig)
    R_used = 2.0 * max(s.sup_norm for s in found.solutions) if found.solutions else None
    if hypotheses is not None and not hypotheses.guaranteed:
        failed = []
        if not hypotheses.g0_ok:
            failed.append("g0 < lambda0")
        if not hypotheses.ginf_ok:
            failed.append("g_inf > max lambda1_i")
        annotations.append("hypotheses not guaranteed: " + ", ".join(failed))
    return MultiplicityReport(
        mu=p.w.mu,
        n=p.d.n,
        solutions=found.solutions,
        signatures=sigs,
        rejected=found.rejected,
        r_used=r,
        R_used=R_used,
        coverage=coverage,
        hypotheses=hypotheses,
        annotations=annotations,
    )


@dataclass
class SweepReport:
    reports: list

    @property
    def mu_hat(self) -> Optional[float]:
        """Smallest swept mu with full signature coverage (a grid value, not a bound)."""
        for rep in self.reports:
            if rep.full_coverage:
                return rep.mu
        return None

    def rows(self) -> list:
        out = []
        for rep in self.reports:
            out.append(
                {
                    "mu": rep.mu,
                    "count": rep.count,
                    "signatures": " ".join(rep.signature_labels()),
                    "slopes": " ".join(format(s.slope, ".17g") for s in rep.solutions),
                }
            )
        return out


def sweep_mu(
    p: Problem,
    mu_values: Sequence[float],
    slopes: Sequence = (0.0, 5.0, 500),
    opts: ShootingOptions = ShootingOptions(),
    r: Optional[float] = None,
    delta_fraction: float = 0.1,
    s_range: tuple = (1e-10, 1e8),
    r_grid: int = 241,
) -> SweepReport:
    """Run :func:`solve_all` for each mu.  ``r`` and the eigenvalues depend only on a+."""
    mus = [float(m) for m in mu_values]
    if any(m <= 0 for m in mus):
        raise ValueError("mu values must be positive")
    if mus != sorted(mus):
        raise ValueError("mu values must be sorted")
    hyp = check_hypotheses(p.w, p.d, p.g, *s_range)
    if r is None:
        r = choose_r(p.g, hyp.lambda0, delta_fraction * hyp.lambda0, r_grid)
    reports = [
        solve_all(p.with_mu(mu), slopes, r=r, opts=opts, hypotheses=hyp) for mu in mus
    ]
    return SweepReport(reports)
