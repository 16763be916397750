"""Adaptive Dormand-Prince 5(4) stepping for small ODE systems.

States are plain tuples of floats; the systems integrated here have one or
two components, where per-call numpy overhead would dominate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

# Dormand & Prince (1980) tableau.
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# 5th-order weights minus embedded 4th-order weights
E1 = 71 / 57600
E3 = -71 / 16695
E4 = 71 / 1920
E5 = -17253 / 339200
E6 = 22 / 525
E7 = -1 / 40

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class StepSizeUnderflow(RuntimeError):
    """The controller asked for a step below the allowed minimum."""

    def __init__(self, x: float, h: float):
        super().__init__(f"step size {h:.3e} underflow at x={x!r}")
        self.x = x
        self.h = h


@dataclass
class Stats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0


@dataclass
class RKResult:
    """Outcome of :func:`integrate`.

    ``xs``/``ys`` hold the state at every requested output point reached.
    If ``escaped`` is set, integration stopped at ``x_end`` because
    ``stop(x, y)`` returned a reason.
    """

    x_end: float
    y_end: tuple
    xs: list = field(default_factory=list)
    ys: list = field(default_factory=list)
    escaped: Optional[str] = None
    stats: Stats = field(default_factory=Stats)


def _error_norm(y0, y1, err, rtol, atol):
    s = 0.0
    for a, b, e in zip(y0, y1, err):
        sc = atol + rtol * max(abs(a), abs(b))
        s += (e / sc) ** 2
    return math.sqrt(s / len(err))


def integrate(
    f: Callable[[float, tuple], tuple],
    x0: float,
    y0: Sequence[float],
    x1: float,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    breakpoints: Sequence[float] = (),
    outputs: Sequence[float] = (),
    stop: Optional[Callable[[float, tuple], Optional[str]]] = None,
    h0: Optional[float] = None,
    hmin_rel: float = 1e-14,
) -> RKResult:
    """Integrate ``y' = f(x, y)`` from ``x0`` to ``x1 > x0``.

    Steps never cross a ``breakpoint`` (the right-hand side may have a kink
    there) and land exactly on every ``outputs`` point, so sampled values are
    integrator nodes rather than interpolants.  The method restarts its FSAL
    stage at each breakpoint.
    """
    if not x1 > x0:
        raise ValueError("need x1 > x0")
    span = x1 - x0
    hmin = hmin_rel * span
    stats = Stats()
    y = tuple(float(v) for v in y0)
    x = x0
    out = sorted(float(t) for t in outputs if x0 <= t <= x1)
    stops = sorted(set([float(b) for b in breakpoints if x0 < b < x1] + [x1]))
    res = RKResult(x_end=x0, y_end=y, stats=stats)

    oi = 0
    while oi < len(out) and out[oi] <= x:
        res.xs.append(out[oi])
        res.ys.append(y)
        oi += 1

    if stop is not None:
        reason = stop(x, y)
        if reason:
            res.escaped = reason
            return res

    h = h0 if h0 is not None else min(span, 1e-2 * span)
    n = len(y)
    for seg_end in stops:
        k1 = f(x, y)
        stats.evaluations += 1
        while x < seg_end:
            target = seg_end
            if oi < len(out) and out[oi] < target:
                target = out[oi]
            last = False
            if x + h >= target or target - (x + h) < 1e-12 * span:
                hh = target - x
                last = True
            else:
                hh = h
            k2 = f(x + C2 * hh, tuple(y[i] + hh * A21 * k1[i] for i in range(n)))
            k3 = f(x + C3 * hh, tuple(y[i] + hh * (A31 * k1[i] + A32 * k2[i]) for i in range(n)))
            k4 = f(
                x + C4 * hh,
                tuple(y[i] + hh * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]) for i in range(n)),
            )
            k5 = f(
                x + C5 * hh,
                tuple(
                    y[i] + hh * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                    for i in range(n)
                ),
            )
            xn = target if last else x + hh
            k6 = f(
                xn,
                tuple(
                    y[i]
                    + hh * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
                    for i in range(n)
                ),
            )
            yn = tuple(
                y[i] + hh * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
                for i in range(n)
            )
            k7 = f(xn, yn)
            stats.evaluations += 6
            err = tuple(
                hh * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                for i in range(n)
            )
            en = _error_norm(y, yn, err, rtol, atol)
            if not math.isfinite(en):
                en = 1e10
            if en <= 1.0:
                stats.accepted += 1
                x, y, k1 = xn, yn, k7
                fac = MAX_FACTOR if en == 0.0 else min(MAX_FACTOR, SAFETY * en ** -0.2)
                if not last:
                    h = hh * fac
                else:
                    h = max(h, hh * fac) if hh < h else hh * fac
                while oi < len(out) and out[oi] <= x:
                    res.xs.append(out[oi])
                    res.ys.append(y)
                    oi += 1
                if stop is not None:
                    reason = stop(x, y)
                    if reason:
                        res.x_end, res.y_end, res.escaped = x, y, reason
                        return res
            else:
                stats.rejected += 1
                h = hh * max(MIN_FACTOR, SAFETY * en ** -0.2)
                if h < hmin:
                    raise StepSizeUnderflow(x, h)
        x = seg_end
    res.x_end, res.y_end = x, y
    return res
