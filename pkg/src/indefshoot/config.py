"""Flat YAML configuration: one ``key: value`` per line, no nesting.

Example::

    length: 1.0
    weight: sin(3*pi*x)
    mu: 0.5
    g: max(0, 100*s*atan(abs(s)))
    d_max: 5.0
    slope_grid: 500
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import yaml

from .expr import ExprError, parse


class ConfigError(ValueError):
    """Bad key, value or expression; ``key`` names the offending entry."""

    def __init__(self, key: Optional[str], message: str):
        super().__init__(f"config key {key!r}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class Key:
    kind: str  # float, int, str, floats, mu
    default: Any
    help: str
    positive: bool = False


KEYS = {
    "length": Key("float", 1.0, "domain length L of I = [0, L]", positive=True),
    "weight": Key("str", None, "weight a(x), expression in x"),
    "g": Key("str", None, "nonlinearity g(s), expression in s, g(0) = 0"),
    "mu": Key("mu", 1.0, "negative-part factor; a list for `sweep`"),
    "sigma": Key("floats", None, "explicit hump left endpoints (with tau)"),
    "tau": Key("floats", None, "explicit hump right endpoints (with sigma)"),
    "sign_tol": Key("float", 1e-12, "|a| below this counts as zero", positive=True),
    "decomp_grid": Key("int", 4096, "samples for hump detection", positive=True),
    "d_min": Key("float", 0.0, "smallest initial slope scanned"),
    "d_max": Key("float", 5.0, "largest initial slope scanned", positive=True),
    "slope_grid": Key("int", 500, "uniform slope steps in [d_min, d_max]", positive=True),
    "rtol": Key("float", 1e-10, "integrator relative tolerance", positive=True),
    "atol": Key("float", 1e-12, "integrator absolute tolerance", positive=True),
    "bc_tol": Key("float", 1e-8, "accepted |u(L)|", positive=True),
    "curv_tol": Key("float", 1e-6, "concavity/convexity slack", positive=True),
    "residual_tol": Key("float", 1e-6, "accepted relative ODE residual", positive=True),
    "points": Key("int", 2001, "output grid size per trajectory", positive=True),
    "u_cap": Key("float", 1e6, "escape threshold for |u|", positive=True),
    "r": Key("float", None, "explicit small threshold r (default: chosen from lambda0)", positive=True),
    "delta_fraction": Key("float", 0.1, "delta = fraction * lambda0 when choosing r", positive=True),
    "r_grid": Key("int", 241, "geometric candidates for r in [1e-10, 1e2]", positive=True),
    "s_lo": Key("float", 1e-10, "g0 estimated on [s_lo, 1e3 s_lo]", positive=True),
    "s_hi": Key("float", 1e8, "g_inf estimated on [s_hi/1e3, s_hi]", positive=True),
    "eig_rel_tol": Key("float", 1e-10, "eigenvalue bisection relative width", positive=True),
    "N": Key("int", None, "radial: space dimension (>= 2)", positive=True),
    "R1": Key("float", None, "radial: inner radius", positive=True),
    "R2": Key("float", None, "radial: outer radius", positive=True),
    "A": Key("str", None, "radial: weight A(r), expression in r"),
    "out_dir": Key("str", "out", "directory for reports and trajectories"),
    "threads": Key("int", 1, "worker threads for slope scans", positive=True),
}

EXPR_VARS = {"weight": "x", "g": "s", "A": "r"}


def keys_help() -> str:
    lines = ["config keys (flat YAML, `key: value`):"]
    for name, k in KEYS.items():
        default = "required" if k.default is None else repr(k.default)
        lines.append(f"  {name:<15} {k.help} [{default}]")
    return "\n".join(lines)


def _coerce(name: str, value: Any) -> Any:
    key = KEYS[name]
    if value is None:
        return None
    try:
        if key.kind == "float":
            if isinstance(value, bool):
                raise TypeError
            v = float(value)
            if not math.isfinite(v):
                raise ValueError("must be finite")
            if key.positive and not v > 0:
                raise ValueError("must be positive")
            return v
        if key.kind == "int":
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise TypeError
            v = int(float(value))
            if key.positive and v <= 0:
                raise ValueError("must be positive")
            return v
        if key.kind == "str":
            if not isinstance(value, (str, int, float)) or isinstance(value, bool):
                raise TypeError
            return str(value)
        if key.kind == "floats":
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return tuple(float(v) for v in value)
        if key.kind == "mu":
            vals = value if isinstance(value, (list, tuple)) else [value]
            out = []
            for v in vals:
                if isinstance(v, bool):
                    raise TypeError
                v = float(v)
                if not v > 0:
                    raise ValueError("mu values must be positive")
                out.append(v)
            if not out:
                raise ValueError("empty mu list")
            return tuple(out) if isinstance(value, (list, tuple)) else out[0]
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        detail = str(exc) or f"expected {key.kind}"
        raise ConfigError(name, f"{detail} (got {value!r})") from None
    raise AssertionError(key.kind)


class Config(dict):
    """Validated flat mapping; missing keys fall back to defaults."""

    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name) from None

    def expr(self, name: str):
        src = self.get(name)
        if src is None:
            raise ConfigError(name, "is required for this command")
        try:
            return parse(src, EXPR_VARS[name])
        except ExprError as exc:
            raise ConfigError(name, f"{exc} in {src!r}") from None

    def require(self, *names):
        for n in names:
            if self.get(n) is None:
                raise ConfigError(n, "is required for this command")


def build(raw: dict) -> Config:
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    cfg = Config({k: key.default for k, key in KEYS.items()})
    for k, v in raw.items():
        cfg[k] = _coerce(k, v)
    if not cfg["d_min"] >= 0 or not cfg["d_min"] < cfg["d_max"]:
        raise ConfigError("d_min", "need 0 <= d_min < d_max")
    if (cfg["sigma"] is None) != (cfg["tau"] is None):
        raise ConfigError("sigma", "sigma and tau must be given together")
    return cfg


def load(path: Optional[str], overrides=(), base: Optional[dict] = None) -> Config:
    """Read ``path`` (if given) over ``base``, then apply ``key=value`` overrides."""
    raw: dict = dict(base or {})
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(None, f"config file {path!r} not found")
        try:
            data = yaml.safe_load(p.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(None, f"cannot parse {path!r}: {exc}") from None
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(None, "config must be a flat mapping of key: value")
        for k, v in data.items():
            if isinstance(v, dict):
                raise ConfigError(str(k), "nested mappings are not allowed")
        raw.update({str(k): v for k, v in data.items()})
    for item in overrides:
        if "=" not in item:
            raise ConfigError(None, f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        try:
            raw[k] = yaml.safe_load(v) if v.strip() else None
        except yaml.YAMLError:
            raw[k] = v
        if k in EXPR_VARS and raw[k] is not None:
            raw[k] = v
    return build(raw)
