"""Command line entry point.

    indefshoot check   --config cfg.yaml      hypothesis report (JSON)
    indefshoot eig     --config cfg.yaml      lambda0 and hump eigenvalues (CSV)
    indefshoot solve   --config cfg.yaml      multiplicity report + trajectories
    indefshoot sweep   --config cfg.yaml      per-mu counts (CSV)
    indefshoot radial  --config cfg.yaml      annulus problem via t = h(r)
    indefshoot repro-fig1                     built-in three-solution example

Exit status: 0 success, 1 failed assertion or numerical failure, 2 config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as cfgmod
from . import reports
from .config import Config, ConfigError
from .eigen import EigenError, check_hypotheses, hump_eigenvalues
from .expr import DomainError
from .multiplicity import NoAdmissibleR, solve_all, sweep_mu
from .radial import AnnulusProblem, RadialResidualError, back_map, transform
from .rk import StepSizeUnderflow
from .shooting import Problem, ShootingOptions
from .weights import (
    Decomposition,
    DecompositionError,
    WeightFunction,
    decompose,
    validate_decomposition,
)

FIG1 = {
    "length": 1.0,
    "weight": "sin(3*pi*x)",
    "mu": 0.5,
    "g": "max(0, 100*s*atan(abs(s)))",
    "d_min": 0.0,
    "d_max": 5.0,
    "slope_grid": 500,
}


NUMERIC_ERRORS_BY_MODULE = {
    DomainError: "expr",
    StepSizeUnderflow: "shooting",
    EigenError: "eigen",
    NoAdmissibleR: "multiplicity",
    RadialResidualError: "radial",
    DecompositionError: "weights",
}
NUMERIC_ERRORS = tuple(NUMERIC_ERRORS_BY_MODULE)


class NumericFailure(RuntimeError):
    def __init__(self, module: str, exc: Exception):
        super().__init__(f"numerical failure in {module}: {exc}")


def _options(cfg: Config) -> ShootingOptions:
    return ShootingOptions(
        rtol=cfg.rtol,
        atol=cfg.atol,
        u_cap=cfg.u_cap,
        points=cfg.points,
        bc_tol=cfg.bc_tol,
        curv_tol=cfg.curv_tol,
        residual_tol=cfg.residual_tol,
        threads=cfg.threads,
    )


def _single_mu(cfg: Config) -> float:
    if isinstance(cfg.mu, tuple):
        if len(cfg.mu) != 1:
            raise ConfigError("mu", "this command takes a single mu; use `sweep` for lists")
        return cfg.mu[0]
    return cfg.mu


def build_problem(cfg: Config, mu: float = None) -> Problem:
    a = cfg.expr("weight")
    g = cfg.expr("g")
    w = WeightFunction(a, _single_mu(cfg) if mu is None else mu, cfg.length)
    if cfg.sigma is not None:
        try:
            d = Decomposition(cfg.sigma, cfg.tau, cfg.length)
        except DecompositionError as exc:
            raise ConfigError("sigma", str(exc)) from None
        rep = validate_decomposition(w, d, cfg.sign_tol, cfg.decomp_grid)
        if not rep.ok:
            raise ConfigError("sigma", f"explicit decomposition fails: {rep.reason}")
    else:
        try:
            d = decompose(w, cfg.sign_tol, cfg.decomp_grid)
        except DecompositionError as exc:
            raise NumericFailure("weights", exc) from None
    try:
        return Problem(w, d, g)
    except ValueError as exc:
        raise ConfigError("g", str(exc)) from None


def _out_dir(cfg: Config, args) -> Path:
    return Path(args.out if args.out else cfg.out_dir)


def cmd_check(cfg, args, out):
    p = build_problem(cfg)
    try:
        rep = check_hypotheses(p.w, p.d, p.g, cfg.s_lo, cfg.s_hi, rel_tol=cfg.eig_rel_tol)
    except ValueError as exc:
        raise NumericFailure("eigen", exc) from None
    out.write(reports.dumps(rep.to_dict()))
    return 0


def cmd_eig(cfg, args, out):
    p = build_problem(cfg)
    lam0, lam1 = hump_eigenvalues(p.w, p.d, cfg.eig_rel_tol)
    rows = [("I", 0.0, cfg.length, lam0)]
    rows += [(f"I_{i}", s, t, lam) for i, ((s, t), lam) in enumerate(zip(p.d.humps, lam1), start=1)]
    out.write(reports.csv_text(("interval", "left", "right", "lambda"), rows))
    return 0


def _write_solutions(report, outdir: Path, prefix="solution"):
    for k, sol in enumerate(report.solutions, start=1):
        tr = sol.trajectory
        reports.write_text(outdir / f"{prefix}_{k:02d}.csv", reports.trajectory_csv(tr.x, tr.u, tr.up))


def _slopes(cfg):
    return (cfg.d_min, cfg.d_max, cfg.slope_grid)


def run_solve(cfg: Config):
    p = build_problem(cfg)
    return solve_all(
        p,
        _slopes(cfg),
        r=cfg.r,
        opts=_options(cfg),
        delta_fraction=cfg.delta_fraction,
        s_range=(cfg.s_lo, cfg.s_hi),
        r_grid=cfg.r_grid,
    )


def cmd_solve(cfg, args, out):
    rep = run_solve(cfg)
    outdir = _out_dir(cfg, args)
    text = reports.dumps(rep.to_dict())
    reports.write_text(outdir / "report.json", text)
    _write_solutions(rep, outdir)
    out.write(text)
    return 0


def cmd_sweep(cfg, args, out):
    mus = cfg.mu if isinstance(cfg.mu, tuple) else (cfg.mu,)
    p = build_problem(cfg, mu=mus[0])
    sw = sweep_mu(
        p, mus, _slopes(cfg), opts=_options(cfg), r=cfg.r,
        delta_fraction=cfg.delta_fraction, s_range=(cfg.s_lo, cfg.s_hi), r_grid=cfg.r_grid,
    )
    header = ("mu", "count", "signatures", "slopes")
    text = reports.csv_text(header, [tuple(row[h] for h in header) for row in sw.rows()])
    reports.write_text(_out_dir(cfg, args) / "sweep.csv", text)
    out.write(text)
    mu_hat = sw.mu_hat
    sys.stderr.write(f"mu_hat={'none' if mu_hat is None else reports.fmt_float(mu_hat)}\n")
    return 0


def cmd_radial(cfg, args, out):
    cfg.require("N", "R1", "R2")
    if not cfg.N >= 2:
        raise ConfigError("N", "must be >= 2")
    if not cfg.R1 < cfg.R2:
        raise ConfigError("R2", "need R1 < R2")
    ap = AnnulusProblem(
        cfg.N, cfg.R1, cfg.R2, cfg.expr("A"), _single_mu(cfg), cfg.expr("g"), cfg.sigma, cfg.tau
    )
    try:
        p = transform(ap, cfg.sign_tol, cfg.decomp_grid)
    except (DecompositionError, ValueError) as exc:
        raise NumericFailure("radial", exc) from None
    opts = _options(cfg)
    rep = solve_all(
        p, _slopes(cfg), r=cfg.r, opts=opts,
        delta_fraction=cfg.delta_fraction, s_range=(cfg.s_lo, cfg.s_hi), r_grid=cfg.r_grid,
    )
    radial = [back_map(ap, sol, points=cfg.points, opts=opts, problem=p) for sol in rep.solutions]
    doc = rep.to_dict()
    doc["annulus"] = {"N": cfg.N, "R1": cfg.R1, "R2": cfg.R2, "L": ap.L}
    doc["radial_solutions"] = [r.to_dict() for r in radial]
    outdir = _out_dir(cfg, args)
    text = reports.dumps(doc)
    reports.write_text(outdir / "report.json", text)
    _write_solutions(rep, outdir)
    for k, rs in enumerate(radial, start=1):
        reports.write_text(
            outdir / f"radial_{k:02d}.csv", reports.trajectory_csv(rs.r, rs.v, rs.vp, ("r", "v", "v_prime"))
        )
    out.write(text)
    return 0


def cmd_repro_fig1(cfg, args, out):
    rep = run_solve(cfg)
    labels = sorted(rep.signature_labels(), key=lambda s: (len(s), s))
    ok = rep.count == 3 and rep.prediction_met
    out.write(f"count={rep.count}\n")
    for sol, sig in zip(rep.solutions, rep.signatures):
        out.write(
            f"slope={reports.fmt_float(sol.slope)} signature={sig.label()} "
            f"|u(1)|={sol.bc_residual:.3e} u'(1)={sol.up_end:.6f}\n"
        )
    out.write(f"signatures={' '.join(labels)} r={reports.fmt_float(rep.r_used)}\n")
    out.write("PASS\n" if ok else "FAIL\n")
    if args.out:
        outdir = Path(args.out)
        reports.write_text(outdir / "report.json", reports.dumps(rep.to_dict()))
        _write_solutions(rep, outdir)
    return 0 if ok else 1


COMMANDS = {
    "check": (cmd_check, "check the eigenvalue hypotheses on g near 0 and infinity"),
    "eig": (cmd_eig, "first eigenvalues of a+ on I and on each hump (CSV)"),
    "solve": (cmd_solve, "find and classify all positive solutions (JSON)"),
    "sweep": (cmd_sweep, "solve for each mu in the config list (CSV)"),
    "radial": (cmd_radial, "radial solutions on an annulus"),
    "repro-fig1": (cmd_repro_fig1, "reproduce the three-solution example (sin(3 pi x), mu = 0.5)"),
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="indefshoot",
        description="Positive solutions of u'' + a_mu(x) g(u) = 0, u(0) = u(L) = 0.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        sp = sub.add_parser(
            name,
            help=helptext,
            description=helptext,
            epilog=cfgmod.keys_help(),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        sp.add_argument("--config", metavar="PATH", help="flat YAML config file")
        sp.add_argument(
            "--set", metavar="KEY=VALUE", action="append", default=[], help="override one config key"
        )
        sp.add_argument("--out", metavar="DIR", help="output directory (overrides out_dir)")
        sp.add_argument("--threads", metavar="K", type=int, help="worker threads for slope scans")
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = make_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        overrides = list(args.set)
        if args.threads is not None:
            overrides.append(f"threads={args.threads}")
        base = FIG1 if args.command == "repro-fig1" else None
        cfg = cfgmod.load(args.config, overrides, base=base)
        return func(cfg, args, out)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except NumericFailure as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except NUMERIC_ERRORS as exc:
        module = NUMERIC_ERRORS_BY_MODULE.get(type(exc), "shooting")
        sys.stderr.write(f"error: numerical failure in {module}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
