"""Command-line front end.

Settings are layered: built-in defaults, then the JSON file given with
``--config``, then command-line flags.  Exit codes: 0 success, 2 invalid
configuration, 3 frequency outside the admissible domain, 4 eigensolver
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__
from .bifurcation import EVENT_KINDS, emit_frames, locate_bifurcation, resolve_jobs, sweep
from .errors import ConfigError, DomainError, EigenSolverError
from .operators import build_operators
from .potential import PotentialParams
from .soliton import (classify_existence, conserved_quantities, dumps, fmt,
                      ode_residual, soliton_for)
from .spectral_grid import GridSpec
from .spectrum import Tolerances, classify, compute_spectra, crosscheck_gamma

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_EIGEN = 0, 2, 3, 4
FORMATS = ("csv", "json")
MODELS = ("kerr", "grating")


@dataclass(frozen=True)
class RunConfig:
    potential: PotentialParams
    model_alias: dict | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    format: str = "json"
    directory: str | None = None
    jobs: int | None = None

    def to_dict(self) -> dict:
        return {
            "potential": self.potential.to_dict(),
            "model": self.model_alias,
            "grid": self.grid.to_dict(),
            "tolerances": self.tolerances.to_dict(),
            "output": {"format": self.format, "directory": self.directory},
            "jobs": self.jobs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(data) - {"potential", "model", "grid", "tolerances", "output", "jobs"}
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            alias = data.get("model")
            pot = expand_alias(alias) if alias else None
            if data.get("potential") is not None:
                explicit = PotentialParams.from_dict(data["potential"])
                if pot is not None and explicit != pot:
                    raise ConfigError(f"model alias {alias} disagrees with potential {explicit}")
                pot = explicit
            if pot is None:
                raise ConfigError("configuration names no potential (use 'potential' or 'model')")
            grid = GridSpec.from_dict(data.get("grid") or {})
            tol = Tolerances.from_dict(data.get("tolerances") or {})
            out = data.get("output") or {}
            fmt_ = out.get("format", "json")
            if fmt_ not in FORMATS:
                raise ConfigError(f"output format must be one of {FORMATS}, got {fmt_!r}")
            jobs = data.get("jobs")
            if jobs is not None and (int(jobs) != jobs or jobs < 1):
                raise ConfigError(f"jobs must be a positive integer, got {jobs!r}")
            return cls(pot, alias, grid, tol, fmt_, out.get("directory"), jobs)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration is not valid JSON: {exc}") from exc


def expand_alias(alias: dict) -> PotentialParams:
    """{"name": "kerr"|"grating", "param": value} to coefficients."""
    if not isinstance(alias, dict) or alias.get("name") not in MODELS:
        raise ConfigError(f"model alias must be {{'name': one of {MODELS}, 'param': number}}")
    param = float(alias.get("param", 0.0))
    return PotentialParams.kerr(param) if alias["name"] == "kerr" else PotentialParams.grating(param)


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON configuration file")
    common.add_argument("--model", choices=MODELS, help="named potential")
    common.add_argument("--param", type=float, default=None,
                        help="rho for kerr, s for grating (default 0)")
    common.add_argument("--coeffs", type=float, nargs=4, metavar=("A1", "A2", "A3", "A4"),
                        help="quadric potential coefficients")
    common.add_argument("--n-points", type=int, metavar="N", help="polynomial degree N")
    common.add_argument("--halfwidth", type=float, metavar="L",
                        help="fixed halfwidth (default: 20/beta clamped to [10, 200])")
    common.add_argument("--jobs", type=int, metavar="J",
                        help="worker processes (default: GAPSPEC_JOBS or all cores)")
    common.add_argument("--out", metavar="DIR", help="write result files into DIR")
    common.add_argument("--format", choices=FORMATS, help="output format")

    parser = argparse.ArgumentParser(prog="gapspec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("exists", parents=[common], help="existence domain of decaying solitons")
    s = sub.add_parser("soliton", parents=[common], help="soliton profile at one frequency")
    s.add_argument("--omega", type=float, required=True)
    s = sub.add_parser("spectrum", parents=[common], help="classified spectra at one frequency")
    s.add_argument("--omega", type=float, required=True)
    s = sub.add_parser("sweep", parents=[common], help="isolated-eigenvalue counts over a range")
    s.add_argument("--range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    s.add_argument("--steps", type=int, required=True, metavar="K")
    s.add_argument("--refine", action="store_true", help="bisect every detected event")
    s.add_argument("--tol-omega", type=float, default=1e-3)
    s = sub.add_parser("bifurcate", parents=[common], help="refine one bifurcation by bisection")
    s.add_argument("--range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    s.add_argument("--kind", choices=EVENT_KINDS, required=True)
    s.add_argument("--tol-omega", type=float, default=1e-3)
    return parser


def resolve_config(args) -> RunConfig:
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {args.config}: {exc}") from exc
        cfg = RunConfig.from_json(text)
    else:
        cfg = None
    pot, alias = (cfg.potential, cfg.model_alias) if cfg else (None, None)
    if args.model:
        alias = {"name": args.model, "param": args.param if args.param is not None else 0.0}
        pot = expand_alias(alias)
    elif args.param is not None:
        raise ConfigError("--param needs --model")
    if args.coeffs:
        if args.model:
            raise ConfigError("--coeffs and --model are mutually exclusive")
        try:
            pot, alias = PotentialParams(*args.coeffs), None
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if pot is None:
        raise ConfigError("no potential given: use --model, --coeffs or --config")
    cfg = cfg or RunConfig(pot)
    grid = cfg.grid
    try:
        if args.n_points is not None:
            grid = replace(grid, N=args.n_points)
        if args.halfwidth is not None:
            grid = replace(grid, halfwidth=args.halfwidth)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = replace(cfg, potential=pot, model_alias=alias, grid=grid,
                  format=args.format or cfg.format,
                  directory=args.out if args.out is not None else cfg.directory,
                  jobs=args.jobs if args.jobs is not None else cfg.jobs)
    return cfg


# ---------------------------------------------------------------------------
# output


def _emit(cfg: RunConfig, name: str, text: str, stdout) -> None:
    if cfg.directory:
        out = Path(cfg.directory)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / name).write_text(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {out / name}: {exc}") from exc
    else:
        stdout.write(text if text.endswith("\n") else text + "\n")


def _kv_csv(pairs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in pairs:
        w.writerow([k, fmt(v) if isinstance(v, float) else v])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands


def cmd_exists(cfg: RunConfig, stdout=sys.stdout) -> int:
    rep = classify_existence(cfg.potential)
    if cfg.format == "json":
        d = rep.to_dict()
        d["summary"] = f"case {rep.case_label}, {rep.describe_domain()}"
        _emit(cfg, "existence.json", dumps(d), stdout)
    else:
        pairs = [("case", rep.case_label), ("domain", rep.describe_domain()),
                 ("A", rep.A), ("B", rep.B), ("C", rep.C)]
        _emit(cfg, "existence.csv", _kv_csv(pairs), stdout)
    return EXIT_OK


def cmd_soliton(cfg: RunConfig, omega: float, stdout=sys.stdout) -> int:
    grid = cfg.grid.grid_for(_check_omega(omega))
    prof = soliton_for(grid, omega, cfg.potential)
    res = ode_residual(prof, cfg.potential)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        cq = conserved_quantities(prof, cfg.potential)
    extra = {"ode_residual": res, "Q_total": cq.Q_total, "P": cq.P, "H": cq.H,
             "Lambda": cq.Lambda, "grid": cfg.grid.to_dict(),
             "halfwidth": grid.halfwidth, "potential": cfg.potential.to_dict()}
    if cfg.format == "json":
        _emit(cfg, "soliton.json", prof.to_json(extra), stdout)
    else:
        _emit(cfg, "soliton.csv", prof.to_csv(), stdout)
        if cfg.directory:
            _emit(cfg, "soliton_summary.json", dumps(extra), stdout)
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, omega: float, stdout=sys.stdout) -> int:
    grid = cfg.grid.grid_for(_check_omega(omega))
    prof = soliton_for(grid, omega, cfg.potential)
    ops = build_operators(prof, cfg.potential, grid)
    sset = compute_spectra(ops, cfg.tolerances)
    spec_M = classify(sset.gamma, omega, "Mplus", cfg.tolerances)
    check = crosscheck_gamma(sset.L, spec_M)
    if cfg.format == "json":
        d = {"omega": omega, "potential": cfg.potential.to_dict(), "grid": cfg.grid.to_dict(),
             "counts": sset.counts(), "L": sset.L.to_dict(), "Hplus": sset.Hplus.to_dict(),
             "Hminus": sset.Hminus.to_dict(), "Mplus": spec_M.to_dict(),
             "crosscheck_gamma": check.to_dict()}
        _emit(cfg, "spectrum.json", dumps(d), stdout)
        return EXIT_OK
    if cfg.directory:
        for tag in ("L", "Hplus", "Hminus"):
            _emit(cfg, f"spectrum_{tag}.csv", getattr(sset, tag).to_csv(), stdout)
        _emit(cfg, "crosscheck_gamma.json", dumps(check.to_dict()), stdout)
        return EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["operator", "re", "im", "class"])
    for tag in ("L", "Hplus", "Hminus"):
        for line in getattr(sset, tag).to_csv().splitlines()[1:]:
            w.writerow([tag] + line.split(","))
    stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, omega_lo: float, omega_hi: float, steps: int,
              refine: bool = False, tol_omega: float = 1e-3, stdout=sys.stdout) -> int:
    report, spectra = sweep(cfg.potential, (omega_lo, omega_hi), steps, cfg.grid,
                            cfg.tolerances, jobs=resolve_jobs(cfg.jobs), refine=refine,
                            tol_omega=tol_omega, keep_spectra=True)
    if cfg.directory:
        emit_frames(report, spectra, Path(cfg.directory) / "frames")
    if cfg.format == "json":
        _emit(cfg, "sweep.json", report.to_json(), stdout)
    else:
        _emit(cfg, "sweep.csv", report.to_csv(), stdout)
        if cfg.directory:
            _emit(cfg, "sweep.json", report.to_json(), stdout)
    return EXIT_OK


def cmd_bifurcate(cfg: RunConfig, bracket, kind: str, tol_omega: float = 1e-3,
                  stdout=sys.stdout) -> int:
    lo, hi = sorted(bracket)
    star = locate_bifurcation(cfg.potential, (lo, hi), kind, tol_omega, cfg.grid, cfg.tolerances)
    d = {"kind": kind, "bracket": [lo, hi], "tol_omega": tol_omega, "omega_star": star}
    if cfg.format == "json":
        _emit(cfg, "bifurcation.json", dumps(d), stdout)
    else:
        _emit(cfg, "bifurcation.csv", _kv_csv([(k, d[k]) for k in ("kind", "tol_omega", "omega_star")]
                                              + [("bracket_lo", lo), ("bracket_hi", hi)]), stdout)
    return EXIT_OK


def _check_omega(omega: float) -> float:
    if not -1.0 < omega < 1.0:
        raise DomainError(f"omega must lie in (-1, 1), got {omega!r}")
    return omega


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "exists":
            return cmd_exists(cfg, stdout)
        if args.command == "soliton":
            return cmd_soliton(cfg, args.omega, stdout)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.omega, stdout)
        if args.command == "sweep":
            return cmd_sweep(cfg, *args.range, args.steps, args.refine, args.tol_omega, stdout)
        return cmd_bifurcate(cfg, args.range, args.kind, args.tol_omega, stdout)
    except DomainError as exc:
        print(f"gapspec: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except EigenSolverError as exc:
        print(f"gapspec: eigensolver error: {exc}", file=sys.stderr)
        return EXIT_EIGEN
    except (ConfigError, ValueError) as exc:
        print(f"gapspec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
