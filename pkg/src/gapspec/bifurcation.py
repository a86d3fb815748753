"""Frequency sweeps of isolated-eigenvalue counts and bifurcation search.

For every frequency of a sweep the soliton, the operators and the
classified spectra are computed independently, so the frequencies are
farmed out to a process pool.  Consecutive count vectors are compared to
detect events, which can then be refined by bisection on the integer
count that changed.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .operators import build_operators
from .potential import PotentialParams
from .soliton import classify_existence, dumps, fmt, soliton_for
from .spectral_grid import GridSpec
from .spectrum import DEFAULT_TOL, SpectrumSet, Tolerances, compute_spectra

COUNT_KEYS = ("L_imag_pairs", "L_real_pairs", "L_quartets",
              "Hplus_isolated", "Hminus_isolated")
EVENT_KINDS = ("quartet_birth", "quartet_death", "edge_bifurcation_Hplus",
               "edge_bifurcation_Hminus", "pair_birth", "pair_death")
OPERATORS = ("L", "Hplus", "Hminus")


def analyze(p: PotentialParams, omega: float, grid_spec: GridSpec = GridSpec(),
            tol: Tolerances = DEFAULT_TOL) -> SpectrumSet:
    """Classified spectra of L, H+ and H- at one frequency."""
    grid = grid_spec.grid_for(omega)
    ops = build_operators(soliton_for(grid, omega, p), p, grid)
    return compute_spectra(ops, tol)


def _count_vector(counts: dict) -> tuple:
    return tuple(int(counts[k]) for k in COUNT_KEYS)


def indicator(kind: str, counts: dict) -> int:
    """Integer count whose change defines an event of ``kind``."""
    if kind in ("quartet_birth", "quartet_death"):
        return counts["L_quartets"]
    if kind in ("pair_birth", "pair_death"):
        return counts["L_imag_pairs"] + counts["L_real_pairs"]
    if kind == "edge_bifurcation_Hplus":
        return counts["Hplus_isolated"]
    if kind == "edge_bifurcation_Hminus":
        return counts["Hminus_isolated"]
    raise ConfigError(f"unknown event kind {kind!r}")


def isolated_L_pairs(counts: dict) -> int:
    """Isolated L members counted in pairs; a quartet is two pairs."""
    return counts["L_imag_pairs"] + counts["L_real_pairs"] + 2 * counts["L_quartets"]


def detect_events(before: dict, after: dict) -> list:
    """Event kinds between two consecutive count dicts (sweep order)."""
    kinds = []
    dq = after["L_quartets"] - before["L_quartets"]
    dp = (after["L_imag_pairs"] + after["L_real_pairs"]
          - before["L_imag_pairs"] - before["L_real_pairs"])
    if dq > 0:
        kinds.append("quartet_birth")
    elif dq < 0:
        kinds.append("quartet_death")
    # a pair turning into a quartet (or back) is not a separate pair event
    if dp > 0 and dq >= 0:
        kinds.append("pair_birth")
    elif dp < 0 and dq <= 0:
        kinds.append("pair_death")
    if after["Hplus_isolated"] != before["Hplus_isolated"]:
        kinds.append("edge_bifurcation_Hplus")
    if after["Hminus_isolated"] != before["Hminus_isolated"]:
        kinds.append("edge_bifurcation_Hminus")
    return kinds


@dataclass
class Event:
    omega_bracket: tuple
    kind: str
    refined_omega: float | None = None
    counts_before: dict = field(default_factory=dict)
    counts_after: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"omega_bracket": list(self.omega_bracket), "kind": self.kind,
                "refined_omega": self.refined_omega,
                "counts_before": self.counts_before, "counts_after": self.counts_after}


@dataclass
class SweepReport:
    potential: PotentialParams
    branches: dict
    grid: GridSpec
    omega_values: np.ndarray
    counts: list
    events: list
    warnings: list = field(default_factory=list)
    tolerances: Tolerances = DEFAULT_TOL

    def count_table(self) -> np.ndarray:
        return np.array([_count_vector(c) for c in self.counts], dtype=int).reshape(-1, len(COUNT_KEYS))

    def events_of(self, kind: str) -> list:
        return [e for e in self.events if e.kind == kind]

    def correlation_violations(self) -> list:
        """Frequencies where isolated L pairs exceed the H+ and H- total."""
        return [float(om) for om, c in zip(self.omega_values, self.counts)
                if isolated_L_pairs(c) > c["Hplus_isolated"] + c["Hminus_isolated"]]

    def to_dict(self) -> dict:
        return {
            "potential": self.potential.to_dict(),
            "branches": self.branches,
            "grid": self.grid.to_dict(),
            "tolerances": self.tolerances.to_dict(),
            "omega_values": [float(w) for w in self.omega_values],
            "counts": [dict(c) for c in self.counts],
            "events": [e.to_dict() for e in self.events],
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("omega",) + COUNT_KEYS)
        for om, c in zip(self.omega_values, self.counts):
            w.writerow([fmt(om)] + [int(c[k]) for k in COUNT_KEYS])
        return buf.getvalue()


def resolve_jobs(jobs: int | None = None) -> int:
    """Worker count: explicit value, else GAPSPEC_JOBS, else all cores."""
    if jobs is None:
        env = os.environ.get("GAPSPEC_JOBS")
        if env:
            try:
                jobs = int(env)
            except ValueError as exc:
                raise ConfigError(f"GAPSPEC_JOBS must be an integer, got {env!r}") from exc
        else:
            jobs = os.cpu_count() or 1
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs!r}")
    return int(jobs)


def _task(args):
    p, omega, grid_spec, tol = args
    return analyze(p, omega, grid_spec, tol)


def _map(tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as ex:
        return list(ex.map(_task, tasks))


def omega_grid(omega_range, steps: int) -> np.ndarray:
    """``steps`` equally spaced frequencies from the upper end down."""
    if int(steps) != steps or steps < 1:
        raise ConfigError(f"steps must be a positive integer, got {steps!r}")
    lo, hi = sorted(float(w) for w in omega_range)
    if steps == 1:
        return np.array([hi])
    return np.linspace(hi, lo, int(steps))


def sweep(p: PotentialParams, omega_range, steps: int, grid_spec: GridSpec = GridSpec(),
          tol: Tolerances = DEFAULT_TOL, jobs: int | None = None, refine: bool = False,
          tol_omega: float = 1e-3, keep_spectra: bool = False):
    """Count isolated eigenvalues over a decreasing frequency grid.

    Returns the report, or (report, spectra) with ``keep_spectra``.
    """
    report = classify_existence(p)
    omegas = omega_grid(omega_range, steps)
    keep, warnings = [], []
    for om in omegas:
        if report.admissible(om):
            keep.append(float(om))
        else:
            warnings.append({"omega": float(om), "reason": "inadmissible",
                             "domain": report.describe_domain()})
    jobs = resolve_jobs(jobs)
    spectra = _map([(p, om, grid_spec, tol) for om in keep], jobs)
    counts = [s.counts() for s in spectra]
    events = []
    for i in range(1, len(keep)):
        for kind in detect_events(counts[i - 1], counts[i]):
            events.append(Event((keep[i], keep[i - 1]), kind,
                                counts_before=counts[i - 1], counts_after=counts[i]))
    if refine:
        for ev in events:
            ev.refined_omega = locate_bifurcation(p, ev.omega_bracket, ev.kind, tol_omega,
                                                  grid_spec, tol)
    out = SweepReport(
        potential=p,
        branches={fmt(om): report.branch_for(om) for om in keep},
        grid=grid_spec, omega_values=np.array(keep), counts=counts,
        events=events, warnings=warnings, tolerances=tol)
    return (out, spectra) if keep_spectra else out


def locate_bifurcation(p: PotentialParams, bracket, kind: str, tol_omega: float = 1e-3,
                       grid_spec: GridSpec = GridSpec(), tol: Tolerances = DEFAULT_TOL) -> float:
    """Bisect on the count indicator of ``kind`` until the bracket is
    narrower than ``tol_omega``; returns the midpoint."""
    if kind not in EVENT_KINDS:
        raise ConfigError(f"unknown event kind {kind!r}")
    if not tol_omega > 0:
        raise ConfigError(f"tol_omega must be positive, got {tol_omega!r}")
    lo, hi = sorted(float(w) for w in bracket)
    report = classify_existence(p)
    for om in (lo, hi):
        if not report.admissible(om):
            raise DomainError(f"bracket end omega={om!r} is inadmissible")
    count = lambda om: indicator(kind, analyze(p, om, grid_spec, tol).counts())
    c_lo, c_hi = count(lo), count(hi)
    if c_lo == c_hi:
        raise ConfigError(
            f"{kind} indicator is {c_lo} at both ends of ({lo:g}, {hi:g}): nothing to locate")
    while hi - lo >= tol_omega:
        mid = 0.5 * (lo + hi)
        if count(mid) == c_hi:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def emit_frames(report: SweepReport, spectra, out_dir) -> list:
    """Write one eigenvalue CSV per frequency and operator plus index.json."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    if len(spectra) != len(report.omega_values):
        raise ConfigError("spectra do not match the sweep frequencies")
    files, index = [], []
    try:
        for i, (om, sset) in enumerate(zip(report.omega_values, spectra)):
            entry = {"index": i, "omega": float(om), "counts": report.counts[i], "files": {}}
            for op in OPERATORS:
                name = f"frame_{i}_{op}.csv"
                (out / name).write_text(getattr(sset, op).to_csv())
                entry["files"][op] = name
                files.append(out / name)
            index.append(entry)
        (out / "index.json").write_text(dumps({"frames": index, "report": report.to_dict()}))
    except OSError as exc:
        raise ConfigError(f"cannot write frames to {out}: {exc}") from exc
    return files + [out / "index.json"]
