"""Eigenvalue computation and classification.

Eigenvalues of the linearized operator L are sorted into a kernel cluster
near zero, approximants of the continuous bands on the imaginary axis,
and isolated eigenvalues grouped by the Hamiltonian symmetry
lambda -> -lambda, conj(lambda).  Eigenvalues of the Dirac operators H+-
are real; the isolated ones are those inside the gap (omega-1, omega+1).

Discretization also produces eigenvalues that are not approximations of
anything: modes living on the truncation box and modes at the resolution
limit of the grid.  When eigenvectors are available these are recognized
by two diagnostics, the share of mass in the outer half of the domain and
the share of coefficient energy in the top quarter of polynomial degrees.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import ConfigError, EigenSolverError
from .operators import OperatorSet, signature
from .soliton import dumps, fmt
from .spectral_grid import ChebGrid, resolution_tail

OPERATOR_TAGS = ("L", "Hplus", "Hminus", "Mplus")
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class Tolerances:
    kernel: float = 1e-6
    re: float = 1e-6
    band: float = 1e-3
    sym: float = 1e-6
    match: float = 1e-4
    # spurious-mode diagnostics
    outer_mass: float = 0.3
    tail: float = 0.05

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Tolerances":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


DEFAULT_TOL = Tolerances()


# ---------------------------------------------------------------------------
# dense eigensolver


def eig_general(matrix, vectors: bool = False, check: bool = True):
    """All eigenvalues of a general complex matrix (LAPACK geev).

    With ``vectors=True`` returns (values, right_vectors) with unit-norm
    columns and verifies ||A v - lambda v|| / ||A|| < 1e-10.
    """
    A = np.asarray(matrix)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ConfigError("matrix has non-finite entries")
    if A.shape[0] == 0:
        return (np.zeros(0, complex), np.zeros((0, 0), complex)) if vectors else np.zeros(0, complex)
    try:
        if vectors:
            w, V = scipy.linalg.eig(A, right=True, check_finite=False)
        else:
            w = scipy.linalg.eigvals(A, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        idx = _lapack_index(str(exc))
        raise EigenSolverError(f"QR iteration failed to converge: {exc}", index=idx) from exc
    w = np.asarray(w, dtype=complex)
    if not np.all(np.isfinite(w)):
        raise EigenSolverError("eigensolver returned non-finite values")
    if not vectors:
        return w
    V = np.asarray(V, dtype=complex)
    V /= np.linalg.norm(V, axis=0)
    if check:
        scale = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
        res = np.linalg.norm(A @ V - V * w, axis=0) / scale
        worst = int(np.argmax(res)) if res.size else 0
        if res.size and res[worst] > RESIDUAL_TOL:
            raise EigenSolverError(
                f"eigenpair residual {res[worst]:.3g} exceeds {RESIDUAL_TOL:g}",
                index=worst)
    return w, V


def _lapack_index(msg):
    digits = "".join(ch if ch.isdigit() else " " for ch in msg).split()
    return int(digits[-1]) if digits else None


def hermitian_eigenvalues(H, weights) -> np.ndarray:
    """Eigenvalues of an operator that is Hermitian in the weighted inner
    product, via the similarity diag(sqrt(w)) H diag(1/sqrt(w))."""
    m = H.shape[0]
    sw = np.sqrt(np.tile(weights, m // weights.size))
    Hs = sw[:, None] * H / sw[None, :]
    return scipy.linalg.eigvalsh(0.5 * (Hs + Hs.conj().T), check_finite=False)


def hermitian_eigh(H, weights):
    m = H.shape[0]
    sw = np.sqrt(np.tile(weights, m // weights.size))
    Hs = sw[:, None] * H / sw[None, :]
    w, V = scipy.linalg.eigh(0.5 * (Hs + Hs.conj().T), check_finite=False)
    return w, V / sw[:, None]


# ---------------------------------------------------------------------------
# spurious-mode diagnostics


def mode_diagnostics(grid: ChebGrid, vectors: np.ndarray):
    """(outer_mass, tail) for each column of ``vectors``.

    ``outer_mass`` is the weighted share of |v|^2 on |x| > L/2 and ``tail``
    the largest per-component coefficient-energy share in the top quarter
    of degrees.
    """
    n = grid.size
    V = np.asarray(vectors)
    comps = V.shape[0] // n
    blocks = V.reshape(comps, n, -1)
    mass = np.abs(blocks) ** 2 * grid.weights[None, :, None]
    outer = np.abs(grid.nodes) > 0.5 * grid.halfwidth
    total = mass.sum(axis=(0, 1))
    total = np.where(total > 0, total, 1.0)
    far = mass[:, outer, :].sum(axis=(0, 1)) / total
    tails = np.stack([resolution_tail(grid, blocks[c].T) for c in range(comps)])
    return far, tails.max(axis=0)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Isolated:
    value: complex
    multiplicity: int
    kind: str
    members: tuple = ()

    def to_dict(self):
        return {"re": self.value.real, "im": self.value.imag,
                "multiplicity": self.multiplicity, "kind": self.kind,
                "members": [[m.real, m.imag] for m in self.members]}


@dataclass(frozen=True, eq=False)
class Spectrum:
    omega: float
    operator_tag: str
    raw: np.ndarray
    kernel_cluster: np.ndarray
    band: np.ndarray
    isolated: tuple
    filtered_out: np.ndarray
    unresolved: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    flags: tuple = ()

    # counts ---------------------------------------------------------------
    def count(self, kind: str) -> int:
        return sum(1 for g in self.isolated if g.kind == kind)

    @property
    def n_isolated(self) -> int:
        """Isolated nonzero eigenvalues (with multiplicity for H+-)."""
        if self.operator_tag in ("Hplus", "Hminus"):
            return sum(g.multiplicity for g in self.isolated)
        return len(self.isolated)

    @property
    def isolated_values(self) -> np.ndarray:
        vals = []
        for g in self.isolated:
            vals.extend(g.members if g.members else [g.value])
        return np.array(vals, dtype=complex)

    def pair_count(self) -> int:
        """Isolated L members counted in pairs: a quartet counts twice."""
        return sum(2 if g.kind == "complex_quartet" else 1 for g in self.isolated
                   if g.kind != "unmatched")

    # output ---------------------------------------------------------------
    def labelled(self):
        rows = [(z, "kernel") for z in self.kernel_cluster]
        rows += [(z, "band") for z in self.band]
        for g in self.isolated:
            rows += [(z, g.kind) for z in (g.members or (g.value,))]
        rows += [(z, "filtered") for z in self.filtered_out]
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "class"])
        for z, label in sorted(self.labelled(), key=lambda r: (r[0].real, r[0].imag, r[1])):
            w.writerow([fmt(z.real), fmt(z.imag), label])
        return buf.getvalue()

    def to_dict(self) -> dict:
        c = lambda arr: [[z.real, z.imag] for z in np.sort_complex(np.asarray(arr, complex))]
        return {
            "omega": self.omega, "operator": self.operator_tag,
            "raw": c(self.raw), "kernel_cluster": c(self.kernel_cluster),
            "band": c(self.band), "filtered_out": c(self.filtered_out),
            "unresolved": c(self.unresolved),
            "isolated": [g.to_dict() for g in self.isolated],
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def gap_edge(omega: float) -> float:
    return min(1.0 - omega, 1.0 + omega)


def _group_L(cands, tol):
    """Greedy grouping into pairs/quartets; larger |Re| first."""
    remaining = sorted(cands, key=lambda z: (-abs(z.real), -abs(z.imag), z.real, z.imag))
    groups, flags = [], []
    used = np.zeros(len(remaining), bool)
    arr = np.array(remaining, dtype=complex)

    def take(target, exclude):
        if arr.size == 0:
            return None
        d = np.abs(arr - target)
        d[used] = np.inf
        for e in exclude:
            d[e] = np.inf
        j = int(np.argmin(d))
        return j if d[j] <= tol else None

    for i, z in enumerate(remaining):
        if used[i]:
            continue
        used[i] = True
        is_imag = abs(z.real) <= tol
        is_real = abs(z.imag) <= tol
        if is_imag or is_real:
            j = take(-z, [])
            if j is None:
                flags.append(f"unmatched partner for {z.real:.6g}{z.imag:+.6g}i")
                groups.append(Isolated(z, 1, "unmatched", (z,)))
                continue
            used[j] = True
            kind = "imaginary_pair" if is_imag else "real_pair"
            rep = complex(0.0 if is_imag else abs(z.real), abs(z.imag) if is_imag else 0.0)
            groups.append(Isolated(rep, 1, kind, (z, arr[j])))
            continue
        partners = []
        for target in (-z, np.conj(z), -np.conj(z)):
            j = take(target, partners)
            if j is not None:
                partners.append(j)
        for j in partners:
            used[j] = True
        members = (z,) + tuple(arr[j] for j in partners)
        if len(partners) < 3:
            flags.append(f"incomplete quartet at {z.real:.6g}{z.imag:+.6g}i")
            groups.append(Isolated(z, 1, "unmatched", members))
            continue
        rep = complex(abs(z.real), abs(z.imag))
        groups.append(Isolated(rep, 1, "complex_quartet", members))
    groups.sort(key=lambda g: (g.kind, -g.value.real, g.value.imag))
    return tuple(groups), tuple(flags)


def classify(raw, omega: float, operator_tag: str, tol: Tolerances = DEFAULT_TOL,
             spurious=None, kernel=None) -> Spectrum:
    """Sort eigenvalues into kernel, band, isolated and filtered sets.

    ``spurious`` is an optional boolean mask (same length as ``raw``)
    marking eigenvalues already identified as discretization artifacts.
    ``kernel`` optionally overrides the kernel test with a boolean mask.
    For ``Mplus`` the raw values are gamma = -lambda^2, the kernel test is
    |gamma| < tol.kernel and the remaining classification is carried out
    on lambda = sqrt(-gamma).
    """
    if operator_tag not in OPERATOR_TAGS:
        raise ConfigError(f"unknown operator tag {operator_tag!r}")
    raw = np.asarray(raw, dtype=complex)
    spurious = np.zeros(raw.size, bool) if spurious is None else np.asarray(spurious, bool)
    if spurious.shape != raw.shape:
        raise ConfigError("spurious mask must match the eigenvalue array")
    edge = gap_edge(omega)
    empty = np.zeros(0, complex)

    if operator_tag in ("Hplus", "Hminus"):
        lam = raw.real
        lo, hi = omega - 1.0, omega + 1.0
        kern = np.abs(raw) < tol.kernel
        band = (lam <= lo + tol.band) | (lam >= hi - tol.band)
        unresolved = ~kern & (((lam > lo) & (lam <= lo + tol.band)) |
                              ((lam < hi) & (lam >= hi - tol.band)))
        iso = ~kern & ~band & ~spurious
        vals = np.sort(lam[iso])
        groups = []
        for v in vals:
            if groups and abs(groups[-1].value.real - v) <= tol.sym:
                g = groups[-1]
                groups[-1] = replace(g, multiplicity=g.multiplicity + 1,
                                     members=g.members + (complex(v),))
            else:
                groups.append(Isolated(complex(v), 1, "real_isolated", (complex(v),)))
        flags = tuple(f"complex eigenvalue {z.real:.6g}{z.imag:+.6g}i"
                      for z in raw[iso] if abs(z.imag) > 1e-8)
        return Spectrum(omega, operator_tag, raw, raw[kern], raw[band & ~kern],
                        tuple(groups), raw[~kern & ~band & spurious],
                        raw[unresolved], flags)

    lam = np.sqrt(-raw) if operator_tag == "Mplus" else raw
    if kernel is not None:
        kern = np.asarray(kernel, bool)
    elif operator_tag == "Mplus":
        kern = np.abs(raw) < tol.kernel
    else:
        kern = np.abs(lam) < tol.kernel
    band = ~kern & (np.abs(lam.real) < tol.re) & (np.abs(lam.imag) >= edge - tol.band)
    unresolved = band & (np.abs(lam.imag) < edge)
    cand = ~kern & ~band & ~spurious
    filt = ~kern & ~band & spurious
    if operator_tag == "Mplus":
        # each gamma stands for the pair +-lambda
        vals = np.concatenate([lam[cand], -lam[cand]])
        groups, flags = _group_L(list(vals), tol.sym)
    else:
        groups, flags = _group_L(list(lam[cand]), tol.sym)
    return Spectrum(omega, operator_tag, raw, raw[kern], raw[band], groups,
                    raw[filt], raw[unresolved], flags)


def filter_spurious(spec_N: Spectrum, spec_2N: Spectrum, tol_match: float = DEFAULT_TOL.match) -> Spectrum:
    """Keep isolated groups of the finer spectrum that reappear in the
    coarser one within ``tol_match``; move the rest to ``filtered_out``."""
    ref = spec_N.isolated_values
    keep, drop = [], []
    for g in spec_2N.isolated:
        members = g.members or (g.value,)
        ok = ref.size > 0 and all(np.min(np.abs(ref - z)) <= tol_match for z in members)
        (keep if ok else drop).append(g)
    dropped = [z for g in drop for z in (g.members or (g.value,))]
    return replace(spec_2N, isolated=tuple(keep),
                   filtered_out=np.concatenate([spec_2N.filtered_out,
                                                np.array(dropped, dtype=complex)]))


@dataclass(frozen=True)
class GammaCheck:
    matches: tuple
    outliers: tuple
    tol: float

    @property
    def ok(self) -> bool:
        return not self.outliers

    def to_dict(self):
        return {"tol": self.tol, "ok": self.ok,
                "matches": [{"lambda": [l.real, l.imag], "gamma": [g.real, g.imag],
                             "error": e} for l, g, e in self.matches],
                "outliers": [[l.real, l.imag] for l in self.outliers]}


def crosscheck_gamma(spec_L: Spectrum, spec_M: Spectrum, tol: float = 1e-6) -> GammaCheck:
    """Match each isolated and kernel lambda of L with a gamma = -lambda^2."""
    gam = np.asarray(spec_M.raw, dtype=complex)
    lams = list(spec_L.isolated_values) + list(spec_L.kernel_cluster)
    matches, outliers = [], []
    for lam in lams:
        if gam.size == 0:
            outliers.append(lam)
            continue
        err = np.abs(gam + lam**2)
        j = int(np.argmin(err))
        if err[j] < tol:
            matches.append((complex(lam), complex(gam[j]), float(err[j])))
        else:
            outliers.append(complex(lam))
    return GammaCheck(tuple(matches), tuple(outliers), tol)


# ---------------------------------------------------------------------------
# drivers


@dataclass(frozen=True, eq=False)
class SpectrumSet:
    """Classified spectra of L, H+ and H- at one frequency."""

    omega: float
    L: Spectrum
    Hplus: Spectrum
    Hminus: Spectrum
    gamma: np.ndarray = field(repr=False, default=None)

    def counts(self) -> dict:
        return {
            "L_imag_pairs": self.L.count("imaginary_pair"),
            "L_real_pairs": self.L.count("real_pair"),
            "L_quartets": self.L.count("complex_quartet"),
            "Hplus_isolated": self.Hplus.n_isolated,
            "Hminus_isolated": self.Hminus.n_isolated,
        }


def product_spectrum(ops: OperatorSet, tol: Tolerances = DEFAULT_TOL,
                     diagnose: bool = True):
    """Eigenvalues lambda of L from the product block M+ = s3 H- s3 H+.

    Returns (lambda, gamma, spurious, kernel) where lambda lists both
    +-sqrt(-gamma).  The generalized kernel is a Jordan block, so rounding
    of size eps in gamma shows up as sqrt(eps) in lambda; the kernel test
    is therefore applied to gamma.
    """
    Mp, _ = ops.products
    if diagnose:
        gam, V = eig_general(Mp, vectors=True)
        far, tail = mode_diagnostics(ops.grid, V)
        bad = (far > tol.outer_mass) | (tail > tol.tail)
    else:
        gam = eig_general(Mp)
        bad = np.zeros(gam.size, bool)
    root = np.sqrt(-gam)
    kern = np.abs(gam) < tol.kernel
    lam = np.concatenate([root, -root])
    return lam, gam, np.concatenate([bad, bad]), np.concatenate([kern, kern])


def direct_spectrum(ops: OperatorSet, tol: Tolerances = DEFAULT_TOL,
                    diagnose: bool = True):
    """Eigenvalues of the full 4(N+1) operator L (verification path)."""
    if diagnose:
        lam, V = eig_general(ops.Lmat, vectors=True)
        far, tail = mode_diagnostics(ops.grid, V)
        bad = (far > tol.outer_mass) | (tail > tol.tail)
    else:
        lam = eig_general(ops.Lmat)
        bad = np.zeros(lam.size, bool)
    return lam, bad


def compute_spectra(ops: OperatorSet, tol: Tolerances = DEFAULT_TOL,
                    path: str = "product", diagnose: bool = True) -> SpectrumSet:
    w = ops.grid.weights
    hp = hermitian_eigenvalues(ops.Hplus, w).astype(complex)
    hm = hermitian_eigenvalues(ops.Hminus, w).astype(complex)
    if path == "product":
        lam, gam, bad, kern = product_spectrum(ops, tol, diagnose)
    elif path == "direct":
        lam, bad = direct_spectrum(ops, tol, diagnose)
        gam, kern = None, None
    else:
        raise ConfigError(f"unknown eigenvalue path {path!r}")
    return SpectrumSet(
        omega=ops.omega,
        L=classify(lam, ops.omega, "L", tol, bad, kern),
        Hplus=classify(hp, ops.omega, "Hplus", tol),
        Hminus=classify(hm, ops.omega, "Hminus", tol),
        gamma=gam)
