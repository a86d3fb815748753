"""Stationary gap-soliton profiles.

A stationary solution has v0 = conj(u0) and can be written as
u0 = sqrt(Q) exp(i Theta).  The phase solves Theta' = omega - cos(2 Theta)
in closed form, and the amplitude follows algebraically from
Q = (t - omega) / phi(t) with t = cos(2 Theta) and

    phi(t) = a4 t^2 + 2 a3 t + (a1 + a2) / 2.

Two branches exist: ``plus`` runs along t >= omega with phi > 0 and
``minus`` runs along t <= omega with phi < 0.  Which one is available for a
given set of coefficients is decided by :func:`classify_existence`.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .potential import FieldPair, PotentialParams, eval_W, grad_W
from .spectral_grid import ChebGrid, spectral_derivative

DISC_TOL = 1e-12
ZERO_TOL = 1e-12
BOUNDARY_WARN = 1e-8
BRANCHES = ("plus", "minus")
SOURCES = ("closed_form_1", "closed_form_2a", "closed_form_2b", "appendixA",
           "general_n")


@dataclass(frozen=True)
class SolitonParams:
    """Frequency omega in (-1, 1) with mu = (1-omega)/(1+omega) and
    beta = sqrt(1 - omega^2)."""

    omega: float

    def __post_init__(self):
        om = self.omega
        if not (math.isfinite(om) and -1.0 < om < 1.0):
            raise DomainError(f"omega must lie in the open gap (-1, 1), got {om!r}")

    @property
    def mu(self) -> float:
        return (1.0 - self.omega) / (1.0 + self.omega)

    @property
    def beta(self) -> float:
        return math.sqrt((1.0 - self.omega) * (1.0 + self.omega))


# ---------------------------------------------------------------------------
# existence


@dataclass(frozen=True)
class ExistenceReport:
    """Admissible frequency intervals for a quadric potential.

    ``omega_domain[k]`` is an open interval served by ``branch[k]``;
    ``boundary_behavior[k]`` gives what happens at its (lower, upper) ends.
    """

    A: float
    B: float
    C: float
    phi_roots: tuple
    case_label: str
    omega_domain: tuple
    branch: tuple
    boundary_behavior: tuple
    singular_branches: tuple = ()

    def branch_for(self, omega: float) -> str:
        for (lo, hi), br in zip(self.omega_domain, self.branch):
            if lo < omega < hi:
                return br
        raise DomainError(
            f"omega={omega!r} is outside the admissible domain "
            f"{self.describe_domain()} (case {self.case_label})")

    def admissible(self, omega: float) -> bool:
        return any(lo < omega < hi for lo, hi in self.omega_domain)

    def describe_domain(self) -> str:
        if not self.omega_domain:
            return "empty"
        return ", ".join(f"Q{'+' if b == 'plus' else '-'} on ({lo:g}, {hi:g})"
                         for (lo, hi), b in zip(self.omega_domain, self.branch))

    def to_dict(self) -> dict:
        return {
            "A": self.A, "B": self.B, "C": self.C,
            "phi_roots": list(self.phi_roots),
            "case_label": self.case_label,
            "omega_domain": [list(iv) for iv in self.omega_domain],
            "branch": list(self.branch),
            "boundary_behavior": [list(bb) for bb in self.boundary_behavior],
            "singular_branches": list(self.singular_branches),
        }


def phi_coefficients(p: PotentialParams) -> tuple[float, float, float]:
    """(c2, c1, c0) with phi(t) = c2 t^2 + c1 t + c0."""
    return p.a4, 2.0 * p.a3, 0.5 * (p.a1 + p.a2)


def phi(t, p: PotentialParams):
    c2, c1, c0 = phi_coefficients(p)
    return (c2 * t + c1) * t + c0


def _phi_roots(p: PotentialParams):
    """Real roots of phi, with a flag for a double root."""
    c2, c1, c0 = phi_coefficients(p)
    if c2 == 0.0:
        if c1 == 0.0:
            return [], False
        return [-c0 / c1 + 0.0], False
    disc = c1 * c1 - 4.0 * c2 * c0
    # relative test, so a vanishing leading coefficient is not a double root
    if abs(disc) <= DISC_TOL * (c1 * c1 + 4.0 * abs(c2 * c0)):
        return [-c1 / (2.0 * c2) + 0.0] * 2, True
    if disc < 0:
        return [], False
    q = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1 if c1 != 0 else 1.0))
    r = sorted([q / c2 + 0.0, c0 / q + 0.0])
    return r, False


def classify_existence(p: PotentialParams) -> ExistenceReport:
    """Decide on which frequency intervals decaying solitons exist."""
    if p.is_zero():
        raise ConfigError("all potential coefficients vanish: no nonlinearity")
    A = float(phi(-1.0, p))
    C = float(phi(1.0, p))
    B = p.a1 + p.a2 - 2.0 * p.a4
    roots, double = _phi_roots(p)
    inside = tuple(r for r in roots if -1.0 < r < 1.0)

    singular = tuple(b for b, val in (("plus", C), ("minus", A))
                     if abs(val) <= ZERO_TOL)

    def edge():
        return "unbounded" if double else "bounded-nondecaying"

    if singular:
        label = "special"
    elif A < 0 < C:
        label = "A1"
    elif A > 0 and C > 0:
        label = "A2"
    elif A < 0 and C < 0:
        label = "A3"
    else:
        label = "A4"

    domain, branch, behavior = [], [], []
    if C > ZERO_TOL:
        lo = max(inside) if inside else -1.0
        domain.append((lo, 1.0))
        branch.append("plus")
        behavior.append((edge() if inside else "decaying", "decaying"))
    if A < -ZERO_TOL:
        hi = min(inside) if inside else 1.0
        domain.append((-1.0, hi))
        branch.append("minus")
        behavior.append(("decaying", edge() if inside else "decaying"))

    order = np.argsort([iv[0] for iv in domain], kind="stable")
    return ExistenceReport(
        A=A, B=B, C=C, phi_roots=inside, case_label=label,
        omega_domain=tuple(domain[i] for i in order),
        branch=tuple(branch[i] for i in order),
        boundary_behavior=tuple(behavior[i] for i in order),
        singular_branches=singular)


# ---------------------------------------------------------------------------
# amplitude and phase


def _sech2(x, rate):
    # 1 / cosh^2 without overflow
    e = np.exp(-2.0 * np.abs(rate * np.asarray(x, dtype=float)))
    return 4.0 * e / (1.0 + e) ** 2


def _trajectory(x, sp: SolitonParams, branch: str, rate: float = None):
    """Return (t, t - omega) along the phase trajectory."""
    if branch not in BRANCHES:
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    mu = sp.mu
    s = _sech2(x, sp.beta if rate is None else rate)
    if branch == "plus":
        den = (1.0 + mu) - mu * s
        t = ((1.0 - mu) + mu * s) / den
        gap = (1.0 - sp.omega) * s / den
    else:
        den = (1.0 + mu) - s
        t = ((1.0 - mu) - s) / den
        gap = (sp.omega - 1.0) * s / den
    return t, gap


def amplitude_Q(x, sp: SolitonParams, p: PotentialParams, branch: str):
    """Amplitude Q = |u0|^2 on the given branch."""
    t, gap = _trajectory(x, sp, branch)
    den = phi(t, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        Q = gap / den
    bad = ~np.isfinite(Q) | (Q < 0) | ((den == 0) & (gap == 0))
    if branch == "plus":
        bad |= den <= 0
    else:
        bad |= den >= 0
    if np.any(bad):
        raise DomainError(
            f"amplitude on branch {branch!r} is singular or negative at "
            f"omega={sp.omega!r}; the branch is not admissible here")
    return Q if np.ndim(Q) else float(Q)


def phase_Theta(x, sp: SolitonParams, branch: str, rate: float = None):
    """Phase Theta(x) solving Theta' = omega - cos(2 Theta).

    Branch plus is odd with Theta(0) = 0.  Branch minus is continued
    smoothly through x = 0 where it takes the value -pi/2 (the one-sided
    limit from x > 0).
    """
    if branch not in BRANCHES:
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    b = sp.beta if rate is None else rate
    th = np.tanh(b * np.asarray(x, dtype=float))
    rmu = math.sqrt(sp.mu)
    if branch == "plus":
        out = -np.arctan(rmu * th)
    else:
        out = -0.5 * np.pi + np.arctan(th / rmu)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True, eq=False)
class SolitonProfile:
    """Sampled soliton u0 with v0 = conj(u0)."""

    omega: float
    x_samples: np.ndarray
    u0: np.ndarray
    v0: np.ndarray
    source: str
    branch: str = "plus"
    grid: ChebGrid | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def params(self) -> SolitonParams:
        return SolitonParams(self.omega)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "re_u0", "im_u0", "re_v0", "im_v0"])
        for row in zip(self.x_samples, self.u0.real, self.u0.imag,
                       self.v0.real, self.v0.imag):
            w.writerow([fmt(v) for v in row])
        return buf.getvalue()

    def to_dict(self, extra: dict | None = None) -> dict:
        d = {
            "omega": self.omega, "branch": self.branch, "source": self.source,
            "x": list(map(float, self.x_samples)),
            "re_u0": list(map(float, self.u0.real)),
            "im_u0": list(map(float, self.u0.imag)),
            "re_v0": list(map(float, self.v0.real)),
            "im_v0": list(map(float, self.v0.imag)),
        }
        d.update(self.meta)
        if extra:
            d.update(extra)
        return d

    def to_json(self, extra: dict | None = None) -> str:
        return dumps(self.to_dict(extra))


def fmt(v) -> str:
    """Number formatted with 15 significant digits."""
    return format(float(v), ".15g")


def _round15(obj):
    if isinstance(obj, float):
        return float(fmt(obj)) if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _round15(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round15(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round15(obj.item())
    return obj


def dumps(obj) -> str:
    """JSON with floats rounded to 15 significant digits."""
    return json.dumps(_round15(obj), indent=2, sort_keys=True)


def _make_profile(x, sp, u0, source, branch, grid, meta=None):
    u0 = np.asarray(u0, dtype=complex)
    u0.setflags(write=False)
    v0 = np.conj(u0)
    v0.setflags(write=False)
    xs = np.array(x, dtype=float)
    xs.setflags(write=False)
    return SolitonProfile(omega=sp.omega, x_samples=xs, u0=u0, v0=v0,
                          source=source, branch=branch, grid=grid,
                          meta=dict(meta or {}))


def _samples(grid):
    if isinstance(grid, ChebGrid):
        return grid.nodes, grid
    return np.asarray(grid, dtype=float), None


def soliton_closed_form(grid, sp: SolitonParams, model: str,
                        param: float = 0.0) -> SolitonProfile:
    """Explicit soliton for the Kerr (a = (1, rho, 0, 0)) or grating
    (a = (0, 0, 1, s)) potentials; ``param`` is rho or s."""
    x, g = _samples(grid)
    om, mu, b = sp.omega, sp.mu, sp.beta
    if model == "kerr":
        rho = float(param)
        if not rho > -1.0:
            raise DomainError(f"kerr model requires rho > -1, got {rho!r}")
        amp = math.sqrt(2.0 * (1.0 - om) / (1.0 + rho))
        # divide by cosh to stay finite far out
        th = np.tanh(b * x)
        u0 = amp * np.sqrt(_sech2(x, b)) / (1.0 + 1j * math.sqrt(mu) * th)
        return _make_profile(x, sp, u0, "closed_form_1", "plus", g,
                             {"model": "kerr", "rho": rho})
    if model != "grating":
        raise ConfigError(f"unknown closed-form model {model!r}")
    s = float(param)
    sech2 = _sech2(x, b)
    th = np.tanh(b * x)
    if om > 0:
        if not s > -1.0:
            raise DomainError(f"grating with omega > 0 requires s > -1, got {s!r}")
        # Delta_+ / cosh^4 with c = cosh^2
        k = (1.0 - mu) + mu * sech2
        delta = k * (0.5 * s * k + (1.0 + mu) - mu * sech2)
        u0 = math.sqrt(0.5 * (1.0 - om)) * (1.0 - 1j * math.sqrt(mu) * th) \
            * np.sqrt(sech2) / np.sqrt(delta)
        return _make_profile(x, sp, u0, "closed_form_2a", "plus", g,
                             {"model": "grating", "s": s})
    if om < 0:
        if not s < 1.0:
            raise DomainError(f"grating with omega < 0 requires s < 1, got {s!r}")
        k = sech2 + (mu - 1.0)
        delta = k * (0.5 * s * ((1.0 - mu) - sech2) + (1.0 + mu) - sech2)
        u0 = math.sqrt(0.5 * (1.0 - om)) * (th - 1j * math.sqrt(mu)) \
            * np.sqrt(sech2) / np.sqrt(delta)
        return _make_profile(x, sp, u0, "closed_form_2b", "minus", g,
                             {"model": "grating", "s": s})
    raise DomainError("grating model has no decaying soliton at omega = 0")


def soliton_appendixA(grid, sp: SolitonParams, p: PotentialParams,
                      branch: str | None = None) -> SolitonProfile:
    """Soliton u0 = sqrt(Q) exp(i Theta) for arbitrary quadric coefficients."""
    x, g = _samples(grid)
    report = classify_existence(p)
    chosen = report.branch_for(sp.omega)
    if branch is not None and branch != chosen:
        raise DomainError(f"branch {branch!r} is not admissible at omega={sp.omega!r}")
    Q = amplitude_Q(x, sp, p, chosen)
    theta = phase_Theta(x, sp, chosen)
    u0 = np.sqrt(Q) * np.exp(1j * theta)
    return _make_profile(x, sp, u0, "appendixA", chosen, g,
                         {"case": report.case_label, "a": list(p.coeffs)})


def soliton_for(grid, omega: float, p: PotentialParams) -> SolitonProfile:
    """Soliton at ``omega`` for potential ``p``.

    Uses the explicit formulas when ``p`` is a Kerr or grating potential
    they cover and the general reconstruction otherwise.
    """
    sp = SolitonParams(omega)
    a1, a2, a3, a4 = p.coeffs
    try:
        if a1 == 1.0 and a3 == 0.0 and a4 == 0.0 and a2 > -1.0:
            return soliton_closed_form(grid, sp, "kerr", a2)
        if a1 == 0.0 and a2 == 0.0 and a3 == 1.0 and omega != 0.0:
            return soliton_closed_form(grid, sp, "grating", a4)
    except DomainError:
        pass
    return soliton_appendixA(grid, sp, p)


def angular_sum(t, A_coeffs):
    """sum_s A_s cos(2 s Theta) written as sum_s A_s T_s(t), t = cos 2 Theta."""
    return np.polynomial.chebyshev.chebval(t, np.asarray(A_coeffs, dtype=float))


def soliton_general_n(grid, sp: SolitonParams, A_coeffs, n: int,
                      branch: str | None = None) -> SolitonProfile:
    """Soliton of a homogeneous potential of degree 2n.

    The phase runs at rate (n-1) beta and Q^(n-1) = (t - omega) / sum A_s T_s(t).
    """
    if int(n) != n or n < 2:
        raise ConfigError(f"n must be an integer >= 2, got {n!r}")
    n = int(n)
    A_coeffs = np.asarray(A_coeffs, dtype=float)
    if A_coeffs.shape != (n + 1,):
        raise ConfigError(f"expected {n + 1} angular coefficients, got {A_coeffs.shape}")
    x, g = _samples(grid)
    rate = (n - 1) * sp.beta
    candidates = BRANCHES if branch is None else (branch,)
    for br in candidates:
        t, gap = _trajectory(x, sp, br, rate)
        den = angular_sum(t, A_coeffs)
        ok = den > 0 if br == "plus" else den < 0
        if np.all(ok):
            break
    else:
        raise DomainError(
            f"angular denominator changes sign on every trajectory at "
            f"omega={sp.omega!r}: no decaying solution")
    Qn = gap / den
    Q = Qn ** (1.0 / (n - 1))
    theta = phase_Theta(x, sp, br, rate)
    u0 = np.sqrt(Q) * np.exp(1j * theta)
    return _make_profile(x, sp, u0, "general_n", br, g,
                         {"n": n, "A": list(A_coeffs)})


# ---------------------------------------------------------------------------
# diagnostics


def _grid_of(profile, grid):
    grid = grid if grid is not None else profile.grid
    if grid is None:
        raise ConfigError("profile was not sampled on a collocation grid")
    if grid.size != profile.u0.size:
        raise ConfigError("grid and profile sizes differ")
    return grid


def ode_residual(profile: SolitonProfile, p: PotentialParams,
                 grid: ChebGrid | None = None) -> float:
    """Max over interior nodes of the stationary-equation residuals."""
    grid = _grid_of(profile, grid)
    u, v = profile.u0, profile.v0
    du = spectral_derivative(grid, u)
    dv = spectral_derivative(grid, v)
    gu, gv = grad_W(FieldPair(u, v), p)
    om = profile.omega
    r1 = 1j * du - om * u + v - gu
    r2 = -1j * dv - om * v + u - gv
    r = np.abs(r1) + np.abs(r2)
    return float(np.max(r[1:-1]))


def planar_residual(profile: SolitonProfile, A_coeffs, n: int,
                    grid: ChebGrid | None = None) -> tuple[float, float]:
    """Interior residuals of the (Q, Theta) planar system of degree 2n."""
    grid = _grid_of(profile, grid)
    A = np.asarray(A_coeffs, dtype=float)
    s = np.arange(n + 1)
    Q = np.abs(profile.u0) ** 2
    theta = np.unwrap(np.angle(profile.u0))
    dQ = spectral_derivative(grid, Q).real
    dth = spectral_derivative(grid, theta).real
    sin_s = np.sin(2 * np.outer(theta, s))
    cos_s = np.cos(2 * np.outer(theta, s))
    rq = dQ - (2 * Q * np.sin(2 * theta) - 2 * Q**n * (sin_s @ (s * A)))
    rt = dth - (-profile.omega + np.cos(2 * theta) - n * Q ** (n - 1) * (cos_s @ A))
    return float(np.max(np.abs(rq[1:-1]))), float(np.max(np.abs(rt[1:-1])))


@dataclass(frozen=True)
class Conserved:
    Q_total: float
    P: float
    H: float
    Lambda: float

    def __iter__(self):
        return iter((self.Q_total, self.P, self.H, self.Lambda))


def conserved_quantities(profile: SolitonProfile, p: PotentialParams,
                         grid: ChebGrid | None = None) -> Conserved:
    """Power Q, momentum P, Hamiltonian H and Lambda = H + omega Q."""
    grid = _grid_of(profile, grid)
    u, v = profile.u0, profile.v0
    edge = max(abs(u[0]), abs(u[-1]), abs(v[0]), abs(v[-1]))
    if edge > BOUNDARY_WARN:
        warnings.warn(f"profile does not decay inside the domain "
                      f"(edge amplitude {edge:.3g}); enlarge the halfwidth",
                      RuntimeWarning, stacklevel=2)
    uc, vc = np.conj(u), np.conj(v)
    du, dv = spectral_derivative(grid, u), spectral_derivative(grid, v)
    duc, dvc = np.conj(du), np.conj(dv)
    q = np.abs(u) ** 2 + np.abs(v) ** 2
    pd = 0.5j * (u * duc - du * uc + v * dvc - dv * vc)
    h = (eval_W(FieldPair(u, v), p) - (v * uc + u * vc)
         + 0.5j * (u * duc - du * uc) - 0.5j * (v * dvc - dv * vc))
    Qt = float(grid.integrate(q).real)
    P = float(grid.integrate(pd).real)
    H = float(grid.integrate(h).real)
    return Conserved(Qt, P, H, H + profile.omega * Qt)
