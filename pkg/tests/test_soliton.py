import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gapspec.errors import ConfigError, DomainError
from gapspec.potential import PotentialParams
from gapspec.soliton import (SolitonParams, amplitude_Q, classify_existence,
                             conserved_quantities, phi,
                             ode_residual, phase_Theta, planar_residual, soliton_appendixA,
                             soliton_closed_form, soliton_for, soliton_general_n)
from gapspec.spectral_grid import GridSpec, build_grid, default_halfwidth

PARAM_TOL = 1e-14
RESIDUAL_TOL = 1e-8
DUAL_TOL = 1e-10
ODE_DERIV_TOL = 1e-6
CONSERVED_TOL = 1e-6
MOMENTUM_TOL = 1e-10
SLOPE_TOL = 0.05

KERR = PotentialParams.kerr(0.0)
GRATING = PotentialParams.grating(0.0)
omegas = st.floats(-0.95, 0.95)


def grid_for(omega, N=128):
    return GridSpec(N=N).grid_for(omega)


def _align(a, b):
    """Rotate b by the global phase that best matches a."""
    ph = np.vdot(b, a)
    return b * (ph / abs(ph)) if abs(ph) > 0 else b


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.999999, 0.999999))
def test_soliton_params_invariants(omega):
    sp = SolitonParams(omega)
    assert sp.mu > 0 and 0 < sp.beta <= 1
    assert abs(sp.mu * (1 + omega) - (1 - omega)) < PARAM_TOL
    assert abs(sp.beta**2 + omega**2 - 1) < PARAM_TOL


@pytest.mark.parametrize("omega", [-1.0, 1.0, 1.5, np.nan])
def test_soliton_params_reject(omega):
    with pytest.raises(DomainError):
        SolitonParams(omega)


def test_existence_kerr():
    rep = classify_existence(PotentialParams(1, 0, 0, 0))
    assert rep.A == 0.5 and rep.C == 0.5
    assert rep.phi_roots == ()
    assert rep.case_label == "A2"
    assert rep.omega_domain == ((-1.0, 1.0),) and rep.branch == ("plus",)


def test_existence_grating():
    rep = classify_existence(PotentialParams(0, 0, 1, 0))
    assert rep.phi_roots == (0.0,)
    assert rep.A == -2.0 and rep.C == 2.0
    assert rep.case_label == "A1"
    assert rep.omega_domain == ((-1.0, 0.0), (0.0, 1.0))
    assert rep.branch == ("minus", "plus")
    assert rep.branch_for(0.3) == "plus" and rep.branch_for(-0.3) == "minus"
    assert not rep.admissible(0.0)


def test_existence_double_root():
    rep = classify_existence(PotentialParams(0, 0, 0, 1))
    assert rep.A == 1.0 and rep.C == 1.0
    assert rep.phi_roots == (0.0, 0.0)
    assert rep.case_label == "A2"
    assert rep.omega_domain == ((0.0, 1.0),) and rep.branch == ("plus",)
    assert rep.boundary_behavior[0][0] == "unbounded"


def test_existence_negative_quartic():
    rep = classify_existence(PotentialParams(0, 0, 0, -1))
    assert rep.case_label == "A3"
    assert rep.omega_domain == ((-1.0, 0.0),) and rep.branch == ("minus",)


def test_existence_rejects_zero():
    with pytest.raises(ConfigError):
        classify_existence(PotentialParams(0, 0, 0, 0))


@settings(max_examples=60, deadline=None)
@given(*(st.floats(-3, 3) for _ in range(4)))
def test_existence_consistency(a1, a2, a3, a4):
    p = PotentialParams(a1, a2, a3, a4)
    if p.is_zero():
        return
    rep = classify_existence(p)
    assert rep.A == pytest.approx(phi(-1.0, p)) and rep.C == pytest.approx(phi(1.0, p))
    for r in rep.phi_roots:
        assert -1 < r < 1
        assert abs(phi(r, p)) < 1e-9 * (1 + abs(a1) + abs(a2) + abs(a3) + abs(a4))
    if rep.case_label == "A4":
        assert rep.A * rep.C <= 0 and not (rep.A < 0 < rep.C)
    for (lo, hi), br in zip(rep.omega_domain, rep.branch):
        om = 0.5 * (lo + hi)
        t = np.linspace(om, 1, 50) if br == "plus" else np.linspace(-1, om, 50)
        vals = phi(t[1:-1], p)
        assert np.all(vals > 0) if br == "plus" else np.all(vals < 0)


def test_amplitude_examples():
    assert amplitude_Q(0.0, SolitonParams(0.0), KERR, "plus") == pytest.approx(2.0)
    assert amplitude_Q(40.0, SolitonParams(0.0), KERR, "plus") < 1e-30
    # the grating amplitude at the centre is (1 - omega) / 2 for s = 0
    assert amplitude_Q(0.0, SolitonParams(0.5), GRATING, "plus") == pytest.approx(0.25)


def test_amplitude_matches_closed_form_at_centre():
    for om in (0.2, 0.5, 0.8):
        prof = soliton_closed_form(np.array([0.0]), SolitonParams(om), "grating", 0.0)
        assert abs(prof.u0[0]) ** 2 == pytest.approx(
            amplitude_Q(0.0, SolitonParams(om), GRATING, "plus"), abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(omegas, st.floats(0, 30))
def test_amplitude_even(omega, x):
    sp = SolitonParams(omega)
    assert amplitude_Q(x, sp, KERR, "plus") == amplitude_Q(-x, sp, KERR, "plus")


def test_amplitude_rejects_wrong_branch():
    with pytest.raises(DomainError):
        amplitude_Q(np.linspace(-10, 10, 21), SolitonParams(0.5), GRATING, "minus")
    with pytest.raises(ValueError):
        amplitude_Q(0.0, SolitonParams(0.5), GRATING, "sideways")


def test_phase_examples():
    assert phase_Theta(0.0, SolitonParams(0.3), "plus") == 0.0
    assert math.tan(phase_Theta(1.0, SolitonParams(0.0), "plus")) == pytest.approx(-math.tanh(1.0))
    for om in (-0.7, 0.0, 0.6):
        sp = SolitonParams(om)
        assert math.tan(phase_Theta(60.0 / sp.beta, sp, "plus")) == pytest.approx(-math.sqrt(sp.mu))
    assert phase_Theta(0.0, SolitonParams(-0.4), "minus") == pytest.approx(-math.pi / 2)


@pytest.mark.parametrize("branch", ["plus", "minus"])
@pytest.mark.parametrize("omega", [-0.8, -0.3, 0.4, 0.9])
def test_phase_solves_ode(omega, branch):
    sp = SolitonParams(omega)
    x = np.linspace(-6, 6, 41)
    h = 1e-5
    d = (phase_Theta(x + h, sp, branch) - phase_Theta(x - h, sp, branch)) / (2 * h)
    ref = omega - np.cos(2 * phase_Theta(x, sp, branch))
    assert np.max(np.abs(d - ref)) < ODE_DERIV_TOL


@settings(max_examples=40, deadline=None)
@given(omegas, st.floats(0, 20))
def test_phase_odd(omega, x):
    sp = SolitonParams(omega)
    assert phase_Theta(-x, sp, "plus") == -phase_Theta(x, sp, "plus")


def test_closed_form_examples():
    prof = soliton_closed_form(np.array([0.0]), SolitonParams(0.0), "kerr", 0.0)
    assert prof.u0[0] == pytest.approx(math.sqrt(2.0), abs=1e-15)
    prof = soliton_closed_form(np.array([0.0]), SolitonParams(0.5), "grating", 0.0)
    assert abs(prof.u0[0]) ** 2 == pytest.approx(0.25, abs=1e-15)
    prof = soliton_closed_form(np.array([0.0]), SolitonParams(-1 + 1e-12), "kerr", 0.0)
    assert abs(prof.u0[0]) == pytest.approx(2.0, abs=1e-10)


def test_algebraic_limit():
    x = np.linspace(-5, 5, 21)
    prof = soliton_closed_form(x, SolitonParams(-1 + 1e-10), "kerr", 0.3)
    ref = 2 / (math.sqrt(1.3) * (1 + 2j * x))
    assert np.max(np.abs(np.abs(prof.u0) - np.abs(ref))) < 1e-4


def test_closed_form_sources_and_branches():
    x = np.array([0.0, 1.0])
    assert soliton_closed_form(x, SolitonParams(0.3), "kerr").source == "closed_form_1"
    p = soliton_closed_form(x, SolitonParams(0.3), "grating", 0.2)
    assert (p.source, p.branch) == ("closed_form_2a", "plus")
    p = soliton_closed_form(x, SolitonParams(-0.3), "grating", 0.2)
    assert (p.source, p.branch) == ("closed_form_2b", "minus")


@pytest.mark.parametrize("omega,model,param", [
    (0.3, "kerr", -1.0), (0.3, "grating", -1.0), (-0.3, "grating", 1.0),
    (0.0, "grating", 0.0)])
def test_closed_form_rejects(omega, model, param):
    with pytest.raises(DomainError):
        soliton_closed_form(np.zeros(3), SolitonParams(omega), model, param)


def test_closed_form_unknown_model():
    with pytest.raises(ConfigError):
        soliton_closed_form(np.zeros(3), SolitonParams(0.1), "sine-gordon")


@settings(max_examples=30, deadline=None)
@given(omegas, st.floats(-0.9, 3.0))
def test_dual_formula_kerr(omega, rho):
    x = np.linspace(-40, 40, 201)
    sp = SolitonParams(omega)
    a = soliton_closed_form(x, sp, "kerr", rho).u0
    b = soliton_appendixA(x, sp, PotentialParams.kerr(rho)).u0
    assert np.max(np.abs(a - _align(a, b))) < DUAL_TOL


@settings(max_examples=30, deadline=None)
@given(st.floats(0.02, 0.95), st.floats(-0.9, 3.0), st.booleans())
def test_dual_formula_grating(w, s, negative):
    omega = -w if negative else w
    if negative and s >= 1.0:
        s = s - 2.0
    x = np.linspace(-40, 40, 201)
    sp = SolitonParams(omega)
    a = soliton_closed_form(x, sp, "grating", s).u0
    b = soliton_appendixA(x, sp, PotentialParams.grating(s)).u0
    assert np.max(np.abs(a - _align(a, b))) < DUAL_TOL


def test_phase_convention():
    x = np.linspace(-3, 3, 7)
    prof = soliton_appendixA(x, SolitonParams(0.4), GRATING)
    assert prof.u0[3].imag == 0 and prof.u0[3].real > 0
    prof = soliton_appendixA(x, SolitonParams(-0.4), GRATING)
    assert prof.branch == "minus" and prof.u0[3].imag < 0


def test_grating_nondecaying_limit():
    x = np.linspace(-3, 3, 25)
    dev = []
    for om in (1e-6, 1e-9, 1e-12):
        for w in (om, -om):
            prof = soliton_appendixA(x, SolitonParams(w), GRATING)
            dev.append(np.max(np.abs(np.abs(prof.u0) ** 2 - 0.5)))
    # uniform convergence: deviation shrinks with omega
    assert dev[-1] < 1e-9 and dev[-2] < 1e-9
    assert dev[0] > dev[2] > dev[4]


@pytest.mark.parametrize("omega", [-0.9, -0.5, 0.0, 0.5, 0.9])
def test_kerr_amplitude_matches_Q(omega):
    x = np.linspace(-30, 30, 121)
    sp = SolitonParams(omega)
    prof = soliton_closed_form(x, sp, "kerr", 0.0)
    assert np.max(np.abs(np.abs(prof.u0) ** 2 - amplitude_Q(x, sp, KERR, "plus"))) < DUAL_TOL


def test_profile_symmetries():
    x = np.linspace(-8, 8, 33)
    for p, om in ((KERR, 0.3), (GRATING, 0.6), (PotentialParams(1, 0.5, 0.3, 0.2), -0.2)):
        prof = soliton_appendixA(x, SolitonParams(om), p)
        assert np.array_equal(prof.v0, np.conj(prof.u0))
        assert np.max(np.abs(prof.u0[::-1] - np.conj(prof.u0))) < 1e-14
        q = np.abs(prof.u0[16:])
        assert np.all(np.diff(q) <= 1e-15)


def test_small_amplitude_scaling():
    eps = np.logspace(-3, -1, 7)
    amp = [np.abs(soliton_closed_form(np.array([0.0]), SolitonParams(1 - e), "kerr").u0[0])
           for e in eps]
    slope = np.polyfit(np.log(eps), np.log(amp), 1)[0]
    assert abs(slope - 0.5) < SLOPE_TOL


@pytest.mark.parametrize("p", [KERR, PotentialParams.kerr(0.7), GRATING,
                               PotentialParams.grating(0.5), PotentialParams(1, 0.5, 0.3, 0.2),
                               PotentialParams(0, 0, 0, -1)])
@pytest.mark.parametrize("omega", [-0.8, -0.4, 0.2, 0.7])
def test_residual_of_constructed_profiles(p, omega):
    rep = classify_existence(p)
    if not rep.admissible(omega):
        pytest.skip("omega outside the existence domain")
    prof = soliton_for(grid_for(omega), omega, p)
    assert ode_residual(prof, p) < RESIDUAL_TOL


def test_residual_examples():
    g = grid_for(0.0)
    prof = soliton_for(g, 0.0, KERR)
    assert ode_residual(prof, KERR) < 1e-9
    zero = soliton_for(g, 0.0, KERR)
    zero = type(zero)(0.0, zero.x_samples, np.zeros_like(zero.u0), np.zeros_like(zero.u0),
                      "closed_form_1", grid=g)
    assert ode_residual(zero, KERR) == 0.0
    bumped = type(prof)(0.0, prof.x_samples, 1.01 * prof.u0, 1.01 * prof.v0,
                        prof.source, grid=g)
    assert ode_residual(bumped, KERR) > 1e-3


def test_soliton_for_dispatch():
    g = grid_for(0.3, N=32)
    assert soliton_for(g, 0.3, KERR).source == "closed_form_1"
    assert soliton_for(g, 0.3, GRATING).source == "closed_form_2a"
    assert soliton_for(g, 0.3, PotentialParams(1, 0, 0.1, 0)).source == "appendixA"
    with pytest.raises(DomainError):
        soliton_for(g, 0.0, GRATING)


def test_general_n_reduces_to_quadric():
    x = np.linspace(-20, 20, 81)
    sp = SolitonParams(0.35)
    a = soliton_general_n(x, sp, [0.5, 0.0, 0.0], 2).u0
    b = soliton_appendixA(x, sp, KERR).u0
    assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.parametrize("n,A", [(2, [0.5, 0.0, 0.0]), (3, [1.0, 0.0, 0.0, 0.0]),
                                 (3, [1.0, 0.3, 0.1, 0.0]), (4, [0.8, 0.0, 0.2, 0.0, 0.0])])
@pytest.mark.parametrize("omega", [-0.5, 0.0, 0.6])
def test_general_n_planar_residual(n, A, omega):
    g = grid_for(omega, N=256)
    prof = soliton_general_n(g, SolitonParams(omega), A, n)
    rq, rt = planar_residual(prof, A, n)
    assert rq < ODE_DERIV_TOL and rt < ODE_DERIV_TOL


@pytest.mark.parametrize("n", [2, 3])
def test_general_n_decay_rate(n):
    sp = SolitonParams(0.4)
    x = np.array([10.0, 14.0]) / sp.beta
    Q = np.abs(soliton_general_n(x, sp, [1.0] + [0.0] * n, n).u0) ** 2
    slope = np.log(Q[1] / Q[0]) / (x[1] - x[0])
    assert abs(slope / (-2 * sp.beta) - 1) < SLOPE_TOL


def test_general_n_rejects():
    x = np.zeros(3)
    with pytest.raises(ConfigError):
        soliton_general_n(x, SolitonParams(0.1), [1.0, 0.0], 1)
    with pytest.raises(ConfigError):
        soliton_general_n(x, SolitonParams(0.1), [1.0, 0.0], 2)
    with pytest.raises(DomainError):
        soliton_general_n(np.linspace(-5, 5, 11), SolitonParams(0.1), [0.0, 0.0, 0.0], 2)


def test_conserved_quantities_kerr():
    omega = 0.0
    g = build_grid(128, default_halfwidth(1.0), family="lobatto", core=0.5)
    cq = conserved_quantities(soliton_for(g, omega, KERR), KERR)
    assert abs(cq.Q_total - 2 * math.pi) < CONSERVED_TOL
    assert abs(cq.P) < MOMENTUM_TOL
    assert cq.Lambda == pytest.approx(cq.H + omega * cq.Q_total)


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.9, 0.9))
def test_momentum_vanishes(omega):
    for p in (KERR, PotentialParams(1, 0.5, 0.3, 0.2)):
        if classify_existence(p).admissible(omega):
            prof = soliton_for(grid_for(omega), omega, p)
            assert abs(conserved_quantities(prof, p).P) < MOMENTUM_TOL


def test_conserved_quantities_zero_and_warning():
    g = grid_for(0.0, N=32)
    prof = soliton_for(g, 0.0, KERR)
    zero = type(prof)(0.0, prof.x_samples, np.zeros_like(prof.u0), np.zeros_like(prof.u0),
                      prof.source, grid=g)
    assert tuple(conserved_quantities(zero, KERR)) == (0.0, 0.0, 0.0, 0.0)
    short = build_grid(32, 2.0)
    with pytest.warns(RuntimeWarning):
        conserved_quantities(soliton_for(short, 0.0, KERR), KERR)


def test_profile_exports():
    x = np.array([-1.0, 0.0, 1.0])
    prof = soliton_closed_form(x, SolitonParams(0.2), "kerr")
    rows = prof.to_csv().splitlines()
    assert rows[0] == "x,re_u0,im_u0,re_v0,im_v0"
    assert len(rows) == 4
    d = json.loads(prof.to_json({"ode_residual": 1e-12}))
    assert d["omega"] == 0.2 and d["branch"] == "plus" and d["source"] == "closed_form_1"
    assert d["ode_residual"] == 1e-12


def test_profile_requires_grid_for_diagnostics():
    prof = soliton_closed_form(np.zeros(3), SolitonParams(0.2), "kerr")
    with pytest.raises(ConfigError):
        ode_residual(prof, KERR)
