import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gapspec.spectral_grid import (FAMILIES, GridSpec, build_grid, clenshaw_curtis_weights,
                                   default_halfwidth, expansion_coefficients,
                                   resolution_tail, spectral_derivative)

ROWSUM_TOL = 1e-12
IDENTITY_TOL = 1e-10
WEIGHT_TOL = 1e-12
SIN_TOL = 1e-8
SECH_TOL = 1e-9
PARITY_TOL = 1e-10
QUAD_TOL = 1e-8
CONVERGENCE_GAIN = 1e3

# the production grid: Legendre-Lobatto nodes under the sinh stretching
PRODUCTION = dict(family="lobatto", core=0.5)


def _sech_error(grid):
    x = grid.nodes
    ref = -np.tanh(x) / np.cosh(x)
    return np.max(np.abs(spectral_derivative(grid, 1 / np.cosh(x)) - ref))


@pytest.mark.parametrize("N", [8, 9, 16, 33, 64])
def test_chebyshev_nodes(N):
    L = 3.5
    g = build_grid(N, L)
    j = np.arange(N + 1)
    np.testing.assert_allclose(g.nodes, L * np.cos(j * np.pi / N), atol=4e-16 * L)
    assert np.all(np.diff(g.nodes) < 0)
    assert np.array_equal(g.nodes, -g.nodes[::-1])


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("core", [None, 0.5])
@pytest.mark.parametrize("N", [8, 31, 64, 128])
def test_grid_invariants(family, core, N):
    L = 10.0
    g = build_grid(N, L, family=family, core=core)
    scale = np.max(np.abs(g.diff))
    assert np.max(np.abs(g.diff.sum(axis=1))) < ROWSUM_TOL * scale
    if core is None:
        # x and the Jacobian are polynomial in the reference variable only
        # without stretching; otherwise both identities are spectral, not exact
        assert np.max(np.abs(g.diff @ g.nodes - 1.0)) < IDENTITY_TOL
        assert abs(g.weights.sum() - 2 * L) < WEIGHT_TOL * L
    elif N >= 64:
        assert abs(g.weights.sum() - 2 * L) < 1e-10 * L
    assert np.array_equal(g.nodes, -g.nodes[::-1])
    assert g.nodes[0] == L and g.nodes[-1] == -L


def test_constants_are_annihilated():
    g = build_grid(8, 1.0)
    assert np.max(np.abs(g.diff @ np.full(9, 3.7))) < ROWSUM_TOL * np.max(np.abs(g.diff))


def test_sine_derivative():
    g = build_grid(64, 10.0)
    err = np.abs(spectral_derivative(g, np.sin(g.nodes)) - np.cos(g.nodes))
    assert np.max(err[1:-1]) < SIN_TOL


def test_derivative_of_nodes_is_one():
    g = build_grid(40, 2.0, family="lobatto")
    np.testing.assert_allclose(spectral_derivative(g, g.nodes), np.ones(41), atol=IDENTITY_TOL)
    # under stretching x is no longer a polynomial, only spectrally accurate
    g = build_grid(128, 10.0, **PRODUCTION)
    np.testing.assert_allclose(spectral_derivative(g, g.nodes), np.ones(129), atol=SIN_TOL)


def test_sech_derivative_on_production_grid():
    assert _sech_error(build_grid(128, 12.0, **PRODUCTION)) < SECH_TOL


@pytest.mark.parametrize("family,core", [("chebyshev", None), ("lobatto", None),
                                         ("lobatto", 0.5)])
def test_geometric_convergence(family, core):
    e64 = _sech_error(build_grid(64, 12.0, family=family, core=core))
    e128 = _sech_error(build_grid(128, 12.0, family=family, core=core))
    assert e64 / e128 > CONVERGENCE_GAIN


@pytest.mark.parametrize("family", FAMILIES)
def test_parity_preservation(family):
    g = build_grid(96, 8.0, family=family, core=0.5)
    x = g.nodes
    for f, parity in ((np.exp(-x**2), 1), (x * np.exp(-x**2), -1)):
        d = spectral_derivative(g, f)
        # derivative flips the parity
        assert np.max(np.abs(d + parity * d[::-1])) < PARITY_TOL


def test_quadrature_sech():
    g = build_grid(128, 12.0, **PRODUCTION)
    assert abs(g.integrate(1 / np.cosh(2 * g.nodes)) - np.pi / 2) < QUAD_TOL


@pytest.mark.parametrize("N", [8, 9, 20, 21])
def test_clenshaw_curtis_exact_on_polynomials(N):
    w = clenshaw_curtis_weights(N)
    x = np.cos(np.pi * np.arange(N + 1) / N)
    for k in range(N + 1):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert w @ x**k == pytest.approx(exact, abs=1e-13)


def test_lobatto_summation_by_parts():
    g = build_grid(24, 5.0, family="lobatto", core=0.7)
    W = np.diag(g.weights)
    B = np.zeros((25, 25))
    B[0, 0], B[-1, -1] = 1.0, -1.0
    sbp = W @ g.diff + g.diff.T @ W
    assert np.max(np.abs(sbp - B)) < 1e-11
    Kc = np.sqrt(g.weights)[:, None] * g.closed_diff / np.sqrt(g.weights)[None, :]
    assert np.max(np.abs(Kc + Kc.T)) < 1e-10


@pytest.mark.parametrize("family", FAMILIES)
def test_expansion_coefficients_recover_polynomial(family):
    g = build_grid(12, 1.0, family=family)
    c = np.zeros(13)
    c[[0, 3, 7]] = (1.0, -2.0, 0.5)
    if family == "chebyshev":
        f = np.polynomial.chebyshev.chebval(g.reference, c)
    else:
        f = np.polynomial.legendre.legval(g.reference, c)
    np.testing.assert_allclose(expansion_coefficients(g, f).real, c, atol=1e-12)


def test_resolution_tail_separates_smooth_from_noise():
    g = build_grid(128, 10.0, **PRODUCTION)
    smooth = np.exp(-g.nodes**2)
    noise = np.random.default_rng(0).normal(size=129)
    assert resolution_tail(g, smooth) < 1e-12
    assert resolution_tail(g, noise) > 0.1


@pytest.mark.parametrize("bad", [dict(N=7, L=1.0), dict(N=8, L=0.0), dict(N=8, L=-1.0),
                                 dict(N=8.5, L=1.0), dict(N=8, L=np.inf)])
def test_build_grid_rejects(bad):
    with pytest.raises(ValueError):
        build_grid(bad["N"], bad["L"])


def test_build_grid_rejects_family_and_core():
    with pytest.raises(ValueError):
        build_grid(16, 1.0, family="fourier")
    with pytest.raises(ValueError):
        build_grid(16, 1.0, core=0.0)


def test_spectral_derivative_length_mismatch():
    with pytest.raises(ValueError):
        spectral_derivative(build_grid(16, 1.0), np.zeros(16))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 1.0))
def test_default_halfwidth_clamped(beta):
    L = default_halfwidth(beta)
    assert 10.0 <= L <= 200.0
    assert L == pytest.approx(min(max(20.0 / beta, 10.0), 200.0))


def test_grid_spec_policies():
    spec = GridSpec()
    assert spec.halfwidth_for(0.0) == 20.0
    assert spec.halfwidth_for(0.6) == pytest.approx(25.0)
    fixed = GridSpec(N=64, halfwidth=64.0)
    assert fixed.halfwidth_for(-0.95) == 64.0
    g = fixed.grid_for(0.3)
    assert g.N == 64 and g.halfwidth == 64.0 and g.family == "lobatto"


def test_grid_spec_round_trip_and_validation():
    spec = GridSpec(N=96, halfwidth=30.0, family="chebyshev", core=None)
    assert GridSpec.from_dict(spec.to_dict()) == spec
    for bad in (dict(N=4), dict(halfwidth=-1.0), dict(family="x")):
        with pytest.raises(ValueError):
            GridSpec(**bad)
    with pytest.raises(ValueError):
        GridSpec.from_dict({"N": 64, "bogus": 1})


def test_grid_arrays_are_read_only():
    g = build_grid(16, 1.0)
    with pytest.raises(ValueError):
        g.nodes[0] = 0.0
    with pytest.raises(ValueError):
        g.diff[0, 0] = 0.0
