"""Collocation grids on a truncated line [-L, L].

Two node families are provided.  ``chebyshev`` is the classical
Gauss-Lobatto set cos(j pi / N) with Clenshaw-Curtis weights.  ``lobatto``
uses the Legendre-Gauss-Lobatto nodes, whose quadrature weights form a
summation-by-parts pair with the differentiation matrix:

    W D + D^T W = B,    B = diag(1, 0, ..., 0, -1)

so that the boundary-closed derivative ``D - W^{-1} B / 2`` is exactly
skew-adjoint in the weighted inner product.  The linearized operators are
assembled on that family.

Either family can be stretched by the map x = core * sinh(b xi) with
b = asinh(L / core), which puts more nodes in the soliton core and fewer in
the exponentially small tails.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft, special

MIN_POINTS = 8
FAMILIES = ("chebyshev", "lobatto")


@dataclass(frozen=True, eq=False)
class ChebGrid:
    """Nodes, differentiation matrix and quadrature weights on [-L, L].

    Nodes are ordered from +L down to -L.  ``diff`` is the plain collocation
    derivative, ``closed_diff`` adds the boundary penalty that makes the
    derivative skew-adjoint on the ``lobatto`` family.
    """

    N: int
    halfwidth: float
    nodes: np.ndarray
    diff: np.ndarray
    weights: np.ndarray
    family: str = "chebyshev"
    core: float | None = None
    reference: np.ndarray = field(repr=False, default=None)

    @property
    def size(self) -> int:
        return self.N + 1

    @property
    def closed_diff(self) -> np.ndarray:
        corr = np.zeros(self.size)
        corr[0] = 0.5 / self.weights[0]
        corr[-1] = -0.5 / self.weights[-1]
        return self.diff - np.diag(corr)

    def integrate(self, samples) -> complex:
        return np.sum(self.weights * np.asarray(samples), axis=-1)

    def describe(self) -> dict:
        return {"N": self.N, "halfwidth": self.halfwidth,
                "family": self.family, "core": self.core}


def _cheb_reference(N):
    j = np.arange(N + 1)
    # sine form keeps nodes exactly antisymmetric
    xi = np.sin(np.pi * (N - 2 * j) / (2 * N))
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** j
    X = xi[:, None] - xi[None, :]
    np.fill_diagonal(X, 1.0)
    D = np.outer(c, 1.0 / c) / X
    np.fill_diagonal(D, 0.0)
    return xi, D, clenshaw_curtis_weights(N)


def clenshaw_curtis_weights(N: int) -> np.ndarray:
    """Clenshaw-Curtis weights on the nodes cos(j pi / N), summing to 2."""
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    inner = theta[1:-1]
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k * k - 1)
        v -= np.cos(N * inner) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k * k - 1)
    w[1:-1] = 2.0 * v / N
    return w


def _lobatto_reference(N):
    interior = special.roots_jacobi(N - 1, 1.0, 1.0)[0][::-1]
    xi = np.concatenate(([1.0], interior, [-1.0]))
    xi = 0.5 * (xi - xi[::-1])
    PN = special.eval_legendre(N, xi)
    w = 2.0 / (N * (N + 1) * PN**2)
    w = 0.5 * (w + w[::-1])
    X = xi[:, None] - xi[None, :]
    np.fill_diagonal(X, 1.0)
    D = (PN[:, None] / PN[None, :]) / X
    np.fill_diagonal(D, 0.0)
    return xi, D, w


def build_grid(N: int, L: float, *, family: str = "chebyshev",
               core: float | None = None) -> ChebGrid:
    """Build a collocation grid with N+1 nodes on [-L, L].

    ``core`` switches on the sinh stretching with that length scale.
    """
    if int(N) != N or N < MIN_POINTS:
        raise ValueError(f"N must be an integer >= {MIN_POINTS}, got {N!r}")
    if not np.isfinite(L) or L <= 0:
        raise ValueError(f"halfwidth must be positive, got {L!r}")
    if family not in FAMILIES:
        raise ValueError(f"unknown node family {family!r}")
    if core is not None and not (np.isfinite(core) and core > 0):
        raise ValueError(f"core scale must be positive, got {core!r}")
    N = int(N)
    L = float(L)
    if family == "chebyshev":
        xi, D, w = _cheb_reference(N)
    else:
        xi, D, w = _lobatto_reference(N)
    # negative-sum trick: rows annihilate constants to rounding
    D[np.diag_indices_from(D)] = -D.sum(axis=1)

    if core is None:
        x = L * xi
        jac = np.full_like(xi, L)
    else:
        b = np.arcsinh(L / core)
        x = core * np.sinh(b * xi)
        jac = core * b * np.cosh(b * xi)
        x[0], x[-1] = L, -L
    x = 0.5 * (x - x[::-1])

    for arr in (x, D, w):
        arr.setflags(write=False)
    grid = ChebGrid(N=N, halfwidth=L, nodes=x, diff=D / jac[:, None],
                    weights=w * jac, family=family, core=core, reference=xi)
    for arr in (grid.diff, grid.weights):
        arr.setflags(write=False)
    return grid


def default_halfwidth(beta: float, factor: float = 20.0,
                      lo: float = 10.0, hi: float = 200.0) -> float:
    """Truncation L = factor / beta clamped to [lo, hi]."""
    return float(np.clip(factor / beta, lo, hi))


def spectral_derivative(grid: ChebGrid, samples) -> np.ndarray:
    samples = np.asarray(samples)
    if samples.shape[-1] != grid.size:
        raise ValueError(
            f"expected {grid.size} samples, got {samples.shape[-1]}")
    return samples @ grid.diff.T


def expansion_coefficients(grid: ChebGrid, samples) -> np.ndarray:
    """Polynomial coefficients of the interpolant in the reference variable.

    Chebyshev coefficients for the ``chebyshev`` family, Legendre
    coefficients for ``lobatto``.  Trailing axis indexes the degree.
    """
    f = np.asarray(samples, dtype=complex)
    N = grid.N
    if grid.family == "chebyshev":
        c = fft.dct(f.real, type=1, axis=-1) + 1j * fft.dct(f.imag, type=1, axis=-1)
        c = c / N
        c[..., 0] /= 2
        c[..., -1] /= 2
        return c
    xi = grid.reference
    w = 2.0 / (N * (N + 1) * special.eval_legendre(N, xi) ** 2)
    P = np.polynomial.legendre.legvander(xi, N)
    gamma = 2.0 / (2 * np.arange(N + 1) + 1)
    gamma[-1] = 2.0 / N  # discrete norm of the top Lobatto mode
    return (f * w) @ P / gamma


def resolution_tail(grid: ChebGrid, samples, fraction: float = 0.25) -> float:
    """Share of coefficient energy in the top ``fraction`` of degrees.

    Small for well-resolved smooth functions, O(1) for grid-scale noise.
    """
    c = expansion_coefficients(grid, samples)
    e = np.abs(c) ** 2
    total = e.sum(axis=-1)
    cut = int(np.ceil((1.0 - fraction) * (grid.N + 1)))
    tail = e[..., cut:].sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, tail / np.where(total > 0, total, 1), 0.0)


@dataclass(frozen=True)
class GridSpec:
    """Grid policy for operator assembly at a given frequency.

    ``halfwidth=None`` selects the automatic truncation
    ``default_halfwidth(beta, halfwidth_factor)`` with
    beta = sqrt(1 - omega^2).
    """

    N: int = 256
    halfwidth: float | None = None
    halfwidth_factor: float = 20.0
    family: str = "lobatto"
    core: float | None = 0.5

    def __post_init__(self):
        if int(self.N) != self.N or self.N < MIN_POINTS:
            raise ValueError(f"N must be an integer >= {MIN_POINTS}, got {self.N!r}")
        if self.halfwidth is not None and not (np.isfinite(self.halfwidth) and self.halfwidth > 0):
            raise ValueError(f"halfwidth must be positive, got {self.halfwidth!r}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown node family {self.family!r}")

    def halfwidth_for(self, omega: float) -> float:
        if self.halfwidth is not None:
            return float(self.halfwidth)
        return default_halfwidth(np.sqrt(1.0 - omega * omega), self.halfwidth_factor)

    def grid_for(self, omega: float) -> ChebGrid:
        return build_grid(self.N, self.halfwidth_for(omega), family=self.family, core=self.core)

    def to_dict(self) -> dict:
        return {"N": int(self.N), "halfwidth": self.halfwidth,
                "halfwidth_factor": self.halfwidth_factor,
                "family": self.family, "core": self.core}

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown grid keys: {sorted(unknown)}")
        return cls(**data)
