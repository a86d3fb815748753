"""Discretized energy operator, Dirac blocks and the linearized operator.

Vectors are stored component-major: all samples of U1, then U2, U3, U4.
The constant similarity S4 then acts as kron(S4, I) on the grid index and
splits the 4-component energy operator H into the Dirac pair (H+, H-).

Derivatives use the boundary-closed collocation matrix of the grid.  On the
``lobatto`` family this makes -i d/dx self-adjoint in the quadrature inner
product, so H, H+ and H- are exactly Hermitian after the diagonal
similarity by sqrt(weights).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .potential import FieldPair, PotentialParams, hessian_full, reduced_potentials
from .soliton import SolitonProfile
from .spectral_grid import ChebGrid, spectral_derivative

_R = 1.0 / math.sqrt(2.0)
S4 = np.array([[_R, 0, _R, 0],
               [0, _R, 0, _R],
               [0, _R, 0, -_R],
               [_R, 0, -_R, 0]])
S4.setflags(write=False)
SIGMA = np.array([1.0, -1.0, 1.0, -1.0])
SIGMA3 = np.array([1.0, -1.0])
SIGMA.setflags(write=False)
SIGMA3.setflags(write=False)

# reduction (U1, U2, U3, U4) -> +-(U4, U3, U2, U1)
_SWAP = np.fliplr(np.eye(4))


def _check(grid: ChebGrid, profile: SolitonProfile):
    if profile.u0.shape != (grid.size,):
        raise ConfigError(
            f"profile has {profile.u0.size} samples but the grid has {grid.size} nodes")
    if not np.allclose(profile.x_samples, grid.nodes, rtol=0, atol=1e-12 * grid.halfwidth):
        raise ConfigError("profile was sampled on a different grid")


def derivative_operator(grid: ChebGrid) -> np.ndarray:
    """Matrix for -i d/dx with the boundary closure."""
    return -1j * grid.closed_diff


def similarity(n: int) -> np.ndarray:
    """kron(S4, I_n): the block similarity on component-major vectors."""
    return np.kron(S4, np.eye(n))


def signature(n: int, blocks: int = 4) -> np.ndarray:
    """Diagonal of sigma (4 blocks) or sigma3 (2 blocks) on n nodes."""
    base = SIGMA if blocks == 4 else SIGMA3
    return np.repeat(base, n)


def _diag_blocks(pot: np.ndarray) -> np.ndarray:
    """Turn pointwise (n, m, m) matrices into an (m n, m n) block matrix."""
    n, m, _ = pot.shape
    out = np.zeros((m * n, m * n), dtype=complex)
    idx = np.arange(n)
    for i in range(m):
        for j in range(m):
            out[i * n + idx, j * n + idx] = pot[:, i, j]
    return out


def assemble_full(grid: ChebGrid, profile: SolitonProfile, p: PotentialParams,
                  omega: float | None = None) -> np.ndarray:
    """Energy operator H = D(d/dx) + V(x) of size 4(N+1)."""
    _check(grid, profile)
    om = profile.omega if omega is None else float(omega)
    n = grid.size
    K = derivative_operator(grid)
    I = np.eye(n)
    H = _diag_blocks(hessian_full(FieldPair(profile.u0, profile.v0), p))
    signs = (1, -1, -1, 1)  # omega - i d/dx, omega + i d/dx, ...
    for k, s in enumerate(signs):
        sl = slice(k * n, (k + 1) * n)
        H[sl, sl] += om * I + s * K
    for i, j in ((0, 2), (1, 3), (2, 0), (3, 1)):
        H[i * n:(i + 1) * n, j * n:(j + 1) * n] -= I
    return H


def assemble_blocks(grid: ChebGrid, profile: SolitonProfile, p: PotentialParams,
                    omega: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Dirac operators (H+, H-), each of size 2(N+1)."""
    _check(grid, profile)
    om = profile.omega if omega is None else float(omega)
    n = grid.size
    K = derivative_operator(grid)
    I = np.eye(n)
    Vp, Vm = reduced_potentials(profile.u0, p)
    out = []
    for pot, c in ((Vp, -1.0), (Vm, 1.0)):
        H = _diag_blocks(pot)
        H[:n, :n] += om * I + K
        H[n:, n:] += om * I - K
        H[:n, n:] += c * I
        H[n:, :n] += c * I
        out.append(H)
    return out[0], out[1]


def assemble_L(Hplus: np.ndarray, Hminus: np.ndarray) -> np.ndarray:
    """L = -i blockdiag(sigma3, sigma3) [[0, H-], [H+, 0]]."""
    if Hplus.shape != Hminus.shape or Hplus.shape[0] != Hplus.shape[1]:
        raise ConfigError("H+ and H- must be square and of equal size")
    m = Hplus.shape[0]
    if m % 2:
        raise ConfigError("Dirac blocks must have even size")
    s3 = signature(m // 2, 2)
    L = np.zeros((2 * m, 2 * m), dtype=complex)
    L[:m, m:] = -1j * s3[:, None] * Hminus
    L[m:, :m] = -1j * s3[:, None] * Hplus
    return L


def product_blocks(Hplus: np.ndarray, Hminus: np.ndarray):
    """(M+, M-) = (s3 H- s3 H+, s3 H+ s3 H-); eigenvalues gamma = -lambda^2."""
    if Hplus.shape != Hminus.shape:
        raise ConfigError("H+ and H- must have equal size")
    s3 = signature(Hplus.shape[0] // 2, 2)
    Mp = (s3[:, None] * Hminus) @ (s3[:, None] * Hplus)
    Mm = (s3[:, None] * Hplus) @ (s3[:, None] * Hminus)
    return Mp, Mm


def linearized_full(H_full: np.ndarray) -> np.ndarray:
    """-i sigma H in the original coordinates."""
    n = H_full.shape[0] // 4
    return -1j * signature(n)[:, None] * H_full


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """All operators at one frequency, assembled on one grid."""

    omega: float
    grid: ChebGrid = field(repr=False)
    profile: SolitonProfile = field(repr=False)
    potential: PotentialParams
    Hplus: np.ndarray = field(repr=False)
    Hminus: np.ndarray = field(repr=False)
    H_full: np.ndarray | None = field(default=None, repr=False)

    S4 = S4

    @property
    def sigma(self) -> np.ndarray:
        return signature(self.grid.size)

    @property
    def S(self) -> np.ndarray:
        return similarity(self.grid.size)

    @property
    def Lmat(self) -> np.ndarray:
        return assemble_L(self.Hplus, self.Hminus)

    @property
    def products(self):
        return product_blocks(self.Hplus, self.Hminus)

    def full(self) -> np.ndarray:
        if self.H_full is not None:
            return self.H_full
        return assemble_full(self.grid, self.profile, self.potential)


def build_operators(profile: SolitonProfile, p: PotentialParams,
                    grid: ChebGrid | None = None, full: bool = False) -> OperatorSet:
    grid = grid if grid is not None else profile.grid
    if grid is None:
        raise ConfigError("profile was not sampled on a collocation grid")
    Hp, Hm = assemble_blocks(grid, profile, p)
    Hf = assemble_full(grid, profile, p) if full else None
    return OperatorSet(omega=profile.omega, grid=grid, profile=profile,
                       potential=p, Hplus=Hp, Hminus=Hm, H_full=Hf)


# ---------------------------------------------------------------------------
# identities and kernel vectors


def blockdiag_residual(H_full, Hplus, Hminus) -> float:
    """max |S^T H S - blockdiag(H+, H-)|."""
    n = H_full.shape[0] // 4
    S = similarity(n)
    m = 2 * n
    target = np.zeros_like(H_full)
    target[:m, :m] = Hplus
    target[m:, m:] = Hminus
    return float(np.max(np.abs(S.T @ H_full @ S - target)))


def L_identity_residual(Lmat, Hplus, Hminus) -> float:
    """max |i L - blockdiag(s3, s3) [[0, H-], [H+, 0]]|."""
    m = Hplus.shape[0]
    s3 = signature(m // 2, 2)
    ref = np.zeros_like(Lmat)
    ref[:m, m:] = s3[:, None] * Hminus
    ref[m:, :m] = s3[:, None] * Hplus
    return float(np.max(np.abs(1j * Lmat - ref)))


def reduction_matrix(n: int, sign: int = 1) -> np.ndarray:
    return sign * np.kron(_SWAP, np.eye(n))


def reduction_residual(H_full) -> float:
    """max |P H - H P| over both reductions."""
    n = H_full.shape[0] // 4
    P = reduction_matrix(n)
    return float(np.max(np.abs(P @ H_full - H_full @ P)))


def kernel_vectors(profile: SolitonProfile, grid: ChebGrid | None = None):
    """Gauge and translation kernel vectors.

    Returns a dict with the full vectors sigma u0 and u0' (length 4(N+1))
    and the block vectors u0' for H+ and sigma3 u0 for H- (length 2(N+1)).
    """
    grid = grid if grid is not None else profile.grid
    u, v = profile.u0, profile.v0
    du = spectral_derivative(grid, u)
    dv = spectral_derivative(grid, v)
    return {
        "gauge": np.concatenate([u, -np.conj(u), v, -np.conj(v)]),
        "translation": np.concatenate([du, np.conj(du), dv, np.conj(dv)]),
        "plus": np.concatenate([du, np.conj(du)]),
        "minus": np.concatenate([u, -np.conj(u)]),
    }


def to_blocks(U: np.ndarray):
    """Split a full vector into the S-coordinates (V1, V2)."""
    n = U.shape[0] // 4
    W = similarity(n).T @ U
    return W[:2 * n], W[2 * n:]


def from_blocks(V1: np.ndarray, V2: np.ndarray) -> np.ndarray:
    n = V1.shape[0] // 2
    return similarity(n) @ np.concatenate([V1, V2])


def constraint_residuals(profile: SolitonProfile, eigvec, grid: ChebGrid | None = None):
    """Quadrature values of the two orthogonality constraints.

    ``eigvec`` is either a full vector U of length 4(N+1) or a pair (V1, V2)
    of block vectors; the reduced constraints are used in the latter case.
    """
    grid = grid if grid is not None else profile.grid
    n = grid.size
    u, v = profile.u0, profile.v0
    du = spectral_derivative(grid, u)
    if isinstance(eigvec, (tuple, list)):
        V1, V2 = (np.asarray(a) for a in eigvec)
        c1 = grid.integrate(np.conj(u) * V1[:n] + u * V1[n:])
        c2 = grid.integrate(np.conj(du) * V2[:n] - du * V2[n:])
        return complex(c1), complex(c2)
    U = np.asarray(eigvec).reshape(4, n)
    dv = spectral_derivative(grid, v)
    c1 = grid.integrate(np.conj(u) * U[0] + u * U[1] + np.conj(v) * U[2] + v * U[3])
    c2 = grid.integrate(np.conj(du) * U[0] - du * U[1] + np.conj(dv) * U[2] - dv * U[3])
    return complex(c1), complex(c2)


# ---------------------------------------------------------------------------
# binary dump


def dump_matrix(path, M: np.ndarray, name: str | None = None) -> tuple[Path, Path]:
    """Write M as row-major little-endian f64 (re, im interleaved) plus a
    JSON sidecar describing the layout."""
    path = Path(path)
    M = np.ascontiguousarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise ConfigError("only 2-d matrices can be dumped")
    inter = np.empty(M.shape + (2,), dtype="<f8")
    inter[..., 0] = M.real
    inter[..., 1] = M.imag
    path.write_bytes(inter.tobytes(order="C"))
    side = path.with_suffix(path.suffix + ".json")
    meta = {"name": name or path.stem, "rows": M.shape[0], "cols": M.shape[1],
            "dtype": "float64", "endianness": "little", "layout": "row-major",
            "complex": "interleaved re,im", "bytes": inter.nbytes}
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, side


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    raw = raw.reshape(meta["rows"], meta["cols"], 2)
    return raw[..., 0] + 1j * raw[..., 1]
