"""Symmetric quadric potential W(u, ubar, v, vbar) and its derivatives.

The potential is

    W = a1/2 (|u|^4 + |v|^4) + a2 |u|^2 |v|^2
        + a3 (|u|^2 + |v|^2)(v ubar + vbar u) + a4/2 (v ubar + vbar u)^2

All derivatives are Wirtinger derivatives: u and ubar are treated as
independent variables.  Every function here broadcasts over array-valued
``u`` and ``v`` so that a whole grid can be evaluated at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

# row order (ubar, u, vbar, v) of the printed 4x4 Hessian, taken from the
# symmetric table indexed (u, ubar, v, vbar)
_ROW_PERMUTATION = [1, 0, 3, 2]


@dataclass(frozen=True)
class PotentialParams:
    """Four real coefficients of the quadric potential."""

    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValueError(f"coefficient {name} must be finite, got {value!r}")

    @classmethod
    def kerr(cls, rho: float = 0.0) -> "PotentialParams":
        """Constant Kerr grating, a = (1, rho, 0, 0)."""
        return cls(1.0, float(rho), 0.0, 0.0)

    @classmethod
    def grating(cls, s: float = 0.0) -> "PotentialParams":
        """Mean-zero Kerr grating, a = (0, 0, 1, s)."""
        return cls(0.0, 0.0, 1.0, float(s))

    @property
    def coeffs(self) -> tuple[float, float, float, float]:
        return (self.a1, self.a2, self.a3, self.a4)

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PotentialParams":
        return cls(*(float(data[k]) for k in ("a1", "a2", "a3", "a4")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PotentialParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FieldPair:
    u: complex
    v: complex

    def __post_init__(self):
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise ValueError("field components must be finite")


def eval_W(fp: FieldPair, p: PotentialParams):
    u, v = np.asarray(fp.u), np.asarray(fp.v)
    uu = np.abs(u) ** 2
    vv = np.abs(v) ** 2
    m = 2.0 * np.real(v * np.conj(u))  # v ubar + vbar u
    return (0.5 * p.a1 * (uu**2 + vv**2) + p.a2 * uu * vv
            + p.a3 * (uu + vv) * m + 0.5 * p.a4 * m**2)


def grad_W(fp: FieldPair, p: PotentialParams):
    """Return (dW/d ubar, dW/d vbar)."""
    u, v = np.asarray(fp.u), np.asarray(fp.v)
    uc, vc = np.conj(u), np.conj(v)
    uu, vv = np.abs(u) ** 2, np.abs(v) ** 2
    a1, a2, a3, a4 = p.coeffs
    du = (a1 * uu * u + a2 * u * vv + a3 * ((2 * uu + vv) * v + u**2 * vc)
          + a4 * (v**2 * uc + vv * u))
    dv = (a1 * vv * v + a2 * v * uu + a3 * ((2 * vv + uu) * u + v**2 * uc)
          + a4 * (u**2 * vc + uu * v))
    return du, dv


def second_derivatives(fp: FieldPair, p: PotentialParams) -> np.ndarray:
    """Symmetric table of second Wirtinger derivatives.

    Returns an array of shape ``(..., 4, 4)`` whose entry ``[i, j]`` is
    d^2 W / dz_i dz_j with z = (u, ubar, v, vbar).
    """
    u, v = np.broadcast_arrays(np.asarray(fp.u, dtype=complex),
                               np.asarray(fp.v, dtype=complex))
    uc, vc = np.conj(u), np.conj(v)
    uu, vv = np.abs(u) ** 2, np.abs(v) ** 2
    m = v * uc + vc * u
    n = uu + vv
    a1, a2, a3, a4 = p.coeffs

    w_uub = 2 * a1 * uu + (a2 + a4) * vv + 2 * a3 * m
    w_vvb = 2 * a1 * vv + (a2 + a4) * uu + 2 * a3 * m
    w_ubub = a1 * u**2 + 2 * a3 * u * v + a4 * v**2
    w_vbvb = a1 * v**2 + 2 * a3 * u * v + a4 * u**2
    w_ubv = a2 * u * vc + 2 * a3 * n + a4 * (2 * v * uc + vc * u)
    w_ubvb = (a2 + a4) * u * v + a3 * (u**2 + v**2)

    table = np.empty(u.shape + (4, 4), dtype=complex)
    entries = {
        (0, 0): np.conj(w_ubub), (0, 1): w_uub, (0, 2): np.conj(w_ubvb),
        (0, 3): np.conj(w_ubv), (1, 1): w_ubub, (1, 2): w_ubv,
        (1, 3): w_ubvb, (2, 2): np.conj(w_vbvb), (2, 3): w_vvb,
        (3, 3): w_vbvb,
    }
    for (i, j), val in entries.items():
        table[..., i, j] = val
        table[..., j, i] = val
    return table


def hessian_full(fp: FieldPair, p: PotentialParams) -> np.ndarray:
    """4x4 potential matrix in the printed arrangement.

    Row i differentiates first by (ubar, u, vbar, v)[i], column j by
    (u, ubar, v, vbar)[j].  The result is Hermitian.
    """
    return second_derivatives(fp, p)[..., _ROW_PERMUTATION, :]


def reduced_potentials(u0, p: PotentialParams):
    """Dirac potentials (V+, V-) at v0 = conj(u0); shape ``(..., 2, 2)`` each."""
    u0 = np.asarray(u0, dtype=complex)
    d = second_derivatives(FieldPair(u0, np.conj(u0)), p)
    U, UB, V, VB = 0, 1, 2, 3
    out = []
    for sign in (1.0, -1.0):
        block = np.empty(u0.shape + (2, 2), dtype=complex)
        block[..., 0, 0] = d[..., UB, U] + sign * d[..., UB, VB]
        block[..., 0, 1] = d[..., UB, UB] + sign * d[..., UB, V]
        block[..., 1, 0] = d[..., U, U] + sign * d[..., U, VB]
        block[..., 1, 1] = d[..., UB, U] + sign * d[..., U, V]
        out.append(block)
    return out[0], out[1]


def homogeneous_coefficients(p: PotentialParams) -> np.ndarray:
    """Angular coefficients (A0, A1, A2) of W restricted to v = conj(u)."""
    return np.array([(p.a1 + p.a2 + p.a4) / 2.0, 2.0 * p.a3, p.a4 / 2.0])
