"""Finite windows of lattice sequences and the discrete difference operators.

Sequences live on integer windows [-N, N]. The second-difference operator
(neg_laplacian), its square (bilaplacian), truncated Hamiltonians
H = bilaplacian + V, polynomially weighted norms, the alternating sign flip,
and the Fourier symbol of the fourth-difference operator are provided here.
All constructions are dense; windows at desk scale stay below a few thousand
sites.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

__all__ = [
    "LatticeVector",
    "WeightedNormSpec",
    "TruncatedOperator",
    "PotentialSpec",
    "apply_neg_laplacian",
    "apply_bilaplacian",
    "build_hamiltonian",
    "weighted_norm",
    "weighted_operator_norm",
    "sign_flip",
    "fourier_symbol",
]

SPEED_BOUND = 6.0 * np.sqrt(3.0)
"""Maximal group speed of the fourth-difference band, max |d/dx (2-2cos x)^2|."""


@dataclass(frozen=True)
class LatticeVector:
    """Complex-valued sample of a sequence on the window [-N, N].

    Parameters
    ----------
    window_radius : int
        Half-width N >= 1 of the window.
    values : ndarray
        Complex array of length 2N+1; entry i holds the value at site i-N.
    """

    window_radius: int
    values: np.ndarray

    def __post_init__(self):
        n = int(self.window_radius)
        if n < 1:
            raise ValueError("window_radius must be >= 1")
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 1 or vals.size != 2 * n + 1:
            raise ValueError(
                f"values must have length {2 * n + 1}, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "window_radius", n)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.window_radius, self.window_radius + 1)

    def __getitem__(self, n: int) -> complex:
        return complex(self.values[n + self.window_radius])

    @classmethod
    def zeros(cls, window_radius: int) -> "LatticeVector":
        return cls(window_radius, np.zeros(2 * window_radius + 1, dtype=complex))

    @classmethod
    def delta(cls, window_radius: int, site: int = 0) -> "LatticeVector":
        """Kronecker delta supported at the given site."""
        vals = np.zeros(2 * window_radius + 1, dtype=complex)
        vals[site + window_radius] = 1.0
        return cls(window_radius, vals)


@dataclass(frozen=True)
class WeightedNormSpec:
    """Weight exponent s for the polynomial weight <n>^s = (1 + n^2)^(s/2)."""

    s: float

    def __post_init__(self):
        if not np.isfinite(self.s):
            raise ValueError("weight exponent must be finite")


@dataclass(frozen=True)
class TruncatedOperator:
    """Dense operator on the window [-N, N].

    boundary_mode records how the infinite-lattice operator was truncated:
    "dirichlet" chops the matrix (zero coupling past the edges), "periodic"
    wraps it on the ring of 2N+1 sites.
    """

    window_radius: int
    entries: np.ndarray
    boundary_mode: str = "dirichlet"

    def __post_init__(self):
        n = int(self.window_radius)
        side = 2 * n + 1
        ent = np.asarray(self.entries)
        if ent.shape != (side, side):
            raise ValueError(f"entries must be {side}x{side}, got {ent.shape}")
        if self.boundary_mode not in ("dirichlet", "periodic"):
            raise ValueError(f"unknown boundary_mode {self.boundary_mode!r}")
        object.__setattr__(self, "entries", ent)
        object.__setattr__(self, "window_radius", n)


@dataclass(frozen=True)
class PotentialSpec:
    """Real potential of finite support with a declared decay exponent.

    Parameters
    ----------
    support : tuple of int
        Inclusive site interval (lo, hi) carrying the values.
    values : ndarray
        Real values on the support sites, at least one nonzero.
    beta : float, optional
        Declared decay exponent of the underlying infinite potential.
        Informational only.
    """

    support: Tuple[int, int]
    values: np.ndarray
    beta: float = float("inf")

    def __post_init__(self):
        lo, hi = int(self.support[0]), int(self.support[1])
        if lo > hi:
            raise ValueError("support interval is empty")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size != hi - lo + 1:
            raise ValueError(
                f"values must have length {hi - lo + 1}, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential values must be finite")
        if not np.any(vals != 0.0):
            raise ValueError("potential must have at least one nonzero entry")
        object.__setattr__(self, "support", (lo, hi))
        object.__setattr__(self, "values", vals)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.support[0], self.support[1] + 1)

    @property
    def support_radius(self) -> int:
        return int(max(abs(self.support[0]), abs(self.support[1])))

    def on_window(self, window_radius: int) -> np.ndarray:
        """Values embedded into the full window [-N, N] as a real array."""
        if window_radius < self.support_radius:
            raise ValueError("window smaller than the potential support")
        out = np.zeros(2 * window_radius + 1)
        lo, hi = self.support
        out[lo + window_radius : hi + window_radius + 1] = self.values
        return out

    @classmethod
    def delta(cls, coupling: float, site: int = 0, beta: float = float("inf")):
        return cls((site, site), np.array([coupling]), beta)


def _shift(values: np.ndarray, offset: int, boundary_mode: str) -> np.ndarray:
    """Array of psi(n + offset) under the given truncation."""
    if boundary_mode == "periodic":
        return np.roll(values, -offset)
    out = np.zeros_like(values)
    if offset >= 0:
        out[: values.size - offset] = values[offset:]
    else:
        out[-offset:] = values[: values.size + offset]
    return out


def apply_neg_laplacian(
    psi: LatticeVector, boundary_mode: str = "dirichlet"
) -> LatticeVector:
    """Second-difference operator, out(n) = -psi(n+1) - psi(n-1) + 2 psi(n).

    Out-of-window neighbours are zero in dirichlet mode and wrap in periodic
    mode.
    """
    v = psi.values
    out = 2.0 * v - _shift(v, 1, boundary_mode) - _shift(v, -1, boundary_mode)
    return LatticeVector(psi.window_radius, out)


def apply_bilaplacian(
    psi: LatticeVector, boundary_mode: str = "dirichlet"
) -> LatticeVector:
    """Fourth-difference operator, the square of apply_neg_laplacian.

    On interior sites this is the five-point stencil (1, -4, 6, -4, 1).
    """
    return apply_neg_laplacian(apply_neg_laplacian(psi, boundary_mode), boundary_mode)


def _neg_laplacian_matrix(window_radius: int, boundary_mode: str) -> np.ndarray:
    side = 2 * window_radius + 1
    a = 2.0 * np.eye(side)
    idx = np.arange(side - 1)
    a[idx, idx + 1] = -1.0
    a[idx + 1, idx] = -1.0
    if boundary_mode == "periodic":
        a[0, -1] = -1.0
        a[-1, 0] = -1.0
    return a


def _bilaplacian_matrix(window_radius: int, boundary_mode: str) -> np.ndarray:
    side = 2 * window_radius + 1
    a = 6.0 * np.eye(side)
    idx = np.arange(side)
    for off, val in ((1, -4.0), (2, 1.0)):
        if boundary_mode == "periodic":
            a[idx, (idx + off) % side] += val
            a[idx, (idx - off) % side] += val
        else:
            sub = idx[: side - off]
            a[sub, sub + off] = val
            a[sub + off, sub] = val
    return a


def build_hamiltonian(
    V: Optional[PotentialSpec], window_radius: int, boundary_mode: str = "dirichlet"
) -> TruncatedOperator:
    """Dense truncation of bilaplacian + diag(V) on [-N, N].

    Dirichlet mode chops the infinite pentadiagonal matrix; periodic mode
    wraps it on the ring. Requires the window to exceed the potential
    support by at least two sites so the stencil never straddles the
    support edge and the boundary at once.
    """
    if boundary_mode not in ("dirichlet", "periodic"):
        raise ValueError(f"unknown boundary_mode {boundary_mode!r}")
    if V is not None and window_radius < V.support_radius + 2:
        raise ValueError(
            "window_radius must be >= potential support radius + 2 "
            f"(need {V.support_radius + 2}, got {window_radius})"
        )
    h = _bilaplacian_matrix(window_radius, boundary_mode)
    if V is not None:
        np.fill_diagonal(h, np.diag(h) + V.on_window(window_radius))
    return TruncatedOperator(window_radius, h, boundary_mode)


def site_weights(window_radius: int, s: float) -> np.ndarray:
    """Diagonal of the weight <n>^s over the window."""
    n = np.arange(-window_radius, window_radius + 1)
    return (1.0 + n.astype(float) ** 2) ** (s / 2.0)


def weighted_norm(psi: LatticeVector, spec: WeightedNormSpec) -> float:
    """Weighted sequence norm (sum <n>^{2s} |psi(n)|^2)^{1/2} on the window."""
    w = site_weights(psi.window_radius, spec.s)
    return float(np.sqrt(np.sum((w * np.abs(psi.values)) ** 2)))


def weighted_operator_norm(K, s: float) -> float:
    """Largest singular value of D^{-s} K D^{-s} with D = diag(<n>).

    Measures K as an operator from the weight-s space to the weight-(-s)
    space. Accepts a TruncatedOperator or a dense square array centred on
    its window.
    """
    if isinstance(K, TruncatedOperator):
        entries = K.entries
        radius = K.window_radius
    else:
        entries = np.asarray(K)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("operator must be a square matrix")
        if entries.shape[0] % 2 != 1:
            raise ValueError("window must be symmetric (odd side length)")
        radius = entries.shape[0] // 2
    d = site_weights(radius, -s)
    return float(np.linalg.norm(d[:, None] * entries * d[None, :], 2))


def sign_flip(psi: LatticeVector) -> LatticeVector:
    """Pointwise multiplication by (-1)^n. An involution."""
    signs = np.where(psi.sites % 2 == 0, 1.0, -1.0)
    return LatticeVector(psi.window_radius, signs * psi.values)


def fourier_symbol(x):
    """Symbol (2 - 2 cos x)^2 of the fourth-difference operator, x in [-pi, pi]."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > np.pi + 1e-12):
        raise ValueError("x must lie in [-pi, pi]")
    out = (2.0 - 2.0 * np.cos(xa)) ** 2
    return out if out.ndim else float(out)
