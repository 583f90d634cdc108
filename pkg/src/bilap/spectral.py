"""Spectral analysis of the perturbed fourth-difference operator.

A real finitely supported potential V factors as V = u v^2 with v = sqrt|V|
and u = sign V on its support. The sandwich M(mu) = U + v R(mu^4) v, with R
the free boundary resolvent, controls the perturbed resolvent through

    R_V = R - R v M^{-1} v R,

all restricted to the support sites. Threshold behaviour at the band edges
is governed by M's compression to explicit subspaces: the complement of the
potential's zeroth and first moments at the lower edge, and of the
alternating-sign moment at the upper edge. Bound and embedded spectrum of
window truncations is computed by dense diagonalisation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .expansion import coeff_sixteen, coeff_zero
from .lattice import LatticeVector, PotentialSpec, build_hamiltonian
from .resolvent import SpectralParam, boundary_kernel_plus

__all__ = [
    "BirmanSchwingerSystem",
    "ProjectionSet",
    "RegularPointReport",
    "MinvProbeReport",
    "EmbeddedScanReport",
    "decompose_potential",
    "build_M",
    "m_matrix_grid",
    "build_projections",
    "build_T0",
    "build_T0_tilde",
    "regular_point_check",
    "perturbed_resolvent_boundary",
    "minv_expansion_probe",
    "discrete_eigs",
    "embedded_eig_scan",
    "BAND_MARGIN",
]

BAND_MARGIN = 1e-6
"""Margin delta_b separating "outside the band" from [0 - delta_b, 16 + delta_b]."""

_LOCALIZATION_RATIO = 0.999


@dataclass(frozen=True)
class BirmanSchwingerSystem:
    """Factorised potential data on its nonzero support sites.

    Attributes
    ----------
    sites : ndarray
        Integer sites where the potential is nonzero, increasing.
    v : ndarray
        Nonnegative factor sqrt|V| on those sites.
    u : ndarray
        Signs of V there, entries +-1.
    """

    sites: np.ndarray
    v: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        sites = np.asarray(self.sites, dtype=int)
        v = np.asarray(self.v, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if not (sites.shape == v.shape == u.shape) or sites.ndim != 1:
            raise ValueError("sites, v, u must be 1-d arrays of equal length")
        if sites.size == 0:
            raise ValueError("support is empty")
        if np.any(v <= 0):
            raise ValueError("v must be strictly positive on the kept sites")
        if not np.all(np.isin(u, (-1.0, 1.0))):
            raise ValueError("u entries must be +-1")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "u", u)

    @property
    def dim(self) -> int:
        return int(self.sites.size)

    def potential_values(self) -> np.ndarray:
        """Reconstructed potential u * v**2 on the support sites."""
        return self.u * self.v**2


@dataclass(frozen=True)
class ProjectionSet:
    """Orthogonal projections on the support space used at the band edges.

    P projects onto the v direction and Q is its complement. S0 projects
    onto the complement of span{v, n v}. Ptilde and Qtilde are the analogues
    for the alternating vector (-1)^n v. notes records degeneracies such as
    a single-site support, where S0 is the zero projection.
    """

    P: np.ndarray
    Q: np.ndarray
    S0: np.ndarray
    Ptilde: np.ndarray
    Qtilde: np.ndarray
    notes: Tuple[str, ...] = ()


@dataclass(frozen=True)
class RegularPointReport:
    """Outcome of a threshold regularity check.

    smallest_singular_value is +inf when the tested compression acts on the
    zero subspace, in which case the threshold is vacuously regular.
    """

    threshold: str
    smallest_singular_value: float
    is_regular: bool
    tolerance_used: float


@dataclass(frozen=True)
class MinvProbeReport:
    """Measured behaviour of M(mu)^{-1} approaching a band edge.

    grid holds distances to the edge. leakage_norms are the norms of the
    inverse compressed against the edge subspace, whose log-log slope
    against the grid is leakage_slope. skipped is set (with a diagnostic)
    when the threshold is not regular and the probe does not apply.
    """

    threshold: str
    grid: np.ndarray
    inverse_norms: np.ndarray
    leakage_norms: np.ndarray
    sup_inverse_norm: float
    leakage_slope: Optional[float]
    skipped: bool = False
    diagnostic: str = ""


@dataclass(frozen=True)
class EmbeddedScanReport:
    """Window-stability scan for eigenvalues inside the open band.

    candidates maps each window radius to the interior localized
    eigenvalues found there; stable_candidates are those matching across
    every window to 1e-6.
    """

    window_radii: Tuple[int, ...]
    candidates: dict
    stable_candidates: Tuple[float, ...]
    verdict: str


def decompose_potential(V: PotentialSpec) -> BirmanSchwingerSystem:
    """Factor a potential into (sites, v, u), dropping zero entries."""
    keep = V.values != 0.0
    vals = V.values[keep]
    return BirmanSchwingerSystem(
        sites=V.sites[keep], v=np.sqrt(np.abs(vals)), u=np.sign(vals)
    )


def _separations(sys: BirmanSchwingerSystem) -> np.ndarray:
    return np.abs(sys.sites[:, None] - sys.sites[None, :])


def m_matrix_grid(
    mu: np.ndarray, sys: BirmanSchwingerSystem, one_minus_q: np.ndarray | None = None
) -> np.ndarray:
    """Plus-side matrices U + v R(mu^4) v over a grid, shape (len(mu), d, d)."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    r = boundary_kernel_plus(mu, _separations(sys), one_minus_q=one_minus_q)
    m = r * np.outer(sys.v, sys.v)[None, :, :]
    m[:, np.arange(sys.dim), np.arange(sys.dim)] += sys.u[None, :]
    return m


def build_M(p: SpectralParam, sys: BirmanSchwingerSystem) -> np.ndarray:
    """Sandwich matrix U + v R(mu^4) v at one spectral point, complex symmetric."""
    m = m_matrix_grid(np.array([p.mu]), sys)[0]
    return m if p.sign == "plus" else m.conj()


def build_projections(sys: BirmanSchwingerSystem) -> ProjectionSet:
    """Orthogonal projections attached to the potential factorisation."""
    v = sys.v
    nv2 = float(v @ v)
    P = np.outer(v, v) / nv2
    Q = np.eye(sys.dim) - P
    alt = np.where(sys.sites % 2 == 0, 1.0, -1.0) * v
    Pt = np.outer(alt, alt) / nv2
    Qt = np.eye(sys.dim) - Pt

    notes: List[str] = []
    moments = np.column_stack([v, sys.sites * v])
    q, r = np.linalg.qr(moments)
    rank = int(np.sum(np.abs(np.diag(r)) > 1e-12 * np.abs(r[0, 0])))
    span = q[:, :rank]
    S0 = np.eye(sys.dim) - span @ span.T
    if rank < 2:
        notes.append(
            "first moment parallel to v (single-site or degenerate support); "
            "S0 projects onto the complement of v alone"
        )
    if sys.dim == 1:
        notes.append("single-site support: P is the identity and Q = 0")
    return ProjectionSet(P=P, Q=Q, S0=S0, Ptilde=Pt, Qtilde=Qt, notes=tuple(notes))


def build_T0(sys: BirmanSchwingerSystem) -> np.ndarray:
    """Lower-edge limit operator U + v G0 v, real symmetric.

    G0 is the order-zero expansion coefficient of the boundary kernel,
    (k^3 - k)/12 at separation k.
    """
    sep = _separations(sys)
    g0 = np.vectorize(lambda k: coeff_zero(0, "plus", int(k), 0).real)(sep)
    return np.diag(sys.u) + np.outer(sys.v, sys.v) * g0


def build_T0_tilde(sys: BirmanSchwingerSystem) -> np.ndarray:
    """Upper-edge limit operator U + v G0~ v, real symmetric."""
    sep = _separations(sys)
    g0 = np.vectorize(lambda k: coeff_sixteen(0, "plus", int(k), 0).real)(sep)
    return np.diag(sys.u) + np.outer(sys.v, sys.v) * g0


def _edge_data(sys: BirmanSchwingerSystem, threshold: str):
    """Limit operator and edge projection for a threshold name."""
    proj = build_projections(sys)
    if threshold == "zero":
        return build_T0(sys), proj.S0
    if threshold == "sixteen":
        return build_T0_tilde(sys), proj.Qtilde
    raise ValueError(f"threshold must be 'zero' or 'sixteen', got {threshold!r}")


def _range_basis(projection: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the range of an orthogonal projection."""
    ev, vecs = np.linalg.eigh(projection)
    return vecs[:, ev > 0.5]


def regular_point_check(
    sys: BirmanSchwingerSystem, threshold: str, tol: float | None = None
) -> RegularPointReport:
    """Test invertibility of the limit operator compressed to the edge subspace.

    The threshold is regular when the compression of the limit operator to
    the range of the edge projection has smallest singular value above tol
    (default 1e-8 times the limit operator norm). An empty range makes the
    threshold vacuously regular with singular value +inf.
    """
    T, proj = _edge_data(sys, threshold)
    if tol is None:
        tol = 1e-8 * float(np.linalg.norm(T, 2))
    basis = _range_basis(proj)
    if basis.shape[1] == 0:
        return RegularPointReport(threshold, float("inf"), True, tol)
    compressed = basis.T @ T @ basis
    sv = float(np.linalg.svd(compressed, compute_uv=False).min())
    return RegularPointReport(threshold, sv, sv > tol, tol)


def perturbed_resolvent_boundary(
    p: SpectralParam,
    V: Optional[PotentialSpec],
    n: int,
    m: int,
    singular_tol: float | None = None,
) -> complex:
    """Boundary value of the perturbed resolvent at band energy mu**4.

    Evaluates R - R v M^{-1} v R at sites (n, m). A potential of None (or
    identically zero support after decomposition) returns the free kernel.
    Refuses to evaluate when M is numerically singular, naming the energy,
    since that signals a possible embedded eigenvalue.
    """
    mu_arr = np.array([p.mu])
    if V is None:
        val = complex(boundary_kernel_plus(mu_arr, np.array([abs(n - m)]))[0, 0])
        return val if p.sign == "plus" else val.conjugate()
    sys = decompose_potential(V)
    M = m_matrix_grid(mu_arr, sys)[0]
    svals = np.linalg.svd(M, compute_uv=False)
    if singular_tol is None:
        singular_tol = 1e-10 * float(svals.max())
    if float(svals.min()) <= singular_tol:
        raise ValueError(
            f"sandwich matrix singular at energy mu^4 = {p.mu**4:.6g}: "
            "possible embedded eigenvalue, evaluation refused"
        )
    rn = boundary_kernel_plus(mu_arr, np.abs(n - sys.sites))[0]
    rm = boundary_kernel_plus(mu_arr, np.abs(sys.sites - m))[0]
    free = complex(boundary_kernel_plus(mu_arr, np.array([abs(n - m)]))[0, 0])
    corr = rn * sys.v @ np.linalg.solve(M, sys.v * rm)
    val = free - complex(corr)
    return val if p.sign == "plus" else val.conjugate()


def minv_expansion_probe(
    sys: BirmanSchwingerSystem, threshold: str, mu_grid: np.ndarray
) -> MinvProbeReport:
    """Track M(mu)^{-1} on a grid of distances approaching a band edge.

    At a regular edge the inverse norm stays bounded while its compression
    against the edge subspace (I - S0 at the lower edge, I - Qtilde at the
    upper) decays; the report carries both norms and the fitted decay slope.
    Grids hold distances to the edge: mu itself at the lower edge, 2 - mu
    at the upper.
    """
    report = regular_point_check(sys, threshold)
    grid = np.asarray(mu_grid, dtype=float)
    if np.any(grid <= 0) or np.any(grid >= 2):
        raise ValueError("grid of edge distances must lie in (0, 2)")
    if not report.is_regular:
        return MinvProbeReport(
            threshold=threshold,
            grid=grid,
            inverse_norms=np.array([]),
            leakage_norms=np.array([]),
            sup_inverse_norm=float("nan"),
            leakage_slope=None,
            skipped=True,
            diagnostic=(
                f"threshold {threshold!r} not regular (smallest singular value "
                f"{report.smallest_singular_value:.3e} <= tolerance "
                f"{report.tolerance_used:.3e}); probe skipped"
            ),
        )
    _, proj = _edge_data(sys, threshold)
    comp = np.eye(sys.dim) - proj
    if threshold == "zero":
        ms = m_matrix_grid(grid, sys)
    else:
        ms = m_matrix_grid(2.0 - grid, sys, one_minus_q=grid * (4.0 - grid) / 4.0)
    inv = np.linalg.inv(ms)
    inv_norms = np.linalg.norm(inv, ord=2, axis=(1, 2))
    leak_norms = np.linalg.norm(comp[None, :, :] @ inv, ord=2, axis=(1, 2))
    slope, _ = np.polyfit(np.log(grid), np.log(leak_norms), 1)
    return MinvProbeReport(
        threshold=threshold,
        grid=grid,
        inverse_norms=inv_norms,
        leakage_norms=leak_norms,
        sup_inverse_norm=float(inv_norms.max()),
        leakage_slope=float(slope),
    )


def _localization_ratio(vec: np.ndarray, window_radius: int) -> float:
    sites = np.arange(-window_radius, window_radius + 1)
    inner = np.abs(sites) <= window_radius // 2
    total = float(np.sum(np.abs(vec) ** 2))
    return float(np.sum(np.abs(vec[inner]) ** 2)) / total


def discrete_eigs(
    V: PotentialSpec, window_radius: int, boundary_mode: str = "dirichlet"
) -> List[Tuple[float, LatticeVector]]:
    """Eigenvalues of the truncated perturbed operator outside the band.

    Keeps eigenvalues below -BAND_MARGIN or above 16 + BAND_MARGIN. The
    window must be at least four times the potential support radius so the
    returned eigenvectors are window-localized; a vector failing the
    localization ratio raises, since it signals a too-small window. A None
    potential is the free operator, which has no eigenvalues off the band.
    """
    if V is None:
        return []
    if window_radius < 4 * max(V.support_radius, 1):
        raise ValueError(
            "window_radius must be >= 4 * support radius "
            f"(need {4 * max(V.support_radius, 1)}, got {window_radius})"
        )
    h = build_hamiltonian(V, window_radius, boundary_mode)
    ev, vecs = np.linalg.eigh(h.entries)
    out: List[Tuple[float, LatticeVector]] = []
    for lam, vec in zip(ev, vecs.T):
        if -BAND_MARGIN <= lam <= 16.0 + BAND_MARGIN:
            continue
        ratio = _localization_ratio(vec, window_radius)
        if ratio < _LOCALIZATION_RATIO:
            raise ValueError(
                f"eigenvector at {lam:.6g} has localization ratio {ratio:.4f}; "
                "enlarge the window"
            )
        out.append((float(lam), LatticeVector(window_radius, vec.astype(complex))))
    return out


def embedded_eig_scan(V: PotentialSpec, window_radii) -> EmbeddedScanReport:
    """Scan for window-stable localized eigenvalues inside the open band.

    Interior localized eigenvalues of a window truncation are discretised
    band states unless they persist, at fixed value, as the window grows.
    A candidate is reported only when it appears in every window radius
    within 1e-6.
    """
    radii = tuple(int(r) for r in window_radii)
    if len(radii) < 2:
        raise ValueError("need at least two window radii for a stability verdict")
    if V is None:
        return EmbeddedScanReport(
            window_radii=radii,
            candidates={r: [] for r in radii},
            stable_candidates=(),
            verdict="no embedded eigenvalues detected",
        )
    candidates = {}
    for radius in radii:
        h = build_hamiltonian(V, radius, "dirichlet")
        ev, vecs = np.linalg.eigh(h.entries)
        found = [
            float(lam)
            for lam, vec in zip(ev, vecs.T)
            if BAND_MARGIN < lam < 16.0 - BAND_MARGIN
            and _localization_ratio(vec, radius) >= _LOCALIZATION_RATIO
        ]
        candidates[radius] = found
    stable = [
        lam
        for lam in candidates[radii[0]]
        if all(
            any(abs(lam - other) <= 1e-6 for other in candidates[r]) for r in radii[1:]
        )
    ]
    verdict = (
        "no embedded eigenvalues detected"
        if not stable
        else f"{len(stable)} window-stable interior eigenvalue(s) found"
    )
    return EmbeddedScanReport(
        window_radii=radii,
        candidates=candidates,
        stable_candidates=tuple(stable),
        verdict=verdict,
    )
