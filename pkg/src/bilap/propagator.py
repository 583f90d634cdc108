"""Time propagators for the fourth-difference operator, free and perturbed.

Three evaluation routes are provided and cross-checked against each other.
Dense spectral evolution diagonalises a window truncation and applies a
spectral weight to the eigenvalues. Free translation-invariant kernels come
from the band symbol by FFT. Perturbed kernels restricted to the continuous
spectrum come from a quadrature of the resolvent jump across the band,

    K(t, n, m) = (2 / (pi i)) Int_0^2 w(t, mu) mu^3 [R+ - R-](mu^4, n, m) dmu,

with w the spectral weight (exp(-i t mu^4) for the flow generated by the
operator itself, exp(-i t mu^2), cos(t mu^2) or sin(t mu^2)/(t mu^2) for
half-wave and beam flows). The substitution mu = 2 sin(-theta/2) removes the
inverse square-root singularity of the jump at the upper band edge, and
narrow endpoint strips are integrated in locally analytic variables. Panel
sizes follow the budget rule from the quadrature module, so cost scales
linearly in |t|.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .lattice import (
    SPEED_BOUND,
    LatticeVector,
    PotentialSpec,
    build_hamiltonian,
    _neg_laplacian_matrix,
)
from .quadrature import edges_from_budget, gauss_panels
from .resolvent import boundary_kernel_plus
from .spectral import (
    BAND_MARGIN,
    decompose_potential,
    m_matrix_grid,
    regular_point_check,
)

__all__ = [
    "KINDS",
    "PropagatorRequest",
    "KernelSlice",
    "PacSplit",
    "auto_window_radius",
    "evolve_spectral",
    "kernel_spectral",
    "pac_split",
    "free_kernel_fft",
    "free_kernel_full",
    "stone_kernel_slice",
    "stone_kernel_schrodinger",
    "stone_kernel_halfwave",
    "sup_norm_kernel",
]

KINDS = (
    "schrodinger_h",
    "schrodinger_free_lap",
    "schrodinger_free_bilap",
    "beam_cos",
    "beam_sinc",
)

_FREE_KINDS = ("schrodinger_free_lap", "schrodinger_free_bilap")

_LOCALIZED = 0.999


@dataclass(frozen=True)
class PropagatorRequest:
    """One propagator evaluation: which flow, potential, time and windows.

    observe_radius bounds the sites at which kernel entries or evolved
    values will be reported; window_radius is the truncation radius and
    must dominate observe_radius plus the causal range of the flow,
    observe_radius + SPEED_BOUND |t| <= window_radius.
    """

    kind: str
    V: Optional[PotentialSpec]
    t: float
    window_radius: int
    observe_radius: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; choose from {KINDS}")
        if not np.isfinite(self.t):
            raise ValueError("t must be finite")
        if self.kind in _FREE_KINDS and self.V is not None:
            raise ValueError(f"kind {self.kind!r} is free; V must be None")
        if not 0 <= self.observe_radius <= self.window_radius:
            raise ValueError("need 0 <= observe_radius <= window_radius")
        if self.observe_radius + SPEED_BOUND * abs(self.t) > self.window_radius:
            raise ValueError(
                "window too small for the causal range: need observe_radius "
                f"+ {SPEED_BOUND:.3f} |t| <= window_radius, got "
                f"{self.observe_radius} + {SPEED_BOUND * abs(self.t):.1f} > "
                f"{self.window_radius}"
            )
        if self.V is not None and self.window_radius < self.V.support_radius + 2:
            raise ValueError("window does not contain the potential support")


@dataclass(frozen=True)
class KernelSlice:
    """Kernel entries K(t, n, m) on an observation window.

    entries[i, j] is the kernel between sites i - observe_radius and
    j - observe_radius. method records the evaluation route, "spectral"
    for dense diagonalisation of a truncation, "stone" for the band
    quadrature (which carries only the continuous-spectrum part).
    """

    t: float
    observe_radius: int
    entries: np.ndarray
    method: str

    def __post_init__(self):
        side = 2 * self.observe_radius + 1
        ent = np.asarray(self.entries, dtype=complex)
        if ent.shape != (side, side):
            raise ValueError(f"entries must be {side}x{side}, got {ent.shape}")
        if self.method not in ("spectral", "stone"):
            raise ValueError(f"unknown method {self.method!r}")
        object.__setattr__(self, "entries", ent)

    def entry(self, n: int, m: int) -> complex:
        r = self.observe_radius
        if max(abs(n), abs(m)) > r:
            raise ValueError("site outside the observation window")
        return complex(self.entries[n + r, m + r])


def auto_window_radius(t: float, observe_radius: int, safety: float = 1.2) -> int:
    """Truncation radius covering the causal range of time t with a margin."""
    return int(np.ceil(observe_radius + safety * SPEED_BOUND * abs(t))) + 8


_EIG_CACHE: dict = {}


def _potential_key(V: Optional[PotentialSpec]):
    if V is None:
        return None
    return (V.support, tuple(V.values.tolist()))


def _eigensystem(op_tag: str, V: Optional[PotentialSpec], window_radius: int):
    key = (op_tag, _potential_key(V), window_radius)
    hit = _EIG_CACHE.get(key)
    if hit is not None:
        return hit
    if op_tag == "lap":
        h = _neg_laplacian_matrix(window_radius, "dirichlet")
    else:
        h = build_hamiltonian(V, window_radius, "dirichlet").entries
    ev, vecs = np.linalg.eigh(h)
    if len(_EIG_CACHE) > 8:
        _EIG_CACHE.pop(next(iter(_EIG_CACHE)))
    _EIG_CACHE[key] = (ev, vecs)
    return ev, vecs


def _spectral_weight(kind: str, t: float, lam: np.ndarray) -> np.ndarray:
    """Eigenvalue weight defining each flow; sqrt branches keep Im >= 0."""
    if kind.startswith("schrodinger"):
        return np.exp(-1j * t * lam)
    root = np.sqrt(lam.astype(complex))
    if kind == "beam_cos":
        return np.cos(t * root)
    x = t * t * lam
    out = np.empty(lam.shape, dtype=complex)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = 1.0 - xs / 6.0 + xs * xs / 120.0
    arg = t * root[~small]
    out[~small] = np.sin(arg) / arg
    return out


def _operator_tag(kind: str) -> str:
    return "lap" if kind == "schrodinger_free_lap" else "bilap"


def evolve_spectral(request: PropagatorRequest, psi0: LatticeVector) -> LatticeVector:
    """Apply the requested flow to psi0 by dense diagonalisation.

    psi0 may live on a smaller window; it is zero-extended to the
    truncation window. The result is reported on the full truncation
    window so norms are not clipped.
    """
    n = request.window_radius
    if psi0.window_radius > n:
        raise ValueError("initial state wider than the truncation window")
    vec = np.zeros(2 * n + 1, dtype=complex)
    off = n - psi0.window_radius
    vec[off : off + psi0.values.size] = psi0.values
    ev, vecs = _eigensystem(_operator_tag(request.kind), request.V, n)
    weight = _spectral_weight(request.kind, request.t, ev)
    out = vecs @ (weight * (vecs.T @ vec))
    return LatticeVector(n, out)


def kernel_spectral(request: PropagatorRequest) -> KernelSlice:
    """Kernel entries of the requested flow on the observation window."""
    n, r = request.window_radius, request.observe_radius
    ev, vecs = _eigensystem(_operator_tag(request.kind), request.V, n)
    weight = _spectral_weight(request.kind, request.t, ev)
    rows = vecs[n - r : n + r + 1]
    entries = (rows * weight[None, :]) @ rows.T
    return KernelSlice(request.t, r, entries, "spectral")


class PacSplit:
    """Splitting of a perturbed flow into bound and continuous parts.

    Bound states are the localized eigenvalues of the window truncation
    outside the band; everything orthogonal to them carries the
    continuous part. apply_ac evolves a state with the bound component
    removed; kernel_ac gives the corresponding kernel slice.
    """

    def __init__(self, V: Optional[PotentialSpec], window_radius: int):
        from .spectral import discrete_eigs, embedded_eig_scan

        self.V = V
        self.window_radius = window_radius
        self.bound_states = discrete_eigs(V, window_radius)
        support = V.support_radius if V is not None else 0
        scan = embedded_eig_scan(
            V, (max(window_radius // 2, 4 * support + 8), window_radius)
        )
        warn: List[str] = []
        if scan.stable_candidates:
            warn.append(
                "embedded-eigenvalue candidates at "
                + ", ".join(f"{x:.8f}" for x in scan.stable_candidates)
                + "; the continuous part excludes them only approximately"
            )
        self.warnings = tuple(warn)

    @property
    def projector_rank(self) -> int:
        return len(self.bound_states)

    def _remove_bound(self, vec: np.ndarray) -> np.ndarray:
        for _, state in self.bound_states:
            vec = vec - state.values * (state.values.conj() @ vec)
        return vec

    def apply_ac(self, t: float, psi0: LatticeVector) -> LatticeVector:
        """Evolve the continuous-spectrum component of psi0 to time t."""
        n = self.window_radius
        req = PropagatorRequest(
            "schrodinger_h", self.V, t, n, max(0, int(n - np.ceil(SPEED_BOUND * abs(t))))
        )
        vec = np.zeros(2 * n + 1, dtype=complex)
        off = n - psi0.window_radius
        vec[off : off + psi0.values.size] = psi0.values
        projected = LatticeVector(n, self._remove_bound(vec))
        return evolve_spectral(req, projected)

    def kernel_ac(self, t: float, observe_radius: int) -> KernelSlice:
        """Continuous-part kernel on the observation window."""
        n, r = self.window_radius, observe_radius
        ev, vecs = _eigensystem("bilap", self.V, n)
        weight = _spectral_weight("schrodinger_h", t, ev)
        keep = (ev < -BAND_MARGIN) | (ev > 16.0 + BAND_MARGIN)
        weight = np.where(keep, 0.0, weight)
        rows = vecs[n - r : n + r + 1]
        return KernelSlice(t, r, (rows * weight[None, :]) @ rows.T, "spectral")


def pac_split(
    V: PotentialSpec, window_radius: int, max_doublings: int = 3
) -> PacSplit:
    """Bound/continuous splitting of the perturbed flow on a window.

    Shallow bound states sitting close to a band edge decay slowly, so
    the requested window may not localize them; in that case the window
    is doubled, up to max_doublings times, before giving up.
    """
    for _ in range(max_doublings):
        try:
            return PacSplit(V, window_radius)
        except ValueError as exc:
            if "localization" not in str(exc):
                raise
            window_radius *= 2
    return PacSplit(V, window_radius)


def _fft_weight(kind: str, t: float, band: np.ndarray) -> np.ndarray:
    """Symbol weight for the free kernels; band holds 2 - 2 cos x >= 0."""
    if kind == "schrodinger_free_bilap" or kind == "schrodinger_h":
        return np.exp(-1j * t * band * band)
    if kind in ("schrodinger_free_lap", "halfwave"):
        return np.exp(-1j * t * band)
    if kind == "beam_cos":
        return np.cos(t * band).astype(complex)
    if kind == "beam_sinc":
        return np.sinc(t * band / np.pi).astype(complex)
    raise ValueError(f"no free kernel for kind {kind!r}")


def free_kernel_full(
    t: float, kind: str, kmax: int = 0, safety: float = 1.2, margin: int = 64
) -> np.ndarray:
    """Free kernel over a full FFT ring covering the causal range of t.

    Index k of the returned array is the site separation modulo the ring
    size; the ring is large enough that wraparound sits at the far-field
    noise floor. Useful for suprema over the whole causal range.
    """
    need = 2.0 * (safety * SPEED_BOUND * abs(t) + kmax + margin)
    size = 1 << int(np.ceil(np.log2(max(need, 256.0))))
    x = 2.0 * np.pi * np.arange(size) / size
    band = 2.0 - 2.0 * np.cos(x)
    return np.fft.ifft(_fft_weight(kind, t, band))


def free_kernel_fft(t: float, kind: str, kmax: int) -> np.ndarray:
    """Free kernel values at separations 0..kmax (even in the separation)."""
    return free_kernel_full(t, kind, kmax=kmax)[: kmax + 1]


_STONE_PHASES = ("schrodinger", "halfwave", "beam_cos", "beam_sinc")


def _stone_weight(phase: str, t: float, mu: np.ndarray) -> np.ndarray:
    energy = mu**4 if phase == "schrodinger" else mu**2
    if phase in ("schrodinger", "halfwave"):
        return np.exp(-1j * t * energy)
    if phase == "beam_cos":
        return np.cos(t * energy).astype(complex)
    return np.sinc(t * energy / np.pi).astype(complex)


def _stone_nodes(
    t: float,
    phase_power: int,
    reach: float,
    budget: float,
    edge_cutoff: float,
    inner: float,
    lo_strip: bool,
    hi_strip: bool,
):
    """Quadrature nodes, weights and stable 1 - mu^2/4 values over (0, 2).

    Three pieces: the bulk in the angle theta with mu = 2 sin(-theta/2)
    (the Jacobian cos(theta/2) cancels the jump's singularity at mu = 2),
    plus endpoint strips in mu near 0 and in w = sqrt(2 - mu) near 2,
    where those variables are locally analytic. reach bounds the site
    separations that multiply the oscillatory and evanescent exponents in
    the budget. Dropping a strip truncates the band integral at
    edge_cutoff from that edge.
    """

    def b_of(mu):
        return np.log1p(mu * mu / 2.0 - mu * np.sqrt(1.0 + mu * mu / 4.0))

    def theta_of(mu):
        return -np.arccos(np.clip(1.0 - mu * mu / 2.0, -1.0, 1.0))

    pieces = []

    # bulk, in theta
    th_lo, th_hi = theta_of(2.0 - edge_cutoff), theta_of(edge_cutoff)

    def bulk_cost(th):
        mu = 2.0 * np.sin(-th / 2.0)
        return np.stack([t * mu**phase_power, reach * th, reach * b_of(mu)])

    edges = edges_from_budget(th_lo, th_hi, bulk_cost, budget=budget, min_panels=8)
    th, w = gauss_panels(edges)
    mu = 2.0 * np.sin(-th / 2.0)
    pieces.append((mu, w * np.cos(th / 2.0), np.cos(th / 2.0) ** 2))

    if lo_strip:
        # lower strip, in mu
        def lo_cost(mu):
            return np.stack([t * mu**phase_power, reach * theta_of(mu), reach * b_of(mu)])

        edges = edges_from_budget(inner, edge_cutoff, lo_cost, budget=budget, min_panels=4)
        mu, w = gauss_panels(edges)
        pieces.append((mu, w, 1.0 - mu * mu / 4.0))

    if hi_strip:
        # upper strip, in w = sqrt(2 - mu); 1 - mu^2/4 = w^2 (4 - w^2) / 4
        def hi_cost(wv):
            mu = 2.0 - wv * wv
            return np.stack([t * mu**phase_power, reach * theta_of(mu), reach * b_of(mu)])

        edges = edges_from_budget(
            inner, np.sqrt(edge_cutoff), hi_cost, budget=budget, min_panels=4
        )
        wv, w = gauss_panels(edges)
        mu = 2.0 - wv * wv
        pieces.append((mu, 2.0 * wv * w, wv * wv * (4.0 - wv * wv) / 4.0))

    mu = np.concatenate([p[0] for p in pieces])
    wts = np.concatenate([p[1] for p in pieces])
    omq = np.concatenate([p[2] for p in pieces])
    return mu, wts, omq


def _stone_assemble(
    t: float,
    V: Optional[PotentialSpec],
    targets: np.ndarray,
    phase: str,
    budget: float,
    edge_cutoff: float,
    inner_cutoff: float,
) -> np.ndarray:
    """Band-quadrature kernel at all target pairs, shape (T, T)."""
    if phase not in _STONE_PHASES:
        raise ValueError(f"phase must be one of {_STONE_PHASES}")
    sys = decompose_potential(V) if V is not None else None

    strips = {"zero": True, "sixteen": True}
    if sys is not None:
        for threshold in ("zero", "sixteen"):
            if not regular_point_check(sys, threshold).is_regular:
                strips[threshold] = False
                warnings.warn(
                    f"threshold {threshold!r} not regular; band integral "
                    f"truncated at distance {edge_cutoff:.1e} from that edge",
                    stacklevel=3,
                )

    sep_free = np.abs(targets[:, None] - targets[None, :])
    reach = float(sep_free.max()) + 2.0
    if sys is not None:
        sep_corr = np.abs(targets[:, None] - sys.sites[None, :])
        reach = max(reach, float(sep_corr.max()) + 2.0)

    phase_power = 4 if phase == "schrodinger" else 2
    mu, wts, omq = _stone_nodes(
        t,
        phase_power,
        reach,
        budget,
        edge_cutoff,
        inner_cutoff,
        strips["zero"],
        strips["sixteen"],
    )
    kfree = np.arange(int(sep_free.max()) + 1)

    free_vals = np.zeros(kfree.size, dtype=complex)
    corr = np.zeros((targets.size, targets.size), dtype=complex)
    chunk = 4096
    for start in range(0, mu.size, chunk):
        sl = slice(start, start + chunk)
        mus, ws, oq = mu[sl], wts[sl], omq[sl]
        phw = _stone_weight(phase, t, mus) * mus**3 * ws
        rho_free = boundary_kernel_plus(mus, kfree, one_minus_q=oq)
        free_vals += phw @ (2j * rho_free.imag)
        if sys is None:
            continue
        rho = boundary_kernel_plus(mus, sep_corr, one_minus_q=oq)
        minv = np.linalg.inv(m_matrix_grid(mus, sys, one_minus_q=oq))
        sup_inv = float(np.linalg.norm(minv, axis=(1, 2)).max())
        if sup_inv > 1e10:
            worst = int(np.argmax(np.linalg.norm(minv, axis=(1, 2))))
            raise ValueError(
                "sandwich matrix numerically singular at energy "
                f"mu^4 = {mus[worst] ** 4:.6g}: possible embedded eigenvalue"
            )
        wmat = minv * np.outer(sys.v, sys.v)[None, :, :]
        x = np.einsum("oia,oab->oib", rho, wmat)
        corr += np.tensordot(phw[:, None, None] * x, rho, axes=([0, 2], [0, 2]))
        corr -= np.tensordot(
            phw[:, None, None] * x.conj(), rho.conj(), axes=([0, 2], [0, 2])
        )

    factor = 2.0 / (np.pi * 1j)
    kernel = factor * (free_vals[sep_free] - corr)
    return kernel


def stone_kernel_slice(
    t: float,
    V: Optional[PotentialSpec],
    observe_radius: int,
    phase: str = "schrodinger",
    budget: float = 0.5,
    edge_cutoff: float = 1e-4,
    inner_cutoff: float = 1e-9,
    check_error: bool = False,
    tol: float = 1e-8,
) -> KernelSlice:
    """Continuous-part kernel on a window via the band quadrature.

    check_error reruns the quadrature at half budget and warns when the
    two passes differ by more than tol; the finer result is returned.
    """
    targets = np.arange(-observe_radius, observe_radius + 1)
    entries = _stone_assemble(t, V, targets, phase, budget, edge_cutoff, inner_cutoff)
    if check_error:
        finer = _stone_assemble(
            t, V, targets, phase, budget / 2.0, edge_cutoff, inner_cutoff
        )
        err = float(np.abs(finer - entries).max())
        if err > tol:
            warnings.warn(
                f"band quadrature achieved error estimate {err:.3e} above "
                f"the target {tol:.1e}",
                stacklevel=2,
            )
        entries = finer
    return KernelSlice(t, observe_radius, entries, "stone")


def _stone_entry(t, V, n, m, phase, **kw) -> complex:
    targets = np.array([int(n), int(m)])
    kernel = _stone_assemble(
        t,
        V,
        targets,
        phase,
        kw.get("budget", 0.5),
        kw.get("edge_cutoff", 1e-4),
        kw.get("inner_cutoff", 1e-9),
    )
    return complex(kernel[0, 1])


def stone_kernel_schrodinger(
    t: float, V: Optional[PotentialSpec], n: int, m: int, **kw
) -> complex:
    """Kernel entry of the continuous part of exp(-i t (bilaplacian + V))."""
    return _stone_entry(t, V, n, m, "schrodinger", **kw)


def stone_kernel_halfwave(
    t: float, V: Optional[PotentialSpec], n: int, m: int, **kw
) -> complex:
    """Kernel entry of the continuous part of the half-wave flow.

    The spectral weight is exp(-i t mu^2), the flow generated by the
    positive square root of the operator. Beam kernels follow by
    combining the two time directions, cos(t sqrt(H)) as the average of
    the two half-waves, and its time average over [-t, t] gives the
    sinc flow; those weights are available directly through
    stone_kernel_slice(phase="beam_cos") and phase="beam_sinc".
    """
    return _stone_entry(t, V, n, m, "halfwave", **kw)


def sup_norm_kernel(request: PropagatorRequest, method: str = "auto") -> float:
    """Largest kernel magnitude over the observation window.

    Free kinds use the FFT kernel; the perturbed fourth-difference flow
    uses the band quadrature (continuous part); beam flows with a
    potential fall back to dense spectral evaluation.
    """
    if method not in ("auto", "spectral", "stone", "fft"):
        raise ValueError(f"unknown method {method!r}")
    r = request.observe_radius
    if method == "auto":
        if request.V is None:
            method = "fft"
        elif request.kind == "schrodinger_h":
            method = "stone"
        else:
            method = "spectral"
    if method == "fft":
        kind = "schrodinger_free_bilap" if request.kind == "schrodinger_h" else request.kind
        vals = free_kernel_fft(request.t, kind, 2 * r)
        return float(np.abs(vals).max())
    if method == "stone":
        phase = {
            "schrodinger_h": "schrodinger",
            "schrodinger_free_bilap": "schrodinger",
            "beam_cos": "beam_cos",
            "beam_sinc": "beam_sinc",
        }.get(request.kind)
        if phase is None:
            raise ValueError(f"no band quadrature for kind {request.kind!r}")
        slice_ = stone_kernel_slice(request.t, request.V, r, phase=phase)
        return float(np.abs(slice_.entries).max())
    return float(np.abs(kernel_spectral(request).entries).max())
