"""Lattice resolvent kernels for the second- and fourth-difference operators.

The second-difference resolvent on the integer lattice has the closed form

    R(omega, n, m) = -i exp(-i theta |n - m|) / (2 sin theta),

where theta solves 2 - 2 cos theta = omega in the strip
{a + i b : -pi <= a <= pi, b < 0}. The fourth-difference resolvent follows by
a partial-fraction split over the two square roots of the spectral parameter.
Boundary values on the band (0, 16), approached from above or below, are an
explicit combination of an oscillating and an exponentially decaying wave;
they are parametrised here by mu = (band energy)^(1/4) in (0, 2).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

__all__ = [
    "SpectralParam",
    "ThetaValues",
    "theta_plus",
    "b_of_mu",
    "theta_values",
    "resolvent_neg_laplacian_kernel",
    "free_biresolvent_boundary",
    "free_biresolvent_complex",
    "windowed_boundary_resolvent",
]


@dataclass(frozen=True)
class SpectralParam:
    """Quarter-root coordinate mu in (0, 2) on the band, with a side marker.

    The energy is mu**4; sign "plus" denotes the boundary value from the
    upper half plane, "minus" from the lower.
    """

    mu: float
    sign: str = "plus"

    def __post_init__(self):
        mu = float(self.mu)
        if not (0.0 < mu < 2.0):
            raise ValueError(f"mu must lie in (0, 2), got {mu}")
        if self.sign not in ("plus", "minus"):
            raise ValueError(f"sign must be 'plus' or 'minus', got {self.sign!r}")
        object.__setattr__(self, "mu", mu)


@dataclass(frozen=True)
class ThetaValues:
    """Phase data attached to a band energy mu**4.

    Attributes
    ----------
    theta_plus : float
        Oscillatory phase in (-pi, 0), solving 2 - 2 cos theta = mu**2.
    theta_minus : float
        Mirror phase, -theta_plus.
    theta_neg : complex
        Phase attached to the energy -mu**2, purely imaginary with
        negative imaginary part.
    b : float
        Negative decay rate; exp(b |k|) is the evanescent wave amplitude.
    g : float
        Normalised decay rate -b / (mu sqrt(1 + mu**2 / 4)); tends to 1
        as mu tends to 0.
    """

    theta_plus: float
    theta_minus: float
    theta_neg: complex
    b: float
    g: float


def theta_plus(lambda2: float) -> float:
    """Phase -arccos(1 - lambda2 / 2) for a second-difference energy in (0, 4)."""
    lam = float(lambda2)
    if not (0.0 < lam < 4.0):
        raise ValueError(f"energy must lie in the open band (0, 4), got {lam}")
    return -float(np.arccos(1.0 - lam / 2.0))


def b_of_mu(mu: float) -> float:
    """Decay rate of the evanescent wave at band energy mu**4.

    Equals log(1 + mu**2/2 - mu sqrt(1 + mu**2/4)), which is negative on
    (0, 2]; the log1p form keeps full relative accuracy as mu tends to 0.
    The closed right endpoint is allowed since the decaying wave survives
    there, b(2) = log(3 - 2 sqrt(2)).
    """
    mu = float(mu)
    if not (0.0 < mu <= 2.0):
        raise ValueError(f"mu must lie in (0, 2], got {mu}")
    return float(np.log1p(mu * mu / 2.0 - mu * np.sqrt(1.0 + mu * mu / 4.0)))


def theta_values(mu: float) -> ThetaValues:
    """All phase data for the band energy mu**4, mu in (0, 2)."""
    mu = float(mu)
    tp = theta_plus(mu * mu)
    b = b_of_mu(mu)
    tneg = -1j * float(np.arccosh(1.0 + mu * mu / 2.0))
    g = -b / (mu * float(np.sqrt(1.0 + mu * mu / 4.0)))
    return ThetaValues(theta_plus=tp, theta_minus=-tp, theta_neg=tneg, b=b, g=g)


def resolvent_neg_laplacian_kernel(omega: complex, n: int, m: int) -> complex:
    """Second-difference resolvent entry at sites n, m.

    Rejects omega on the closed band [0, 4], where the two strip solutions
    collide and the kernel has no single-valued meaning.
    """
    om = complex(omega)
    if om.imag == 0.0 and 0.0 <= om.real <= 4.0:
        raise ValueError(f"omega = {om} lies on the band [0, 4]")
    theta = cmath.acos(1.0 - om / 2.0)
    if theta.imag >= 0.0:
        theta = -theta
    k = abs(int(n) - int(m))
    return -1j * cmath.exp(-1j * theta * k) / (2.0 * cmath.sin(theta))


def boundary_kernel_plus(mu, k, one_minus_q=None):
    """Vectorised upper boundary kernel of the fourth-difference resolvent.

    Parameters
    ----------
    mu : ndarray
        Band coordinates in (0, 2), shape (...,).
    k : ndarray
        Non-negative site separations |n - m|, broadcast against mu.
    one_minus_q : ndarray, optional
        Precomputed values of 1 - mu**2/4. Near mu = 2 the subtraction
        cancels; callers working in the variable w = sqrt(2 - mu) should
        pass w**2 (4 - w**2) / 4 instead.

    Returns
    -------
    ndarray
        Kernel values (i exp(-i theta_plus k) / sqrt(1 - mu^2/4)
        - exp(b k) / sqrt(1 + mu^2/4)) / (4 mu^3), shape mu.shape + k.shape.
    """
    mu = np.asarray(mu, dtype=float)
    k = np.asarray(k)
    if one_minus_q is None:
        one_minus_q = 1.0 - mu * mu / 4.0
    one_minus_q = np.asarray(one_minus_q, dtype=float)
    tp = -np.arccos(1.0 - mu * mu / 2.0)
    b = np.log1p(mu * mu / 2.0 - mu * np.sqrt(1.0 + mu * mu / 4.0))
    lift = mu.shape + (1,) * k.ndim
    osc = 1j * np.exp(-1j * np.multiply.outer(tp, k)) / np.sqrt(one_minus_q).reshape(lift)
    dec = np.exp(np.multiply.outer(b, k)) / np.sqrt(2.0 - one_minus_q).reshape(lift)
    return (osc - dec) / (4.0 * mu**3).reshape(lift)


def free_biresolvent_boundary(p: SpectralParam, n: int, m: int) -> complex:
    """Boundary value of the fourth-difference resolvent at band energy mu**4.

    The minus-side value is the complex conjugate of the plus side.
    """
    k = abs(int(n) - int(m))
    val = complex(boundary_kernel_plus(np.array([p.mu]), np.array([k]))[0, 0])
    return val if p.sign == "plus" else val.conjugate()


def free_biresolvent_complex(z: complex, n: int, m: int) -> complex:
    """Fourth-difference resolvent entry at spectral parameter z off [0, 16].

    Uses the split over the two square roots w and -w of z,

        (R2(w, n, m) - R2(-w, n, m)) / (2 w),

    with R2 the second-difference kernel and Im w >= 0. The value does not
    depend on which square root is taken, so real z > 16 and z < 0 are fine.
    """
    zc = complex(z)
    if zc.imag == 0.0 and 0.0 <= zc.real <= 16.0:
        raise ValueError(f"z = {zc} lies on the band [0, 16]")
    w = cmath.sqrt(zc)
    if w.imag < 0.0:
        w = -w
    a = resolvent_neg_laplacian_kernel(w, n, m)
    b = resolvent_neg_laplacian_kernel(-w, n, m)
    return (a - b) / (2.0 * w)


def _neville_at_zero(xs: np.ndarray, ys: np.ndarray) -> complex:
    """Polynomial extrapolation of samples (xs, ys) to x = 0."""
    t = list(ys)
    n = len(t)
    for k in range(1, n):
        for j in range(n - k):
            t[j] = (xs[j] * t[j + 1] - xs[j + k] * t[j]) / (xs[j] - xs[j + k])
    return t[0]


def windowed_boundary_resolvent(
    mu: float,
    n: int,
    m: int,
    sign: str = "plus",
    V=None,
    ladder: int = 4,
    eps_min: float | None = None,
    window_radius: int | None = None,
) -> complex:
    """Boundary resolvent entry by direct window inversion, no closed forms.

    Solves the pentadiagonal system (fourth difference + V - mu^4 - i eps)
    on a window sized to hold thirty resolvent decay lengths at the
    smallest eps, then removes the regularisation by polynomial
    extrapolation along a factor-two eps ladder. Serves as an independent
    cross-check of the closed kernels; relative agreement is typically
    well below 1e-6.

    Parameters
    ----------
    V : PotentialSpec, optional
        Real finitely supported perturbation added to the diagonal.
    ladder : int
        Number of eps rungs, each twice the previous.
    """
    if not (0.0 < mu < 2.0):
        raise ValueError(f"mu must lie in (0, 2), got {mu}")
    if sign not in ("plus", "minus"):
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")
    lam = mu**4
    rho = min(lam, 16.0 - lam)
    if eps_min is None:
        eps_min = min(2e-3, rho / 400.0)
    # decay length of the regularised kernel ~ (band speed at mu) / eps
    scale = 4.0 * mu**3 * float(np.sqrt(1.0 - mu * mu / 4.0))
    if window_radius is None:
        window_radius = int(np.ceil(30.0 * scale / eps_min)) + max(abs(n), abs(m)) + 64
    side = 2 * window_radius + 1
    ab = np.zeros((5, side), dtype=complex)
    ab[0, 2:] = 1.0
    ab[1, 1:] = -4.0
    ab[3, :-1] = -4.0
    ab[4, :-2] = 1.0
    diag = np.full(side, 6.0, dtype=complex)
    if V is not None:
        diag += V.on_window(window_radius)
    rhs = np.zeros(side, dtype=complex)
    rhs[m + window_radius] = 1.0
    eps_values = eps_min * 2.0 ** np.arange(ladder)
    samples = []
    for eps in eps_values:
        ab[2, :] = diag - (lam + 1j * eps)
        sol = solve_banded((2, 2), ab, rhs)
        samples.append(sol[n + window_radius])
    val = complex(_neville_at_zero(eps_values, np.array(samples)))
    return val if sign == "plus" else val.conjugate()
