"""Local orthogonality constants of the wavelet coefficients on pseudohyperbolic disks.

On D_R(i) the fields W_{psi_n} psi_m are mutually orthogonal, and

    int_{D_R} |W_{psi_n} psi_m|^2 dmu = C_{n,m}(R)
        = 4 pi int_0^{R^2} r^{|n-m|} (1-r)^(alpha-1) c^2 P_k^{(|n-m|,alpha)}(1-2r)^2 dr,

with k = min(n, m) and c the Zernike normalisation.  C_n(R) = C_{n,n}(R).
"""

from __future__ import annotations

import math

import numpy as np

from . import special
from .quadrature import gauss_legendre
from .wavelets import basis_coeff


def _check_radius(R):
    if not 0 < R < 1:
        raise ValueError(f"radius must lie in (0, 1), got {R}")


def C_nm(n: int, m: int, alpha: float, R: float, rtol: float = 1e-10) -> float:
    """4 pi int_0^{R^2} r^(n+m) (1-r)^(alpha-1) Z_{n,m}(r)^2 dr, in cancellation form."""
    _check_radius(R)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    pair = special.PolyDegreePair(n, m)
    c2 = special.zernike_norm(n, m, alpha) ** 2

    def integrand(r):
        p = special.jacobi(pair.low, pair.gap, alpha, 1 - 2 * r)
        return r ** pair.gap * (1 - r) ** (alpha - 1) * p * p

    # two panels so that the (1-r)^(alpha-1) endpoint and the bulk refine separately
    t = R * R
    a, _ = gauss_legendre(integrand, 0.0, 0.5 * t, rtol=rtol * 1e-2)
    b, _ = gauss_legendre(integrand, 0.5 * t, t, rtol=rtol * 1e-2)
    return 4 * math.pi * c2 * (a + b)


def C_n(n: int, alpha: float, R: float, rtol: float = 1e-10) -> float:
    """4 pi int_0^{R^2} (1-r)^(alpha-1) P_n^{(0,alpha)}(1-2r)^2 dr."""
    return C_nm(n, n, alpha, R, rtol)


def C0_closed(alpha: float, R: float) -> float:
    """(4 pi/alpha)(1 - (1-R^2)^alpha)."""
    return 4 * math.pi / alpha * (1 - (1 - R * R) ** alpha)


def disk_inner_product(n: int, m: int, k: int, alpha: float, R: float,
                       n_radial: int = 64, n_angle: int | None = None) -> complex:
    """int_{D_R(i)} W psi_m conj(W psi_k) dmu by tensor polar quadrature in disk coordinates.

    Pulls back by the Cayley map (hyperbolic measure 4/(1-|u|^2)^2 dA) and uses
    Gauss-Legendre in r^2 on [0, R^2] (panels split in two) and the trapezoidal
    rule in the angle, which is exact for the trigonometric integrand.
    """
    _check_radius(R)
    if n_angle is None:
        # the integrand's angular content is exp(i(m-k)phi) times a smooth phase
        n_angle = 2 * (max(n, m, k) + 8) + 4 * int(math.ceil(alpha)) + 32
    nodes, weights = np.polynomial.legendre.leggauss(n_radial)
    t2 = R * R
    ts, wts = [], []
    for lo, hi in ((0.0, 0.5 * t2), (0.5 * t2, t2)):
        ts.append(0.5 * (hi - lo) * nodes + 0.5 * (hi + lo))
        wts.append(0.5 * (hi - lo) * weights)
    t = np.concatenate(ts)
    wt = np.concatenate(wts)
    phi = 2 * math.pi * np.arange(n_angle) / n_angle
    r = np.sqrt(t)
    u = r[:, None] * np.exp(1j * phi[None, :])
    z = 1j * (1 + u) / (1 - u)
    F = basis_coeff(n, m, alpha, z)
    G = F if k == m else basis_coeff(n, k, alpha, z)
    # dA = r dr dphi = (1/2) dt dphi
    jac = 4 / (1 - t) ** 2 * 0.5
    inner = np.sum(F * np.conj(G), axis=1) * (2 * math.pi / n_angle)
    return complex(np.sum(inner * jac * wt))


def double_orthogonality_residual(n: int, m: int, k: int, alpha: float, R: float) -> float:
    """|disk quadrature of <W psi_m, W psi_k>_{D_R} - delta_{mk} C_{n,m}(R)|."""
    val = disk_inner_product(n, m, k, alpha, R)
    target = C_nm(n, m, alpha, R) if m == k else 0.0
    return abs(val - target)
