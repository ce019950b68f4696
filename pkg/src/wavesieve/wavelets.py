"""Mother wavelets psi_n^alpha and their closed-form transforms.

The family is defined on the Fourier side,

    psi_hat(t) = sqrt(2^(alpha+2) pi n! / Gamma(n+alpha+1)) t^(alpha/2) e^(-t) L_n^alpha(2t),  t > 0,

and forms an orthonormal basis of the Hardy space.  Every psi_n^alpha has
admissibility constant 4 pi / alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from . import special
from .hyperbolic import UHPoint, as_complex, cayley_inv, group_inv, group_mul, pseudo_dist
from .quadrature import gauss_legendre

#: below this |u| coefficients are evaluated in disk coordinates
DISK_SWITCH = 0.99


@dataclass(frozen=True)
class WaveletIndex:
    n: int
    alpha: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"wavelet degree must be a nonnegative integer, got {self.n}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", float(self.alpha))

    def require_integrable(self):
        """The representation is integrable for this wavelet only when alpha > 1."""
        if not self.alpha > 1:
            raise ValueError(f"this operation needs alpha > 1, got alpha = {self.alpha}")
        return self

    def to_json(self):
        return {"n": self.n, "alpha": self.alpha}


class ConsistencyError(RuntimeError):
    """A checked-mode closed form disagreed with its quadrature cross-check."""


def _log_norm(n, alpha):
    return 0.5 * ((alpha + 2) * math.log(2) + math.log(math.pi) + sp.gammaln(n + 1) - sp.gammaln(n + alpha + 1))


def psi_hat(w: WaveletIndex, t):
    """Fourier transform of psi_n^alpha; zero for t <= 0."""
    t = np.asarray(t, dtype=float)
    pos = t > 0
    tp = np.where(pos, t, 1.0)
    val = np.exp(_log_norm(w.n, w.alpha) + 0.5 * w.alpha * np.log(tp) - tp) * special.laguerre(w.n, w.alpha, 2 * tp)
    return np.where(pos, val, 0.0)[()]


@dataclass(frozen=True)
class Admissibility:
    value: float
    quadrature: float | None = None
    residual: float | None = None


def admissibility(w: WaveletIndex, checked: bool = False, rtol: float = 1e-6):
    """Admissibility constant C = ||psi_hat||^2_{L^2(t^-1 dt)} = 4 pi / alpha.

    In checked mode the integral is also evaluated by adaptive quadrature; a
    relative disagreement above ``rtol`` raises :class:`ConsistencyError`.
    """
    closed = 4 * math.pi / w.alpha
    if not checked:
        return Admissibility(closed)
    quad = admissibility_quadrature(w)
    resid = abs(quad - closed) / closed
    if resid > rtol:
        raise ConsistencyError(f"admissibility quadrature {quad} disagrees with 4 pi/alpha = {closed}")
    return Admissibility(closed, quad, resid)


def _half_line(f, w: WaveletIndex, rtol):
    # e^{-2t} t^(alpha + 2n) is below 1e-40 of its peak past this point
    upper = 60.0 + 4 * w.n + 2 * w.alpha
    # on [0, 1] substitute t = v^q so t^(alpha-1) becomes at least C^1 in v
    q = max(1, math.ceil(2 / w.alpha))
    a, _ = gauss_legendre(lambda v: f(v ** q) * q * v ** (q - 1), 0.0, 1.0, rtol=rtol)
    b, _ = gauss_legendre(f, 1.0, upper, rtol=rtol, atol=rtol * abs(a) * 1e-2)
    return a + b


def admissibility_quadrature(w: WaveletIndex, rtol: float = 1e-12) -> float:
    return _half_line(lambda t: psi_hat(w, t) ** 2 / t, w, rtol)


def hardy_norm_sq(w: WaveletIndex, rtol: float = 1e-12) -> float:
    """(1/2 pi) int |psi_hat|^2 dt by quadrature; equals 1 for every member."""
    return _half_line(lambda t: psi_hat(w, t) ** 2, w, rtol) / (2 * math.pi)


def _principal_power(base, expo):
    base = np.asarray(base, dtype=complex)
    if np.any(base.real <= 0):
        raise ArithmeticError("power base left the right half-plane; principal branch is not analytic there")
    return np.exp(expo * np.log(base))


def kernel(w: WaveletIndex, z, u):
    """Reproducing kernel K(z, u) = (1/C) <pi(u) psi, pi(z) psi> in closed form.

    K(z, u) = (alpha/4pi) ((u - conj z)/(z - conj u))^n (2 sqrt(s s') / (i (conj u - z)))^(alpha+1)
              P_n^(0,alpha)(1 - 2 rho(z, u)^2)
    """
    z, u = as_complex(z), as_complex(u)
    s, sp_ = np.imag(z), np.imag(u)
    rho2 = pseudo_dist(z, u) ** 2
    denom = 1j * (np.conj(u) - z)
    phase = ((u - np.conj(z)) / (z - np.conj(u))) ** w.n
    power = _principal_power(2 * np.sqrt(s * sp_) / denom, w.alpha + 1)
    poly = special.jacobi(w.n, 0.0, w.alpha, 1 - 2 * rho2)
    return (w.alpha / (4 * math.pi) * phase * power * poly)[()]


def kernel_modulus_profile(w: WaveletIndex, rho):
    """|<pi(u) psi, pi(z) psi>| as a function of rho = pseudo_dist(z, u)."""
    t = np.asarray(rho, dtype=float) ** 2
    return ((1 - t) ** ((w.alpha + 1) / 2) * np.abs(special.jacobi(w.n, 0.0, w.alpha, 1 - 2 * t)))[()]


def basis_coeff(n: int, m: int, alpha: float, z):
    """W_{psi_n^alpha} psi_m^alpha (z) in closed form.

    Evaluated in disk coordinates u = (z - i)/(z + i) when |u| < 0.99,

        (-1)^n u^m conj(u)^n ((1-u)/|1-u|)^(2n+alpha+1) (1-|u|^2)^((alpha+1)/2) Z_{n,m}(|u|^2),

    and otherwise on the half-plane side, where 1 - |u|^2 would lose digits.
    """
    z = as_complex(z)
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    u = cayley_inv(zz)
    au = np.abs(u)
    out = np.empty(zz.shape, dtype=complex)
    near = au < DISK_SWITCH
    if np.any(near):
        ud = u[near]
        t = (ud * np.conj(ud)).real
        ang = np.angle(1 - ud)
        out[near] = ((-1) ** n * special.zernike_weighted(n, m, alpha, ud)
                     * np.exp(1j * (2 * n + alpha + 1) * ang) * (1 - t) ** ((alpha + 1) / 2))
    far = ~near
    if np.any(far):
        zf = zz[far]
        s = zf.imag
        r = u[far]
        t = np.abs(r) ** 2
        out[far] = (r ** m * ((np.conj(zf) + 1j) / (zf + 1j)) ** n
                    * _principal_power(2 * np.sqrt(s) / (1 - 1j * zf), alpha + 1)
                    * special.zernike_radial(n, m, alpha, t))
    return out.reshape(np.shape(z))[()]


def cauchy_coeff(m: int, alpha: float, z):
    """The n = 0 case: s^((alpha+1)/2) sqrt(Gamma(m+alpha+1)/(Gamma(alpha+1) m!)) ((z-i)/(z+i))^m (2/(1-iz))^(alpha+1)."""
    z = as_complex(z)
    s = np.imag(z)
    c = math.exp(0.5 * (sp.gammaln(m + alpha + 1) - sp.gammaln(alpha + 1) - sp.gammaln(m + 1)))
    return (s ** ((alpha + 1) / 2) * c * ((z - 1j) / (z + 1j)) ** m
            * _principal_power(2 / (1 - 1j * z), alpha + 1))[()]


def mixed_coeff(n: int, a: float, m: int, b: float, z):
    """W_{psi_n^a} psi_m^b (z) for possibly different alpha parameters.

    Expanding both Laguerre polynomials turns the frequency integral into a
    finite sum of Gamma(nu+1) (1 - iz)^-(nu+1) terms, nu = (a+b)/2 + j + k.
    Intended for small degrees (alternating sums lose digits for large n, m).
    """
    z = as_complex(z)
    s = np.imag(z)
    lw = special.laguerre_coefficients(n, a)
    ls = special.laguerre_coefficients(m, b)
    log_pref = _log_norm(n, a) + _log_norm(m, b) - math.log(2 * math.pi)
    base = 1 - 1j * np.asarray(z, dtype=complex)
    logbase = np.log(base)
    total = np.zeros(np.shape(z), dtype=complex)
    for j, cj in enumerate(lw):
        for k, ck in enumerate(ls):
            nu = 0.5 * (a + b) + j + k
            coef = cj * ck * 2.0 ** (j + k) * math.exp(log_pref + sp.gammaln(nu + 1))
            total = total + coef * s ** j * np.exp(-(nu + 1) * logbase)
    return (np.sqrt(s) * s ** (a / 2) * total)[()]


def coeff_covariance(field_point, atom_location):
    """Point w^{-1} . z at which W_psi(pi(w) f)(z) = W_psi f(w^{-1} . z)."""
    return group_mul(group_inv(atom_location), field_point)


def translated_coeff(n: int, m: int, alpha: float, z, location):
    """W_{psi_n^alpha}(pi(location) psi_m^alpha)(z)."""
    return basis_coeff(n, m, alpha, coeff_covariance(as_complex(z), as_complex(location)))


def coeff_quadrature(n: int, m: int, alpha: float, z, a: float | None = None, b: float | None = None,
                     rtol: float = 1e-11) -> complex:
    """<psi_m^b, pi(z) psi_n^a> by adaptive quadrature of the frequency integral.

    Independent of every closed form above; used for checked mode and tests.
    """
    a = alpha if a is None else a
    b = alpha if b is None else b
    z = complex(as_complex(z))
    x, s = z.real, z.imag
    wa, wb = WaveletIndex(n, a), WaveletIndex(m, b)
    upper = (70.0 + 4 * max(n, m) + 2 * max(a, b)) / min(1.0, s)

    def part(trig):
        return lambda xi: psi_hat(wb, xi) * psi_hat(wa, s * xi) * trig(x * xi)

    pieces = np.concatenate([[0.0], np.geomspace(min(1.0, 1 / s) * 1e-2, upper, 40)])
    re = im = 0.0
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        # tail pieces integrate to ~0, so the floor must be absolute
        re += gauss_legendre(part(np.cos), lo, hi, rtol=rtol, atol=rtol * 1e-3)[0]
        im += gauss_legendre(part(np.sin), lo, hi, rtol=rtol, atol=rtol * 1e-3)[0]
    return math.sqrt(s) / (2 * math.pi) * complex(re, im)


def kernel_quadrature(w: WaveletIndex, z, u, rtol: float = 1e-11) -> complex:
    """(1/C) <pi(u) psi, pi(z) psi> by direct frequency quadrature."""
    z, u = complex(as_complex(z)), complex(as_complex(u))
    # <pi(u) psi, pi(z) psi> = W_psi psi(u^{-1} . z)
    val = coeff_quadrature(w.n, w.n, w.alpha, coeff_covariance(z, u), rtol=rtol)
    return w.alpha / (4 * math.pi) * val


def cross_level_candidates(B: float, n: int) -> dict:
    """Two candidate values of the diagonal cross-level constant."""
    a = 2 * B - 2 * n - 1
    return {"4pi/(2B-2n-1)": 4 * math.pi / a, "2/(2B-2n-1)": 2 / a}


def _signal_check(B, idx):
    a = 2 * B - 2 * idx - 1
    if not a > 0:
        raise ValueError(f"need 2B - 2n - 1 > 0, got {a} for n = {idx}")
    return a


@dataclass(frozen=True)
class CrossLevelResult:
    value: complex
    tail_fraction: float
    conclusive: bool
    candidates: dict
    matched: str | None


def cross_level_orthogonality_check(B: float, n: int, m: int, k: int, l: int, grid=None,
                                    signal_alpha: float = 4.0, tail_limit: float = 1e-4) -> CrossLevelResult:
    """<W_{psi_n^(2B-2n-1)} psi_k, W_{psi_m^(2B-2m-1)} psi_l> over the grid.

    Both fields come from :func:`mixed_coeff`.  ``tail_fraction`` is the share of
    the squared norms carried by the grid's boundary cells; above ``tail_limit``
    the result is flagged inconclusive.
    """
    from .hyperbolic import WIDE_GRID, make_grid

    if B <= 0.5:
        raise ValueError("need B > 1/2")
    a_n, a_m = _signal_check(B, n), _signal_check(B, m)
    grid = make_grid(WIDE_GRID) if grid is None else grid
    Z = grid.centers
    F = mixed_coeff(n, a_n, k, signal_alpha, Z)
    G = mixed_coeff(m, a_m, l, signal_alpha, Z)
    wts = grid.weights
    val = complex(np.sum(F * np.conj(G) * wts))
    edge = grid.boundary_cells()
    tails = []
    for H in (F, G):
        mass = np.abs(H) ** 2 * wts
        tails.append(float(mass[edge].sum() / mass.sum()))
    tail = max(tails)
    cands = cross_level_candidates(B, n)
    matched = None
    if n == m and k == l:
        best = min(cands, key=lambda key: abs(cands[key] - val.real))
        if abs(cands[best] - val.real) <= 1e-3 * cands[best]:
            matched = best
    return CrossLevelResult(val, tail, tail <= tail_limit, cands, matched)


def as_point(z) -> UHPoint:
    return z if isinstance(z, UHPoint) else UHPoint.from_complex(z)
