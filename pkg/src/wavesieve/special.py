"""Orthogonal polynomials and gamma-ratio helpers.

All polynomial families are evaluated with ascending three-term recurrences.
The terminating hypergeometric function F(-m, -n; -m-n-alpha; z) is only ever
evaluated through its Jacobi-polynomial reduction, because the lower
Pochhammer symbol of the raw series vanishes for integer alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp


@dataclass(frozen=True)
class PolyDegreePair:
    n: int
    m: int

    def __post_init__(self):
        if int(self.n) != self.n or int(self.m) != self.m or self.n < 0 or self.m < 0:
            raise ValueError(f"degrees must be nonnegative integers, got ({self.n}, {self.m})")

    @property
    def low(self) -> int:
        return min(self.n, self.m)

    @property
    def high(self) -> int:
        return max(self.n, self.m)

    @property
    def gap(self) -> int:
        return abs(self.n - self.m)


@dataclass(frozen=True)
class GammaRatio:
    """Gamma(a)/Gamma(b) stored as sign * exp(log_value)."""

    log_value: float
    sign: int

    @property
    def value(self) -> float:
        return self.sign * float(np.exp(self.log_value))


def gamma_ratio(a: float, b: float) -> GammaRatio:
    """Return Gamma(a)/Gamma(b) in log space with explicit sign tracking."""
    sign = sp.gammasgn(a) * sp.gammasgn(b)
    if sign == 0:
        raise ValueError(f"Gamma has a pole at a={a} or b={b}")
    return GammaRatio(float(sp.gammaln(a) - sp.gammaln(b)), int(np.sign(sign)))


def _check_degree(n):
    if int(n) != n or n < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {n}")
    return int(n)


def laguerre(n: int, alpha: float, t):
    """Generalized Laguerre polynomial L_n^alpha(t).

    Uses the recurrence (k+1) L_{k+1} = (2k+1+alpha-t) L_k - (k+alpha) L_{k-1}.
    Works elementwise on arrays.
    """
    n = _check_degree(n)
    if alpha <= -1:
        raise ValueError(f"alpha must exceed -1, got {alpha}")
    t = np.asarray(t, dtype=float)
    prev = np.ones_like(t)
    if n == 0:
        return prev[()]
    cur = 1.0 + alpha - t
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - t) * cur - (k + alpha) * prev) / (k + 1)
    return cur[()]


def jacobi(n: int, a: float, b: float, x):
    """Jacobi polynomial P_n^{(a, b)}(x) by the standard ascending recurrence."""
    n = _check_degree(n)
    if a <= -1 or b <= -1:
        raise ValueError(f"Jacobi parameters must exceed -1, got ({a}, {b})")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev[()]
    cur = (a + 1) + 0.5 * (a + b + 2) * (x - 1)
    ab = a + b
    for k in range(2, n + 1):
        c = 2 * k + ab
        a1 = 2 * k * (k + ab) * (c - 2)
        a2 = (c - 1) * (a * a - b * b)
        a3 = (c - 2) * (c - 1) * c
        a4 = 2 * (k + a - 1) * (k + b - 1) * c
        prev, cur = cur, ((a2 + a3 * x) * cur - a4 * prev) / a1
    return cur[()]


def jacobi_coefficients_in_t(n: int, a: float, b: float) -> np.ndarray:
    """Coefficients c_j with P_n^{(a,b)}(1 - 2t) = sum_j c_j t^j (ascending)."""
    n = _check_degree(n)
    # (x-1)/2 = -t in the explicit sum
    k = np.arange(n + 1)
    logs = (sp.gammaln(n + a + 1) - sp.gammaln(n + 1) - sp.gammaln(n + a + b + 1)
            + sp.gammaln(n + k + a + b + 1) - sp.gammaln(k + a + 1))
    return sp.binom(n, k) * np.exp(logs) * (-1.0) ** k


def hyp2f1_terminating(m: int, n: int, alpha: float, z):
    """F(-m, -n; -m-n-alpha; z) via the Jacobi reduction.

    F = k! Gamma(M+alpha+1)/Gamma(n+m+alpha+1) (-z)^k P_k^{(|n-m|, alpha)}(1 - 2/z)
    with k = min(n, m), M = max(n, m). The bare value at z = 0 is rejected when
    k > 0 since the Jacobi argument is singular there.
    """
    pair = PolyDegreePair(m, n)
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    z = np.asarray(z, dtype=float)
    k = pair.low
    if k == 0:
        return np.ones_like(z)[()]
    if np.any(z == 0):
        raise ValueError("z = 0 is a removable point of the Jacobi form; use the cancellation form")
    pref = gamma_ratio(pair.high + alpha + 1, n + m + alpha + 1).value * sp.factorial(k)
    return (pref * (-z) ** k * jacobi(k, pair.gap, alpha, 1.0 - 2.0 / z))[()]


def zernike_norm(n: int, m: int, alpha: float) -> float:
    """Normalising factor sqrt(Gamma(M+alpha+1) k! / (Gamma(k+alpha+1) M!))."""
    pair = PolyDegreePair(n, m)
    k, big = pair.low, pair.high
    log_c = 0.5 * (sp.gammaln(big + alpha + 1) + sp.gammaln(k + 1)
                   - sp.gammaln(k + alpha + 1) - sp.gammaln(big + 1))
    return float(np.exp(log_c))


def zernike_radial(n: int, m: int, alpha: float, t):
    """Bare Z_{n,m}^alpha(t), including the (-t)^{-min(n,m)} factor (singular at 0)."""
    pair = PolyDegreePair(n, m)
    t = np.asarray(t, dtype=float)
    k = pair.low
    return (zernike_norm(n, m, alpha) * (-t) ** (-k) * jacobi(k, pair.gap, alpha, 1.0 - 2.0 * t))[()]


def zernike_weighted(n: int, m: int, alpha: float, u):
    """u^m conj(u)^n Z_{n,m}^alpha(|u|^2) in cancellation form.

    With k = min(n, m) the t^{-k} factor cancels against |u|^{2k}, leaving
    (-1)^k u^{m-k} conj(u)^{n-k} P_k^{(|n-m|, alpha)}(1 - 2|u|^2), finite at u = 0.
    """
    pair = PolyDegreePair(n, m)
    u = np.asarray(u, dtype=complex)
    if np.any(np.abs(u) >= 1):
        raise ValueError("zernike_weighted needs |u| < 1")
    k = pair.low
    t = (u * np.conj(u)).real
    poly = jacobi(k, pair.gap, alpha, 1.0 - 2.0 * t)
    mono = u ** (m - k) * np.conj(u) ** (n - k)
    return ((-1) ** k * zernike_norm(n, m, alpha) * mono * poly)[()]


def laguerre_coefficients(n: int, alpha: float) -> np.ndarray:
    """Power-basis coefficients of L_n^alpha: (-1)^k/k! binom(n+alpha, n-k)."""
    n = _check_degree(n)
    k = np.arange(n + 1)
    return (-1.0) ** k / sp.factorial(k) * sp.binom(n + alpha, n - k)
