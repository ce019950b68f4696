"""Discretised analytic wavelet transform on hyperbolic grids.

Signals enter as samples of their Fourier transform on a uniform positive
frequency grid.  For each scale row the transform

    W f(x + i s) = (sqrt(s) / 2 pi) int F(xi) e^{i x xi} psi_hat(s xi) d xi

is a chirp-z evaluation at all grid abscissae at once.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import CZT

from .container import read_container, write_container
from .hyperbolic import HyperbolicGrid, RegionMask, as_complex, make_grid, pseudo_dist
from .orthogonality import C_n
from .wavelets import WaveletIndex, kernel, psi_hat

#: default frequency sampling: xi in (0, 64] with 2^14 samples
XI_MAX = 64.0
XI_COUNT = 2 ** 14
MIN_SUPPORT_SAMPLES = 16
SUPPORT_LEVEL = 1e-8


class ResolutionError(ValueError):
    """The frequency grid does not resolve the wavelet at some scale."""

    def __init__(self, message, scale=None):
        super().__init__(message)
        self.scale = scale


@dataclass(frozen=True)
class FreqSignal:
    """Samples of F f on xi_k = xi_min + k * dxi, k = 0..count-1."""

    xi_min: float
    dxi: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 1:
            raise ValueError("signal samples must be one-dimensional")
        if self.xi_min < 0 or not self.dxi > 0:
            raise ValueError("frequencies must be nonnegative with positive spacing")
        if not np.all(np.isfinite(vals)):
            raise ValueError("signal samples must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def count(self) -> int:
        return self.values.size

    @property
    def xi(self) -> np.ndarray:
        return self.xi_min + self.dxi * np.arange(self.count)

    def norm_sq(self) -> float:
        """Hardy norm (1/2 pi) sum |F|^2 dxi."""
        return float(np.sum(np.abs(self.values) ** 2) * self.dxi / (2 * math.pi))

    def inner(self, other: "FreqSignal") -> complex:
        self._same_grid(other)
        return complex(np.sum(self.values * np.conj(other.values)) * self.dxi / (2 * math.pi))

    def _same_grid(self, other):
        if (self.xi_min, self.dxi, self.count) != (other.xi_min, other.dxi, other.count):
            raise ValueError("signals live on different frequency grids")

    def __add__(self, other: "FreqSignal") -> "FreqSignal":
        self._same_grid(other)
        return FreqSignal(self.xi_min, self.dxi, self.values + other.values)

    def __mul__(self, c) -> "FreqSignal":
        return FreqSignal(self.xi_min, self.dxi, complex(c) * self.values)

    __rmul__ = __mul__

    def save(self, path):
        return write_container(path, "freq_signal", {"xi_min": self.xi_min, "dxi": self.dxi}, self.values)

    @classmethod
    def load(cls, path) -> "FreqSignal":
        desc, arr = read_container(path, "freq_signal")
        return cls(desc["xi_min"], desc["dxi"], arr)


def frequency_grid(xi_max: float = XI_MAX, count: int = XI_COUNT) -> tuple[float, float]:
    """(xi_min, dxi) for the samples xi_k = (k + 1) xi_max / count."""
    d = xi_max / count
    return d, d


def atom_signal(m: int, alpha: float, location=1j, xi_max: float = XI_MAX,
                count: int = XI_COUNT) -> FreqSignal:
    """Samples of F(pi(w) psi_m^alpha)(xi) = sqrt(s') e^{-i x' xi} psi_hat(s' xi)."""
    w = complex(as_complex(location))
    x0, s0 = w.real, w.imag
    xi_min, dxi = frequency_grid(xi_max, count)
    xi = xi_min + dxi * np.arange(count)
    vals = math.sqrt(s0) * np.exp(-1j * x0 * xi) * psi_hat(WaveletIndex(m, alpha), s0 * xi)
    return FreqSignal(xi_min, dxi, vals)


def atom_combination(coeffs, atoms, alpha: float, xi_max: float = XI_MAX,
                     count: int = XI_COUNT) -> FreqSignal:
    """sum_k c_k pi(w_k) psi_{m_k}^alpha; ``atoms`` is a list of (location, m)."""
    xi_min, dxi = frequency_grid(xi_max, count)
    total = np.zeros(count, dtype=complex)
    for c, (loc, m) in zip(coeffs, atoms):
        total += c * atom_signal(m, alpha, loc, xi_max, count).values
    return FreqSignal(xi_min, dxi, total)


def _tail_fraction(grid: HyperbolicGrid, values: np.ndarray) -> float:
    mass = np.abs(values) ** 2 * grid.weights
    total = mass.sum()
    if total == 0:
        return 0.0
    return float(mass[grid.boundary_cells()].sum() / total)


@dataclass(frozen=True)
class CoefficientField:
    grid: HyperbolicGrid
    values: np.ndarray
    wavelet: WaveletIndex
    tail_fraction: float = field(default=float("nan"))

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise ValueError(f"field shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("coefficient field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if math.isnan(self.tail_fraction):
            object.__setattr__(self, "tail_fraction", _tail_fraction(self.grid, vals))

    @classmethod
    def from_function(cls, grid: HyperbolicGrid, wavelet: WaveletIndex, func) -> "CoefficientField":
        """Sample a closed-form field ``func(z)`` at the grid centres."""
        return cls(grid, func(grid.centers), wavelet)

    def __add__(self, other: "CoefficientField") -> "CoefficientField":
        self._compatible(other)
        return CoefficientField(self.grid, self.values + other.values, self.wavelet)

    def __mul__(self, c) -> "CoefficientField":
        return CoefficientField(self.grid, complex(c) * self.values, self.wavelet)

    __rmul__ = __mul__

    def _compatible(self, other):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def inner(self, other: "CoefficientField") -> complex:
        """<F, G> in L^2(dmu) by cell quadrature."""
        self._compatible(other)
        return complex(np.sum(self.values * np.conj(other.values) * self.grid.weights))

    def save(self, path):
        meta = {"grid": self.grid.to_json(), "wavelet": self.wavelet.to_json(),
                "tail_fraction": self.tail_fraction}
        return write_container(path, "coefficient_field", meta, self.values)

    @classmethod
    def load(cls, path) -> "CoefficientField":
        desc, arr = read_container(path, "coefficient_field")
        grid = make_grid(desc["grid"])
        w = WaveletIndex(desc["wavelet"]["n"], desc["wavelet"]["alpha"])
        return cls(grid, arr, w, desc["tail_fraction"])


def _effective_support(w: WaveletIndex) -> tuple[float, float]:
    """Interval in t where psi_hat >= SUPPORT_LEVEL * max |psi_hat|."""
    t = np.geomspace(1e-12, 200.0 + 8 * w.n + 4 * w.alpha, 20001)
    v = np.abs(psi_hat(w, t))
    keep = np.nonzero(v >= SUPPORT_LEVEL * v.max())[0]
    return float(t[keep[0]]), float(t[keep[-1]])


def check_resolution(signal: FreqSignal, w: WaveletIndex, grid: HyperbolicGrid):
    """Raise :class:`ResolutionError` unless every row resolves psi_hat(s xi)."""
    lo, hi = _effective_support(w)
    xi_top = signal.xi_min + signal.dxi * (signal.count - 1)
    for s in grid.s_centers:
        a, b = max(lo / s, signal.xi_min), min(hi / s, xi_top)
        n_samples = (b - a) / signal.dxi if b > a else 0.0
        if n_samples < MIN_SUPPORT_SAMPLES:
            raise ResolutionError(
                f"scale s = {s:.6g} puts only {n_samples:.1f} frequency samples across the "
                f"wavelet support (need {MIN_SUPPORT_SAMPLES})", scale=float(s))
    if grid.dx * xi_top >= math.pi:
        raise ResolutionError(f"x spacing {grid.dx:.4g} aliases frequencies up to {xi_top:.4g}")


def forward_cwt(f: FreqSignal, w: WaveletIndex, grid: HyperbolicGrid, threads: int = 1,
                rows_per_block: int = 32) -> CoefficientField:
    """Wavelet transform of ``f`` sampled at every grid centre.

    The frequency integral is a Riemann sum on the signal's grid.  Along x the
    sum sum_k F_k psi_hat(s xi_k) e^{i x_l xi_k} is a chirp-z transform with
    ratio e^{i dx dxi}, so each row costs one FFT convolution.
    """
    check_resolution(f, w, grid)
    xi = f.xi
    xs = grid.x_centers
    czt = CZT(f.count, m=grid.nx, w=np.exp(1j * grid.dx * f.dxi), a=1.0)
    pre = f.values * np.exp(1j * xs[0] * (xi - f.xi_min))
    post = np.exp(1j * xs * f.xi_min)
    s_rows = grid.s_centers
    out = np.empty(grid.shape, dtype=complex)

    def block(start):
        stop = min(start + rows_per_block, grid.ns)
        s = s_rows[start:stop, None]
        rows = pre[None, :] * psi_hat(w, s * xi[None, :])
        out[start:stop] = czt(rows, axis=-1) * post[None, :] * (np.sqrt(s) * f.dxi / (2 * math.pi))

    starts = range(0, grid.ns, rows_per_block)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(block, starts))
    else:
        for st in starts:
            block(st)
    return CoefficientField(grid, out, w)


def _check_mask(field: CoefficientField, mask: RegionMask | None):
    if mask is not None and mask.grid != field.grid:
        raise ValueError("mask and field are defined on different grids")


def lp_norm(field: CoefficientField, p: float, mask: RegionMask | None = None) -> float:
    """sum |value|^p w over the cells of ``mask`` (all cells if omitted).

    This is the p-th power of the L^p(dmu) norm, matching how the concentration
    ratios are formed.
    """
    if p < 1:
        raise ValueError(f"p must be at least 1, got {p}")
    _check_mask(field, mask)
    dens = np.abs(field.values) ** p * field.grid.weights
    if mask is not None:
        dens = dens[mask.indicator]
    return float(np.sum(dens))


def concentration(field: CoefficientField, mask: RegionMask, p: float) -> float:
    """lp_norm on the mask divided by the global lp_norm."""
    total = lp_norm(field, p)
    if total == 0:
        raise ZeroDivisionError("concentration of the zero field is undefined")
    return lp_norm(field, p, mask) / total


def disk_cell_weights(grid: HyperbolicGrid, center, R: float, oversample: int = 4) -> np.ndarray:
    """Cell weights restricted to D_R(center).

    Cells entirely inside keep their full weight; cells that straddle the
    circle get the exact measure of their oversample x oversample subcells
    whose centres lie inside.
    """
    c = complex(as_complex(center))
    rho = pseudo_dist(grid.centers, c)
    delta = grid.row_radius[:, None]
    q_in = (rho - delta) / (1 - rho * delta)
    q_out = (rho + delta) / (1 + rho * delta)
    out = np.where(q_out < R, grid.weights, 0.0)
    straddle = np.argwhere((q_in < R) & (q_out >= R))
    if straddle.size == 0:
        return out
    xe, se = grid.x_edges, grid.s_edges
    k = np.arange(oversample)
    for j, i in straddle:
        sx = xe[i] + (k + 0.5) * (xe[i + 1] - xe[i]) / oversample
        sub_s_edges = np.geomspace(se[j], se[j + 1], oversample + 1)
        ss = np.sqrt(sub_s_edges[:-1] * sub_s_edges[1:])
        meas = (xe[i + 1] - xe[i]) / oversample * (1 / sub_s_edges[:-1] - 1 / sub_s_edges[1:])
        inside = pseudo_dist(sx[None, :] + 1j * ss[:, None], c) < R
        out[j, i] = float(np.sum(inside * meas[:, None]))
    return out


def local_reproduce(field: CoefficientField, w: WaveletIndex, R: float, z, oversample: int = 4) -> complex:
    """(4 pi / (alpha C_n(R))) int_{D_R(z)} field(u) K(z, u) dmu(u)."""
    w.require_integrable()
    if not 0 < R < 1:
        raise ValueError("radius must lie in (0, 1)")
    if not field.grid.covers_disk(z, R):
        raise ValueError(f"the grid does not cover the disk of radius {R} around {complex(as_complex(z))}")
    wts = disk_cell_weights(field.grid, z, R, oversample)
    sel = wts > 0
    K = kernel(w, complex(as_complex(z)), field.grid.centers[sel])
    integral = np.sum(field.values[sel] * K * wts[sel])
    return complex(4 * math.pi / (w.alpha * C_n(w.n, w.alpha, R)) * integral)


def global_reproduce(field: CoefficientField, w: WaveletIndex, z) -> complex:
    """int field(u) K(z, u) dmu(u) over the whole grid."""
    K = kernel(w, complex(as_complex(z)), field.grid.centers)
    return complex(np.sum(field.values * K * field.grid.weights))
