"""Large-sieve densities, concentration certificates and the sharp analytic bounds.

For a region Delta and a radius R the maximum Nyquist density is

    rho(Delta, R) = sup_z |Delta cap D_R(z)|_h,

and for every f the p-concentration of W_{psi_n^alpha} f on Delta is at most
rho(Delta, R) / C_n(R).  Densities are reported as a centre-rule estimate and
as a sound upper bound obtained by exact box geometry (see
:mod:`wavesieve._density_kernels`).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _density_kernels as dk
from .hyperbolic import (AnnulusSpec, DiskSpec, HyperbolicGrid, RectSpec, RegionMask, disk_euclidean,
                         group_inv, make_grid)
from .orthogonality import C_n, C_nm, double_orthogonality_residual  # noqa: F401  (re-exported)
from .quadrature import QuadratureError, plane_integral
from .wavelets import WaveletIndex, kernel_modulus_profile, mixed_coeff

#: padding (relative to the sound value) above which a certificate is advisory
ADVISORY_PADDING = 0.01
#: padding above which the grid is declared too coarse
MAX_PADDING = 0.10
DEFAULT_R_SCAN = tuple(np.geomspace(0.2, 0.98, 20))
REFINE_DEPTH = 6
#: relative optimality gap at which the density search stops
SEARCH_GAP = 5e-3


class UnderResolvedError(ValueError):
    """The grid is too coarse for a sound density bound at this radius."""


# --------------------------------------------------------------------------- densities


def _prim_table(primitives) -> np.ndarray:
    rows = []
    for p in primitives:
        if isinstance(p, DiskSpec):
            c, r = disk_euclidean(p.center, p.radius)
            rows.append([dk.PRIM_DISK, c.real, c.imag, r, 0, 0, 0])
        elif isinstance(p, RectSpec):
            rows.append([dk.PRIM_RECT, p.x_min, p.x_max, p.s_min, p.s_max, 0, 0])
        elif isinstance(p, AnnulusSpec):
            co, ro = disk_euclidean(p.center, p.outer)
            ci, ri = disk_euclidean(p.center, p.inner)
            rows.append([dk.PRIM_ANNULUS, co.real, co.imag, ro, ci.real, ci.imag, ri])
        else:
            raise TypeError(f"unsupported primitive {p!r}")
    return np.array(rows, dtype=float).reshape(-1, 7)


def _primitive_centers(primitives) -> list[complex]:
    out = []
    for p in primitives:
        if isinstance(p, (DiskSpec, AnnulusSpec)):
            out.append(p.center.z)
        else:
            out.append(complex(0.5 * (p.x_min + p.x_max), math.sqrt(p.s_min * p.s_max)))
    return out


def _profile_tables(w: WaveletIndex | None):
    """Upper envelope per bin and a fine table of |<pi(u) psi, pi(z) psi>| against rho."""
    if w is None:
        return dk.envelope_table(np.ones(dk.ENVELOPE_BINS)), np.ones(dk.ENVELOPE_BINS + 1)
    nb_, sub = dk.ENVELOPE_BINS, 32
    t = np.linspace(0.0, 1.0, nb_ * sub + 1)
    g = kernel_modulus_profile(w, np.minimum(t, 1 - 1e-15))
    seg = np.lib.stride_tricks.sliding_window_view(g, sub + 1)[::sub]
    # max of the samples plus the largest step inside the bin bounds the bin's sup
    env = seg.max(axis=1) + np.abs(np.diff(seg, axis=1)).max(axis=1)
    return dk.envelope_table(np.minimum(env, 1.0)), g[::sub].copy()


@dataclass
class DensityScan:
    """Densities of one region over a list of radii.

    ``rho`` and ``kernel`` are sound upper bounds, the ``*_estimate`` fields
    are centre-rule values at the maximising candidate, and ``padding`` is the
    sound value minus the refined lower bound there.
    """

    radii: np.ndarray
    rho: np.ndarray
    rho_estimate: np.ndarray
    padding: np.ndarray
    kernel: np.ndarray | None
    kernel_estimate: np.ndarray | None
    argmax: list

    @property
    def relative_padding(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.rho > 0, self.padding / self.rho, 0.0)


def _cells(mask: RegionMask):
    g = mask.grid
    sel = mask.dilated
    xlo, xhi, slo, shi = (np.broadcast_to(b, g.shape) for b in g.cell_bounds())
    centers = g.centers[sel]
    delta = np.broadcast_to(g.row_radius[:, None], g.shape)[sel]
    cls = np.where(mask.interior[sel], 2, 1).astype(np.int64)
    return dict(cx=centers.real.copy(), cs=centers.imag.copy(), delta=delta.copy(), w=g.weights[sel].copy(),
                ind=mask.indicator[sel].copy(), x0=xlo[sel].copy(), x1=xhi[sel].copy(),
                s0=slo[sel].copy(), s1=shi[sel].copy(), cls=cls)


ROOT_TILE = 16


@dataclass(frozen=True)
class _Tile:
    """A rectangle of candidate centres (rows j0:j1, columns i0:i1) or one primitive centre."""

    j0: int
    j1: int
    i0: int
    i1: int
    point: complex | None = None

    @property
    def single(self) -> bool:
        return self.point is not None or (self.j1 - self.j0 == 1 and self.i1 - self.i0 == 1)

    def children(self):
        jm = (self.j0 + self.j1) // 2 if self.j1 - self.j0 > 1 else self.j1
        im = (self.i0 + self.i1) // 2 if self.i1 - self.i0 > 1 else self.i1
        for ja, jb in ((self.j0, jm), (jm, self.j1)):
            for ia, ib in ((self.i0, im), (im, self.i1)):
                if jb > ja and ib > ia:
                    yield _Tile(ja, jb, ia, ib)


def _tile_geometry(grid: HyperbolicGrid, tile: _Tile) -> tuple[float, float, float]:
    """Centre and pseudohyperbolic radius of the candidate centres in a tile."""
    if tile.point is not None:
        return tile.point.real, tile.point.imag, 0.0
    xc, sc = grid.x_centers, grid.s_centers
    x_lo, x_hi = xc[tile.i0], xc[tile.i1 - 1]
    s_lo, s_hi = sc[tile.j0], sc[tile.j1 - 1]
    x_mid, s_mid = 0.5 * (x_lo + x_hi), math.sqrt(s_lo * s_hi)
    corners = np.array([x_lo + 1j * s_lo, x_lo + 1j * s_hi, x_hi + 1j * s_lo, x_hi + 1j * s_hi])
    mid = x_mid + 1j * s_mid
    return x_mid, s_mid, float(np.max(np.abs(corners - mid) / np.abs(corners - np.conj(mid))))


def _region_measure_bound(grid: HyperbolicGrid, refine_args) -> float:
    """Refined upper bound on |Delta|_h, used to cap every density bound.

    Evaluated as one huge pseudohyperbolic disk whose Euclidean image holds
    the whole grid window.
    """
    x0, x1 = grid.x_edges[0], grid.x_edges[-1]
    s0, s1 = grid.s_edges[0], grid.s_edges[-1]
    px, ps = 0.5 * (x0 + x1), math.sqrt(s0 * s1)
    R = 1.0 - 1e-6
    while True:
        q = 1 - R * R
        cs, r = ps * (1 + R * R) / q, 2 * R * ps / q
        far = max((x - px) ** 2 + (y - cs) ** 2 for x in (x0, x1) for y in (s0, s1))
        if far < r * r:
            break
        R = 1.0 - (1.0 - R) * 1e-2
        if R >= 1.0:
            return math.inf
    up, _, _ = dk.refine_candidate(px, ps, R, *refine_args)
    return float(up)


def density_scan(mask: RegionMask, radii, wavelet: WaveletIndex | None = None,
                 refine_depth: int = REFINE_DEPTH, gap: float = SEARCH_GAP) -> DensityScan:
    """rho(Delta, R) (and the kernel-weighted density when ``wavelet`` is given) for each R.

    Candidate centres are all grid cell centres plus the primitive centres.
    The sup is found by best-first branch and bound: a tile of candidates is
    bounded through its centre and radius, tiles are split in four while their
    bound beats the best refined value, and single candidates are bounded
    first at cell level and then by exact box refinement.  The result bounds
    the candidate sup from above.  Estimates are centre-rule values at the
    maximising candidate.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0 or np.any((radii <= 0) | (radii >= 1)):
        raise ValueError("radii must lie in (0, 1)")
    order = np.argsort(radii)
    rs = radii[order]
    nr = rs.size
    if mask.is_empty:
        z = np.zeros(nr)
        kz = z.copy() if wavelet is not None else None
        return DensityScan(radii, z.copy(), z.copy(), z.copy(), kz, kz, [None] * nr)
    grid = mask.grid
    cells = _cells(mask)
    env, prof = _profile_tables(wavelet)
    cell_args = (cells["cx"], cells["cs"], cells["delta"], cells["w"], cells["ind"])
    refine_args = (cells["x0"], cells["x1"], cells["s0"], cells["s1"], cells["cls"], cells["w"],
                   _prim_table(mask.primitives), env, refine_depth)
    bounds: dict[_Tile, tuple] = {}
    depths = sorted({min(2, refine_depth), min(4, refine_depth), refine_depth})

    def bound_tiles(tiles):
        todo = [t for t in tiles if t not in bounds]
        if todo:
            geo = np.array([_tile_geometry(grid, t) for t in todo])
            res = dk.cell_level_scan(geo[:, 0].copy(), geo[:, 1].copy(), geo[:, 2].copy(), *cell_args, rs, env, prof)
            for k, t in enumerate(todo):
                bounds[t] = tuple(r[k] for r in res)

    ns, nx = grid.shape
    roots = [_Tile(j, min(j + ROOT_TILE, ns), i, min(i + ROOT_TILE, nx))
             for j in range(0, ns, ROOT_TILE) for i in range(0, nx, ROOT_TILE)]
    roots += [_Tile(0, 0, 0, 0, point=complex(z)) for z in _primitive_centers(mask.primitives)]
    bound_tiles(roots)
    cap = _region_measure_bound(grid, refine_args)

    def search(j, which):
        """Best-first search at radius index j; which = 0 for rho, 1 for the kernel density.

        Stops once no unexplored bound exceeds the best refined value by more
        than ``gap``; the returned value is the larger of the two, so it stays
        an upper bound, and the gap is charged to the padding.
        """
        heap = [(-min(bounds[t][which][j], cap), k, t) for k, t in enumerate(roots)]
        heapq.heapify(heap)
        tie = len(heap)
        best, low_at_best, info = -1.0, 0.0, None
        slack = 0.0  # largest bound of a candidate dropped within the gap
        while heap and -heap[0][0] > best * (1 + gap) and best < cap:
            neg, _, tile = heapq.heappop(heap)
            if tile.single:
                z = tile.point if tile.point is not None else complex(grid.x_centers[tile.i0], grid.s_centers[tile.j0])
                val = -neg
                for depth in depths:
                    up, low, kup = dk.refine_candidate(z.real, z.imag, rs[j], *refine_args[:-1], depth)
                    val = min((up, kup)[which], val)
                    if val <= best * (1 + gap):
                        break
                if val <= best:
                    continue
                if val <= best * (1 + gap) and depth < depths[-1]:
                    slack = max(slack, val)
                    continue
                if val > best:
                    best, low_at_best = val, low
                    info = (z, float(bounds[tile][2 + which][j]))
                continue
            kids = list(tile.children())
            bound_tiles(kids)
            for kid in kids:
                ub = min(bounds[kid][which][j], -neg)
                if ub > best:
                    tie += 1
                    heapq.heappush(heap, (-ub, tie, kid))
        best = max(best, 0.0)
        top = -heap[0][0] if heap else 0.0
        sound = min(max(best, top, slack), cap)
        if info is None:
            return sound, 0.0, None, 0.0
        return sound, sound - (low_at_best if which == 0 else 0.0), info[0], info[1]

    rho, pad, est = np.zeros(nr), np.zeros(nr), np.zeros(nr)
    ker, kest = np.zeros(nr), np.zeros(nr)
    arg = [None] * nr
    for j in range(nr):
        rho[j], pad[j], arg[j], est[j] = search(j, 0)
        if wavelet is not None:
            kb, _, _, kest[j] = search(j, 1)
            # D <= rho for the true values, so the smaller bound stays sound
            ker[j] = min(kb, rho[j])
    inv = np.empty_like(order)
    inv[order] = np.arange(nr)
    return DensityScan(radii, rho[inv], est[inv], pad[inv],
                       ker[inv] if wavelet is not None else None,
                       kest[inv] if wavelet is not None else None,
                       [arg[k] for k in inv])


def _check_padding(scan: DensityScan):
    bad = scan.relative_padding > MAX_PADDING
    if np.any(bad):
        R = float(scan.radii[np.argmax(bad)])
        raise UnderResolvedError(f"density padding exceeds {MAX_PADDING:.0%} at R = {R}; refine the grid")


def max_nyquist_density(mask: RegionMask, R: float) -> float:
    """Sound upper bound on the maximum Nyquist density rho(Delta, R)."""
    scan = density_scan(mask, [R])
    _check_padding(scan)
    return float(scan.rho[0])


def kernel_density(mask: RegionMask, w: WaveletIndex, R: float) -> float:
    """Sound upper bound on sup_z int_{Delta cap D_R(z)} |<pi(u) psi, pi(z) psi>| dmu(u)."""
    scan = density_scan(mask, [R], wavelet=w)
    _check_padding(scan)
    return float(scan.kernel[0])


# --------------------------------------------------------------------------- certificate


@dataclass
class SieveCertificate:
    region: dict
    wavelet: dict
    p: float
    R_star: float
    rho: float
    C_R: float
    bound: float
    d_refined: float | None
    sound: bool
    max_padding: float
    recovery_ok: bool
    measure_bound_ok: bool
    region_measure: float
    scan: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def _ratios(mask, w, radii):
    scan = density_scan(mask, radii, wavelet=w)
    _check_padding(scan)
    C = np.array([C_n(w.n, w.alpha, R) for R in radii])
    rows = []
    for k, R in enumerate(radii):
        rows.append({"R": float(R), "rho": float(scan.rho[k]), "rho_estimate": float(scan.rho_estimate[k]),
                     "padding": float(scan.padding[k]), "C_R": float(C[k]),
                     "ratio": float(scan.rho[k] / C[k]),
                     "kernel_density": float(scan.kernel[k]),
                     "kernel_ratio": float(scan.kernel[k] / C[k])})
    return rows


def certificate(mask: RegionMask, w: WaveletIndex, p: float = 1.0, R_scan=DEFAULT_R_SCAN,
                bisection_rounds: int = 3) -> SieveCertificate:
    """Concentration certificate min_R rho(Delta, R) / C_n(R) for Delta = ``mask``.

    After the scan, the best radius is refined by bisection between its scan
    neighbours.  Every evaluated radius is kept in ``scan`` for audit.
    """
    w.require_integrable()
    if p < 1:
        raise ValueError("p must be at least 1")
    radii = sorted(float(r) for r in R_scan)
    if not radii or radii[0] <= 0 or radii[-1] >= 1:
        raise ValueError("R_scan must be a nonempty subset of (0, 1)")
    rows = _ratios(mask, w, radii)
    for _ in range(bisection_rounds if len(radii) > 1 else 0):
        rs = sorted(r["R"] for r in rows)
        k = rs.index(min(rows, key=lambda r: r["ratio"])["R"])
        new = []
        if k > 0:
            new.append(0.5 * (rs[k - 1] + rs[k]))
        if k < len(rs) - 1:
            new.append(0.5 * (rs[k] + rs[k + 1]))
        rows += _ratios(mask, w, new)
    rows.sort(key=lambda r: r["R"])
    best = min(rows, key=lambda r: r["ratio"])
    kbest = min(r["kernel_ratio"] for r in rows)
    max_pad = max((r["padding"] / r["rho"] if r["rho"] > 0 else 0.0) for r in rows)
    bound = best["ratio"]
    measure = mask.measure_h
    return SieveCertificate(
        region=mask.to_json(), wavelet=w.to_json(), p=float(p), R_star=best["R"], rho=best["rho"],
        C_R=best["C_R"], bound=bound, d_refined=kbest, sound=max_pad <= ADVISORY_PADDING,
        max_padding=max_pad, recovery_ok=kbest < 0.5, measure_bound_ok=bound <= measure + 1e-12,
        region_measure=measure, scan=rows)


# --------------------------------------------------------------------------- sharp bounds


def ramos_tilli_bound(measure_h: float, alpha: float, p: float) -> float:
    """1 - (1 + |Delta|_h / 4 pi)^(1 - (alpha+1) p / 2)."""
    if measure_h < 0:
        raise ValueError("measure must be nonnegative")
    if not alpha > 1 or not p > 1:
        raise ValueError("need alpha > 1 and p > 1")
    if math.isinf(measure_h):
        return 1.0
    return -math.expm1((1 - (alpha + 1) * p / 2) * math.log1p(measure_h / (4 * math.pi)))


def lieb_constant(alpha: float, p: float) -> float:
    """8 pi / ((alpha+1) p - 2), the sharp constant for ||W f||_p^p / ||f||^p."""
    if not alpha > 1 or p < 2:
        raise ValueError("need alpha > 1 and p >= 2")
    return 8 * math.pi / ((alpha + 1) * p - 2)


def local_lieb_bound(measure_h: float, alpha: float, p: float) -> float:
    return lieb_constant(alpha, p) * ramos_tilli_bound(measure_h, alpha, p)


def uncertainty_min_measure(epsilon: float, alpha: float, p: float) -> float:
    """Smallest |Delta|_h that can hold a (1 - epsilon) share: 4 pi (eps^(2/(2-(alpha+1)p)) - 1)."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if not alpha > 1 or not p > 1:
        raise ValueError("need alpha > 1 and p > 1")
    return 4 * math.pi * math.expm1(2 / (2 - (alpha + 1) * p) * math.log(epsilon))


@dataclass(frozen=True)
class GeneralLieb:
    bound: float
    l1_wavelet_side: float
    l1_reference_side: float
    ring_fraction: float


def coefficient_l1_norm(n: int, a: float, m: int, b: float, **kwargs):
    """||W_{psi_n^a} psi_m^b||_{L^1(dmu)} by whole-plane quadrature."""
    return plane_integral(lambda z: np.abs(mixed_coeff(n, a, m, b, z)), **kwargs)


def general_lieb_bound(w: WaveletIndex, ref_alpha: float, p: float, **quad) -> GeneralLieb:
    """Lieb-type bound for psi = psi_n^alpha built from the reference psi_0^ref_alpha.

    (8 pi/((ref+1) p - 2)) (ref/4 pi)^p max(||W_psi psi_0||_1, ||W_psi_0 psi||_1)^p.
    The two L^1 norms are related by the reflection R W_psi f = conj(W_f psi)
    but are not equal, so both are integrated.  Raises
    :class:`~wavesieve.quadrature.QuadratureError` when the window cannot be
    grown far enough (integrands decay slowly for parameters near 1).
    """
    if not ref_alpha > 1 or p < 2:
        raise ValueError("need ref_alpha > 1 and p >= 2")
    first = coefficient_l1_norm(w.n, w.alpha, 0, ref_alpha, **quad)
    second = coefficient_l1_norm(0, ref_alpha, w.n, w.alpha, **quad)
    big = max(first.value, second.value)
    bound = lieb_constant(ref_alpha, p) * (ref_alpha / (4 * math.pi)) ** p * big ** p
    return GeneralLieb(bound, first.value, second.value, max(first.last_ring_fraction, second.last_ring_fraction))


# --------------------------------------------------------------------------- Young


YOUNG_GRID = dict(x_min=-12.0, x_max=12.0, nx=128, s_min=1 / 12, s_max=12.0, ns=72)


@dataclass(frozen=True)
class FieldSpec:
    """A closed-form field W_{psi_n^a} psi_m^b, optionally replaced by its modulus."""

    n: int = 0
    a: float = 2.0
    m: int = 0
    b: float = 2.0
    modulus: bool = False
    scale: float = 1.0

    def __call__(self, z):
        v = self.scale * mixed_coeff(self.n, self.a, self.m, self.b, z)
        return np.abs(v) if self.modulus else v

    @classmethod
    def from_json(cls, obj) -> "FieldSpec":
        unknown = set(obj) - {"n", "a", "m", "b", "modulus", "scale"}
        if unknown:
            raise ValueError(f"unknown field keys {sorted(unknown)}")
        return cls(**obj)


@dataclass(frozen=True)
class YoungResult:
    lhs: float
    rhs: float
    residual: float
    norm_F: float
    norm_G: float
    norm_RG: float
    tail_fraction: float


def _grid_norm(values, weights, p):
    return float(np.sum(np.abs(values) ** p * weights) ** (1 / p))


def group_convolution(F, G, grid: HyperbolicGrid, chunk: int = 256) -> np.ndarray:
    """(F * G)(z) = int F(w) G(w^{-1} . z) dmu(w) by cell quadrature in w at every grid centre."""
    zc = grid.centers.ravel()
    wts = grid.weights.ravel()
    Fw = F(zc) * wts
    winv = group_inv(zc)
    out = np.empty(zc.size, dtype=complex)
    for start in range(0, zc.size, chunk):
        zz = zc[start:start + chunk]
        # w^{-1} . z for every (z, w) pair
        arg = winv.real[None, :] + winv.imag[None, :] * zz.real[:, None] + 1j * (winv.imag[None, :] * zz.imag[:, None])
        out[start:start + chunk] = G(arg) @ Fw
    return out.reshape(grid.shape)


def young_convolution_check(F_spec, G_spec, p: float, q: float, r: float,
                            grid: HyperbolicGrid | None = None) -> YoungResult:
    """||F * G||_r - ||F||_p max(||G||_q, ||R G||_q) with R G(z) = G(z^{-1}).

    Non-positive up to quadrature error by the non-unimodular Young inequality.
    All norms are grid quadratures; ``tail_fraction`` is the largest share of
    |F|^p or |G|^q mass in the grid's boundary cells.
    """
    if abs(1 + 1 / r - 1 / p - 1 / q) > 1e-12:
        raise ValueError("exponents must satisfy 1 + 1/r = 1/p + 1/q")
    F = F_spec if callable(F_spec) else FieldSpec.from_json(F_spec)
    G = G_spec if callable(G_spec) else FieldSpec.from_json(G_spec)
    grid = make_grid(YOUNG_GRID) if grid is None else grid
    z = grid.centers
    wts = grid.weights
    Fv, Gv, RGv = F(z), G(z), G(group_inv(z))
    edge = grid.boundary_cells()
    tails = []
    for v, e in ((Fv, p), (Gv, q)):
        mass = np.abs(v) ** e * wts
        tot = mass.sum()
        tails.append(float(mass[edge].sum() / tot) if tot > 0 else 0.0)
    nF = _grid_norm(Fv, wts, p)
    nG = _grid_norm(Gv, wts, q)
    nRG = _grid_norm(RGv, wts, q)
    if nF == 0:
        return YoungResult(0.0, 0.0, 0.0, 0.0, nG, nRG, max(tails))
    conv = group_convolution(F, G, grid)
    lhs = _grid_norm(conv, wts, r)
    rhs = nF * max(nG, nRG)
    return YoungResult(lhs, rhs, lhs - rhs, nF, nG, nRG, max(tails))


__all__ = [
    "C_n", "C_nm", "DensityScan", "FieldSpec", "GeneralLieb", "QuadratureError", "SieveCertificate",
    "UnderResolvedError", "YoungResult", "certificate", "coefficient_l1_norm", "density_scan",
    "double_orthogonality_residual", "general_lieb_bound", "group_convolution", "kernel_density",
    "lieb_constant", "local_lieb_bound", "max_nyquist_density", "ramos_tilli_bound",
    "uncertainty_min_measure", "young_convolution_check",
]
