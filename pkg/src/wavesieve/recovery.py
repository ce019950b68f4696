"""Weighted L1 recovery of coefficient fields from their values off a region.

A finite dictionary of translated atoms spans the candidate fields.  Given
the field on the observed cells (the complement of the mask), the recovered
coefficients minimise sum_cells |(A c)(z)| w_cell subject to agreement on the
observed cells.  The constraint is eliminated by a null-space parametrisation
c = c_p + N y, after which the free part only touches the masked cells and is
solved with a primal-dual (Chambolle-Pock) iteration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hyperbolic import HyperbolicGrid, RegionMask, UHPoint, make_grid
from .transform import CoefficientField, lp_norm
from .wavelets import WaveletIndex, as_point, translated_coeff

MAX_ATOMS = 512
ROW_BLOCK = 4096


class RecoveryError(RuntimeError):
    """Raised when the observation constraint cannot be met."""


@dataclass(frozen=True)
class AtomDictionary:
    """Atoms pi(w_k) psi_{m_k}^alpha analysed with psi_n^alpha.

    Column k evaluated at z is basis_coeff(n, m_k, alpha, w_k^{-1} . z).
    """

    locations: tuple
    indices: tuple
    wavelet: WaveletIndex

    def __post_init__(self):
        locs = tuple(as_point(z) for z in self.locations)
        idx = tuple(int(m) for m in self.indices)
        if len(locs) != len(idx):
            raise ValueError("locations and indices differ in length")
        if not locs:
            raise ValueError("dictionary is empty")
        if len(locs) > MAX_ATOMS:
            raise ValueError(f"dictionary has {len(locs)} atoms, at most {MAX_ATOMS} are supported")
        if min(idx) < 0:
            raise ValueError("atom indices must be nonnegative")
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.locations)

    @classmethod
    def lattice(cls, grid: HyperbolicGrid, wavelet: WaveletIndex, spacing: float = 0.5,
                indices=(0,), margin: float = 1.0) -> "AtomDictionary":
        """Atoms on a hyperbolic lattice through i, inside the grid window shrunk by ``margin``.

        Rows sit at s = q^j with log q the hyperbolic distance of pseudohyperbolic
        ``spacing``; within a row neighbours are ``spacing`` apart, and odd rows
        are staggered by half a step.  ``margin`` is a hyperbolic distance kept
        from the window's top and bottom and a multiple of s kept from its sides.
        """
        if not 0 < spacing < 1:
            raise ValueError("spacing must lie in (0, 1)")
        step = 2 * math.atanh(spacing)
        lo = math.log(grid.s_edges[0]) + margin
        hi = math.log(grid.s_edges[-1]) - margin
        locs, idx = [], []
        for j in range(math.ceil(lo / step), math.floor(hi / step) + 1):
            s = math.exp(j * step)
            dx = 2 * s * spacing / math.sqrt(1 - spacing * spacing)
            shift = 0.5 * dx if j % 2 else 0.0
            x_lo, x_hi = grid.x_edges[0] + margin * s, grid.x_edges[-1] - margin * s
            k0 = math.ceil((x_lo - shift) / dx)
            k1 = math.floor((x_hi - shift) / dx)
            for k in range(k0, k1 + 1):
                for m in indices:
                    locs.append(UHPoint(k * dx + shift, s))
                    idx.append(m)
        return cls(tuple(locs), tuple(idx), wavelet)

    def columns(self, z) -> np.ndarray:
        """Matrix of column values at the points ``z`` (shape z.shape + (K,))."""
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape + (len(self),), dtype=complex)
        n, a = self.wavelet.n, self.wavelet.alpha
        for k, (w, m) in enumerate(zip(self.locations, self.indices)):
            out[..., k] = translated_coeff(n, m, a, z, w)
        return out

    def to_json(self):
        return {"wavelet": self.wavelet.to_json(),
                "atoms": [{"location": [w.x, w.s], "m": m} for w, m in zip(self.locations, self.indices)]}

    @classmethod
    def from_json(cls, obj) -> "AtomDictionary":
        w = WaveletIndex(**obj["wavelet"])
        atoms = obj["atoms"]
        return cls(tuple(UHPoint(*a["location"]) for a in atoms), tuple(a["m"] for a in atoms), w)


@dataclass
class RecoveryProblem:
    """Recover a field on ``grid`` from its values on the cells outside ``mask``."""

    dictionary: AtomDictionary
    mask: RegionMask
    observations: np.ndarray
    tolerance: float = 1e-8
    max_iter: int = 50_000
    null_rtol: float = 1e-10

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=complex).ravel()
        expected = int(np.count_nonzero(~self.mask.indicator))
        if obs.size != expected:
            raise ValueError(f"expected {expected} observations (one per cell outside the mask), got {obs.size}")
        self.observations = obs

    @property
    def grid(self) -> HyperbolicGrid:
        return self.mask.grid

    @classmethod
    def from_truth(cls, dictionary: AtomDictionary, mask: RegionMask, coeffs, **params) -> "RecoveryProblem":
        """Problem whose observations come from the dictionary combination ``coeffs``."""
        full = _synthesize_values(dictionary, mask.grid, coeffs)
        return cls(dictionary, mask, full[~mask.indicator], **params)


@dataclass(frozen=True)
class RecoveryResult:
    coeffs: np.ndarray
    objective: float
    constraint_residual: float
    iterations: int
    converged: bool
    null_dim: int
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        return {"coeffs": [[c.real, c.imag] for c in self.coeffs], "objective": self.objective,
                "constraint_residual": self.constraint_residual, "iterations": self.iterations,
                "converged": self.converged, "null_dim": self.null_dim, **self.diagnostics}


def _check_coeffs(dictionary: AtomDictionary, coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex).ravel()
    if c.size != len(dictionary):
        raise ValueError(f"{c.size} coefficients for {len(dictionary)} atoms")
    return c


def _synthesize_values(dictionary: AtomDictionary, grid: HyperbolicGrid, coeffs) -> np.ndarray:
    c = _check_coeffs(dictionary, coeffs)
    z = grid.centers
    out = np.zeros(grid.shape, dtype=complex)
    n, a = dictionary.wavelet.n, dictionary.wavelet.alpha
    for k in np.nonzero(c)[0]:
        out += c[k] * translated_coeff(n, dictionary.indices[k], a, z, dictionary.locations[k])
    return out


def synthesize(coeffs, problem: RecoveryProblem) -> CoefficientField:
    """Field sum_k c_k A[:, k] on the problem grid."""
    vals = _synthesize_values(problem.dictionary, problem.grid, coeffs)
    return CoefficientField(problem.grid, vals, problem.dictionary.wavelet)


def concentration_of(field: CoefficientField, mask: RegionMask, p: float = 1.0) -> float:
    """||F chi_mask||_p^p / ||F||_p^p."""
    total = lp_norm(field, p)
    if total == 0:
        raise ValueError("zero field has no concentration")
    return lp_norm(field, p, mask) / total


def weighted_l1(values: np.ndarray, grid: HyperbolicGrid) -> float:
    return float(np.sum(np.abs(values) * grid.weights))


def _observed_factor(problem: RecoveryProblem):
    """R factor of sqrt(w) [A_O | b] by row-blocked QR, never forming A_O whole."""
    grid = problem.grid
    obs = ~problem.mask.indicator
    z = grid.centers[obs]
    sw = np.sqrt(grid.weights[obs])
    b = problem.observations
    K = len(problem.dictionary)
    R = np.zeros((0, K + 1), dtype=complex)
    for start in range(0, z.size, ROW_BLOCK):
        sl = slice(start, start + ROW_BLOCK)
        block = np.empty((z[sl].size, K + 1), dtype=complex)
        block[:, :K] = problem.dictionary.columns(z[sl])
        block[:, K] = b[sl]
        block *= sw[sl, None]
        R = scipy.linalg.qr(np.vstack([R, block]), mode="r")[0][: K + 1]
    return R, float(np.linalg.norm(sw * b))


def _chambolle_pock(M, d, wts, tol, max_iter):
    """min_y sum_i wts_i |(M y + d)_i| by primal-dual splitting; returns (y, iterations, converged)."""
    L = np.linalg.norm(M, 2)
    if L == 0:
        return np.zeros(M.shape[1], dtype=complex), 0, True
    tau = sigma = 0.99 / L
    y = np.zeros(M.shape[1], dtype=complex)
    ybar = y.copy()
    u = np.zeros(M.shape[0], dtype=complex)
    scale = max(float(np.linalg.norm(d)), 1e-300)
    for it in range(1, max_iter + 1):
        u_old, y_old = u, y
        v = u + sigma * (M @ ybar + d)
        mod = np.abs(v)
        u = v * np.minimum(1.0, wts / np.maximum(mod, 1e-300))
        y = y - tau * (M.conj().T @ u)
        ybar = 2 * y - y_old
        dy, du = y - y_old, u - u_old
        primal = np.linalg.norm(dy / tau - M.conj().T @ du)
        dual = np.linalg.norm(du / sigma - M @ dy)
        if primal + dual < tol * (scale + np.linalg.norm(wts)):
            return y, it, True
    return y, max_iter, False


def l1_recover(problem: RecoveryProblem) -> RecoveryResult:
    """Minimise the weighted L1 norm of the field subject to matching the observations.

    Directions that the observed cells cannot see (singular values of the
    weighted observed block below ``null_rtol`` times the largest) are left
    free and chosen by the L1 objective on the masked cells.  Raises
    :class:`RecoveryError` when the observations lie off the dictionary span by
    more than the tolerance.
    """
    K = len(problem.dictionary)
    R, bnorm = _observed_factor(problem)
    A_r, b_r = R[:K, :K], R[:K, K]
    off_span = float(abs(R[K, K])) if R.shape[0] > K else 0.0
    U, sv, Vh = np.linalg.svd(A_r)
    keep = sv > problem.null_rtol * sv[0] if sv[0] > 0 else np.zeros(K, bool)
    rank = int(np.count_nonzero(keep))
    c_p = Vh[:rank].conj().T @ ((U[:, :rank].conj().T @ b_r) / sv[:rank])
    N = Vh[rank:].conj().T

    grid = problem.grid
    inside = problem.mask.indicator
    iterations, converged = 0, True
    c = c_p
    if N.shape[1] and np.any(inside):
        cols = problem.dictionary.columns(grid.centers[inside])
        wts = grid.weights[inside]
        y, iterations, converged = _chambolle_pock(cols @ N, cols @ c_p, wts, problem.tolerance, problem.max_iter)
        c = c_p + N @ y

    resid_vec = A_r @ c - b_r
    residual = math.hypot(float(np.linalg.norm(resid_vec)), off_span) / max(bnorm, 1e-300)
    if residual > max(problem.tolerance, 1e2 * problem.null_rtol):
        raise RecoveryError(f"observations are not matched: relative residual {residual:.3e}")
    vals = _synthesize_values(problem.dictionary, grid, c)
    return RecoveryResult(c, weighted_l1(vals, grid), residual, iterations, converged, K - rank,
                          {"rank": rank, "smallest_kept_singular_value": float(sv[rank - 1]) if rank else 0.0})


def field_error(recovered, truth, problem: RecoveryProblem) -> float:
    """||F_rec - F_true||_2 / ||F_true||_2 over the grid."""
    diff = synthesize(np.asarray(recovered) - np.asarray(truth), problem)
    ref = synthesize(truth, problem)
    return math.sqrt(lp_norm(diff, 2) / lp_norm(ref, 2))


def problem_from_json(obj, base_dir=None) -> tuple[RecoveryProblem, np.ndarray | None]:
    """Build a problem from a JSON description; returns (problem, truth or None).

    Keys: ``grid`` (grid parameters), ``wavelet`` {n, alpha}, ``dictionary``
    ({spacing, indices, margin} for a lattice or {atoms: [...]}), ``mask``
    (list of primitives), and either ``truth`` (list of [re, im] per atom or
    {atom index: [re, im]}) or ``observations`` (a container path).
    """
    from .container import read_container
    from .hyperbolic import mask_from_primitives, primitive_from_json

    allowed = {"grid", "wavelet", "dictionary", "mask", "truth", "observations", "tolerance", "max_iter"}
    unknown = set(obj) - allowed
    if unknown:
        raise ValueError(f"unknown problem keys {sorted(unknown)}")
    grid = make_grid(obj.get("grid"))
    w = WaveletIndex(**obj["wavelet"])
    dspec = obj.get("dictionary", {})
    if "atoms" in dspec:
        dictionary = AtomDictionary.from_json({"wavelet": obj["wavelet"], "atoms": dspec["atoms"]})
    else:
        extra = set(dspec) - {"spacing", "indices", "margin"}
        if extra:
            raise ValueError(f"unknown dictionary keys {sorted(extra)}")
        dictionary = AtomDictionary.lattice(grid, w, dspec.get("spacing", 0.5),
                                            tuple(dspec.get("indices", (0,))), dspec.get("margin", 1.0))
    mask = mask_from_primitives(grid, [primitive_from_json(p) for p in obj.get("mask", [])])
    params = {k: obj[k] for k in ("tolerance", "max_iter") if k in obj}
    if ("truth" in obj) == ("observations" in obj):
        raise ValueError("give exactly one of 'truth' and 'observations'")
    if "truth" in obj:
        truth = np.zeros(len(dictionary), dtype=complex)
        t = obj["truth"]
        items = t.items() if isinstance(t, dict) else enumerate(t)
        for k, v in items:
            truth[int(k)] = complex(*v) if isinstance(v, (list, tuple)) else complex(v)
        return RecoveryProblem.from_truth(dictionary, mask, truth, **params), truth
    path = obj["observations"]
    if base_dir is not None:
        from pathlib import Path
        path = Path(base_dir) / path
    _, arr = read_container(path, "observations")
    return RecoveryProblem(dictionary, mask, arr, **params), None


def load_problem(path):
    from pathlib import Path
    p = Path(path)
    return problem_from_json(json.loads(p.read_text()), base_dir=p.parent)
