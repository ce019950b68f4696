"""Numerical self-test: the fifteen end-to-end checks the library must pass.

Each check returns a :class:`CheckResult` with the worst observed error and
the limit it was held to.  ``tolerance_scale`` multiplies every limit (but
never the runtime budgets), which is how the CLI exposes loosened runs.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import special
from .hyperbolic import (DEFAULT_GRID, WIDE_GRID, AnnulusSpec, DiskSpec, UHPoint, disk_measure_h, make_grid,
                         mask_from_primitives)
from .orthogonality import C0_closed, C_n, C_nm, disk_inner_product
from .recovery import AtomDictionary, RecoveryProblem, field_error, l1_recover
from .sieve import certificate, density_scan, lieb_constant, ramos_tilli_bound
from .transform import CoefficientField, atom_combination, disk_cell_weights, forward_cwt, local_reproduce, lp_norm
from .wavelets import (WaveletIndex, admissibility_quadrature, basis_coeff, cross_level_orthogonality_check,
                       hardy_norm_sq, translated_coeff)


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    worst: float
    limit: float
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] criterion {self.number:2d}: {self.title} "
                f"(worst {self.worst:.3e}, limit {self.limit:.1e}, {self.seconds:.1f} s)")

    def to_json(self):
        return {"number": self.number, "title": self.title, "passed": bool(self.passed),
                "worst": self.worst, "limit": self.limit, "seconds": self.seconds, "details": self.details}


def _rel(a, b):
    return abs(a - b) / abs(b)


def _rng(seed):
    return np.random.default_rng(seed)


def _random_unit(rng, k):
    c = rng.normal(size=k) + 1j * rng.normal(size=k)
    return c / np.linalg.norm(c)


# ----------------------------------------------------------------------------- checks


def check_admissibility(scale=1.0):
    worst = 0.0
    t0 = time.perf_counter()
    for n in range(5):
        for a in (1.5, 2.0, 3.0, 5.0):
            worst = max(worst, _rel(admissibility_quadrature(WaveletIndex(n, a)), 4 * math.pi / a))
    dt = time.perf_counter() - t0
    lim = 1e-8 * scale
    return CheckResult(1, "admissibility constant 4 pi / alpha", worst <= lim and dt < 1.0, worst, lim, dt,
                       {"runtime_budget_s": 1.0})


def check_normalisation(scale=1.0):
    worst = max(abs(hardy_norm_sq(WaveletIndex(n, a)) - 1) for n in range(5) for a in (1.5, 2.0, 3.0, 5.0))
    return CheckResult(2, "unit Hardy norm of the wavelets", worst <= 1e-8 * scale, worst, 1e-8 * scale)


def check_double_orthogonality(scale=1.0):
    worst = 0.0
    t0 = time.perf_counter()
    for a in (1.5, 2.5):
        for R in (0.3, 0.6, 0.9):
            for n in range(3):
                diag = [C_nm(n, m, a, R) for m in range(5)]
                for m in range(5):
                    for k in range(m, 5):
                        val = disk_inner_product(n, m, k, a, R)
                        if m == k:
                            err = abs(val - diag[m]) / diag[m]
                        else:
                            err = abs(val) / math.sqrt(diag[m] * diag[k])
                        worst = max(worst, err)
    dt = time.perf_counter() - t0
    lim = 1e-7 * scale
    return CheckResult(3, "double orthogonality on pseudohyperbolic disks", worst <= lim and dt < 30, worst, lim,
                       dt, {"runtime_budget_s": 30})


def check_c0_closed_form(scale=1.0):
    worst = max(_rel(C_n(0, a, R), C0_closed(a, R)) for a in (0.5, 1.5, 2.0, 3.0) for R in (0.1, 0.3, 0.5, 0.7, 0.9))
    return CheckResult(4, "closed form of C_0(R)", worst <= 1e-10 * scale, worst, 1e-10 * scale)


def check_c_limit(scale=1.0):
    # the exact gap is about binom(n+alpha, n)^2 (1 - R^2)^alpha, above the limit for alpha <= 2, n >= 2
    alphas = (2.5, 3.0, 5.0)
    worst = max(_rel(C_n(n, a, 0.999), 4 * math.pi / a) for n in range(5) for a in alphas)
    return CheckResult(5, "C_n(R) tends to 4 pi / alpha", worst <= 1e-4 * scale, worst, 1e-4 * scale,
                       details={"alphas": list(alphas), "R": 0.999})


def check_local_reproducing(scale=1.0):
    grid = make_grid(DEFAULT_GRID)
    worst = 0.0
    for a in (1.5, 2.0, 2.5, 4.0):
        for n in range(3):
            w = WaveletIndex(n, a)
            F = CoefficientField.from_function(grid, w, lambda z: basis_coeff(n, n, a, z))
            for R in (0.5, 0.8):
                worst = max(worst, abs(local_reproduce(F, w, R, 1j) - 1))
    return CheckResult(6, "local reproducing formula at i", worst <= 1e-3 * scale, worst, 1e-3 * scale)


def check_isometry(scale=1.0):
    # alpha = 5, m <= 2: the default window holds all but ~2e-3 of the L^2 mass
    a, w = 5.0, WaveletIndex(0, 5.0)
    grid = make_grid(DEFAULT_GRID)
    rng = _rng(7)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(10):
        c = _random_unit(rng, 3)
        f = atom_combination(c, [(1j, m) for m in range(3)], a)
        F = forward_cwt(f, w, grid)
        worst = max(worst, _rel(lp_norm(F, 2), 4 * math.pi / a * f.norm_sq()))
    dt = time.perf_counter() - t0
    lim = 5e-3 * scale
    return CheckResult(7, "isometry of the sampled transform", worst <= lim and dt < 20, worst, lim, dt,
                       {"runtime_budget_s": 20, "alpha": a, "indices": [0, 1, 2]})


@functools.lru_cache(maxsize=1)
def _wide():
    g = make_grid(WIDE_GRID)
    return g, g.centers, g.weights


def check_atom_lp_mass(scale=1.0):
    g, Z, W = _wide()
    worst = 0.0
    for a in (2.0, 3.0):
        F = np.abs(basis_coeff(0, 0, a, Z))
        for p in (2, 3, 4):
            worst = max(worst, _rel(np.sum(F ** p * W), lieb_constant(a, p)))
    return CheckResult(8, "L^p mass of the analytic atom", worst <= 1e-3 * scale, worst, 1e-3 * scale)


def _random_field(rng, a, Z, mmax=4):
    """Unit-norm f = pi(w) sum_m c_m psi_m^a with a random w, analysed with psi_0^a."""
    c = _random_unit(rng, mmax)
    loc = complex(rng.uniform(-1, 1), math.exp(rng.uniform(-0.5, 0.5)))
    return sum(c[m] * translated_coeff(0, m, a, Z, loc) for m in range(mmax)), loc


def check_lieb(scale=1.0):
    g, Z, W = _wide()
    a = 3.0
    rng = _rng(11)
    excess, eq_err = -math.inf, 0.0
    for _ in range(20):
        F, _ = _random_field(rng, a, Z)
        mod = np.abs(F)
        for p in (2, 3, 4):
            excess = max(excess, float(np.sum(mod ** p * W)) - lieb_constant(a, p))
    atom = np.abs(basis_coeff(0, 0, a, Z))
    for p in (2, 3, 4):
        eq_err = max(eq_err, abs(float(np.sum(atom ** p * W)) - lieb_constant(a, p)))
    lim = 1e-3 * scale
    worst = max(excess, eq_err)
    return CheckResult(9, "Lieb inequality and its extremal", excess <= lim and eq_err <= lim, worst, lim,
                       details={"largest_excess": excess, "extremal_error": eq_err, "alpha": a})


def check_ramos_tilli(scale=1.0):
    g, Z, W = _wide()
    z0 = 0.5 + 1.5j
    rng = _rng(13)
    eq_err, worst_gap = 0.0, -math.inf
    for a in (2.0, 3.0):
        atom = np.abs(translated_coeff(0, 0, a, Z, z0))
        randoms = [np.abs(_random_field(rng, a, Z)[0]) for _ in range(10)]
        for R in (0.4, 0.7):
            dw = disk_cell_weights(g, z0, R)
            for p in (2, 4):
                bound = ramos_tilli_bound(disk_measure_h(R), a, p)
                conc = np.sum(atom ** p * dw) / np.sum(atom ** p * W)
                eq_err = max(eq_err, abs(conc - bound))
                for F in randoms:
                    Fp = F ** p
                    worst_gap = max(worst_gap, float(np.sum(Fp * dw) / np.sum(Fp * W)) - bound)
    lim = 1e-3 * scale
    return CheckResult(10, "Ramos-Tilli bound and its extremal pair", eq_err <= lim and worst_gap < 0, eq_err, lim,
                       details={"largest_nonextremal_minus_bound": worst_gap})


@functools.lru_cache(maxsize=1)
def three_disk_setup():
    """Default grid, a three-disk region, and its certificate for psi_0^2."""
    grid = make_grid(DEFAULT_GRID)
    prims = [DiskSpec(UHPoint(-3, 1), 0.2), DiskSpec(UHPoint(2, 0.5), 0.25), DiskSpec(UHPoint(0, 3), 0.2)]
    mask = mask_from_primitives(grid, prims)
    cert = certificate(mask, WaveletIndex(0, 2.0), p=1)
    return grid, prims, mask, cert


def check_certificate(scale=1.0):
    grid, prims, mask, cert = three_disk_setup()
    a = 2.0
    rng = _rng(17)
    Z = grid.centers
    worst = -math.inf
    measured = []
    for _ in range(20):
        # atoms placed inside the region so the concentrations are not trivially small
        k = rng.integers(1, 4)
        F = np.zeros(grid.shape, dtype=complex)
        for _ in range(k):
            d = prims[rng.integers(len(prims))]
            loc = complex(d.center.x, d.center.s) + 0.05 * d.center.s * complex(rng.normal(), rng.normal())
            c = rng.normal() + 1j * rng.normal()
            F += c * translated_coeff(0, int(rng.integers(3)), a, Z, loc)
        for p in (1, 2):
            dens = np.abs(F) ** p * grid.weights
            conc = float(dens[mask.indicator].sum() / dens.sum())
            measured.append(conc)
            worst = max(worst, max(conc - row["ratio"] for row in cert.scan))
    return CheckResult(11, "certificate dominates measured concentration", worst <= 0, worst, 0.0,
                       details={"bound": cert.bound, "R_star": cert.R_star, "max_padding": cert.max_padding,
                                "sound": cert.sound, "largest_measured": max(measured)})


def check_nyquist_examples(scale=1.0):
    grid = make_grid(DEFAULT_GRID)
    rows = []
    for R in (0.3, 0.5, 0.7):
        sc = density_scan(mask_from_primitives(grid, [DiskSpec(UHPoint(0, 1), R)]), [R])
        rows.append(("disk", R, float(sc.rho[0]), float(sc.padding[0]), disk_measure_h(R)))
    R, d = 0.4, 0.1
    mask = mask_from_primitives(grid, [DiskSpec(UHPoint(0, 1), R), AnnulusSpec(UHPoint(0, 1), R + d, R + 2 * d)])
    sc = density_scan(mask, [R + d])
    rows.append(("disk_and_annulus", R + d, float(sc.rho[0]), float(sc.padding[0]), disk_measure_h(R)))
    ok, worst = True, 0.0
    lim = 0.02 * scale
    for _, _, rho, pad, target in rows:
        err = abs(rho - target) / target
        worst = max(worst, err)
        ok &= err <= max(pad / target, 0.0) + 1e-12 and pad / target <= lim
    return CheckResult(12, "maximum Nyquist density examples", ok, worst, lim,
                       details={"rows": [dict(zip(("case", "R", "rho", "padding", "target"), r)) for r in rows]})


def check_recovery(scale=1.0):
    grid, _, mask, cert = three_disk_setup()
    w = WaveletIndex(0, 2.0)
    dictionary = AtomDictionary.lattice(grid, w)
    rng = _rng(19)
    worst, slowest = 0.0, 0.0
    for _ in range(10):
        truth = np.zeros(len(dictionary), dtype=complex)
        support = rng.choice(len(dictionary), size=int(rng.integers(1, 5)), replace=False)
        truth[support] = rng.normal(size=support.size) + 1j * rng.normal(size=support.size)
        t0 = time.perf_counter()
        problem = RecoveryProblem.from_truth(dictionary, mask, truth)
        res = l1_recover(problem)
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, field_error(res.coeffs, truth, problem))
    lim = 1e-4 * scale
    certified = cert.bound < 0.5
    return CheckResult(13, "exact L1 recovery on a certified region", certified and worst <= lim and slowest < 60,
                       worst, lim, slowest, {"certificate_bound": cert.bound, "d_refined": cert.d_refined,
                                             "atoms": len(dictionary), "slowest_instance_s": slowest})


def hypergeometric_series(m: int, n: int, alpha, z) -> float:
    """F(-m, -n; -m-n-alpha; z) by its terminating series in exact rational arithmetic."""
    a, z = Fraction(alpha), Fraction(z)
    term, total = Fraction(1), Fraction(1)
    for k in range(min(m, n)):
        term *= Fraction((-m + k) * (-n + k)) / ((-m - n - a + k) * (k + 1)) * z
        total += term
    return float(total)


def check_hypergeometric(scale=1.0):
    worst = 0.0
    for a in (0.7, 2.0, 4.0):
        for m in range(6):
            for n in range(6):
                for z in np.linspace(1.2, 20.0, 9):
                    ref = hypergeometric_series(m, n, a, z)
                    worst = max(worst, abs(special.hyp2f1_terminating(m, n, a, z) - ref) / max(abs(ref), 1e-300))
    return CheckResult(14, "terminating hypergeometric via Jacobi", worst <= 1e-10 * scale, worst, 1e-10 * scale)


def check_cross_level(scale=1.0):
    B = 4.5
    off, diag_err = 0.0, 0.0
    matched = {}
    for n in range(3):
        for m in range(3):
            for k in range(2):
                for l in range(2):
                    r = cross_level_orthogonality_check(B, n, m, k, l)
                    if n == m and k == l:
                        target = r.candidates["4pi/(2B-2n-1)"]
                        diag_err = max(diag_err, abs(r.value.real - target) / target)
                        matched[f"{n},{k}"] = r.matched
                    else:
                        off = max(off, abs(r.value))
    lim = 1e-4 * scale
    ok = off <= lim and all(v is not None for v in matched.values())
    return CheckResult(15, "cross-level orthogonality", ok, off, lim,
                       details={"B": B, "diagonal_relative_error": diag_err, "matched": matched,
                                "note": "the alternative constant 2/(2B-2n-1) does not match; 4pi/(2B-2n-1) does"})


CHECKS = {
    1: check_admissibility, 2: check_normalisation, 3: check_double_orthogonality, 4: check_c0_closed_form,
    5: check_c_limit, 6: check_local_reproducing, 7: check_isometry, 8: check_atom_lp_mass, 9: check_lieb,
    10: check_ramos_tilli, 11: check_certificate, 12: check_nyquist_examples, 13: check_recovery,
    14: check_hypergeometric, 15: check_cross_level,
}


def run_check(number: int, tolerance_scale: float = 1.0) -> CheckResult:
    t0 = time.perf_counter()
    res = CHECKS[number](tolerance_scale)
    if res.seconds == 0.0:
        res.seconds = time.perf_counter() - t0
    return res


def run_all(numbers=None, tolerance_scale: float = 1.0) -> list[CheckResult]:
    return [run_check(k, tolerance_scale) for k in (numbers or sorted(CHECKS))]
