"""Geometry and measure of the upper half-plane.

Points z = x + i s are identified with elements (x, s) of the ax+b group.
Functions accept either :class:`UHPoint` instances or complex numbers/arrays
(``Im > 0``); they return the same kind they were given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np


@dataclass(frozen=True)
class UHPoint:
    x: float
    s: float

    def __post_init__(self):
        if not (self.s > 0) or not math.isfinite(self.s) or not math.isfinite(self.x):
            raise ValueError(f"upper half-plane point needs finite x and s > 0, got ({self.x}, {self.s})")

    @property
    def z(self) -> complex:
        return complex(self.x, self.s)

    @classmethod
    def from_complex(cls, z) -> "UHPoint":
        z = complex(z)
        return cls(z.real, z.imag)

    def __complex__(self):
        return self.z


I = UHPoint(0.0, 1.0)

PointLike = Union[UHPoint, complex, np.ndarray]


def as_complex(z) -> np.ndarray | complex:
    if isinstance(z, UHPoint):
        return z.z
    return np.asarray(z, dtype=complex)[()]


def _wrap(result, *inputs):
    if all(isinstance(p, UHPoint) for p in inputs):
        return UHPoint.from_complex(result)
    return result


def group_mul(z, w):
    """(x, s) . (x', s') = (x + s x', s s')."""
    a, b = as_complex(z), as_complex(w)
    res = a.real + a.imag * b.real + 1j * (a.imag * b.imag)
    return _wrap(res, z, w)


def group_inv(z):
    """(x, s)^{-1} = (-x/s, 1/s)."""
    a = as_complex(z)
    res = -a.real / a.imag + 1j / a.imag
    return _wrap(res, z)


def pseudo_dist(z, w):
    """Pseudohyperbolic distance |z - w| / |z - conj(w)|, always in [0, 1)."""
    a, b = as_complex(z), as_complex(w)
    return np.abs(a - b) / np.abs(a - np.conj(b))


def cayley(u):
    """T(u) = i (1 + u) / (1 - u), mapping the unit disk onto the upper half-plane."""
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=complex)
    if np.any(np.abs(u) >= 1):
        raise ValueError("cayley needs |u| < 1")
    z = 1j * (1 + u) / (1 - u)
    # guard against round-off pushing Im below zero right at the boundary
    z = z.real + 1j * np.maximum(z.imag, np.finfo(float).tiny)
    return UHPoint.from_complex(z) if scalar else z


def cayley_inv(z):
    """T^{-1}(z) = (z - i) / (z + i)."""
    a = as_complex(z)
    return (a - 1j) / (a + 1j)


def disk_measure_h(R: float) -> float:
    """Hyperbolic measure of a pseudohyperbolic disk of radius R: 4 pi R^2 / (1 - R^2)."""
    if not 0 <= R < 1:
        raise ValueError(f"radius must lie in [0, 1), got {R}")
    return 4 * math.pi * R * R / (1 - R * R)


def change_of_variable_weight(u, beta: float):
    """Jacobian factor 4 (1-|u|^2)^beta / |1-u|^(2 beta + 4) of the pullback by T."""
    u = np.asarray(u, dtype=complex)
    r2 = (u * np.conj(u)).real
    return (4 * (1 - r2) ** beta / np.abs(1 - u) ** (2 * beta + 4))[()]


def disk_euclidean(center, radius: float) -> tuple[complex, float]:
    """Euclidean centre and radius of the pseudohyperbolic disk D_R(center)."""
    c = as_complex(center)
    x0, s0 = c.real, c.imag
    q = 1 - radius * radius
    return complex(x0, s0 * (1 + radius * radius) / q), 2 * radius * s0 / q


@dataclass(frozen=True)
class DiskSpec:
    center: UHPoint
    radius: float

    def __post_init__(self):
        if not isinstance(self.center, UHPoint):
            object.__setattr__(self, "center", UHPoint.from_complex(self.center))
        if not 0 <= self.radius < 1:
            raise ValueError(f"pseudohyperbolic radius must lie in [0, 1), got {self.radius}")

    @property
    def measure_h(self) -> float:
        return disk_measure_h(self.radius)

    def contains(self, z):
        return pseudo_dist(z, self.center.z) < self.radius

    def intersects_box(self, x_lo, x_hi, s_lo, s_hi):
        """Exact test whether the closed box meets the (Euclidean) disk."""
        c, r = disk_euclidean(self.center, self.radius)
        dx = np.clip(c.real, x_lo, x_hi) - c.real
        ds = np.clip(c.imag, s_lo, s_hi) - c.imag
        return dx * dx + ds * ds <= r * r

    def inside_box(self, x_lo, x_hi, s_lo, s_hi):
        """True when the whole box lies in the disk (all corners inside)."""
        c, r = disk_euclidean(self.center, self.radius)
        fx = np.maximum(np.abs(x_lo - c.real), np.abs(x_hi - c.real))
        fs = np.maximum(np.abs(s_lo - c.imag), np.abs(s_hi - c.imag))
        return fx * fx + fs * fs < r * r

    def to_json(self):
        return {"type": "disk", "center": [self.center.x, self.center.s], "radius": self.radius}


@dataclass(frozen=True)
class RectSpec:
    """Axis-aligned half-plane rectangle [x_min, x_max] x [s_min, s_max]."""

    x_min: float
    x_max: float
    s_min: float
    s_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.s_max > self.s_min > 0):
            raise ValueError(f"invalid rectangle {self}")

    @property
    def measure_h(self) -> float:
        return (self.x_max - self.x_min) * (1 / self.s_min - 1 / self.s_max)

    def contains(self, z):
        z = as_complex(z)
        return ((z.real >= self.x_min) & (z.real < self.x_max)
                & (z.imag >= self.s_min) & (z.imag < self.s_max))

    def intersects_box(self, x_lo, x_hi, s_lo, s_hi):
        return ((x_hi >= self.x_min) & (x_lo <= self.x_max)
                & (s_hi >= self.s_min) & (s_lo <= self.s_max))

    def inside_box(self, x_lo, x_hi, s_lo, s_hi):
        return ((x_lo >= self.x_min) & (x_hi <= self.x_max)
                & (s_lo >= self.s_min) & (s_hi <= self.s_max))

    def to_json(self):
        return {"type": "rect", "x": [self.x_min, self.x_max], "s": [self.s_min, self.s_max]}


@dataclass(frozen=True)
class AnnulusSpec:
    """Pseudohyperbolic annulus inner <= rho(z, center) < outer."""

    center: UHPoint
    inner: float
    outer: float

    def __post_init__(self):
        if not isinstance(self.center, UHPoint):
            object.__setattr__(self, "center", UHPoint.from_complex(self.center))
        if not 0 <= self.inner < self.outer < 1:
            raise ValueError(f"annulus radii must satisfy 0 <= inner < outer < 1, got {self.inner}, {self.outer}")

    @property
    def _disks(self):
        return DiskSpec(self.center, self.inner), DiskSpec(self.center, self.outer)

    @property
    def measure_h(self) -> float:
        return disk_measure_h(self.outer) - disk_measure_h(self.inner)

    def contains(self, z):
        r = pseudo_dist(z, self.center.z)
        return (r >= self.inner) & (r < self.outer)

    def intersects_box(self, x_lo, x_hi, s_lo, s_hi):
        """Conservative: may report boxes that meet the outer disk only inside the hole."""
        hole, disk = self._disks
        return disk.intersects_box(x_lo, x_hi, s_lo, s_hi) & ~hole.inside_box(x_lo, x_hi, s_lo, s_hi)

    def inside_box(self, x_lo, x_hi, s_lo, s_hi):
        hole, disk = self._disks
        return disk.inside_box(x_lo, x_hi, s_lo, s_hi) & ~hole.intersects_box(x_lo, x_hi, s_lo, s_hi)

    def to_json(self):
        return {"type": "annulus", "center": [self.center.x, self.center.s],
                "inner": self.inner, "outer": self.outer}


Primitive = Union[DiskSpec, RectSpec, AnnulusSpec]


def primitive_from_json(obj) -> Primitive:
    kind = obj.get("type")
    if kind == "disk":
        cx, cs = obj["center"]
        return DiskSpec(UHPoint(float(cx), float(cs)), float(obj["radius"]))
    if kind == "rect":
        return RectSpec(float(obj["x"][0]), float(obj["x"][1]), float(obj["s"][0]), float(obj["s"][1]))
    if kind == "annulus":
        cx, cs = obj["center"]
        return AnnulusSpec(UHPoint(float(cx), float(cs)), float(obj["inner"]), float(obj["outer"]))
    raise ValueError(f"unknown primitive type {kind!r}")


@dataclass(frozen=True)
class HyperbolicGrid:
    """Rectangle [x_min, x_max] x [s_min, s_max] split into nx uniform columns
    and ns geometrically spaced rows.

    Arrays are shaped (ns, nx), row-major with scale as the slow index.  Cell
    weights are the exact hyperbolic measure dx (1/s_lo - 1/s_hi), so they sum
    to the rectangle's measure up to round-off.
    """

    x_min: float
    x_max: float
    nx: int
    s_min: float
    s_max: float
    ns: int

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ns) != self.ns or self.nx < 2 or self.ns < 2:
            raise ValueError(f"grid needs nx, ns >= 2, got nx={self.nx}, ns={self.ns}")
        if not self.s_min > 0:
            raise ValueError(f"s_min must be positive, got {self.s_min}")
        if not (self.x_max > self.x_min and self.s_max > self.s_min):
            raise ValueError("grid bounds must satisfy x_max > x_min and s_max > s_min")

    @cached_property
    def x_edges(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx + 1)

    @cached_property
    def s_edges(self) -> np.ndarray:
        e = np.geomspace(self.s_min, self.s_max, self.ns + 1)
        e[0], e[-1] = self.s_min, self.s_max
        return e

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @cached_property
    def x_centers(self) -> np.ndarray:
        e = self.x_edges
        return 0.5 * (e[:-1] + e[1:])

    @cached_property
    def s_centers(self) -> np.ndarray:
        e = self.s_edges
        return np.sqrt(e[:-1] * e[1:])

    @cached_property
    def row_measure(self) -> np.ndarray:
        """Hyperbolic measure of one cell in each row."""
        e = self.s_edges
        return self.dx * (1 / e[:-1] - 1 / e[1:])

    @cached_property
    def weights(self) -> np.ndarray:
        return np.repeat(self.row_measure[:, None], self.nx, axis=1)

    @cached_property
    def centers(self) -> np.ndarray:
        return self.x_centers[None, :] + 1j * self.s_centers[:, None]

    @cached_property
    def row_radius(self) -> np.ndarray:
        """Pseudohyperbolic radius of the smallest disk about each row's cell centre
        containing the whole cell (the farthest corner)."""
        e = self.s_edges
        c = 1j * self.s_centers
        half = 0.5 * self.dx
        lo = pseudo_dist(c, half + 1j * e[:-1])
        hi = pseudo_dist(c, half + 1j * e[1:])
        return np.maximum(lo, hi)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ns, self.nx)

    @property
    def exact_measure(self) -> float:
        return (self.x_max - self.x_min) * (1 / self.s_min - 1 / self.s_max)

    def cell_bounds(self):
        """Broadcastable (x_lo, x_hi, s_lo, s_hi) arrays of shape (ns, nx)."""
        xe, se = self.x_edges, self.s_edges
        return xe[None, :-1], xe[None, 1:], se[:-1, None], se[1:, None]

    def boundary_cells(self) -> np.ndarray:
        b = np.zeros(self.shape, dtype=bool)
        b[0, :] = b[-1, :] = True
        b[:, 0] = b[:, -1] = True
        return b

    def covers_disk(self, center, radius: float) -> bool:
        c, r = disk_euclidean(center, radius)
        return (c.real - r >= self.x_min and c.real + r <= self.x_max
                and c.imag - r >= self.s_min and c.imag + r <= self.s_max)

    def to_json(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "nx": self.nx,
                "s_min": self.s_min, "s_max": self.s_max, "ns": self.ns}


DEFAULT_GRID = dict(x_min=-8.0, x_max=8.0, nx=512, s_min=1 / 16, s_max=16.0, ns=256)
# Wider window for the sharp-constant checks: the default window misses about
# s_min^alpha of the L^2 mass at small scales, 2% for alpha = 2.
WIDE_GRID = dict(x_min=-32.0, x_max=32.0, nx=1024, s_min=1 / 256, s_max=64.0, ns=480)


def make_grid(spec=None, **kwargs) -> HyperbolicGrid:
    """Build a grid from a dict (keys as in :class:`HyperbolicGrid`) or keywords."""
    params = dict(DEFAULT_GRID)
    if spec is not None:
        unknown = set(spec) - set(params)
        if unknown:
            raise ValueError(f"unknown grid keys {sorted(unknown)}")
        params.update(spec)
    params.update(kwargs)
    return HyperbolicGrid(float(params["x_min"]), float(params["x_max"]), int(params["nx"]),
                          float(params["s_min"]), float(params["s_max"]), int(params["ns"]))


@dataclass(frozen=True, eq=False)
class RegionMask:
    """Rasterised region on a grid.

    ``indicator`` uses the cell-centre rule; ``dilated`` marks every cell whose
    closed box meets a primitive, and ``interior`` every cell lying entirely in
    one primitive.  ``dilated`` is the conservative set used for sound density
    estimates.
    """

    grid: HyperbolicGrid
    indicator: np.ndarray
    primitives: tuple = ()
    dilated: np.ndarray | None = field(default=None, repr=False)
    interior: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        ind = np.asarray(self.indicator, dtype=bool)
        if ind.shape != self.grid.shape:
            raise ValueError(f"indicator shape {ind.shape} does not match grid {self.grid.shape}")
        ind.setflags(write=False)
        object.__setattr__(self, "indicator", ind)
        for name in ("dilated", "interior"):
            arr = getattr(self, name)
            if arr is None:
                arr = ind.copy()
            arr = np.asarray(arr, dtype=bool)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "primitives", tuple(self.primitives))

    @property
    def measure_h(self) -> float:
        return mask_measure(self)

    @property
    def is_empty(self) -> bool:
        return not self.dilated.any()

    def contains(self, z):
        """Exact membership in the union of primitives."""
        z = as_complex(z)
        out = np.zeros(np.shape(z), dtype=bool)
        for prim in self.primitives:
            out |= prim.contains(z)
        return out

    def complement(self) -> "RegionMask":
        return RegionMask(self.grid, ~self.indicator, (), ~self.interior, ~self.dilated)

    def to_json(self) -> dict:
        return {"grid": self.grid.to_json(), "primitives": [p.to_json() for p in self.primitives],
                "measure_h": self.measure_h}


def mask_from_primitives(grid: HyperbolicGrid, primitives: Sequence[Primitive]) -> RegionMask:
    centers = grid.centers
    bounds = grid.cell_bounds()
    ind = np.zeros(grid.shape, dtype=bool)
    dil = np.zeros(grid.shape, dtype=bool)
    inner = np.zeros(grid.shape, dtype=bool)
    for prim in primitives:
        ind |= prim.contains(centers)
        dil |= np.broadcast_to(prim.intersects_box(*bounds), grid.shape)
        inner |= np.broadcast_to(prim.inside_box(*bounds), grid.shape)
    return RegionMask(grid, ind, tuple(primitives), dil | ind, inner & ind)


def mask_measure(mask: RegionMask) -> float:
    return float(np.sum(mask.grid.weights[mask.indicator]))


def save_mask(path, mask: RegionMask):
    from .container import write_container

    meta = {"grid": mask.grid.to_json(), "primitives": [p.to_json() for p in mask.primitives],
            "measure_h": mask.measure_h}
    return write_container(path, "region_mask", meta, mask.indicator)


def load_mask(path) -> RegionMask:
    """Reload a mask; dilated/interior sets are rebuilt from the stored primitives."""
    from .container import read_container

    desc, arr = read_container(path, "region_mask")
    grid = make_grid(desc["grid"])
    prims = [primitive_from_json(p) for p in desc["primitives"]]
    if prims:
        rebuilt = mask_from_primitives(grid, prims)
        if not np.array_equal(rebuilt.indicator, arr.astype(bool)):
            raise ValueError("stored indicator disagrees with its primitives")
        return rebuilt
    return RegionMask(grid, arr.astype(bool))
