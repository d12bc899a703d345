"""Regions of the complex plane, phase-space volumes and Weyl counting."""

from __future__ import annotations

import math
from functools import cached_property
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .linalg import SpectralResult
from .symbols import (
    OperatorSpec,
    QuadratureGrid,
    TrigPoly,
    xi_bound,
)

__all__ = [
    "Disc", "Rect", "Sector", "Region", "region_from_json", "QuadratureGrid",
    "WeylReport", "xi_bound", "preimage_volume", "preimage_volume_converged",
    "boundary_tube_volume", "tube_profile", "count_in_region", "boundary_flags",
    "weyl_report", "distance_to_symbol_range",
]

TWO_PI = 2 * math.pi


class Region:
    """Base interface: vectorised membership and distance to the boundary."""

    def contains(self, z) -> np.ndarray:
        raise NotImplementedError

    def boundary_distance(self, z) -> np.ndarray:
        raise NotImplementedError

    def conj(self) -> "Region":
        raise NotImplementedError

    @property
    def outer_radius(self) -> float:
        """Upper bound on |z| over the region."""
        raise NotImplementedError

    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Disc(Region):
    center: complex
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("disc radius must be non-negative")

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) <= self.radius

    def boundary_distance(self, z):
        return np.abs(np.abs(np.asarray(z) - self.center) - self.radius)

    def conj(self):
        return Disc(complex(self.center).conjugate(), self.radius)

    @property
    def outer_radius(self):
        return abs(self.center) + self.radius

    def to_json(self):
        c = complex(self.center)
        return {"type": "disc", "center": [c.real, c.imag], "radius": self.radius}


@dataclass(frozen=True)
class Rect(Region):
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def __post_init__(self):
        if self.re_lo > self.re_hi or self.im_lo > self.im_hi:
            raise ValueError("rectangle bounds are inverted")

    def contains(self, z):
        z = np.asarray(z)
        return (
            (z.real >= self.re_lo) & (z.real <= self.re_hi)
            & (z.imag >= self.im_lo) & (z.imag <= self.im_hi)
        )

    def boundary_distance(self, z):
        z = np.asarray(z)
        x, y = z.real, z.imag
        dx = np.maximum(np.maximum(self.re_lo - x, x - self.re_hi), 0.0)
        dy = np.maximum(np.maximum(self.im_lo - y, y - self.im_hi), 0.0)
        outside = np.hypot(dx, dy)
        inside = np.minimum.reduce(
            [x - self.re_lo, self.re_hi - x, y - self.im_lo, self.im_hi - y]
        )
        return np.where(self.contains(z), inside, outside)

    def conj(self):
        return Rect(self.re_lo, self.re_hi, -self.im_hi, -self.im_lo)

    @property
    def outer_radius(self):
        return max(math.hypot(a, b) for a in (self.re_lo, self.re_hi) for b in (self.im_lo, self.im_hi))

    def to_json(self):
        return {"type": "rect", "re": [self.re_lo, self.re_hi], "im": [self.im_lo, self.im_hi]}


@dataclass(frozen=True)
class Sector(Region):
    """{r e^{i theta}: theta1 <= theta <= theta2, 0 <= r <= lam g(theta)}.

    ``g`` is a positive constant or a real trigonometric polynomial in theta.
    The origin belongs to every sector.
    """

    theta1: float
    theta2: float
    lam: float
    g: float | TrigPoly = 1.0
    n_boundary: int = 2048

    def __post_init__(self):
        if not (0 <= self.theta1 <= self.theta2 <= TWO_PI):
            raise ValueError("sector needs 0 <= theta1 <= theta2 <= 2 pi")
        if self.lam < 0:
            raise ValueError("sector lambda must be non-negative")
        th = np.linspace(self.theta1, self.theta2, 257)
        if np.any(self.gval(th) <= 0):
            raise ValueError("g must be positive on [theta1, theta2]")

    def gval(self, theta):
        theta = np.asarray(theta, dtype=float)
        if isinstance(self.g, TrigPoly):
            return np.real(self.g(theta))
        return np.full(theta.shape, float(self.g))

    def with_lambda(self, lam: float) -> "Sector":
        return Sector(self.theta1, self.theta2, lam, self.g, self.n_boundary)

    def contains(self, z):
        z = np.asarray(z)
        th = np.mod(np.angle(z), TWO_PI)
        r = np.abs(z)
        in_angle = (th >= self.theta1) & (th <= self.theta2)
        return (r == 0) | (in_angle & (r <= self.lam * self.gval(th)))

    def boundary_points(self) -> np.ndarray:
        n = self.n_boundary
        th = np.linspace(self.theta1, self.theta2, n)
        arc = self.lam * self.gval(th) * np.exp(1j * th)
        t = np.linspace(0, 1, n)
        ray1 = t * arc[0]
        ray2 = t * arc[-1]
        return np.concatenate([ray1, arc, ray2])

    @cached_property
    def _boundary_tree(self) -> cKDTree:
        pts = self.boundary_points()
        return cKDTree(np.column_stack([pts.real, pts.imag]))

    def boundary_distance(self, z):
        z = np.asarray(z)
        d, _ = self._boundary_tree.query(np.column_stack([z.real.ravel(), z.imag.ravel()]))
        return d.reshape(z.shape)

    def conj(self):
        g = self.g
        if isinstance(g, TrigPoly):
            # theta -> g(2 pi - theta) = g(-theta)
            g = g.reflect()
        return Sector(TWO_PI - self.theta2, TWO_PI - self.theta1, self.lam, g, self.n_boundary)

    @property
    def outer_radius(self):
        th = np.linspace(self.theta1, self.theta2, 1025)
        return float(self.lam * np.max(self.gval(th)))

    def to_json(self):
        g = self.g.to_json() if isinstance(self.g, TrigPoly) else float(self.g)
        return {"type": "sector", "theta1": self.theta1, "theta2": self.theta2, "lambda": self.lam, "g": g}


def region_from_json(obj: Mapping[str, Any]) -> Region:
    kind = obj.get("type")
    if kind == "disc":
        re, im = obj["center"]
        return Disc(complex(re, im), float(obj["radius"]))
    if kind == "rect":
        return Rect(float(obj["re"][0]), float(obj["re"][1]), float(obj["im"][0]), float(obj["im"][1]))
    if kind == "sector":
        g = obj.get("g", 1.0)
        g = float(g) if isinstance(g, (int, float)) else TrigPoly.from_json(g)
        return Sector(float(obj["theta1"]), float(obj["theta2"]), float(obj.get("lambda", 1.0)), g)
    raise ValueError(f"unknown region type {kind!r}")


def _grid_for(spec, region, grid, principal_only):
    need = xi_bound(spec, region.outer_radius, principal_only=principal_only, safety=1.0)
    if grid.xi_max < need:
        raise ValueError(
            f"grid xi_max={grid.xi_max:.4g} does not cover the preimage (needs >= {need:.4g})"
        )


def preimage_volume(
    spec: OperatorSpec,
    region: Region,
    grid: QuadratureGrid,
    principal_only: bool = False,
    check_cover: bool = True,
) -> float:
    """Midpoint-rule measure of {(x, xi): p(x, xi) in region}."""
    if check_cover:
        _grid_for(spec, region, grid, principal_only)
    hits = 0
    for block in grid.symbol_chunks(spec, principal_only):
        hits += int(np.count_nonzero(region.contains(block)))
    return hits * grid.cell


def preimage_volume_converged(
    spec: OperatorSpec, region: Region, grid: QuadratureGrid, principal_only: bool = False
) -> dict[str, float]:
    """Volumes at (nx, nxi) and (2nx, 2nxi) with their relative difference."""
    coarse = preimage_volume(spec, region, grid, principal_only)
    fine = preimage_volume(spec, region, grid.refined(2), principal_only, check_cover=False)
    rel = abs(fine - coarse) / fine if fine > 0 else (0.0 if coarse == 0 else math.inf)
    return {"coarse": coarse, "fine": fine, "rel_diff": rel}


def tube_profile(
    spec: OperatorSpec,
    region: Region,
    rs: Sequence[float],
    grid: QuadratureGrid,
    principal_only: bool = False,
) -> list[float]:
    """vol{(x, xi): dist(p(x, xi), boundary) <= r} for every r in ``rs``."""
    rs = np.asarray(rs, dtype=float)
    if np.any(rs <= 0):
        raise ValueError("tube radius must be positive")
    order = np.argsort(rs)
    counts = np.zeros(rs.size, dtype=np.int64)
    for block in grid.symbol_chunks(spec, principal_only):
        d = np.sort(region.boundary_distance(block).ravel())
        counts[order] += np.searchsorted(d, rs[order], side="right")
    return list(counts * grid.cell)


def boundary_tube_volume(
    spec: OperatorSpec, region: Region, r: float, grid: QuadratureGrid, principal_only: bool = False
) -> float:
    return tube_profile(spec, region, [r], grid, principal_only)[0]


def _eigs(eigs) -> np.ndarray:
    if isinstance(eigs, SpectralResult):
        return eigs.eigenvalues
    return np.asarray(eigs, dtype=complex)


def boundary_flags(eigs, region: Region, tol: float = 1e-9) -> np.ndarray:
    return region.boundary_distance(_eigs(eigs)) <= tol


def count_in_region(eigs, region: Region, tol: float = 1e-9) -> int:
    """Eigenvalues (with multiplicity) inside the region or within ``tol`` of its boundary."""
    z = _eigs(eigs)
    if z.size == 0:
        return 0
    return int(np.count_nonzero(region.contains(z) | boundary_flags(z, region, tol)))


@dataclass
class WeylReport:
    mode: str
    region: dict[str, Any]
    count: int
    flagged: int
    volume: float
    volume_fine: float
    volume_rel_diff: float
    prediction: float
    deviation: float
    relative_deviation: float
    boundary_tube: dict[str, float] = field(default_factory=dict)
    r_used: list[float] = field(default_factory=list)
    eps_tilde_used: list[float] = field(default_factory=list)
    h: float = 1.0

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def weyl_report(
    spec: OperatorSpec,
    eigs,
    region: Region,
    grid: QuadratureGrid,
    h: float | None = None,
    mode: str = "semiclassical",
    r_list: Sequence[float] = (),
    eps_tilde_list: Sequence[float] = (),
    volume: dict[str, float] | None = None,
) -> WeylReport:
    """Count versus Weyl prediction for one region.

    semiclassical: prediction = vol p^-1(region) / (2 pi h); large: principal
    symbol and prediction = vol p_m^-1(region) / (2 pi).  ``volume`` lets a
    caller reuse a precomputed ``preimage_volume_converged`` result.
    """
    if mode not in ("semiclassical", "large"):
        raise ValueError(f"unknown mode {mode!r}")
    principal = mode == "large"
    if h is None:
        h = spec.h if mode == "semiclassical" else 1.0
    factor = 1 / (TWO_PI * h) if mode == "semiclassical" else 1 / TWO_PI
    vol = volume or preimage_volume_converged(spec, region, grid, principal)
    pred = vol["fine"] * factor
    cnt = count_in_region(eigs, region)
    z = _eigs(eigs)
    flagged = int(np.count_nonzero(boundary_flags(z, region))) if z.size else 0
    tubes = {}
    if r_list:
        vals = tube_profile(spec, region, r_list, grid, principal)
        tubes = {repr(float(r)): v for r, v in zip(r_list, vals)}
    dev = abs(cnt - pred)
    return WeylReport(
        mode=mode,
        region=region.to_json(),
        count=cnt,
        flagged=flagged,
        volume=vol["coarse"],
        volume_fine=vol["fine"],
        volume_rel_diff=vol["rel_diff"],
        prediction=pred,
        deviation=dev,
        relative_deviation=dev / pred if pred > 0 else (0.0 if cnt == 0 else math.inf),
        boundary_tube=tubes,
        r_used=[float(r) for r in r_list],
        eps_tilde_used=[float(e) for e in eps_tilde_list],
        h=h,
    )


def distance_to_symbol_range(
    spec: OperatorSpec, points, grid: QuadratureGrid, principal_only: bool = False
) -> np.ndarray:
    """Distance from each point to the symbol values sampled on ``grid``."""
    pts = np.asarray(points, dtype=complex).ravel()
    samples = np.concatenate([b.ravel() for b in grid.symbol_chunks(spec, principal_only)])
    tree = cKDTree(np.column_stack([samples.real, samples.imag]))
    d, _ = tree.query(np.column_stack([pts.real, pts.imag]))
    return d
