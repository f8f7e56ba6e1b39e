"""Domain descriptions for pierced planar regions.

A pierced domain is a bounded region (disk or simple polygon) minus a small
closed disk of radius ``hole_radius`` centered at ``hole_center``.  An
optional symmetry order ``kappa`` declares invariance of the outer region,
translated so the hole center is the origin, under rotation by pi/kappa.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import GeometryError

_SYM_TOL = 1e-9


@dataclass(frozen=True)
class DiskOuter:
    """Circular outer boundary."""

    radius: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryError("disk radius must be positive")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, pts: np.ndarray) -> np.ndarray:
        d = pts - np.asarray(self.center)
        return np.hypot(d[..., 0], d[..., 1]) < self.radius

    def boundary_distance(self, p) -> float:
        """Distance from an interior point to the circle."""
        r = float(np.hypot(*(np.asarray(p, float) - np.asarray(self.center))))
        return self.radius - r


@dataclass(frozen=True)
class PolygonOuter:
    """Simple closed polygon, vertices counterclockwise."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
            raise GeometryError("polygon needs at least 3 planar vertices")
        if _signed_area(v) <= 0:
            raise GeometryError("polygon vertices must be counterclockwise")
        if _self_intersects(v):
            raise GeometryError("polygon is self-intersecting")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def diameter(self) -> float:
        v = self.array
        return float(np.max(np.hypot(v[:, 0][:, None] - v[:, 0], v[:, 1][:, None] - v[:, 1])))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return _points_in_polygon(np.atleast_2d(np.asarray(pts, float)), self.array)

    def boundary_distance(self, p) -> float:
        p = np.asarray(p, dtype=float)
        v = self.array
        w = np.roll(v, -1, axis=0)
        return float(np.min(_point_segment_distance(p, v, w)))


Outer = Union[DiskOuter, PolygonOuter]


@dataclass(frozen=True)
class PiercedDomainSpec:
    """Outer region, hole center xi, hole radius, optional symmetry order.

    Invariants enforced at construction: the closed hole lies strictly inside
    the outer region, and a declared symmetry order must actually be a
    symmetry of the outer region about the hole center.
    """

    outer: Outer
    hole_center: tuple[float, float] = (0.0, 0.0)
    hole_radius: float = 0.0
    symmetry_order: Optional[int] = None

    def __post_init__(self):
        xi = np.asarray(self.hole_center, dtype=float)
        if self.hole_radius < 0:
            raise GeometryError("hole radius must be nonnegative")
        if not bool(self.outer.contains(xi[None, :])[0]):
            raise GeometryError("hole center lies outside the outer region")
        if self.hole_radius > 0 and self.hole_radius >= self.boundary_distance:
            raise GeometryError("hole exits domain: hole_radius >= dist(center, outer boundary)")
        if self.symmetry_order is not None:
            k = self.symmetry_order
            if not (isinstance(k, (int, np.integer)) and k >= 1):
                raise GeometryError("symmetry order must be a positive integer")
            if not self._outer_is_symmetric(k):
                raise GeometryError(
                    f"outer region is not {k}-symmetric about the hole center"
                )

    @property
    def xi(self) -> np.ndarray:
        return np.asarray(self.hole_center, dtype=float)

    @property
    def boundary_distance(self) -> float:
        """Distance from the hole center to the outer boundary."""
        return self.outer.boundary_distance(self.xi)

    @property
    def diameter(self) -> float:
        return self.outer.diameter

    def _outer_is_symmetric(self, kappa: int) -> bool:
        if isinstance(self.outer, DiskOuter):
            # A disk is symmetric about xi for every kappa iff it is concentric.
            c = np.asarray(self.outer.center, dtype=float)
            return bool(np.hypot(*(c - self.xi)) <= _SYM_TOL * self.outer.radius)
        v = self.outer.array - self.xi
        rot = rotation_matrix(np.pi / kappa)
        vr = v @ rot.T
        tol = _SYM_TOL * self.diameter
        # vertex-set matching: every rotated vertex must coincide with a vertex
        for p in vr:
            if np.min(np.hypot(v[:, 0] - p[0], v[:, 1] - p[1])) > tol:
                return False
        return True


def rotation_matrix(angle: float) -> np.ndarray:
    """Matrix of the paper's rotation convention: [[c, s], [-s, c]]."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


def unit_disk(hole_center=(0.0, 0.0), hole_radius=0.0, symmetry_order=None,
              radius=1.0) -> PiercedDomainSpec:
    """Convenience constructor for pierced disks centered at the origin."""
    return PiercedDomainSpec(
        outer=DiskOuter(radius=radius),
        hole_center=tuple(hole_center),
        hole_radius=hole_radius,
        symmetry_order=symmetry_order,
    )


def square(half_side=1.0, hole_center=(0.0, 0.0), hole_radius=0.0,
           symmetry_order=None) -> PiercedDomainSpec:
    a = half_side
    verts = ((a, a), (-a, a), (-a, -a), (a, -a))
    return PiercedDomainSpec(
        outer=PolygonOuter(vertices=verts),
        hole_center=tuple(hole_center),
        hole_radius=hole_radius,
        symmetry_order=symmetry_order,
    )


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _points_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd rule, vectorized over points."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
    return inside


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.hypot(p[0] - proj[:, 0], p[1] - proj[:, 1])


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _self_intersects(v: np.ndarray) -> bool:
    n = len(v)
    for i in range(n):
        a1, a2 = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_intersect(a1, a2, v[j], v[(j + 1) % n]):
                return True
    return False
