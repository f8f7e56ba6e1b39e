"""Graded triangulations of pierced (and unpierced) planar domains.

The workhorse is a structured ring mesh around the hole center: geometrically
graded radii from the hole up to either the outer circle (concentric disk
case) or a core radius, with a fixed angular count.  For non-concentric
domains the far field is filled with a Delaunay triangulation of boundary,
interface and lattice points, with explicit recovery of boundary segments.

Ring meshes built for a kappa-symmetric domain use an angular count that is a
multiple of 4*kappa, which makes the rotation by pi/kappa an exact
permutation of vertices *and* triangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import GeometryError, MeshError
from .geometry import DiskOuter, PiercedDomainSpec, PolygonOuter, rotation_matrix

INTERIOR, OUTER, HOLE = 0, 1, 2
_TAG_NAMES = {INTERIOR: "interior", OUTER: "outer", HOLE: "hole"}
_TAG_IDS = {v: k for k, v in _TAG_NAMES.items()}

_MAX_RINGS = 100_000


@dataclass(eq=False)
class SymmetryMap:
    """Vertex permutation realizing rotation by pi/kappa about ``center``.

    ``permutation[i]`` is the index of the vertex at the rotated position of
    vertex i.  ``connectivity_exact`` is True when the permutation also maps
    the triangle set onto itself, which ring meshes guarantee.
    """

    kappa: int
    center: np.ndarray
    permutation: np.ndarray
    connectivity_exact: bool = False

    @property
    def group_order(self) -> int:
        return 2 * self.kappa

    def orbit_ids(self, n: int) -> np.ndarray:
        """Orbit label per vertex index (canonical representative index)."""
        labels = np.full(n, -1, dtype=np.int64)
        for i in range(n):
            if labels[i] >= 0:
                continue
            orbit = [i]
            j = int(self.permutation[i])
            while j != i:
                orbit.append(j)
                j = int(self.permutation[j])
            rep = min(orbit)
            for j in orbit:
                labels[j] = rep
        return labels


@dataclass(eq=False)
class TriMesh:
    """Conforming triangulation with boundary tags and optional symmetry."""

    vertices: np.ndarray
    triangles: np.ndarray
    vertex_tags: np.ndarray
    h_far: float = float("nan")
    grading: float = float("nan")
    spec: Optional[PiercedDomainSpec] = None
    symmetry: Optional[SymmetryMap] = None
    is_delaunay: Optional[bool] = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int32)
        self.vertex_tags = np.ascontiguousarray(self.vertex_tags, dtype=np.uint8)
        for a in (self.vertices, self.triangles, self.vertex_tags):
            a.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def tri_coords(self) -> np.ndarray:
        return self.vertices[self.triangles]

    def areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            t = self.tri_coords()
            e1 = t[:, 1] - t[:, 0]
            e2 = t[:, 2] - t[:, 0]
            self._cache["areas"] = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        return self._cache["areas"]

    def area(self) -> float:
        return float(np.sum(self.areas()))

    def boundary_vertices(self, tag: int) -> np.ndarray:
        return np.flatnonzero(self.vertex_tags == tag)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique edges (e,2) and the triangles adjacent to each (e,2; -1 pad)."""
        if "edges" not in self._cache:
            tri = self.triangles
            raw = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
            raw.sort(axis=1)
            order = np.lexsort((raw[:, 1], raw[:, 0]))
            raw_sorted = raw[order]
            owner = np.tile(np.arange(len(tri)), 3)[order]
            uniq, start, counts = np.unique(
                raw_sorted, axis=0, return_index=True, return_counts=True
            )
            adj = np.full((len(uniq), 2), -1, dtype=np.int64)
            adj[:, 0] = owner[start]
            second = counts == 2
            adj[second, 1] = owner[start[second] + 1]
            self._cache["edges"] = (uniq, adj)
        return self._cache["edges"]

    def check_delaunay(self, tol: float = 1e-9) -> bool:
        """Opposite-angle criterion over all interior edges."""
        if self.is_delaunay is None:
            edges, adj = self.edges()
            interior = adj[:, 1] >= 0
            ok = True
            if np.any(interior):
                e = edges[interior]
                cots = []
                for side in range(2):
                    tris = self.triangles[adj[interior, side]]
                    opp = np.array(
                        [t[~np.isin(t, ev)][0] for t, ev in zip(tris, e)]
                    )
                    a = self.vertices[e[:, 0]] - self.vertices[opp]
                    b = self.vertices[e[:, 1]] - self.vertices[opp]
                    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
                    dot = np.einsum("ij,ij->i", a, b)
                    cots.append(np.arctan2(np.abs(cross), dot))
                ok = bool(np.all(cots[0] + cots[1] <= np.pi + tol))
            self.is_delaunay = ok
        return self.is_delaunay


# ---------------------------------------------------------------------------
# size fields and radii
# ---------------------------------------------------------------------------

def _size_function(h_far: float, grading: float, eps: float,
                   delta: Optional[float]) -> Callable[[float], float]:
    def h(r: float) -> float:
        s = min(h_far, max(grading * r, 0.25 * eps))
        if delta is not None:
            s = min(s, max(grading * abs(r - delta), delta / 6.0))
        return s

    return h


def _radii_outward(r_in: float, r_out: float, sizef) -> np.ndarray:
    radii = [r_in]
    r = r_in
    while True:
        h = sizef(r)
        if h <= 0:
            raise MeshError("nonpositive mesh size")
        if r + 1.45 * h >= r_out:
            radii.append(r_out)
            break
        r = r + h
        radii.append(r)
        if len(radii) > _MAX_RINGS:
            raise MeshError("ring count exploded; check h_far/grading/epsilon")
    return np.asarray(radii)


def _round_up_multiple(n: int, m: int) -> int:
    return int(math.ceil(n / m) * m)


# ---------------------------------------------------------------------------
# structured ring meshes
# ---------------------------------------------------------------------------

def _ring_band_triangles(base_lo: int, base_hi: int, n: int) -> np.ndarray:
    """Alternating-diagonal band between two rings with n vertices each."""
    j = np.arange(n)
    jp = (j + 1) % n
    lo, lop = base_lo + j, base_lo + jp
    hi, hip = base_hi + j, base_hi + jp
    even = j % 2 == 0
    t1 = np.where(even[:, None], np.column_stack([lo, hi, hip]),
                  np.column_stack([lo, hi, lop]))
    t2 = np.where(even[:, None], np.column_stack([lo, hip, lop]),
                  np.column_stack([lop, hi, hip]))
    return np.vstack([t1, t2])


def _concentric_ring_mesh(radii: np.ndarray, n_theta: int, center: np.ndarray):
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    cs = np.column_stack([np.cos(theta), np.sin(theta)])
    verts = (radii[:, None, None] * cs[None, :, :]).reshape(-1, 2) + center
    tris = np.vstack(
        [
            _ring_band_triangles(i * n_theta, (i + 1) * n_theta, n_theta)
            for i in range(len(radii) - 1)
        ]
    )
    return verts, tris


def _band_between_rings(inner_idx, outer_idx, inner_angle, outer_angle) -> np.ndarray:
    """Triangulate between two closed rings with different vertex counts.

    Both rings must be indexed in increasing-angle order starting near 0.
    """
    na, nb = len(inner_idx), len(outer_idx)
    tris = []
    ia = ib = 0
    two_pi = 2.0 * np.pi
    while ia < na or ib < nb:
        next_a = inner_angle[(ia + 1) % na] + (two_pi if ia + 1 >= na else 0.0) \
            if ia < na else np.inf
        next_b = outer_angle[(ib + 1) % nb] + (two_pi if ib + 1 >= nb else 0.0) \
            if ib < nb else np.inf
        a_cur = inner_idx[ia % na]
        b_cur = outer_idx[ib % nb]
        if next_a <= next_b:
            tris.append([a_cur, b_cur, inner_idx[(ia + 1) % na]])
            ia += 1
        else:
            tris.append([a_cur, b_cur, outer_idx[(ib + 1) % nb]])
            ib += 1
    return np.asarray(tris, dtype=np.int64)


def annulus_mesh(spec: PiercedDomainSpec, h_far: float, grading: float,
                 delta: Optional[float] = None) -> TriMesh:
    """Ring mesh of a concentric pierced disk (hole at the disk center)."""
    outer: DiskOuter = spec.outer  # type: ignore[assignment]
    eps, R = spec.hole_radius, outer.radius
    xi = spec.xi
    sizef = _size_function(h_far, grading, eps, delta)
    radii = _radii_outward(eps, R, sizef)
    kappa = spec.symmetry_order or 1
    n_theta = max(64, math.ceil(2.0 * np.pi / grading),
                  math.ceil(2.0 * np.pi * R / h_far))
    n_theta = _round_up_multiple(n_theta, 4 * kappa)
    verts, tris = _concentric_ring_mesh(radii, n_theta, xi)
    tags = np.zeros(len(verts), dtype=np.uint8)
    tags[:n_theta] = HOLE
    tags[-n_theta:] = OUTER
    mesh = TriMesh(verts, tris, tags, h_far=h_far, grading=grading, spec=spec)
    if spec.symmetry_order:
        _attach_symmetry(mesh, spec.symmetry_order, xi)
    _validate(mesh)
    return mesh


def disk_mesh(radius: float, h: float, center=(0.0, 0.0)) -> TriMesh:
    """Quasi-uniform mesh of an unpierced disk (center fan plus rings)."""
    center = np.asarray(center, dtype=float)
    m = max(2, math.ceil(radius / h))
    radii = radius * np.arange(1, m + 1) / m
    counts = [max(6, int(round(2.0 * np.pi * r / h))) for r in radii]
    verts = [center[None, :]]
    ring_index, ring_angle = [], []
    offset = 1
    for r, n in zip(radii, counts):
        th = 2.0 * np.pi * np.arange(n) / n
        verts.append(center + r * np.column_stack([np.cos(th), np.sin(th)]))
        ring_index.append(np.arange(offset, offset + n))
        ring_angle.append(th)
        offset += n
    verts = np.vstack(verts)
    tris = [np.column_stack([
        np.zeros(counts[0], dtype=np.int64),
        ring_index[0],
        np.roll(ring_index[0], -1),
    ])]
    for i in range(len(radii) - 1):
        tris.append(_band_between_rings(ring_index[i], ring_index[i + 1],
                                        ring_angle[i], ring_angle[i + 1]))
    tris = np.vstack(tris)
    tags = np.zeros(len(verts), dtype=np.uint8)
    tags[ring_index[-1]] = OUTER
    mesh = TriMesh(verts, tris, tags, h_far=h, grading=1.0)
    _validate(mesh)
    return mesh


# ---------------------------------------------------------------------------
# hybrid meshes: ring core + Delaunay far field
# ---------------------------------------------------------------------------

def _hex_lattice(bbox, step) -> np.ndarray:
    (x0, y0), (x1, y1) = bbox
    dy = step * np.sqrt(3.0) / 2.0
    rows = []
    ny = int((y1 - y0) / dy) + 2
    nx = int((x1 - x0) / step) + 3
    for iy in range(ny):
        y = y0 + iy * dy
        shift = 0.5 * step if iy % 2 else 0.0
        x = x0 + shift + step * np.arange(nx)
        rows.append(np.column_stack([x, np.full_like(x, y)]))
    return np.vstack(rows)


def _outer_boundary_points(outer, h: float, kappa: int, xi) -> np.ndarray:
    if isinstance(outer, DiskOuter):
        n = _round_up_multiple(max(64, math.ceil(2 * np.pi * outer.radius / h)), 4)
        th = 2.0 * np.pi * np.arange(n) / n
        return np.asarray(outer.center) + outer.radius * np.column_stack(
            [np.cos(th), np.sin(th)]
        )
    pts = []
    v = outer.array
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        nseg = max(1, math.ceil(np.hypot(*(b - a)) / h))
        t = np.arange(nseg) / nseg
        pts.append(a + t[:, None] * (b - a))
    return np.vstack(pts)


def _symmetric_orbit_filter(pts: np.ndarray, xi: np.ndarray, kappa: int,
                            min_sep: float) -> np.ndarray:
    """Replace a point cloud by the union of full symmetry orbits.

    Points are canonicalized into the fundamental sector, deduplicated, kept
    away from the sector rays, and re-emitted as whole orbits; collisions
    drop whole orbits so vertex-level symmetry is exact.
    """
    sector = np.pi / kappa
    rel = pts - xi
    ang = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), sector)
    rad = np.hypot(rel[:, 0], rel[:, 1])
    canon = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    key = np.round(canon / (0.25 * min_sep)).astype(np.int64)
    _, uniq = np.unique(key, axis=0, return_index=True)
    reps = canon[np.sort(uniq)]
    a = np.mod(np.arctan2(reps[:, 1], reps[:, 0]), sector)
    rr = np.hypot(reps[:, 0], reps[:, 1])
    clear_rays = (rr * np.sin(a) > 0.5 * min_sep) \
        & (rr * np.sin(np.clip(sector - a, 0.0, None)) > 0.5 * min_sep) \
        & (rr > min_sep)
    reps = reps[clear_rays]
    orbits = [reps @ rotation_matrix(t * sector).T + xi for t in range(2 * kappa)]
    out = np.vstack(orbits)
    orbit_id = np.tile(np.arange(len(reps)), 2 * kappa)
    tree = cKDTree(out)
    pairs = tree.query_pairs(min_sep, output_type="ndarray")
    bad: set[int] = set()
    for i, j in pairs:
        bad.add(int(max(orbit_id[i], orbit_id[j])))
    if bad:
        keep = ~np.isin(orbit_id, np.fromiter(bad, dtype=np.int64))
        out = out[keep]
    return out


def _required_edges_present(tri: Delaunay, loops: list[np.ndarray]) -> list[tuple]:
    simplices = tri.simplices
    edge_set = set()
    for t in simplices:
        for a, b in ((0, 1), (1, 2), (2, 0)):
            i, j = int(t[a]), int(t[b])
            edge_set.add((min(i, j), max(i, j)))
    missing = []
    for loop in loops:
        for k in range(len(loop)):
            i, j = int(loop[k]), int(loop[(k + 1) % len(loop)])
            if (min(i, j), max(i, j)) not in edge_set:
                missing.append((i, j))
    return missing


def hybrid_pierced_mesh(spec: PiercedDomainSpec, h_far: float, grading: float,
                        delta: Optional[float] = None) -> TriMesh:
    """Pierced mesh for a hole that is not at the center of a disk.

    A structured ring core surrounds the hole out to a core radius; the
    remaining region is filled by Delaunay triangulation with boundary
    segment recovery.
    """
    xi = spec.xi
    eps = spec.hole_radius
    d_bnd = spec.boundary_distance
    kappa = spec.symmetry_order or 1
    r_core_max = 0.7 * d_bnd
    if r_core_max <= 4 * eps:
        raise GeometryError("hole too close to the outer boundary for a graded core")
    sizef = _size_function(h_far, grading, eps, delta)
    radii_all = _radii_outward(eps, spec.diameter, sizef)
    radii = radii_all[radii_all <= r_core_max]
    if len(radii) < 2:
        raise MeshError("core region degenerate; decrease h_far or grading")
    r_core = float(radii[-1])
    n_theta = max(64, math.ceil(2 * np.pi / grading),
                  math.ceil(2 * np.pi * r_core / h_far))
    n_theta = _round_up_multiple(n_theta, 4 * kappa)
    core_verts, core_tris = _concentric_ring_mesh(radii, n_theta, xi)
    interface = core_verts[-n_theta:]

    bnd_pts = _outer_boundary_points(spec.outer, h_far, kappa, xi)
    lattice = _hex_lattice(_bbox(spec.outer), 0.95 * h_far)
    inside = spec.outer.contains(lattice)
    clear_bnd = np.array(
        [spec.outer.boundary_distance(p) > 0.6 * h_far for p in lattice]
    )
    rad = np.hypot(*(lattice - xi).T)
    clear_core = rad > r_core + 0.6 * np.minimum(h_far, grading * np.maximum(rad, r_core))
    lattice = lattice[inside & clear_bnd & clear_core]
    if spec.symmetry_order:
        lattice = _symmetric_orbit_filter(lattice, xi, kappa, 0.4 * h_far)
        rad = np.hypot(*(lattice - xi).T)
        lattice = lattice[rad > r_core + 0.3 * h_far]

    far_pts = np.vstack([interface, bnd_pts, lattice])
    n_int, n_bnd = len(interface), len(bnd_pts)
    loops = [np.arange(n_int), np.arange(n_int, n_int + n_bnd)]

    sym = (xi, kappa) if spec.symmetry_order else None
    for _ in range(8):
        tri = Delaunay(far_pts)
        missing = _required_edges_present(tri, loops)
        if not missing:
            break
        far_pts, loops = _insert_loop_points(far_pts, loops, missing, sym=sym)
    else:
        raise MeshError("boundary recovery failed after 8 rounds")

    centroids = far_pts[tri.simplices].mean(axis=1)
    keep_outer = spec.outer.contains(centroids)
    keep_core = np.hypot(*(centroids - xi).T) > r_core * np.cos(np.pi / n_theta)
    far_tris = tri.simplices[keep_outer & keep_core]

    # merge: interface vertices are shared with the core by exact coordinates
    far_global = np.full(len(far_pts), -1, dtype=np.int64)
    far_global[:n_int] = len(core_verts) - n_theta + np.arange(n_theta)
    extra = np.flatnonzero(far_global < 0)
    far_global[extra] = len(core_verts) + np.arange(len(extra))
    verts = np.vstack([core_verts, far_pts[extra]])
    tris = np.vstack([core_tris, far_global[far_tris]])
    tris = _orient_positive(verts, tris)

    tags = np.zeros(len(verts), dtype=np.uint8)
    tags[:n_theta] = HOLE
    bnd_global = far_global[n_int:n_int + n_bnd]
    tags[bnd_global] = OUTER
    # recovered midpoints on the outer loop
    for loop_pts in loops[1:2]:
        tags[far_global[loop_pts]] = OUTER

    mesh = TriMesh(verts, tris, tags, h_far=h_far, grading=grading, spec=spec)
    if spec.symmetry_order:
        _attach_symmetry(mesh, spec.symmetry_order, xi)
    _validate(mesh)
    return mesh


def _insert_loop_points(pts, loops, missing, sym=None):
    """Split loop edges at midpoints of unrecovered segments.

    With ``sym = (center, kappa)`` the whole rotation orbit of each midpoint
    is inserted so that vertex-level symmetry survives recovery.
    """
    coords = list(pts)
    loops = [list(l) for l in loops]
    mids = np.array([0.5 * (pts[i] + pts[j]) for i, j in missing])
    if sym is not None:
        center, kappa = sym
        mids = np.vstack([
            (mids - center) @ rotation_matrix(t * np.pi / kappa).T + center
            for t in range(2 * kappa)
        ])
    scale = float(np.max(np.ptp(pts, axis=0)))
    existing = cKDTree(pts)
    for mid in mids:
        if existing.query(mid)[0] < 1e-11 * scale:
            continue
        placed = False
        for loop in loops:
            for k in range(len(loop)):
                a, b = coords[loop[k]], coords[loop[(k + 1) % len(loop)]]
                if _on_open_segment(mid, a, b):
                    coords.append(mid)
                    loop.insert(k + 1, len(coords) - 1)
                    placed = True
                    break
            if placed:
                break
    return np.asarray(coords), [np.asarray(l) for l in loops]


def _on_open_segment(p, a, b, tol_rel: float = 1e-9) -> bool:
    ab = np.asarray(b) - np.asarray(a)
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return False
    t = float((np.asarray(p) - a) @ ab) / L2
    if not (0.01 < t < 0.99):
        return False
    proj = a + t * ab
    return bool(np.hypot(*(np.asarray(p) - proj)) < tol_rel * np.sqrt(L2))


def _bbox(outer):
    if isinstance(outer, DiskOuter):
        c = np.asarray(outer.center)
        r = outer.radius
        return (c - r, c + r)
    v = outer.array
    return (v.min(axis=0), v.max(axis=0))


def polygon_mesh(outer: PolygonOuter, h: float) -> TriMesh:
    """Quasi-uniform unpierced mesh of a polygon (for Green's function work)."""
    bnd = _outer_boundary_points(outer, h, 1, np.zeros(2))
    lattice = _hex_lattice(_bbox(outer), 0.95 * h)
    inside = outer.contains(lattice)
    clear = np.array([outer.boundary_distance(p) > 0.6 * h for p in lattice])
    pts = np.vstack([bnd, lattice[inside & clear]])
    loops = [np.arange(len(bnd))]
    for _ in range(8):
        tri = Delaunay(pts)
        missing = _required_edges_present(tri, loops)
        if not missing:
            break
        pts, loops = _insert_loop_points(pts, loops, missing)
    else:
        raise MeshError("boundary recovery failed")
    centroids = pts[tri.simplices].mean(axis=1)
    tris = tri.simplices[outer.contains(centroids)]
    tris = _orient_positive(pts, tris)
    tags = np.zeros(len(pts), dtype=np.uint8)
    for loop in loops:
        tags[loop] = OUTER
    mesh = TriMesh(pts, tris, tags, h_far=h, grading=1.0)
    _validate(mesh)
    return mesh


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def build_mesh(spec: PiercedDomainSpec, h_far: float, grading: float,
               delta: Optional[float] = None) -> TriMesh:
    """Graded mesh of the pierced domain Omega minus the hole.

    Local size is about max(grading*dist(x, xi), eps/4) near the hole,
    at most h_far elsewhere, and optionally refined near the concentration
    radius ``delta``.
    """
    if not (0.0 < grading <= 1.0):
        raise GeometryError("grading must lie in (0, 1]")
    if not (h_far < spec.diameter / 4.0):
        raise GeometryError("h_far must be below diam(Omega)/4")
    if spec.hole_radius <= 0:
        raise GeometryError("build_mesh needs a pierced domain (hole_radius > 0)")
    outer = spec.outer
    if isinstance(outer, DiskOuter):
        concentric = np.hypot(*(np.asarray(outer.center) - spec.xi)) \
            <= 1e-12 * outer.radius
        if concentric:
            return annulus_mesh(spec, h_far, grading, delta)
    if spec.symmetry_order and not isinstance(outer, PolygonOuter):
        raise GeometryError("symmetry requested for a non-concentric disk")
    return hybrid_pierced_mesh(spec, h_far, grading, delta)


def build_omega_mesh(spec: PiercedDomainSpec, h_far: float) -> TriMesh:
    """Quasi-uniform mesh of the unpierced outer region Omega."""
    outer = spec.outer
    if isinstance(outer, DiskOuter):
        return disk_mesh(outer.radius, h_far, outer.center)
    return polygon_mesh(outer, h_far)


# ---------------------------------------------------------------------------
# symmetry, validation, IO
# ---------------------------------------------------------------------------

def _attach_symmetry(mesh: TriMesh, kappa: int, center) -> None:
    center = np.asarray(center, dtype=float)
    rot = rotation_matrix(np.pi / kappa)
    rotated = (mesh.vertices - center) @ rot.T + center
    tree = cKDTree(mesh.vertices)
    dist, idx = tree.query(rotated)
    diam = mesh.spec.diameter if mesh.spec is not None else \
        float(np.max(np.ptp(mesh.vertices, axis=0)))
    if np.max(dist) > 1e-10 * diam:
        raise MeshError(
            f"mesh is not {kappa}-symmetric: worst vertex mismatch {np.max(dist):.3e}"
        )
    perm = idx.astype(np.int64)
    if len(np.unique(perm)) != len(perm):
        raise MeshError("symmetry map is not a permutation")
    # snap vertex coordinates onto exact orbit averages is unnecessary; the
    # permutation is what discrete symmetrization uses.
    tri_sets = {tuple(sorted(t)) for t in mesh.triangles.tolist()}
    mapped = {tuple(sorted(perm[list(t)])) for t in tri_sets}
    exact = mapped == tri_sets
    mesh.symmetry = SymmetryMap(kappa=kappa, center=center, permutation=perm,
                                connectivity_exact=exact)


def _orient_positive(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    t = verts[tris]
    e1 = t[:, 1] - t[:, 0]
    e2 = t[:, 2] - t[:, 0]
    area2 = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    flipped = tris.copy()
    neg = area2 < 0
    flipped[neg] = flipped[neg][:, [0, 2, 1]]
    return flipped


def _validate(mesh: TriMesh) -> None:
    if np.any(mesh.areas() <= 0.0):
        raise MeshError("mesh has inverted or degenerate triangles")
    edges, adj = mesh.edges()
    share = np.sum(adj >= 0, axis=1)
    if np.any(share > 2) or np.any(share == 0):
        raise MeshError("non-conforming triangulation")
    boundary = edges[share == 1]
    bnd_vertices = np.unique(boundary)
    if np.any(mesh.vertex_tags[bnd_vertices] == INTERIOR):
        raise MeshError("boundary vertex without a boundary tag")
    if mesh.spec is not None and mesh.spec.hole_radius > 0:
        hole = mesh.boundary_vertices(HOLE)
        if len(hole) < 64:
            raise MeshError("hole circle resolved by fewer than 64 vertices")
        eps = mesh.spec.hole_radius
        r = np.hypot(*(mesh.vertices[hole] - mesh.spec.xi).T)
        tol = max((0.25 * eps) ** 2 / eps, 1e-12 * eps)
        if np.max(np.abs(r - eps)) > tol:
            raise MeshError("hole vertices drift off the hole circle")
    if mesh.symmetry is not None:
        perm = mesh.symmetry.permutation
        p = np.arange(mesh.n_vertices)
        for _ in range(2 * mesh.symmetry.kappa):
            p = perm[p]
        if not np.array_equal(p, np.arange(mesh.n_vertices)):
            raise MeshError("symmetry permutation has wrong group order")


def save_mesh(mesh: TriMesh, path) -> None:
    """Plain-text node/element format; see README for the layout."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"vertices {mesh.n_vertices}\n")
        for i, ((x, y), t) in enumerate(zip(mesh.vertices, mesh.vertex_tags)):
            f.write(f"{i} {float(x)!r} {float(y)!r} {_TAG_NAMES[int(t)]}\n")
        f.write(f"triangles {mesh.n_triangles}\n")
        for i, (a, b, c) in enumerate(mesh.triangles):
            f.write(f"{i} {a} {b} {c}\n")


def load_mesh(path) -> TriMesh:
    with open(path, "r", encoding="utf-8") as f:
        tokens = f.read().split("\n")
    line = 0
    head = tokens[line].split()
    if head[0] != "vertices":
        raise MeshError("bad mesh file: expected vertex section")
    n = int(head[1])
    verts = np.empty((n, 2))
    tags = np.empty(n, dtype=np.uint8)
    for k in range(n):
        line += 1
        i, x, y, t = tokens[line].split()
        verts[int(i)] = (float(x), float(y))
        tags[int(i)] = _TAG_IDS[t]
    line += 1
    head = tokens[line].split()
    if head[0] != "triangles":
        raise MeshError("bad mesh file: expected triangle section")
    m = int(head[1])
    tris = np.empty((m, 3), dtype=np.int64)
    for k in range(m):
        line += 1
        i, a, b, c = tokens[line].split()
        tris[int(i)] = (int(a), int(b), int(c))
    mesh = TriMesh(verts, tris, tags)
    _validate(mesh)
    return mesh
