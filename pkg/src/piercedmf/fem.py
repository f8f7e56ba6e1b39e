"""Piecewise-linear finite elements on TriMesh: assembly, solves, norms.

All assembly is vectorized over triangles.  Factorizations are cached on the
mesh, so repeated Dirichlet solves (projections, Green's functions, harmonic
corrections) reuse one sparse LU.  Meshes and fields are immutable, so
cached objects are safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .meshing import HOLE, INTERIOR, OUTER, TriMesh
from .quadrature import physical_points, rule

DIRECT_LIMIT = 200_000


@dataclass(frozen=True)
class ScalarField:
    """Nodal P1 function on a mesh.

    ``zero_tags`` records which boundary tags were constrained to zero when
    the field came out of a Dirichlet solve (empty otherwise).
    """

    mesh: TriMesh
    values: np.ndarray
    zero_tags: tuple = ()

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if len(v) != self.mesh.n_vertices:
            raise ValueError("nodal value count does not match the mesh")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "ScalarField":
        return replace(self, values=np.asarray(values, dtype=float))

    def __add__(self, other):
        if isinstance(other, ScalarField):
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# geometry and assembly
# ---------------------------------------------------------------------------

def _tri_geometry(mesh: TriMesh):
    """Per-triangle areas and P1 shape-function gradients, cached."""
    if "geometry" not in mesh._cache:
        t = mesh.tri_coords()
        e1 = t[:, 1] - t[:, 0]
        e2 = t[:, 2] - t[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        area = 0.5 * det
        grads = np.empty((len(t), 3, 2))
        # gradients of barycentric coordinates
        grads[:, 1, 0] = e2[:, 1] / det
        grads[:, 1, 1] = -e2[:, 0] / det
        grads[:, 2, 0] = -e1[:, 1] / det
        grads[:, 2, 1] = e1[:, 0] / det
        grads[:, 0] = -grads[:, 1] - grads[:, 2]
        mesh._cache["geometry"] = (area, grads)
    return mesh._cache["geometry"]


def stiffness_matrix(mesh: TriMesh) -> sp.csr_matrix:
    if "stiffness" not in mesh._cache:
        area, grads = _tri_geometry(mesh)
        local = np.einsum("t,tid,tjd->tij", area, grads, grads)
        mesh._cache["stiffness"] = _scatter(mesh, local)
    return mesh._cache["stiffness"]


def mass_matrix(mesh: TriMesh, order: int = 2) -> sp.csr_matrix:
    key = ("mass", order)
    if key not in mesh._cache:
        mesh._cache[key] = weighted_mass_matrix(mesh, None, order)
    return mesh._cache[key]


def weighted_mass_matrix(mesh: TriMesh, weight_q: Optional[np.ndarray],
                         order: int = 4) -> sp.csr_matrix:
    """Assemble (w phi_i, phi_j); ``weight_q`` has shape (ntri, nq) or None."""
    bary, w = rule(order)
    area, _ = _tri_geometry(mesh)
    if weight_q is None:
        weight_q = np.ones((mesh.n_triangles, len(w)))
    local = np.einsum("t,q,tq,qi,qj->tij", area, w, weight_q, bary, bary)
    return _scatter(mesh, local)


def _scatter(mesh: TriMesh, local: np.ndarray) -> sp.csr_matrix:
    tri = mesh.triangles
    n = mesh.n_vertices
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    return mat.tocsr()


def quad_points(mesh: TriMesh, order: int):
    key = ("qpts", order)
    if key not in mesh._cache:
        bary, w = rule(order)
        mesh._cache[key] = (bary, w, physical_points(bary, mesh.tri_coords()))
    return mesh._cache[key]


def field_at_quad(f: ScalarField, order: int) -> np.ndarray:
    bary, _, _ = quad_points(f.mesh, order)
    return np.einsum("qk,tk->tq", bary, f.values[f.mesh.triangles])


def _callable_at_quad(f: Callable, mesh: TriMesh, order: int) -> np.ndarray:
    _, _, pts = quad_points(mesh, order)
    flat = pts.reshape(-1, 2)
    vals = np.asarray(f(flat), dtype=float)
    if vals.shape != (len(flat),):
        vals = np.array([float(f(p)) for p in flat])
    return vals.reshape(pts.shape[:2])


def values_at_quad(f, mesh: TriMesh, order: int) -> np.ndarray:
    if isinstance(f, ScalarField):
        if f.mesh is not mesh:
            raise ValueError("field lives on a different mesh")
        return field_at_quad(f, order)
    if callable(f):
        return _callable_at_quad(f, mesh, order)
    arr = np.asarray(f, dtype=float)
    if arr.shape == (mesh.n_vertices,):
        return field_at_quad(ScalarField(mesh, arr), order)
    return arr  # already quad values


def load_vector(mesh: TriMesh, f, order: int = 4) -> np.ndarray:
    """Assemble (f, phi_i) for f a field, callable, or quad-value array."""
    fq = values_at_quad(f, mesh, order)
    if not np.all(np.isfinite(fq)):
        raise SolverError("non-finite load evaluation at a quadrature node")
    bary, w = rule(order)
    area, _ = _tri_geometry(mesh)
    local = np.einsum("t,q,tq,qi->ti", area, w, fq, bary)
    b = np.zeros(mesh.n_vertices)
    np.add.at(b, mesh.triangles.ravel(), local.ravel())
    return b


def integrate(f, mesh: TriMesh, order: int = 4) -> float:
    """Quadrature of a field or pointwise function over the mesh."""
    fq = values_at_quad(f, mesh, order)
    if not np.all(np.isfinite(fq)):
        raise SolverError("non-finite evaluation at a quadrature node")
    bary, w = rule(order)
    area, _ = _tri_geometry(mesh)
    return float(np.einsum("t,q,tq->", area, w, fq))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def lp_norm(f, p: float, mesh: Optional[TriMesh] = None, order: int = 6) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    if isinstance(f, ScalarField):
        mesh = f.mesh
    if mesh is None:
        raise ValueError("mesh required for non-field input")
    fq = np.abs(values_at_quad(f, mesh, order)) ** p
    bary, w = rule(order)
    area, _ = _tri_geometry(mesh)
    return float(np.einsum("t,q,tq->", area, w, fq)) ** (1.0 / p)


def h1_seminorm(f: ScalarField) -> float:
    area, grads = _tri_geometry(f.mesh)
    g = np.einsum("tkd,tk->td", grads, f.values[f.mesh.triangles])
    return float(np.sqrt(np.sum(area * np.einsum("td,td->t", g, g))))


def gradient(f: ScalarField) -> np.ndarray:
    """Constant per-triangle gradient, shape (ntri, 2)."""
    _, grads = _tri_geometry(f.mesh)
    return np.einsum("tkd,tk->td", grads, f.values[f.mesh.triangles])


# ---------------------------------------------------------------------------
# Dirichlet solves
# ---------------------------------------------------------------------------

class _DirectSolver:
    def __init__(self, mat: sp.csr_matrix):
        try:
            self._lu = spla.splu(mat.tocsc())
        except RuntimeError as exc:  # singular factorization
            raise SolverError(f"sparse factorization failed: {exc}") from exc

    def solve(self, b: np.ndarray) -> np.ndarray:
        x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SolverError("direct solve returned non-finite values")
        return x


class _IterativeSolver:
    """AMG-preconditioned Krylov fallback above the direct-solve limit."""

    def __init__(self, mat: sp.csr_matrix, spd_proxy: Optional[sp.csr_matrix] = None):
        import pyamg

        self._mat = mat.tocsr()
        proxy = spd_proxy if spd_proxy is not None else self._mat
        self._amg = pyamg.smoothed_aggregation_solver(proxy.tocsr())
        self._prec = self._amg.aspreconditioner(cycle="V")
        self._indefinite = spd_proxy is not None

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self._indefinite:
            x, info = spla.minres(self._mat, b, M=self._prec, rtol=1e-12,
                                  maxiter=2000)
        else:
            x, info = spla.cg(self._mat, b, M=self._prec, rtol=1e-12,
                              maxiter=2000)
        if info != 0:
            raise SolverError(f"iterative solver did not converge (info={info})")
        return x


def make_solver(mat: sp.csr_matrix, spd_proxy: Optional[sp.csr_matrix] = None):
    if mat.shape[0] <= DIRECT_LIMIT:
        return _DirectSolver(mat)
    return _IterativeSolver(mat, spd_proxy)


class DirichletSolver:
    """Reusable -Laplace solver with Dirichlet data on tagged boundaries."""

    def __init__(self, mesh: TriMesh, constrained_tags=(OUTER, HOLE)):
        self.mesh = mesh
        self.tags = tuple(sorted(set(int(t) for t in constrained_tags)))
        tags = mesh.vertex_tags
        self.constrained = np.isin(tags, self.tags)
        self.free = np.flatnonzero(~self.constrained)
        self.fixed = np.flatnonzero(self.constrained)
        K = stiffness_matrix(mesh)
        self.K = K
        self.K_ff = K[self.free][:, self.free].tocsr()
        self.K_fc = K[self.free][:, self.fixed].tocsr()
        self.solver = make_solver(self.K_ff)

    def boundary_values(self, boundary) -> np.ndarray:
        """Assemble the fixed nodal values from per-tag data."""
        g = np.zeros(len(self.fixed))
        if boundary is None:
            return g
        pts = self.mesh.vertices[self.fixed]
        tags = self.mesh.vertex_tags[self.fixed]
        for tag, data in boundary.items():
            tid = _TAG_LOOKUP[tag] if isinstance(tag, str) else int(tag)
            mask = tags == tid
            if callable(data):
                g[mask] = np.asarray(data(pts[mask]), dtype=float)
            else:
                g[mask] = float(data)
        return g

    def solve(self, rhs=None, boundary=None, order: int = 4) -> ScalarField:
        b = load_vector(self.mesh, rhs, order) if rhs is not None \
            else np.zeros(self.mesh.n_vertices)
        g = self.boundary_values(boundary)
        rhs_f = b[self.free] - self.K_fc @ g
        u = np.zeros(self.mesh.n_vertices)
        u[self.free] = self.solver.solve(rhs_f)
        u[self.fixed] = g
        zero_tags = tuple(
            t for t in self.tags
            if boundary is None or not _tag_has_data(boundary, t)
        )
        return ScalarField(self.mesh, u, zero_tags=zero_tags)


_TAG_LOOKUP = {"outer": OUTER, "hole": HOLE, "interior": INTERIOR}


def _tag_has_data(boundary, tag: int) -> bool:
    for key in boundary:
        tid = _TAG_LOOKUP[key] if isinstance(key, str) else int(key)
        if tid == tag:
            return True
    return False


def dirichlet_solver(mesh: TriMesh, constrained_tags=None) -> DirichletSolver:
    """Cached solver; default constrains every boundary tag present."""
    if constrained_tags is None:
        present = np.unique(mesh.vertex_tags)
        constrained_tags = tuple(int(t) for t in present if t != INTERIOR)
    key = ("dirichlet", tuple(sorted(constrained_tags)))
    if key not in mesh._cache:
        mesh._cache[key] = DirichletSolver(mesh, constrained_tags)
    return mesh._cache[key]


def solve_dirichlet(mesh: TriMesh, rhs=None, boundary=None, order: int = 4) -> ScalarField:
    """Weak solution of -Laplace u = rhs with per-tag Dirichlet data."""
    return dirichlet_solver(mesh).solve(rhs=rhs, boundary=boundary, order=order)


# ---------------------------------------------------------------------------
# symmetrization
# ---------------------------------------------------------------------------

def symmetrize(f: ScalarField) -> ScalarField:
    """Group average over the rotations generated by the mesh symmetry map.

    Orbit members receive the identical average, which makes the operation
    exactly idempotent at nodes.
    """
    sym = f.mesh.symmetry
    if sym is None:
        raise ValueError("mesh carries no symmetry map")
    if "orbit_ids" not in f.mesh._cache:
        f.mesh._cache["orbit_ids"] = sym.orbit_ids(f.mesh.n_vertices)
    labels = f.mesh._cache["orbit_ids"]
    reps, inverse = np.unique(labels, return_inverse=True)
    sums = np.zeros(len(reps))
    counts = np.zeros(len(reps))
    np.add.at(sums, inverse, f.values)
    np.add.at(counts, inverse, 1.0)
    return f.with_values((sums / counts)[inverse])


def symmetry_defect(f: ScalarField) -> float:
    """Max nodal deviation from the rotated values."""
    sym = f.mesh.symmetry
    if sym is None:
        raise ValueError("mesh carries no symmetry map")
    return float(np.max(np.abs(f.values - f.values[sym.permutation])))


# ---------------------------------------------------------------------------
# interpolation and stable exponentials
# ---------------------------------------------------------------------------

def _centroid_tree(mesh: TriMesh):
    from scipy.spatial import cKDTree

    if "ctree" not in mesh._cache:
        mesh._cache["ctree"] = cKDTree(mesh.tri_coords().mean(axis=1))
    return mesh._cache["ctree"]


def locate(mesh: TriMesh, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Containing triangle and barycentric coordinates for each point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tree = _centroid_tree(mesh)
    k = min(32, mesh.n_triangles)
    _, cand = tree.query(pts, k=k)
    cand = np.atleast_2d(cand)
    tri_id = np.full(len(pts), -1, dtype=np.int64)
    bary = np.zeros((len(pts), 3))
    coords = mesh.tri_coords()
    for i, p in enumerate(pts):
        best, best_min = -1, -np.inf
        for t in cand[i]:
            lam = _barycentric(coords[t], p)
            m = lam.min()
            if m > best_min:
                best, best_min, best_lam = int(t), m, lam
            if m >= -1e-12:
                break
        tri_id[i] = best
        bary[i] = best_lam
        if best_min < -1e-6:
            tri_id[i] = -1
    return tri_id, bary


def _barycentric(tri: np.ndarray, p: np.ndarray) -> np.ndarray:
    T = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    try:
        ab = np.linalg.solve(T, p - tri[0])
    except np.linalg.LinAlgError:
        return np.array([-np.inf, 0, 0])
    return np.array([1.0 - ab[0] - ab[1], ab[0], ab[1]])


def interpolate(f: ScalarField, points) -> np.ndarray:
    """P1 evaluation at arbitrary points inside the mesh."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    tri_id, bary = locate(f.mesh, pts)
    if np.any(tri_id < 0):
        raise ValueError("point outside the mesh")
    vals = np.einsum("pk,pk->p", bary, f.values[f.mesh.triangles[tri_id]])
    return vals if len(vals) > 1 else float(vals[0])


def exp_measure(f: ScalarField, order: int = 4):
    """Log-offset representation of e^f for stable integrals.

    Returns (offset, integral of e^(f-offset), quad values of e^(f-offset)).
    ``integral * exp(offset)`` equals the true integral of e^f; ratios of the
    scaled quantities are offset-free.
    """
    vq = field_at_quad(f, order)
    offset = float(np.max(vq))
    eq = np.exp(vq - offset)
    bary, w = rule(order)
    area, _ = _tri_geometry(f.mesh)
    total = float(np.einsum("t,q,tq->", area, w, eq))
    if not np.isfinite(total) or total <= 0:
        raise SolverError("exponential integral degenerated after rescaling")
    return offset, total, eq
