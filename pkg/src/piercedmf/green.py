"""Dirichlet Green's function of the unpierced domain, regular part, Robin values.

The Green function is G(x, y) = (1/2pi) ln(1/|x-y|) + H(x, y) where the
regular part H(., y) is harmonic with boundary trace -(1/2pi) ln(1/|x-y|).
H is computed by one Dirichlet solve per source point on a mesh of the
*unpierced* region; the factorization is shared across source points.  For
disks a closed-form image oracle is provided.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .fem import ScalarField, dirichlet_solver, interpolate
from .meshing import OUTER, TriMesh

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class GreenDecomposition:
    """Source point, FEM regular part on the unpierced mesh, Robin value."""

    source: np.ndarray
    regular: ScalarField
    robin: float

    def singular_part(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.hypot(x[:, 0] - self.source[0], x[:, 1] - self.source[1])
        return np.log(1.0 / r) / TWO_PI

    def green_at_nodes(self) -> np.ndarray:
        """G(x_i, y) at the mesh nodes (infinite at a node equal to y)."""
        mesh = self.regular.mesh
        with np.errstate(divide="ignore"):
            return self.singular_part(mesh.vertices) + self.regular.values

    def __call__(self, x) -> np.ndarray:
        """G(x, y) by interpolating the regular part."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        vals = self.singular_part(x) + np.atleast_1d(interpolate(self.regular, x))
        return vals if len(vals) > 1 else float(vals[0])


def green_function(omega_mesh: TriMesh, y) -> GreenDecomposition:
    """Green decomposition for a source y in the interior of Omega."""
    y = np.asarray(y, dtype=float)
    outer_nodes = omega_mesh.vertices[omega_mesh.vertex_tags == OUTER]
    d_bnd = float(np.min(np.hypot(outer_nodes[:, 0] - y[0], outer_nodes[:, 1] - y[1])))
    if d_bnd <= 2.0 * omega_mesh.h_far:
        raise GeometryError(
            f"source point too close to the boundary (dist {d_bnd:.3g})"
        )

    def trace(pts):
        r = np.hypot(pts[:, 0] - y[0], pts[:, 1] - y[1])
        return -np.log(1.0 / r) / TWO_PI

    solver = dirichlet_solver(omega_mesh, constrained_tags=(OUTER,))
    regular = solver.solve(rhs=None, boundary={OUTER: trace})
    robin = float(interpolate(regular, y))
    return GreenDecomposition(source=y, regular=regular, robin=robin)


# ---------------------------------------------------------------------------
# analytic disk oracle (image point formula)
# ---------------------------------------------------------------------------

def disk_green_analytic(x, y, r_out: float, center=(0.0, 0.0)) -> np.ndarray:
    """Closed-form G for the disk of radius r_out, via the image point.

    The removable singularity at y = center is handled explicitly.
    """
    c = np.asarray(center, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float)) - c
    y = np.asarray(y, dtype=float) - c
    rx = np.hypot(x[:, 0], x[:, 1])
    ry = float(np.hypot(y[0], y[1]))
    if np.any(rx > r_out * (1 + 1e-12)) or ry >= r_out:
        raise GeometryError("disk Green's oracle needs |x|, |y| < r_out")
    d = np.hypot(x[:, 0] - y[0], x[:, 1] - y[1])
    with np.errstate(divide="ignore"):
        if ry == 0.0:
            vals = np.log(r_out / rx) / TWO_PI
        else:
            ystar = y * (r_out / ry) ** 2
            dstar = np.hypot(x[:, 0] - ystar[0], x[:, 1] - ystar[1])
            vals = (np.log(1.0 / d) - np.log(r_out / (ry * dstar))) / TWO_PI
    return vals if len(vals) > 1 else float(vals[0])


def disk_regular_analytic(x, y, r_out: float, center=(0.0, 0.0)) -> np.ndarray:
    """Regular part H(x, y) of the disk Green's function."""
    c = np.asarray(center, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float)) - c
    y = np.asarray(y, dtype=float) - c
    ry = float(np.hypot(y[0], y[1]))
    if ry == 0.0:
        vals = np.full(len(x), np.log(r_out) / TWO_PI)
    else:
        ystar = y * (r_out / ry) ** 2
        dstar = np.hypot(x[:, 0] - ystar[0], x[:, 1] - ystar[1])
        vals = np.log(ry * dstar / r_out) / TWO_PI
    return vals if len(vals) > 1 else float(vals[0])


def disk_robin_analytic(y, r_out: float, center=(0.0, 0.0)) -> float:
    """Robin value H(y, y) of the disk: (1/2pi) ln((r_out^2 - |y|^2)/r_out)."""
    ry = float(np.hypot(*(np.asarray(y, dtype=float) - np.asarray(center))))
    if ry >= r_out:
        raise GeometryError("point outside the disk")
    return float(np.log((r_out**2 - ry**2) / r_out) / TWO_PI)


# ---------------------------------------------------------------------------
# Robin tables
# ---------------------------------------------------------------------------

def robin_table(omega_mesh: TriMesh, points) -> list[tuple[np.ndarray, float]]:
    """(point, H(x,x)) rows; one Dirichlet solve per point, shared factorization."""
    rows = []
    for p in np.atleast_2d(np.asarray(points, dtype=float)):
        rows.append((p.copy(), green_function(omega_mesh, p).robin))
    return rows


def write_robin_csv(rows, mesh_h: float, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["x1", "x2", "robin_value", "mesh_h"])
        for p, val in rows:
            w.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(val)),
                        repr(float(mesh_h))])
