"""Exception types shared across the package."""


class GeometryError(ValueError):
    """Invalid domain geometry (hole exits domain, bad polygon, missing symmetry)."""


class MeshError(RuntimeError):
    """A mesh failed a structural invariant (orientation, conformity, symmetry)."""


class RegimeError(RuntimeError):
    """Parameters are outside the asymptotic regime the construction needs.

    Raised e.g. when the concentration-scale equation has no root in its
    bracket, when the hole is too large for the expansion to hold, or when
    the Picard iteration stops contracting.
    """


class SolverError(RuntimeError):
    """A linear or nonlinear solve failed (singular system, divergence)."""
