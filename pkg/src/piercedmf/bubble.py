"""Bubble profile, parameter calibration, and projection onto the pierced domain.

The bubble w(x) = ln(2 a^2 d^a / (d^a + |x - xi|^a)^2) solves the singular
Liouville equation -Dw = |x - xi|^(a-2) e^w in the plane.  Given the mean
field parameter lambda > 8 pi, the shape exponent is a = lambda / (4 pi) and
the concentration scale d is calibrated against the hole radius and the
Robin value of the domain so that the projection expansion carries the Green
function with weight 2 pi (a - 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import RegimeError
from .fem import ScalarField, dirichlet_solver, symmetrize
from .meshing import HOLE, OUTER, TriMesh

FOUR_PI = 4.0 * np.pi
EIGHT_PI = 8.0 * np.pi
_EVEN_TOL = 1e-12


@dataclass(frozen=True)
class BubbleParams:
    """Fully calibrated ansatz parameters (lambda, alpha, delta, gamma, ...)."""

    lam: float
    alpha: float
    epsilon: float
    delta: float
    xi: tuple[float, float]
    robin_at_xi: float
    gamma: float
    symmetric_mode: bool

    def __post_init__(self):
        if abs(self.alpha - self.lam / FOUR_PI) > 1e-14 * max(1.0, self.alpha):
            raise ValueError("alpha must equal lambda / (4 pi)")
        if self.alpha <= 2.0:
            raise RegimeError("alpha must exceed 2 (lambda > 8 pi)")
        if not (0.0 < self.delta <= 1.0):
            raise RegimeError("concentration scale out of range")

    @property
    def kappa_required(self) -> Optional[int]:
        """Symmetry order the existence theorem needs, or None."""
        if not self.symmetric_mode:
            return None
        return int(round(self.alpha / 2.0))


def alpha_of_lambda(lam: float) -> float:
    """Shape exponent lambda / (4 pi); only defined in the supercritical range."""
    if lam <= EIGHT_PI:
        raise RegimeError(
            f"lambda = {lam:.6g} <= 8 pi is subcritical/critical: outside the "
            "supercritical existence range"
        )
    return lam / FOUR_PI


def is_symmetric_lambda(lam: float) -> bool:
    """True iff lambda is a multiple of 8 pi (alpha an even integer)."""
    alpha = lam / FOUR_PI
    return abs(alpha / 2.0 - round(alpha / 2.0)) <= _EVEN_TOL * max(1.0, alpha)


def _delta_equation(delta: float, alpha: float, epsilon: float, robin: float) -> float:
    return (2.0 * np.log(delta**alpha + epsilon**alpha)
            - (alpha - 2.0) * np.log(epsilon)
            - 2.0 * np.pi * (alpha + 2.0) * robin)


def solve_delta(alpha: float, epsilon: float, robin_at_xi: float) -> float:
    """Root of the concentration-scale equation, bisection plus Newton polish.

    The left side is strictly increasing in delta, so the root in
    (epsilon, 1] is unique when a sign change exists.
    """
    if not (alpha > 2.0):
        raise RegimeError("alpha must exceed 2")
    if not (0.0 < epsilon < 1.0):
        raise RegimeError("epsilon must lie in (0, 1)")
    lo, hi = epsilon, 1.0
    f_lo = _delta_equation(lo, alpha, epsilon, robin_at_xi)
    f_hi = _delta_equation(hi, alpha, epsilon, robin_at_xi)
    if not (f_lo < 0.0 < f_hi):
        raise RegimeError(
            "concentration-scale equation has no sign change in (epsilon, 1]: "
            "epsilon too large for the asymptotic regime"
        )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _delta_equation(mid, alpha, epsilon, robin_at_xi) < 0.0:
            lo = mid
        else:
            hi = mid
    delta = 0.5 * (lo + hi)
    for _ in range(40):
        f = _delta_equation(delta, alpha, epsilon, robin_at_xi)
        fp = 2.0 * alpha * delta ** (alpha - 1.0) / (delta**alpha + epsilon**alpha)
        step = f / fp
        delta -= step
        if abs(step) <= 1e-14 * delta:
            break
    return float(delta)


def delta_rate_prediction(alpha: float, robin_at_xi: float, epsilon: float) -> float:
    """Asymptotic law d ~ exp(((a+2)/a) pi H) eps^((a-2)/(2a))."""
    return float(np.exp((alpha + 2.0) / alpha * np.pi * robin_at_xi)
                 * epsilon ** ((alpha - 2.0) / (2.0 * alpha)))


def gamma_coeff(alpha: float, delta: float, epsilon: float, robin_at_xi: float) -> float:
    """Green-function weight of the projection expansion."""
    if delta <= 0 or epsilon <= 0:
        raise ValueError("delta and epsilon must be positive")
    numer = np.log(1.0 / (delta**alpha + epsilon**alpha) ** 2) \
        + FOUR_PI * alpha * robin_at_xi
    denom = np.log(1.0 / epsilon) / (2.0 * np.pi) + robin_at_xi
    if abs(denom) < 1e-12 * max(1.0, abs(numer)):
        raise RegimeError("gamma denominator vanishes: epsilon ~ e^{2 pi H}, "
                          "outside the asymptotic regime")
    return float(numer / denom)


def calibrate(lam: float, epsilon: float, robin_at_xi: float,
              xi=(0.0, 0.0)) -> BubbleParams:
    """alpha, delta, gamma from (lambda, epsilon, Robin value at xi)."""
    alpha = alpha_of_lambda(lam)
    delta = solve_delta(alpha, epsilon, robin_at_xi)
    gamma = gamma_coeff(alpha, delta, epsilon, robin_at_xi)
    return BubbleParams(
        lam=lam, alpha=alpha, epsilon=epsilon, delta=delta,
        xi=(float(xi[0]), float(xi[1])), robin_at_xi=robin_at_xi,
        gamma=gamma, symmetric_mode=is_symmetric_lambda(lam),
    )


# ---------------------------------------------------------------------------
# bubble evaluation
# ---------------------------------------------------------------------------

def bubble(params: BubbleParams, x) -> np.ndarray:
    """w at points x, evaluated stably in coordinates centered at xi."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.hypot(x[:, 0] - params.xi[0], x[:, 1] - params.xi[1])
    a, d = params.alpha, params.delta
    # ln(d^a + r^a) = a ln(max) + log1p((min/max)^a)
    big = np.maximum(r, d)
    small = np.minimum(r, d)
    log_sum = a * np.log(big) + np.log1p((small / big) ** a)
    vals = np.log(2.0 * a * a) + a * np.log(d) - 2.0 * log_sum
    return vals if len(vals) > 1 else float(vals[0])


def bubble_source(params: BubbleParams, x) -> np.ndarray:
    """|x - xi|^(a-2) e^w, the singular Liouville right-hand side."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.hypot(x[:, 0] - params.xi[0], x[:, 1] - params.xi[1])
    a, d = params.alpha, params.delta
    big = np.maximum(r, d)
    small = np.minimum(r, d)
    log_sum = a * np.log(big) + np.log1p((small / big) ** a)
    with np.errstate(divide="ignore"):
        logv = np.log(2.0 * a * a) + a * np.log(d) + (a - 2.0) * np.log(r) \
            - 2.0 * log_sum
    vals = np.exp(logv)
    return vals if len(vals) > 1 else float(vals[0])


def _bubble_extended(params: BubbleParams, x: np.ndarray) -> np.longdouble:
    """Bubble value in extended precision (for finite-difference checks)."""
    ld = np.longdouble
    a, d = ld(params.alpha), ld(params.delta)
    dx = ld(x[0]) - ld(params.xi[0])
    dy = ld(x[1]) - ld(params.xi[1])
    r = np.sqrt(dx * dx + dy * dy)
    return np.log(2 * a * a) + a * np.log(d) - 2 * np.log(d**a + r**a)


def bubble_liouville_residual(params: BubbleParams, x) -> float:
    """-Dw - |x-xi|^(a-2) e^w by fourth-order central differences.

    The stencil step min(1e-5, r/100) makes double precision cancellation
    the dominant error, so the difference quotient runs in long double.
    """
    x = np.asarray(x, dtype=float)
    r = float(np.hypot(x[0] - params.xi[0], x[1] - params.xi[1]))
    h = np.longdouble(min(1e-5, r / 100.0))
    stencil = ((-1.0, 2.0), (16.0, 1.0), (-30.0, 0.0), (16.0, -1.0), (-1.0, -2.0))
    lap = np.longdouble(0.0)
    for dim in range(2):
        e = np.zeros(2)
        e[dim] = 1.0
        acc = np.longdouble(0.0)
        for c, m in stencil:
            acc += np.longdouble(c) * _bubble_extended(params, x + float(m * h) * e)
        lap += acc / (12 * h * h)
    return float(-lap) - float(bubble_source(params, x))


# ---------------------------------------------------------------------------
# projection onto the pierced domain
# ---------------------------------------------------------------------------

def project_bubble(mesh: TriMesh, params: BubbleParams,
                   symmetrized: Optional[bool] = None) -> ScalarField:
    """P w = w - h, with h the harmonic field carrying w's boundary trace.

    The boundary data is the exact bubble, so the projected field vanishes
    at boundary nodes exactly.  In symmetric mode the result is group
    averaged, which removes the last-bit asymmetry of the sparse solve.
    """
    spec = mesh.spec
    if spec is not None:
        if abs(spec.hole_radius - params.epsilon) > 1e-12 * params.epsilon:
            raise ValueError("mesh hole radius does not match params.epsilon")
        if np.hypot(spec.xi[0] - params.xi[0], spec.xi[1] - params.xi[1]) \
                > 1e-12 * max(1.0, spec.diameter):
            raise ValueError("mesh hole center does not match params.xi")

    def trace(pts):
        return bubble(params, pts)

    solver = dirichlet_solver(mesh, constrained_tags=(OUTER, HOLE))
    h = solver.solve(rhs=None, boundary={OUTER: trace, HOLE: trace})
    w_nodal = bubble(params, mesh.vertices)
    pw = ScalarField(mesh, w_nodal - h.values, zero_tags=(OUTER, HOLE))
    if symmetrized is None:
        symmetrized = params.symmetric_mode and mesh.symmetry is not None
    if symmetrized:
        pw = ScalarField(mesh, symmetrize(pw).values, zero_tags=(OUTER, HOLE))
    return pw


def projection_expansion(params: BubbleParams, green_at, robin_field_at, x) -> np.ndarray:
    """Predicted P w from the maximum-principle expansion.

    ``green_at`` and ``robin_field_at`` evaluate G(x, xi) and H(x, xi); the
    prediction is w - ln(2 a^2 d^a) + 4 pi a H(x, xi) - gamma G(x, xi).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    a, d = params.alpha, params.delta
    w = bubble(params, x)
    return (w - np.log(2.0 * a * a * d**a)
            + FOUR_PI * a * np.atleast_1d(robin_field_at(x))
            - params.gamma * np.atleast_1d(green_at(x)))
