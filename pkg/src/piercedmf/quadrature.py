"""Symmetric Gaussian quadrature on the reference triangle.

Rules follow Dunavant's tables for polynomial degrees 1 through 7.  Points
are stored in barycentric coordinates and weights are normalized to sum to
one, so that the integral over a physical triangle T is
``area(T) * sum(w_q * f(x_q))``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["rule", "MAX_ORDER", "physical_points"]

MAX_ORDER = 7


def _orbit3(a: float, b: float) -> np.ndarray:
    return np.array([[a, b, b], [b, a, b], [b, b, a]])


def _orbit6(a: float, b: float, c: float) -> np.ndarray:
    return np.array(
        [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
    )


def _build_rules():
    third = 1.0 / 3.0
    rules = {}

    rules[1] = (np.array([[third, third, third]]), np.array([1.0]))

    rules[2] = (_orbit3(2.0 / 3.0, 1.0 / 6.0), np.full(3, third))

    pts = np.vstack([np.array([[third, third, third]]), _orbit3(0.6, 0.2)])
    w = np.concatenate([[-27.0 / 48.0], np.full(3, 25.0 / 48.0)])
    rules[3] = (pts, w)

    pts = np.vstack(
        [
            _orbit3(0.108103018168070, 0.445948490915965),
            _orbit3(0.816847572980459, 0.091576213509771),
        ]
    )
    w = np.concatenate(
        [np.full(3, 0.223381589678011), np.full(3, 0.109951743655322)]
    )
    rules[4] = (pts, w)

    pts = np.vstack(
        [
            np.array([[third, third, third]]),
            _orbit3(0.059715871789770, 0.470142064105115),
            _orbit3(0.797426985353087, 0.101286507323456),
        ]
    )
    w = np.concatenate(
        [[0.225], np.full(3, 0.132394152788506), np.full(3, 0.125939180544827)]
    )
    rules[5] = (pts, w)

    pts = np.vstack(
        [
            _orbit3(0.501426509658179, 0.249286745170910),
            _orbit3(0.873821971016996, 0.063089014491502),
            _orbit6(0.053145049844816, 0.310352451033785, 0.636502499121399),
        ]
    )
    w = np.concatenate(
        [
            np.full(3, 0.116786275726379),
            np.full(3, 0.050844906370207),
            np.full(6, 0.082851075618374),
        ]
    )
    rules[6] = (pts, w)

    pts = np.vstack(
        [
            np.array([[third, third, third]]),
            _orbit3(0.479308067841923, 0.260345966079038),
            _orbit3(0.869739794195568, 0.065130102902216),
            _orbit6(0.048690315425316, 0.312865496004875, 0.638444188569809),
        ]
    )
    w = np.concatenate(
        [
            [-0.149570044467670],
            np.full(3, 0.175615257433204),
            np.full(3, 0.053347235608839),
            np.full(6, 0.077113760890257),
        ]
    )
    rules[7] = (pts, w)
    return rules


_RULES = _build_rules()


def rule(order: int):
    """Barycentric points (n,3) and weights (n,) exact for degree <= order."""
    if not (1 <= int(order) <= MAX_ORDER):
        raise ValueError(f"quadrature order must be in 1..{MAX_ORDER}, got {order}")
    return _RULES[int(order)]


def physical_points(bary: np.ndarray, tri_coords: np.ndarray) -> np.ndarray:
    """Map barycentric points into each triangle.

    tri_coords has shape (ntri, 3, 2); returns (ntri, nq, 2).
    """
    return np.einsum("qk,tkj->tqj", bary, tri_coords)
