"""Making a family of message vectors pairwise non-orthogonal."""

from __future__ import annotations

import math

import numpy as np


class NonOrthogonalizationError(ArithmeticError):
    pass


def perturbation_distance(delta: float) -> float:
    """Norm of ``(v, 0) - (sqrt(1 - delta^2) v, delta)`` for a unit vector ``v``."""
    return math.sqrt(2.0 - 2.0 * math.sqrt(1.0 - delta * delta))


def nonorthogonalize(vectors, eps: float, floor: float = 1e-10, max_halvings: int = 64) -> tuple[list[np.ndarray], float]:
    """Append an extra coordinate ``delta`` so that no two vectors are orthogonal.

    Returns ``(sqrt(1 - delta^2) v_i (+) delta)`` for each ``v_i`` and the chosen
    ``delta``.  The search starts at ``min(eps / 2, 0.1)`` and halves until every
    overlap ``delta^2 + (1 - delta^2) <v_i|v_j>`` exceeds ``floor`` in magnitude.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    vs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
    for v in vs:
        if abs(np.vdot(v, v).real - 1.0) > 1e-9:
            raise ValueError("input vectors must have unit norm")
    gram = np.array([[np.vdot(a, b) for b in vs] for a in vs]) if vs else np.zeros((0, 0))
    delta = min(eps / 2.0, 0.1)
    for _ in range(max_halvings + 1):
        overlaps = delta**2 + (1.0 - delta**2) * gram
        if (not vs or np.abs(overlaps).min() > floor) and perturbation_distance(delta) <= eps:
            scale = math.sqrt(1.0 - delta**2)
            return [np.append(scale * v, delta) for v in vs], delta
        delta /= 2.0
    raise NonOrthogonalizationError("no admissible delta found")
