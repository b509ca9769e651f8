"""Annealer sizing and term statistics for symmetry-detecting QUBOs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .qubo import QuboModel

# fitted exponents and slope reported for MIPLIB 2017, kept for comparison only
REFERENCE_FITS = {"nu_vs_n": 1.764, "mu_vs_m": 1.834, "qubits_per_term": 0.324}


@dataclass(frozen=True)
class ZephyrEstimate:
    q: int
    g: int
    qubit_bound: int
    zephyr_total: int


def zephyr_estimate(q: int) -> ZephyrEstimate:
    """Smallest Zephyr grid (tile 4) holding a clique embedding of ``q`` variables.

    A ``Z_g`` graph has ``32 g^2 + 16 g`` qubits and embeds the complete graph
    on ``16 g - 8`` vertices, so ``g = ceil((q + 8) / 16)``; the qubit bound
    ``(q + 8)^2 / 8 + q + 8`` is rounded up.
    """
    q = int(q)
    if q < 1:
        raise ValueError(f"q must be at least 1, got {q}")
    g = -(-(q + 8) // 16)
    bound = Fraction((q + 8) ** 2, 8) + (q + 8)
    return ZephyrEstimate(q=q, g=g, qubit_bound=math.ceil(bound), zephyr_total=32 * g * g + 16 * g)


def count_terms(model: QuboModel) -> tuple[int, int, int]:
    """Stored nonzero linear and quadratic coefficients; the offset is not a term."""
    n_lin = sum(1 for v in model.linear.values() if v != 0)
    n_quad = sum(1 for v in model.quadratic.values() if v != 0)
    return n_lin, n_quad, n_lin + n_quad


def power_fit(points: Iterable[tuple[float, float]]) -> float:
    """Exponent ``k`` of ``y = x**k``, least squares in log space through the origin."""
    pts = list(points)
    if not pts:
        raise ValueError("power_fit needs at least one point")
    num = den = 0.0
    for x, y in pts:
        if not (x > 0 and y > 0):
            raise ValueError(f"power_fit needs positive coordinates, got ({x}, {y})")
        lx = math.log(x)
        num += lx * math.log(y)
        den += lx * lx
    if den == 0:
        raise ValueError("power_fit needs at least one x different from 1")
    return num / den


def linear_fit_origin(points: Iterable[tuple[float, float]]) -> float:
    """Slope ``a`` of ``y = a x`` by least squares."""
    pts = list(points)
    if not pts:
        raise ValueError("linear_fit_origin needs at least one point")
    den = sum(x * x for x, _ in pts)
    if den == 0:
        raise ValueError("linear_fit_origin needs a nonzero x")
    return sum(x * y for x, y in pts) / den
