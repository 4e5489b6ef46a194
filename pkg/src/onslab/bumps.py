"""Smooth cutoff functions and the dyadic partition built from them.

One fixed bump is used everywhere: chi(u) = 1 for |u| <= 1/2, 0 for
|u| >= 1, and exp(1 - 1/(1 - w^2)) with w = 2|u| - 1 on the transition.
The dyadic pieces are chi_0 = chi(./2) - chi and chi_j = chi_0(2^-j .),
so chi_j is supported in (2^(j-1), 2^(j+1)) and the family sums to 1
away from the origin.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "smooth_bump",
    "bump_outer",
    "chi0",
    "dyadic_pieces",
    "dyadic_partial_sum",
    "low_pass",
]


def smooth_bump(u):
    """chi(u): plateau on |u| <= 1/2, support in (-1, 1)."""
    u = np.abs(np.asarray(u, dtype=float))
    out = np.zeros_like(u)
    out[u <= 0.5] = 1.0
    mid = (u > 0.5) & (u < 1.0)
    w = 2.0 * u[mid] - 1.0
    out[mid] = np.exp(1.0 - 1.0 / (1.0 - w * w))
    return out


def bump_outer(u):
    """chi_inf(u) = 1 - chi(u); vanishes on |u| <= 1/2, equals 1 for |u| >= 1."""
    return 1.0 - smooth_bump(u)


def chi0(u):
    """chi_0 = chi(./2) - chi, supported in 1/2 < |u| < 2."""
    u = np.asarray(u, dtype=float)
    return smooth_bump(0.5 * u) - smooth_bump(u)


def dyadic_pieces(j):
    """Return the callable chi_j = chi_0(2^-j .)."""
    s = 2.0 ** (-j)

    def chi_j(u):
        return chi0(s * np.asarray(u, dtype=float))

    return chi_j


def dyadic_partial_sum(u, j_min, j_max):
    """sum_{j=j_min}^{j_max} chi_j(u); telescopes to chi(2^-(j_max+1) u) - chi(2^-j_min u)."""
    u = np.asarray(u, dtype=float)
    total = np.zeros_like(u, dtype=float)
    for j in range(j_min, j_max + 1):
        total += chi0(2.0 ** (-j) * u)
    return total


def low_pass(u, j):
    """chi(2^-(j+1) u) = sum_{k <= j} chi_k(u); the low-frequency completion."""
    return smooth_bump(2.0 ** (-(j + 1)) * np.asarray(u, dtype=float))
