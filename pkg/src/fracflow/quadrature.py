"""Exact cell integrals of the singular kernel |x - y|^(-1 - 2 sigma).

All operator rows and discrete seminorms are built from :func:`cell_weight`.
Pair weights follow the principal-value convention: the own-cell term is
dropped, and the weight of a pair (i, j) is the symmetrized double-integral
weight ``h * (w(x_i, cell_j) + w(x_j, cell_i)) / 2``.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import toeplitz

from .errors import QuadratureDomainError, SingularEndpointError, ValidationError


def check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not 0.0 < sigma < 1.0:
        raise ValidationError(f"kernel exponent must lie in (0,1), got {sigma!r}")
    return sigma


def _one_sided(near, width, sigma):
    # (near^-2s - (near+width)^-2s) / 2s, written to avoid cancellation for far cells
    return -np.power(near, -2.0 * sigma) * np.expm1(-2.0 * sigma * np.log1p(width / near)) / (2.0 * sigma)


def cell_weight(x: float, a: float, b: float, sigma: float) -> float:
    """Integral of |x - y|^(-1-2 sigma) over y in [a, b], for x outside (a, b)."""
    sigma = check_sigma(sigma)
    if not a < b:
        raise ValidationError(f"cell must satisfy a < b, got [{a}, {b}]")
    if x == a or x == b:
        raise SingularEndpointError(f"x={x} is an endpoint of [{a}, {b}]; the integral diverges")
    if a < x < b:
        raise QuadratureDomainError(f"x={x} lies inside ({a}, {b}); use the principal-value path")
    if x < a:
        return float(_one_sided(a - x, b - a, sigma))
    return float(_one_sided(x - b, b - a, sigma))


def distance_weights(n: int, h: float, sigma: float) -> np.ndarray:
    """w[k] = integral of the kernel over a cell whose center is k*h from x, w[0] = 0."""
    sigma = check_sigma(sigma)
    k = np.arange(1, n, dtype=float)
    w = np.zeros(n)
    w[1:] = _one_sided((k - 0.5) * h, h, sigma)
    return w


def pair_weight_matrix(grid, sigma: float) -> np.ndarray:
    """Symmetric pair weights W_ij = h * w(x_i, cell_j) on a uniform grid, zero diagonal.

    On a uniform grid w(x_i, cell_j) == w(x_j, cell_i) depends only on |i - j|,
    so the symmetrized weight is the Toeplitz matrix of the distance weights.
    """
    return grid.h * toeplitz(distance_weights(grid.n, grid.h, sigma))


def far_field_tail(grid, sigma: float, left: bool = True, right: bool = True) -> np.ndarray:
    """Kernel mass beyond the window, int_{|y| > L} |x_i - y|^(-1-2 sigma) dy, per cell."""
    sigma = check_sigma(sigma)
    L = grid.truncation_radius
    x = grid.cell_centers
    out = np.zeros(grid.n)
    if right:
        out += np.power(L - x, -2.0 * sigma) / (2.0 * sigma)
    if left:
        out += np.power(L + x, -2.0 * sigma) / (2.0 * sigma)
    return out


def gagliardo_seminorm_sq(f, sigma: float, mask, grid, weights=None, far_field: bool = False) -> float:
    """Discrete [f]^2_{sigma, mask}: sum over masked pairs i != j of (f_i - f_j)^2 W_ij.

    Only rows where f is nonzero are visited, so compactly supported f costs
    O(|supp f| * |mask|).  With ``far_field`` the masked set is continued past
    the window edges it touches, with f = 0 there.
    """
    f = np.asarray(f, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if f.shape != (grid.n,) or mask.shape != (grid.n,):
        raise ValidationError("f and mask must be defined on every grid cell")
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        warnings.warn("empty mask: seminorm is zero", RuntimeWarning, stacklevel=2)
        return 0.0
    sigma = check_sigma(sigma)
    dist = None if weights is not None else grid.h * distance_weights(grid.n, grid.h, sigma)
    fm = f[idx]
    support = np.flatnonzero(fm != 0.0)
    outside = np.ones(idx.size, dtype=bool)
    outside[support] = False
    total = 0.0
    # rows ascending, columns ascending within a row: fixed order, bitwise reproducible
    for a in support:
        row = weights[idx[a], idx] if weights is not None else dist[np.abs(idx - idx[a])]
        d = fm[a] - fm
        total += float(np.dot(row, d * d))
        total += fm[a] * fm[a] * float(np.sum(row[outside]))
    if far_field:
        tail = far_field_tail(grid, sigma, left=bool(mask[0]), right=bool(mask[-1]))
        fs = fm[support]
        total += 2.0 * grid.h * float(np.dot(fs * fs, tail[idx[support]]))
    return total
