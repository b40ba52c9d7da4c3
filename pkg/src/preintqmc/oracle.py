"""Independent brute-force references used by the test suite.

Tensor-product Gauss-Hermite quadrature (probabilists' normalization, so
weights integrate against the standard normal density and sum to one) and
central finite differences.  Nodes come from a Golub-Welsch eigen-solve of
the Jacobi matrix of the Hermite recurrence; no tabulated values.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import ConfigError

__all__ = ["gauss_hermite", "gh_integrate", "fd_derivative"]


def gauss_hermite(n: int):
    """Nodes and weights for E[f(Y)], Y ~ N(0,1), exact for degree 2n-1.

    The monic recurrence He_{k+1}(x) = x He_k(x) - k He_{k-1}(x) gives a
    Jacobi matrix with zero diagonal and off-diagonals sqrt(k).
    """
    if n < 1:
        raise ConfigError("need at least one quadrature node")
    if n == 1:
        return np.zeros(1), np.ones(1)
    off = np.sqrt(np.arange(1, n, dtype=float))
    vals, vecs = scipy.linalg.eigh_tridiagonal(np.zeros(n), off)
    weights = vecs[0] ** 2  # total mass of the normal density is 1
    # symmetrize so that odd moments cancel exactly in floating point
    vals = 0.5 * (vals - vals[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return vals, weights


def gh_integrate(f, k: int, n: int) -> float:
    """Tensor-product quadrature of f over R^k against the product normal
    density.  f maps an (npts, k) array to (npts,) values."""
    if k < 1 or k > 4:
        raise ConfigError("tensor quadrature supports 1 <= k <= 4 dimensions")
    if n > 64:
        raise ConfigError("at most 64 nodes per dimension")
    x, w = gauss_hermite(n)
    grids = np.meshgrid(*([x] * k), indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    wgrids = np.meshgrid(*([w] * k), indexing="ij")
    wts = np.prod(np.column_stack([g.ravel() for g in wgrids]), axis=1)
    vals = np.asarray(f(pts), dtype=float)
    return float(wts @ vals)


def fd_derivative(f, point, direction: int, order: int = 1, h: float = 1e-4) -> float:
    """Central finite difference of f at a point along one coordinate."""
    x = np.asarray(point, dtype=float).copy()
    e = np.zeros_like(x)
    e[direction] = 1.0
    if order == 1:
        return (f(x + h * e) - f(x - h * e)) / (2 * h)
    if order == 2:
        return (f(x + h * e) - 2 * f(x) + f(x - h * e)) / h ** 2
    raise ConfigError("order must be 1 or 2")
