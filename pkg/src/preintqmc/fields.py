"""Deterministic expansions of the random source term and diffusion coefficient.

The elliptic problem ``-div(a grad u) = l`` on the unit interval (d=1) or
unit square (d=2) carries its randomness through finite expansions

    l(x, w) = lbar(x) + sum_{i=0}^{s} w_i ell_i(x),      w_i ~ N(0, 1),
    a(x, z) = exp( sum_{j=1}^{s} z_j a_j(x) ),           z_j ~ N(0, 1).

``ell_0`` must be strictly positive on the domain; this makes the quantity
of interest strictly increasing in w_0, which the preintegration step
relies on.

The built-in sine family ("paper-sine") uses lbar = ell_0 = 1 and

    d = 2:  ell_i(x) = sin(i pi x1) sin((i+1) pi x2) / (1 + (i pi)^theta)
            a_j(x)   = alpha sin(j pi x1) sin((j+1) pi x2) / (1 + (j pi)^theta)
    d = 1:  ell_i(x) = sin(i pi x) / (1 + (i pi)^theta)
            a_j(x)   = alpha sin(j pi x) / (1 + (j pi)^theta)

Alongside the basis functions we keep the norms that the error-constant
calculators need:

    b_j    = sup |a_j|
    bhat_j = max(sup |a_j|, sup |grad a_j|)          (W^{1,inf} norm)
    c_i    = dual norm of ell_i over H^1_0(D)
    cbar   = dual norm of lbar
    ell0_inf = inf ell_0 > 0

For the sine family the dual norms are analytic: each ell_i (i >= 1) is a
Dirichlet-Laplacian eigenfunction with eigenvalue lambda_i, and then
``||ell_i||_{H^-1} = ||ell_i||_{L2} / sqrt(lambda_i)``.  The dual norm of
the constant source 1 is sqrt(1/12) on the interval, and on the square it
is evaluated from the double sine series of the solution of -lap v = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError

__all__ = [
    "FieldExpansion",
    "make_sine_family",
    "make_tabulated_family",
    "evaluate_source",
    "evaluate_coefficient",
    "dual_norm",
    "unit_source_dual_norm",
]


@dataclass(frozen=True)
class FieldExpansion:
    """Immutable bundle of basis functions and their norms.

    Basis callables accept an (n, d) array of points and return an (n,)
    array of values; they are safe to evaluate concurrently.
    """

    dimension: int
    s: int
    alpha: float
    theta: float
    lbar: Callable[[np.ndarray], np.ndarray]
    ell: tuple  # length s+1, ell[0] strictly positive on D
    a_basis: tuple  # length s
    b: np.ndarray  # (s,)   sup norms of a_j
    b_hat: np.ndarray  # (s,) W^{1,inf} norms of a_j
    c: np.ndarray  # (s+1,) dual norms of ell_0..ell_s
    c_bar: float
    ell0_inf: float
    family: str = "paper-sine"
    mesh: object = None  # set for tabulated families (nodal data lives on it)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ConfigError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.s < 0:
            raise ConfigError("s must be >= 0")
        if len(self.ell) != self.s + 1:
            raise ConfigError("need s+1 source basis functions ell_0..ell_s")
        if len(self.a_basis) != self.s:
            raise ConfigError("need s coefficient basis functions a_1..a_s")
        if not self.ell0_inf > 0:
            raise ConfigError("inf of ell_0 must be strictly positive")
        if np.any(np.asarray(self.b) > np.asarray(self.b_hat) * (1 + 1e-12)):
            raise ConfigError("b_j <= bhat_j violated")
        self.b.setflags(write=False)
        self.b_hat.setflags(write=False)
        self.c.setflags(write=False)

    @property
    def n_parameters(self) -> int:
        """Total count of random parameters: w_0..w_s plus z_1..z_s."""
        return 2 * self.s + 1


def _as_points(x, d: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.shape[-1] != d:
        if d == 1 and pts.shape[0] == 1:  # accept flat arrays for d=1
            pts = pts.reshape(-1, 1)
        else:
            raise ConfigError(f"points must have {d} coordinates")
    return pts


def _sine_ell(i: int, theta: float, d: int):
    scale = 1.0 / (1.0 + (i * math.pi) ** theta)
    if d == 1:
        def f(x, i=i, scale=scale):
            pts = _as_points(x, 1)
            return scale * np.sin(i * math.pi * pts[:, 0])
    else:
        def f(x, i=i, scale=scale):
            pts = _as_points(x, 2)
            return scale * np.sin(i * math.pi * pts[:, 0]) * np.sin((i + 1) * math.pi * pts[:, 1])
    return f


def _sine_a(j: int, alpha: float, theta: float, d: int):
    scale = alpha / (1.0 + (j * math.pi) ** theta)
    if d == 1:
        def f(x, j=j, scale=scale):
            pts = _as_points(x, 1)
            return scale * np.sin(j * math.pi * pts[:, 0])
    else:
        def f(x, j=j, scale=scale):
            pts = _as_points(x, 2)
            return scale * np.sin(j * math.pi * pts[:, 0]) * np.sin((j + 1) * math.pi * pts[:, 1])
    return f


def _const_one(d: int):
    def f(x):
        pts = _as_points(x, d)
        return np.ones(pts.shape[0])
    return f


def unit_source_dual_norm(d: int) -> float:
    """Dual norm over H^1_0 of the constant source 1.

    d=1: -v'' = 1 gives v = x(1-x)/2 and ||v'||_{L2}^2 = 1/12.
    d=2: with -lap v = 1 on the unit square, ||v||_V^2 = <1, v> =
    sum over odd (m, n) of 64 / (pi^6 m^2 n^2 (m^2 + n^2)).
    """
    if d == 1:
        return math.sqrt(1.0 / 12.0)
    odd = np.arange(1, 1202, 2, dtype=float)
    m, n = np.meshgrid(odd, odd, indexing="ij")
    total = np.sum(64.0 / (math.pi ** 6 * m ** 2 * n ** 2 * (m ** 2 + n ** 2)))
    return math.sqrt(total)


def _sine_dual_norm(i: int, theta: float, d: int) -> float:
    # ell_i is an eigenfunction: c_i = ||ell_i||_{L2} / sqrt(lambda_i)
    scale = 1.0 / (1.0 + (i * math.pi) ** theta)
    if d == 1:
        l2 = scale / math.sqrt(2.0)
        lam = (i * math.pi) ** 2
    else:
        l2 = scale / 2.0
        lam = math.pi ** 2 * (i ** 2 + (i + 1) ** 2)
    return l2 / math.sqrt(lam)


def make_sine_family(d: int, s: int, alpha: float, theta: float) -> FieldExpansion:
    """Build the built-in sine family on the unit interval or unit square."""
    if d not in (1, 2):
        raise ConfigError(f"dimension must be 1 or 2, got {d}")
    if s < 0 or alpha <= 0 or theta <= 0:
        raise ConfigError("require s >= 0, alpha > 0, theta > 0")

    ell = [_const_one(d)] + [_sine_ell(i, theta, d) for i in range(1, s + 1)]
    a_basis = [_sine_a(j, alpha, theta, d) for j in range(1, s + 1)]

    j = np.arange(1, s + 1, dtype=float)
    b = alpha / (1.0 + (j * math.pi) ** theta)
    if d == 1:
        grad_sup = alpha * j * math.pi / (1.0 + (j * math.pi) ** theta)
    else:
        grad_sup = alpha * (j + 1) * math.pi / (1.0 + (j * math.pi) ** theta)
    b_hat = np.maximum(b, grad_sup)

    c0 = unit_source_dual_norm(d)
    c = np.array([c0] + [_sine_dual_norm(i, theta, d) for i in range(1, s + 1)])

    return FieldExpansion(
        dimension=d,
        s=s,
        alpha=float(alpha),
        theta=float(theta),
        lbar=_const_one(d),
        ell=tuple(ell),
        a_basis=tuple(a_basis),
        b=b,
        b_hat=b_hat,
        c=c,
        c_bar=c0,
        ell0_inf=1.0,
        family="paper-sine",
    )


def make_tabulated_family(mesh, lbar_nodal, ell_nodal, a_nodal,
                          alpha: float = 1.0, theta: float = 1.0) -> FieldExpansion:
    """Build a field expansion from nodal values on a mesh.

    Basis functions are the piecewise-linear interpolants of the given
    nodal tables; all norms are computed numerically (sup norms from
    nodal/element data, dual norms from a unit-coefficient solve).
    """
    from . import fem  # deferred: fem imports this module for typing

    lbar_nodal = np.asarray(lbar_nodal, dtype=float)
    ell_nodal = np.atleast_2d(np.asarray(ell_nodal, dtype=float))
    a_nodal = np.asarray(a_nodal, dtype=float)
    a_nodal = a_nodal.reshape(0, mesh.nodes.shape[0]) if a_nodal.size == 0 else np.atleast_2d(a_nodal)
    s = a_nodal.shape[0]
    if ell_nodal.shape[0] != s + 1:
        raise ConfigError("tabulated family needs s+1 source tables and s coefficient tables")

    ell0_inf = float(ell_nodal[0].min())
    if ell0_inf <= 0:
        raise ConfigError("tabulated ell_0 must be strictly positive at every node")

    def interp(table):
        def f(x, table=table):
            return fem.interpolate(mesh, table, _as_points(x, mesh.dimension))
        return f

    b = np.array([np.abs(row).max() for row in a_nodal])
    b_hat = np.array([
        max(np.abs(row).max(),
            np.linalg.norm(fem.gradient_per_element(mesh, row), axis=1).max())
        for row in a_nodal
    ]) if s else np.zeros(0)
    b_hat = np.maximum(b, b_hat) if s else b_hat

    c = np.array([fem.dual_norm_numeric(mesh, row) for row in ell_nodal])
    c_bar = fem.dual_norm_numeric(mesh, lbar_nodal)

    return FieldExpansion(
        dimension=mesh.dimension,
        s=s,
        alpha=float(alpha),
        theta=float(theta),
        lbar=interp(lbar_nodal),
        ell=tuple(interp(row) for row in ell_nodal),
        a_basis=tuple(interp(row) for row in a_nodal),
        b=b,
        b_hat=b_hat,
        c=c,
        c_bar=float(c_bar),
        ell0_inf=ell0_inf,
        family="tabulated",
        mesh=mesh,
    )


def evaluate_source(fe: FieldExpansion, x, w) -> np.ndarray:
    """l(x, w) = lbar(x) + sum_i w_i ell_i(x) for w = (w_0, ..., w_s)."""
    w = np.asarray(w, dtype=float)
    if w.shape != (fe.s + 1,):
        raise ConfigError(f"w must have length s+1 = {fe.s + 1}, got {w.shape}")
    pts = _as_points(x, fe.dimension)
    out = fe.lbar(pts).copy()
    for wi, elli in zip(w, fe.ell):
        if wi != 0.0:
            out += wi * elli(pts)
    return out if out.size > 1 else float(out[0])


def evaluate_coefficient(fe: FieldExpansion, x, z) -> np.ndarray:
    """a(x, z) = exp(sum_j z_j a_j(x)); strictly positive."""
    z = np.asarray(z, dtype=float)
    if z.shape != (fe.s,):
        raise ConfigError(f"z must have length s = {fe.s}, got {z.shape}")
    pts = _as_points(x, fe.dimension)
    acc = np.zeros(pts.shape[0])
    for zj, aj in zip(z, fe.a_basis):
        if zj != 0.0:
            acc += zj * aj(pts)
    out = np.exp(acc)
    return out if out.size > 1 else float(out[0])


def dual_norm(fe: FieldExpansion, which) -> float:
    """Dual norm over H^1_0 of a source basis function.

    ``which`` is a source index (0..s) or the string "mean" for lbar.
    Analytic for the sine family, numeric (unit-coefficient solve on the
    attached mesh) for tabulated families.
    """
    if which == "mean":
        return fe.c_bar
    i = int(which)
    if not 0 <= i <= fe.s:
        raise ConfigError(f"source index out of range: {which}")
    return float(fe.c[i])
