"""Piecewise-linear finite elements on the unit interval and unit square.

Meshes are uniform: intervals of width h = 2^-m in 1D, and in 2D a square
grid whose cells are split along the (+1,+1) diagonal into two right
triangles.  Homogeneous Dirichlet data is imposed by eliminating boundary
nodes, so assembled systems act on interior nodes only.

Assembly uses a one-point (midpoint / centroid) quadrature rule per
element for both the coefficient and the source, consistent with P1
accuracy.  For a fixed mesh/field pair an :class:`Assembler` precomputes
the element geometry, the coefficient basis at element centroids and a
sparse "scatter" operator so that re-assembling the stiffness matrix for
a new parameter vector z reduces to one exp() and one sparse
matrix-vector product.

Solves reuse a single factorization across all right-hand sides: sparse
LU in 2D, a symmetric banded solve in 1D.  A Jacobi-preconditioned
conjugate-gradient fallback is available (``solver="cg"``); either way
the relative residual of every solution is verified.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CoefficientOverflowError, ConfigError, SolverError
from .fields import FieldExpansion

__all__ = [
    "Mesh",
    "make_mesh",
    "Assembler",
    "FemSystem",
    "assemble",
    "point_functional",
    "PointFunctional",
    "interpolate",
    "gradient_per_element",
    "dual_norm_numeric",
]


@dataclass(frozen=True)
class Mesh:
    dimension: int
    m: int  # mesh width h = 2^-m
    h: float
    nodes: np.ndarray  # (n_nodes, d)
    elements: np.ndarray  # (n_el, d+1) vertex indices
    interior_mask: np.ndarray  # (n_nodes,) bool
    interior_index: np.ndarray  # (n_nodes,) position among interior nodes, -1 on boundary
    volumes: np.ndarray  # (n_el,)
    centroids: np.ndarray  # (n_el, d)
    grads: np.ndarray  # (n_el, d+1, d) gradients of the vertex hat functions

    @property
    def n_interior(self) -> int:
        return int(self.interior_mask.sum())


def make_mesh(dimension: int, m: int) -> Mesh:
    if dimension not in (1, 2):
        raise ConfigError(f"dimension must be 1 or 2, got {dimension}")
    if m < 1:
        raise ConfigError("mesh exponent m must be >= 1")
    n = 2 ** m
    h = 1.0 / n
    if dimension == 1:
        nodes = (np.arange(n + 1, dtype=float) * h)[:, None]
        elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
        interior = np.ones(n + 1, dtype=bool)
        interior[0] = interior[-1] = False
        volumes = np.full(n, h)
        centroids = nodes[elements].mean(axis=1)
        grads = np.empty((n, 2, 1))
        grads[:, 0, 0] = -1.0 / h
        grads[:, 1, 0] = 1.0 / h
    else:
        xs = np.arange(n + 1, dtype=float) * h
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        nodes = np.column_stack([X.ravel(), Y.ravel()])

        def nid(i, j):
            return i * (n + 1) + j

        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        a = nid(i, j).ravel()
        b = nid(i + 1, j).ravel()
        c = nid(i + 1, j + 1).ravel()
        d = nid(i, j + 1).ravel()
        lower = np.column_stack([a, b, c])  # right angle at b
        upper = np.column_stack([a, c, d])  # right angle at d
        elements = np.vstack([lower, upper])

        interior = np.ones(nodes.shape[0], dtype=bool)
        ij = np.stack([(np.arange(nodes.shape[0]) // (n + 1)),
                       (np.arange(nodes.shape[0]) % (n + 1))])
        interior &= (ij[0] > 0) & (ij[0] < n) & (ij[1] > 0) & (ij[1] < n)

        p = nodes[elements]  # (n_el, 3, 2)
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        twice_area = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        volumes = 0.5 * np.abs(twice_area)
        centroids = p.mean(axis=1)
        grads = np.empty((elements.shape[0], 3, 2))
        grads[:, 0, 0] = (p[:, 1, 1] - p[:, 2, 1]) / twice_area
        grads[:, 0, 1] = (p[:, 2, 0] - p[:, 1, 0]) / twice_area
        grads[:, 1, 0] = (p[:, 2, 1] - p[:, 0, 1]) / twice_area
        grads[:, 1, 1] = (p[:, 0, 0] - p[:, 2, 0]) / twice_area
        grads[:, 2, 0] = (p[:, 0, 1] - p[:, 1, 1]) / twice_area
        grads[:, 2, 1] = (p[:, 1, 0] - p[:, 0, 0]) / twice_area

    interior_index = np.full(nodes.shape[0], -1, dtype=np.int64)
    interior_index[interior] = np.arange(interior.sum())
    return Mesh(dimension, m, h, nodes, elements, interior, interior_index,
                volumes, centroids, grads)


class Assembler:
    """Reusable assembly machinery for one (mesh, field-expansion) pair.

    Precomputes, once:
      * per-element local stiffness blocks  S[e,i,j] = |T_e| grad_i . grad_j
      * a sparse scatter operator mapping element coefficient values to the
        data array of the interior stiffness matrix in CSR layout
      * the coefficient log-basis at element centroids
      * interior load vectors for lbar and every ell_i (centroid rule)
    """

    def __init__(self, mesh: Mesh, fe: FieldExpansion):
        if mesh.dimension != fe.dimension:
            raise ConfigError("mesh and field expansion dimensions differ")
        self.mesh = mesh
        self.fe = fe
        nv = mesh.elements.shape[1]
        local = mesh.volumes[:, None, None] * np.einsum(
            "eid,ejd->eij", mesh.grads, mesh.grads)

        n_el = mesh.elements.shape[0]
        n_int = mesh.n_interior
        rows = mesh.interior_index[mesh.elements][:, :, None]  # (n_el, nv, 1)
        cols = mesh.interior_index[mesh.elements][:, None, :]  # (n_el, 1, nv)
        rows = np.broadcast_to(rows, (n_el, nv, nv)).ravel()
        cols = np.broadcast_to(cols, (n_el, nv, nv)).ravel()
        elem = np.broadcast_to(np.arange(n_el)[:, None, None], (n_el, nv, nv)).ravel()
        vals = local.ravel()
        keep = (rows >= 0) & (cols >= 0)
        rows, cols, elem, vals = rows[keep], cols[keep], elem[keep], vals[keep]

        keys = rows * n_int + cols
        uniq, inverse = np.unique(keys, return_inverse=True)
        self._indices = (uniq % n_int).astype(np.int32)
        counts = np.bincount((uniq // n_int).astype(np.int64), minlength=n_int)
        self._indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
        self._scatter = sp.csr_matrix(
            (vals, (inverse, elem)), shape=(uniq.size, n_el))
        self._n_int = n_int

        # coefficient log-basis at centroids: a(c_e, z) = exp(Z @ z)
        if fe.s:
            self._logbasis = np.column_stack(
                [aj(mesh.centroids) for aj in fe.a_basis])
        else:
            self._logbasis = np.zeros((n_el, 0))

        # interior load vectors, one-point centroid rule
        w_nodes = mesh.volumes / nv
        lmap_rows = mesh.interior_index[mesh.elements].ravel()
        lmap_cols = np.repeat(np.arange(n_el), nv)
        lmap_vals = np.repeat(w_nodes, nv)
        keep = lmap_rows >= 0
        self._load_map = sp.csr_matrix(
            (lmap_vals[keep], (lmap_rows[keep], lmap_cols[keep])),
            shape=(n_int, n_el))
        src = np.column_stack(
            [fe.lbar(mesh.centroids)] + [elli(mesh.centroids) for elli in fe.ell])
        self.loads = self._load_map @ src  # (n_int, s+2); columns lbar, ell_0..ell_s

    def coefficient_at_centroids(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.fe.s,):
            raise ConfigError(f"z must have length s = {self.fe.s}")
        with np.errstate(over="ignore"):
            a = np.exp(self._logbasis @ z) if self.fe.s else np.ones(
                self._logbasis.shape[0])
        if not np.all(np.isfinite(a)):
            raise CoefficientOverflowError(
                f"coefficient overflowed for |z|_max = {np.abs(z).max():.3g}")
        return a

    def stiffness(self, z) -> sp.csr_matrix:
        data = self._scatter @ self.coefficient_at_centroids(z)
        return sp.csr_matrix((data, self._indices, self._indptr),
                             shape=(self._n_int, self._n_int))

    def load_for_source_values(self, values_at_centroids) -> np.ndarray:
        return self._load_map @ np.asarray(values_at_centroids, dtype=float)


class FemSystem:
    """Assembled interior stiffness matrix plus right-hand sides."""

    def __init__(self, A: sp.csr_matrix, loads: np.ndarray, mesh: Mesh,
                 solver: str = "direct", tol: float = 1e-10, maxit: int = 10_000):
        self.A = A
        self.loads = np.atleast_2d(np.asarray(loads, dtype=float).T).T
        self.mesh = mesh
        self.solver = solver
        self.tol = tol
        self.maxit = maxit
        self._factor = None

    @cached_property
    def _banded(self):
        # symmetric banded storage for the 1D tridiagonal case
        ab = np.zeros((2, self.A.shape[0]))
        ab[1] = self.A.diagonal()
        ab[0, 1:] = self.A.diagonal(1)
        return scipy.linalg.cholesky_banded(ab)

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self.solver == "cg":
            x = self._solve_cg(b)
        elif self.mesh.dimension == 1:
            x = scipy.linalg.cho_solve_banded((self._banded, False), b)
        else:
            if self._factor is None:
                self._factor = spla.splu(self.A.tocsc())
            x = self._factor.solve(b)
        self._check_residual(x, b)
        return x

    def solve_many(self) -> np.ndarray:
        """Solve for every stored load column with one factorization.

        Returns (n_interior, k); column order matches the load columns
        (lbar first, then ell_0..ell_s when assembled from an Assembler).
        """
        return self.solve(self.loads)

    def _solve_cg(self, b: np.ndarray) -> np.ndarray:
        diag = self.A.diagonal()
        M = spla.LinearOperator(self.A.shape, matvec=lambda v: v / diag)
        cols = b.reshape(b.shape[0], -1)
        out = np.empty_like(cols)
        for k in range(cols.shape[1]):
            x, info = spla.cg(self.A, cols[:, k], rtol=self.tol, atol=0.0,
                              maxiter=self.maxit, M=M)
            if info != 0:
                raise SolverError(f"CG failed with info={info} on column {k}")
            out[:, k] = x
        return out.reshape(b.shape)

    def _check_residual(self, x, b):
        r = self.A @ x - b
        scale = np.linalg.norm(b, axis=0) if b.ndim > 1 else np.linalg.norm(b)
        resid = np.linalg.norm(r, axis=0) if b.ndim > 1 else np.linalg.norm(r)
        bad = resid > self.tol * np.maximum(scale, 1e-300) + 1e-14
        if np.any(bad):
            raise SolverError(f"relative residual above {self.tol:g}")


def assemble(mesh: Mesh, fe: FieldExpansion, z, solver: str = "direct",
             tol: float = 1e-10, maxit: int = 10_000) -> FemSystem:
    """One-shot assembly of the interior system for parameter vector z.

    Convenience wrapper; hot loops should hold an :class:`Assembler` and
    build systems through it to amortize the precomputation.
    """
    asm = Assembler(mesh, fe)
    return FemSystem(asm.stiffness(z), asm.loads, mesh, solver, tol, maxit)


@dataclass(frozen=True)
class PointFunctional:
    """Barycentric interpolation weights representing point evaluation."""
    nodes: np.ndarray  # global node indices
    weights: np.ndarray

    def interior_vector(self, mesh: Mesh) -> np.ndarray:
        g = np.zeros(mesh.n_interior)
        for node, w in zip(self.nodes, self.weights):
            k = mesh.interior_index[node]
            if k >= 0:
                g[k] = g[k] + w
        return g


def point_functional(mesh: Mesh, x_star) -> PointFunctional:
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    if x_star.shape[0] != mesh.dimension:
        raise ConfigError("evaluation point has wrong dimension")
    if np.any(x_star < 0) or np.any(x_star > 1):
        raise ConfigError(f"evaluation point {x_star} outside the domain")
    n = 2 ** mesh.m
    h = mesh.h
    if mesh.dimension == 1:
        i = min(int(x_star[0] / h), n - 1)
        lam = (x_star[0] - i * h) / h
        return PointFunctional(np.array([i, i + 1]), np.array([1 - lam, lam]))

    i = min(int(x_star[0] / h), n - 1)
    j = min(int(x_star[1] / h), n - 1)
    u = (x_star[0] - i * h) / h
    v = (x_star[1] - j * h) / h

    def nid(ii, jj):
        return ii * (n + 1) + jj

    if v <= u:  # lower triangle (a, b, c)
        nodes = np.array([nid(i, j), nid(i + 1, j), nid(i + 1, j + 1)])
        weights = np.array([1 - u, u - v, v])
    else:  # upper triangle (a, c, d)
        nodes = np.array([nid(i, j), nid(i + 1, j + 1), nid(i, j + 1)])
        weights = np.array([1 - v, u, v - u])
    return PointFunctional(nodes, weights)


def interpolate(mesh: Mesh, nodal_values, points) -> np.ndarray:
    """Evaluate the P1 interpolant of nodal values at arbitrary points."""
    nodal = np.asarray(nodal_values, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty(pts.shape[0])
    for k, x in enumerate(pts):
        pf = point_functional(mesh, x)
        out[k] = float(nodal[pf.nodes] @ pf.weights)
    return out


def gradient_per_element(mesh: Mesh, nodal_values) -> np.ndarray:
    """Piecewise-constant gradient of a P1 function, per element."""
    nodal = np.asarray(nodal_values, dtype=float)
    return np.einsum("ev,evd->ed", nodal[mesh.elements], mesh.grads)


def dual_norm_numeric(mesh: Mesh, source_nodal) -> float:
    """H^-1 dual norm of a P1 source: sqrt(b^T A0^{-1} b) on interior nodes,
    with A0 the unit-coefficient stiffness matrix and b the centroid-rule
    load vector of the source."""
    from .fields import make_sine_family  # any fe with s=0 gives a == 1

    fe0 = make_sine_family(mesh.dimension, 0, 1.0, 1.0)
    asm = Assembler(mesh, fe0)
    source_c = np.asarray(source_nodal, dtype=float)[mesh.elements].mean(axis=1)
    b = asm.load_for_source_values(source_c)
    sys0 = FemSystem(asm.stiffness(np.zeros(0)), b, mesh)
    v = sys0.solve(b)
    return float(np.sqrt(b @ v))
