"""Quantity-of-interest decomposition and a-priori bounds.

Because the source is affine in w, the QoI splits as

    phi(w, z) = phibar(z) + sum_{i=0}^s w_i phi_i(z),

where phibar(z) = G(ubar(.,z)) and phi_i(z) = G(u_i(.,z)) come from s+2
solves of the same stiffness matrix (one factorization, many right-hand
sides).  phi_0(z) > 0 is the monotonicity condition that preintegration
needs; it is guaranteed for ell_0 > 0 by the weak maximum principle, and
an explicit lower bound phi_0(z) >= phi_0(0) / K0(z) is available with

    K0(z) = a_max(z) (1 + ||u_0(.,0)||_{W^{1,inf}} / inf(ell_0)
                          * sum_j |z_j| ||a_j||_{W^{1,inf}}).

The point-evaluation functional used as G is not in H^-1 for d=2, so all
constant calculators use a discrete surrogate for ||G||: the dual norm of
the interpolation-weight functional on the current mesh, sqrt(g^T A0^{-1} g).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import fem
from .errors import ConfigError, MonotonicityError
from .fields import FieldExpansion

__all__ = [
    "QoiComponents",
    "QoiProblem",
    "k0_bound",
    "derivative_bound",
]


@dataclass(frozen=True)
class QoiComponents:
    """Per-z values of the QoI decomposition plus coefficient-bound surrogates."""

    z: np.ndarray
    phibar: float
    phi: np.ndarray  # (s+1,), phi[0] = derivative w.r.t. the preintegration variable
    a_min_lb: float  # exp(-sum b_j |z_j|)
    a_max_ub: float  # exp(+sum b_j |z_j|)

    def value(self, w) -> float:
        """phi(w, z) for the full weight vector w = (w_0, ..., w_s)."""
        w = np.asarray(w, dtype=float)
        return float(self.phibar + w @ self.phi)


class QoiProblem:
    """Mesh + field expansion + point-evaluation QoI, with cached solves.

    Instances precompute everything that does not depend on z and are safe
    for concurrent read access; ``components`` itself performs one assembly
    and one factorization per call.
    """

    def __init__(self, mesh: fem.Mesh, fe: FieldExpansion, qoi_point,
                 solver: str = "direct", solver_tol: float = 1e-10,
                 solver_maxit: int = 10_000):
        self.mesh = mesh
        self.fe = fe
        self.qoi_point = np.asarray(qoi_point, dtype=float)
        self.solver = solver
        self.solver_tol = solver_tol
        self.solver_maxit = solver_maxit
        self.assembler = fem.Assembler(mesh, fe)
        self.functional = fem.point_functional(mesh, self.qoi_point)
        self.g_int = self.functional.interior_vector(mesh)

    def system(self, z) -> fem.FemSystem:
        return fem.FemSystem(self.assembler.stiffness(z), self.assembler.loads,
                             self.mesh, self.solver, self.solver_tol,
                             self.solver_maxit)

    def components(self, z, check_monotone: bool = True) -> QoiComponents:
        """One assembly + s+2 solves; applies G to each solution."""
        z = np.asarray(z, dtype=float)
        U = self.system(z).solve_many()
        vals = self.g_int @ U
        bz = float(self.fe.b @ np.abs(z)) if self.fe.s else 0.0
        comps = QoiComponents(z=z, phibar=float(vals[0]), phi=vals[1:],
                              a_min_lb=math.exp(-bz), a_max_ub=math.exp(bz))
        if check_monotone and not comps.phi[0] > 0:
            raise MonotonicityError(
                f"phi_0(z) = {comps.phi[0]:.3e} <= 0 at z = {z!r}")
        return comps

    def qoi_full(self, w, z) -> float:
        """phi(w, z) through a single combined-source solve.

        Used by plain (non-preintegrated) estimators and by linearity
        checks; one solve instead of s+2.
        """
        w = np.asarray(w, dtype=float)
        if w.shape != (self.fe.s + 1,):
            raise ConfigError(f"w must have length s+1 = {self.fe.s + 1}")
        load = self.assembler.loads @ np.concatenate([[1.0], w])
        sys = fem.FemSystem(self.assembler.stiffness(z), load, self.mesh,
                            self.solver, self.solver_tol, self.solver_maxit)
        return float(self.g_int @ sys.solve(load))

    @cached_property
    def _zero_solution(self) -> np.ndarray:
        return self.system(np.zeros(self.fe.s)).solve_many()

    @cached_property
    def g_norm(self) -> float:
        """Discrete dual-norm surrogate for ||G||: sqrt(g^T A0^{-1} g)."""
        A0 = self.assembler.stiffness(np.zeros(self.fe.s))
        v = fem.FemSystem(A0, self.g_int, self.mesh).solve(self.g_int)
        return float(np.sqrt(self.g_int @ v))

    @cached_property
    def u0_w1inf(self) -> float:
        """W^{1,inf} surrogate of u_0(., 0): max of nodal values and
        elementwise P1 gradients."""
        u0_int = self._zero_solution[:, 1]
        nodal = np.zeros(self.mesh.nodes.shape[0])
        nodal[self.mesh.interior_mask] = u0_int
        grad = fem.gradient_per_element(self.mesh, nodal)
        return float(max(np.abs(nodal).max(),
                         np.linalg.norm(grad, axis=1).max()))

    @cached_property
    def phi0_zero(self) -> float:
        return float(self.g_int @ self._zero_solution[:, 1])

    def constants(self, t0: float, t1: float):
        """Problem-constant bundle consumed by the weight/constant formulas."""
        from .weights import ProblemConstants

        return ProblemConstants(
            s=self.fe.s,
            c_bar=self.fe.c_bar,
            c0=float(self.fe.c[0]),
            c=np.asarray(self.fe.c[1:], dtype=float),
            b=np.asarray(self.fe.b, dtype=float),
            b_hat=np.asarray(self.fe.b_hat, dtype=float),
            ell0_inf=self.fe.ell0_inf,
            u0_w1inf=self.u0_w1inf,
            phi0_zero=self.phi0_zero,
            g_norm=self.g_norm,
            t0=t0,
            t1=t1,
        )


def k0_bound(fe: FieldExpansion, u0_w1inf: float, z) -> float:
    """K0(z) using the coefficient upper bound exp(sum b_j |z_j|)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (fe.s,):
        raise ConfigError(f"z must have length s = {fe.s}")
    a_max_ub = math.exp(float(fe.b @ np.abs(z))) if fe.s else 1.0
    growth = float(np.abs(z) @ fe.b_hat) if fe.s else 0.0
    return a_max_ub * (1.0 + u0_w1inf / fe.ell0_inf * growth)


def derivative_bound(fe: FieldExpansion, nu_w, nu_z, w, z) -> float:
    """Upper bound on the V-norm of the mixed parameter derivative of u.

    Three cases: for nu_w = 0 the bound carries the full source norm
    (cbar + sum c_i |w_i|); for nu_w = e_k it carries c_k alone; any
    higher-order w-derivative vanishes because the solution is affine
    in w.  The z-part contributes |nu_z|! / (ln 2)^{|nu_z|} * prod b_j^nu
    and the coefficient lower bound exp(-sum b_j |z_j|).
    """
    nu_w = np.asarray(nu_w, dtype=int)
    nu_z = np.asarray(nu_z, dtype=int)
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    if nu_w.shape != (fe.s + 1,) or w.shape != (fe.s + 1,):
        raise ConfigError("nu_w and w must have length s+1")
    if nu_z.shape != (fe.s,) or z.shape != (fe.s,):
        raise ConfigError("nu_z and z must have length s")

    order_w = int(nu_w.sum())
    if order_w > 1:
        return 0.0

    a_min_lb = math.exp(-float(fe.b @ np.abs(z))) if fe.s else 1.0
    nz = int(nu_z.sum())
    z_part = math.factorial(nz) / math.log(2.0) ** nz
    if fe.s:
        z_part *= float(np.prod(fe.b ** nu_z))

    if order_w == 0:
        src = fe.c_bar + float(fe.c @ np.abs(w))
    else:
        k = int(np.nonzero(nu_w)[0][0])
        src = float(fe.c[k])
    return z_part * src / a_min_lb
