"""Smoothing core: closed-form discontinuity location and the
preintegrated integrands.

For the affine QoI phi(w, z) = phibar(z) + sum_i w_i phi_i(z), integrating
the indicator 1(t - phi >= 0) (respectively the Dirac delta) over the
standard-normal variable w_0 gives, in closed form,

    g_cdf(t; w, z) = Phi(xi(t; w, z)),
    g_pdf(t; w, z) = rho(xi(t; w, z)) / phi_0(z),

where xi is the unique root of phi(xi, w_1..s, z) = t:

    xi(t; w, z) = (t - phibar(z) - sum_{i=1}^s w_i phi_i(z)) / phi_0(z).

Both integrands are smooth in (w_1..s, z); g_cdf is nondecreasing in t and
d/dt g_cdf = g_pdf.  Evaluating a whole t-grid for one point reuses the
same QoI components, so the s+2 PDE solves are amortized across the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import MonotonicityError
from .parametric import QoiComponents

__all__ = ["PreintPoint", "xi", "g_cdf", "g_pdf", "g_both", "normal_pdf"]

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def normal_pdf(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(x))


@dataclass(frozen=True)
class PreintPoint:
    """One sample of the remaining 2s variables with its QoI components."""

    w: np.ndarray  # (s,), the variables w_1..w_s
    z: np.ndarray  # (s,)
    qoi: QoiComponents

    def __post_init__(self):
        if not self.qoi.phi[0] > 0:
            raise MonotonicityError(
                f"phi_0(z) = {self.qoi.phi[0]:.3e} <= 0 at z = {self.z!r}")

    def value(self, y0: float) -> float:
        """phi(y0, w, z); the preintegration variable enters through phi_0."""
        return float(self.qoi.phibar + y0 * self.qoi.phi[0]
                     + self.w @ self.qoi.phi[1:])


def xi(t, p: PreintPoint):
    """Discontinuity location; affine in t and in each w_i."""
    t = np.asarray(t, dtype=float)
    shift = p.qoi.phibar + float(p.w @ p.qoi.phi[1:])
    return (t - shift) / p.qoi.phi[0]


def g_cdf(t, p: PreintPoint):
    """Preintegrated indicator: values in [0, 1], nondecreasing in t."""
    return ndtr(xi(t, p))


def g_pdf(t, p: PreintPoint):
    """Preintegrated Dirac delta: nonnegative."""
    return normal_pdf(xi(t, p)) / p.qoi.phi[0]


def g_both(t, p: PreintPoint):
    """One-pass evaluation of (g_cdf, g_pdf) over a t-grid."""
    x = xi(t, p)
    return ndtr(x), normal_pdf(x) / p.qoi.phi[0]
