"""Weight functions, QMC error constants, and the POD weight formulas.

Two admissible weight functions control derivative growth at infinity:

    exponential:  psi(y) = exp(-2 mu |y|),   mu > 0
    gaussian:     psi(y) = exp(-mu y^2),     0 < mu < 1/2

Their exponential-moment integrals, needed by the constant stack, have the
closed forms

    I_rho(T) = int e^{2T|y|} rho(y) dy = 2 exp(2 T^2) Phi(2T)
    I_psi(T) = 1 / (mu - T)                                (exponential, mu > T)
             = 2 sqrt(pi/mu) exp(T^2/mu) Phi(sqrt(2/mu) T) (gaussian)

The shift-averaged RMSE bound for a CBC lattice rule carries the factor

    exponential: rho(eps) = 2 (4 sqrt(2 pi) e^{2 mu^2/eps} / (pi^{2-eps}(2-eps) eps))^{1/(2(1-eps))}
                             * zeta((1 - eps/2)/(1 - eps)),     eps in (0, 1/2]
    gaussian:    rho(eps) = 2 (sqrt(2 pi) / (pi^{2-2mu}(1-mu) mu))^{1/(2(1-eps))}
                             * zeta((1 - mu)/(1 - eps)),        eps in (mu, 1/2]

The norm-bound constants for the preintegrated cdf/pdf integrands are

    B_{q,eta} = A_{q,eta} (|eta|+q-1)! (|eta|!)^2 / (ln 2)^{2|eta|}
                * prod_j b_j^{2 eta_{s+j}} * prod_i c_i^{2 eta_i}

with A_{q,eta} assembled from the problem constants and I_psi/I_rho
factors (psi on active coordinates, rho on inactive ones).  Combining the
order-dependent parts at q = 1 yields the order factors Gamma_m, the
optimal weights gamma*_eta = [Gamma_|eta| rho(eps)^{-|eta|} prod b^2
prod c^2]^{2(1-eps)/(3-2eps)}, and the practical weights that keep only
the factorial part of the order dependence:

    gamma_eta = (|eta|!)^5 prod_{j in supp eta} gamma_j,
    gamma_j   = (c_j^2 / rho(eps))^{2(1-eps)/(3-2eps)}   (source block)
              = (b_j^2 / rho(eps))^{2(1-eps)/(3-2eps)}   (coefficient block).

Everything is computed in log space; Gamma_m and the norm bounds overflow
double precision already at moderate orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


import numpy as np
from scipy.special import gammaln, log_ndtr

from .errors import ConfigError, WeightDivergenceError
from .qmc import PodWeights

__all__ = [
    "WeightFunctionSpec",
    "psi_values",
    "I_psi",
    "I_rho",
    "log_I_psi",
    "log_I_rho",
    "zeta",
    "varrho",
    "ProblemConstants",
    "B_constant",
    "log_B_constant",
    "log_Gamma_m",
    "gamma_star",
    "gamma_practical",
    "WeightScheme",
    "practical_scheme",
    "theoretical_scheme",
    "log_norm_bound",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class WeightFunctionSpec:
    """Choice of weight function psi and its decay parameter."""

    kind: str  # "gaussian" | "exponential"
    mu: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "exponential"):
            raise ConfigError(f"unknown weight function kind {self.kind!r}")
        if self.kind == "gaussian" and not 0 < self.mu < 0.5:
            raise ConfigError("gaussian weight functions require 0 < mu < 1/2")
        if self.kind == "exponential" and not self.mu > 0:
            raise ConfigError("exponential weight functions require mu > 0")


def psi_values(spec: WeightFunctionSpec, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if spec.kind == "exponential":
        return np.exp(-2.0 * spec.mu * np.abs(y))
    return np.exp(-spec.mu * y * y)


def log_I_rho(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return LN2 + 2.0 * theta ** 2 + log_ndtr(2.0 * theta)


def I_rho(theta) -> float:
    return float(np.exp(log_I_rho(theta)))


def log_I_psi(spec: WeightFunctionSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise ConfigError("I_psi arguments must be nonnegative")
    if spec.kind == "exponential":
        if np.any(theta >= spec.mu):
            raise WeightDivergenceError(
                "weight function too weak: exponential decay mu = "
                f"{spec.mu:g} must exceed the argument {np.max(theta):g}")
        return -np.log(spec.mu - theta)
    return (LN2 + 0.5 * (math.log(math.pi) - math.log(spec.mu))
            + theta ** 2 / spec.mu + log_ndtr(math.sqrt(2.0 / spec.mu) * theta))


def I_psi(spec: WeightFunctionSpec, theta) -> float:
    return float(np.exp(log_I_psi(spec, theta)))


# Bernoulli numbers B_2, B_4, ..., B_24 for the Euler-Maclaurin tail.
_B2K = [
    1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730,
    7.0 / 6, -3617.0 / 510, 43867.0 / 798, -174611.0 / 330,
    854513.0 / 138, -236364091.0 / 2730,
]


def zeta(x: float) -> float:
    """Riemann zeta for x > 1: truncated series plus Euler-Maclaurin tail.

    Absolute error below 1e-12 over the range used here (x in (1, 60]);
    for larger x the direct series already converges to machine precision.
    """
    if x <= 1.0:
        raise ConfigError("zeta is evaluated only for arguments > 1")
    if x > 60.0:
        n = np.arange(1, 60, dtype=float)
        return float(np.sum(n ** (-x)))
    M = 25
    n = np.arange(1, M, dtype=float)
    total = float(np.sum(n ** (-x)))
    total += M ** (1.0 - x) / (x - 1.0) + 0.5 * M ** (-x)
    poch = 1.0  # x (x+1) ... (x + 2k - 2)
    for k, b2k in enumerate(_B2K, start=1):
        poch *= x + 2 * k - 3 if k > 1 else 1.0
        poch *= (x + 2 * k - 2) if k > 1 else x
        total += b2k / math.factorial(2 * k) * poch * M ** (-x - 2 * k + 1)
    return total


def varrho(spec: WeightFunctionSpec, eps: float) -> float:
    """RMSE-bound constant rho(eps) of the CBC lattice rule."""
    if spec.kind == "gaussian":
        if not spec.mu < eps <= 0.5:
            raise ConfigError("gaussian weights require eps in (mu, 1/2]")
        base = math.sqrt(2.0 * math.pi) / (
            math.pi ** (2.0 - 2.0 * spec.mu) * (1.0 - spec.mu) * spec.mu)
        return 2.0 * base ** (1.0 / (2.0 * (1.0 - eps))) * zeta(
            (1.0 - spec.mu) / (1.0 - eps))
    if not 0 < eps <= 0.5:
        raise ConfigError("exponential weights require eps in (0, 1/2]")
    base = 4.0 * math.sqrt(2.0 * math.pi) * math.exp(2.0 * spec.mu ** 2 / eps) / (
        math.pi ** (2.0 - eps) * (2.0 - eps) * eps)
    return 2.0 * base ** (1.0 / (2.0 * (1.0 - eps))) * zeta(
        (1.0 - eps / 2.0) / (1.0 - eps))


@dataclass(frozen=True)
class ProblemConstants:
    """Everything the constant stack needs about one concrete problem."""

    s: int
    c_bar: float
    c0: float
    c: np.ndarray  # (s,) dual norms of ell_1..ell_s
    b: np.ndarray  # (s,)
    b_hat: np.ndarray  # (s,)
    ell0_inf: float
    u0_w1inf: float
    phi0_zero: float
    g_norm: float
    t0: float
    t1: float

    @property
    def log_ratio(self) -> float:
        """log of (ell0_inf + ||u_0(.,0)||_{W1,inf}) / (phi_0(0) ell0_inf)."""
        return math.log(self.ell0_inf + self.u0_w1inf) - math.log(
            self.phi0_zero * self.ell0_inf)

    @property
    def log_tfactor(self) -> float:
        """log of c0 ||G|| (max(|t0|, |t1|) + 2 ||G|| (cbar + c0 + 1))."""
        tmax = max(abs(self.t0), abs(self.t1))
        return math.log(self.c0 * self.g_norm) + math.log(
            tmax + 2.0 * self.g_norm * (self.c_bar + self.c0 + 1.0))


def _split_eta(eta, s: int):
    eta = np.asarray(eta, dtype=int)
    if eta.shape != (2 * s,):
        raise ConfigError(f"eta must have length 2s = {2 * s}")
    if np.any(eta < 0):
        raise ConfigError("eta components must be nonnegative")
    return eta[:s], eta[s:]


def log_B_constant(q: int, eta, consts: ProblemConstants,
                   spec: WeightFunctionSpec) -> float:
    """log B_{q,eta}; raises WeightDivergenceError when I_psi diverges."""
    eta_w, eta_z = _split_eta(eta, consts.s)
    m = int(eta_w.sum() + eta_z.sum())
    if m + q < 1:
        raise ConfigError("B_{q,eta} requires q + |eta| >= 1")

    theta_w = (2 * m + q - 1)
    theta_z = 2 * (6 * m + 4 * q - 3)
    act_w = eta_w > 0
    act_z = eta_z > 0

    log_a = -math.log(2.0 * math.pi)
    log_a += (4 * m + 2 * q) * consts.log_ratio
    log_a += 2 * m * consts.log_tfactor
    if consts.s:
        log_a += float(np.sum(log_I_psi(spec, theta_w * consts.c[act_w])))
        log_a += float(np.sum(log_I_rho(theta_w * consts.c[~act_w])))
        log_a += float(np.sum(log_I_psi(spec, theta_z * consts.b_hat[act_z])))
        log_a += float(np.sum(log_I_rho(theta_z * consts.b_hat[~act_z])))

    log_b = log_a + gammaln(m + q) + 2.0 * gammaln(m + 1) - 2 * m * math.log(LN2)
    if consts.s:
        with np.errstate(divide="ignore"):
            log_b += float(2.0 * eta_z @ np.log(consts.b))
            log_b += float(2.0 * eta_w @ np.log(consts.c))
    return float(log_b)


def B_constant(q: int, eta, consts: ProblemConstants,
               spec: WeightFunctionSpec) -> float:
    return float(np.exp(log_B_constant(q, eta, consts, spec)))


def log_Gamma_m(m: int, consts: ProblemConstants, mu: float) -> float:
    """log of the order factor Gamma_m (q = 1 constant stack combined)."""
    if m < 0:
        raise ConfigError("order must be nonnegative")
    per_order = (math.log(9.0) + 0.5 * math.log(math.pi)
                 - 2.0 * math.log(LN2) - 0.5 * math.log(mu))
    val = (consts.s - 1) * LN2 - math.log(math.pi)
    val += m * per_order
    val += (4 * m + 2) * max(0.0, consts.log_ratio)
    val += 2 * m * consts.log_tfactor
    val += 5.0 * gammaln(m + 1)
    if consts.s:
        val += 4.0 * m * m / mu * float(consts.c @ consts.c)
        val += (12 * m + 2) ** 2 / mu * float(consts.b_hat @ consts.b_hat)
    return float(val)


def _kappa(eps: float) -> float:
    return 2.0 * (1.0 - eps) / (3.0 - 2.0 * eps)


def gamma_star(eta, eps: float, spec: WeightFunctionSpec,
               consts: ProblemConstants) -> float:
    """Bound-minimizing weight for one index set (may overflow for large
    orders; the log-space scheme below is what the CBC consumes)."""
    eta_w, eta_z = _split_eta(eta, consts.s)
    m = int(eta_w.sum() + eta_z.sum())
    if m == 0:
        return 1.0
    rho = varrho(spec, eps)
    with np.errstate(divide="ignore"):
        log_val = log_Gamma_m(m, consts, spec.mu) - m * math.log(rho)
        log_val += float(2.0 * eta_z @ np.log(consts.b))
        log_val += float(2.0 * eta_w @ np.log(consts.c))
    return float(np.exp(_kappa(eps) * log_val))


def gamma_practical(eta, eps: float, spec: WeightFunctionSpec,
                    consts: ProblemConstants) -> float:
    """Practical weight: factorial order part times per-coordinate factors."""
    eta_w, eta_z = _split_eta(eta, consts.s)
    m = int(eta_w.sum() + eta_z.sum())
    if m == 0:
        return 1.0
    rho = varrho(spec, eps)
    kap = _kappa(eps)
    log_val = 5.0 * gammaln(m + 1)
    with np.errstate(divide="ignore"):
        log_val += kap * float((eta_w > 0) @ (2.0 * np.log(consts.c) - math.log(rho)))
        log_val += kap * float((eta_z > 0) @ (2.0 * np.log(consts.b) - math.log(rho)))
    return float(np.exp(log_val))


@dataclass(frozen=True)
class WeightScheme:
    """POD weights gamma_eta = Gamma_|eta| prod_{j in supp eta} gamma_j.

    Stored as per-coordinate factors plus log order-factor ratios, the
    representation the CBC construction consumes directly.
    """

    gamma: np.ndarray  # (2s,) source block first, then coefficient block
    log_order_ratio: np.ndarray  # (2s,) log(Gamma_m / Gamma_{m-1})
    name: str = "custom"

    def log_Gamma(self, m: int) -> float:
        return float(np.sum(self.log_order_ratio[:m]))

    def log_gamma_eta(self, eta) -> float:
        eta = np.asarray(eta, dtype=int)
        supp = eta > 0
        m = int(supp.sum())
        return self.log_Gamma(m) + float(np.sum(np.log(self.gamma[supp])))

    def gamma_eta(self, eta) -> float:
        return float(np.exp(self.log_gamma_eta(eta)))

    def pod(self) -> PodWeights:
        return PodWeights(gamma=self.gamma, log_order_ratio=self.log_order_ratio)


def practical_scheme(c, b, spec: WeightFunctionSpec, eps: float) -> WeightScheme:
    """Per-coordinate practical weights for the 2s preintegrated variables."""
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    rho = varrho(spec, eps)
    kap = _kappa(eps)
    gamma = np.concatenate([(c ** 2 / rho) ** kap, (b ** 2 / rho) ** kap])
    m = np.arange(1, gamma.size + 1, dtype=float)
    return WeightScheme(gamma=gamma, log_order_ratio=5.0 * np.log(m),
                        name="practical")


def theoretical_scheme(consts: ProblemConstants, spec: WeightFunctionSpec,
                       eps: float) -> WeightScheme:
    """Bound-minimizing POD weights gamma*, in log-ratio form.

    The order factors are anchored so that gamma_empty = 1: the first
    ratio carries log Gamma_1 in full (not the increment from Gamma_0).
    """
    rho = varrho(spec, eps)
    kap = _kappa(eps)
    gamma = np.concatenate([consts.c ** (2 * kap), consts.b ** (2 * kap)])
    dims = gamma.size
    lg = np.array([0.0] + [log_Gamma_m(m, consts, spec.mu)
                           for m in range(1, dims + 1)])
    ratios = kap * (np.diff(lg) - math.log(rho))
    return WeightScheme(gamma=gamma, log_order_ratio=ratios, name="theoretical")


def _logsumexp(terms: np.ndarray) -> float:
    terms = np.asarray(terms, dtype=float)
    finite = terms[np.isfinite(terms)]
    if finite.size == 0:
        return -np.inf
    t = finite.max()
    return float(t + np.log(np.sum(np.exp(finite - t))))


def _log_elementary_symmetric(log_x: np.ndarray, m: int) -> float:
    """log e_m(x) for positive x given as logs, via the stable recursion."""
    if m == 0:
        return 0.0
    e = np.full(m + 1, -np.inf)
    e[0] = 0.0
    for lx in log_x:
        upper = min(m, 1 + int(np.count_nonzero(np.isfinite(e)) - 1))
        for t in range(upper, 0, -1):
            e[t] = np.logaddexp(e[t], lx + e[t - 1])
    return float(e[m])


def log_norm_bound(which: str, consts: ProblemConstants,
                   spec: WeightFunctionSpec, scheme: WeightScheme) -> float:
    """log of the norm bound for the preintegrated cdf or pdf integrand.

    Sums Lambda_eta / gamma_eta over all eta <= 1 (2^{2s} index sets) by
    exploiting the POD structure: for each order m the sum over supports
    is an elementary symmetric polynomial, evaluated in log space.
    Returns log of the bound, i.e. half the log of the summed series.
    """
    if which not in ("cdf", "pdf"):
        raise ConfigError("norm bound target must be 'cdf' or 'pdf'")
    q = 0 if which == "cdf" else 1
    s = consts.s
    dims = 2 * s
    if dims == 0:
        return 0.0

    log_gamma_coord = np.log(scheme.gamma)
    log_c2 = 2.0 * np.log(consts.c)
    log_b2 = 2.0 * np.log(consts.b)

    terms = []
    if which == "cdf":
        terms.append(0.0)  # eta = 0 contributes 1/gamma_empty = 1
        m_range = range(1, dims + 1)
    else:
        terms.append(log_B_constant(1, np.zeros(dims, dtype=int), consts, spec)
                     - scheme.log_Gamma(0))
        m_range = range(1, dims + 1)

    for m in m_range:
        theta_w = (2 * m + q - 1)
        theta_z = 2 * (6 * m + 4 * q - 3)
        log_v = np.concatenate([
            log_I_rho(theta_w * consts.c),
            log_I_rho(theta_z * consts.b_hat),
        ])
        log_x = np.concatenate([
            log_I_psi(spec, theta_w * consts.c) + log_c2 - log_gamma_coord[:s],
            log_I_psi(spec, theta_z * consts.b_hat) + log_b2 - log_gamma_coord[s:],
        ])
        if which == "cdf":
            log_prefac = 2.0 * ((m - 1) * math.log(3.0) + gammaln(m))
        else:
            log_prefac = 2.0 * (m * math.log(3.0) + gammaln(m + 1))
        log_cq = (log_prefac - math.log(2.0 * math.pi)
                  + (4 * m + 2 * q) * consts.log_ratio
                  + 2 * m * consts.log_tfactor
                  + gammaln(m + q) + 2.0 * gammaln(m + 1)
                  - 2 * m * math.log(LN2)
                  - scheme.log_Gamma(m))
        log_em = _log_elementary_symmetric(log_x - log_v, m)
        terms.append(log_cq + float(np.sum(log_v)) + log_em)

    return 0.5 * _logsumexp(np.array(terms))
