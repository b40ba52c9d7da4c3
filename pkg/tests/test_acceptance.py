"""Acceptance suite: each test exercises one gate criterion at its stated
tolerance and prints one [ACCEPTANCE] line on success."""

import math

import numpy as np
import pytest
import scipy.integrate
from scipy.special import ndtr

from preintqmc import estimators, oracle, parametric, preintegration, qmc, weights

SEED = 3
PSI = weights.WeightFunctionSpec("gaussian", 0.05)
EPS = 0.1
QOI_POINT = (0.7071067811865476, 0.7071067811865476)

DESK = estimators.ProblemSpec(dim=2, s=8, alpha=1.0, theta=2.0, mesh_m=5,
                              qoi_point=QOI_POINT)
DESK_NS = (251, 503, 1009, 2003, 4001)
DESK_SHIFTS = 8
T_GRID = np.linspace(-0.2, 0.3, 51)  # 0.01 spacing puts t_ref on the grid
T_REF = -0.02
WORKERS = 2


def _ok(name: str) -> None:
    print(f"[ACCEPTANCE] {name}: PASS")


@pytest.fixture(scope="session")
def desk_convergence():
    table, ests = estimators.convergence_sweep(
        DESK, DESK_NS, ["qmc-preint", "mc-preint", "qmc"], T_GRID, T_REF,
        DESK_SHIFTS, SEED, PSI, EPS, workers=WORKERS, keep_estimates=True)
    return table, ests


def test_convergence_rates(desk_convergence):
    table, _ = desk_convergence
    qp_cdf = table.slope("qmc-preint", "cdf")
    qp_pdf = table.slope("qmc-preint", "pdf")
    mc_cdf = table.slope("mc-preint", "cdf")
    q_cdf = table.slope("qmc", "cdf")
    print(f"slopes: qmc-preint cdf {qp_cdf:+.3f} pdf {qp_pdf:+.3f}, "
          f"mc-preint cdf {mc_cdf:+.3f}, qmc cdf {q_cdf:+.3f}")
    assert qp_cdf <= -0.85
    assert qp_pdf <= -0.85
    assert -0.65 <= mc_cdf <= -0.35
    assert -0.75 <= q_cdf <= -0.35
    _ok("convergence-rate reproduction (desk scale)")


def test_oracle_equivalence_two_dimensional():
    spec = estimators.ProblemSpec(dim=1, s=1, alpha=1.0, theta=2.0, mesh_m=5,
                                  qoi_point=(0.5,))
    prob = estimators._get_problem(spec)
    t_values = np.array([-0.05, 0.0, 0.1])
    rule = estimators.construct_rule(spec, 4001, 16, SEED, PSI, EPS)
    est = estimators.estimate_qmc_preint(spec, rule, t_values)
    x, w = oracle.gauss_hermite(64)
    for ti, t in enumerate(t_values):
        F_ref = 0.0
        f_ref = 0.0
        for zi, wz in zip(x, w):
            comps = prob.components(np.array([zi]))
            xi_vals = (t - comps.phibar - x * comps.phi[1]) / comps.phi[0]
            F_ref += wz * float(w @ ndtr(xi_vals))
            f_ref += wz * float(w @ (preintegration.normal_pdf(xi_vals)
                                     / comps.phi[0]))
        assert abs(est.F_mean[ti] - F_ref) <= 1e-4
        assert abs(est.f_mean[ti] - f_ref) <= 1e-4
    _ok("oracle equivalence (tensor Gauss-Hermite)")


def test_exact_trivial_family():
    spec = estimators.ProblemSpec(dim=1, s=0, alpha=1.0, theta=2.0, mesh_m=4,
                                  qoi_point=(0.5,))
    t = np.linspace(-0.3, 0.4, 29)
    for N in (7, 128, 503):
        for shifts in (2, 5):
            rule = qmc.make_lattice(N, np.zeros(0, dtype=np.int64), shifts,
                                    SEED)
            est = estimators.estimate_qmc_preint(spec, rule, t)
            assert np.abs(est.F_mean - ndtr(8 * t - 1)).max() <= 1e-10
            assert np.abs(est.f_mean
                          - 8 * preintegration.normal_pdf(8 * t - 1)).max() <= 1e-10
    _ok("exact trivial family")


def test_monotonicity_suite():
    prob = estimators._get_problem(DESK)
    fe = prob.fe
    u0n = prob.u0_w1inf
    phi0_zero = prob.phi0_zero
    rng = qmc.substream(SEED, 9, 0)
    for _ in range(1000):
        z = rng.standard_normal(8)
        comps = prob.components(z)  # raises MonotonicityError if phi_0 <= 0
        assert comps.phi[0] > 0
        lower = phi0_zero / parametric.k0_bound(fe, u0n, z)
        assert comps.phi[0] >= lower * (1 - 1e-12)
    _ok("monotonicity suite (1000 draws, lower bound)")


def test_derivative_bound_suite():
    spec = estimators.ProblemSpec(dim=2, s=4, alpha=1.0, theta=2.0, mesh_m=5,
                                  qoi_point=QOI_POINT)
    prob = estimators._get_problem(spec)
    fe = prob.fe
    g_norm = prob.g_norm
    rng = qmc.substream(SEED, 10, 0)
    h = 1e-4
    h2 = 0.05
    for _ in range(100):
        w = rng.standard_normal(5)
        z = rng.standard_normal(4)
        comps = prob.components(z)
        j = int(rng.integers(0, 4))
        e = np.zeros(4)
        e[j] = h
        fd_z = (prob.qoi_full(w, z + e) - prob.qoi_full(w, z - e)) / (2 * h)
        nu_z = np.zeros(4, dtype=int)
        nu_z[j] = 1
        bound_z = parametric.derivative_bound(fe, np.zeros(5, dtype=int),
                                              nu_z, w, z)
        assert abs(fd_z) <= g_norm * bound_z + 1e-8
        i = int(rng.integers(0, 5))
        ew = np.zeros(5)
        ew[i] = h
        fd_w = (comps.value(w + ew) - comps.value(w - ew)) / (2 * h)
        nu_w = np.zeros(5, dtype=int)
        nu_w[i] = 1
        bound_w = parametric.derivative_bound(fe, nu_w, np.zeros(4, dtype=int),
                                              w, z)
        assert abs(fd_w) <= g_norm * bound_w + 1e-10
        ew[i] = h2
        second = (prob.qoi_full(w + ew, z) - 2 * prob.qoi_full(w, z)
                  + prob.qoi_full(w - ew, z)) / h2 ** 2
        assert abs(second) <= 1e-8
    _ok("derivative-bound suite (100 points)")


def test_cdf_pdf_consistency(desk_convergence):
    _, ests = desk_convergence
    checked = 0
    for (method, N), est in ests.items():
        if est.f_shift is None:
            continue
        mass = estimators.trapezoid_pdf_mass(est)
        increment = float(est.F_mean[-1] - est.F_mean[0])
        rmse_sum = float(est.F_rmse[0] + est.F_rmse[-1] + est.f_rmse.mean())
        bound = 2 * (rmse_sum + estimators.grid_curvature_bound(est))
        assert abs(mass - increment) <= bound, (method, N)
        h = float(est.t_grid[1] - est.t_grid[0])
        fd = (est.F_mean[2:] - est.F_mean[:-2]) / (2 * h)
        tol = (np.abs(np.diff(est.f_mean, 2)) / 6
               + 2 * (est.F_rmse[2:] + est.F_rmse[:-2]) / (2 * h)
               + 2 * est.f_rmse[1:-1] + 1e-4)
        assert np.all(np.abs(fd - est.f_mean[1:-1]) <= tol), (method, N)
        checked += 1
    assert checked == 2 * len(DESK_NS)  # qmc-preint and mc-preint at each N
    _ok("cdf/pdf consistency on every convergence run")


def test_constants_suite():
    # closed-form moment integrals against adaptive quadrature
    for theta in (0.0, 0.4, 1.1):
        quad_rho, _ = scipy.integrate.quad(
            lambda y: math.exp(2 * theta * abs(y) - y * y / 2)
            / math.sqrt(2 * math.pi), -np.inf, np.inf, limit=400)
        assert weights.I_rho(theta) == pytest.approx(quad_rho, rel=1e-8)
        quad_psi, _ = scipy.integrate.quad(
            lambda y: math.exp(2 * theta * abs(y) - PSI.mu * y * y),
            -np.inf, np.inf, limit=400)
        assert weights.I_psi(PSI, theta) == pytest.approx(quad_psi, rel=1e-8)
    # zeta against the frozen series-oracle value
    assert abs(weights.zeta(1.5) - 2.612375348685488) <= 1e-8
    # CBC equals exhaustive search at N=5, dims=2, unit product weights
    pod = qmc.product_weights(np.ones(2))
    z_gen = qmc.cbc_construct(5, 2, pod)
    built = qmc.lattice_criterion_sq(5, z_gen, pod)
    brute = min(qmc.lattice_criterion_sq(5, np.array([z1, z2]), pod)
                for z1 in range(1, 5) for z2 in range(1, 5))
    assert built == pytest.approx(brute, rel=1e-12)
    assert qmc.phi_tot(503) == 502
    _ok("constants suite")


def test_ks_validation():
    t_grid = np.linspace(-0.45, 0.55, 101)
    rule = estimators.construct_rule(DESK, 503, DESK_SHIFTS, SEED, PSI, EPS,
                                     t0=t_grid[0], t1=t_grid[-1])
    est = estimators.estimate_qmc_preint(DESK, rule, t_grid, workers=WORKERS)
    non_rejections = 0
    for rep in range(20):
        samples = estimators.draw_qoi_samples(DESK, 1000, SEED, stream=rep)
        result = estimators.ks_test(t_grid, est.F_mean, samples)
        non_rejections += not result.reject
    print(f"KS: failed to reject in {non_rejections}/20 repetitions")
    assert non_rejections >= 18
    _ok("KS validation (>= 18/20 non-rejections)")


@pytest.mark.slow
def test_full_scale_execution():
    # reference-scale configuration; correctness is covered elsewhere,
    # this only has to run through without error
    spec = estimators.ProblemSpec(dim=2, s=64, alpha=1.0, theta=2.0, mesh_m=8,
                                  qoi_point=QOI_POINT)
    rule = estimators.construct_rule(spec, 503, 1, SEED, PSI, EPS)
    t = np.linspace(-0.1, 0.1, 5)
    est = estimators.estimate_qmc_preint(spec, rule, t, workers=WORKERS)
    assert np.all(np.isfinite(est.F_mean))
    assert np.all((est.F_mean >= 0) & (est.F_mean <= 1))
    assert np.all(np.isfinite(est.f_mean))
    _ok("full-scale execution (s=64, h=2^-8, N=503)")


@pytest.mark.slow
def test_reference_dimension_preintegration_beats_plain():
    # full parametric dimension 2s+1 = 129 on the desk mesh: the
    # preintegrated rule must beat the plain indicator rule at equal N
    spec = estimators.ProblemSpec(dim=2, s=64, alpha=1.0, theta=2.0, mesh_m=5,
                                  qoi_point=QOI_POINT)
    t = np.array([-0.02])
    rule = estimators.construct_rule(spec, 503, 16, SEED, PSI, EPS)
    smooth = estimators.estimate_qmc_preint(spec, rule, t, workers=WORKERS)
    plain_rule = estimators.construct_rule(spec, 503, 16, SEED, PSI, EPS,
                                           plain=True)
    plain = estimators.estimate_qmc(spec, plain_rule, t, preintegrate=False,
                                    workers=WORKERS)
    assert np.all(np.isfinite(smooth.F_mean)) and np.all(np.isfinite(smooth.f_mean))
    assert smooth.F_rmse[0] < plain.F_rmse[0]
    _ok("reference-dimension run, preintegration beats plain QMC")
