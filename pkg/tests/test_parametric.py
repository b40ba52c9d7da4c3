import math

import numpy as np
import pytest

from preintqmc import fem, fields, parametric
from preintqmc.errors import MonotonicityError


def series_poisson_unit_square(x1, x2, terms=301):
    """Solution of -lap u = 1 on the unit square via its double sine series."""
    odd = np.arange(1, terms, 2, dtype=float)
    m, n = np.meshgrid(odd, odd, indexing="ij")
    coef = 16.0 / (math.pi ** 4 * m * n * (m ** 2 + n ** 2))
    return float(np.sum(coef * np.sin(m * math.pi * x1) * np.sin(n * math.pi * x2)))


def test_trivial_problem_components(problem_1d_trivial):
    comps = problem_1d_trivial.components(np.zeros(0))
    assert comps.phibar == pytest.approx(0.125, abs=1e-12)
    assert comps.phi[0] == pytest.approx(0.125, abs=1e-12)
    assert comps.a_min_lb == comps.a_max_ub == 1.0


def test_phi0_zero_matches_series_oracle():
    fe = fields.make_sine_family(2, 2, 1.0, 2.0)
    prob = parametric.QoiProblem(fem.make_mesh(2, 6), fe,
                                 [math.sqrt(0.5), math.sqrt(0.5)])
    exact = series_poisson_unit_square(math.sqrt(0.5), math.sqrt(0.5))
    assert prob.phi0_zero == pytest.approx(exact, rel=2e-3)


def test_components_linear_in_w(problem_2d_s4):
    rng = np.random.default_rng(5)
    z = rng.standard_normal(4)
    w = rng.standard_normal(5)
    comps = problem_2d_s4.components(z)
    assert comps.value(w) == pytest.approx(problem_2d_s4.qoi_full(w, z),
                                           abs=1e-10)


def test_monotonicity_flag(problem_2d_s4, monkeypatch):
    monkeypatch.setattr(problem_2d_s4, "g_int", -problem_2d_s4.g_int)
    with pytest.raises(MonotonicityError):
        problem_2d_s4.components(np.zeros(4))


def test_k0_at_zero_and_evenness(problem_2d_s4):
    fe = problem_2d_s4.fe
    u0n = problem_2d_s4.u0_w1inf
    assert parametric.k0_bound(fe, u0n, np.zeros(4)) == pytest.approx(1.0)
    z = np.array([0.5, -1.0, 2.0, -0.25])
    assert parametric.k0_bound(fe, u0n, z) == pytest.approx(
        parametric.k0_bound(fe, u0n, -z), rel=1e-14)


def test_phi0_lower_bound_on_random_draws(problem_2d_s4):
    fe = problem_2d_s4.fe
    u0n = problem_2d_s4.u0_w1inf
    phi0_zero = problem_2d_s4.phi0_zero
    rng = np.random.default_rng(17)
    for _ in range(200):
        z = rng.standard_normal(4)
        comps = problem_2d_s4.components(z)
        lower = phi0_zero / parametric.k0_bound(fe, u0n, z)
        assert comps.phi[0] > 0
        assert comps.phi[0] >= lower * (1 - 1e-12)


def test_derivative_bound_vanishes_for_higher_w_orders(problem_2d_s4):
    fe = problem_2d_s4.fe
    nu_w = np.array([1, 1, 0, 0, 0])
    bound = parametric.derivative_bound(fe, nu_w, np.zeros(4, dtype=int),
                                        np.zeros(5), np.zeros(4))
    assert bound == 0.0


def test_derivative_bound_at_origin_is_cbar(problem_2d_s4):
    fe = problem_2d_s4.fe
    bound = parametric.derivative_bound(fe, np.zeros(5, dtype=int),
                                        np.zeros(4, dtype=int),
                                        np.zeros(5), np.zeros(4))
    assert bound == pytest.approx(fe.c_bar, rel=1e-14)


def test_fd_derivatives_respect_bound(problem_2d_s4):
    prob = problem_2d_s4
    fe = prob.fe
    rng = np.random.default_rng(23)
    h = 1e-4
    for _ in range(5):
        w = rng.standard_normal(5)
        z = rng.standard_normal(4)
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            fd = (prob.qoi_full(w, z + e) - prob.qoi_full(w, z - e)) / (2 * h)
            nu_z = np.zeros(4, dtype=int)
            nu_z[j] = 1
            bound = parametric.derivative_bound(fe, np.zeros(5, dtype=int),
                                                nu_z, w, z)
            assert abs(fd) <= prob.g_norm * bound + 1e-8
        comps = prob.components(z)
        for i in range(5):
            nu_w = np.zeros(5, dtype=int)
            nu_w[i] = 1
            bound = parametric.derivative_bound(fe, nu_w,
                                                np.zeros(4, dtype=int), w, z)
            assert abs(comps.phi[i]) <= prob.g_norm * bound + 1e-12


def test_second_w_difference_vanishes(problem_2d_s4):
    # phi is affine in w; a larger step keeps solver rounding from being
    # amplified by the 1/h^2 of the second difference
    prob = problem_2d_s4
    z = np.array([0.3, -0.2, 0.9, 0.1])
    w = np.array([0.5, -1.0, 0.2, 0.0, 0.7])
    h = 0.05
    for i in range(5):
        e = np.zeros(5)
        e[i] = h
        second = (prob.qoi_full(w + e, z) - 2 * prob.qoi_full(w, z)
                  + prob.qoi_full(w - e, z)) / h ** 2
        assert abs(second) <= 1e-8


def test_g_norm_positive(problem_2d_s4, problem_1d_s1):
    assert problem_2d_s4.g_norm > 0
    assert problem_1d_s1.g_norm > 0
