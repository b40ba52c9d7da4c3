import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from preintqmc import fem, fields
from preintqmc.errors import ConfigError

PI = math.pi


def test_paper_family_parameter_count():
    fe = fields.make_sine_family(2, 64, 1.0, 2.0)
    assert len(fe.ell) == 65
    assert len(fe.a_basis) == 64
    assert fe.n_parameters == 129


def test_s0_family_has_unit_coefficient():
    fe = fields.make_sine_family(1, 0, 1.0, 2.0)
    assert fe.n_parameters == 1
    assert fields.evaluate_coefficient(fe, [[0.3]], np.zeros(0)) == 1.0


def test_rejects_unsupported_dimension():
    with pytest.raises(ConfigError):
        fields.make_sine_family(3, 4, 1.0, 2.0)


def test_b1_analytic_and_dense_sampling():
    fe = fields.make_sine_family(2, 1, 1.0, 2.0)
    assert fe.b[0] == pytest.approx(1.0 / (1.0 + PI ** 2), rel=1e-12)
    # sup of |sin(pi x1) sin(2 pi x2)| over a dense grid is 1
    g = np.linspace(0.0, 1.0, 513)
    X, Y = np.meshgrid(g, g, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    sampled = np.abs(fe.a_basis[0](pts)).max()
    assert sampled == pytest.approx(fe.b[0], rel=1e-3)


def test_evaluate_source_examples():
    fe = fields.make_sine_family(2, 1, 1.0, 2.0)
    x = np.array([[0.5, 0.25]])
    assert fields.evaluate_source(fe, x, np.zeros(2)) == pytest.approx(1.0)
    assert fields.evaluate_source(fe, x, np.array([1.0, 0.0])) == pytest.approx(2.0)
    expected = 1.0 + 1.0 / (1.0 + PI ** 2)
    assert fields.evaluate_source(fe, x, np.array([0.0, 1.0])) == pytest.approx(
        expected, rel=1e-12)


def test_evaluate_source_length_mismatch():
    fe = fields.make_sine_family(2, 2, 1.0, 2.0)
    with pytest.raises(ConfigError):
        fields.evaluate_source(fe, [[0.5, 0.5]], np.zeros(2))


def test_evaluate_coefficient_examples():
    fe = fields.make_sine_family(2, 1, 1.0, 2.0)
    x = np.array([[0.5, 0.25]])
    assert fields.evaluate_coefficient(fe, x, np.zeros(1)) == pytest.approx(1.0)
    assert fields.evaluate_coefficient(fe, x, np.array([1.0])) == pytest.approx(
        math.exp(1.0 / (1.0 + PI ** 2)), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_coefficient_positive_and_bounded(zs, x1, x2):
    fe = fields.make_sine_family(2, 3, 1.0, 2.0)
    z = np.array(zs)
    a = fields.evaluate_coefficient(fe, [[x1, x2]], z)
    bound = float(fe.b @ np.abs(z))
    assert a > 0
    assert math.exp(-bound) - 1e-12 <= a <= math.exp(bound) + 1e-12


def test_dual_norm_c1_value():
    fe = fields.make_sine_family(2, 1, 1.0, 2.0)
    expected = 0.5 / ((1.0 + PI ** 2) * PI * math.sqrt(5.0))
    assert fields.dual_norm(fe, 1) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(6.548e-3, rel=1e-3)


def test_dual_norm_of_unit_source_1d():
    fe = fields.make_sine_family(1, 0, 1.0, 2.0)
    assert fields.dual_norm(fe, "mean") == pytest.approx(
        math.sqrt(1.0 / 12.0), rel=1e-12)


def test_numeric_dual_norm_homogeneity(mesh_1d_m5):
    fe = fields.make_sine_family(1, 1, 1.0, 2.0)
    nodal = fe.ell[1](mesh_1d_m5.nodes)
    one = fem.dual_norm_numeric(mesh_1d_m5, nodal)
    two = fem.dual_norm_numeric(mesh_1d_m5, 2.0 * nodal)
    assert two == pytest.approx(2.0 * one, rel=1e-12)


def test_monotone_decay_of_norms():
    for d in (1, 2):
        fe = fields.make_sine_family(d, 16, 1.0, 2.0)
        assert np.all(np.diff(fe.b) < 0)
        assert np.all(np.diff(fe.c[1:]) < 0)


@pytest.mark.parametrize("d,indices", [(1, (1, 2)), (2, (1,))])
def test_norm_consistency_against_fem(d, indices):
    # analytic dual norms agree with the numeric path at h = 2^-7; the
    # discretization error grows like (h sqrt(lambda_i))^2, so only the
    # leading modes sit below a 1e-3 relative tolerance at this h
    fe = fields.make_sine_family(d, max(indices), 1.0, 2.0)
    mesh = fem.make_mesh(d, 7)
    for i in indices:
        nodal = fe.ell[i](mesh.nodes)
        numeric = fem.dual_norm_numeric(mesh, nodal)
        assert numeric == pytest.approx(float(fe.c[i]), rel=1e-3)
    numeric_bar = fem.dual_norm_numeric(mesh, fe.lbar(mesh.nodes))
    assert numeric_bar == pytest.approx(fe.c_bar, rel=1e-3)


def test_tabulated_family_matches_paper_family():
    mesh = fem.make_mesh(2, 6)
    ref = fields.make_sine_family(2, 2, 1.0, 2.0)
    ell_nodal = np.array([f(mesh.nodes) for f in ref.ell])
    a_nodal = np.array([f(mesh.nodes) for f in ref.a_basis])
    tab = fields.make_tabulated_family(mesh, ref.lbar(mesh.nodes), ell_nodal,
                                       a_nodal)
    assert tab.family == "tabulated"
    assert tab.ell0_inf == pytest.approx(1.0)
    np.testing.assert_allclose(tab.b, ref.b, rtol=2e-2)
    np.testing.assert_allclose(tab.c, ref.c, rtol=1e-2)
    assert np.all(tab.b <= tab.b_hat + 1e-15)


def test_tabulated_rejects_nonpositive_ell0():
    mesh = fem.make_mesh(1, 3)
    n = mesh.nodes.shape[0]
    with pytest.raises(ConfigError):
        fields.make_tabulated_family(mesh, np.ones(n),
                                     np.zeros((1, n)), np.zeros((0, n)))
