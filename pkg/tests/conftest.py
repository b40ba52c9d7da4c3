import numpy as np
import pytest

from preintqmc import estimators, fem, fields, parametric


@pytest.fixture(scope="session")
def mesh_1d_m5():
    return fem.make_mesh(1, 5)


@pytest.fixture(scope="session")
def problem_1d_trivial():
    fe = fields.make_sine_family(1, 0, 1.0, 2.0)
    return parametric.QoiProblem(fem.make_mesh(1, 4), fe, [0.5])


@pytest.fixture(scope="session")
def problem_1d_s1():
    fe = fields.make_sine_family(1, 1, 1.0, 2.0)
    return parametric.QoiProblem(fem.make_mesh(1, 5), fe, [0.5])


@pytest.fixture(scope="session")
def problem_2d_s4():
    fe = fields.make_sine_family(2, 4, 1.0, 2.0)
    return parametric.QoiProblem(fem.make_mesh(2, 4), fe,
                                 [np.sqrt(0.5), np.sqrt(0.5)])


@pytest.fixture(scope="session")
def spec_1d_s1():
    return estimators.ProblemSpec(dim=1, s=1, alpha=1.0, theta=2.0, mesh_m=5,
                                  qoi_point=(0.5,))


@pytest.fixture(scope="session")
def spec_1d_trivial():
    return estimators.ProblemSpec(dim=1, s=0, alpha=1.0, theta=2.0, mesh_m=4,
                                  qoi_point=(0.5,))
