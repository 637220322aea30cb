import numpy as np
import pytest

from hpdg import DgConfig, DgSpace, Material, build_structured, energy_error, l2_error, rates
from hpdg.analysis import ConvergenceTable, ErrorReport, UndefinedRateError, energy_parts, error_space
from hpdg.basis import triangle_rule
from hpdg.cases import builtin_case_linear, builtin_case_paper

PAPER = Material(0.03, 0.035)
rng = np.random.default_rng(5)


def const(c):
    return lambda x, y: np.stack(np.broadcast_arrays(c[0] + 0 * x, c[1] + 0 * x), -1)


def zero(x, y):
    return np.zeros(np.shape(x) + (2,))


def test_rate_examples():
    assert rates([0.4, 0.1])[0] == pytest.approx(2.0)
    assert rates([0.00199, 0.00049])[0] == pytest.approx(2.022, abs=5e-4)
    assert rates([0.02598, 0.01299])[0] == pytest.approx(1.000, abs=1e-12)


@pytest.mark.parametrize("bad", [[0.1], [0.1, 0.0], [0.1, -0.05], [np.nan, 0.1]])
def test_rate_errors(bad):
    with pytest.raises(UndefinedRateError):
        rates(bad)


def test_constant_field_l2():
    space = error_space(build_structured(1), 1)
    c = np.array([0.3, -0.4])
    assert l2_error(space, space.interpolate(const(c)), zero) == pytest.approx(2 * np.linalg.norm(c), rel=1e-13)


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_interpolated_polynomial_has_zero_error(r):
    case = builtin_case_linear(PAPER)
    u = lambda x, y: np.stack([x**r - y, x * y ** (r - 1)], -1)
    space = error_space(build_structured(1), r)
    assert l2_error(space, space.interpolate(u), u) <= 1e-10
    x = space.interpolate(case.u)
    total, _, _ = energy_error(space, DgConfig(degree=r), PAPER, x, case.u, case.grad)
    assert total <= 1e-9


def test_energy_volume_part_closed_form():
    case = builtin_case_linear(PAPER)
    space = error_space(build_structured(1), 1)
    _, vol, _ = energy_error(space, DgConfig(), PAPER, np.zeros(space.n_dof), case.u, case.grad)
    assert vol == pytest.approx(np.sqrt(4 * (4 * 0.03 + 4 * 0.035)), rel=1e-12)
    assert vol == pytest.approx(1.019804, abs=5e-7)


def test_energy_parts_zero_and_continuous():
    space = DgSpace(build_structured(2), 2)
    assert energy_parts(space, DgConfig(degree=2), PAPER, np.zeros(space.n_dof)) == (0.0, 0.0)
    bubble = lambda x, y: np.stack([(1 - x**2) * (1 - y**2), 0 * x], -1)  # continuous, zero on the boundary
    vol, jump = energy_parts(space, DgConfig(degree=2), PAPER, space.interpolate(bubble))
    assert vol > 0 and jump < 1e-24


def test_norm_homogeneity_and_triangle_inequality():
    space = error_space(build_structured(1), 2)
    cfg = DgConfig(degree=2)
    norm = lambda x: energy_error(space, cfg, PAPER, x, zero, lambda x_, y_: np.zeros(np.shape(x_) + (2, 2)))[0]
    for _ in range(5):
        a, b = rng.standard_normal((2, space.n_dof))
        assert norm(-3.0 * a) == pytest.approx(3.0 * norm(a), rel=1e-12)
        assert norm(a + b) <= norm(a) + norm(b) + 1e-12
        assert l2_error(space, a + b, zero) <= l2_error(space, a, zero) + l2_error(space, b, zero) + 1e-12


def test_l2_error_against_high_order_quadrature():
    case = builtin_case_paper()
    mesh = build_structured(1)
    space = error_space(mesh, 1)
    x = rng.standard_normal(space.n_dof)
    q = triangle_rule(10)
    B, x0 = mesh.jacobians()
    total = 0.0
    for k in range(mesh.n_elements):
        pts = q.points @ B[k].T + x0[k]
        lam = np.column_stack([1 - q.points.sum(axis=1), q.points])  # P1 nodal values are barycentric
        uh = lam @ x.reshape(mesh.n_elements, 3, 2)[k]
        diff = case.u(pts[:, 0], pts[:, 1]) - uh
        total += abs(np.linalg.det(B[k])) * q.weights @ np.sum(diff**2, axis=1)
    assert l2_error(space, x, case.u) == pytest.approx(np.sqrt(total), rel=1e-6)


def test_convergence_table():
    rows = [ErrorReport(l, 2.0**-l, 10 * l, 0.4 / 4**l, 0.2 / 2**l, 0, 0) for l in (1, 2, 3)]
    t = ConvergenceTable(rows, degree=1)
    np.testing.assert_allclose(t.l2_rates, [2, 2])
    np.testing.assert_allclose(t.energy_rates, [1, 1])
    assert t.expected_l2_rate == 2 and t.expected_energy_rate == 1
    assert ConvergenceTable(rows, degree=3, regularity=2.5).expected_l2_rate == 2.5
    single = ConvergenceTable(rows[:1])
    assert len(single.l2_rates) == 0 and len(single.energy_rates) == 0
