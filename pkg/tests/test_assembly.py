import numpy as np
import pytest

from hpdg import DgConfig, DgSpace, Material, ProblemData, assemble, bilinear_apply, build_structured, residual_flux
from hpdg.analysis import energy_norm_squared
from hpdg.assembly import assemble_matrix, assemble_rhs, local_face_matrices, local_volume_matrix
from hpdg.cases import builtin_case_paper
from hpdg.linsolve import solve
from hpdg.mesh import classify_boundary, mesh_from_triangles
from oracles import _shape, dense_p1_system, two_triangle_mesh

PAPER = Material(0.03, 0.035)
REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
rng = np.random.default_rng(11)


def rigid_modes(space):
    return [space.interpolate(f) for f in (
        lambda x, y: np.stack(np.broadcast_arrays(np.ones_like(x), 0 * x), -1),
        lambda x, y: np.stack(np.broadcast_arrays(0 * x, np.ones_like(x)), -1),
        lambda x, y: np.stack([-y, x], -1),
    )]


def test_constant_strain_oracle_and_kernel():
    K = local_volume_matrix(REF, Material(0.0, 0.5), 1)
    oracle = np.zeros((6, 6))
    for i in range(6):
        for j in range(6):
            _, Gi = _shape(REF, i // 2, i % 2, (0.2, 0.2))
            _, Gj = _shape(REF, j // 2, j % 2, (0.2, 0.2))
            ei, ej = 0.5 * (Gi + Gi.T), 0.5 * (Gj + Gj.T)
            oracle[i, j] = 0.5 * np.sum(ej * ei)  # area 1/2, sigma = eps for lambda = 0, mu = 1/2
    np.testing.assert_allclose(K, oracle, atol=1e-14)
    assert np.sum(np.linalg.eigvalsh(K) < 1e-12) == 3
    translation = np.tile([1.0, 0.0], 3)
    assert np.abs(K @ translation).max() < 1e-12


@pytest.mark.parametrize("r", [1, 2, 3])
def test_volume_matrix_scale_invariant(r):
    xy = np.array([[0.1, 0.2], [1.3, 0.4], [0.5, 1.1]])
    K1 = local_volume_matrix(xy, PAPER, r)
    for t in (2.0, 4.0):
        np.testing.assert_allclose(local_volume_matrix(t * xy, PAPER, r), K1, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("r", [1, 2])
@pytest.mark.parametrize("alpha", [-1, 0, 1])
def test_rigid_modes_in_kernel_without_dirichlet(r, alpha):
    mesh = classify_boundary(build_structured(1), lambda x, y: False)
    space = DgSpace(mesh, r)
    A = assemble_matrix(space, DgConfig(alpha=alpha, degree=r, gamma=125.0), PAPER)
    for z in rigid_modes(space):
        assert np.abs(A @ z).max() < 1e-11 * abs(A).max()


def test_face_penalty_of_constant_jump():
    verts, tris = two_triangle_mesh()
    mesh = mesh_from_triangles(verts, tris)
    cfg = DgConfig(alpha=1, beta=125.0, degree=1)
    space = DgSpace(mesh, 1)
    e = int(mesh.interior_edges[0])
    pp, pm, mp, mm = local_face_matrices(space, cfg, PAPER, e)
    w = np.tile([1.0, 0.0], 3)
    expected = 125.0 / mesh.h_max * mesh.edge_length[e]
    assert np.isclose(w @ pp @ w, expected, rtol=1e-13)
    assert np.isclose(w @ pm @ w, -expected, rtol=1e-13)


def test_zero_data_gives_zero_rhs():
    space = DgSpace(build_structured(1), 2)
    assert not np.any(assemble_rhs(space, DgConfig(degree=2), ProblemData(PAPER)))


@pytest.mark.parametrize("level", [1, 2, 3])
def test_sipg_matrix_symmetric(level):
    A = assemble_matrix(DgSpace(build_structured(level), 1), DgConfig(alpha=-1, gamma=125.0), PAPER)
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()


def test_alpha_enters_linearly():
    space = DgSpace(build_structured(1), 2)
    A = {a: assemble_matrix(space, DgConfig(alpha=a, degree=2), PAPER) for a in (-1, 0, 1)}
    assert abs(A[0] - 0.5 * (A[-1] + A[1])).max() < 1e-12 * abs(A[0]).max()
    assert abs(A[1] - A[1].T).max() > 1e-6 * abs(A[1]).max()


@pytest.mark.parametrize("alpha", [-1, 0, 1])
@pytest.mark.parametrize("d", [1, 3])
def test_two_triangle_matches_dense_oracle(alpha, d):
    verts, tris = two_triangle_mesh()
    mat = Material(0.0, 0.5)
    g = lambda x, y: np.stack(np.broadcast_arrays(x + 2 * y, 3 * x - y), -1)
    f = lambda x, y: np.stack(np.broadcast_arrays(np.ones_like(x), -2.0 * np.ones_like(x)), -1)
    A0, b0 = dense_p1_system(verts, tris, 0.0, 0.5, alpha, 125.0, 0.0, d, g_D=g, f_const=(1.0, -2.0))
    sys_ = assemble(mesh_from_triangles(verts, tris), DgConfig(alpha=alpha, superpenalty_d=d),
                    ProblemData(mat, f=f, g_D=g))
    A = sys_.matrix.toarray()
    assert A.shape == (12, 12)
    assert np.abs(A - A0).max() <= 1e-11 * np.abs(A0).max()
    assert np.abs(sys_.rhs - b0).max() <= 1e-11 * np.abs(b0).max()


def test_dense_oracle_with_normal_penalty():
    verts, tris = two_triangle_mesh()
    A0, _ = dense_p1_system(verts, tris, 0.03, 0.035, 1, 125.0, 125.0, 1)
    A = assemble_matrix(DgSpace(mesh_from_triangles(verts, tris), 1), DgConfig(alpha=1, gamma=125.0), PAPER)
    assert np.abs(A.toarray() - A0).max() <= 1e-11 * np.abs(A0).max()


@pytest.mark.parametrize("alpha", [-1, 0, 1])
def test_bilinear_apply_matches_matrix(alpha):
    space = DgSpace(build_structured(1), 2)
    cfg = DgConfig(alpha=alpha, degree=2, gamma=50.0, superpenalty_d=3)
    A = assemble_matrix(space, cfg, PAPER)
    w, v = rng.standard_normal((2, space.n_dof))
    assert np.isclose(bilinear_apply(space, cfg, PAPER, w, v), v @ (A @ w), rtol=1e-11)
    assert bilinear_apply(space, cfg, PAPER, 0 * w, 0 * v) == 0.0


@pytest.mark.parametrize("r", [1, 2])
@pytest.mark.parametrize("gamma", [0.0, 125.0])
def test_coercivity_surrogate(r, gamma):
    space = DgSpace(build_structured(2), r)
    W = rng.standard_normal((100, space.n_dof))
    for alpha in (-1, 0, 1):
        A = assemble_matrix(space, DgConfig(alpha=alpha, degree=r, gamma=gamma), PAPER)
        assert np.all(np.einsum("ki,ki->k", W, (A @ W.T).T) > 0)


def test_boundedness_surrogate():
    ratios = []
    for level in (1, 2, 3):
        space = DgSpace(build_structured(level), 1)
        cfg = DgConfig(alpha=1)
        A = assemble_matrix(space, cfg, PAPER)
        W, V = rng.standard_normal((2, 200, space.n_dof))
        nw = np.array([energy_norm_squared(space, cfg, PAPER, w) for w in W])
        nv = np.array([energy_norm_squared(space, cfg, PAPER, v) for v in V])
        ratios.append(np.max(np.abs(np.einsum("ki,ki->k", V, (A @ W.T).T)) / np.sqrt(nw * nv)))
    print("boundedness ratios by level:", ratios)
    assert all(b <= 1.1 * a for a, b in zip(ratios, ratios[1:]))


def test_adjoint_consistency():
    case = builtin_case_paper()
    mesh = build_structured(2)
    space = DgSpace(mesh, 4)
    defects = {}
    for alpha in (-1, 0, 1):
        cfg = DgConfig(alpha=alpha, degree=4)
        s = assemble(mesh, cfg, case.problem(), space=space)
        u = space.interpolate(case.u)
        V = rng.standard_normal((20, space.n_dof))
        norms = np.sqrt([energy_norm_squared(space, cfg, PAPER, v) for v in V])
        # B(v, u) - (f, v) with g_D = 0
        defects[alpha] = np.max(np.abs(V @ (s.matrix.T @ u) - V @ s.rhs) / norms)
    print("adjoint defects:", defects)
    assert defects[-1] < 1e-6
    assert min(defects[0], defects[1]) > 100 * defects[-1]


def test_residual_flux_zero_problem():
    space = DgSpace(build_structured(1), 1)
    out = residual_flux(space, DgConfig(), ProblemData(PAPER), np.zeros(space.n_dof))
    assert out.shape == (space.mesh.n_elements, 2) and not np.any(out)


@pytest.mark.parametrize("method, gamma", [("sipg", 0.0), ("nipg", 125.0), ("iipg", 125.0)])
def test_local_equilibrium(method, gamma):
    case = builtin_case_paper()
    mesh = build_structured(2)
    cfg = DgConfig.for_method(method, gamma=gamma)
    space = DgSpace(mesh, 1)
    s = assemble(mesh, cfg, case.problem(), space=space)
    x, rep = solve(s, symmetric_hint=cfg.alpha == -1, tol=1e-10, method="auto")
    assert rep.converged
    defect = residual_flux(space, cfg, case.problem(), x)
    assert np.linalg.norm(defect, axis=1).max() <= 1e-7
    x2 = x.copy()
    x2[7] += 1e-3
    moved = np.linalg.norm(residual_flux(space, cfg, case.problem(), x2), axis=1).max()
    assert 1e-6 < moved < 1.0
    assert np.allclose(residual_flux(space, cfg, case.problem(), x, element=3), defect[3])
