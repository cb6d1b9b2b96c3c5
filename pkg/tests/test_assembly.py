import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostmpm import assembly as asm
from ghostmpm.basis import evaluate, smpm_basis
from ghostmpm.grid import build_grid
from ghostmpm.kinematics import trial_stress
from ghostmpm.mpoints import Material, MaterialPoints

MAT = Material(1000.0, 0.3, 2.0)


def _gauss_points(h):
    g = np.array([-1.0, 1.0]) / np.sqrt(3.0)
    xi = 0.5 * h * (1 + g)
    X, Y = np.meshgrid(xi, xi)
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def _textbook_quad_stiffness(E, nu, h):
    """Plane-strain bilinear square, 2x2 Gauss, dofs (u1, v1, ..., u4, v4) CCW from (0, 0)."""
    c = E / ((1 + nu) * (1 - 2 * nu))
    D = c * np.array([[1 - nu, nu, 0], [nu, 1 - nu, 0], [0, 0, (1 - 2 * nu) / 2]])
    xi_n = np.array([-1, 1, 1, -1])
    eta_n = np.array([-1, -1, 1, 1])
    K = np.zeros((8, 8))
    for xi in (-1 / np.sqrt(3), 1 / np.sqrt(3)):
        for eta in (-1 / np.sqrt(3), 1 / np.sqrt(3)):
            dNdxi = 0.25 * xi_n * (1 + eta * eta_n)
            dNdeta = 0.25 * eta_n * (1 + xi * xi_n)
            dNdx, dNdy = dNdxi * 2 / h, dNdeta * 2 / h
            B = np.zeros((3, 8))
            B[0, 0::2] = dNdx
            B[1, 1::2] = dNdy
            B[2, 0::2] = dNdy
            B[2, 1::2] = dNdx
            K += B.T @ D @ B * (h * h / 4)
    return K


@pytest.mark.parametrize("h", [1.0, 0.25])
def test_filled_element_matches_textbook_stiffness(h):
    g = build_grid((0, 0), h, 1, 1)
    pts = MaterialPoints.create(_gauss_points(h), h * h / 4, (h / 4, h / 4), MAT.rho0)
    res, _, J = trial_stress(pts, [MAT], np.tile(np.eye(2), (4, 1, 1)))
    K = asm.assemble_stiffness(g, smpm_basis(g, pts.x), res.a, pts.V).toarray()
    ccw = [0, 1, 3, 2]  # element-local node order in grid node ids
    dofs = np.ravel([[2 * k, 2 * k + 1] for k in ccw])
    ref = _textbook_quad_stiffness(MAT.E, MAT.nu, h)
    assert np.abs(K[np.ix_(dofs, dofs)] - ref).max() <= 1e-10 * np.abs(ref).max()


def test_single_centre_point_mass():
    g = build_grid((0, 0), 1.0, 1, 1)
    b = smpm_basis(g, [[0.5, 0.5]])
    M = asm.assemble_mass(g, b, np.array([1.0])).toarray()
    assert np.allclose(M[0::2, 0::2], 1 / 16)
    assert np.allclose(M[0::2, 1::2], 0.0)
    assert np.allclose(asm.assemble_lumped_mass(g, b, np.array([1.0])), 0.25)


def test_uniform_stress_internal_force():
    g = build_grid((0, 0), 1.0, 1, 1)
    n = 4
    sigma = np.zeros((n, 3, 3))
    sigma[:, 1, 1] = -1.0
    f = asm.assemble_internal_force(g, smpm_basis(g, _gauss_points(1.0)), sigma, np.full(n, 0.25))
    fy = f[1::2]
    assert np.allclose(fy[[0, 1]], 0.5, atol=1e-14)
    assert np.allclose(fy[[2, 3]], -0.5, atol=1e-14)
    assert np.allclose(f[0::2], 0.0, atol=1e-14)


def test_zero_stress_zero_force():
    g = build_grid((0, 0), 1.0, 2, 2)
    b = smpm_basis(g, [[0.3, 0.4], [1.6, 1.1]])
    assert np.all(asm.assemble_internal_force(g, b, np.zeros((2, 3, 3)), np.ones(2)) == 0)


def _random_gimp_cloud(rng, n=25):
    g = build_grid((0, 0), 0.5, 6, 6)
    x = rng.uniform(0.6, 2.4, size=(n, 2))
    pts = MaterialPoints.create(x, rng.uniform(0.01, 0.05, n), rng.uniform(0.05, 0.3, (n, 2)), rng.uniform(1, 5, n))
    return g, pts, evaluate(g, pts, "gimp")


def _dense_oracle(g, b, m, a, V):
    M = np.zeros((g.n_dofs, g.n_dofs))
    K = np.zeros((g.n_dofs, g.n_dofs))
    for p in range(b.n_points):
        c = b.contribution(p)
        for ia, na in enumerate(c.nodes):
            for ib, nb in enumerate(c.nodes):
                for d in range(2):
                    M[2 * na + d, 2 * nb + d] += m[p] * c.S[ia] * c.S[ib]
                for i in range(2):
                    for k in range(2):
                        K[2 * na + i, 2 * nb + k] += V[p] * sum(
                            c.gradS[ia, j] * a[p, i, j, k, l] * c.gradS[ib, l] for j in range(2) for l in range(2)
                        )
    return M, K


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_assembly_matches_dense_loops(seed):
    rng = np.random.default_rng(seed)
    g, pts, b = _random_gimp_cloud(rng)
    a = rng.normal(size=(len(pts), 2, 2, 2, 2))
    M_ref, K_ref = _dense_oracle(g, b, pts.m, a, pts.V)
    M = asm.assemble_mass(g, b, pts.m).toarray()
    K = asm.assemble_stiffness(g, b, a, pts.V).toarray()
    assert np.abs(M - M_ref).max() <= 1e-13 * np.abs(M_ref).max()
    assert np.abs(K - K_ref).max() <= 1e-12 * np.abs(K_ref).max()

    # reducing after assembly equals picking the same rows of the dense oracle
    fixed = np.zeros(g.n_dofs, dtype=bool)
    fixed[rng.choice(g.n_dofs, 5, replace=False)] = True
    dm = asm.DofMap.build(g.n_dofs, b.active_nodes(), fixed)
    assert np.allclose(dm.reduce_matrix(M).toarray(), M_ref[np.ix_(dm.free, dm.free)], rtol=0, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_mass_and_force_identities(seed):
    rng = np.random.default_rng(seed)
    g, pts, b = _random_gimp_cloud(rng)
    M = asm.assemble_mass(g, b, pts.m)
    ML = asm.assemble_lumped_mass(g, b, pts.m)
    total = pts.m.sum()
    for ax in (0, 1):
        e = np.zeros(g.n_dofs)
        e[ax::2] = 1.0
        assert e @ M @ e == pytest.approx(total, rel=1e-12)
        assert ML[ax::2].sum() == pytest.approx(total, rel=1e-12)
    assert np.all(ML >= 0)
    assert abs(M - M.T).max() <= 1e-14 * abs(M).max()
    # lumped mass is the row sum of the consistent mass
    assert np.allclose(np.asarray(M.sum(axis=1)).ravel(), ML, rtol=1e-12)
    f = asm.assemble_body_force(g, b, pts.m, (0.0, -9.81))
    assert f[1::2].sum() == pytest.approx(-9.81 * total, rel=1e-12)
    assert abs(f[0::2].sum()) < 1e-12


def test_elastic_stiffness_is_symmetric():
    rng = np.random.default_rng(3)
    g, pts, b = _random_gimp_cloud(rng)
    res, _, _ = trial_stress(pts, [MAT], np.tile(np.eye(2), (len(pts), 1, 1)))
    K = asm.assemble_stiffness(g, b, res.a, pts.V)
    assert abs(K - K.T).max() <= 1e-10 * abs(K).max()


def test_interpolation_of_linear_field():
    rng = np.random.default_rng(7)
    g, pts, b = _random_gimp_cloud(rng)
    A = np.array([[0.2, -0.5], [1.0, 0.3]])
    u = (g.node_coords @ A.T).ravel()
    assert np.allclose(asm.interpolate(b, u), pts.x @ A.T, atol=1e-12)
    assert np.allclose(asm.interpolate_gradient(b, u), np.broadcast_to(A, (len(pts), 2, 2)), atol=1e-12)


def test_dofmap_roundtrip_and_fixed():
    fixed = np.zeros(12, dtype=bool)
    fixed[[0, 5]] = True
    dm = asm.DofMap.build(12, [0, 2, 3], fixed)
    assert list(dm.free) == [1, 4, 6, 7]
    v = np.arange(12.0)
    assert np.array_equal(dm.reduce_vector(v), [1, 4, 6, 7])
    back = dm.expand(dm.reduce_vector(v))
    assert np.array_equal(back[dm.free], v[dm.free])
    assert np.all(back[dm.index < 0] == 0)
