import numpy as np
import pytest
import scipy.sparse as sp

from phbox import bc as bcmod
from phbox.bc import BoundaryConditionSpec, clamp_spec, impedance_spec, random_weighted_spd
from phbox.errors import ClampViolated, NotDissipative, NotSPD
from phbox.models import (colligation_for, maxwell_system, mindlin_system,
                          wave_system)
from phbox.sbpgrid import box_grid
from phbox.system import (add_dissipation, assemble_colligation, full_clamp_skew_defect,
                          generator_check, power_balance_residual, reduced_generator,
                          scattering_transform)


def clamped_basis(col):
    cons = bcmod.ConstraintSystem(C=col.clamp, n_clamp=col.clamp.shape[0], n_input=0,
                                  selector=sp.csr_matrix((col.clamp.shape[0], 0)),
                                  pruned_rows=0, block_size=col.S.m)
    return bcmod.kernel_basis(cons, col.mx_blocks)


@pytest.fixture(scope="module")
def wave_col():
    return colligation_for(wave_system(2), box_grid([9, 9]), gamma1_faces=[1])


@pytest.fixture(scope="module")
def wave_basis(wave_col):
    return clamped_basis(wave_col)


def test_state_gram_is_spd_with_density_floor(wave_col):
    from phbox.sbpgrid import volume_weights

    M = wave_col.M_X.toarray()
    assert np.max(np.abs(M - M.T)) <= 1e-15
    floor = 0.5 * wave_col.H.c * volume_weights(wave_col.grid).min()
    assert np.linalg.eigvalsh(M)[0] >= floor * (1 - 1e-10)


def test_wave_boundary_maps_extract_velocity_and_stress():
    ex = wave_system(2, rho=2.0, young=3.0)
    grid = box_grid([5, 5])
    col = colligation_for(ex, grid, gamma1_faces=[1])   # face nu = +e1
    rng = np.random.default_rng(0)
    x = rng.standard_normal(col.ndof)
    xb = x.reshape(grid.num_nodes, 3)
    g1 = col.split.gamma1_entries
    nodes = col.traces.faces.node[g1]
    # (H x)_1 = v = x_1 / rho, (H x)_2 = T grad w = 3 x_(2:)
    assert np.allclose(col.G @ x, xb[nodes, 0] / 2.0, atol=1e-13)
    assert np.allclose(col.K @ x, 3.0 * xb[nodes, 1], atol=1e-13)


def test_maxwell_conormal_output_carries_r():
    ex = maxwell_system(r=2.0)
    grid = box_grid([3, 3, 3])
    col = colligation_for(ex, grid, gamma1_faces=[5])   # nu = +e3
    rng = np.random.default_rng(1)
    x = rng.standard_normal(col.ndof)
    xb = x.reshape(grid.num_nodes, 6)
    g1 = col.split.gamma1_entries
    nodes = col.traces.faces.node[g1]
    Kx = (col.K @ x).reshape(-1, 3)
    for j, p in enumerate(nodes):
        hfield = xb[p, 3:]          # mu = 1: co-state H equals B
        assert np.allclose(Kx[j], 2.0 * np.cross([0.0, 0, 1], hfield), atol=1e-12)


def test_mindlin_boundary_rotation_is_orthogonal():
    ex = mindlin_system()
    grid = box_grid([5, 5])
    col = colligation_for(ex, grid, gamma1_faces=[0, 1, 2, 3])
    for T in col.T_blocks:
        assert np.max(np.abs(T.T @ T - np.eye(3))) <= 1e-15


def test_scattering_transform_algebraic_identity(wave_col, wave_basis):
    rng = np.random.default_rng(2)
    cs = scattering_transform(wave_col, 2.0 * np.eye(1))
    Gdd = wave_col.boundary_gram
    for _ in range(20):
        x = rng.standard_normal(wave_col.ndof)
        lhs = cs.input_norm_sq(cs.G @ x) - cs.output_norm_sq(cs.K @ x)
        rhs = 2.0 * float((wave_col.G @ x) @ (Gdd @ (wave_col.K @ x)))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_scattering_transform_kernel_state(wave_col):
    from scipy.linalg import null_space

    cs = scattering_transform(wave_col, 2.0 * np.eye(1))
    NS = null_space(wave_col.K.toarray())
    rng = np.random.default_rng(3)
    x = NS @ rng.standard_normal(NS.shape[1])
    assert np.max(np.abs(wave_col.K @ x)) <= 1e-10
    u_sq = cs.input_norm_sq(cs.G @ x)
    y_sq = cs.output_norm_sq(cs.K @ x)
    Gx = wave_col.G @ x
    half_r = 0.5 * float(Gx @ (wave_col.boundary_gram @ (Gx / 2.0)))
    assert u_sq == pytest.approx(y_sq, rel=1e-12)
    assert u_sq == pytest.approx(half_r, rel=1e-12)


def test_scattering_transform_requires_spd():
    col = colligation_for(wave_system(2), box_grid([5, 5]), gamma1_faces=[1])
    with pytest.raises(NotSPD):
        scattering_transform(col, -np.eye(1))
    with pytest.raises(NotSPD):
        scattering_transform(col, np.array([[0.0]]))


def test_scattering_transform_inverts(wave_col):
    cs = scattering_transform(wave_col, 2.0 * np.eye(1))
    # G = (G' + K')/sqrt(2), K = R^{-1} (G' - K')/sqrt(2)
    s = 1.0 / np.sqrt(2.0)
    G_back = s * (cs.G + cs.K)
    K_back = 0.5 * s * (cs.G - cs.K)
    assert np.max(np.abs((G_back - wave_col.G).toarray())) <= 1e-12
    assert np.max(np.abs((K_back - wave_col.K).toarray())) <= 1e-12


def test_power_balance_zero_state(wave_col):
    cs = scattering_transform(wave_col)
    assert power_balance_residual(cs, np.zeros(cs.ndof)) == 0.0


def test_power_balance_scattering_random_clamped(wave_col, wave_basis):
    cs = scattering_transform(wave_col)
    rng = np.random.default_rng(4)
    for _ in range(50):
        x = wave_basis @ rng.standard_normal(wave_basis.shape[1])
        scale = max(1.0, cs.input_norm_sq(cs.G @ x) + cs.output_norm_sq(cs.K @ x))
        assert abs(power_balance_residual(cs, x)) <= 1e-11 * scale


def test_power_balance_rejects_unclamped(wave_col):
    rng = np.random.default_rng(5)
    x = rng.standard_normal(wave_col.ndof)
    with pytest.raises(ClampViolated):
        power_balance_residual(wave_col, x)


def test_impedance_balance_identity(wave_col, wave_basis):
    rng = np.random.default_rng(6)
    Gdd = wave_col.boundary_gram
    for _ in range(30):
        x = wave_basis @ rng.standard_normal(wave_basis.shape[1])
        lhs = 2.0 * float((wave_col.Lp @ x) @ (wave_col.M_X @ x))
        rhs = 2.0 * float((wave_col.G @ x) @ (Gdd @ (wave_col.K @ x)))
        scale = max(1.0, abs(lhs), abs(rhs))
        assert abs(lhs - rhs) <= 1e-11 * scale


def test_add_dissipation_zero_noop(wave_col):
    col2 = add_dissipation(wave_col, lambda z: np.zeros((3, 3)))
    assert (col2.Lp - wave_col.Lp).nnz == 0


def test_add_dissipation_maxwell_accepted_positive_rejected():
    ex = maxwell_system(g=0.5)
    grid = box_grid([3, 3, 3])
    col = colligation_for(ex, grid)
    col_d = add_dissipation(col, ex.dissipation)
    assert col_d.J_block is not None
    with pytest.raises(NotDissipative):
        add_dissipation(col, lambda z: np.eye(6))


def test_dissipative_maxwell_balance_nonpositive():
    ex = maxwell_system(g=0.3)
    grid = box_grid([3, 3, 3])
    col = colligation_for(ex, grid, gamma1_faces=[5])
    col = add_dissipation(col, ex.dissipation)
    cs = scattering_transform(col)
    Vb = clamped_basis(cs)
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = Vb @ rng.standard_normal(Vb.shape[1])
        scale = max(1.0, cs.input_norm_sq(cs.G @ x) + cs.output_norm_sq(cs.K @ x))
        assert power_balance_residual(cs, x) <= 1e-11 * scale


def test_generator_check_impedance_spd_passes(wave_col):
    rng = np.random.default_rng(8)
    M = random_weighted_spd(wave_col.boundary_gram.toarray(), rng)
    rep = generator_check(wave_col, impedance_spec(M))
    assert rep.dissipative
    assert rep.contraction_ok
    assert rep.skew_defect_full_clamp <= 1e-11
    assert all(n <= 1.0 + 1e-10 for n in rep.expm_norms)


def test_generator_check_antidissipative_fails(wave_col):
    spec = BoundaryConditionSpec(kind="V", W1=np.eye(wave_col.b),
                                 W2=-np.eye(wave_col.b))
    rep = generator_check(wave_col, spec)
    assert not rep.dissipative


def test_full_clamp_skewness_wave_and_mindlin():
    col = colligation_for(wave_system(2), box_grid([9, 9]))
    assert full_clamp_skew_defect(col) <= 1e-11
    colm = colligation_for(mindlin_system(), box_grid([7, 7]))
    assert full_clamp_skew_defect(colm) <= 1e-11


def test_p0_no_contribution_to_balance():
    # Mindlin has P0 != 0; zeroing it must not change the power balance
    from phbox.algebra import build_block_tuple
    from phbox.models import mindlin_tuple

    grid = box_grid([5, 5])
    ex = mindlin_system()
    col = colligation_for(ex, grid, gamma1_faces=[1])
    S0 = build_block_tuple(mindlin_tuple())
    H = ex.density_spec(grid)
    col0 = assemble_colligation(S0, H, grid, col.split, T=ex.boundary_T)
    Vb = clamped_basis(col)
    rng = np.random.default_rng(9)
    for _ in range(10):
        x = Vb @ rng.standard_normal(Vb.shape[1])
        b1 = 2.0 * float((col.Lp @ x) @ (col.M_X @ x))
        b0 = 2.0 * float((col0.Lp @ x) @ (col0.M_X @ x))
        assert abs(b1 - b0) <= 1e-13 * max(1.0, abs(b1))


def test_reduced_generator_matches_projected_operator(wave_col):
    cons, Vb, A_red = reduced_generator(wave_col, clamp_spec(wave_col.b))
    A = A_red.toarray() if sp.issparse(A_red) else A_red
    Vd = Vb.toarray()
    direct = Vd.T @ (wave_col.M_X @ (wave_col.Lp @ Vd))
    assert np.max(np.abs(A - direct)) <= 1e-12
