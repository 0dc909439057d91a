import numpy as np
import pytest
import scipy.sparse as sp

from phbox import bc as bcmod
from phbox.bc import clamp_spec, impedance_spec, random_weighted_spd
from phbox.errors import ClampProjectionWarning
from phbox.models import colligation_for, maxwell_system, wave_system
from phbox.sbpgrid import box_grid, volume_weights
from phbox.system import add_dissipation, scattering_transform
from phbox.timestepper import (HomogeneousStepper, SimulationConfig, energy,
                               simulate, step_forced, step_homogeneous)


def clamped_basis(col):
    cons = bcmod.ConstraintSystem(C=col.clamp, n_clamp=col.clamp.shape[0], n_input=0,
                                  selector=sp.csr_matrix((col.clamp.shape[0], 0)),
                                  pruned_rows=0, block_size=col.S.m)
    return bcmod.kernel_basis(cons, col.mx_blocks)


@pytest.fixture(scope="module")
def wave_clamped():
    return colligation_for(wave_system(2), box_grid([9, 9]))


def test_energy_zero_state(wave_clamped):
    assert energy(wave_clamped, np.zeros(wave_clamped.ndof)) == 0.0


def test_energy_constant_unit_component_is_half_measure(wave_clamped):
    # H = I on the unit square: E of the state with first component one is
    # half the quadrature total, i.e. 1/2
    x = np.zeros((wave_clamped.grid.num_nodes, 3))
    x[:, 0] = 1.0
    assert energy(wave_clamped, x.ravel()) == pytest.approx(0.5, abs=1e-13)


def test_energy_wave_state_quadrature():
    ex = wave_system(2, rho=2.0, young=3.0)
    grid = box_grid([7, 7])
    col = colligation_for(ex, grid)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((grid.num_nodes, 3))
    w = volume_weights(grid)
    # E = 1/2 sum_p w_p (x1^2 / rho + 3 |x_(2:)|^2)
    expected = 0.5 * np.sum(w * (x[:, 0] ** 2 / 2.0 + 3.0 * (x[:, 1] ** 2 + x[:, 2] ** 2)))
    assert energy(col, x.ravel()) == pytest.approx(expected, rel=1e-13)


def test_step_zero_state(wave_clamped):
    out = step_homogeneous(wave_clamped, None, np.zeros(wave_clamped.ndof), 0.01)
    assert np.array_equal(out, np.zeros(wave_clamped.ndof))


def test_homogeneous_conservation_full_clamp(wave_clamped):
    rng = np.random.default_rng(1)
    Vb = clamped_basis(wave_clamped)
    x0 = Vb @ rng.standard_normal(Vb.shape[1])
    res = simulate(wave_clamped, None, SimulationConfig(dt=0.01, t_final=3.0, x0=x0))
    assert abs(res.E[-1] - res.E[0]) <= 1e-10 * res.E[0]
    assert res.max_balance_residual() <= 1e-12 * max(1.0, res.E[0])


def test_homogeneous_monotone_decay_impedance():
    col = colligation_for(wave_system(2), box_grid([9, 9]), gamma1_faces=[1])
    rng = np.random.default_rng(2)
    M = random_weighted_spd(col.boundary_gram.toarray(), rng)
    spec = impedance_spec(M)
    Vb = clamped_basis(col)
    x0 = Vb @ rng.standard_normal(Vb.shape[1])
    res = simulate(col, spec, SimulationConfig(dt=0.01, t_final=2.0, x0=x0))
    dE = np.diff(res.E)
    assert np.all(dE <= 1e-12 * res.E[0])
    assert res.E[-1] < res.E[0]


def test_projection_warning_on_violating_state(wave_clamped):
    rng = np.random.default_rng(3)
    x0 = rng.standard_normal(wave_clamped.ndof)
    with pytest.warns(ClampProjectionWarning):
        simulate(wave_clamped, None, SimulationConfig(dt=0.1, t_final=0.2, x0=x0))


def test_reversibility_skew_case(wave_clamped):
    rng = np.random.default_rng(4)
    st = HomogeneousStepper(wave_clamped, None, 0.01)
    y = rng.standard_normal(st.dim)
    forward = st.step_reduced(y)
    back = HomogeneousStepper(wave_clamped, None, -0.01).step_reduced(forward)
    assert np.linalg.norm(back - y) <= 1e-10 * np.linalg.norm(y)


@pytest.fixture(scope="module")
def wave_scattering():
    col = colligation_for(wave_system(2), box_grid([9, 9]), gamma1_faces=[1])
    return scattering_transform(col)


def test_forced_zero_input_matches_homogeneous(wave_scattering):
    cs = wave_scattering
    spec = clamp_spec(cs.b)
    Vb = clamped_basis(cs)
    rng = np.random.default_rng(5)
    # start from a state compatible with the homogeneous constraint G' x = 0
    cons = bcmod.build_constraints(spec, cs.clamp, cs.G, cs.K, cs.S.m)
    Vfull = bcmod.kernel_basis(cons, cs.mx_blocks)
    x0 = Vfull @ rng.standard_normal(Vfull.shape[1])
    x_forced, _, _ = step_forced(cs, spec, x0, np.zeros(cs.b), 0.01)
    x_hom = step_homogeneous(cs, spec, x0, 0.01)
    assert np.linalg.norm(x_forced - x_hom) <= 1e-12 * max(1.0, np.linalg.norm(x_hom))
    del Vb


def test_forced_extended_identity_every_step(wave_scattering):
    cs = wave_scattering
    spec = clamp_spec(cs.b)
    k = cs.b

    def sig(t):
        return 0.3 * np.sin(2 * np.pi * 1.5 * t) * np.ones(k) if t < 1.0 else np.zeros(k)

    res = simulate(cs, spec, SimulationConfig(dt=0.02, t_final=2.0,
                                              x0=np.zeros(cs.ndof),
                                              mode="forced-saddle", input_signal=sig))
    scale = max(1.0, float(np.max(res.E)))
    assert res.max_balance_residual() <= 1e-10 * scale
    # energy non-increasing once the input is off (t >= 1: steps >= 50)
    dE = np.diff(res.E)
    assert np.all(dE[50:] <= 1e-12 * scale)
    assert np.max(res.E) > 0.0


def test_forced_multiplier_work_recorded(wave_scattering):
    cs = wave_scattering
    spec = clamp_spec(cs.b)

    def sig(t):
        return np.ones(cs.b)

    res = simulate(cs, spec, SimulationConfig(dt=0.05, t_final=0.5,
                                              x0=np.zeros(cs.ndof),
                                              mode="forced-saddle", input_signal=sig))
    assert res.multiplier_work.shape == res.E.shape
    assert np.any(res.multiplier_work != 0.0)


def test_simulate_zero_everything(wave_scattering):
    res = simulate(wave_scattering, clamp_spec(wave_scattering.b),
                   SimulationConfig(dt=0.1, t_final=1.0,
                                    x0=np.zeros(wave_scattering.ndof)))
    assert np.array_equal(res.E, np.zeros(11))
    assert np.array_equal(res.final_state, np.zeros(wave_scattering.ndof))


def test_simulate_maxwell_conductivity_strictly_decreasing():
    ex = maxwell_system(g=0.4)
    grid = box_grid([3, 3, 3])
    col = colligation_for(ex, grid)
    col = add_dissipation(col, ex.dissipation)
    Vb = clamped_basis(col)
    rng = np.random.default_rng(6)
    x0 = Vb @ rng.standard_normal(Vb.shape[1])
    res = simulate(col, None, SimulationConfig(dt=0.02, t_final=1.0, x0=x0))
    assert res.E[-1] < res.E[0]
    assert np.all(np.diff(res.E) <= 1e-12 * res.E[0])


def test_wave_converges_to_analytic_standing_mode():
    # w = cos(pi t) sin(pi x) solves the 1-d wave equation with dw/dt = 0 at
    # both ends; the quadrature-norm error at t = 1/2 must shrink at second
    # order, and the time-reversed solution must stay O(1) away (this is the
    # one check the exact energy identities cannot provide: they are blind to
    # a joint sign flip of the generator and the boundary maps)
    errs = []
    for N in (17, 33, 65):
        grid = box_grid([N])
        col = colligation_for(wave_system(1), grid)
        xi = grid.axis_coordinates(0)
        x0 = np.stack([np.zeros(N), np.pi * np.cos(np.pi * xi)], axis=1).ravel()
        res = simulate(col, None, SimulationConfig(dt=0.0025, t_final=0.5, x0=x0))
        target = np.stack([-np.pi * np.sin(np.pi * xi), np.zeros(N)], axis=1).ravel()
        w = np.repeat(volume_weights(grid), 2)
        errs.append(np.sqrt(np.sum(w * (res.final_state - target) ** 2)))
        if N == 33:
            reversed_target = np.stack([np.pi * np.sin(np.pi * xi),
                                        np.zeros(N)], axis=1).ravel()
            wrong = np.sqrt(np.sum(w * (res.final_state - reversed_target) ** 2))
            assert wrong > 1.0
    assert errs[0] / errs[1] > 3.0
    assert errs[1] / errs[2] > 3.0
    assert errs[2] < 2e-3


def test_forced_duplicated_rows_raise_saddle_singular(wave_scattering):
    from phbox.bc import BoundaryConditionSpec
    from phbox.errors import SaddleSingular
    from phbox.timestepper import ForcedStepper

    b = wave_scattering.b
    spec = BoundaryConditionSpec(kind="W", W1=np.vstack([np.eye(b), np.eye(b)]),
                                 W2=np.zeros((2 * b, b)))
    with pytest.raises(SaddleSingular):
        ForcedStepper(wave_scattering, spec, 0.01)


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(dt=0.0, t_final=1.0, x0=np.zeros(2))
    with pytest.raises(ValueError):
        SimulationConfig(dt=2.0, t_final=1.0, x0=np.zeros(2))
    with pytest.raises(ValueError):
        SimulationConfig(dt=0.1, t_final=1.0, x0=np.zeros(2), mode="rk4")
    with pytest.raises(ValueError):
        SimulationConfig(dt=0.1, t_final=1.0, x0=np.zeros(2),
                         input_signal=lambda t: np.zeros(1))


def test_records_shape_and_time_grid(wave_scattering):
    res = simulate(wave_scattering, clamp_spec(wave_scattering.b),
                   SimulationConfig(dt=0.25, t_final=1.0,
                                    x0=np.zeros(wave_scattering.ndof)))
    assert res.num_steps == 4
    assert np.allclose(res.t, [0.0, 0.25, 0.5, 0.75, 1.0])
