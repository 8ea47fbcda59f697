import math

import numpy as np
import pytest

from tfac.enums import StepperMode
from tfac.exceptions import (
    ConfigurationError,
    InvalidParameterError,
    NewtonDivergenceError,
    SolvabilityWarning,
)
from tfac.schemas.grid import GridField, GridSpec
from tfac.schemas.mesh import AdaptiveController, TimeMesh
from tfac.schemas.solver import ModelConfig, NewtonOptions
from tfac.services.bulk_nonlinearity import potential_F
from tfac.services.diagnostics import check_dissipation, max_bound_restriction
from tfac.services.frac_kernels import KernelTable
from tfac.services.periodic_grid import random_field
from tfac.services.soe_compress import build_soe
from tfac.services.stepper import (
    MidpointHistory,
    energy_original,
    energy_variational,
    init_state,
    simulate,
    simulate_adaptive,
)
from tfac.services.time_mesh import build_graded, build_uniform


def test_midpoint_history_grows():
    history = MidpointHistory((2,), capacity=2)
    for k in range(5):
        history.append(np.full(2, float(k)))

    assert history.size == 5
    np.testing.assert_array_equal(history.view()[:, 0], np.arange(5.0))


def test_energy_of_constant_field(unforced_config, small_grid):
    u = GridField.constant(small_grid, 0.5)

    assert energy_original(u, unforced_config) == pytest.approx(
        small_grid.length**2 * potential_F(0.5)
    )


def test_initial_record(unforced_config, small_grid):
    state = init_state(random_field(small_grid, 0.1, seed=1), unforced_config)
    record = state.records[0]

    assert record.n == 0
    assert record.energy_alpha == record.energy
    assert record.max_norm <= 0.1


def test_init_state_checks_grid(unforced_config):
    other = GridSpec(length=1.0, m1=8)

    with pytest.raises(InvalidParameterError):
        init_state(GridField.constant(other, 0.0), unforced_config)


def test_fast_mode_needs_soe(unforced_config, small_grid):
    with pytest.raises(ConfigurationError):
        init_state(GridField.constant(small_grid, 0.0), unforced_config, StepperMode.FAST)


@pytest.mark.parametrize("value", [1.0, -1.0])
def test_pure_phase_is_a_fixed_point(unforced_config, small_grid, value):
    mesh = build_uniform(0.5, 0.1)
    state = simulate(GridField.constant(small_grid, value), mesh, unforced_config)

    np.testing.assert_allclose(state.u_now, value, atol=1e-12)
    assert all(record.newton_iters == 0 for record in state.records[1:])
    assert all(record.v_norm2 < 1e-24 for record in state.records[1:])


def test_zero_field_stays_zero(unforced_config, small_grid):
    mesh = build_graded(1.0, 10, 2.0)
    state = simulate(GridField.constant(small_grid, 0.0), mesh, unforced_config)

    assert all(record.max_norm == 0.0 for record in state.records)


def test_energy_law_holds_on_graded_mesh():
    config = ModelConfig(alpha=0.5, epsilon=0.3, grid=GridSpec(length=2.0 * math.pi, m1=16))
    mesh = build_graded(1.0, 30, 3.0)
    state = simulate(random_field(config.grid, 0.5, seed=2), mesh, config)

    assert all(check_dissipation(state.records, config.alpha))
    assert state.records[-1].energy_alpha < state.records[0].energy_alpha


def test_variational_energy_matches_records(unforced_config, small_grid, random_mesh):
    mesh = TimeMesh(random_mesh.points / random_mesh.final_time)
    state = simulate(random_field(small_grid, 0.5, seed=3), mesh, unforced_config)
    table = KernelTable(unforced_config.alpha, mesh)

    for n in (0, 5, mesh.num_steps):
        assert energy_variational(state, table, n) == pytest.approx(
            state.records[n].energy_alpha, rel=1e-12
        )


def test_variational_energy_near_alpha_one(small_grid):
    config = ModelConfig(alpha=0.999, epsilon=0.3, grid=small_grid)
    mesh = build_uniform(1.0, 0.1)
    state = simulate(random_field(small_grid, 0.5, seed=9), mesh, config)
    table = KernelTable(config.alpha, mesh)
    n = mesh.num_steps
    energy = state.records[n].energy
    memory = 0.5 * mesh.steps @ np.asarray(state.v_norms2)

    assert energy_variational(state, table, n) == pytest.approx(energy + memory, rel=1e-3)
    assert energy_variational(state, table, n) - energy == pytest.approx(memory, rel=1e-2)


def test_energy_monitor_can_be_switched_off(unforced_config, small_grid):
    state = simulate(
        random_field(small_grid, 0.5, seed=3),
        build_uniform(0.3, 0.1),
        unforced_config,
        monitor_energy=False,
    )

    assert all(record.energy_alpha is None for record in state.records[1:])
    with pytest.raises(ConfigurationError):
        check_dissipation(state.records, unforced_config.alpha)


def test_fast_and_direct_runs_agree(small_grid):
    config = ModelConfig(alpha=0.7, epsilon=0.05, grid=small_grid)
    mesh = build_graded(1.0, 40, 2.0)
    u0 = random_field(small_grid, 0.5, seed=5)
    soe = build_soe(0.7, 1e-12, 1e-4, 1.0, 2000)

    direct = simulate(u0, mesh, config)
    fast = simulate(u0, mesh, config, mode=StepperMode.FAST, soe=soe)

    np.testing.assert_allclose(fast.u_now, direct.u_now, atol=1e-8)
    assert fast.records[-1].energy_alpha == pytest.approx(
        direct.records[-1].energy_alpha, abs=1e-8
    )


def test_fast_mode_rejects_steps_below_cutoff(unforced_config, small_grid):
    soe = build_soe(0.7, 1e-8, 1e-2, 1.0, 500)

    with pytest.raises(ConfigurationError):
        simulate(
            GridField.constant(small_grid, 0.0),
            build_graded(1.0, 10, 3.0),
            unforced_config,
            mode=StepperMode.FAST,
            soe=soe,
        )


def test_fast_mode_rejects_foreign_soe(unforced_config, small_grid):
    soe = build_soe(0.4, 1e-8, 1e-4, 1.0, 500)

    with pytest.raises(ConfigurationError):
        simulate(
            GridField.constant(small_grid, 0.0),
            build_uniform(1.0, 0.1),
            unforced_config,
            mode=StepperMode.FAST,
            soe=soe,
        )


def test_caputo_form_residual_is_small(unforced_config, small_grid, random_mesh):
    state = simulate(
        random_field(small_grid, 0.5, seed=6),
        random_mesh,
        unforced_config,
        retain_u_history=True,
    )

    residuals = [record.caputo_residual for record in state.records[1:]]
    assert all(residual is not None and residual <= 1e-9 for residual in residuals)


def test_newton_iteration_cap(unforced_config, small_grid):
    options = NewtonOptions(max_iters=1)

    with pytest.raises(NewtonDivergenceError) as excinfo:
        simulate(
            random_field(small_grid, 0.9, seed=7),
            build_uniform(1.0, 0.5),
            unforced_config,
            options,
        )
    assert excinfo.value.step == 1


def test_solvability_warning(small_grid):
    config = ModelConfig(alpha=0.5, epsilon=0.05, grid=small_grid)

    with pytest.warns(SolvabilityWarning):
        simulate(GridField.constant(small_grid, 0.0), build_uniform(4.0, 4.0), config)


def test_restriction_flag(unforced_config, small_grid):
    mesh = build_uniform(1.0, 0.5)
    state = simulate(GridField.constant(small_grid, 0.0), mesh, unforced_config)
    bound = max_bound_restriction(
        mesh, 1, unforced_config.alpha, small_grid, unforced_config.epsilon
    )

    assert bound < 0.5
    assert not state.records[1].restriction_ok


def test_adaptive_run_with_constant_controller(unforced_config, small_grid):
    controller = AdaptiveController(kappa=0.0, tau_min=0.01, tau_max=0.1)
    state, mesh = simulate_adaptive(
        random_field(small_grid, 0.1, seed=8),
        build_graded(0.01, 5, 3.0),
        controller,
        1.0,
        unforced_config,
        mode=StepperMode.DIRECT,
    )

    assert mesh.num_steps == 15
    assert mesh.final_time == 1.0
    assert state.t == 1.0
    assert len(state.records) == 16
    np.testing.assert_allclose(mesh.steps[5:-1], 0.1, rtol=1e-9)


def test_adaptive_run_respects_restriction(unforced_config, small_grid):
    controller = AdaptiveController(
        kappa=0.0, tau_min=0.01, tau_max=0.5, enforce_restriction=True
    )
    state, mesh = simulate_adaptive(
        random_field(small_grid, 0.1, seed=8),
        build_graded(0.01, 5, 3.0),
        controller,
        2.0,
        unforced_config,
        mode=StepperMode.DIRECT,
    )

    tail = state.records[6:-1]
    assert tail
    assert all(record.restriction_ok for record in tail)
    assert max(record.tau for record in tail) < 0.5


def test_adaptive_run_needs_later_horizon(unforced_config, small_grid):
    controller = AdaptiveController(kappa=1.0, tau_min=0.01, tau_max=0.1)

    with pytest.raises(InvalidParameterError):
        simulate_adaptive(
            GridField.constant(small_grid, 0.0),
            build_graded(1.0, 5, 2.0),
            controller,
            0.5,
            unforced_config,
        )
