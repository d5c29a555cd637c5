"""State grid, objective, and the multi-start sequence search."""

import numpy as np
import pytest

from darkpulse import (DensityOperator, FieldParams, Mode, PulseSequence, TargetState,
                       compose_sequence, dark_basis, field_for_span, hs_distance,
                       initial_state_grid, optimize_sequence, purity_sweep,
                       sequence_objective)
from darkpulse.optimize import StateGrid, random_pure_states
from conftest import random_field


def small_target() -> TargetState:
    psi1 = np.array([0.6, 0.8j, 0.0], dtype=complex)
    psi2 = np.array([0.0, 0.6, 0.8], dtype=complex)
    return TargetState(weights=(0.4, 0.6), psi1=psi1, psi2=psi2)


class TestInitialStateGrid:
    def test_resolution_two_has_sixteen_states(self):
        assert len(initial_state_grid(2)) == 16

    def test_all_states_unit_norm(self):
        grid = initial_state_grid(4)
        norms = np.linalg.norm(grid.states, axis=1)
        assert np.abs(norms - 1.0).max() < 1e-12

    def test_corner_states_hit_basis_vectors(self):
        grid = initial_state_grid(3)
        assert np.allclose(grid.states[0], [1.0, 0.0, 0.0])  # chi1 = 0 corner
        targets = np.eye(3)
        for basis_vec in targets:
            overlaps = np.abs(grid.states @ basis_vec.conj())
            assert overlaps.max() > 1.0 - 1e-12

    def test_duplicates_allowed_at_degenerate_corners(self):
        grid = initial_state_grid(2)
        g_minus = np.abs(grid.states @ np.array([1.0, 0, 0])) > 1 - 1e-12
        assert g_minus.sum() >= 2  # chi1 = 0 row collapses regardless of phases

    def test_rejects_resolution_below_two(self):
        with pytest.raises(ValueError):
            initial_state_grid(1)


class TestSequenceObjective:
    def test_exact_zero_for_bright_state_and_mixed_dark_target(self, rng):
        # a single pulse sends its own bright state to the maximally mixed
        # dark state, so that target is reached exactly
        fp = random_field(rng)
        basis = dark_basis(fp)
        grid = StateGrid(states=basis.phi_perp[None, :], resolution=1)
        target = TargetState(weights=(0.5, 0.5), psi1=basis.n1, psi2=basis.n2)
        params = np.array(fp.angles)
        assert sequence_objective(params, grid, target, Mode.ALPHA) < 1e-12

    def test_nonnegative(self, rng):
        grid = initial_state_grid(2)
        target = small_target()
        for _ in range(10):
            params = rng.uniform(0, 2 * np.pi, size=8)
            assert sequence_objective(params, grid, target, Mode.ALPHA) >= 0.0

    def test_matches_per_state_composition(self, rng):
        grid = initial_state_grid(2)
        target = small_target()
        rho_f = target.density_matrix()
        params = rng.uniform(0, 2 * np.pi, size=8)
        for mode in (Mode.ALPHA, Mode.BETA):
            steps = tuple(
                FieldParams(theta=params[4 * l], phi=params[4 * l + 1],
                            mu_minus=params[4 * l + 2], mu_plus=params[4 * l + 3])
                for l in range(2))
            seq = PulseSequence(steps=steps, mode=mode)
            distances = [hs_distance(compose_sequence(DensityOperator.pure(psi), seq), rho_f)
                         for psi in grid.states]
            expected = float(np.sqrt(np.mean(np.square(distances))))
            value = sequence_objective(params, grid, target, mode)
            assert value == pytest.approx(expected, abs=1e-12)


class TestOptimizeSequence:
    def test_deterministic_for_fixed_seed(self):
        grid = initial_state_grid(3)
        target = small_target()
        kwargs = dict(restarts=2, max_iter=40, tol=1e-6)
        a = optimize_sequence(2, target, grid, seed=11, **kwargs)
        b = optimize_sequence(2, target, grid, seed=11, **kwargs)
        assert a.objective_value == b.objective_value
        assert a.iterations == b.iterations
        assert a.restart_history == b.restart_history
        for fa, fb in zip(a.sequence.steps, b.sequence.steps):
            assert fa.angles == fb.angles
        assert np.array_equal(a.per_state_distances, b.per_state_distances)

    def test_restart_history_non_increasing(self):
        grid = initial_state_grid(3)
        result = optimize_sequence(2, small_target(), grid, seed=5,
                                   restarts=4, max_iter=30, tol=1e-12)
        history = np.array(result.restart_history)
        assert np.all(np.diff(history) <= 0)

    def test_objective_value_consistent_with_distances(self):
        grid = initial_state_grid(3)
        result = optimize_sequence(2, small_target(), grid, seed=5,
                                   restarts=1, max_iter=25, tol=1e-9)
        hs = result.per_state_distances[:, 0]
        assert result.objective_value == pytest.approx(
            float(np.sqrt(np.mean(hs ** 2))), abs=1e-12)
        params = np.concatenate([fp.angles for fp in result.sequence.steps])
        assert sequence_objective(params, grid, small_target(), Mode.ALPHA) == pytest.approx(
            result.objective_value, abs=1e-12)

    def test_pinned_last_pulse_keeps_target_span(self):
        grid = initial_state_grid(3)
        target = small_target()
        result = optimize_sequence(2, target, grid, seed=3, restarts=1, max_iter=20,
                                   tol=1e-9, pin_last=True)
        pinned = field_for_span(target.psi1, target.psi2)
        assert result.sequence.steps[-1].angles == pytest.approx(pinned.angles, abs=1e-14)

    def test_rejects_bad_step_count(self):
        with pytest.raises(ValueError):
            optimize_sequence(0, small_target(), initial_state_grid(2), seed=0)


class TestPuritySweep:
    def test_empty_n_list_gives_empty_table(self):
        rows = purity_sweep((small_target().psi1, small_target().psi2), [0.5], [],
                            seed=0, grid=initial_state_grid(2))
        assert rows == []

    def test_rows_complete_with_finite_objectives(self):
        target = small_target()
        rows = purity_sweep((target.psi1, target.psi2), [0.5, 0.1], [1, 2], seed=2,
                            grid=initial_state_grid(2), restarts=1, max_iter=15)
        assert len(rows) == 4
        for row in rows:
            assert np.isfinite(row["rms_objective"])
            assert row["max_distance"] >= row["rms_objective"] - 1e-12
            assert {"p1", "n_steps", "rms_objective", "max_distance", "iterations"} <= set(row)


class TestRandomPureStates:
    def test_seeded_and_normalized(self):
        a = random_pure_states(50, [7, 1])
        b = random_pure_states(50, [7, 1])
        assert np.array_equal(a, b)
        assert np.abs(np.linalg.norm(a, axis=1) - 1.0).max() < 1e-12
