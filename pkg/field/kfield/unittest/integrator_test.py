# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of the discrete variational integrator tests
"""

import math
import unittest

import numpy as np

from kfield.core.initial_data import make_initial_data
from kfield.core.integrator import (BoundaryCondition, CellRule, CFLViolation, ForceQuadrature, GridSpec,
                                    NewtonDivergence, SchemeConfig, VariationalSimulator, convergence_study,
                                    cosimulate_doubled, del_residual, discrete_lagrangian_cell, envelope_rate,
                                    simulate, step)
from kfield.core.lagrangian import ForceDef, make_model


def sampled_state(L, data, grid):
    sim = VariationalSimulator(L, None, grid)
    state = sim.reset(data)
    for a in range(grid.nt):
        state.Q[a] = data.values(grid.t[a], state.x)
    return state


class GridTest(unittest.TestCase):
    def test_spacing(self):
        grid = GridSpec(11, 21, 1.0, 0.0, 2.0)
        self.assertAlmostEqual(grid.dt, 0.1, places=15)
        self.assertAlmostEqual(grid.dx, 0.1, places=15)
        self.assertEqual(grid.x.shape, (21, ))

    def test_rejects(self):
        for args in ((2, 10, 1.0), (10, 2, 1.0), (10, 10, 0.0), (10, 10, 1.0, 1.0, 0.0), (10.5, 10, 1.0)):
            with self.assertRaises(ValueError):
                GridSpec(*args)
        with self.assertRaises(ValueError):
            SchemeConfig(cell_rule='midpoint')
        with self.assertRaises(ValueError):
            SchemeConfig(newton_tol=0.0)


class CellTest(unittest.TestCase):
    def test_plane(self):
        L, _ = make_model('wave', c=1.0)
        dt, dx = 0.1, 0.2
        corners = ([0.3], [0.3], [0.3 + dx], [0.3 + dx])
        for rule in (CellRule.AVERAGED_CORNER, CellRule.FORWARD_CORNER):
            self.assertAlmostEqual(discrete_lagrangian_cell(L, corners, dt, dx, rule), -0.5*dt*dx, places=15)

    def test_affine_exact(self):
        L, _ = make_model('sine_gordon')
        dt, dx, alpha, beta = 0.05, 0.1, 0.7, -1.3
        q = lambda t, x: alpha*t + beta*x
        corners = ([q(0, 0)], [q(dt, 0)], [q(0, dx)], [q(dt, dx)])
        averaged = discrete_lagrangian_cell(L, corners, dt, dx)
        center = q(dt/2, dx/2)
        expected = dt*dx*(0.5*(alpha*alpha - beta*beta) - (1.0 - math.cos(center)))
        self.assertAlmostEqual(averaged, expected, places=14)

    def test_constant(self):
        L, _ = make_model('sine_gordon')
        value = discrete_lagrangian_cell(L, ([1.0], [1.0], [1.0], [1.0]), 0.1, 0.1)
        self.assertAlmostEqual(value, 0.01*(math.cos(1.0) - 1.0), places=15)


class ResidualTest(unittest.TestCase):
    def test_traveling_wave_consistency(self):
        L, _ = make_model('wave', c=1.0)
        data = make_initial_data(L, None, 'traveling_wave')
        errors = []
        for nt, nx in ((41, 41), (81, 81)):
            grid = GridSpec(nt, nx, 2.0)
            state = sampled_state(L, data, grid)
            r = del_residual(L, None, state, ((nt - 1)//2, 5))/(grid.dt*grid.dx)
            full = VariationalSimulator(L, None, grid).del_residual(state, (nt - 1)//2)/(grid.dt*grid.dx)
            self.assertAlmostEqual(r[0], full[5, 0], places=14)
            errors.append(np.max(np.abs(full)))
        self.assertLess(errors[0], 1e-2)
        self.assertTrue(3.5 < errors[0]/errors[1] < 4.5)

    def test_index_errors(self):
        L, _ = make_model('wave', c=1.0)
        grid = GridSpec(11, 11, 1.0)
        state = sampled_state(L, make_initial_data(L, None, 'standing_mode'), grid)
        sim = VariationalSimulator(L, None, grid)
        with self.assertRaises(IndexError):
            sim.del_residual(state, 0)
        with self.assertRaises(IndexError):
            sim.del_residual(state, 10)
        with self.assertRaises(IndexError):
            sim.del_residual(state, 5, 10)

    def test_solved_rows_are_stationary(self):
        L, _ = make_model('sine_gordon')
        grid = GridSpec(41, 41, 1.0)
        state, _ = simulate(L, None, make_initial_data(L, None, 'gaussian', amplitude=0.5), grid)
        sim = VariationalSimulator(L, None, grid)
        for a in (1, 20, 39):
            self.assertLessEqual(np.max(np.abs(sim.del_residual(state, a))), 1e-12)


class MarchTest(unittest.TestCase):
    def test_wave_standing_mode(self):
        L, _ = make_model('wave', c=1.0)
        data = make_initial_data(L, None, 'standing_mode')
        state, diagnostics = simulate(L, None, data, GridSpec(201, 101, 10.0))
        self.assertEqual(diagnostics['path'], 'linear')
        self.assertEqual(set(diagnostics['newton_iters']), {1})
        self.assertAlmostEqual(diagnostics['observed_cfl'], (10.0/200)/(2*math.pi/100), places=12)
        self.assertLess(diagnostics['final_l2_error'], 1e-2)
        energy = np.asarray(diagnostics['energy_series'])
        self.assertLess(np.max(np.abs(energy - energy[0]))/energy[0], 1e-2)

    def test_damped_convergence(self):
        L, F = make_model('damped_wave', c=1.0, tau=1.0)
        data = make_initial_data(L, F, 'standing_mode')
        table = convergence_study(L, F, data, 10.0, levels=((50, 25), (100, 50), (200, 100), (400, 200)))
        self.assertIsNone(table[0]['order'])
        for row in table[2:]:
            self.assertTrue(1.8 <= row['order'] <= 2.2, row)
        self.assertLess(table[-1]['error'], 1e-3)
        errors = [row['error'] for row in table]
        self.assertEqual(errors, sorted(errors, reverse=True))

    def test_energy_drift_scales_with_dt2(self):
        L, _ = make_model('wave', c=1.0)
        data = make_initial_data(L, None, 'standing_mode')
        drifts = []
        for nt, nx in ((101, 51), (201, 101), (401, 201)):
            grid = GridSpec(nt, nx, 10.0)
            state, diagnostics = simulate(L, None, data, grid)
            energy = np.asarray(diagnostics['energy_series'])
            drift = np.max(np.abs(energy - energy[0]))
            # |E(t) - E(0)| <= C dt^2 on [0, 10]
            self.assertLess(drift, 2.0*grid.dt*grid.dt)
            drifts.append(drift)
        for coarse, fine in zip(drifts, drifts[1:]):
            self.assertTrue(3.5 <= coarse/fine <= 4.5, drifts)

    def test_sine_gordon_gaussian_start(self):
        L, _ = make_model('sine_gordon')
        data = make_initial_data(L, None, 'gaussian')
        grid = GridSpec(201, 101, 2.0)
        state, diagnostics = simulate(L, None, data, grid)
        self.assertEqual(diagnostics['path'], 'newton')
        self.assertTrue(np.array_equal(state.Q[0], data.values(0.0, state.x)))
        self.assertTrue(np.all(np.isfinite(state.Q)))
        energy = np.asarray(diagnostics['energy_series'])
        self.assertLess(np.max(np.abs(energy - energy[0]))/energy[0], 5e-2)

    def test_damped_energy_decays(self):
        L, F = make_model('damped_wave', c=1.0, tau=1.0)
        state, diagnostics = simulate(L, F, make_initial_data(L, F, 'standing_mode'), GridSpec(201, 101, 4.0))
        energy = diagnostics['energy_series']
        self.assertLess(energy[-1], 0.5*energy[0])

    def test_cell_average_quadrature(self):
        L, F = make_model('damped_wave', c=1.0, tau=1.0)
        scheme = SchemeConfig(force_quadrature=ForceQuadrature.CELL_AVERAGE)
        state, diagnostics = simulate(L, F, make_initial_data(L, F, 'standing_mode'), GridSpec(201, 101, 2.0),
                                      scheme=scheme)
        self.assertLess(diagnostics['final_l2_error'], 5e-3)

    def test_forward_corner(self):
        L, _ = make_model('wave', c=1.0)
        scheme = SchemeConfig(cell_rule='forward_corner')
        state, diagnostics = simulate(L, None, make_initial_data(L, None, 'standing_mode'),
                                      GridSpec(201, 101, 2.0), scheme=scheme)
        self.assertLess(diagnostics['final_l2_error'], 1e-2)

    def test_dirichlet(self):
        L, _ = make_model('wave', c=1.0)
        data = make_initial_data(L, None, 'standing_mode')
        grid = GridSpec(101, 51, 2.0)
        state, diagnostics = simulate(L, None, data, grid, bc=BoundaryCondition.DIRICHLET)
        self.assertEqual(state.Q.shape, (101, 51, 1))
        ends = np.array([data.values(t, [0.0, 2*math.pi])[:, 0] for t in grid.t])
        self.assertTrue(np.array_equal(state.Q[:, 0, 0], ends[:, 0]))
        self.assertTrue(np.array_equal(state.Q[:, -1, 0], ends[:, 1]))
        self.assertLess(diagnostics['final_l2_error'], 1e-2)

    def test_module_step(self):
        L, F = make_model('damped_wave', c=1.0, tau=1.0)
        data = make_initial_data(L, F, 'standing_mode')
        grid = GridSpec(41, 21, 2.0)
        marched, _ = simulate(L, F, data, grid)
        state = VariationalSimulator(L, F, grid).reset(data)
        for a in range(1, grid.nt - 1):
            state, iterations = step(L, F, state, a)
            self.assertEqual(iterations, 1)
        self.assertTrue(np.allclose(state.Q, marched.Q, rtol=0.0, atol=1e-12))
        dirichlet = VariationalSimulator(L, F, grid, bc=BoundaryCondition.DIRICHLET).reset(data)
        with self.assertRaises(ValueError):
            step(L, F, dirichlet, 1)
        state, _ = step(L, F, dirichlet, 1, data=data)
        self.assertEqual(state.Q[2, 0, 0], data.values(grid.t[2], [0.0])[0, 0])

    def test_cfl_refusal(self):
        L, _ = make_model('wave', c=1.0)
        # dt/dx = 1.5
        grid = GridSpec(21, 31, 2*math.pi)
        sim = VariationalSimulator(L, None, grid)
        self.assertGreater(sim.courant, 1.0)
        with self.assertRaises(CFLViolation) as caught:
            sim.reset(make_initial_data(L, None, 'standing_mode'))
        self.assertAlmostEqual(caught.exception.courant, sim.courant, places=15)

    def test_sine_gordon_newton(self):
        L, _ = make_model('sine_gordon')
        state, diagnostics = simulate(L, None, make_initial_data(L, None, 'gaussian', amplitude=0.5),
                                      GridSpec(200, 100, 2.0))
        self.assertEqual(diagnostics['path'], 'newton')
        self.assertLessEqual(max(diagnostics['newton_iters']), 5)

    def test_newton_divergence(self):
        L, _ = make_model('sine_gordon')
        scheme = SchemeConfig(newton_max_iter=1)
        with self.assertRaises(NewtonDivergence) as caught:
            simulate(L, None, make_initial_data(L, None, 'gaussian', amplitude=2.0), GridSpec(41, 41, 1.0),
                     scheme=scheme)
        self.assertEqual(caught.exception.row, 2)

    def test_determinism(self):
        L, F = make_model('damped_wave', c=1.0, tau=1.0)
        data = make_initial_data(L, F, 'gaussian')
        first, d1 = simulate(L, F, data, GridSpec(61, 41, 1.0))
        second, d2 = simulate(L, F, data, GridSpec(61, 41, 1.0))
        self.assertTrue(np.array_equal(first.Q, second.Q))
        self.assertEqual(d1['energy_series'], d2['energy_series'])

    def test_trajectory_rows(self):
        L, _ = make_model('wave', c=1.0)
        grid = GridSpec(11, 9, 1.0)
        state, _ = simulate(L, None, make_initial_data(L, None, 'standing_mode'), grid)
        rows = list(state.trajectory_rows())
        self.assertEqual(len(rows), 11*9)
        self.assertEqual(rows[0][2], 'q1')
        self.assertEqual(rows[8][3], rows[0][3])
        self.assertEqual(len(list(state.trajectory_rows(every=2))), 6*9)


class CosimulationTest(unittest.TestCase):
    def test_q_trajectory_unchanged(self):
        L, F = make_model('damped_wave', c=1.0, tau=1.0)
        grid = GridSpec(161, 81, 2.0)
        data_q = make_initial_data(L, F, 'standing_mode')
        data_v = make_initial_data(L, F, 'standing_mode', adjoint=True)
        alone, _ = simulate(L, F, data_q, grid)
        doubled, diagnostics = cosimulate_doubled(L, F, data_q, data_v, grid)
        self.assertTrue(np.array_equal(alone.Q, doubled.Q))
        self.assertLess(diagnostics['final_l2_error_v'], 5e-2)

    def test_variation_matches_adjoint_oracle(self):
        L, F = make_model('damped_wave', c=1.0, tau=1.0)
        data_q = make_initial_data(L, F, 'standing_mode')
        data_v = make_initial_data(L, F, 'standing_mode', adjoint=True)
        errors = []
        for nt, nx in ((201, 41), (401, 81)):
            grid = GridSpec(nt, nx, 2.0)
            state, diagnostics = cosimulate_doubled(L, F, data_q, data_v, grid)
            self.assertLessEqual(diagnostics['observed_cfl'], 0.2)
            exact = data_v.oracle(grid.t[-1], state.x)
            scale = math.sqrt(grid.dx*np.sum(exact*exact))
            errors.append(diagnostics['final_l2_error_v'])
            self.assertLess(errors[-1]/scale, 2e-2)
            # no alternating column mode on top of the oracle
            self.assertLess(np.max(np.abs(np.diff(state.V[-1, :, 0] - exact[:, 0], 2))), 1e-3*scale)
        self.assertTrue(3.0 <= errors[0]/errors[1] <= 5.0, errors)

    def test_flux_force_march(self):
        L, _ = make_model('wave', c=1.0)
        F = ForceDef(1, 2, lambda x, q, qd: [-0.5*qd[0][0]], lambda x, q, qd: [[0.0, 0.1*q[0]]], linear=True)
        grid = GridSpec(61, 31, 2.0)
        data = make_initial_data(L, None, 'standing_mode')
        alone, diagnostics = simulate(L, F, data, grid)
        self.assertEqual(diagnostics['path'], 'linear')
        doubled, _ = cosimulate_doubled(L, F, data, make_initial_data(L, None, 'traveling_wave'), grid)
        self.assertTrue(np.array_equal(alone.Q, doubled.Q))
        self.assertTrue(np.all(np.isfinite(doubled.V)))
        free, _ = simulate(L, None, data, grid)
        self.assertGreater(np.max(np.abs(alone.Q - free.Q)), 1e-3)

    def test_wave_variation_is_wave(self):
        L, _ = make_model('wave', c=1.0)
        grid = GridSpec(101, 51, 2.0)
        data_q = make_initial_data(L, None, 'standing_mode')
        data_v = make_initial_data(L, None, 'traveling_wave')
        doubled, _ = cosimulate_doubled(L, None, data_q, data_v, grid)
        alone, _ = simulate(L, None, data_v, grid)
        self.assertTrue(np.allclose(doubled.V, alone.Q, rtol=0.0, atol=1e-12))

    def test_bateman_pair(self):
        L, F = make_model('damped_wave', c=1.0, tau=1.0)
        grid = GridSpec(400, 200, 10.0)
        data_q = make_initial_data(L, F, 'standing_mode')
        data_v = make_initial_data(L, F, 'standing_mode', adjoint=True)
        state, diagnostics = cosimulate_doubled(L, F, data_q, data_v, grid)
        self.assertAlmostEqual(envelope_rate(state, family='q'), -0.5, delta=0.025)
        self.assertAlmostEqual(envelope_rate(state, family='v'), 0.5, delta=0.025)

    def test_cross_energy_conserved(self):
        L, F = make_model('damped_wave', c=1.0, tau=1.0)
        data_q = make_initial_data(L, F, 'standing_mode')
        data_v = make_initial_data(L, F, 'standing_mode', adjoint=True)
        drifts = []
        for nt, nx in ((101, 51), (201, 101), (401, 201)):
            state, diagnostics = cosimulate_doubled(L, F, data_q, data_v, GridSpec(nt, nx, 2.0))
            energy = np.asarray(diagnostics['energy_series'])
            drifts.append(np.max(np.abs(energy - energy[0]))/abs(energy[0]))
        self.assertLess(drifts[1], 2e-2)
        for coarse, fine in zip(drifts, drifts[1:]):
            self.assertTrue(3.0 <= coarse/fine <= 5.0, drifts)

    def test_linearization(self):
        L, _ = make_model('sine_gordon')
        grid = GridSpec(200, 100, 2.0)
        data_q = make_initial_data(L, None, 'gaussian', amplitude=0.5)
        data_v = make_initial_data(L, None, 'gaussian', amplitude=1.0)
        base, _ = simulate(L, None, data_q, grid)
        doubled, _ = cosimulate_doubled(L, None, data_q, data_v, grid)
        errors = []
        for eps in (1e-2, 1e-3):
            moved, _ = simulate(L, None, make_initial_data(L, None, 'gaussian', amplitude=0.5 + eps), grid)
            errors.append(np.max(np.abs((moved.Q - base.Q)/eps - doubled.V)))
        self.assertTrue(7.0 <= errors[0]/errors[1] <= 13.0)


if __name__ == '__main__':
    unittest.main()
