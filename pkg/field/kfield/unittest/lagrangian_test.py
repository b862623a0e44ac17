# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of the Lagrangian, preset and prolongation tests
"""

import unittest

import numpy as np

from kfield.core import ad
from kfield.core.jet import JetPoint, ProlongedJetPoint
from kfield.core.lagrangian import (ForceDef, LagrangianDef, energy, force_prolong, make_model, momenta, prolong,
                                    prolonged_energy, regularity)


def wave_point(qt, qx, q=0.0):
    return JetPoint([0.0, 0.0], [q], [[qt, qx]])


class PresetTest(unittest.TestCase):
    def test_make_model(self):
        L, F = make_model('wave', c=2.0)
        self.assertIsNone(F)
        self.assertEqual(L.wave_speed, 2.0)
        L, F = make_model('damped_wave', c=1.0, tau=0.5)
        self.assertTrue(F.linear)
        self.assertEqual(F.F(wave_point(1.0, 0.0)), [-2.0])

    def test_make_model_rejects(self):
        with self.assertRaises(ValueError):
            make_model('heat')
        with self.assertRaises(ValueError):
            make_model('wave', speed=1.0)
        with self.assertRaises(ValueError):
            make_model('damped_wave', tau=0.0)
        with self.assertRaises(ValueError):
            make_model('wave', c=float('nan'))

    def test_force_signature(self):
        with self.assertRaises(ValueError):
            ForceDef(1, 2, lambda x, q, qd, v: [0.0])
        with self.assertRaises(ValueError):
            ForceDef(1, 2, lambda x, q: [0.0])


class DerivedQuantitiesTest(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(7)

    def random_prolonged(self):
        rng = self.rng
        return ProlongedJetPoint(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 1), rng.uniform(-1, 1, 1),
                                 rng.uniform(-1, 1, (1, 2)), rng.uniform(-1, 1, (1, 2)))

    def test_momenta(self):
        L, _ = make_model('wave', c=1.0)
        self.assertTrue(np.allclose(momenta(L, wave_point(2.0, 3.0)), [[2.0, -3.0]], atol=0.0))
        L, _ = make_model('wave', c=2.0)
        self.assertTrue(np.allclose(momenta(L, wave_point(0.0, 1.0)), [[0.0, -4.0]], atol=0.0))

    def test_energy(self):
        L, _ = make_model('wave', c=1.0)
        self.assertEqual(energy(L, wave_point(2.0, 3.0)), -2.5)
        for _ in range(20):
            p = wave_point(*self.rng.uniform(-2, 2, 2))
            self.assertAlmostEqual(energy(L, p), L(p), places=12)
        L, _ = make_model('sine_gordon')
        p = wave_point(0.0, 0.0, q=1.0)
        self.assertAlmostEqual(energy(L, p), 1.0 - np.cos(1.0), places=15)

    def test_prolong(self):
        L, _ = make_model('wave', c=1.0)
        pp = ProlongedJetPoint([0.0, 0.0], [0.0], [0.0], [[1.0, 2.0]], [[3.0, 4.0]])
        self.assertEqual(prolong(L).flat(pp.flat()), -5.0)
        self.assertEqual(prolong(L, 'local').flat(pp.flat()), -5.0)
        zero = ProlongedJetPoint([0.0, 0.0], [0.3], [0.0], [[1.0, 2.0]], [[0.0, 0.0]])
        self.assertEqual(prolong(L).flat(zero.flat()), 0.0)

    def test_prolong_linear_in_variation(self):
        L, _ = make_model('sine_gordon')
        Lt = prolong(L)
        for _ in range(20):
            pp = self.random_prolonged()
            twice = ProlongedJetPoint(pp.x, pp.q, [2*v for v in pp.v], pp.qd, [[2*w for w in row] for row in pp.vd])
            self.assertAlmostEqual(Lt.flat(twice.flat()), 2*Lt.flat(pp.flat()), places=12)

    def test_prolong_matches_directional_derivative(self):
        L, _ = make_model('sine_gordon')
        for _ in range(20):
            pp = self.random_prolonged()
            d = ad.derivative(lambda s: L.fn(pp.x, [pp.q[0] + s[0]*pp.v[0]],
                                             [[pp.qd[0][0] + s[0]*pp.vd[0][0], pp.qd[0][1] + s[0]*pp.vd[0][1]]]),
                              [0.0], [1.0])
            self.assertAlmostEqual(prolong(L).flat(pp.flat()), d, places=12)

    def test_prolong_routes_agree(self):
        for name in ('wave', 'sine_gordon', 'cross'):
            L, _ = make_model(name)
            lift, local = prolong(L, 'lift'), prolong(L, 'local')
            for _ in range(100):
                z = self.random_prolonged().flat()
                a, b = lift.flat(z), local.flat(z)
                self.assertLessEqual(abs(a - b), 1e-12*(1.0 + abs(a)), name)
        with self.assertRaises(ValueError):
            prolong(L, 'chart')

    def test_zero_force_prolong_is_prolong(self):
        for name in ('wave', 'sine_gordon'):
            L, _ = make_model(name)
            for _ in range(20):
                z = self.random_prolonged().flat()
                self.assertEqual(force_prolong(L, None).flat(z), prolong(L).flat(z))
                self.assertEqual(force_prolong(L, ForceDef.zero(1, 2)).flat(z), prolong(L).flat(z))

    def test_energy_homogeneity(self):
        L, _ = make_model('wave', c=1.5)
        for _ in range(100):
            p = JetPoint(self.rng.uniform(-1, 1, 2), self.rng.uniform(-1, 1, 1), self.rng.uniform(-2, 2, (1, 2)))
            self.assertLessEqual(abs(energy(L, p) - L(p)), 1e-12*(1.0 + abs(L(p))))

    def test_prolonged_determinant(self):
        models = [make_model('wave', c=c)[0] for c in (0.5, 1.0, 2.0)] + [make_model('sine_gordon')[0]]
        for L in models:
            for _ in range(50):
                pp = self.random_prolonged()
                report = regularity(L, JetPoint(pp.x, pp.q, pp.qd), pp.v, pp.vd)
                self.assertTrue(report['is_regular'])
                expected = report['det']**2
                self.assertLessEqual(abs(abs(report['prolonged_det']) - expected), 1e-8*expected, L.name)

    def test_force_prolong(self):
        L, F = make_model('damped_wave', c=1.0, tau=1.0)
        pp = ProlongedJetPoint([0.0, 0.0], [0.0], [5.0], [[1.0, 2.0]], [[3.0, 4.0]])
        # L~ = -5, F_1 v = -q_t v = -5
        self.assertEqual(force_prolong(L, F).flat(pp.flat()), -10.0)
        self.assertEqual(force_prolong(L, None).flat(pp.flat()), prolong(L).flat(pp.flat()))
        self.assertTrue(force_prolong(L, F).quadratic)

    def test_force_prolong_flux_pairing(self):
        L, _ = make_model('wave', c=1.0)
        F = ForceDef(1, 2, lambda x, q, qd: [0.0], lambda x, q, qd: [[q[0], 2.0*q[0]]])
        pp = ProlongedJetPoint([0.0, 0.0], [1.0], [0.0], [[0.0, 0.0]], [[3.0, 4.0]])
        self.assertEqual(force_prolong(L, F).flat(pp.flat()), -(1.0*3.0 + 2.0*4.0))

    def test_prolonged_energy(self):
        L, _ = make_model('sine_gordon')
        for _ in range(20):
            generic, local = prolonged_energy(L, self.random_prolonged())
            self.assertAlmostEqual(generic, local, places=12)

    def test_regularity(self):
        L, _ = make_model('wave', c=2.0)
        report = regularity(L, wave_point(0.3, -0.2))
        self.assertTrue(np.array_equal(report['W'], np.diag([1.0, -4.0])))
        self.assertAlmostEqual(report['det'], -4.0, places=12)
        self.assertAlmostEqual(abs(report['prolonged_det']), 16.0, places=9)
        self.assertTrue(report['is_regular'])
        L, _ = make_model('cross')
        report = regularity(L, wave_point(1.0, 1.0))
        self.assertAlmostEqual(report['det'], -1.0, places=12)
        self.assertTrue(report['is_regular'])
        L, _ = make_model('degenerate')
        self.assertFalse(regularity(L, wave_point(1.0, 1.0))['is_regular'])

    def test_custom_lagrangian(self):
        L = LagrangianDef(2, 1, lambda x, q, qd: 0.5*(qd[0][0]**2 + qd[1][0]**2) - q[0]*q[1])
        p = JetPoint([0.0], [1.0, 2.0], [[1.0], [1.0]])
        self.assertEqual(L(p), 1.0 - 2.0)
        self.assertEqual(energy(L, p), 1.0 + 2.0)


if __name__ == '__main__':
    unittest.main()
