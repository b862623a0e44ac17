# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of the forward mode AD tests
"""

import unittest

import numpy as np

from kfield.core import ad
from kfield.core.jet import JetPoint
from kfield.core.lagrangian import make_model


class DualTest(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(1234)

    def test_product(self):
        d = ad.derivative(lambda z: z[0]*z[1], [3.0, 2.0], [1.0, 0.0])
        self.assertEqual(d, 2.0)
        g = ad.gradient(lambda z: z[0]*z[1], [3.0, 2.0])
        self.assertTrue(np.array_equal(g, [2.0, 3.0]))

    def test_quadratic_gradient(self):
        g = ad.gradient(lambda z: z[0]*z[0] - 3.0*z[1], [1.0, 5.0])
        self.assertTrue(np.allclose(g, [2.0, -3.0], atol=0.0))

    def test_wave_gradient(self):
        L, _ = make_model('wave', c=1.0)
        p = JetPoint([0.0, 0.0], [0.5], [[2.0, 3.0]])
        g = ad.gradient(L.flat, p.flat())
        self.assertTrue(np.allclose(g, [0.0, 0.0, 0.0, 2.0, -3.0], atol=0.0))

    def test_wave_hessian(self):
        L, _ = make_model('wave', c=2.0)
        H = ad.hessian(L.flat, JetPoint.zeros(1, 2).flat())
        expected = np.zeros((5, 5))
        expected[3, 3] = 1.0
        expected[4, 4] = -4.0
        self.assertTrue(np.array_equal(H, expected))

    def test_third_order(self):
        T = ad.directional_derivative_of_hessian(lambda z: z[0]**3, [2.0], [1.0])
        self.assertEqual(T[0][0], 6.0)
        T = ad.directional_derivative_of_hessian(lambda z: z[0]**4, [1.0], [1.0])
        self.assertEqual(T[0][0], 24.0)
        H = ad.hessian(lambda z: z[0]**3, [2.0])
        self.assertEqual(H[0][0], 12.0)

    def test_sine_gordon_potential(self):
        L, _ = make_model('sine_gordon')
        z = JetPoint([0.0, 0.0], [np.pi/2], [[0.0, 0.0]]).flat()
        e = [0.0, 0.0, 1.0, 0.0, 0.0]
        self.assertAlmostEqual(ad.derivative(L.flat, z, e), -1.0, places=15)
        z = JetPoint([0.0, 0.0], [np.pi], [[0.0, 0.0]]).flat()
        self.assertAlmostEqual(ad.derivative(L.flat, z, e, e), 1.0, places=15)

    def test_no_perturbation_confusion(self):
        # d/dx [x * d/dy (x y)] = 2x, the inner pass sees x as a Dual of a lower tag
        def outer(z):
            return z[0]*ad.derivative(lambda w: w[0]*w[1], [z[0], 1.0], [0.0, 1.0])
        self.assertEqual(ad.derivative(outer, [3.0], [1.0]), 6.0)

    def test_batched_payloads(self):
        x = self.rng.uniform(-1.0, 1.0, 50)
        d = ad.derivative(lambda z: ad.sin(z[0])*ad.exp(z[0]), [x], [1.0])
        self.assertTrue(np.allclose(d, np.exp(x)*(np.sin(x) + np.cos(x)), rtol=1e-14, atol=1e-14))

    def test_elementary_functions(self):
        x = self.rng.uniform(0.2, 1.5, 20)
        cases = [(ad.cos, -np.sin(x)), (ad.tan, 1.0/np.cos(x)**2), (ad.log, 1.0/x), (ad.sqrt, 0.5/np.sqrt(x)),
                 (ad.sinh, np.cosh(x)), (ad.cosh, np.sinh(x)), (ad.tanh, 1.0 - np.tanh(x)**2),
                 (ad.arctan, 1.0/(1.0 + x*x))]
        for fn, expected in cases:
            d = ad.derivative(lambda z: fn(z[0]), [x], [1.0])
            self.assertTrue(np.allclose(d, expected, rtol=1e-13, atol=1e-14))

    def test_jacobian_shape(self):
        J = ad.jacobian(lambda z: [z[0]*z[1], z[0] + z[1], z[1]], [2.0, 3.0])
        self.assertEqual(J.shape, (3, 2))
        self.assertTrue(np.array_equal(J, [[3.0, 2.0], [1.0, 1.0], [0.0, 1.0]]))

    def test_constant_output(self):
        self.assertEqual(ad.derivative(lambda z: 5.0, [1.0], [1.0]), 0.0)

    def test_pack_mixed_shapes(self):
        x = self.rng.uniform(-1.0, 1.0, 7)
        packed = ad.pack([[0.0, x], [x, 2.0]])
        self.assertEqual(packed.shape, (2, 2, 7))
        self.assertTrue(np.array_equal(packed[0, 0], np.zeros(7)))
        self.assertTrue(np.array_equal(packed[1, 1], np.full(7, 2.0)))
        self.assertEqual(ad.pack([0.0, x[:, None]*np.ones(3)]).shape, (2, 7, 3))

    def test_batched_hessian_of_constant_in_t(self):
        # t enters only through 0*t, so the (t, t) entry is a plain zero
        x = self.rng.uniform(0.0, 2.0, 9)
        H = ad.hessian(lambda z: ad.exp(-z[1]*z[1]) + 0.0*z[0], [np.zeros(9), x])
        self.assertEqual(H.shape, (2, 2, 9))
        self.assertTrue(np.array_equal(H[0, 0], np.zeros(9)))
        self.assertTrue(np.allclose(H[1, 1], (4.0*x*x - 2.0)*np.exp(-x*x), rtol=1e-14, atol=1e-14))


class FiniteDifferenceTest(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(99)

    def presets(self):
        for name in ('wave', 'damped_wave', 'sine_gordon', 'harmonic', 'cross', 'degenerate'):
            L, _ = make_model(name)
            yield name, L

    def random_flat(self, L):
        return list(self.rng.uniform(-1.0, 1.0, L.dim))

    def test_gradient(self):
        h = 1e-5
        for name, L in self.presets():
            for _ in range(100):
                z = self.random_flat(L)
                g = ad.gradient(L.flat, z)
                for a in range(len(z)):
                    up, down = list(z), list(z)
                    up[a] += h
                    down[a] -= h
                    fd = (L.flat(up) - L.flat(down))/(2.0*h)
                    self.assertLessEqual(abs(g[a] - fd), 1e-5*(1.0 + abs(g[a])), name)

    def test_hessian(self):
        h = 1e-4
        for name, L in self.presets():
            for _ in range(100):
                z = self.random_flat(L)
                H = ad.hessian(L.flat, z)
                scale = 1.0 + np.max(np.abs(H))
                self.assertLessEqual(np.max(np.abs(H - H.T)), 1e-13*scale, name)
                for a in range(len(z)):
                    up, down = list(z), list(z)
                    up[a] += h
                    down[a] -= h
                    fd = (ad.gradient(L.flat, up) - ad.gradient(L.flat, down))/(2.0*h)
                    self.assertTrue(np.all(np.abs(H[a] - fd) <= 1e-5*(1.0 + np.abs(H[a]))), name)


if __name__ == '__main__':
    unittest.main()
