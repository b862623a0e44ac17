# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT

import unittest

import numpy as np

from kfield.core.jet import (AnalyticSection, JetPoint, ProlongedJetPoint, SecondJet, coordinate_names, jet_dim,
                             kappa, parse_point, qd_index, second_jet_of_section)


class JetTest(unittest.TestCase):
    def test_layout(self):
        self.assertEqual(jet_dim(1, 2), 5)
        self.assertEqual(qd_index(2, 2, 1, 0), 6)
        self.assertEqual(coordinate_names(1, 2), ['x1', 'x2', 'q1', 'q1_1', 'q1_2'])
        self.assertEqual(coordinate_names(1, 1, prolonged=True), ['x1', 'q1', 'v1', 'q1_1', 'v1_1'])

    def test_flat_round_trip(self):
        p = JetPoint([0.1, 0.2], [1.0, 2.0], [[3.0, 4.0], [5.0, 6.0]])
        self.assertEqual(p.flat(), [0.1, 0.2, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        self.assertEqual(JetPoint.from_flat(p.flat(), 2, 2).qd, p.qd)

    def test_shape_errors(self):
        with self.assertRaises(ValueError):
            JetPoint([0.0, 0.0], [1.0], [[1.0]])
        with self.assertRaises(ValueError):
            JetPoint.from_flat([0.0]*4, 1, 2)

    def test_kappa_examples(self):
        blocks = ([1.0], [2.0], [[3.0]], [[4.0]])
        self.assertEqual(kappa(blocks), ([1.0], [[3.0]], [2.0], [[4.0]]))
        pp = ProlongedJetPoint([0.0, 0.0], [1.0], [2.0], [[3.0, 4.0]], [[5.0, 6.0]])
        self.assertEqual(kappa(kappa(pp)), pp.blocks())
        with self.assertRaises(ValueError):
            kappa(([1.0], [2.0]))

    def test_doubled(self):
        pp = ProlongedJetPoint([0.0, 1.0], [1.0], [2.0], [[3.0, 4.0]], [[5.0, 6.0]])
        d = pp.doubled()
        self.assertEqual(d.q, [1.0, 2.0])
        self.assertEqual(d.qd, [[3.0, 4.0], [5.0, 6.0]])
        back = ProlongedJetPoint.from_doubled(d)
        self.assertEqual(back.v, [2.0])

    def test_second_jet_symmetry(self):
        base = JetPoint.zeros(1, 2)
        with self.assertRaises(ValueError):
            SecondJet(base, [[[1.0, 2.0], [3.0, 4.0]]])
        j2 = SecondJet(base, [[[1.0, 2.0], [2.0, 4.0]]])
        self.assertEqual(j2.qdd_entry(0, 1, 0), 2.0)

    def test_section_derivatives(self):
        psi = AnalyticSection(lambda z: [z[0]*z[0]*z[1]], 1, 2)
        j2 = second_jet_of_section(psi, [2.0, 3.0])
        self.assertEqual(j2.base.q, [12.0])
        self.assertTrue(np.array_equal(j2.base.qd, [[12.0, 4.0]]))
        self.assertEqual(j2.qdd_entry(0, 0, 0), 6.0)
        self.assertEqual(j2.qdd_entry(0, 0, 1), 4.0)
        self.assertEqual(j2.qdd_entry(0, 1, 1), 0.0)

    def test_parse_point(self):
        p = parse_point('q1=0.5, q1_2=3', 1, 2)
        self.assertEqual(p.flat(), [0.0, 0.0, 0.5, 0.0, 3.0])
        pp = parse_point('v1=1,v1_1=2', 1, 2, prolonged=True)
        self.assertEqual(pp.v, [1.0])
        self.assertEqual(pp.vd, [[2.0, 0.0]])
        for bad in ('q2=1', 'q1', 'q1=abc', 'v1=1'):
            with self.assertRaises(ValueError):
                parse_point(bad, 1, 2)


if __name__ == '__main__':
    unittest.main()
