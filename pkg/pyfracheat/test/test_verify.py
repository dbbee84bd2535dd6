import pyfracheat.verify as verify
from pyfracheat.laboratory import Laboratory
from pyfracheat.config import RunConfig
from pyfracheat.domain.model import unit_interval, ball
from pyfracheat.errors import RejectedInput
import numpy as np
import csv
import os
import tempfile
import unittest

class TestSelect(unittest.TestCase):
    def test_expand(self):
        self.assertEqual(verify.select(['all'], unit_interval()), list(verify.SUITES))
        kato = verify.select(['kato'], unit_interval())
        self.assertIn('hat_kato_decay', kato)
        self.assertTrue(all(name in verify.SUITES for name in kato))
        self.assertIn('eigen_orthonormality', verify.select(['domain'], unit_interval()))

    def test_order_and_duplicates(self):
        chosen = verify.select(['kato_lp_lq', 'kato', 'domain_lipschitz'], unit_interval())
        self.assertEqual(chosen[0], 'kato_lp_lq')
        self.assertEqual(chosen[-1], 'domain_lipschitz')
        self.assertEqual(len(chosen), len(set(chosen)))

    def test_interval_only_suites_dropped_on_balls(self):
        self.assertIn('kernel_cross_route', verify.select(['kernel'], unit_interval()))
        self.assertNotIn('kernel_cross_route', verify.select(['all'], ball(2)))
        self.assertEqual(verify.select(['kernel_cross_route'], ball(2)), [])

    def test_unknown(self):
        self.assertRaises(RejectedInput, verify.select, ['no_such_suite'], unit_interval())

    def test_claims(self):
        self.assertEqual(set(verify.CLAIMS), set(verify.SUITES))
        self.assertTrue(all(verify.CLAIMS.values()))

    def test_continuity_registered(self):
        self.assertIn('perturbed_continuity', verify.select(['perturbed'], unit_interval()))


class TestRefinement(unittest.TestCase):
    thresholds = {'refinement_ratio': 2.0, 'refinement_floor': 1e-9}

    def test_ratio(self):
        self.assertTrue(verify._refined_enough(self.thresholds, 1e-3, 4e-4))
        self.assertFalse(verify._refined_enough(self.thresholds, 1e-3, 8e-4))
        self.assertFalse(verify._refined_enough(self.thresholds, 1e-3, 2e-3))

    def test_floor(self):
        self.assertTrue(verify._refined_enough(self.thresholds, 1e-12, 1e-12))

    def test_non_finite(self):
        self.assertFalse(verify._refined_enough(self.thresholds, float('nan'), 1e-4))
        self.assertFalse(verify._refined_enough(self.thresholds, 1e-3, float('inf')))


class TestCheapSuites(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.lab = Laboratory(RunConfig.from_dict({'sweep': {'n_tuples': 50}, 'out': self.tmp.name}))

    def tearDown(self):
        self.tmp.cleanup()

    def test_suites_pass(self):
        for name in ('domain_lipschitz', 'kato_lp_lq', 'qd_symmetry'):
            records = verify.SUITES[name](self.lab)
            self.assertTrue(records)
            for r in records:
                self.assertTrue(r.pass_flag, repr(r))

    def test_stable_under_doubling(self):
        self.assertTrue(verify._stable_under_doubling(self.lab, 'steady', np.array([1.0, 2.0, 2.05, 1.5]), 2))
        self.assertFalse(verify._stable_under_doubling(self.lab, 'drifting', np.array([1.0, 2.0, 3.0, 1.5]), 2))
        self.assertFalse(verify._stable_under_doubling(self.lab, 'two_sided', np.array([1.0, 2.0, 2.0, 0.25]),
                                                       2, two_sided=True))

    def test_doubled_sweep(self):
        n, tup = verify._doubled_sweep(self.lab, 'kernel_gradient_bound')
        self.assertEqual(len(tup['t']), 2 * n)

    def test_seeded(self):
        a = verify.SUITES['domain_lipschitz'](self.lab)[0]
        b = verify.SUITES['domain_lipschitz'](self.lab)[0]
        self.assertEqual(a.row(), b.row())

    def test_run_verify_writes_report(self):
        result = self.lab.run_verify(['kato_lp_lq'])
        self.assertTrue(result.all_passed)
        with open(os.path.join(self.tmp.name, 'verify', 'report.csv')) as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(len(rows), 2)
        self.assertEqual(rows[1][0], 'kato_lp_lq')
        self.assertTrue(os.path.exists(os.path.join(self.tmp.name, 'verify', 'config.json')))

if __name__ == '__main__':
    unittest.main()
