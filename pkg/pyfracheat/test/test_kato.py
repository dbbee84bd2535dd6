import pyfracheat.kato.drift as drift
import pyfracheat.kato.functional as functional
from pyfracheat.domain.model import ModelParams, unit_interval, ball
from pyfracheat.errors import RejectedInput, ExtrapolationError
import numpy as np
import os
import tempfile
import unittest

class TestDriftField(unittest.TestCase):
    def setUp(self):
        self.domain = unit_interval()

    def test_constant(self):
        b = drift.DriftField(self.domain, drift.CONSTANT, [2.0])
        np.testing.assert_array_equal(b(0.3, [0.1, 0.5]), [[2.0], [2.0]])
        self.assertTrue(b.time_independent)
        self.assertFalse(b.is_zero)
        self.assertTrue(b.scaled(0.0).is_zero)
        np.testing.assert_array_equal(b.negated()(0.0, 0.4), [[-2.0]])

    def test_closed_form(self):
        b = drift.DriftField(self.domain, drift.CLOSED_FORM, expressions=['rho(x)^-0.5 * exp(-t)'])
        self.assertFalse(b.time_independent)
        value = b(1.0, 0.25)[0, 0]
        self.assertAlmostEqual(value, 0.25 ** -0.5 * np.exp(-1.0))

    def test_closed_form_clamps_rho(self):
        b = drift.DriftField(self.domain, drift.CLOSED_FORM, expressions=['rho(x)^-1'], rho_clamp=1e-3)
        self.assertAlmostEqual(b(0.0, 1e-6)[0, 0], 1e3)

    def test_ball_components(self):
        d = ball(2)
        b = drift.DriftField(d, drift.CLOSED_FORM, expressions=['x2', '-x1'])
        np.testing.assert_allclose(b(0.0, [[0.3, 0.4]]), [[0.4, -0.3]])
        self.assertAlmostEqual(b.norm(0.0, [[0.3, 0.4]])[0], 0.5)

    def test_rejects_expressions(self):
        for text in ('__import__("os")', 'x.real', 'y + 1', 'lambda: 1'):
            self.assertRaises(RejectedInput, drift.DriftField, self.domain, drift.CLOSED_FORM, None, [text])
        self.assertRaises(RejectedInput, drift.DriftField, self.domain, drift.CONSTANT, [1.0, 2.0])

    def test_table(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'drift.csv')
            with open(path, 'w') as handle:
                handle.write('t,x1,b1\n')
                for t in (0.0, 1.0):
                    for x in (0.0, 0.5, 1.0):
                        handle.write('%r,%r,%r\n' % (t, x, t + x))
            b = drift.DriftField.from_spec({'kind': 'tabulated', 'table': path}, self.domain)
        self.assertFalse(b.time_independent)
        self.assertAlmostEqual(b(0.5, 0.25)[0, 0], 0.75)
        self.assertRaises(ExtrapolationError, b, 2.0, 0.25)


class TestKatoFunctional(unittest.TestCase):
    def setUp(self):
        self.domain = unit_interval()
        self.params = ModelParams(1.5, 1)
        self.t_probes = [0.5]
        self.x_probes = np.array([[0.5], [0.05]])
        self.b = drift.DriftField(self.domain, drift.CONSTANT, [1.0])

    def K(self, b, delta, gamma=0.0):
        return functional.kato_functional(self.domain, self.params, b, gamma, delta, self.t_probes,
                                          self.x_probes)

    def test_zero_drift(self):
        self.assertEqual(self.K(drift.DriftField(self.domain), 0.1), 0.0)

    def test_homogeneous(self):
        base = self.K(self.b, 0.1)
        self.assertGreater(base, 0.0)
        self.assertAlmostEqual(self.K(self.b.scaled(3.0), 0.1) / base, 3.0, places=10)

    def test_decreases_with_delta(self):
        values = [self.K(self.b, d) for d in (0.4, 0.1, 0.025)]
        self.assertTrue(values[0] > values[1] > values[2] > 0)

    def test_not_integrable(self):
        # (gamma + 1)/alpha >= 1
        self.assertEqual(self.K(self.b, 0.1, gamma=0.5), float('inf'))

    def test_rejects(self):
        self.assertRaises(RejectedInput, self.K, self.b, 0.0)
        self.assertRaises(RejectedInput, self.K, self.b, 0.1, -0.1)

    def test_hat_functional(self):
        f = self.b
        values = [functional.hat_kato_functional(self.domain, self.params, f, t, self.x_probes) for t in (0.4, 0.1)]
        self.assertGreater(values[0], values[1])
        self.assertEqual(functional.hat_kato_functional(self.domain, self.params,
                                                        drift.DriftField(self.domain), 0.1), 0.0)


class TestKatoVerdicts(unittest.TestCase):
    def test_lp_lq(self):
        self.assertTrue(functional.lp_lq_membership(ModelParams(1.5, 1), 0.0, np.inf, np.inf))
        self.assertFalse(functional.lp_lq_membership(ModelParams(1.2, 3), 0.0, 20.0, 10.0))
        self.assertTrue(functional.lp_lq_membership(ModelParams(1.8, 2), 0.0, 10.0, 10.0))
        self.assertRaises(RejectedInput, functional.lp_lq_membership, ModelParams(1.5, 1), 0.0, 1.0, 2.0)

    def test_decay_exponent(self):
        grid = np.array([0.4, 0.2, 0.1, 0.05])
        self.assertAlmostEqual(functional.decay_exponent(grid, 3.0 * grid ** 0.5), 0.5)
        self.assertTrue(functional.decays(grid, grid ** 0.5))
        self.assertFalse(functional.decays(grid, np.ones(4)))
        self.assertFalse(functional.decays(grid, [1.0, np.inf, 1.0, 1.0]))

    def test_report_consistency(self):
        report = functional.KatoReport([0.2, 0.1], [0.0, 0.25])
        report.verdicts = {0.0: True, 0.25: False}
        self.assertTrue(report.nesting_consistent)
        report.verdicts = {0.0: False, 0.25: True}
        self.assertFalse(report.nesting_consistent)
        report.hat_verdict = True
        report.proxy_verdict = True
        self.assertFalse(report.chain_consistent)

    def test_classify(self):
        domain = unit_interval()
        params = ModelParams(1.5, 1)
        b = drift.DriftField(domain, drift.CONSTANT, [1.0])
        report = functional.classify(domain, params, b, [0.0], [0.2, 0.1, 0.05], [0.5], np.array([[0.5]]))
        self.assertEqual(len(report.K_values[0.0]), 3)
        self.assertEqual(len(report.rows()), 9)
        self.assertEqual(len(report.verdict_rows()), 3)
        self.assertRaises(RejectedInput, functional.classify, domain, params, b, [], [0.1])

if __name__ == '__main__':
    unittest.main()
