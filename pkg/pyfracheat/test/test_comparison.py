import pyfracheat.kernels.comparison as comparison
from pyfracheat.domain.model import ModelParams, unit_interval, ball
from pyfracheat.errors import RejectedInput
import numpy as np
import unittest

def interval_context(alpha=1.5):
    return comparison.ComparisonContext(ModelParams(alpha, 1), unit_interval())

class TestComparisonFunctions(unittest.TestCase):
    def test_varrho(self):
        ctx = interval_context()
        t = 0.008
        expected = t / (0.1 + t ** (1.0 / 1.5)) ** 2.5
        self.assertAlmostEqual(comparison.varrho(ctx, 1.0, t, 0.1), expected)

    def test_q_hat(self):
        ctx = interval_context()
        # deep inside the hat is capped at one
        self.assertEqual(comparison.q_hat(ctx, 0.01, 0.5, 0.5), 1.0)
        near = comparison.q_hat(ctx, 0.01, 1e-4, 0.5)
        self.assertAlmostEqual(near, 1e-4 / (0.5 - 1e-4 + 0.01 ** (1.0 / 1.5)))

    def test_qD_symmetric(self):
        ctx = comparison.ComparisonContext(ModelParams(1.3, 2), ball(2))
        rng = np.random.default_rng(1)
        tup = comparison.sweep_tuples(ctx, rng, 200, [0.01, 0.1])
        a = comparison.qD(ctx, tup['t'], tup['x'], tup['y'])
        b = comparison.qD(ctx, tup['t'], tup['y'], tup['x'])
        np.testing.assert_allclose(a, b, rtol=1e-14)

    def test_sharp_form_bounded(self):
        ctx = interval_context()
        rng = np.random.default_rng(2)
        tup = comparison.sweep_tuples(ctx, rng, 500, [0.01, 0.1, 1.0])
        ratios = comparison.sharp_form_ratio(ctx, tup['t'], tup['x'], tup['y'])
        self.assertTrue(np.all(ratios > 0.2))
        self.assertTrue(np.all(ratios <= 1.0 + 1e-12))

    def test_varrho_product_bounded(self):
        ctx = interval_context()
        rng = np.random.default_rng(4)
        tup = comparison.sweep_tuples(ctx, rng, 500, [0.01, 0.1, 1.0])
        ratios = comparison.varrho_product_ratio(ctx, tup['t'], tup['s'], tup['x'], tup['y'], tup['z'])
        self.assertTrue(np.all(np.isfinite(ratios)))
        self.assertLess(np.max(ratios), 100.0)

    def test_outer(self):
        ctx = interval_context()
        xs = np.array([[0.1], [0.5]])
        ys = np.array([[0.2], [0.3], [0.9]])
        m = comparison.outer(comparison.qD, ctx, 0.1, xs, ys)
        self.assertEqual(m.shape, (2, 3))
        self.assertAlmostEqual(m[1, 2], comparison.qD(ctx, 0.1, 0.5, 0.9))

    def test_rejects(self):
        ctx = interval_context()
        self.assertRaises(RejectedInput, comparison.varrho, ctx, 1.0, 0.0, 0.1)
        self.assertRaises(RejectedInput, comparison.ComparisonContext, ModelParams(1.5, 2), unit_interval())
        # s outside (t/4, 3t/4)
        self.assertRaises(RejectedInput, comparison.check_remark_configuration, ctx, 0.2, 0.01, 0.1, 0.9, 0.5)

if __name__ == '__main__':
    unittest.main()
