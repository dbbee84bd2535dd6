import pyfracheat.kernels.gaussian as gaussian
import pyfracheat.kernels.comparison as comparison
from pyfracheat.domain.model import ModelParams, unit_interval, ball
from pyfracheat.errors import RejectedInput
import numpy as np
import unittest

class TestGaussianDirichlet(unittest.TestCase):
    def setUp(self):
        self.ev = gaussian.GaussianDirichlet(unit_interval())

    def test_routes_agree(self):
        xs = np.linspace(0.05, 0.95, 7).reshape(-1, 1)
        t = 0.03
        image = self.ev._evaluate(t, xs, xs, 0, True, 'image')
        eig = self.ev._evaluate(t, xs, xs, 0, True, 'eigen')
        np.testing.assert_allclose(image, eig, rtol=1e-8)

    def test_positive_symmetric(self):
        xs = np.linspace(0.01, 0.99, 9).reshape(-1, 1)
        for t in (0.001, 0.1, 1.0):
            m = self.ev.p2_matrix(t, xs, xs)
            self.assertTrue(np.all(m > 0))
            np.testing.assert_allclose(m, m.T, rtol=1e-10)

    def test_small_time_free_kernel(self):
        # away from the boundary p2 is the free heat kernel of Delta
        t = 1e-4
        value = self.ev.p2(t, 0.5, 0.51)
        free = np.exp(-0.01 ** 2 / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)
        self.assertAlmostEqual(value / free, 1.0, places=10)

    def test_survival(self):
        self.assertAlmostEqual(self.ev.survival(1e-4, 0.5), 1.0, places=10)
        # first mode dominates at large times
        s = self.ev.survival(1.0, 0.5)
        lead = 2.0 * np.exp(-np.pi ** 2) * 2.0 / np.pi
        self.assertAlmostEqual(s / lead, 1.0, places=6)

    def test_chapman_kolmogorov(self):
        for t, s, x, y in ((0.01, 0.05, 0.2, 0.7), (0.1, 0.1, 0.03, 0.5)):
            self.assertLess(gaussian.ck_residual_p2(self.ev, t, s, x, y), 1e-8)

    def test_gradient_finite_difference(self):
        h = 1e-6
        t = 0.05
        g = self.ev.grad(t, 0.3, 0.6)
        fd = (self.ev.p2(t, 0.3 + h, 0.6) - self.ev.p2(t, 0.3 - h, 0.6)) / (2.0 * h)
        self.assertAlmostEqual(float(np.ravel(g)[0]) / fd, 1.0, places=5)

    def test_rejects(self):
        self.assertRaises(RejectedInput, self.ev.p2, 0.0, 0.5, 0.5)
        self.assertRaises(RejectedInput, gaussian.GaussianKernelConfig, 0)


class TestGaussianBall(unittest.TestCase):
    def test_disk_symmetric(self):
        ev = gaussian.GaussianDirichlet(ball(2))
        x = np.array([[0.1, 0.2], [-0.5, 0.3]])
        m = ev.p2_matrix(0.2, x, x)
        np.testing.assert_allclose(m, m.T, rtol=1e-8)
        self.assertTrue(np.all(m > 0))


class TestFitLambda(unittest.TestCase):
    def test_upper(self):
        # ratio grows as lambda shrinks
        lam, extreme = gaussian.fit_lambda(lambda l: np.array([1.0 / l]), [0.1, 0.2, 0.24], 5.0, True)
        self.assertEqual(lam, 0.24)
        lam, _ = gaussian.fit_lambda(lambda l: np.array([100.0]), [0.1, 0.2], 5.0, True)
        self.assertIsNone(lam)

    def test_lower(self):
        lam, extreme = gaussian.fit_lambda(lambda l: np.array([l]), [0.3, 0.5, 1.0], 2.0, False)
        self.assertEqual(lam, 0.5)
        self.assertEqual(extreme, 0.5)

    def test_domination_ratio(self):
        ctx = comparison.ComparisonContext(ModelParams(1.5, 1), unit_interval())
        x = np.linspace(0.01, 0.99, 11)
        ratios = gaussian.domination_ratio(ctx, 0.05, x, 0.5, 0.2)
        self.assertTrue(np.all(ratios > 0))
        self.assertLess(np.max(ratios), 5.0)

    def test_gradient_forms(self):
        ctx = comparison.ComparisonContext(ModelParams(1.5, 1), unit_interval())
        ev = gaussian.GaussianDirichlet(unit_interval())
        x = np.linspace(0.02, 0.98, 9)
        y = x[::-1].copy()
        for order in (1, 2):
            value = gaussian.gradient_norm(ev, 0.05, x, y, order)
            ratios = value / gaussian.combined_gradient_form(ctx, 0.05, x, y, 0.15, order)
            self.assertTrue(np.all(np.isfinite(ratios)))
            self.assertLess(np.max(ratios), 1e3)
        local = gaussian.local_gradient_ratio(ctx, ev, 0.05, x, y)
        self.assertTrue(np.all(np.isfinite(local)))
        self.assertLess(np.max(local), 1e3)

if __name__ == '__main__':
    unittest.main()
