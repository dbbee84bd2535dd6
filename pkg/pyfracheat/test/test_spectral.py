import pyfracheat.kernels.spectral as spectral
import pyfracheat.kernels.comparison as comparison
from pyfracheat.domain.model import ModelParams, unit_interval, ball
from pyfracheat.errors import RejectedInput, UnsupportedDomain
import numpy as np
import unittest

class TestSpectralInterval(unittest.TestCase):
    def setUp(self):
        self.params = ModelParams(1.5, 1)
        self.ev = spectral.SpectralKernelEvaluator(self.params, unit_interval())
        self.ctx = comparison.ComparisonContext(self.params, unit_interval())
        self.xs = np.linspace(0.05, 0.95, 6).reshape(-1, 1)

    def test_cross_route(self):
        for t in (0.05, 0.2):
            eig = self.ev.rD_matrix(t, self.xs, self.xs, spectral.EIGEN)
            sub = self.ev.rD_matrix(t, self.xs, self.xs, spectral.SUBORDINATION)
            np.testing.assert_allclose(eig, sub, rtol=1e-6)
            self.assertAlmostEqual(self.ev.rD_subordination(t, 0.3, 0.6) / self.ev.rD(t, 0.3, 0.6, spectral.EIGEN), 1.0, places=5)

    def test_symmetric_positive(self):
        m = self.ev.rD_matrix(0.1, self.xs, self.xs)
        np.testing.assert_allclose(m, m.T, rtol=1e-12)
        self.assertTrue(np.all(m > 0))

    def test_first_mode_at_large_time(self):
        t = 5.0
        lead = np.exp(-t * np.pi ** 1.5) * 2.0 * np.sin(np.pi * 0.3) * np.sin(np.pi * 0.6)
        self.assertAlmostEqual(self.ev.rD(t, 0.3, 0.6) / lead, 1.0, places=8)

    def test_sub_markov(self):
        masses = self.ev.mass_rD(0.2, self.xs)
        self.assertTrue(np.all(masses > 0))
        self.assertTrue(np.all(masses <= 1.0 + 1e-8))

    def test_chapman_kolmogorov(self):
        self.assertLess(self.ev.ck_residual_rD(0.1, 0.05, 0.3, 0.8), 1e-6)

    def test_sharp_ratio_bounded(self):
        rng = np.random.default_rng(5)
        tup = comparison.sweep_tuples(self.ctx, rng, 100, [0.1])
        ratios = spectral.sharp_ratio(self.ctx, self.ev, 0.1, tup['x'], tup['y'])
        self.assertTrue(np.all(ratios > 1e-3))
        self.assertTrue(np.all(ratios < 1e3))

    def test_gradient_finite_difference(self):
        h = 1e-6
        g = float(np.ravel(self.ev.grad_rD(0.1, 0.3, 0.7))[0])
        fd = (self.ev.rD(0.1, 0.3 + h, 0.7) - self.ev.rD(0.1, 0.3 - h, 0.7)) / (2.0 * h)
        self.assertAlmostEqual(g / fd, 1.0, places=5)

    def test_holder_exponent_range(self):
        self.assertRaises(RejectedInput, spectral.holder_grad_check, self.ctx, self.ev, 0.1, 0.3, 0.31, 0.5, 1.0)

    def test_rejects(self):
        self.assertRaises(RejectedInput, self.ev.rD, 0.0, 0.3, 0.5)
        self.assertRaises(RejectedInput, self.ev.rD, 0.1, 0.3, 0.5, 'nowhere')


class TestSpectralBall(unittest.TestCase):
    def test_disk(self):
        params = ModelParams(1.5, 2)
        ev = spectral.SpectralKernelEvaluator(params, ball(2))
        x = np.array([[0.0, 0.0], [0.3, -0.4]])
        m = ev.rD_matrix(0.5, x, x)
        np.testing.assert_allclose(m, m.T, rtol=1e-8)
        self.assertTrue(np.all(m > 0))
        self.assertTrue(np.all(ev.mass_rD(0.5, x) <= 1.0 + 1e-8))

    def test_no_subordination_on_balls(self):
        params = ModelParams(1.5, 2)
        ev = spectral.SpectralKernelEvaluator(params, ball(2))
        self.assertRaises(UnsupportedDomain, ev.rD, 0.5, [0.0, 0.0], [0.1, 0.1], spectral.SUBORDINATION)

if __name__ == '__main__':
    unittest.main()
