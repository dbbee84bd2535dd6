import pyfracheat.subordinator.stable as stable
from pyfracheat.domain.model import ModelParams
from pyfracheat.errors import RejectedInput
import numpy as np
import unittest

class TestStableDensity(unittest.TestCase):
    def test_params(self):
        self.assertEqual(stable.SubordinatorParams.from_model(ModelParams(1.5, 1)).beta, 0.75)
        for beta in (0.0, 1.0, 1.5):
            self.assertRaises(RejectedInput, stable.SubordinatorParams, beta)

    def test_half_closed_form(self):
        half = stable.SubordinatorParams(0.5)
        for t, s in ((1.0, 1.0), (0.3, 0.05), (2.0, 5.0)):
            self.assertAlmostEqual(stable.density(half, t, s) / stable.density_half(t, s), 1.0, places=8)

    def test_laplace(self):
        for beta in (0.55, 0.75, 0.95):
            params = stable.SubordinatorParams(beta)
            for t, lam in ((0.1, 4.0), (1.0, 1.0), (2.0, 0.5)):
                self.assertLess(stable.laplace_check(params, t, lam), 1e-8)

    def test_nonnegative(self):
        params = stable.SubordinatorParams(0.75)
        mu = stable.density(params, 1.0, np.geomspace(1e-3, 1e3, 200))
        self.assertTrue(np.all(mu >= 0))
        self.assertGreater(np.max(mu), 0)

    def test_scaling(self):
        # mu(t, s) = t^{-1/beta} mu(1, s t^{-1/beta})
        params = stable.SubordinatorParams(0.6)
        t, s = 0.4, 0.3
        c = t ** (-1.0 / 0.6)
        self.assertAlmostEqual(stable.density(params, t, s) / (c * stable.density(params, 1.0, s * c)), 1.0,
                               places=8)

    def test_cdf_monotone(self):
        params = stable.SubordinatorParams(0.75)
        values = [stable.cdf(params, 1.0, s) for s in (0.1, 1.0, 10.0, 1000.0)]
        self.assertTrue(all(a < b for a, b in zip(values, values[1:])))
        self.assertGreater(values[-1], 0.99)

    def test_convolution(self):
        params = stable.SubordinatorParams(0.75)
        self.assertLess(stable.convolution_residual(params, 0.5, 0.7, 1.5), 1e-6)

    def test_rejects(self):
        params = stable.SubordinatorParams(0.75)
        self.assertRaises(RejectedInput, stable.density, params, 0.0, 1.0)
        self.assertRaises(RejectedInput, stable.sample, params, -1.0, np.random.default_rng(0))


class TestStableSampler(unittest.TestCase):
    def test_seeded(self):
        params = stable.SubordinatorParams(0.75)
        a = stable.sample(params, 1.0, np.random.default_rng(7), size=1000)
        b = stable.sample(params, 1.0, np.random.default_rng(7), size=1000)
        np.testing.assert_array_equal(a, b)
        self.assertTrue(np.all(a > 0))

    def test_laplace_of_draws(self):
        params = stable.SubordinatorParams(0.75)
        n = 200000
        draws = stable.sample(params, 1.0, np.random.default_rng(11), size=n)
        values = np.exp(-draws)
        z = abs(np.mean(values) - np.exp(-1.0)) / (np.std(values) / np.sqrt(n))
        self.assertLess(z, 5.0)

if __name__ == '__main__':
    unittest.main()
