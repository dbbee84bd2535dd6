import pyfracheat.montecarlo.paths as paths
from pyfracheat.kernels.spectral import SpectralKernelEvaluator
from pyfracheat.domain.model import ModelParams, unit_interval, ball
from pyfracheat.errors import RejectedInput, InsufficientSampleError
import numpy as np
import unittest

class TestMcConfig(unittest.TestCase):
    def test_streams(self):
        cfg = paths.McConfig(n_paths=45000, chunk_size=20000, seed=3)
        sizes = [size for _, size in cfg.streams()]
        self.assertEqual(sizes, [20000, 20000, 5000])
        a = [rng.random() for rng, _ in cfg.streams()]
        b = [rng.random() for rng, _ in cfg.streams()]
        self.assertEqual(a, b)
        self.assertEqual(len(set(a)), 3)

    def test_rejects(self):
        self.assertRaises(RejectedInput, paths.McConfig, n_paths=0)
        self.assertRaises(RejectedInput, paths.McConfig, bridge_substeps=0)


class TestBridgeSurvival(unittest.TestCase):
    def test_interval(self):
        a = np.array([0.5, 0.5, 0.5])
        b = np.array([0.5, 0.5, 0.5])
        p = paths._interval_survival(a, b, np.array([1e-6, 0.01, 0.5]))
        self.assertAlmostEqual(p[0], 1.0)
        self.assertGreaterEqual(p[0], p[1])
        self.assertGreater(p[1], p[2])
        self.assertTrue(0.0 < p[2] < 0.1)

    def test_ball(self):
        d = ball(2)
        a = np.array([[0.0, 0.0], [0.9, 0.0]])
        b = np.array([[0.0, 0.0], [0.9, 0.0]])
        p = paths._ball_survival(d, a, b, np.array([0.01, 0.01]))
        self.assertGreater(p[0], p[1])
        self.assertAlmostEqual(p[1], 1.0 - np.exp(-1.0))


class TestSurvival(unittest.TestCase):
    def setUp(self):
        self.params = ModelParams(1.5, 1)
        self.domain = unit_interval()

    def test_estimate(self):
        est = paths.SurvivalEstimate(25, 100)
        self.assertAlmostEqual(est.frequency, 0.25)
        self.assertAlmostEqual(est.stderr, np.sqrt(0.25 * 0.75 / 100))
        self.assertTrue(est.covers(0.3))
        self.assertFalse(est.covers(0.5))

    def test_matches_kernel_mass(self):
        cfg = paths.McConfig(n_paths=20000, chunk_size=5000, seed=1)
        est = paths.survival_frequency(self.domain, self.params, cfg, 0.2, 0.5)
        mass = float(np.ravel(SpectralKernelEvaluator(self.params, self.domain).mass_rD(0.2, 0.5))[0])
        self.assertTrue(est.covers(mass, z=4.0), "%r against %g" % (est, mass))

    def test_deterministic(self):
        cfg = paths.McConfig(n_paths=2000, chunk_size=500, seed=9, bridge_substeps=16)
        a = paths.survival_frequency(self.domain, self.params, cfg, 0.1, 0.3)
        b = paths.survival_frequency(self.domain, self.params, cfg, 0.1, 0.3)
        self.assertEqual(a.survivors, b.survivors)
        np.testing.assert_array_equal(paths.endpoints(self.domain, self.params, cfg, 0.1, 0.3),
                                      paths.endpoints(self.domain, self.params, cfg, 0.1, 0.3))

    def test_rejects(self):
        cfg = paths.McConfig(n_paths=2000)
        rng = np.random.default_rng(0)
        self.assertRaises(RejectedInput, paths.sample_paths, self.domain, self.params, cfg, 0.1, 1.5, rng, 10)
        self.assertRaises(RejectedInput, paths.sample_paths, self.domain, self.params, cfg, 0.0, 0.5, rng, 10)
        self.assertRaises(RejectedInput, paths.survival_frequency, self.domain, self.params, cfg, 0.1, 0.5,
                          n_paths=10)

    def test_single_path(self):
        alive, x = paths.sample_YD(self.domain, self.params, paths.McConfig(bridge_substeps=8), 0.01, 0.5,
                                   np.random.default_rng(4))
        if alive:
            self.assertTrue(0.0 < x[0] < 1.0)
        else:
            self.assertIsNone(x)


class TestDensity(unittest.TestCase):
    def setUp(self):
        self.params = ModelParams(1.5, 1)
        self.domain = unit_interval()

    def test_histogram(self):
        hist = paths.Histogram([10, 30], [[0.0, 0.5, 1.0]], 100)
        np.testing.assert_allclose(hist.density, [0.2, 0.6])
        self.assertAlmostEqual(hist.mass, 0.4)
        rows = hist.rows()
        self.assertEqual([r['x1'] for r in rows], [0.25, 0.75])
        self.assertTrue(all(r['ci_low'] <= r['density'] <= r['ci_high'] for r in rows))

    def test_insufficient_sample(self):
        cfg = paths.McConfig(n_paths=2000, chunk_size=1000, bridge_substeps=8)
        with self.assertRaises(InsufficientSampleError) as caught:
            paths.density_estimate(self.domain, self.params, cfg, 20.0, 0.5)
        self.assertLess(caught.exception.survivors, paths.MIN_SURVIVORS)

    def test_binned_kernel_mass(self):
        ev = SpectralKernelEvaluator(self.params, self.domain)
        hist = paths.Histogram(np.zeros(20), [np.linspace(0.0, 1.0, 21)], 1)
        binned = paths.binned_kernel(ev, 0.2, [[0.5]], hist)
        mass = float(np.ravel(ev.mass_rD(0.2, 0.5))[0])
        self.assertAlmostEqual(float(np.sum(binned * hist.volume)) / mass, 1.0, places=5)


class TestReflection(unittest.TestCase):
    def test_one_sided(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0.55, 0.9, size=400)
        observed, threshold = paths.reflection_distance(x, 0.5, n_boot=50)
        self.assertEqual(observed, 1.0)
        self.assertLess(threshold, 1.0)

if __name__ == '__main__':
    unittest.main()
