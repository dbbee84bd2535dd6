import pyfracheat.duhamel.engine as engine
import pyfracheat.duhamel.smallness as smallness
from pyfracheat.duhamel.testfunctions import EigenMode, SmoothBump
from pyfracheat.kato.drift import DriftField, CONSTANT, CLOSED_FORM
from pyfracheat.kernels.spectral import SpectralKernelEvaluator
from pyfracheat.domain.model import ModelParams, unit_interval
from pyfracheat.errors import RejectedInput, NonContractiveDriftError, PositivityError
import numpy as np
import unittest

DELTA0 = 0.01

def small_config(**changes):
    settings = dict(delta0=DELTA0, max_terms=8, n_modes=128, contour_points=24, time_steps=4,
                    probe_resolution=3, probe_refinement=1, space_nodes=12, chain_panels=32,
                    generator_modes=128, check_time_nodes=8, check_space_nodes=8)
    settings.update(changes)
    return engine.PerturbationConfig(**settings)

class EngineCase(unittest.TestCase):
    params = ModelParams(1.5, 1)
    domain = unit_interval()
    rD = SpectralKernelEvaluator(params, domain)

    def inputs(self, drift, **changes):
        return engine.EngineInputs(self.params, self.domain, drift, self.rD, small_config(**changes))

    def constant(self, value):
        return DriftField(self.domain, CONSTANT, [value])


class TestPerturbationConfig(unittest.TestCase):
    def test_rejects(self):
        self.assertRaises(RejectedInput, engine.PerturbationConfig, max_terms=1)
        self.assertRaises(RejectedInput, engine.PerturbationConfig, max_terms=6, contour_points=7)
        self.assertRaises(RejectedInput, engine.PerturbationConfig, contraction_target=0.5)
        self.assertRaises(RejectedInput, engine.PerturbationConfig, delta0=-1.0)
        self.assertRaises(RejectedInput, engine.PerturbationConfig, n_modes=0)

    def test_refined(self):
        cfg = engine.PerturbationConfig(n_modes=100, time_steps=8, chain_panels=10).refined(1.5)
        self.assertEqual((cfg.n_modes, cfg.time_steps, cfg.chain_panels), (150, 12, 15))
        self.assertEqual(cfg.check_time_nodes, 18)


class TestContour(unittest.TestCase):
    def test_taylor_coefficients(self):
        contour = engine.Contour(16, 1.0)
        c = contour.coefficients(np.exp(2.0 * contour.eps), 5)
        expected = [2.0 ** k / np.prod(np.arange(1, k + 1)) for k in range(6)]
        np.testing.assert_allclose(c, expected, atol=1e-8)

    def test_radius(self):
        contour = engine.Contour(16, 0.1)
        c = contour.coefficients(1.0 / (1.0 - contour.eps), 4)
        np.testing.assert_allclose(c, np.ones(5), rtol=1e-10)


class TestZeroDrift(EngineCase):
    def test_reproduces_rD(self):
        ev = engine.build_perturbed(self.inputs(DriftField(self.domain)))
        self.assertEqual(ev.n_terms, 0)
        xs = smallness.probe_points(ev.inputs)
        np.testing.assert_array_equal(ev.value_matrix(0.0, DELTA0, xs, xs), self.rD.rD_matrix(DELTA0, xs, xs))
        terms = ev.terms(0.0, xs, DELTA0, xs)
        self.assertTrue(np.all(terms[1:] == 0.0))

    def test_generator_eigenmode(self):
        ev = engine.build_perturbed(self.inputs(DriftField(self.domain)))
        res = ev.generator_residual(0.0, DELTA0, EigenMode(self.domain, 1), np.array([[0.3], [0.5]]))
        self.assertLess(res, 1e-5)

    def test_spectral_action(self):
        inputs = self.inputs(DriftField(self.domain))
        f = EigenMode(self.domain, 2)
        action = engine.SpectralAction(inputs, f)
        x = np.array([[0.2], [0.7]])
        rate = (2.0 * np.pi) ** 1.5
        np.testing.assert_allclose(action.fractional(x), -rate * f(x), atol=1e-8)
        np.testing.assert_allclose(action.heat(0.01, x), np.exp(-0.01 * rate) * f(x), atol=1e-10)

    def test_apply_eigenmode(self):
        ev = engine.build_perturbed(self.inputs(DriftField(self.domain)))
        f = EigenMode(self.domain, 1)
        x = np.array([[0.3], [0.5]])
        rate = np.pi ** 1.5
        for tau in (0.5 * DELTA0, 2.5 * DELTA0):
            np.testing.assert_allclose(ev.apply(0.0, tau, f, x), np.exp(-tau * rate) * f(x), rtol=1e-3)
        np.testing.assert_allclose(ev.semigroup_apply(0.0, 0.5 * DELTA0, f)(x), ev.apply(0.0, 0.5 * DELTA0, f, x))


class TestConstantDrift(EngineCase):
    @classmethod
    def setUpClass(cls):
        cls.b = DriftField(cls.domain, CONSTANT, [0.5])
        inputs = engine.EngineInputs(cls.params, cls.domain, cls.b, cls.rD, small_config())
        cls.ev = engine.build_perturbed(inputs)

    def test_window(self):
        self.assertEqual(self.ev.delta0, DELTA0)
        self.assertIsInstance(self.ev.propagator, engine.DiagonalPropagator)
        self.assertRaises(RejectedInput, self.ev.value_matrix, 0.0, 2.0 * DELTA0, [0.5], [0.5])
        self.assertRaises(RejectedInput, self.ev.value_matrix, 0.01, 0.005, [0.5], [0.5])

    def test_terms_decay(self):
        sups = self.ev.term_sups
        self.assertGreater(sups[1], 0.0)
        self.assertLess(sups[2], sups[1])
        self.assertLess(sups[3], sups[2])

    def test_pairwise_matches_matrix(self):
        xs = np.array([[0.2], [0.5], [0.9]])
        m = self.ev.value_matrix(0.0, DELTA0, xs, xs)
        np.testing.assert_allclose(self.ev.value(0.0, xs, DELTA0, xs), np.diagonal(m), rtol=1e-12)

    def test_first_term_odd_in_drift(self):
        other = engine.build_perturbed(self.inputs(self.b.negated()))
        x, y = np.array([[0.3], [0.5]]), np.array([[0.6], [0.2]])
        r1 = self.ev.picard_term(1, 0.0, x, DELTA0, y)
        r2 = self.ev.picard_term(2, 0.0, x, DELTA0, y)
        scale = np.max(np.abs(r1))
        np.testing.assert_allclose(other.picard_term(1, 0.0, x, DELTA0, y), -r1, atol=1e-6 * scale)
        np.testing.assert_allclose(other.picard_term(2, 0.0, x, DELTA0, y), r2, atol=1e-6 * scale)

    def test_stepped_matches_diagonal(self):
        modal = self.ev.modal
        contour = self.ev.propagator.contour
        stepped = engine.SteppedPropagator(modal.rates, modal, contour, DELTA0 / 4.0, 2)
        a = self.ev.propagator.matrices(0.0, DELTA0)
        b = stepped.matrices(0.0, DELTA0)
        np.testing.assert_allclose(b, a, atol=1e-6 * np.max(np.abs(a)))

    def test_picard_chapman_kolmogorov(self):
        for n in (1, 2):
            self.assertLess(self.ev.picard_ck_residual(n, 0.0, 0.5 * DELTA0, DELTA0, 0.3, 0.6), 1e-5)

    def test_chain(self):
        direct = self.ev.value(0.0, 0.3, DELTA0, 0.6)
        chained = self.ev.chain(0.0, 0.3, DELTA0, 0.6, splits=[0.5 * DELTA0, 0.5 * DELTA0])
        self.assertAlmostEqual(chained / direct, 1.0, places=4)
        self.assertRaises(RejectedInput, self.ev.chain, 0.0, 0.3, DELTA0, 0.6, [0.3 * DELTA0, 0.3 * DELTA0])

    def test_long_span_is_chained(self):
        value = self.ev.value(0.0, 0.4, 3.0 * DELTA0, 0.5)
        self.assertGreater(value, 0.0)
        self.assertLess(self.ev.ck_residual(0.0, DELTA0, 2.0 * DELTA0, 0.4, 0.5), 1e-4)

    def test_ck_reference_uses_extra_window(self):
        for t in (1.5 * DELTA0, 2.0 * DELTA0):
            residual = self.ev.ck_residual(0.0, 0.5 * t, t, 0.4, 0.5)
            self.assertGreater(residual, 0.0)
            self.assertLess(residual, 1e-4)
        self.assertRaises(RejectedInput, self.ev.ck_residual, 0.0, 2.0 * DELTA0, 2.0 * DELTA0, 0.4, 0.5)

    def test_chain_associative(self):
        even = self.ev.chain(0.0, 0.3, 2.0 * DELTA0, 0.6, splits=[DELTA0, DELTA0])
        uneven = self.ev.chain(0.0, 0.3, 2.0 * DELTA0, 0.6, splits=[0.5 * DELTA0, 0.5 * DELTA0, DELTA0])
        self.assertAlmostEqual(uneven / even, 1.0, places=4)

    def test_mass(self):
        mass = self.ev.mass(0.0, [[0.1], [0.5], [0.9]], DELTA0)
        self.assertTrue(np.all(mass <= 1.0 + 1e-4))
        self.assertTrue(np.all(mass > 0.5))

    def test_continuity(self):
        gaps = self.ev.continuity_gaps(0.0, SmoothBump(self.domain, 0.5, 0.25), (0.04, 0.02, 0.01))
        self.assertGreater(gaps[-1], 0.0)
        self.assertGreater(gaps[0], gaps[1])
        self.assertGreater(gaps[1], gaps[2])

    def test_duhamel_refinement(self):
        coarse, fine = engine.refinement_study(
            self.ev, lambda e: float(e.duhamel_residual(engine.FIRST_KIND, 0.0, 0.3, DELTA0, 0.6)))
        self.assertTrue(np.isfinite(coarse))
        self.assertLess(fine, coarse)

    def test_uniqueness_gap_shrinks(self):
        gap = engine.uniqueness_probe(self.ev.inputs)
        self.assertTrue(np.isfinite(gap))
        self.assertGreaterEqual(gap, 0.0)
        finer = engine.uniqueness_probe(self.ev.inputs, 2.0)
        self.assertTrue(np.isfinite(finer))
        self.assertLess(finer, gap)

    def test_geometric_decay_enforced(self):
        ev = engine.PerturbedKernelEvaluator(self.ev.inputs, DELTA0)
        ev.term_sups = [1.0, 0.1, 0.04, 0.01]
        ev._check_geometric()
        ev.term_sups = [1.0, 0.1, 0.09, 0.05]
        self.assertRaises(NonContractiveDriftError, ev._check_geometric)

    def test_positivity_failure_raises(self):
        with self.assertRaises(PositivityError) as caught:
            engine.build_perturbed(self.inputs(self.constant(1000.0)))
        self.assertFalse(caught.exception.margin > 0)


class TestTimeDependentDrift(EngineCase):
    def test_stepping(self):
        b = DriftField(self.domain, CLOSED_FORM, expressions=['0.5*exp(-t)'])
        ev = engine.PerturbedKernelEvaluator(self.inputs(b), DELTA0)
        self.assertIsInstance(ev.propagator, engine.SteppedPropagator)
        self.assertGreater(ev.value(0.2, 0.5, 0.2 + DELTA0, 0.5), 0.0)


class TestSmallness(EngineCase):
    def test_zero_drift_window(self):
        inputs = self.inputs(DriftField(self.domain), delta0=None)
        self.assertEqual(smallness.pick_delta0(inputs), self.params.horizon_T)
        self.assertEqual(inputs.smallness, [(1.0, 0.0, 0.0)])

    def test_grows_with_delta(self):
        inputs = self.inputs(self.constant(1.0), delta0=None)
        small, _ = smallness.estimate_smallness(inputs, 0.01)
        large, _ = smallness.estimate_smallness(inputs, 0.04)
        self.assertGreater(small, 0.0)
        self.assertGreaterEqual(large, small)

    def test_schedule(self):
        inputs = self.inputs(self.constant(1.0), delta0=None, schedule_levels=3)
        self.assertEqual(smallness.schedule(inputs), [1.0, 0.5, 0.25])
        self.assertRaises(RejectedInput, smallness.estimate_smallness, inputs, 2.0)

    def test_window_shrinks_with_drift(self):
        weak = smallness.pick_delta0(self.inputs(self.constant(1.0), delta0=None))
        strong = smallness.pick_delta0(self.inputs(self.constant(100.0), delta0=None))
        self.assertLess(strong, weak)

    def test_non_contractive(self):
        inputs = self.inputs(self.constant(1e4), delta0=None, schedule_levels=2)
        with self.assertRaises(NonContractiveDriftError) as caught:
            smallness.pick_delta0(inputs)
        self.assertEqual(len(caught.exception.estimates), 2)

    def test_inputs_reject_long_window(self):
        self.assertRaises(RejectedInput, self.inputs, self.constant(1.0), delta0=2.0)

if __name__ == '__main__':
    unittest.main()
