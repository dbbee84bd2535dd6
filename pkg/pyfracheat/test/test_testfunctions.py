import pyfracheat.duhamel.testfunctions as testfunctions
from pyfracheat.domain.model import unit_interval, ball
from pyfracheat.errors import RejectedInput
import numpy as np
import unittest

class TestSmoothBump(unittest.TestCase):
    def test_support(self):
        f = testfunctions.SmoothBump(unit_interval(), [0.5], 0.2)
        self.assertAlmostEqual(f(0.5)[0], 1.0)
        np.testing.assert_array_equal(f([0.25, 0.75, 0.95]), [0.0, 0.0, 0.0])

    def test_gradient(self):
        f = testfunctions.SmoothBump(ball(2), [0.1, 0.0], 0.5, amplitude=2.0)
        x = np.array([[0.3, 0.2]])
        h = 1e-6
        fd = [(f(x + h * e) - f(x - h * e))[0] / (2.0 * h) for e in np.eye(2)]
        np.testing.assert_allclose(f.gradient(x)[0], fd, rtol=1e-6)

    def test_rejects(self):
        self.assertRaises(RejectedInput, testfunctions.SmoothBump, unit_interval(), [0.5], 0.6)
        self.assertRaises(RejectedInput, testfunctions.SmoothBump, unit_interval(), [0.5], 0.0)


class TestFromSpec(unittest.TestCase):
    def test_kinds(self):
        d = unit_interval()
        self.assertIsInstance(testfunctions.from_spec(None, d), testfunctions.SmoothBump)
        mode = testfunctions.from_spec({'kind': 'eigenmode', 'index': 2}, d)
        self.assertAlmostEqual(mode(0.25)[0], np.sqrt(2.0))
        const = testfunctions.from_spec({'kind': 'constant', 'value': 3.0}, d)
        np.testing.assert_array_equal(const([0.1, 0.2]), [3.0, 3.0])
        np.testing.assert_array_equal(const.gradient([0.1]), [[0.0]])
        self.assertRaises(RejectedInput, testfunctions.from_spec, {'kind': 'wave'}, d)

if __name__ == '__main__':
    unittest.main()
