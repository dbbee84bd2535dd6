import pyfracheat.pyfracheat as cli
import contextlib
import io
import os
import tempfile
import unittest

class TestMain(unittest.TestCase):
    def main(self, argv):
        with contextlib.redirect_stdout(io.StringIO()):
            return cli.main(argv)

    def test_verify_passes(self):
        with tempfile.TemporaryDirectory() as tmp:
            code = self.main(['verify', '--suites', 'kato_lp_lq,domain_lipschitz', '--out', tmp, '--seed', '3'])
            self.assertEqual(code, 0)
            self.assertTrue(os.path.exists(os.path.join(tmp, 'verify', 'report.csv')))
            self.assertTrue(os.path.exists(os.path.join(tmp, 'verify', 'timings.csv')))

    def test_unknown_suite(self):
        with tempfile.TemporaryDirectory() as tmp:
            self.assertEqual(self.main(['verify', '--suites', 'no_such_suite', '--out', tmp]), 2)

    def test_bad_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'bad.yaml')
            with open(path, 'w') as handle:
                handle.write('model:\n  alpha: 2.5\n')
            self.assertEqual(self.main(['kernel', '--config', path, '--out', tmp]), 2)

    def test_unknown_command(self):
        with contextlib.redirect_stderr(io.StringIO()):
            self.assertRaises(SystemExit, self.main, ['plot'])

if __name__ == '__main__':
    unittest.main()
