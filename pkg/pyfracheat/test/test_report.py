import pyfracheat.report as report
import csv
import os
import tempfile
import unittest

class TestRecord(unittest.TestCase):
    def test_upper_bound(self):
        r = report.Record.from_ratios('a', 'claim', [0.5, 2.0, 1.0], cap=3.0)
        self.assertEqual((r.n_probes, r.ratio_min, r.ratio_max, r.empirical_constant), (3, 0.5, 2.0, 2.0))
        self.assertTrue(r.pass_flag)
        self.assertFalse(report.Record.from_ratios('a', 'claim', [0.5, 4.0], cap=3.0).pass_flag)

    def test_two_sided(self):
        r = report.Record.from_ratios('b', 'claim', [0.1, 2.0], cap=20.0, lower=True)
        self.assertEqual(r.empirical_constant, 10.0)
        self.assertTrue(r.pass_flag)
        self.assertFalse(report.Record.from_ratios('b', 'claim', [0.0, 2.0], lower=True).pass_flag)

    def test_not_finite(self):
        self.assertFalse(report.Record.from_ratios('c', 'claim', [1.0, float('inf')]).pass_flag)
        self.assertFalse(report.Record.from_ratios('c', 'claim', []).pass_flag)

    def test_failed(self):
        r = report.Record.failed('d', 'claim', ValueError('bad'))
        self.assertFalse(r.pass_flag)
        self.assertEqual(r.claim, 'claim: ValueError')

    def test_cells(self):
        self.assertEqual(report._cell(True), 'true')
        self.assertEqual(report._cell(0.1), '0.1')
        self.assertEqual(report._cell(3), '3')
        self.assertEqual(report._cell('x'), 'x')


class TestVerificationReport(unittest.TestCase):
    def test_write(self):
        result = report.VerificationReport()
        self.assertFalse(result.all_passed)
        result.add([report.Record.from_ratios('a', 'first claim', [1.0], cap=2.0)], 0.25)
        result.add([report.Record.from_ratios('b', 'second, with a comma', [3.0], cap=2.0)], 0.5)
        self.assertFalse(result.all_passed)
        with tempfile.TemporaryDirectory() as tmp:
            path = result.write(os.path.join(tmp, 'verify'))
            with open(path) as handle:
                rows = list(csv.reader(handle))
            with open(os.path.join(tmp, 'verify', 'timings.csv')) as handle:
                timings = list(csv.reader(handle))
        self.assertEqual(rows[0], report.REPORT_COLUMNS)
        self.assertEqual(rows[1], ['a', 'first claim', '1', '1.0', '1.0', '1.0', 'true'])
        self.assertEqual(rows[2][1], 'second, with a comma')
        self.assertEqual(rows[2][-1], 'false')
        self.assertEqual(timings[1:], [['a', '0.25'], ['b', '0.5']])

if __name__ == '__main__':
    unittest.main()
