"""Verification records and the CSV artifacts they are written to. """

import csv
import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ['estimate_id', 'claim', 'n_probes', 'ratio_min', 'ratio_max', 'empirical_constant',
                  'pass_flag']
TIMING_COLUMNS = ['estimate_id', 'runtime']


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


class Record(object):

    def __init__(self, estimate_id, claim, n_probes, ratio_min, ratio_max, empirical_constant, pass_flag):
        self.estimate_id        = estimate_id
        self.claim              = claim
        self.n_probes           = int(n_probes)
        self.ratio_min          = float(ratio_min)
        self.ratio_max          = float(ratio_max)
        self.empirical_constant = float(empirical_constant)
        self.pass_flag          = bool(pass_flag)

    @classmethod
    def from_ratios(cls, estimate_id, claim, ratios, cap=None, lower=None):
        """ A bounded-ratio claim: c = max(ratio_max, 1/ratio_min) when lower bounded. """
        ratios = np.asarray(ratios, dtype=float).ravel()
        finite = bool(ratios.size and np.all(np.isfinite(ratios)))
        lo = float(np.min(ratios)) if ratios.size else float('nan')
        hi = float(np.max(ratios)) if ratios.size else float('nan')
        constant = max(hi, 1.0 / lo) if lower and lo > 0 else hi
        passed = finite and (cap is None or constant <= cap) and (not lower or lo > 0)
        return cls(estimate_id, claim, ratios.size, lo, hi, constant, passed)

    @classmethod
    def failed(cls, estimate_id, claim, error):
        return cls(estimate_id, "%s: %s" % (claim, type(error).__name__), 0, float('nan'), float('nan'),
                   float('nan'), False)

    def row(self):
        return [_cell(getattr(self, c)) for c in REPORT_COLUMNS]

    def __repr__(self):
        return "Record(%s, pass=%s, c=%.4g)" % (self.estimate_id, self.pass_flag, self.empirical_constant)


class VerificationReport(object):

    def __init__(self):
        self.records = []
        self.timings = []

    def add(self, records, runtime=None):
        records = list(records)
        self.records.extend(records)
        if runtime is not None:
            for r in records:
                self.timings.append((r.estimate_id, runtime))

    @property
    def all_passed(self):
        return bool(self.records) and all(r.pass_flag for r in self.records)

    def write(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, 'report.csv')
        write_csv(path, REPORT_COLUMNS, [r.row() for r in self.records])
        write_csv(os.path.join(out_dir, 'timings.csv'), TIMING_COLUMNS,
                  [[name, _cell(float(seconds))] for name, seconds in self.timings])
        return path


def write_csv(path, header, rows):
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.info("wrote %s (%d rows)", path, len(rows))
    return path
