import logging
import os
import time
import zlib

import numpy as np

from .domain.model import ModelParams, Domain, as_points
from .domain.grid import probe_grid
from .kernels.comparison import ComparisonContext
from .kernels.gaussian import GaussianKernelConfig
from .kernels.spectral import SpectralKernelConfig, SpectralKernelEvaluator, EIGEN, SUBORDINATION
from .kato.drift import DriftField
from .kato import functional
from .duhamel import engine, smallness, testfunctions
from .montecarlo import paths
from .errors import LabError
from . import report
from . import verify

logger = logging.getLogger(__name__)


class Laboratory(object):
    """ Builds every evaluator from one RunConfig and runs the subcommands. """

    def __init__(self, config):
        model = config['model']
        self.config       = config
        self.params       = ModelParams(model['alpha'], model['dim'], model['horizon_T'])
        domain_spec       = dict(config['domain'], dim=model['dim'])
        self.domain       = Domain.from_spec(domain_spec)
        self.drift        = DriftField.from_spec(config['drift'], self.domain)
        self.gaussian_cfg = GaussianKernelConfig(**config['gaussian'])
        self.spectral_cfg = SpectralKernelConfig(**config['spectral'])
        self.rD           = SpectralKernelEvaluator(self.params, self.domain, self.spectral_cfg,
                                                    self.gaussian_cfg)
        self.gauss        = self.rD.gauss
        self.ctx          = ComparisonContext(self.params, self.domain)
        self.seed         = config['seed']
        self.out          = config['out']
        self._perturbed   = {}

    # -- shared pieces -----------------------------------------------------------

    def rng(self, name):
        """ A generator seeded from the run seed and a stable hash of name. """
        return np.random.default_rng(np.random.SeedSequence([self.seed, zlib.crc32(name.encode())]))

    def perturbation_cfg(self):
        state = dict(self.config['perturbation'])
        state.pop('test_function', None)
        return engine.PerturbationConfig(**state)

    def engine_inputs(self, drift=None):
        return engine.EngineInputs(self.params, self.domain, self.drift if drift is None else drift,
                                   self.rD, self.perturbation_cfg())

    def perturbed(self, drift=None):
        """ The built perturbed kernel for drift (default: the configured one), cached. """
        drift = self.drift if drift is None else drift
        key = id(drift)
        if key not in self._perturbed:
            self._perturbed[key] = (drift, engine.build_perturbed(self.engine_inputs(drift)))
        return self._perturbed[key][1]

    def test_function(self):
        return testfunctions.from_spec(self.config['perturbation']['test_function'], self.domain)

    def mc_cfg(self):
        mc = self.config['mc']
        return paths.McConfig(mc['n_paths'], mc['bins'], self.seed, mc['bridge_substeps'], mc['chunk_size'],
                              mc['bootstrap'])

    def mc_start(self):
        x0 = self.config['mc']['x0']
        return self.domain.center.copy() if x0 is None else as_points(x0, self.domain.dim)[0][0]

    def kernel_points(self):
        n = self.config['sweep']['grid_points']
        if self.domain.is_interval:
            return (np.arange(1, n + 1) / (n + 1.0)).reshape(-1, 1)
        return probe_grid(self.domain, max(n // 4, 2), 2)

    def artifact_dir(self, name):
        path = os.path.join(self.out, name)
        os.makedirs(path, exist_ok=True)
        self.config.dump(os.path.join(path, 'config.json'))
        return path

    @staticmethod
    def _point_columns(prefix, dim):
        return [prefix] if dim == 1 else ['%s%d' % (prefix, k + 1) for k in range(dim)]

    # -- subcommands -------------------------------------------------------------

    def run_kernel(self):
        """ r^D on the probe grid by both routes where the domain has both. """
        out = self.artifact_dir('kernel')
        pts = self.kernel_points()
        d = self.domain.dim
        header = ['t'] + self._point_columns('x', d) + self._point_columns('y', d) + \
                 ['rD_eigen', 'rD_subord', 'rel_diff']
        rows = []
        worst = 0.0
        for t in self.config['sweep']['kernel_times']:
            eig = self.rD.rD_matrix(t, pts, pts, EIGEN)
            if self.domain.is_interval:
                sub = self.rD.rD_matrix(t, pts, pts, SUBORDINATION)
                rel = np.abs(eig - sub) / np.abs(eig)
                worst = max(worst, float(np.max(rel)))
            else:
                sub = np.full_like(eig, np.nan)
                rel = np.full_like(eig, np.nan)
            for i, x in enumerate(pts):
                for j, y in enumerate(pts):
                    rows.append([float(t)] + list(x) + list(y) + [eig[i, j], sub[i, j], rel[i, j]])
        report.write_csv(os.path.join(out, 'kernel.csv'), header, rows)
        if self.domain.is_interval:
            logger.info("kernel: max cross-route relative difference %.3g", worst)
        return {'rows': len(rows), 'max_rel_diff': worst}

    def run_verify(self, suites=None):
        selected = verify.select(self.config['verify']['suites'] if suites is None else suites, self.domain)
        result = report.VerificationReport()
        for name in selected:
            logger.info("suite %s: start", name)
            start = time.time()
            try:
                records = verify.SUITES[name](self)
            except LabError as err:
                logger.warning("suite %s failed: %s", name, err)
                records = [report.Record.failed(name, verify.CLAIMS.get(name, name), err)]
            result.add(records, time.time() - start)
            logger.info("suite %s: %s", name, ", ".join("%s=%s" % (r.estimate_id, r.pass_flag)
                                                        for r in records))
        result.write(self.artifact_dir('verify'))
        return result

    def run_kato(self):
        out = self.artifact_dir('kato')
        kato = self.config['kato']
        t_probes = functional.default_t_probes(self.params, kato['t_probes'])
        result = functional.classify(self.domain, self.params, self.drift, kato['gammas'], kato['delta_grid'],
                                     t_probes)
        report.write_csv(os.path.join(out, 'kato.csv'), ['functional', 'gamma', 'delta', 'value'],
                         result.rows())
        report.write_csv(os.path.join(out, 'kato_verdicts.csv'),
                         ['functional', 'gamma', 'decay_exponent', 'member_proxy'], result.verdict_rows())
        return result

    def run_mc(self):
        out = self.artifact_dir('mc')
        cfg = self.mc_cfg()
        t = self.config['mc']['t']
        x0 = self.mc_start()
        hist = paths.density_estimate(self.domain, self.params, cfg, t, x0)
        rows = hist.rows()
        header = list(rows[0].keys()) if rows else []
        report.write_csv(os.path.join(out, 'histogram.csv'), header, [list(r.values()) for r in rows])
        survival = paths.SurvivalEstimate(int(np.sum(hist.counts)), hist.n_paths)
        mass = float(np.ravel(self.rD.mass_rD(t, x0))[0])
        report.write_csv(os.path.join(out, 'survival.csv'),
                         ['t', 'survivors', 'n_paths', 'frequency', 'stderr', 'mass_rD'],
                         [[t, survival.survivors, survival.n_paths, survival.frequency, survival.stderr, mass]])
        return hist

    def run_perturbed(self):
        out = self.artifact_dir('perturbed')
        ev = self.perturbed()
        inputs = ev.inputs
        pts = smallness.probe_points(inputs)
        d = self.domain.dim
        header = ['s', 't'] + self._point_columns('x', d) + self._point_columns('y', d) + \
                 ['rD', 'rDb', 'rel_diff']
        rows = []
        worst = 0.0
        for s in smallness._starts(inputs, ev.delta0):
            for frac in smallness.WINDOW_FRACTIONS:
                t = s + frac * ev.delta0
                base = self.rD.rD_matrix(t - s, pts, pts)
                value = ev.value_matrix(s, t, pts, pts)
                rel = np.abs(value - base) / np.abs(base)
                worst = max(worst, float(np.max(rel)))
                for i, x in enumerate(pts):
                    for j, y in enumerate(pts):
                        rows.append([s, t] + list(x) + list(y) + [base[i, j], value[i, j], rel[i, j]])
        report.write_csv(os.path.join(out, 'perturbed.csv'), header, rows)
        report.write_csv(os.path.join(out, 'terms.csv'), ['k', 'sup_ratio', 'grad_sup_ratio'],
                         [[r['k'], r['sup_ratio'], r['grad_sup_ratio']] for r in ev.term_rows()])
        report.write_csv(os.path.join(out, 'smallness.csv'), ['delta', 'C', 'C_hat'], inputs.smallness)
        if self.drift.is_zero:
            logger.info("perturbed: zero drift, r^{D,b} coincides with r^D to relative %.3g", worst)
        else:
            logger.info("perturbed: delta0=%g, %d terms, max relative departure from r^D %.3g", ev.delta0,
                        ev.n_terms, worst)
        return {'delta0': ev.delta0, 'n_terms': ev.n_terms, 'max_rel_diff': worst}
