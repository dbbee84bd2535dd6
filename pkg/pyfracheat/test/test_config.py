import pyfracheat.config as config
from pyfracheat.errors import ConfigError
import glob
import os
import tempfile
import unittest

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'configs')

class TestRunConfig(unittest.TestCase):
    def test_defaults(self):
        cfg = config.RunConfig()
        self.assertEqual(cfg['model']['alpha'], 1.5)
        self.assertEqual(cfg['domain']['kind'], 'UnitInterval')
        self.assertEqual(cfg['drift']['kind'], 'zero')
        self.assertIsNone(cfg['perturbation']['delta0'])
        self.assertEqual(cfg['verify']['suites'], [config.SUITE_ALL])
        self.assertEqual(cfg['seed'], 0)

    def test_integers_widen_to_floats(self):
        cfg = config.RunConfig({'model': {'horizon_T': 2}})
        self.assertIsInstance(cfg['model']['horizon_T'], float)
        cfg = config.RunConfig({'spectral': {'target_rel_tol': '1e-12'}})
        self.assertEqual(cfg['spectral']['target_rel_tol'], 1e-12)

    def test_rejects(self):
        bad = [
            {'model': {'beta': 0.5}},
            {'colour': 'red'},
            {'model': {'alpha': 2.5}},
            {'model': {'alpha': 'fast'}},
            {'mc': {'n_paths': 10.5}},
            {'model': {'dim': 2}},
            {'kato': {'delta_grid': []}},
            {'perturbation': {'contraction_target': 0.5}},
        ]
        for tree in bad:
            self.assertRaises(ConfigError, config.RunConfig, tree)

    def test_error_names_key(self):
        with self.assertRaises(ConfigError) as caught:
            config.RunConfig({'mc': {'bins': 0}})
        self.assertEqual(caught.exception.key, 'mc.bins')
        self.assertTrue(str(caught.exception).startswith('mc.bins: '))

    def test_override(self):
        cfg = config.RunConfig().override(out='elsewhere', seed=7, suites=['kato', 'domain_lipschitz'])
        self.assertEqual(cfg['out'], 'elsewhere')
        self.assertEqual(cfg['seed'], 7)
        self.assertEqual(cfg['verify']['suites'], ['kato', 'domain_lipschitz'])
        self.assertEqual(config.RunConfig().override()['out'], 'out')

    def test_dump_and_load(self):
        cfg = config.RunConfig({'model': {'alpha': 1.2}, 'drift': {'kind': 'constant', 'value': [0.5]}})
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'config.json')
            cfg.dump(path)
            again = config.RunConfig.load(path)
        self.assertEqual(again.get_save_state(), cfg.get_save_state())

    def test_unparsable(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'broken.yaml')
            with open(path, 'w') as handle:
                handle.write('model: [alpha: 1.5\n')
            self.assertRaises(ConfigError, config.RunConfig.load, path)

    def test_shipped_configs(self):
        names = sorted(glob.glob(os.path.join(CONFIG_DIR, '*.yaml')))
        self.assertEqual(len(names), 5)
        for name in names:
            cfg = config.RunConfig.load(name)
            self.assertEqual(cfg['model']['alpha'], 1.5)
        self.assertEqual(config.RunConfig.load(os.path.join(CONFIG_DIR, 'mc.yaml'))['model']['dim'], 2)

if __name__ == '__main__':
    unittest.main()
